#pragma once

#include <string>

#include "geofield/energy.hpp"

namespace geofield {

// Smallest spacing for which n-node grids centred on each part satisfy the
// padding rule: bbox grown by max(2h, half the partner's bbox diagonal).
double pair_spacing(const Solid& a, const Solid& b, std::size_t n);
SampleGrid part_grid(const Solid& part, std::size_t n, double spacing);
// Throws unless `grid` pads `part` by max(2h, half of partner's diagonal).
void check_padding(const Solid& part, const Solid& partner, const SampleGrid& grid);

PartAsset make_asset(const std::string& id, const ComplexField& field, const Aabb& support,
                     const KernelSpec& kernel, bool movable);

struct StageTimes {
    double field_s = 0;
    double dft_s = 0;
    double vector_s = 0;
};

struct BuiltAsset {
    PartAsset asset;
    FieldResult field;
    StageTimes times;
};

BuiltAsset build_asset(const std::string& id, const Solid& solid, const SampleGrid& grid,
                       const KernelSpec& kernel, const IntegrationPolicy& policy, bool movable,
                       unsigned threads = 0);

}  // namespace geofield
