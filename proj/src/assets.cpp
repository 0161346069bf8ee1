#include "geofield/assets.hpp"

#include <chrono>
#include <cmath>

namespace geofield {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

double pair_spacing(const Solid& a, const Solid& b, std::size_t n) {
    if (a.dimension() != b.dimension()) throw Error("parts have different dimensions");
    if (!is_power_of_two(n) || n < 16) throw Error("grid size must be a power of two >= 16");
    const int dim = a.dimension();
    double h = 0;
    for (const Solid* s : {&a, &b}) {
        const Solid* other = s == &a ? &b : &a;
        const double D = other->bbox().diagonal();
        for (int ax = 0; ax < dim; ++ax) {
            const double ext = s->bbox().extent()[ax];
            // lower half-box holds n/2 cells, upper n/2 - 1, centre rounding costs h/2
            h = std::max(h, (ext + D) / (double(n) - 3.0));
            h = std::max(h, ext / (double(n) - 7.0));
        }
    }
    return h * (1.0 + 1e-9);
}

SampleGrid part_grid(const Solid& part, std::size_t n, double spacing) {
    SampleGrid g = SampleGrid::centered(part.dimension(), n, part.bbox().center(), spacing);
    g.validate();
    return g;
}

void check_padding(const Solid& part, const Solid& partner, const SampleGrid& grid) {
    const double pad = std::max(2.0 * grid.spacing, 0.5 * partner.bbox().diagonal());
    require_margin(part, grid, pad);
}

PartAsset make_asset(const std::string& id, const ComplexField& field, const Aabb& support,
                     const KernelSpec& kernel, bool movable) {
    PartAsset a;
    a.id = id;
    a.grid = field.grid;
    a.support = support;
    a.kernel = kernel;
    a.scalar = forward_dft(field);
    if (movable) {
        VectorField vf = vector_density(field);
        for (const auto& c : vf.components) a.vector.push_back(forward_dft(c));
    }
    return a;
}

BuiltAsset build_asset(const std::string& id, const Solid& solid, const SampleGrid& grid,
                       const KernelSpec& kernel, const IntegrationPolicy& policy, bool movable,
                       unsigned threads) {
    BuiltAsset out;
    auto t0 = std::chrono::steady_clock::now();
    out.field = affinity_field(solid, grid, kernel, policy, threads);
    out.times.field_s = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    out.asset.id = id;
    out.asset.grid = grid;
    out.asset.support = solid.bbox();
    out.asset.kernel = kernel;
    out.asset.scalar = forward_dft(out.field.field);
    out.times.dft_s = seconds_since(t0);

    if (movable) {
        t0 = std::chrono::steady_clock::now();
        VectorField vf = vector_density(out.field.field);
        for (const auto& c : vf.components) out.asset.vector.push_back(forward_dft(c));
        out.times.vector_s = seconds_since(t0);
    }
    return out;
}

}  // namespace geofield
