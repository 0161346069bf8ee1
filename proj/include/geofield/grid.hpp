#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "geofield/common.hpp"

namespace geofield {

// Uniform grid, row-major with the last active axis fastest. 2D grids keep
// dims[2] == 1 and origin.z() == 0.
struct SampleGrid {
    int dim = 3;
    std::array<std::size_t, 3> dims{1, 1, 1};
    Vec3 origin = Vec3::Zero();
    double spacing = 1.0;

    static SampleGrid cube(int dim, std::size_t n, const Vec3& origin, double h);
    // n nodes per axis, origin on the h-lattice so node n/2 sits nearest to center
    static SampleGrid centered(int dim, std::size_t n, const Vec3& center, double h);

    std::size_t size() const { return dims[0] * dims[1] * dims[2]; }
    double cell_volume() const;  // h^d
    std::size_t index(std::size_t i, std::size_t j, std::size_t k = 0) const {
        return (i * dims[1] + j) * dims[2] + k;
    }
    std::array<std::size_t, 3> unravel(std::size_t idx) const {
        std::size_t k = idx % dims[2];
        std::size_t r = idx / dims[2];
        return {r / dims[1], r % dims[1], k};
    }
    Vec3 node(std::size_t idx) const {
        auto c = unravel(idx);
        return origin + spacing * Vec3(double(c[0]), double(c[1]), double(c[2]));
    }
    // box spanned by the nodes, [origin, origin + (n-1)h]
    Aabb box() const;
    bool same_layout(const SampleGrid& o) const { return dim == o.dim && dims == o.dims; }
    bool same_as(const SampleGrid& o, double tol = 1e-12) const;
    // throws Error unless every active axis is a power of two >= 4
    void validate() const;
};

struct ComplexField {
    SampleGrid grid;
    std::vector<cplx> values;
    // boundary-excluded nodes that were filled by neighbor averaging
    std::vector<std::uint64_t> flags;

    ComplexField() = default;
    explicit ComplexField(const SampleGrid& g) : grid(g), values(g.size(), cplx(0.0)) {}
    bool all_finite() const;
    // multilinear sample at physical point p, zero outside the node box
    cplx sample(const Vec3& p) const;
};

struct VectorField {
    SampleGrid grid;
    std::vector<ComplexField> components;  // d entries
};

bool is_power_of_two(std::size_t n);

}  // namespace geofield
