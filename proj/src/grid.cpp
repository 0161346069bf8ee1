#include "geofield/grid.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

namespace geofield {

unsigned default_threads() {
    if (const char* env = std::getenv("GEOFIELD_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

SampleGrid SampleGrid::cube(int dim, std::size_t n, const Vec3& origin, double h) {
    SampleGrid g;
    g.dim = dim;
    g.dims = {n, n, dim == 3 ? n : 1};
    g.origin = origin;
    if (dim == 2) g.origin.z() = 0;
    g.spacing = h;
    return g;
}

SampleGrid SampleGrid::centered(int dim, std::size_t n, const Vec3& center, double h) {
    Vec3 o;
    for (int a = 0; a < 3; ++a) o[a] = (std::round(center[a] / h) - double(n / 2)) * h;
    return cube(dim, n, o, h);
}

double SampleGrid::cell_volume() const { return std::pow(spacing, dim); }

Aabb SampleGrid::box() const {
    Aabb b;
    b.min = origin;
    b.max = origin;
    for (int a = 0; a < dim; ++a) b.max[a] += spacing * double(dims[a] - 1);
    return b;
}

bool SampleGrid::same_as(const SampleGrid& o, double tol) const {
    return same_layout(o) && std::abs(spacing - o.spacing) <= tol * spacing &&
           (origin - o.origin).norm() <= tol * spacing * double(dims[0]);
}

void SampleGrid::validate() const {
    if (dim != 2 && dim != 3) throw Error("grid dimension must be 2 or 3");
    if (!(spacing > 0) || !std::isfinite(spacing)) throw Error("grid spacing must be positive");
    for (int a = 0; a < dim; ++a)
        if (!is_power_of_two(dims[a]) || dims[a] < 4)
            throw Error("grid axis " + std::to_string(a) + " count " + std::to_string(dims[a]) +
                        " is not a power of two >= 4");
    if (dim == 2 && dims[2] != 1) throw Error("2D grid must have dims[2] == 1");
}

bool ComplexField::all_finite() const {
    for (const auto& v : values)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

cplx ComplexField::sample(const Vec3& p) const {
    const double h = grid.spacing;
    long i0[3] = {0, 0, 0};
    double fr[3] = {0, 0, 0};
    for (int a = 0; a < grid.dim; ++a) {
        double u = (p[a] - grid.origin[a]) / h;
        double fl = std::floor(u);
        i0[a] = static_cast<long>(fl);
        fr[a] = u - fl;
    }
    cplx acc = 0;
    const int corners = 1 << grid.dim;
    for (int c = 0; c < corners; ++c) {
        long idx[3] = {0, 0, 0};
        double w = 1;
        bool ok = true;
        for (int a = 0; a < grid.dim; ++a) {
            int bit = (c >> a) & 1;
            idx[a] = i0[a] + bit;
            w *= bit ? fr[a] : 1 - fr[a];
            if (idx[a] < 0 || idx[a] >= static_cast<long>(grid.dims[a])) ok = false;
        }
        if (!ok || w == 0) continue;
        acc += w * values[grid.index(idx[0], idx[1], idx[2])];
    }
    return acc;
}

}  // namespace geofield
