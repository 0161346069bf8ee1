#include "geofield/oracle.hpp"

#include <cmath>
#include <random>

namespace geofield::oracle {

namespace {

cplx sample_linear(const ComplexField& f, const Vec3& p) {
    const SampleGrid& g = f.grid;
    double u[3] = {0, 0, 0};
    long lo[3] = {0, 0, 0};
    for (int a = 0; a < g.dim; ++a) {
        u[a] = (p[a] - g.origin[a]) / g.spacing;
        lo[a] = static_cast<long>(std::floor(u[a]));
        u[a] -= double(lo[a]);
    }
    cplx acc = 0;
    for (int c = 0; c < (1 << g.dim); ++c) {
        double w = 1;
        long ijk[3] = {0, 0, 0};
        bool inside = true;
        for (int a = 0; a < g.dim; ++a) {
            int bit = (c >> a) & 1;
            ijk[a] = lo[a] + bit;
            w *= bit ? u[a] : 1.0 - u[a];
            if (ijk[a] < 0 || ijk[a] >= long(g.dims[a])) inside = false;
        }
        if (inside && w != 0.0) acc += w * f.values[(ijk[0] * long(g.dims[1]) + ijk[1]) * long(g.dims[2]) + ijk[2]];
    }
    return acc;
}

// Möller-Trumbore; returns 1 for a clean hit, 0 for a miss, -1 for a
// hit too close to an edge, a vertex or the origin to count reliably.
int ray_triangle(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b, const Vec3& c) {
    const double eps = 1e-9;
    Vec3 e1 = b - a, e2 = c - a;
    Vec3 pv = d.cross(e2);
    double det = e1.dot(pv);
    double scale = e1.norm() * e2.norm();
    Vec3 tv = o - a;
    if (std::abs(det) < 1e-12 * scale) {
        // parallel: degenerate only if the ray lies in the triangle's plane
        double plane = std::abs(tv.dot(e1.cross(e2))) / scale;
        return plane < 1e-12 ? -1 : 0;
    }
    double inv = 1.0 / det;
    double u = tv.dot(pv) * inv;
    Vec3 qv = tv.cross(e1);
    double v = d.dot(qv) * inv;
    double t = e2.dot(qv) * inv;
    if (u < -eps || v < -eps || u + v > 1 + eps || t < -eps) return 0;
    if (u < eps || v < eps || u + v > 1 - eps || t < eps) return -1;
    return 1;
}

int ray_segment(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b) {
    const double eps = 1e-9;
    Vec3 e = b - a;
    double den = d.x() * e.y() - d.y() * e.x();
    Vec3 w = a - o;
    if (std::abs(den) < 1e-12 * e.norm()) {
        double col = std::abs(w.x() * d.y() - w.y() * d.x());
        return col < 1e-12 ? -1 : 0;
    }
    double t = (w.x() * e.y() - w.y() * e.x()) / den;
    double s = (w.x() * d.y() - w.y() * d.x()) / den;
    if (s < -eps || s > 1 + eps || t < -eps) return 0;
    if (s < eps || s > 1 - eps || t < eps) return -1;
    return 1;
}

}  // namespace

cplx brute_score(const ComplexField& field1, const ComplexField& field2, const Configuration& config) {
    if (field1.grid.dim != field2.grid.dim) throw Error("field dimensions differ");
    const Mat3 Rt = config.rotation.transpose();
    const double dv = std::pow(field1.grid.spacing, field1.grid.dim);
    cplx sum = 0;
    for (std::size_t i = 0; i < field1.values.size(); ++i) {
        if (field1.values[i] == cplx(0.0)) continue;
        Vec3 p = field1.grid.node(i);
        sum += field1.values[i] * sample_linear(field2, Rt * (p - config.translation));
    }
    return sum * dv;
}

Spectrum cascade_dft(const ComplexField& field) {
    const SampleGrid& g = field.grid;
    const std::size_t m = g.size();
    if (m > (std::size_t(1) << 14)) throw Error("cascade DFT limited to 2^14 nodes");
    Spectrum s;
    s.grid = g;
    s.amplitudes.assign(m, cplx(0.0));
    const double dv = std::pow(g.spacing, g.dim);
    for (std::size_t k = 0; k < m; ++k) {
        auto kc = g.unravel(k);
        Vec3 w = Vec3::Zero();
        for (int a = 0; a < g.dim; ++a)
            w[a] = (double(kc[a]) - double(g.dims[a] / 2)) / (double(g.dims[a]) * g.spacing);
        cplx acc = 0;
        for (std::size_t i = 0; i < m; ++i) {
            auto ic = g.unravel(i);
            Vec3 p = g.origin;
            for (int a = 0; a < g.dim; ++a) p[a] += g.spacing * double(ic[a]);
            acc += field.values[i] * std::polar(1.0, -kTwoPi * w.dot(p));
        }
        s.amplitudes[k] = acc * dv;
    }
    return s;
}

bool raycast_pmc(const Solid& solid, const Vec3& p) {
    std::mt19937_64 rng(0x5eed1234abcdULL);
    std::normal_distribution<double> nd;
    const int dim = solid.dimension();
    int votes = 0, rays = 0;
    int attempts = 0;
    while (rays < 3) {
        if (++attempts > 1000) throw Error("raycast_pmc: no clean ray found");
        Vec3 d(nd(rng), nd(rng), dim == 3 ? nd(rng) : 0.0);
        if (d.norm() < 1e-6) continue;
        d.normalize();
        int crossings = 0;
        bool degenerate = false;
        for (const auto& e : solid.elements()) {
            int r = dim == 3 ? ray_triangle(p, d, e.a, e.b, e.c) : ray_segment(p, d, e.a, e.b);
            if (r < 0) {
                degenerate = true;
                break;
            }
            crossings += r;
        }
        if (degenerate) continue;
        votes += crossings & 1;
        ++rays;
    }
    return votes >= 2;
}

FdGradient fd_gradient(const Scorer& scorer, const Configuration& config, double step_t, double step_r) {
    FdGradient g;
    const int dim = config.dim;
    for (int a = 0; a < dim; ++a) {
        Configuration plus = config, minus = config;
        plus.translation[a] += step_t;
        minus.translation[a] -= step_t;
        g.translation[a] = (scorer(plus) - scorer(minus)) / (2.0 * step_t);
    }
    for (int a = (dim == 2 ? 2 : 0); a < 3; ++a) {
        Vec3 axis = Vec3::Zero();
        axis[a] = 1.0;
        Configuration plus = config, minus = config;
        plus.rotation = Eigen::AngleAxisd(step_r, axis).toRotationMatrix() * config.rotation;
        minus.rotation = Eigen::AngleAxisd(-step_r, axis).toRotationMatrix() * config.rotation;
        g.rotation[a] = (scorer(plus) - scorer(minus)) / (2.0 * step_r);
    }
    return g;
}

}  // namespace geofield::oracle
