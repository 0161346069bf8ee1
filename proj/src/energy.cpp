#include "geofield/energy.hpp"

#include <chrono>
#include <cmath>

#include <Eigen/SVD>

namespace geofield {

Configuration Configuration::planar(double theta, double x, double y) {
    Configuration c;
    c.dim = 2;
    c.rotation = Eigen::AngleAxisd(theta, Vec3::UnitZ()).toRotationMatrix();
    c.translation = Vec3(x, y, 0.0);
    return c;
}

Configuration Configuration::spatial(const Mat3& R, const Vec3& t) {
    Configuration c;
    c.dim = 3;
    c.rotation = R;
    c.translation = t;
    return c;
}

Configuration Configuration::from_quaternion(double w, double x, double y, double z, const Vec3& t) {
    Eigen::Quaterniond q(w, x, y, z);
    if (!(q.norm() > 0)) throw Error("zero quaternion");
    return spatial(q.normalized().toRotationMatrix(), t);
}

double Configuration::angle() const { return std::atan2(rotation(1, 0), rotation(0, 0)); }

void Configuration::validate() const {
    if (dim != 2 && dim != 3) throw Error("configuration dimension must be 2 or 3");
    check_rotation(rotation, dim);
    if (!translation.allFinite()) throw Error("translation has non-finite entries");
    if (dim == 2 && translation.z() != 0) throw Error("2D translation must have z = 0");
}

Configuration Configuration::orthonormalized() const {
    Configuration c = *this;
    if (dim == 2) {
        double th = std::atan2(rotation(1, 0) - rotation(0, 1), rotation(0, 0) + rotation(1, 1));
        c.rotation = Eigen::AngleAxisd(th, Vec3::UnitZ()).toRotationMatrix();
        c.translation.z() = 0;
        return c;
    }
    Eigen::JacobiSVD<Mat3> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 U = svd.matrixU(), V = svd.matrixV();
    Mat3 D = Mat3::Identity();
    D(2, 2) = (U * V.transpose()).determinant() < 0 ? -1.0 : 1.0;
    c.rotation = U * D * V.transpose();
    return c;
}

void PartAsset::validate() const {
    grid.validate();
    if (!scalar.grid.same_as(grid)) throw Error("asset '" + id + "': scalar spectrum grid differs from asset grid");
    if (scalar.amplitudes.size() != grid.size()) throw Error("asset '" + id + "': scalar spectrum size mismatch");
    if (!vector.empty()) {
        if (static_cast<int>(vector.size()) != grid.dim)
            throw Error("asset '" + id + "': vector spectrum needs one component per axis");
        for (const auto& v : vector)
            if (!v.grid.same_as(grid) || v.amplitudes.size() != grid.size())
                throw Error("asset '" + id + "': vector spectrum grid differs from asset grid");
    }
}

void check_compatible(const PartAsset& a, const PartAsset& b) {
    if (!a.grid.same_layout(b.grid) || std::abs(a.grid.spacing - b.grid.spacing) > 1e-12 * a.grid.spacing)
        throw Error("grid mismatch between '" + a.id + "' and '" + b.id + "'");
}

SampleGrid translation_grid(const PartAsset& fixed, const PartAsset& moving) {
    check_compatible(fixed, moving);
    SampleGrid g = fixed.grid;
    for (int a = 0; a < g.dim; ++a)
        g.origin[a] = fixed.grid.origin[a] - moving.grid.origin[a] - double(g.dims[a] / 2) * g.spacing;
    return g;
}

bool wrap_contaminated(const PartAsset& fixed, const PartAsset& moving, const Mat3& R, const Vec3& t) {
    const int dim = fixed.grid.dim;
    Aabb moved;
    const Aabb& s = moving.support;
    const int corners = 1 << dim;
    for (int c = 0; c < corners; ++c) {
        Vec3 p = s.min;
        for (int a = 0; a < dim; ++a)
            if ((c >> a) & 1) p[a] = s.max[a];
        if (dim == 2) p.z() = 0;
        moved.extend(R * p + t);
    }
    Aabb box = fixed.grid.box();
    const double tol = 1e-9 * fixed.grid.spacing;
    for (int a = 0; a < dim; ++a)
        if (moved.min[a] < box.min[a] - tol || moved.max[a] > box.max[a] + tol) return true;
    return false;
}

PairEvaluator::PairEvaluator(const PartAsset& fixed, const PartAsset& moving, std::size_t m_prime, Truncation mode) {
    fixed.validate();
    moving.validate();
    check_compatible(fixed, moving);
    const SampleGrid& g = fixed.grid;
    dim_ = g.dim;
    for (int a = 1; a < dim_; ++a)
        if (g.dims[a] != g.dims[0]) throw Error("mode windows need equal axis counts");
    const std::size_t n = g.dims[0];
    const std::size_t m = g.size();
    if (m_prime == 0) m_prime = m;
    has_vector_ = moving.movable();
    stride_ = has_vector_ ? 1 + dim_ : 1;
    for (int a = 0; a < dim_; ++a) scale_[a] = double(g.dims[a]) * g.spacing;
    const double dw = fixed.scalar.cell();

    std::vector<const std::vector<cplx>*> comps;
    std::vector<Spectrum> ranked;  // keeps ranked copies alive
    if (mode == Truncation::Window) {
        side_ = m_prime == m ? n : geofield::window_side(g, m_prime);
        TruncatedSpectrum f = truncate(fixed.scalar, std::size_t(std::pow(double(side_), dim_) + 0.5));
        modes_.reserve(f.amplitudes.size());
        for (std::size_t i = 0; i < f.amplitudes.size(); ++i) {
            std::size_t r = i;
            Mode md;
            md.q = {0, 0, 0};
            for (int a = dim_ - 1; a >= 0; --a) {
                md.q[a] = static_cast<std::uint32_t>(r % side_);
                r /= side_;
            }
            md.omega = f.frequency(i);
            md.amp = f.amplitudes[i] * dw;
            modes_.push_back(md);
        }
        std::vector<TruncatedSpectrum> mt;
        mt.push_back(truncate(moving.scalar, f.modes()));
        for (const auto& v : moving.vector) mt.push_back(truncate(v, f.modes()));
        lookup_ = SpectrumLookup(moving.grid, side_);
        packed_.assign(mt[0].amplitudes.size() * stride_, cplx(0.0));
        for (std::size_t i = 0; i < mt[0].amplitudes.size(); ++i)
            for (std::size_t c = 0; c < stride_; ++c) packed_[i * stride_ + c] = mt[c].amplitudes[i];
    } else {
        if (m_prime > m) throw Error("mode count exceeds grid size");
        side_ = n;
        Spectrum f = truncate_ranked(fixed.scalar, m_prime);
        for (std::size_t i = 0; i < m; ++i) {
            if (f.amplitudes[i] == cplx(0.0)) continue;
            auto c = g.unravel(i);
            Mode md;
            md.q = {std::uint32_t(c[0]), std::uint32_t(c[1]), std::uint32_t(c[2])};
            md.omega = f.frequency(i);
            md.amp = f.amplitudes[i] * dw;
            modes_.push_back(md);
        }
        // moving part keeps its own top m' modes; the vector components follow the scalar selection
        Spectrum ms = truncate_ranked(moving.scalar, m_prime);
        lookup_ = SpectrumLookup(moving.grid, n);
        packed_.assign(m * stride_, cplx(0.0));
        for (std::size_t i = 0; i < m; ++i) {
            if (ms.amplitudes[i] == cplx(0.0)) continue;
            packed_[i * stride_] = ms.amplitudes[i];
            for (std::size_t c = 1; c < stride_; ++c) packed_[i * stride_ + c] = moving.vector[c - 1].amplitudes[i];
        }
    }
}

PairEvaluator::Acc PairEvaluator::accumulate(const Configuration& c, bool want_t, bool want_r) const {
    const Mat3& R = c.rotation;
    const Mat3 Rt = R.transpose();
    const std::size_t side = side_;
    thread_local std::vector<cplx> table[3];
    for (int a = 0; a < 3; ++a) {
        table[a].assign(a < dim_ ? side : 1, cplx(1.0));
        if (a >= dim_) continue;
        const double base = kTwoPi * c.translation[a] / scale_[a];
        for (std::size_t q = 0; q < side; ++q) {
            double k = double(q) - double(side / 2);
            table[a][q] = std::polar(1.0, base * k);
        }
    }
    cplx score = 0;
    cplx gt[3] = {0.0, 0.0, 0.0};
    cplx gr[3] = {0.0, 0.0, 0.0};
    SpectrumLookup::Taps taps;
    const std::size_t stride = stride_;
    const bool vec = has_vector_ && want_r;
    for (const Mode& md : modes_) {
        cplx A = md.amp * table[0][md.q[0]] * table[1][md.q[1]];
        if (dim_ == 3) A *= table[2][md.q[2]];
        Vec3 nu = -(Rt * md.omega);
        lookup_.taps(nu, taps);
        if (taps.count == 0) continue;
        cplx s = 0;
        cplx v[3] = {0.0, 0.0, 0.0};
        for (int i = 0; i < taps.count; ++i) {
            const cplx* p = &packed_[taps.index[i] * stride];
            const cplx w = taps.weight[i];
            s += w * p[0];
            if (vec)
                for (int k = 0; k < dim_; ++k) v[k] += w * p[1 + k];
        }
        const cplx As = A * s;
        score += As;
        if (want_t)
            for (int k = 0; k < dim_; ++k) gt[k] += As * md.omega[k];
        if (vec) {
            // (R^T Omega_e w) . V = e . (w x R V)
            cplx rv[3];
            for (int r = 0; r < 3; ++r) rv[r] = R(r, 0) * v[0] + R(r, 1) * v[1] + R(r, 2) * v[2];
            const Vec3& w = md.omega;
            gr[0] += A * (w[1] * rv[2] - w[2] * rv[1]);
            gr[1] += A * (w[2] * rv[0] - w[0] * rv[2]);
            gr[2] += A * (w[0] * rv[1] - w[1] * rv[0]);
        }
    }
    const cplx two_pi_i(0.0, kTwoPi);
    Acc out;
    out.score = score;
    out.grad_t = Vec3c(gt[0], gt[1], gt[2]) * two_pi_i;
    out.grad_r = Vec3c(gr[0], gr[1], gr[2]) * (-two_pi_i);
    if (dim_ == 2) {
        out.grad_t[2] = 0;
        out.grad_r[0] = out.grad_r[1] = 0;
    }
    return out;
}

cplx PairEvaluator::score(const Configuration& c) const {
    c.validate();
    return accumulate(c, false, false).score;
}

Vec3c PairEvaluator::translational_gradient(const Configuration& c) const {
    c.validate();
    return accumulate(c, true, false).grad_t;
}

Vec3c PairEvaluator::rotational_gradient(const Configuration& c) const {
    c.validate();
    if (!has_vector_) throw Error("moving part has no vector spectrum");
    return accumulate(c, false, true).grad_r;
}

EnergyEval PairEvaluator::evaluate(const Configuration& c) const {
    auto t0 = std::chrono::steady_clock::now();
    c.validate();
    if (!has_vector_) throw Error("moving part has no vector spectrum");
    Acc acc = accumulate(c, true, true);
    EnergyEval e;
    e.score = acc.score;
    e.energy = -acc.score.real();
    e.force = acc.grad_t.real();
    e.torque = acc.grad_r.real();
    e.modes_used = modes_.size();
    e.eval_time_us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
    return e;
}

ScoreField score_field(const PartAsset& fixed, const PartAsset& moving, const Mat3& R, std::size_t m_prime) {
    fixed.validate();
    moving.validate();
    check_compatible(fixed, moving);
    check_rotation(R, fixed.grid.dim);
    const SampleGrid& g = fixed.grid;
    const std::size_t m = g.size();
    if (m_prime == 0) m_prime = m;
    const std::size_t n = g.dims[0];
    const std::size_t side = m_prime == m ? n : window_side(g, m_prime);
    const std::size_t modes = std::size_t(std::pow(double(side), g.dim) + 0.5);
    TruncatedSpectrum f = truncate(fixed.scalar, modes);
    TruncatedSpectrum mv = truncate(moving.scalar, modes);
    SpectrumLookup lk(moving.grid, side);

    Spectrum prod;
    prod.grid = translation_grid(fixed, moving);
    prod.amplitudes.assign(m, cplx(0.0));
    const Mat3 Rt = R.transpose();
    const std::size_t w2 = g.dim == 3 ? side : 1;
    for (std::size_t i = 0; i < f.amplitudes.size(); ++i) {
        std::size_t q0 = i / (side * w2), q1 = (i / w2) % side, q2 = i % w2;
        std::size_t j0 = q0 + n / 2 - side / 2, j1 = q1 + n / 2 - side / 2;
        std::size_t j2 = g.dim == 3 ? q2 + n / 2 - side / 2 : 0;
        prod.amplitudes[g.index(j0, j1, j2)] = f.amplitudes[i] * lk.sample(mv.amplitudes, -(Rt * f.frequency(i)));
    }
    ScoreField out;
    out.values = inverse_dft(prod);
    out.wrap.assign(m, 0);
    for (std::size_t i = 0; i < m; ++i)
        out.wrap[i] = wrap_contaminated(fixed, moving, R, out.values.grid.node(i)) ? 1 : 0;
    return out;
}

cplx score_at(const PartAsset& fixed, const PartAsset& moving, const Configuration& c, std::size_t m_prime) {
    return PairEvaluator(fixed, moving, m_prime).score(c);
}

Vec3c translational_gradient(const PartAsset& fixed, const PartAsset& moving, const Configuration& c,
                             std::size_t m_prime) {
    return PairEvaluator(fixed, moving, m_prime).translational_gradient(c);
}

Vec3c rotational_gradient(const PartAsset& fixed, const PartAsset& moving, const Configuration& c,
                          std::size_t m_prime) {
    return PairEvaluator(fixed, moving, m_prime).rotational_gradient(c);
}

EnergyEval evaluate(const PartAsset& fixed, const PartAsset& moving, const Configuration& c, std::size_t m_prime) {
    return PairEvaluator(fixed, moving, m_prime).evaluate(c);
}

}  // namespace geofield
