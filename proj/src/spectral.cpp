#include "geofield/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include <fftw3.h>

namespace geofield {

namespace {

std::mutex& plan_mutex() {
    static std::mutex mu;
    return mu;
}

void run_fft(std::vector<cplx>& data, const SampleGrid& g, int sign) {
    int n[3] = {int(g.dims[0]), int(g.dims[1]), int(g.dims[2])};
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        // planner calls are not thread safe; execution is
        std::lock_guard<std::mutex> lk(plan_mutex());
        plan = fftw_plan_dft(g.dim, n, ptr, ptr, sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard<std::mutex> lk(plan_mutex());
    fftw_destroy_plan(plan);
}

// exp(sign * 2 pi i * w_k * o) per axis, for the DC-centred index j
std::array<std::vector<cplx>, 3> origin_phase(const SampleGrid& g, double sign) {
    std::array<std::vector<cplx>, 3> t;
    for (int a = 0; a < 3; ++a) {
        std::size_t n = g.dims[a];
        t[a].assign(n, cplx(1.0));
        if (a >= g.dim) continue;
        for (std::size_t j = 0; j < n; ++j) {
            double k = double(j) - double(n / 2);
            double ang = sign * kTwoPi * k * g.origin[a] / (double(n) * g.spacing);
            t[a][j] = std::polar(1.0, ang);
        }
    }
    return t;
}

}  // namespace

Vec3 Spectrum::frequency(std::size_t idx) const {
    auto c = grid.unravel(idx);
    Vec3 w = Vec3::Zero();
    for (int a = 0; a < grid.dim; ++a)
        w[a] = (double(c[a]) - double(grid.dims[a] / 2)) / (double(grid.dims[a]) * grid.spacing);
    return w;
}

std::size_t TruncatedSpectrum::modes() const {
    std::size_t m = 1;
    for (int a = 0; a < parent.dim; ++a) m *= side;
    return m;
}

bool TruncatedSpectrum::full() const {
    for (int a = 0; a < parent.dim; ++a)
        if (parent.dims[a] != side) return false;
    return true;
}

Vec3 TruncatedSpectrum::frequency(std::size_t widx) const {
    Vec3 w = Vec3::Zero();
    std::size_t r = widx;
    for (int a = parent.dim - 1; a >= 0; --a) {
        std::size_t q = r % side;
        r /= side;
        w[a] = (double(q) - double(side / 2)) / (double(parent.dims[a]) * parent.spacing);
    }
    return w;
}

Spectrum forward_dft(const ComplexField& field) {
    const SampleGrid& g = field.grid;
    g.validate();
    if (field.values.size() != g.size()) throw Error("field size does not match grid");
    Spectrum s;
    s.grid = g;
    s.amplitudes = field.values;
    // (-1)^(i+j+k) moves DC to the window centre
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        auto c = g.unravel(idx);
        if ((c[0] + c[1] + c[2]) & 1) s.amplitudes[idx] = -s.amplitudes[idx];
    }
    run_fft(s.amplitudes, g, FFTW_FORWARD);
    auto ph = origin_phase(g, -1.0);
    const double dv = g.cell_volume();
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        auto c = g.unravel(idx);
        s.amplitudes[idx] *= dv * ph[0][c[0]] * ph[1][c[1]] * ph[2][c[2]];
    }
    return s;
}

ComplexField inverse_dft(const Spectrum& spectrum) {
    const SampleGrid& g = spectrum.grid;
    g.validate();
    if (spectrum.amplitudes.size() != g.size()) throw Error("spectrum size does not match grid");
    ComplexField f(g);
    auto ph = origin_phase(g, +1.0);
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        auto c = g.unravel(idx);
        f.values[idx] = spectrum.amplitudes[idx] * ph[0][c[0]] * ph[1][c[1]] * ph[2][c[2]];
    }
    run_fft(f.values, g, FFTW_BACKWARD);
    const double dw = spectrum.cell();
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        auto c = g.unravel(idx);
        double sgn = ((c[0] + c[1] + c[2]) & 1) ? -dw : dw;
        f.values[idx] *= sgn;
    }
    return f;
}

std::size_t window_side(const SampleGrid& grid, std::size_t m_prime) {
    if (m_prime == 0) throw Error("mode count must be positive");
    std::size_t side = static_cast<std::size_t>(std::llround(std::pow(double(m_prime), 1.0 / grid.dim)));
    std::size_t check = 1;
    for (int a = 0; a < grid.dim; ++a) check *= side;
    if (check != m_prime)
        throw Error("mode count " + std::to_string(m_prime) + " is not a perfect " +
                    (grid.dim == 3 ? "cube" : "square"));
    if (side != 1 && side % 2 != 0)
        throw Error("window side " + std::to_string(side) + " must be 1 or even");
    for (int a = 0; a < grid.dim; ++a)
        if (side > grid.dims[a])
            throw Error("mode window " + std::to_string(side) + " exceeds grid axis " + std::to_string(grid.dims[a]));
    return side;
}

TruncatedSpectrum truncate(const Spectrum& spectrum, std::size_t m_prime) {
    const SampleGrid& g = spectrum.grid;
    TruncatedSpectrum t;
    t.parent = g;
    t.side = window_side(g, m_prime);
    t.amplitudes.resize(t.modes());
    const std::size_t w = t.side;
    const std::size_t w2 = g.dim == 3 ? w : 1;
    for (std::size_t q0 = 0; q0 < w; ++q0)
        for (std::size_t q1 = 0; q1 < w; ++q1)
            for (std::size_t q2 = 0; q2 < w2; ++q2) {
                std::size_t j0 = q0 + g.dims[0] / 2 - w / 2;
                std::size_t j1 = q1 + g.dims[1] / 2 - w / 2;
                std::size_t j2 = g.dim == 3 ? q2 + g.dims[2] / 2 - w / 2 : 0;
                t.amplitudes[(q0 * w + q1) * w2 + q2] = spectrum.amplitudes[g.index(j0, j1, j2)];
            }
    return t;
}

Spectrum zero_pad(const TruncatedSpectrum& t) {
    const SampleGrid& g = t.parent;
    Spectrum s;
    s.grid = g;
    s.amplitudes.assign(g.size(), cplx(0.0));
    const std::size_t w = t.side;
    const std::size_t w2 = g.dim == 3 ? w : 1;
    for (std::size_t q0 = 0; q0 < w; ++q0)
        for (std::size_t q1 = 0; q1 < w; ++q1)
            for (std::size_t q2 = 0; q2 < w2; ++q2) {
                std::size_t j0 = q0 + g.dims[0] / 2 - w / 2;
                std::size_t j1 = q1 + g.dims[1] / 2 - w / 2;
                std::size_t j2 = g.dim == 3 ? q2 + g.dims[2] / 2 - w / 2 : 0;
                s.amplitudes[g.index(j0, j1, j2)] = t.amplitudes[(q0 * w + q1) * w2 + q2];
            }
    return s;
}

Spectrum truncate_ranked(const Spectrum& spectrum, std::size_t m_prime) {
    if (m_prime == 0 || m_prime > spectrum.amplitudes.size()) throw Error("mode count out of range");
    std::vector<std::size_t> order(spectrum.amplitudes.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::norm(spectrum.amplitudes[a]) > std::norm(spectrum.amplitudes[b]);
    });
    Spectrum out;
    out.grid = spectrum.grid;
    out.amplitudes.assign(spectrum.amplitudes.size(), cplx(0.0));
    for (std::size_t i = 0; i < m_prime; ++i) out.amplitudes[order[i]] = spectrum.amplitudes[order[i]];
    return out;
}

double retained_energy_fraction(const Spectrum& full, const TruncatedSpectrum& t) {
    double all = 0, kept = 0;
    for (const auto& a : full.amplitudes) all += std::norm(a);
    for (const auto& a : t.amplitudes) kept += std::norm(a);
    return all > 0 ? kept / all : 1.0;
}

SpectrumLookup::SpectrumLookup(const SampleGrid& parent, std::size_t side)
    : parent_(parent), side_(side), dim_(parent.dim) {
    for (int a = 0; a < 3; ++a) {
        if (a >= dim_) {
            w_[a] = 1;
            continue;
        }
        w_[a] = static_cast<long>(side);
        scale_[a] = double(parent.dims[a]) * parent.spacing;
        periodic_[a] = side == parent.dims[a];
        cplx ph = std::polar(1.0, -kTwoPi * parent.origin[a] / parent.spacing);
        for (int q = -3; q <= 3; ++q) wrap_[a][q + 3] = std::pow(ph, q);
    }
}

void SpectrumLookup::taps(const Vec3& nu, Taps& out) const {
    long idx[3][2] = {{0, 0}, {0, 0}, {0, 0}};
    cplx wt[3][2] = {{1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}};
    bool ok[3][2] = {{true, false}, {true, false}, {true, false}};
    for (int a = 0; a < dim_; ++a) {
        double u = nu[a] * scale_[a] + double(w_[a] / 2);
        double fl = std::floor(u);
        long i0 = static_cast<long>(fl);
        double fr = u - fl;
        for (int b = 0; b < 2; ++b) {
            long i = i0 + b;
            double lin = b ? fr : 1.0 - fr;
            if (periodic_[a]) {
                long j = ((i % w_[a]) + w_[a]) % w_[a];
                long q = (i - j) / w_[a];
                cplx ph = (q >= -3 && q <= 3)
                              ? wrap_[a][q + 3]
                              : std::polar(1.0, -kTwoPi * double(q) * parent_.origin[a] / parent_.spacing);
                idx[a][b] = j;
                wt[a][b] = lin * ph;
                ok[a][b] = true;
            } else {
                idx[a][b] = i;
                wt[a][b] = lin;
                ok[a][b] = i >= 0 && i < w_[a];
            }
        }
    }
    out.count = 0;
    const int nb2 = dim_ == 3 ? 2 : 1;
    for (int b0 = 0; b0 < 2; ++b0) {
        if (!ok[0][b0]) continue;
        for (int b1 = 0; b1 < 2; ++b1) {
            if (!ok[1][b1]) continue;
            for (int b2 = 0; b2 < nb2; ++b2) {
                if (!ok[2][b2]) continue;
                cplx w = wt[0][b0] * wt[1][b1] * wt[2][b2];
                if (w == cplx(0.0)) continue;
                out.index[out.count] = static_cast<std::size_t>((idx[0][b0] * w_[1] + idx[1][b1]) * w_[2] + idx[2][b2]);
                out.weight[out.count] = w;
                ++out.count;
            }
        }
    }
}

cplx SpectrumLookup::sample(const std::vector<cplx>& window, const Vec3& nu) const {
    Taps t;
    taps(nu, t);
    cplx acc = 0;
    for (int i = 0; i < t.count; ++i) acc += t.weight[i] * window[t.index[i]];
    return acc;
}

void check_rotation(const Mat3& R, int dim) {
    if (!R.allFinite()) throw Error("rotation has non-finite entries");
    if (!((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-9))
        throw Error("rotation is not orthogonal");
    if (std::abs(R.determinant() - 1.0) > 1e-9) throw Error("rotation determinant is not +1");
    if (dim == 2 && (std::abs(R(2, 2) - 1.0) > 1e-9 || std::abs(R(0, 2)) > 1e-9 || std::abs(R(1, 2)) > 1e-9))
        throw Error("2D rotation must fix the z axis");
}

Spectrum rotate_reflect_spectrum(const Spectrum& spectrum, const Mat3& R) {
    check_rotation(R, spectrum.grid.dim);
    SpectrumLookup lk(spectrum.grid, spectrum.grid.dims[0]);
    for (int a = 1; a < spectrum.grid.dim; ++a)
        if (spectrum.grid.dims[a] != spectrum.grid.dims[0]) throw Error("rotation needs equal axis counts");
    Spectrum out;
    out.grid = spectrum.grid;
    out.amplitudes.resize(spectrum.amplitudes.size());
    const Mat3 Rt = R.transpose();
    for (std::size_t i = 0; i < out.amplitudes.size(); ++i)
        out.amplitudes[i] = lk.sample(spectrum.amplitudes, -(Rt * spectrum.frequency(i)));
    return out;
}

TruncatedSpectrum rotate_reflect_spectrum(const TruncatedSpectrum& spectrum, const Mat3& R) {
    check_rotation(R, spectrum.parent.dim);
    SpectrumLookup lk(spectrum.parent, spectrum.side);
    TruncatedSpectrum out = spectrum;
    const Mat3 Rt = R.transpose();
    for (std::size_t i = 0; i < out.amplitudes.size(); ++i)
        out.amplitudes[i] = lk.sample(spectrum.amplitudes, -(Rt * spectrum.frequency(i)));
    return out;
}

}  // namespace geofield
