#pragma once

#include <array>
#include <vector>

#include "geofield/grid.hpp"

namespace geofield {

// Amplitudes f(w_k) on the dual grid, DC-centred: node j on axis a has
// k = j - n_a/2 and frequency w = k / (n_a h). grid is the source physical grid.
//   forward:  F(w) = dV * sum_i f_i exp(-2 pi i w.p_i),  dV = h^d
//   inverse:  f_i  = dW * sum_k F(w_k) exp(+2 pi i w_k.p_i),  dW = 1/(m dV)
struct Spectrum {
    SampleGrid grid;
    std::vector<cplx> amplitudes;

    double cell() const { return 1.0 / (double(grid.size()) * grid.cell_volume()); }
    Vec3 frequency(std::size_t idx) const;
};

// Centred window of `side` modes per active axis, stored row-major.
struct TruncatedSpectrum {
    SampleGrid parent;
    std::size_t side = 0;
    std::vector<cplx> amplitudes;

    std::size_t modes() const;
    bool full() const;
    Vec3 frequency(std::size_t widx) const;
};

struct VectorSpectrum {
    std::vector<Spectrum> components;  // d entries on one grid
};

Spectrum forward_dft(const ComplexField& field);
ComplexField inverse_dft(const Spectrum& spectrum);

// Window side for m' modes; throws unless m' = side^d with side 1 (DC only) or even, and
// the window fits every axis.
std::size_t window_side(const SampleGrid& grid, std::size_t m_prime);
TruncatedSpectrum truncate(const Spectrum& spectrum, std::size_t m_prime);
Spectrum zero_pad(const TruncatedSpectrum& t);
// Keep the m' largest-magnitude modes (ties by index), zero the rest.
Spectrum truncate_ranked(const Spectrum& spectrum, std::size_t m_prime);
double retained_energy_fraction(const Spectrum& full, const TruncatedSpectrum& t);

// Multilinear lookup into a stored window. Full axes are periodic with the
// phase factor exp(-2 pi i o_a / h) per period; truncated axes are zero outside.
class SpectrumLookup {
public:
    SpectrumLookup() = default;
    SpectrumLookup(const SampleGrid& parent, std::size_t side);

    struct Taps {
        int count = 0;
        std::array<std::size_t, 8> index{};
        std::array<cplx, 8> weight{};
    };
    // Window-row-major indices and weights of the corners around frequency nu.
    void taps(const Vec3& nu, Taps& out) const;
    cplx sample(const std::vector<cplx>& window, const Vec3& nu) const;

    const SampleGrid& parent() const { return parent_; }
    std::size_t side() const { return side_; }

private:
    SampleGrid parent_;
    std::size_t side_ = 0;
    int dim_ = 3;
    std::array<long, 3> w_{1, 1, 1};
    std::array<double, 3> scale_{0, 0, 0};  // n_a h
    std::array<bool, 3> periodic_{false, false, false};
    std::array<std::array<cplx, 7>, 3> wrap_{};  // phase^q, q in [-3, 3]
};

void check_rotation(const Mat3& R, int dim);
Spectrum rotate_reflect_spectrum(const Spectrum& spectrum, const Mat3& R);
TruncatedSpectrum rotate_reflect_spectrum(const TruncatedSpectrum& spectrum, const Mat3& R);

}  // namespace geofield
