#pragma once

#include <functional>

#include "geofield/energy.hpp"

// Slow reference implementations. Nothing here calls into the spectral or
// quadrature code paths.
namespace geofield::oracle {

// sum_p rho1(p) rho2(R^T (p - t)) dV over field1's nodes; rho2 is sampled
// multilinearly and is zero outside field2's node box.
cplx brute_score(const ComplexField& field1, const ComplexField& field2, const Configuration& config);

// Direct O(m^2) evaluation of the forward DFT; m <= 2^14.
Spectrum cascade_dft(const ComplexField& field);

// Crossing parity along three seeded random rays, majority vote. Rays that
// graze an edge or vertex are replaced.
bool raycast_pmc(const Solid& solid, const Vec3& p);

struct FdGradient {
    Vec3c translation = Vec3c::Zero();
    Vec3c rotation = Vec3c::Zero();  // R -> exp(eps Omega_e) R; 2D in z
};

using Scorer = std::function<cplx(const Configuration&)>;

// Central differences along each translation axis and each rotation axis.
FdGradient fd_gradient(const Scorer& scorer, const Configuration& config, double step_t, double step_r);

}  // namespace geofield::oracle
