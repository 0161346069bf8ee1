#pragma once

#include <cstdint>
#include <vector>

#include "geofield/grid.hpp"
#include "geofield/solids.hpp"

namespace geofield {

enum class KernelFamily { InverseSquare, SkeletalDensity };

// Complex structure of the skeletal kernel.
//   AnnPhase:    c_d * lambda * g(eta/|xi| - 1) * (-i sgn xi) / eta^(d-1)
//   ZetaSquared: c_d * lambda * g(eta/|xi| - 1) * zeta^-2 * |zeta|^(3-d)
enum class KernelStructure { AnnPhase, ZetaSquared };

struct KernelSpec {
    KernelFamily family = KernelFamily::SkeletalDensity;
    KernelStructure structure = KernelStructure::AnnPhase;
    double sigma = 0.5;
    double lambda_in = 3.0;   // coefficient at interior nodes, +lambda_in
    double lambda_out = 1.0;  // coefficient at exterior nodes, -lambda_out

    // collision/separation weight relative to the fit reward
    double penalty() const { return lambda_in / lambda_out; }
    static KernelSpec skeletal(double sigma, double penalty,
                               KernelStructure s = KernelStructure::AnnPhase);
    static KernelSpec winding();
    void validate() const;
};

struct IntegrationPolicy {
    double max_solid_angle = 0.02;  // sr in 3D, rad in 2D
    int max_recursion_depth = 16;
    double eta_floor = 0.25;        // fraction of grid spacing
    void validate() const;
};

struct BoundaryProjection {
    double xi = 0;   // signed distance, negative inside
    double eta = 0;  // distance from query point to the boundary sample
};

class PmcError : public Error {
public:
    PmcError(double residual)
        : Error("recursion budget exhausted, worst residual angle " + std::to_string(residual)),
          residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

double gaussian(double x, double sigma);

// Kernel times its normalization; multiply by dA_perp to integrate.
cplx kernel_eval(const KernelSpec& spec, const BoundaryProjection& proj, bool inside, int dim = 3);

// Winding number by adaptive quadrature. Throws PmcError if max depth is hit
// before every element subtends <= max_solid_angle.
double point_membership(const Solid& solid, const Vec3& p, const IntegrationPolicy& policy = {});

struct NodeFailure {
    std::size_t node;
    double residual;
};

struct QuadratureStats {
    std::uint64_t samples = 0;
    std::uint64_t excluded_nodes = 0;
    double worst_residual = 0;
};

struct FieldResult {
    ComplexField field;
    std::vector<NodeFailure> failures;  // PMC failures, node values still filled
    QuadratureStats stats;
};

FieldResult affinity_field(const Solid& solid, const SampleGrid& grid, const KernelSpec& spec,
                           const IntegrationPolicy& policy = {}, unsigned threads = 0);
FieldResult indicator_field(const Solid& solid, const SampleGrid& grid,
                            const IntegrationPolicy& policy = {}, unsigned threads = 0);

VectorField vector_density(const ComplexField& field);

struct SampleRecord {
    BoundaryProjection proj;
    bool inside = false;
    cplx kernel;
    double dA_perp = 0;
};

// Single-node evaluation through the generic kernel_eval path, optionally
// recording every quadrature sample. min_eta is the absolute exclusion radius.
cplx affinity_at(const Solid& solid, const Vec3& p, const KernelSpec& spec,
                 const IntegrationPolicy& policy, double min_eta,
                 std::vector<SampleRecord>* trace = nullptr);

// Throws unless the node box holds the solid bbox grown by `margin`.
void require_margin(const Solid& solid, const SampleGrid& grid, double margin);

}  // namespace geofield
