#pragma once

#include <string>
#include <vector>

#include "geofield/descriptor.hpp"
#include "geofield/spectral.hpp"

namespace geofield {

using Vec3c = Eigen::Vector3cd;

// Moving part placed at p -> R p + t relative to the fixed part.
struct Configuration {
    int dim = 3;
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static Configuration planar(double theta, double x, double y);
    static Configuration spatial(const Mat3& R, const Vec3& t);
    static Configuration from_quaternion(double w, double x, double y, double z, const Vec3& t);
    double angle() const;  // 2D rotation angle
    void validate() const;
    // nearest proper rotation (SVD projection)
    Configuration orthonormalized() const;
};

struct PartAsset {
    std::string id;
    SampleGrid grid;
    Aabb support;  // where the part's field is concentrated, in its own frame
    KernelSpec kernel;
    Spectrum scalar;
    std::vector<Spectrum> vector;  // F{rho * p}, d components; empty for a fixed part

    bool movable() const { return !vector.empty(); }
    void validate() const;
};

struct EnergyEval {
    cplx score;
    double energy = 0;          // -Re score
    Vec3 force = Vec3::Zero();  // +Re grad_t score
    Vec3 torque = Vec3::Zero(); // +Re grad_R score; 2D uses z
    double eval_time_us = 0;
    std::size_t modes_used = 0;
};

enum class Truncation { Window, Ranked };

// Real-time path. Packs the retained modes of both parts once; evaluate()
// is a single O(m') cascade sum with fixed summation order and does not
// allocate after the first call on a thread.
class PairEvaluator {
public:
    // m_prime == 0 keeps every mode
    PairEvaluator(const PartAsset& fixed, const PartAsset& moving, std::size_t m_prime = 0,
                  Truncation mode = Truncation::Window);

    cplx score(const Configuration& c) const;
    Vec3c translational_gradient(const Configuration& c) const;
    Vec3c rotational_gradient(const Configuration& c) const;
    EnergyEval evaluate(const Configuration& c) const;

    std::size_t modes() const { return modes_.size(); }
    std::size_t window_side() const { return side_; }
    int dim() const { return dim_; }

private:
    struct Mode {
        Vec3 omega;
        cplx amp;  // fixed amplitude times dW
        std::array<std::uint32_t, 3> q;
    };
    struct Acc {
        cplx score;
        Vec3c grad_t;
        Vec3c grad_r;
    };
    Acc accumulate(const Configuration& c, bool want_t, bool want_r) const;

    int dim_ = 3;
    std::size_t side_ = 0;      // fixed-part window side (n for ranked)
    std::size_t stride_ = 1;    // packed values per moving node
    bool has_vector_ = false;
    std::array<double, 3> scale_{0, 0, 0};
    std::vector<Mode> modes_;
    SpectrumLookup lookup_;
    std::vector<cplx> packed_;  // moving window, stride_ values per node
};

struct ScoreField {
    ComplexField values;         // over translations t
    std::vector<std::uint8_t> wrap;  // 1 where the moved support leaves the fixed grid
};

// Translation grid: same dims and spacing, node s maps to o1 - o2 + (s - n/2) h.
SampleGrid translation_grid(const PartAsset& fixed, const PartAsset& moving);
void check_compatible(const PartAsset& a, const PartAsset& b);
bool wrap_contaminated(const PartAsset& fixed, const PartAsset& moving, const Mat3& R, const Vec3& t);

ScoreField score_field(const PartAsset& fixed, const PartAsset& moving, const Mat3& R, std::size_t m_prime = 0);
cplx score_at(const PartAsset& fixed, const PartAsset& moving, const Configuration& c, std::size_t m_prime = 0);
Vec3c translational_gradient(const PartAsset& fixed, const PartAsset& moving, const Configuration& c,
                             std::size_t m_prime = 0);
// Derivative for R -> exp(eps Omega_e) R with e a fixed-frame axis; 2D in z.
Vec3c rotational_gradient(const PartAsset& fixed, const PartAsset& moving, const Configuration& c,
                          std::size_t m_prime = 0);
EnergyEval evaluate(const PartAsset& fixed, const PartAsset& moving, const Configuration& c,
                    std::size_t m_prime = 0);

}  // namespace geofield
