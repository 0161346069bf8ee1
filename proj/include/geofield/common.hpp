#pragma once

#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace geofield {

using cplx = std::complex<double>;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

// Domain errors map to exit code 1 in the CLI. Usage errors are CLI-side only.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t element)
        : Error(what + " (element " + std::to_string(element) + ")"), element_(element) {}
    std::size_t element() const { return element_; }

private:
    std::size_t element_;
};

class InvariantError : public Error {
public:
    InvariantError(const std::string& what, std::size_t element)
        : Error(what + " (element " + std::to_string(element) + ")"), element_(element) {}
    std::size_t element() const { return element_; }

private:
    std::size_t element_;
};

struct Aabb {
    Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

    void extend(const Vec3& p) {
        min = min.cwiseMin(p);
        max = max.cwiseMax(p);
    }
    void extend(const Aabb& b) {
        min = min.cwiseMin(b.min);
        max = max.cwiseMax(b.max);
    }
    bool empty() const { return (min.array() > max.array()).any(); }
    Vec3 center() const { return 0.5 * (min + max); }
    Vec3 extent() const { return max - min; }
    double diagonal() const { return empty() ? 0.0 : extent().norm(); }
    // squared distance from p to the box, zero inside
    double sq_distance(const Vec3& p) const {
        Vec3 d = (min - p).cwiseMax(p - max).cwiseMax(Vec3::Zero());
        return d.squaredNorm();
    }
};

// Threads requested via GEOFIELD_THREADS, else hardware concurrency.
unsigned default_threads();

}  // namespace geofield
