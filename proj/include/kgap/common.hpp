#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace kgap {

using Vec3 = Eigen::Vector3d;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Raised when a computation cannot proceed (solver failure, non-finite state).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a claimed inequality fails its declared tolerance.
class FalsificationEvent : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double japanese_bracket(const Vec3& v) { return std::sqrt(1.0 + v.squaredNorm()); }

}  // namespace kgap
