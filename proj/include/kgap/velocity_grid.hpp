#pragma once

#include "kgap/common.hpp"

#include <array>
#include <vector>

namespace kgap {

// Uniform tensor grid on [-v_max, v_max]^3 with equal midpoint weights.
// Node index is (i0 * n + i1) * n + i2, axis 0 slowest.
class VelocityGrid {
 public:
  VelocityGrid(int n_per_axis, double v_max);

  int n_per_axis() const { return n_; }
  double v_max() const { return v_max_; }
  double dv() const { return dv_; }
  int size() const { return n_ * n_ * n_; }
  double cell_volume() const { return dv_ * dv_ * dv_; }
  double tol_q() const { return tol_q_; }

  const Vec3& node(int j) const { return nodes_[j]; }
  const std::vector<Vec3>& nodes() const { return nodes_; }
  const Vector& quad_weights() const { return weights_; }
  const Vector& mu_half() const { return mu_half_; }
  // Columns: mu^{1/2}, v1 mu^{1/2}, v2 mu^{1/2}, v3 mu^{1/2}, |v|^2 mu^{1/2}.
  const Eigen::Matrix<double, Eigen::Dynamic, 5>& invariants_basis() const { return basis_; }
  const Eigen::Matrix<double, 5, 5>& gram() const { return gram_; }

  int index(int i0, int i1, int i2) const { return (i0 * n_ + i1) * n_ + i2; }
  std::array<int, 3> multi_index(int j) const { return {j / (n_ * n_), (j / n_) % n_, j % n_}; }
  int zero_node() const { return index(n_ / 2, n_ / 2, n_ / 2); }
  // Index of the node at -v.
  int reflect(int j) const { return size() - 1 - j; }

  // Trilinear interpolation stencil at an arbitrary velocity. Returns the
  // number of entries written (0 if p lies outside the closed grid box).
  int stencil(const Vec3& p, std::array<int, 8>& idx, std::array<double, 8>& wt) const;

  // Solves gram * x = rhs for one or many right-hand sides.
  Eigen::Matrix<double, 5, Eigen::Dynamic> solve_gram(
      const Eigen::Matrix<double, 5, Eigen::Dynamic>& rhs) const;

 private:
  int n_;
  double v_max_;
  double dv_;
  double tol_q_;
  std::vector<Vec3> nodes_;
  Vector weights_;
  Vector mu_half_;
  Eigen::Matrix<double, Eigen::Dynamic, 5> basis_;
  Eigen::Matrix<double, 5, 5> gram_;
  Eigen::LLT<Eigen::Matrix<double, 5, 5>> gram_llt_;
};

struct MomentCoefficients {
  double a = 0.0;
  Vec3 b = Vec3::Zero();
  double c = 0.0;

  Eigen::Matrix<double, 5, 1> packed() const;
  static MomentCoefficients unpack(const Eigen::Matrix<double, 5, 1>& x);
};

double maxwellian(const Vec3& v);
double maxwellian_half(const Vec3& v);

VelocityGrid build_grid(int n_per_axis, double v_max);

double integrate(const VelocityGrid& grid, const Vector& values);

struct Projection {
  MomentCoefficients coeffs;
  Vector Pf;
};

Projection project_P(const VelocityGrid& grid, const Vector& f);

// Coefficients only, for many columns at once (each column is one velocity vector).
Eigen::Matrix<double, 5, Eigen::Dynamic> moment_coefficients(const VelocityGrid& grid,
                                                             const Matrix& F);

// Dense matrix of the discrete projection P_h (symmetric, since weights are equal).
Matrix projection_matrix(const VelocityGrid& grid);

}  // namespace kgap
