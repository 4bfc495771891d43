#include "kgap/velocity_grid.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace kgap {

double maxwellian(const Vec3& v) {
  return std::pow(2.0 * std::numbers::pi, -1.5) * std::exp(-0.5 * v.squaredNorm());
}

double maxwellian_half(const Vec3& v) {
  return std::pow(2.0 * std::numbers::pi, -0.75) * std::exp(-0.25 * v.squaredNorm());
}

VelocityGrid::VelocityGrid(int n_per_axis, double v_max) : n_(n_per_axis), v_max_(v_max) {
  if (n_per_axis < 3 || n_per_axis % 2 == 0) {
    throw std::invalid_argument("n_per_axis must be odd and >= 3 (got " +
                                std::to_string(n_per_axis) + ")");
  }
  if (!(v_max > 0.0)) throw std::invalid_argument("v_max must be positive");
  dv_ = 2.0 * v_max / (n_ - 1);
  const int N = size();
  nodes_.resize(N);
  weights_ = Vector::Constant(N, cell_volume());
  mu_half_.resize(N);
  basis_.resize(N, 5);
  for (int i0 = 0; i0 < n_; ++i0)
    for (int i1 = 0; i1 < n_; ++i1)
      for (int i2 = 0; i2 < n_; ++i2) {
        const int j = index(i0, i1, i2);
        // Integer offsets from the centre keep the grid exactly symmetric.
        Vec3 v((i0 - n_ / 2) * dv_, (i1 - n_ / 2) * dv_, (i2 - n_ / 2) * dv_);
        nodes_[j] = v;
        mu_half_[j] = maxwellian_half(v);
        basis_(j, 0) = mu_half_[j];
        basis_(j, 1) = v[0] * mu_half_[j];
        basis_(j, 2) = v[1] * mu_half_[j];
        basis_(j, 3) = v[2] * mu_half_[j];
        basis_(j, 4) = v.squaredNorm() * mu_half_[j];
      }
  gram_ = basis_.transpose() * weights_.asDiagonal() * basis_;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 5, 5>> es(gram_);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e14) {
    std::ostringstream msg;
    msg << "invariant Gram matrix is singular on grid (n=" << n_ << ", v_max=" << v_max_
        << "): eigenvalues in [" << lo << ", " << hi << "]";
    throw NumericalError(msg.str());
  }
  gram_llt_.compute(gram_);
  tol_q_ = std::abs(1.0 - integrate(*this, mu_half_.cwiseProduct(mu_half_))) + dv_ * dv_;
}

int VelocityGrid::stencil(const Vec3& p, std::array<int, 8>& idx,
                          std::array<double, 8>& wt) const {
  int base[3];
  double frac[3];
  for (int a = 0; a < 3; ++a) {
    if (!(std::abs(p[a]) <= v_max_)) return 0;
    const double s = (p[a] + v_max_) / dv_;
    int i = static_cast<int>(std::floor(s));
    if (i > n_ - 2) i = n_ - 2;
    if (i < 0) i = 0;
    base[a] = i;
    frac[a] = s - i;
  }
  int count = 0;
  for (int c = 0; c < 8; ++c) {
    double w = 1.0;
    int off[3];
    for (int a = 0; a < 3; ++a) {
      off[a] = (c >> (2 - a)) & 1;
      w *= off[a] ? frac[a] : 1.0 - frac[a];
    }
    if (w == 0.0) continue;
    idx[count] = index(base[0] + off[0], base[1] + off[1], base[2] + off[2]);
    wt[count] = w;
    ++count;
  }
  return count;
}

Eigen::Matrix<double, 5, Eigen::Dynamic> VelocityGrid::solve_gram(
    const Eigen::Matrix<double, 5, Eigen::Dynamic>& rhs) const {
  return gram_llt_.solve(rhs);
}

Eigen::Matrix<double, 5, 1> MomentCoefficients::packed() const {
  Eigen::Matrix<double, 5, 1> x;
  x << a, b[0], b[1], b[2], c;
  return x;
}

MomentCoefficients MomentCoefficients::unpack(const Eigen::Matrix<double, 5, 1>& x) {
  MomentCoefficients m;
  m.a = x[0];
  m.b = Vec3(x[1], x[2], x[3]);
  m.c = x[4];
  return m;
}

VelocityGrid build_grid(int n_per_axis, double v_max) { return VelocityGrid(n_per_axis, v_max); }

double integrate(const VelocityGrid& grid, const Vector& values) {
  if (values.size() != grid.size()) {
    throw std::invalid_argument("integrate: expected " + std::to_string(grid.size()) +
                                " values, got " + std::to_string(values.size()));
  }
  return values.dot(grid.quad_weights());
}

Eigen::Matrix<double, 5, Eigen::Dynamic> moment_coefficients(const VelocityGrid& grid,
                                                             const Matrix& F) {
  if (F.rows() != grid.size()) throw std::invalid_argument("moment_coefficients: row mismatch");
  Eigen::Matrix<double, 5, Eigen::Dynamic> rhs =
      grid.invariants_basis().transpose() * (grid.quad_weights().asDiagonal() * F);
  return grid.solve_gram(rhs);
}

Projection project_P(const VelocityGrid& grid, const Vector& f) {
  if (f.size() != grid.size()) throw std::invalid_argument("project_P: length mismatch");
  Eigen::Matrix<double, 5, 1> x = moment_coefficients(grid, f);
  Projection out;
  out.coeffs = MomentCoefficients::unpack(x);
  out.Pf = grid.invariants_basis() * x;
  return out;
}

Matrix projection_matrix(const VelocityGrid& grid) {
  const auto& B = grid.invariants_basis();
  Matrix P = B * grid.solve_gram(B.transpose() * grid.quad_weights().asDiagonal());
  return 0.5 * (P + P.transpose());
}

}  // namespace kgap
