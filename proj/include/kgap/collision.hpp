#pragma once

#include "kgap/velocity_grid.hpp"

#include <cstddef>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace kgap {

// B(u, w) = (|u|^2 + eps^2)^{gamma/2} * b_coeff * |cos theta|.
struct CollisionKernel {
  double gamma = -1.0;
  double b_coeff = 1.0;
  int n_angle = 8;
  // Negative means "half the velocity spacing".
  double epsilon_reg = -1.0;
  // Accepts gamma >= 0; only the scaling experiment's control run sets this.
  bool hard_control = false;

  void validate() const;
  double epsilon(const VelocityGrid& grid) const;
  double speed_factor(double u2, const VelocityGrid& grid) const;
  std::string describe() const;
};

// Directions on the hemisphere cos(theta) in (0, 1] around a unit axis. The
// weights include b(cos theta), the azimuth step and the factor 2 for the
// opposite hemisphere (omega and -omega give the same collision).
struct AngularRule {
  std::vector<double> cos_theta;
  std::vector<double> sin_theta;
  std::vector<double> cos_phi;
  std::vector<double> sin_phi;
  std::vector<double> weight;  // one per (theta, phi) pair, theta-major
  double total = 0.0;          // sum of weights: integral of b over the sphere

  int n_theta() const { return static_cast<int>(cos_theta.size()); }
  int n_phi() const { return static_cast<int>(cos_phi.size()); }
};

AngularRule make_angular_rule(const CollisionKernel& kernel);

// Gauss-Legendre nodes and weights on [lo, hi].
void gauss_legendre(int n, double lo, double hi, std::vector<double>& x, std::vector<double>& w);

// Bound on pre-correction quadrature defects (K mu^1/2 - nu mu^1/2,
// Gamma(mu^1/2, mu^1/2), K asymmetry) relative to |nu mu^1/2| on grids with
// dv <= 2. Measured 0.19-0.20 at dv = 2; the defects shrink under refinement.
inline constexpr double kAssemblyTolerance = 0.25;

struct CollisionOperator {
  Vector nu;
  Matrix K;
  Matrix L;
  double c1_estimate = std::numeric_limits<double>::quiet_NaN();
};

Vector collision_frequency(const VelocityGrid& grid, const CollisionKernel& kernel);

Matrix assemble_K(const VelocityGrid& grid, const CollisionKernel& kernel,
                  std::size_t max_bytes = std::size_t(2) << 30);

CollisionOperator assemble_L(const Vector& nu, const Matrix& K, const VelocityGrid& grid);

CollisionOperator build_collision_operator(const VelocityGrid& grid,
                                           const CollisionKernel& kernel);

// Orthonormal basis (Euclidean) of the complement of the invariants.
Matrix complement_basis(const VelocityGrid& grid);

// Smallest eigenvalue of the pencil (-L, diag(nu)) on range(Q); stored in op.
double coercivity_constant(CollisionOperator& op, const VelocityGrid& grid);

// min (g, -L g) / (g, g) over range(Q).
double plain_gap(const CollisionOperator& op, const VelocityGrid& grid);

// Smallest constant C with |nu^{-1/2} K g| <= C |nu^{1/2} g| (matrix norm).
double k_boundedness_constant(const CollisionOperator& op);

// Direct quadrature of Gamma(f, g) = mu^{-1/2} Q(mu^{1/2} f, mu^{1/2} g).
Vector gamma_bilinear(const VelocityGrid& grid, const CollisionKernel& kernel, const Vector& f,
                      const Vector& g);

// Precomputed third-order tensor T with Gamma(f, g)_i = sum_ab T(i, a, b) f_a g_b,
// built with the same quadrature as gamma_bilinear.
class GammaTensor {
 public:
  GammaTensor(const VelocityGrid& grid, const CollisionKernel& kernel,
              std::size_t max_bytes = std::size_t(2) << 30);

  int size() const { return n_; }
  Vector apply(const Vector& f, const Vector& g) const;
  // Column-wise Gamma(F.col(c), G.col(c)).
  Matrix apply_columns(const Matrix& F, const Matrix& G) const;

 private:
  int n_;
  // Row (i * n + a), column b.
  Matrix t_;
};

// Binary cache of an assembled operator, keyed by a hash of its parameters.
std::string operator_cache_key(const VelocityGrid& grid, const CollisionKernel& kernel);
void save_operator_cache(const std::filesystem::path& file, const VelocityGrid& grid,
                         const CollisionKernel& kernel, const CollisionOperator& op);
bool load_operator_cache(const std::filesystem::path& file, const VelocityGrid& grid,
                         const CollisionKernel& kernel, CollisionOperator& op);

// Build, going through the cache directory when it is non-empty.
CollisionOperator cached_collision_operator(const VelocityGrid& grid,
                                            const CollisionKernel& kernel,
                                            const std::filesystem::path& cache_dir);

}  // namespace kgap
