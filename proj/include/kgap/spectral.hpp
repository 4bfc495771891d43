#pragma once

#include "kgap/collision.hpp"
#include "kgap/domain.hpp"

#include <Eigen/Sparse>

#include <complex>
#include <string>
#include <vector>

namespace kgap {

enum class Closure { Periodic, ZeroInflowUpwind };

// Discrete generator -v.grad_x + L on the phase grid. Unknown (c, j) sits at
// position c * n_v + j, so the collision block is block diagonal.
struct FullOperator {
  Closure closure = Closure::ZeroInflowUpwind;
  int n_cells = 0;
  double side = 1.0;
  int n_v = 0;
  std::vector<Vec3> velocities;
  Vector nu;
  Matrix L;                                              // collision block
  Eigen::SparseMatrix<double, Eigen::RowMajor> transport;  // upwind -v.grad_x

  int n_x() const { return n_cells * n_cells * n_cells; }
  int dim() const { return n_x() * n_v; }
  double dx() const { return side / n_cells; }
  Vector apply(const Vector& x) const;
  Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;
  // Materialised sparse matrix; throws std::length_error above max_bytes.
  Eigen::SparseMatrix<double> sparse(std::size_t max_bytes = std::size_t(1) << 30) const;
  Matrix dense(std::size_t max_bytes = std::size_t(1) << 30) const;
};

FullOperator assemble_full_operator(const SpatialDomain& domain, const VelocityGrid& grid,
                                    const CollisionOperator& op);

// -Lambda = -v.grad_x - nu (no K) conjugated by diag(W): W (-Lambda) W^{-1}.
FullOperator weighted_surrogate_operator(const SpatialDomain& domain, const VelocityGrid& grid,
                                         const CollisionOperator& op, const WeightSpec& spec);

struct SpectralOptions {
  int dense_cap = 6000;
  double shift = 0.0;
  int ncv = 0;  // 0 picks max(2k + 1, 40)
  double arnoldi_tol = 1e-12;
  double inner_tol = 1e-13;
  double residual_tol = 1e-8;
  // |lambda| below zero_tol * scale counts as a zero mode.
  double zero_tol = 1e-8;
};

struct SpectralReport {
  std::vector<std::complex<double>> eigenvalues;  // descending real part
  std::vector<double> residuals;
  double gap_abscissa = 0.0;  // max Re over nonzero modes
  int zero_modes = 0;
  double c0_rayleigh = std::numeric_limits<double>::quiet_NaN();
  std::string method;
  std::string closure;
  int dim = 0;
};

SpectralReport rightmost_eigenvalues(const FullOperator& fullop, int k,
                                     const SpectralOptions& opt = {});

// Rightmost eigenvalues of a general dense matrix (used for small operators and tests).
SpectralReport dense_rightmost(const Matrix& A, int k, const SpectralOptions& opt = {});

struct RayleighBound {
  double c0 = 0.0;
  double C0 = 1.0;
  int worst_velocity = -1;
  Vector worst_vector;  // spatial profile at the worst velocity
};

// c0 = min (Lambda f, f)_X / |<v>^{1/2} f|_X^2 with Lambda = v.grad_x + nu and
// (f, g)_X = C0 (f, g) + (W f, W g); C0 doubled until the chain
// (Lambda f, f)_X >= (C0/2)(nu f, f) + q (|v|^2/<v> W f, W f) holds on
// n_random random vectors.
RayleighBound rayleigh_lower_bound(const SpatialDomain& domain, const VelocityGrid& grid,
                                   const CollisionOperator& op, const WeightSpec& spec,
                                   unsigned seed = 0, int n_random = 1000);

// Quotient of a single phase vector (used to test homogeneity).
double rayleigh_quotient(const SpatialDomain& domain, const VelocityGrid& grid,
                         const CollisionOperator& op, const WeightSpec& spec, double C0,
                         const Vector& f);

struct ScalingRow {
  double v_max = 0.0;
  int n_per_axis = 0;
  double gap_L = 0.0;
  double gap_torus = 0.0;  // |Re| of the rightmost nonzero torus eigenvalue
  double gap_box = 0.0;    // -Re of the rightmost box eigenvalue
  double c0_rayleigh = 0.0;
  double seconds = 0.0;
};

struct ScalingConfig {
  std::vector<double> v_max_list = {4.0, 6.0, 8.0};
  double dv = 2.0;
  CollisionKernel kernel;
  int n_cells = 4;
  double side = 1.0;
  WeightSpec weight{1.0, 1.0, 1.5};
  SpectralOptions spectral;
  int k = 6;
  bool collision_only = false;  // only gap_L (used for the hard-potential control)
  std::filesystem::path cache_dir;
  unsigned seed = 0;
};

std::vector<ScalingRow> scaling_experiment(const ScalingConfig& cfg);

}  // namespace kgap
