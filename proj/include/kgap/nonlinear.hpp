#pragma once

#include "kgap/evolution.hpp"

#include <filesystem>
#include <vector>

namespace kgap {

// wW Gamma(h / wW, h / wW) cell by cell; h must be weighted.
PhaseField weighted_rhs(const GammaTensor& gamma, const Matrix& weights, const PhaseField& h);
PhaseField weighted_rhs(const VelocityGrid& grid, const CollisionKernel& kernel,
                        const SpatialDomain& domain, const WeightSpec& spec, const PhaseField& h);

struct Trajectory {
  std::vector<double> times;
  std::vector<PhaseField> states;  // weighted
  double sup_norm() const;
  double distance(const Trajectory& other) const;
};

struct IterationReport {
  int n_iters = 0;
  std::vector<double> sup_norms;           // sup_t max|h^n|
  std::vector<double> distances;           // sup_t max|h^{n+1} - h^n|
  std::vector<double> contraction_factors;  // distances[n] / distances[n-1]
  bool converged = false;
  void write_json(const std::filesystem::path& file) const;
};

struct PicardOptions {
  int max_iters = 12;
  double tol = 1e-10;
  double delta = 1e-2;            // smallness bound on max|h0| and max|wWg|
  bool start_from_linear = false;  // h^0 = h_g instead of 0
};

struct PicardResult {
  Trajectory trajectory;
  IterationReport report;
};

// h^{n+1} = h_g + h_Gamma^{n+1}: h_g carries h0 and the inflow (computed once),
// h_Gamma^{n+1} solves the homogeneous weighted problem with source
// Gamma_w(h^n) by left-endpoint Duhamel and zero data.
PicardResult picard_solve(const SpatialDomain& domain, const VelocityGrid& grid,
                          const GammaTensor& gamma, const CollisionOperator& op,
                          const WeightSpec& spec, const PhaseField& h0, double dt, double t_end,
                          const PicardOptions& opts = {});

struct LinfDecayReport {
  double lambda_fit = 0.0;
  double r_squared = 0.0;
  double C = 0.0;           // sup_t e^{lambda t} max|h| / (max|h0| + sup_s e^{lambda0 s} max|wWg|)
  double data_norm = 0.0;
  bool monotone_after_transient = false;
};

// Sup envelope of an inflow datum: sup over sampled times and boundary points
// of e^{lambda0 s} max_v |wW g(s)|.
double inflow_envelope(const SpatialDomain& domain, const VelocityGrid& grid,
                       const WeightSpec& spec, double lambda0, double t_end, double dt);

LinfDecayReport linf_decay_check(const Trajectory& traj, double t_lo, double t_hi,
                                 double lambda_candidate, double inflow_sup,
                                 double transient = 1.0);

struct PositivityReport {
  double min_value = 0.0;
  bool ok = true;
};

// min over nodes of mu + mu^{1/2} f, with tol = 1e-10 max mu by default.
PositivityReport positivity_check(const PhaseField& f, const VelocityGrid& grid,
                                  double tol_scale = 1e-10);

void write_envelope_csv(const Trajectory& traj, const std::filesystem::path& file);

}  // namespace kgap
