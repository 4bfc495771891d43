#pragma once

#include "kgap/collision.hpp"
#include "kgap/phase_field.hpp"

#include <Eigen/SparseCholesky>

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

namespace kgap {

struct EnergyTrace {
  std::vector<double> times;
  std::vector<double> l2_norm_sq;
  std::vector<double> weighted_norm_sq;  // |W f|^2
  std::vector<double> dissipation;       // -(L f, f)
  std::vector<double> e_int;
  std::vector<double> e_total;
  std::vector<double> boundary_outflux;  // int_{gamma+} |v.n| f^2
  std::vector<double> boundary_influx;   // int_{gamma-} |v.n| g^2

  std::size_t size() const { return times.size(); }
  void write_csv(const std::filesystem::path& file) const;
};

struct MacroFields {
  Vector a;
  Matrix b;  // 3 x n_cells
  Vector c;
};

MacroFields macro_fields(const PhaseField& field, const VelocityGrid& grid);

enum class CollisionScheme { BackwardEuler, CrankNicolson };

// Collision sub-step over a time span tau on every cell, with one factorisation
// of (I - tau L) (backward Euler) or (I - tau/2 L) (Crank-Nicolson).
class CollisionStepper {
 public:
  CollisionStepper(const Matrix& L, double tau, CollisionScheme scheme);
  // Plain fields directly; weighted fields are conjugated by wW cell by cell.
  void apply(PhaseField& field, const Matrix* weights) const;

 private:
  Matrix L_;
  double tau_;
  CollisionScheme scheme_;
  Eigen::LLT<Matrix> llt_;
};

struct EvolveOptions {
  double kappa = 0.05;
  CollisionScheme scheme = CollisionScheme::BackwardEuler;
  int snapshot_every = 0;  // 0 keeps no snapshots
  std::size_t max_snapshots = 20000;
  bool energy_detail = true;  // E_int and fluxes
};

struct EvolveResult {
  PhaseField final;
  EnergyTrace trace;
  std::vector<PhaseField> snapshots;  // plain representation
  std::vector<double> snapshot_times;
};

// Strang splitting: collision over dt/2, transport over dt, collision over dt/2.
// Plain fields carry nu inside L; weighted fields (h = wWf) get the absorption
// q|v|^2/<v> in the transport step and the conjugated L in the collision step.
// The inflow datum is domain.inflow.
EvolveResult evolve_linear(const SpatialDomain& domain, const VelocityGrid& grid,
                           const CollisionOperator& op, const WeightSpec& spec,
                           const PhaseField& f0, double dt, double t_end,
                           const EvolveOptions& opts = {});

struct FluidResidual {
  double mass = 0.0;
  double momentum = 0.0;
  double energy = 0.0;
  double theta = 0.0;
  double lambda = 0.0;
  double max() const;
};

// Weak-form residuals of the fluid-type system on interior cells and interior
// snapshots, with centred differences in t and x. Coefficients are the grid's
// own quadrature moments so that the exact discrete identities hold.
FluidResidual fluid_residuals(const std::vector<PhaseField>& snapshots, double dt,
                              const SpatialDomain& domain, const VelocityGrid& grid,
                              const CollisionOperator& op);

// Cell-centred 7-point Dirichlet Poisson solver on the box.
class PoissonSolver {
 public:
  explicit PoissonSolver(const SpatialDomain& domain);
  Vector solve(const Vector& rhs) const;
  // Centred gradient with odd reflection at the faces; 3 x n_cells.
  Matrix gradient(const Vector& phi) const;

 private:
  SpatialDomain domain_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

struct InteractionParts {
  double c_part = 0.0;
  double b_part = 0.0;
  double a_part = 0.0;
  double total(double kappa) const { return c_part + kappa * b_part + kappa * kappa * a_part; }
};

InteractionParts interaction_parts(const PhaseField& field, const VelocityGrid& grid,
                                   const SpatialDomain& domain, const PoissonSolver& poisson);
double interaction_functional(const PhaseField& field, const VelocityGrid& grid,
                              const SpatialDomain& domain, double kappa);

// 1/2 |f|^2 + kappa E_int + kappa/2 |W f|^2 (plain field). Throws when E drops
// below a quarter of 1/2 |f|^2, which means kappa is too large.
double total_energy(const PhaseField& field, const VelocityGrid& grid, const SpatialDomain& domain,
                    const WeightSpec& spec, double kappa);

struct KappaCalibration {
  double kappa = 0.0;
  double c = 0.0;  // min E / |f|^2
  double C = 0.0;  // max E / |f|^2
  int halvings = 0;
};

// Halve kappa from kappa0 until C / c < 4 over n_samples random fields.
KappaCalibration calibrate_kappa(const SpatialDomain& domain, const VelocityGrid& grid,
                                 const WeightSpec& spec, double kappa0, unsigned seed,
                                 int n_samples = 100);

enum class EnergySeries { L2, Weighted, Total };

struct DecayFit {
  double lambda_fit = 0.0;
  double r_squared = 0.0;
  int n_points = 0;
};

DecayFit fit_decay_rate(const EnergyTrace& trace, double t_lo, double t_hi,
                        EnergySeries series = EnergySeries::Total);

struct InequalityLedger {
  int n_steps = 0;
  int n_ok = 0;               // E_{k+1} <= e^{-lambda dt} E_k + dt * influx
  int n_nonincreasing = 0;    // E_{k+1} <= E_k
  double worst_excess = 0.0;  // max relative violation
  double fraction_ok() const { return n_steps ? static_cast<double>(n_ok) / n_steps : 1.0; }
};

InequalityLedger energy_inequality_ledger(const EnergyTrace& trace, double lambda,
                                          EnergySeries series = EnergySeries::Total,
                                          double rel_tol = 1e-12);

// Random data: mu^{1/2} times independent standard normals, deterministic in seed.
PhaseField random_field(const VelocityGrid& grid, const SpatialDomain& domain, std::uint64_t seed,
                        bool microscopic_only = false);

struct MacroConstantReport {
  double M = 0.0;
  int used = 0;
  int skipped = 0;
};

MacroConstantReport macro_constant_estimate(const SpatialDomain& domain, const VelocityGrid& grid,
                                            const CollisionOperator& op, int n_samples,
                                            std::uint64_t seed, double dt = 0.05,
                                            const std::function<PhaseField(std::uint64_t)>&
                                                sampler = {});

}  // namespace kgap
