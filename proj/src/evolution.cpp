#include "kgap/evolution.hpp"

#include "kgap/common.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

namespace kgap {

void EnergyTrace::write_csv(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "t,l2,weighted,dissipation,e_int,e_total,influx,outflux\n" << std::setprecision(17);
  for (std::size_t k = 0; k < times.size(); ++k)
    out << times[k] << ',' << l2_norm_sq[k] << ',' << weighted_norm_sq[k] << ',' << dissipation[k]
        << ',' << e_int[k] << ',' << e_total[k] << ',' << boundary_influx[k] << ','
        << boundary_outflux[k] << '\n';
}

MacroFields macro_fields(const PhaseField& field, const VelocityGrid& grid) {
  const auto coef = moment_coefficients(grid, field.data);
  MacroFields m;
  m.a = coef.row(0).transpose();
  m.b = coef.middleRows(1, 3);
  m.c = coef.row(4).transpose();
  return m;
}

// ---------------------------------------------------------------------------

CollisionStepper::CollisionStepper(const Matrix& L, double tau, CollisionScheme scheme)
    : L_(L), tau_(tau), scheme_(scheme) {
  if (!(tau > 0.0)) throw std::invalid_argument("collision step: tau must be positive");
  const double s = scheme == CollisionScheme::BackwardEuler ? tau : 0.5 * tau;
  const Matrix A = Matrix::Identity(L.rows(), L.cols()) - s * L;
  llt_.compute(A);
  if (llt_.info() != Eigen::Success)
    throw NumericalError("collision step matrix is not positive definite; L must be symmetric NSD");
}

void CollisionStepper::apply(PhaseField& field, const Matrix* weights) const {
  Matrix X = weights ? Matrix(field.data.cwiseQuotient(*weights)) : field.data;
  if (scheme_ == CollisionScheme::CrankNicolson) X += (0.5 * tau_) * (L_ * X);
  llt_.solveInPlace(X);
  field.data = weights ? Matrix(X.cwiseProduct(*weights)) : X;
}

// ---------------------------------------------------------------------------

namespace {

struct Fluxes {
  double out = 0.0;
  double in = 0.0;
};

Fluxes boundary_fluxes(const PhaseField& f, const VelocityGrid& grid, const SpatialDomain& domain,
                       double t) {
  Fluxes fl;
  if (domain.mode != DomainMode::InflowBox3) return fl;
  const int n = domain.n_cells;
  const double area = domain.dx() * domain.dx() * grid.cell_volume();
  for (int c = 0; c < domain.size(); ++c) {
    const auto m = domain.multi_index(c);
    for (int a = 0; a < 3; ++a)
      for (int side = 0; side < 2; ++side) {
        if (m[a] != (side == 0 ? 0 : n - 1)) continue;
        const double sign = side == 0 ? -1.0 : 1.0;
        Vec3 xf = domain.cell_center(c);
        xf[a] = side == 0 ? 0.0 : domain.side;
        for (int j = 0; j < grid.size(); ++j) {
          const Vec3& v = grid.node(j);
          const double vn = sign * v[a];
          if (vn > 0.0) {
            fl.out += vn * f.data(j, c) * f.data(j, c) * area;
          } else if (vn < 0.0) {
            const double g = domain.inflow_value(t, xf, v);
            fl.in += -vn * g * g * area;
          }
        }
      }
  }
  return fl;
}

double weighted_sq(const PhaseField& f, const VelocityGrid& grid, const SpatialDomain& domain,
                   const WeightSpec& spec) {
  double s = 0.0;
  for (int c = 0; c < domain.size(); ++c) {
    const Vec3 x = domain.cell_center(c);
    for (int j = 0; j < grid.size(); ++j) {
      const double W = spec.W(x, grid.node(j));
      s += W * W * f.data(j, c) * f.data(j, c);
    }
  }
  return s * domain.cell_volume() * grid.cell_volume();
}

}  // namespace

EvolveResult evolve_linear(const SpatialDomain& domain, const VelocityGrid& grid,
                           const CollisionOperator& op, const WeightSpec& spec,
                           const PhaseField& f0, double dt, double t_end,
                           const EvolveOptions& opts) {
  domain.validate();
  spec.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("evolve_linear: dt must be positive");
  if (!(t_end >= 0.0)) throw std::invalid_argument("evolve_linear: t_end must be nonnegative");
  if (op.L.rows() != grid.size()) throw std::invalid_argument("evolve_linear: operator / grid mismatch");
  if (f0.data.rows() != grid.size() || f0.data.cols() != domain.size())
    throw std::invalid_argument("evolve_linear: initial field shape mismatch");

  const bool weighted = f0.rep == Representation::Weighted;
  const Matrix weights = weighted ? weight_table(grid, domain, spec) : Matrix();
  const CollisionStepper half(op.L, 0.5 * dt, opts.scheme);
  const bool box = domain.mode == DomainMode::InflowBox3;
  std::optional<PoissonSolver> poisson;
  if (box && opts.energy_detail) poisson.emplace(domain);

  EvolveResult res;
  EnergyTrace& tr = res.trace;
  auto record = [&](const PhaseField& state, double t) {
    const PhaseField f = weighted ? to_plain(state, grid, domain, spec) : state;
    const double l2 = l2_norm_sq(f, grid, domain);
    const double wsq = weighted_sq(f, grid, domain, spec);
    const double diss = -(f.data.cwiseProduct(op.L * f.data)).sum() * domain.cell_volume() *
                        grid.cell_volume();
    double eint = 0.0;
    Fluxes fl;
    if (opts.energy_detail) {
      if (poisson) eint = interaction_parts(f, grid, domain, *poisson).total(opts.kappa);
      fl = boundary_fluxes(f, grid, domain, t);
    }
    tr.times.push_back(t);
    tr.l2_norm_sq.push_back(l2);
    tr.weighted_norm_sq.push_back(wsq);
    tr.dissipation.push_back(diss);
    tr.e_int.push_back(eint);
    tr.e_total.push_back(0.5 * l2 + opts.kappa * eint + 0.5 * opts.kappa * wsq);
    tr.boundary_outflux.push_back(fl.out);
    tr.boundary_influx.push_back(fl.in);
    if (opts.snapshot_every > 0 && res.snapshots.size() < opts.max_snapshots &&
        (tr.times.size() - 1) % opts.snapshot_every == 0) {
      res.snapshots.push_back(f);
      res.snapshot_times.push_back(t);
    }
  };

  PhaseField state = f0;
  record(state, 0.0);
  const long n_steps = std::lround(std::ceil(t_end / dt - 1e-9));
  for (long k = 0; k < n_steps; ++k) {
    const double t = k * dt;
    half.apply(state, weighted ? &weights : nullptr);
    state = advect_step(domain, spec, grid, state, dt, t);
    half.apply(state, weighted ? &weights : nullptr);
    if (!state.all_finite()) {
      std::ostringstream msg;
      msg << "non-finite state at step " << k + 1 << " (t = " << t + dt << ")";
      throw NumericalError(msg.str());
    }
    record(state, t + dt);
  }
  res.final = state;
  return res;
}

// ---------------------------------------------------------------------------

double FluidResidual::max() const { return std::max({mass, momentum, energy, theta, lambda}); }

FluidResidual fluid_residuals(const std::vector<PhaseField>& snapshots, double dt,
                              const SpatialDomain& domain, const VelocityGrid& grid,
                              const CollisionOperator& op) {
  if (snapshots.size() < 3) throw std::invalid_argument("fluid_residuals needs at least 3 snapshots");
  if (!(dt > 0.0)) throw std::invalid_argument("fluid_residuals: dt must be positive");
  const int N = grid.size();
  // test functions: mass, momentum (3), energy, Theta (6), Lambda (3)
  constexpr int P = 14;
  Matrix Psi(P, N);
  for (int j = 0; j < N; ++j) {
    const Vec3& v = grid.node(j);
    const double m = grid.mu_half()[j] * grid.cell_volume();
    const double v2 = v.squaredNorm();
    Psi(0, j) = m;
    for (int a = 0; a < 3; ++a) Psi(1 + a, j) = v[a] * m;
    Psi(4, j) = (v2 - 3.0) / 6.0 * m;
    int r = 5;
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b) Psi(r++, j) = (v[a] * v[b] - (a == b ? 1.0 : 0.0)) * m;
    for (int a = 0; a < 3; ++a) Psi(11 + a, j) = 0.1 * (v2 - 5.0) * v[a] * m;
  }
  std::array<Matrix, 3> PsiV;
  for (int a = 0; a < 3; ++a) {
    PsiV[a] = Psi;
    for (int j = 0; j < N; ++j) PsiV[a].col(j) *= grid.node(j)[a];
  }
  const Matrix PsiL = Psi * op.L;

  const int n = domain.n_cells;
  const bool torus = domain.mode == DomainMode::Torus3;
  const double dx = domain.dx();
  auto shifted = [&](int c, int a, int d) {
    auto m = domain.multi_index(c);
    m[a] += d;
    if (m[a] < 0 || m[a] >= n) {
      if (!torus) return -1;
      m[a] = (m[a] + n) % n;
    }
    return domain.index(m[0], m[1], m[2]);
  };

  FluidResidual out;
  auto bump = [](double& slot, double value) { slot = std::max(slot, std::abs(value)); };
  Matrix prev = Psi * snapshots[0].data;
  Matrix cur = Psi * snapshots[1].data;
  for (std::size_t k = 1; k + 1 < snapshots.size(); ++k) {
    const Matrix next = Psi * snapshots[k + 1].data;
    const Matrix& F = snapshots[k].data;
    std::array<Matrix, 3> flux;
    for (int a = 0; a < 3; ++a) flux[a] = PsiV[a] * F;
    const Matrix coll = PsiL * F;
    for (int c = 0; c < domain.size(); ++c) {
      Eigen::Matrix<double, P, 1> R = (next.col(c) - prev.col(c)) / (2.0 * dt) - coll.col(c);
      bool interior = true;
      for (int a = 0; a < 3 && interior; ++a) {
        const int up = shifted(c, a, 1), dn = shifted(c, a, -1);
        if (up < 0 || dn < 0) {
          interior = false;
          break;
        }
        R += (flux[a].col(up) - flux[a].col(dn)) / (2.0 * dx);
      }
      if (!interior) continue;
      bump(out.mass, R[0]);
      for (int a = 0; a < 3; ++a) bump(out.momentum, R[1 + a]);
      bump(out.energy, R[4]);
      for (int r = 5; r < 11; ++r) bump(out.theta, R[r]);
      for (int r = 11; r < 14; ++r) bump(out.lambda, R[r]);
    }
    prev = cur;
    cur = next;
  }
  return out;
}

// ---------------------------------------------------------------------------

PoissonSolver::PoissonSolver(const SpatialDomain& domain) : domain_(domain) {
  domain.validate();
  const int n = domain.n_cells;
  const int Nx = domain.size();
  const double h2 = domain.dx() * domain.dx();
  std::vector<Eigen::Triplet<double>> trip;
  for (int c = 0; c < Nx; ++c) {
    const auto m = domain.multi_index(c);
    double diag = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int d : {-1, 1}) {
        auto mm = m;
        mm[a] += d;
        if (mm[a] < 0 || mm[a] >= n) {
          diag += 2.0 / h2;  // ghost value -phi_c puts the zero on the face
        } else {
          diag += 1.0 / h2;
          trip.emplace_back(c, domain.index(mm[0], mm[1], mm[2]), -1.0 / h2);
        }
      }
    trip.emplace_back(c, c, diag);
  }
  Eigen::SparseMatrix<double> A(Nx, Nx);
  A.setFromTriplets(trip.begin(), trip.end());
  ldlt_.compute(A);
  if (ldlt_.info() != Eigen::Success) throw NumericalError("Poisson factorisation failed");
}

Vector PoissonSolver::solve(const Vector& rhs) const {
  Vector x = ldlt_.solve(rhs);
  if (ldlt_.info() != Eigen::Success || !x.allFinite())
    throw NumericalError("Poisson solve failed");
  return x;
}

Matrix PoissonSolver::gradient(const Vector& phi) const {
  const int n = domain_.n_cells;
  Matrix g(3, domain_.size());
  for (int c = 0; c < domain_.size(); ++c) {
    const auto m = domain_.multi_index(c);
    for (int a = 0; a < 3; ++a) {
      double vals[2];
      for (int s = 0; s < 2; ++s) {
        auto mm = m;
        mm[a] += s == 0 ? -1 : 1;
        vals[s] = (mm[a] < 0 || mm[a] >= n) ? -phi[c] : phi[domain_.index(mm[0], mm[1], mm[2])];
      }
      g(a, c) = (vals[1] - vals[0]) / (2.0 * domain_.dx());
    }
  }
  return g;
}

InteractionParts interaction_parts(const PhaseField& field, const VelocityGrid& grid,
                                   const SpatialDomain& domain, const PoissonSolver& poisson) {
  if (domain.mode != DomainMode::InflowBox3)
    throw std::invalid_argument("interaction_functional is defined on the inflow box");
  const MacroFields mf = macro_fields(field, grid);
  const Matrix gc = poisson.gradient(poisson.solve(mf.c));
  const Matrix ga = poisson.gradient(poisson.solve(mf.a));
  std::array<Matrix, 3> gb;
  for (int j = 0; j < 3; ++j) gb[j] = poisson.gradient(poisson.solve(mf.b.row(j).transpose()));

  // velocity moments: A5_i, A10_i, T_jm = |v|^2 v_j v_m, S_m = v_m^2 - 1
  const int N = grid.size();
  Matrix Psi(3 + 3 + 9 + 3, N);
  for (int k = 0; k < N; ++k) {
    const Vec3& v = grid.node(k);
    const double m = grid.mu_half()[k] * grid.cell_volume();
    const double v2 = v.squaredNorm();
    for (int i = 0; i < 3; ++i) {
      Psi(i, k) = (v2 - 5.0) * v[i] * m;
      Psi(3 + i, k) = (v2 - 10.0) * v[i] * m;
      Psi(15 + i, k) = (v[i] * v[i] - 1.0) * m;
      for (int l = 0; l < 3; ++l) Psi(6 + 3 * i + l, k) = v2 * v[i] * v[l] * m;
    }
  }
  const Matrix M = Psi * field.data;
  InteractionParts p;
  for (int c = 0; c < domain.size(); ++c) {
    for (int i = 0; i < 3; ++i) {
      p.c_part += gc(i, c) * M(i, c);
      p.a_part += ga(i, c) * M(3 + i, c);
    }
    for (int j = 0; j < 3; ++j)
      for (int m = 0; m < 3; ++m) {
        if (m == j)
          p.b_part += 3.5 * gb[j](j, c) * M(15 + j, c);
        else
          p.b_part += gb[j](m, c) * M(6 + 3 * m + j, c) - 3.5 * gb[j](j, c) * M(15 + m, c);
      }
  }
  const double vol = domain.cell_volume();
  p.c_part *= vol;
  p.b_part *= vol;
  p.a_part *= vol;
  return p;
}

double interaction_functional(const PhaseField& field, const VelocityGrid& grid,
                              const SpatialDomain& domain, double kappa) {
  const PoissonSolver poisson(domain);
  return interaction_parts(field, grid, domain, poisson).total(kappa);
}

double total_energy(const PhaseField& field, const VelocityGrid& grid, const SpatialDomain& domain,
                    const WeightSpec& spec, double kappa) {
  if (field.rep != Representation::Plain)
    throw std::invalid_argument("total_energy expects a plain field");
  const double l2 = l2_norm_sq(field, grid, domain);
  double e = 0.5 * l2 + 0.5 * kappa * weighted_sq(field, grid, domain, spec);
  if (kappa != 0.0 && domain.mode == DomainMode::InflowBox3)
    e += kappa * interaction_functional(field, grid, domain, kappa);
  if (e < 0.125 * l2) {
    std::ostringstream msg;
    msg << "energy equivalence violated (E = " << e << ", |f|^2 = " << l2
        << "); use a smaller kappa";
    throw NumericalError(msg.str());
  }
  return e;
}

PhaseField random_field(const VelocityGrid& grid, const SpatialDomain& domain, std::uint64_t seed,
                        bool microscopic_only) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  PhaseField f(grid, domain);
  for (int c = 0; c < domain.size(); ++c)
    for (int j = 0; j < grid.size(); ++j) f.data(j, c) = gauss(rng) * grid.mu_half()[j];
  if (microscopic_only) f.data -= projection_matrix(grid) * f.data;
  return f;
}

KappaCalibration calibrate_kappa(const SpatialDomain& domain, const VelocityGrid& grid,
                                 const WeightSpec& spec, double kappa0, unsigned seed,
                                 int n_samples) {
  if (!(kappa0 > 0.0)) throw std::invalid_argument("calibrate_kappa: kappa0 must be positive");
  std::vector<PhaseField> fields;
  for (int s = 0; s < n_samples; ++s) fields.push_back(random_field(grid, domain, seed + s));
  std::optional<PoissonSolver> poisson;
  if (domain.mode == DomainMode::InflowBox3) poisson.emplace(domain);
  KappaCalibration cal;
  cal.kappa = kappa0;
  for (; cal.halvings < 40; ++cal.halvings, cal.kappa *= 0.5) {
    cal.c = std::numeric_limits<double>::infinity();
    cal.C = 0.0;
    for (const PhaseField& f : fields) {
      const double l2 = l2_norm_sq(f, grid, domain);
      double e = 0.5 * l2 + 0.5 * cal.kappa * weighted_sq(f, grid, domain, spec);
      if (poisson) e += cal.kappa * interaction_parts(f, grid, domain, *poisson).total(cal.kappa);
      cal.c = std::min(cal.c, e / l2);
      cal.C = std::max(cal.C, e / l2);
    }
    if (cal.c > 0.0 && cal.C / cal.c < 4.0) return cal;
  }
  throw NumericalError("calibrate_kappa: no admissible kappa found");
}

DecayFit fit_decay_rate(const EnergyTrace& trace, double t_lo, double t_hi, EnergySeries series) {
  const std::vector<double>& E = series == EnergySeries::L2         ? trace.l2_norm_sq
                                 : series == EnergySeries::Weighted ? trace.weighted_norm_sq
                                                                    : trace.e_total;
  std::vector<double> ts, ys;
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    const double t = trace.times[k];
    if (t < t_lo - 1e-12 || t > t_hi + 1e-12) continue;
    if (!(E[k] > 0.0)) throw std::domain_error("fit_decay_rate: nonpositive energy in the window");
    ts.push_back(t);
    ys.push_back(std::log(E[k]));
  }
  if (ts.size() < 2) throw std::invalid_argument("fit_decay_rate: fewer than two points in the window");
  const double n = static_cast<double>(ts.size());
  double mt = 0.0, my = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    mt += ts[i];
    my += ys[i];
  }
  mt /= n;
  my /= n;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    stt += (ts[i] - mt) * (ts[i] - mt);
    sty += (ts[i] - mt) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double slope = sty / stt;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double r = ys[i] - (my + slope * (ts[i] - mt));
    ss_res += r * r;
  }
  DecayFit fit;
  fit.lambda_fit = -slope;
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.n_points = static_cast<int>(ts.size());
  return fit;
}

InequalityLedger energy_inequality_ledger(const EnergyTrace& trace, double lambda,
                                          EnergySeries series, double rel_tol) {
  const std::vector<double>& E = series == EnergySeries::L2         ? trace.l2_norm_sq
                                 : series == EnergySeries::Weighted ? trace.weighted_norm_sq
                                                                    : trace.e_total;
  InequalityLedger led;
  for (std::size_t k = 0; k + 1 < E.size(); ++k) {
    const double dt = trace.times[k + 1] - trace.times[k];
    const double influx = 0.5 * dt * (trace.boundary_influx[k] + trace.boundary_influx[k + 1]);
    const double bound = std::exp(-lambda * dt) * E[k] + influx;
    const double slack = rel_tol * std::abs(E[k]);
    ++led.n_steps;
    if (E[k + 1] <= bound + slack)
      ++led.n_ok;
    else
      led.worst_excess = std::max(led.worst_excess, (E[k + 1] - bound) / std::abs(E[k]));
    if (E[k + 1] <= E[k] + slack) ++led.n_nonincreasing;
  }
  return led;
}

MacroConstantReport macro_constant_estimate(const SpatialDomain& domain, const VelocityGrid& grid,
                                            const CollisionOperator& op, int n_samples,
                                            std::uint64_t seed, double dt,
                                            const std::function<PhaseField(std::uint64_t)>&
                                                sampler) {
  if (domain.mode != DomainMode::InflowBox3)
    throw std::invalid_argument("macro_constant_estimate runs on the inflow box");
  if (domain.inflow) throw std::invalid_argument("macro_constant_estimate expects zero inflow");
  double c1 = op.c1_estimate;
  if (!std::isfinite(c1)) {
    CollisionOperator tmp = op;
    c1 = coercivity_constant(tmp, grid);
  }
  const Matrix P = projection_matrix(grid);
  const WeightSpec plain{};
  EvolveOptions opts;
  opts.energy_detail = false;
  opts.snapshot_every = 1;
  const double vol = domain.cell_volume() * grid.cell_volume();
  MacroConstantReport rep;
  for (int s = 0; s < n_samples; ++s) {
    const std::uint64_t sample_seed = seed + static_cast<std::uint64_t>(s);
    const PhaseField f0 = sampler ? sampler(sample_seed) : random_field(grid, domain, sample_seed);
    const EvolveResult run = evolve_linear(domain, grid, op, plain, f0, dt, 1.0, opts);
    double lhs = 0.0, rhs_d = 0.0, rhs_b = 0.0;
    for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
      const Matrix& F = run.snapshots[k].data;
      const Matrix PF = P * F;
      const Matrix QF = F - PF;
      const double wq = (k == 0 || k + 1 == run.snapshots.size()) ? 0.5 * dt : dt;
      lhs += wq * vol * (PF.cwiseProduct(PF).transpose() * op.nu).sum();
      rhs_d += wq * vol * (QF.cwiseProduct(QF).transpose() * op.nu).sum();
      rhs_b += wq * boundary_fluxes(run.snapshots[k], grid, domain, run.snapshot_times[k]).out;
    }
    const double rhs = c1 * rhs_d + rhs_b;
    const double scale = l2_norm_sq(f0, grid, domain);
    if (!(lhs + rhs > 1e-13 * scale) || !(rhs > 0.0)) {
      std::cerr << "macro_constant_estimate: degenerate sample " << s << " skipped\n";
      ++rep.skipped;
      continue;
    }
    rep.M = std::max(rep.M, lhs / rhs);
    ++rep.used;
  }
  return rep;
}

}  // namespace kgap
