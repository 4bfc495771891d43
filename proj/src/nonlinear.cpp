#include "kgap/nonlinear.hpp"

#include "kgap/common.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace kgap {

PhaseField weighted_rhs(const GammaTensor& gamma, const Matrix& weights, const PhaseField& h) {
  if (h.rep != Representation::Weighted)
    throw std::invalid_argument("weighted_rhs expects a weighted field");
  const Matrix f = h.data.cwiseQuotient(weights);
  PhaseField out = h;
  out.data = gamma.apply_columns(f, f).cwiseProduct(weights);
  return out;
}

PhaseField weighted_rhs(const VelocityGrid& grid, const CollisionKernel& kernel,
                        const SpatialDomain& domain, const WeightSpec& spec, const PhaseField& h) {
  const GammaTensor gamma(grid, kernel);
  return weighted_rhs(gamma, weight_table(grid, domain, spec), h);
}

double Trajectory::sup_norm() const {
  double s = 0.0;
  for (const auto& st : states) s = std::max(s, st.max_abs());
  return s;
}

double Trajectory::distance(const Trajectory& other) const {
  if (states.size() != other.states.size())
    throw std::invalid_argument("trajectory length mismatch");
  double d = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k)
    d = std::max(d, (states[k].data - other.states[k].data).cwiseAbs().maxCoeff());
  return d;
}

void IterationReport::write_json(const std::filesystem::path& file) const {
  nlohmann::json j;
  j["n_iters"] = n_iters;
  j["sup_norms"] = sup_norms;
  j["distances"] = distances;
  j["contraction_factors"] = contraction_factors;
  j["converged"] = converged;
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

namespace {

// One step of the homogeneous weighted linear problem (inflow as in domain).
struct WeightedPropagator {
  const SpatialDomain& domain;
  const VelocityGrid& grid;
  const WeightSpec& spec;
  const Matrix& weights;
  const CollisionStepper& half;
  double dt;

  PhaseField step(PhaseField h, double t) const {
    half.apply(h, &weights);
    h = advect_step(domain, spec, grid, h, dt, t);
    half.apply(h, &weights);
    return h;
  }
};

}  // namespace

PicardResult picard_solve(const SpatialDomain& domain, const VelocityGrid& grid,
                          const GammaTensor& gamma, const CollisionOperator& op,
                          const WeightSpec& spec, const PhaseField& h0, double dt, double t_end,
                          const PicardOptions& opts) {
  domain.validate();
  spec.validate(true);
  if (h0.rep != Representation::Weighted)
    throw std::invalid_argument("picard_solve expects weighted initial data");
  if (!(dt > 0.0) || !(t_end > 0.0)) throw std::invalid_argument("picard_solve: bad time grid");
  if (h0.max_abs() > opts.delta * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "initial data max|h0| = " << h0.max_abs() << " exceeds delta = " << opts.delta;
    throw std::invalid_argument(msg.str());
  }
  const double env = inflow_envelope(domain, grid, spec, 0.0, 0.0, dt);
  if (env > opts.delta * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "inflow data max|wWg| = " << env << " exceeds delta = " << opts.delta;
    throw std::invalid_argument(msg.str());
  }

  const Matrix weights = weight_table(grid, domain, spec);
  const CollisionStepper half(op.L, 0.5 * dt, CollisionScheme::BackwardEuler);
  SpatialDomain quiet = domain;
  quiet.inflow = nullptr;
  const WeightedPropagator with_inflow{domain, grid, spec, weights, half, dt};
  const WeightedPropagator no_inflow{quiet, grid, spec, weights, half, dt};
  const long n_steps = std::lround(std::ceil(t_end / dt - 1e-9));

  Trajectory hg;
  hg.times.push_back(0.0);
  hg.states.push_back(h0);
  for (long k = 0; k < n_steps; ++k) {
    hg.times.push_back((k + 1) * dt);
    hg.states.push_back(with_inflow.step(hg.states.back(), k * dt));
    if (!hg.states.back().all_finite())
      throw NumericalError("non-finite linear iterate at step " + std::to_string(k + 1));
  }

  Trajectory cur = hg;
  if (!opts.start_from_linear)
    for (auto& s : cur.states) s.data.setZero();

  PicardResult res;
  IterationReport& rep = res.report;
  int bad_streak = 0;
  for (int it = 1; it <= opts.max_iters; ++it) {
    Trajectory next;
    next.times = hg.times;
    next.states.reserve(hg.states.size());
    PhaseField duh = h0;
    duh.data.setZero();
    next.states.push_back(hg.states[0]);
    for (long k = 0; k < n_steps; ++k) {
      PhaseField src = weighted_rhs(gamma, weights, cur.states[k]);
      duh.data += dt * src.data;
      duh = no_inflow.step(duh, k * dt);
      PhaseField s = hg.states[k + 1];
      s.data += duh.data;
      if (!s.all_finite())
        throw NumericalError("non-finite Picard iterate " + std::to_string(it) + " at step " +
                             std::to_string(k + 1));
      next.states.push_back(std::move(s));
    }
    const double d = next.distance(cur);
    rep.n_iters = it;
    rep.sup_norms.push_back(next.sup_norm());
    rep.distances.push_back(d);
    if (rep.distances.size() >= 2) {
      const double prev = rep.distances[rep.distances.size() - 2];
      const double factor = prev > 0.0 ? d / prev : 0.0;
      rep.contraction_factors.push_back(factor);
      bad_streak = factor >= 1.0 ? bad_streak + 1 : 0;
      if (bad_streak >= 3)
        throw NumericalError("Picard iteration diverges (contraction factor >= 1 three times); "
                             "use a smaller delta");
    }
    cur = std::move(next);
    if (d < opts.tol) {
      rep.converged = true;
      break;
    }
  }
  res.trajectory = std::move(cur);
  return res;
}

double inflow_envelope(const SpatialDomain& domain, const VelocityGrid& grid,
                       const WeightSpec& spec, double lambda0, double t_end, double dt) {
  if (!domain.inflow || domain.mode != DomainMode::InflowBox3) return 0.0;
  const int n = domain.n_cells;
  double sup = 0.0;
  const long n_t = t_end > 0.0 ? std::lround(std::ceil(t_end / dt)) : 0;
  for (long k = 0; k <= n_t; ++k) {
    const double t = k * dt;
    for (int c = 0; c < domain.size(); ++c) {
      const auto m = domain.multi_index(c);
      for (int a = 0; a < 3; ++a)
        for (int side = 0; side < 2; ++side) {
          if (m[a] != (side == 0 ? 0 : n - 1)) continue;
          Vec3 xf = domain.cell_center(c);
          xf[a] = side == 0 ? 0.0 : domain.side;
          const double sign = side == 0 ? -1.0 : 1.0;
          for (int j = 0; j < grid.size(); ++j) {
            const Vec3& v = grid.node(j);
            if (sign * v[a] >= 0.0) continue;
            const double g = domain.inflow(t, xf, v);
            sup = std::max(sup, std::exp(lambda0 * t) * std::abs(spec.w(v) * spec.W(xf, v) * g));
          }
        }
    }
  }
  return sup;
}

LinfDecayReport linf_decay_check(const Trajectory& traj, double t_lo, double t_hi,
                                 double lambda_candidate, double inflow_sup, double transient) {
  LinfDecayReport rep;
  std::vector<double> ts, ys;
  std::vector<double> sup(traj.states.size());
  for (std::size_t k = 0; k < traj.states.size(); ++k) sup[k] = traj.states[k].max_abs();
  for (std::size_t k = 0; k < sup.size(); ++k) {
    const double t = traj.times[k];
    if (t < t_lo - 1e-12 || t > t_hi + 1e-12 || !(sup[k] > 0.0)) continue;
    ts.push_back(t);
    ys.push_back(std::log(sup[k]));
  }
  if (ts.size() >= 2) {
    EnergyTrace tr;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      tr.times.push_back(ts[i]);
      tr.e_total.push_back(std::exp(ys[i]));
    }
    const DecayFit fit = fit_decay_rate(tr, t_lo, t_hi, EnergySeries::Total);
    rep.lambda_fit = fit.lambda_fit;
    rep.r_squared = fit.r_squared;
  }
  const double lam = lambda_candidate > 0.0 ? lambda_candidate : rep.lambda_fit;
  rep.data_norm = (sup.empty() ? 0.0 : sup[0]) + inflow_sup;
  double env = 0.0;
  for (std::size_t k = 0; k < sup.size(); ++k) env = std::max(env, std::exp(lam * traj.times[k]) * sup[k]);
  rep.C = rep.data_norm > 0.0 ? env / rep.data_norm : 0.0;
  rep.monotone_after_transient = true;
  for (std::size_t k = 1; k < sup.size(); ++k)
    if (traj.times[k - 1] >= transient && sup[k] > sup[k - 1] * (1.0 + 1e-12))
      rep.monotone_after_transient = false;
  return rep;
}

PositivityReport positivity_check(const PhaseField& f, const VelocityGrid& grid, double tol_scale) {
  if (f.rep != Representation::Plain) throw std::invalid_argument("positivity_check expects f, not h");
  const Vector& mh = grid.mu_half();
  const double max_mu = mh.cwiseProduct(mh).maxCoeff();
  PositivityReport rep;
  rep.min_value = std::numeric_limits<double>::infinity();
  for (int c = 0; c < f.n_cells(); ++c)
    for (int j = 0; j < f.n_velocities(); ++j)
      rep.min_value = std::min(rep.min_value, mh[j] * mh[j] + mh[j] * f.data(j, c));
  rep.ok = rep.min_value >= -tol_scale * max_mu;
  return rep;
}

void write_envelope_csv(const Trajectory& traj, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "t,sup_h\n" << std::setprecision(17);
  for (std::size_t k = 0; k < traj.states.size(); ++k)
    out << traj.times[k] << ',' << traj.states[k].max_abs() << '\n';
}

}  // namespace kgap
