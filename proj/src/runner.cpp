#include "kgap/runner.hpp"

#include "kgap/config.hpp"
#include "kgap/hash.hpp"
#include "kgap/landau.hpp"
#include "kgap/nonlinear.hpp"
#include "kgap/selftest.hpp"
#include "kgap/spectral.hpp"

#include <json.hpp>
#include <omp.h>

#include <chrono>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>

namespace kgap {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Context {
  RunConfig cfg;
  fs::path out;
  fs::path cache_dir;
  bool no_cache = false;
  std::ostream& log;
  std::vector<fs::path> outputs;
  json timings = json::object();
  json results = json::object();
  std::vector<std::string> falsifications;

  fs::path file(const std::string& name) {
    const fs::path p = out / name;
    outputs.push_back(p);
    return p;
  }
  template <typename F>
  auto timed(const std::string& phase, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      timings[phase] = seconds_since(t0);
    } else {
      auto r = f();
      timings[phase] = seconds_since(t0);
      return r;
    }
  }
  void falsify(const std::string& what) {
    log << "FALSIFIED: " << what << '\n';
    falsifications.push_back(what);
  }
  static double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

void write_json(const fs::path& file, const json& j) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << std::setprecision(17) << j.dump(2) << '\n';
}

std::ofstream open_csv(const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << std::setprecision(17);
  return out;
}

CollisionOperator collision_operator(Context& ctx, const VelocityGrid& grid,
                                     const CollisionKernel& kernel) {
  if (!ctx.no_cache) return cached_collision_operator(grid, kernel, ctx.cache_dir);
  // Bypass: rebuild and overwrite the cached copy.
  CollisionOperator op = build_collision_operator(grid, kernel);
  save_operator_cache(
      ctx.cache_dir / ("collision_" + operator_cache_key(grid, kernel).substr(0, 16) + ".bin"), grid,
      kernel, op);
  return op;
}

json complex_list(const std::vector<std::complex<double>>& z) {
  json a = json::array();
  for (const auto& x : z) a.push_back({x.real(), x.imag()});
  return a;
}

json report_json(const SpectralReport& r) {
  return {{"method", r.method},
          {"closure", r.closure},
          {"dim", r.dim},
          {"eigenvalues", complex_list(r.eigenvalues)},
          {"residuals", r.residuals},
          {"gap_abscissa", r.gap_abscissa},
          {"zero_modes", r.zero_modes},
          {"c0_rayleigh", std::isfinite(r.c0_rayleigh) ? json(r.c0_rayleigh) : json(nullptr)}};
}

PhaseField initial_field(const RunConfig& cfg, const VelocityGrid& grid,
                         const SpatialDomain& domain) {
  PhaseField f(grid, domain);
  switch (cfg.initial) {
    case InitialKind::Random:
      f = random_field(grid, domain, cfg.seed);
      break;
    case InitialKind::Microscopic:
      f = random_field(grid, domain, cfg.seed, true);
      break;
    case InitialKind::Equilibrium:
      f.data = grid.mu_half().replicate(1, domain.size());
      break;
    case InitialKind::Zero:
      break;
    case InitialKind::Bump:
      f = PhaseField::from_function(grid, domain, [](const Vec3& x, const Vec3& v) {
        double b = 1.0;
        for (int a = 0; a < 3; ++a) b *= std::pow(std::sin(std::numbers::pi * x[a]), 2);
        return b * (1.0 + 0.5 * v[0] + 0.2 * v.squaredNorm()) * maxwellian_half(v);
      });
      break;
  }
  f.data *= cfg.amplitude;
  return f;
}

// ---------------------------------------------------------------------------

void run_assemble(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const VelocityGrid grid = cfg.grid();
  CollisionOperator op = ctx.timed("assemble", [&] { return collision_operator(ctx, grid, cfg.kernel); });
  json r;
  ctx.timed("diagnostics", [&] {
    const Matrix& L = op.L;
    const double scale = L.norm();
    r["n_per_axis"] = grid.n_per_axis();
    r["v_max"] = grid.v_max();
    r["dv"] = grid.dv();
    r["kernel"] = cfg.kernel.describe();
    r["symmetry_error"] = (L - L.transpose()).norm() / scale;
    const Matrix inv = L * grid.invariants_basis();
    r["invariant_residual"] = inv.norm() / (scale * grid.invariants_basis().norm());
    Eigen::SelfAdjointEigenSolver<Matrix> es(L, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed on L");
    const Vector ev = es.eigenvalues();
    const double tol = 1e-10 * ev.cwiseAbs().maxCoeff();
    int zeros = 0;
    for (double x : ev) zeros += std::abs(x) <= tol;
    r["max_eigenvalue"] = ev.maxCoeff();
    r["min_eigenvalue"] = ev.minCoeff();
    r["zero_multiplicity"] = zeros;
    r["c1"] = coercivity_constant(op, grid);
    r["plain_gap"] = plain_gap(op, grid);
    r["k_bound"] = k_boundedness_constant(op);
    r["nu_min"] = op.nu.minCoeff();
    r["nu_max"] = op.nu.maxCoeff();
    if (ev.maxCoeff() > tol) ctx.falsify("L is not negative semidefinite");
    if (zeros != 5) ctx.falsify("zero eigenvalue of L has multiplicity " + std::to_string(zeros));
    if (!(r["c1"].get<double>() > 0.0)) ctx.falsify("coercivity constant c1 is not positive");
  });
  write_json(ctx.file("operator.json"), r);
  auto csv = open_csv(ctx.file("collision_frequency.csv"));
  csv << "speed,nu\n";
  for (int j = 0; j < grid.size(); ++j) csv << grid.node(j).norm() << ',' << op.nu[j] << '\n';
  ctx.results = r;
}

void run_spectrum(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const VelocityGrid grid = cfg.grid();
  const SpatialDomain domain = cfg.domain();
  const CollisionOperator op = ctx.timed("assemble", [&] { return collision_operator(ctx, grid, cfg.kernel); });
  const FullOperator A = ctx.timed("full_operator", [&] { return assemble_full_operator(domain, grid, op); });
  SpectralReport rep = ctx.timed("eigensolve", [&] { return rightmost_eigenvalues(A, cfg.k, cfg.spectral_options()); });
  const bool box = domain.mode == DomainMode::InflowBox3;
  json r;
  if (box && cfg.weight.q > 0.0) {
    const RayleighBound rb = ctx.timed("rayleigh", [&] {
      return rayleigh_lower_bound(domain, grid, op, cfg.weight, static_cast<unsigned>(cfg.seed), cfg.n_random);
    });
    rep.c0_rayleigh = rb.c0;
    r["C0"] = rb.C0;
    if (!(rb.c0 > 0.0)) {
      ctx.falsify("rayleigh bound c0 = " + std::to_string(rb.c0) + " is not positive");
      auto csv = open_csv(ctx.file("rayleigh_offending_vector.csv"));
      csv << "velocity_index," << "cell,value\n";
      for (Eigen::Index c = 0; c < rb.worst_vector.size(); ++c)
        csv << rb.worst_velocity << ',' << c << ',' << rb.worst_vector[c] << '\n';
    }
    const SpectralReport sur = ctx.timed("surrogate", [&] {
      return rightmost_eigenvalues(weighted_surrogate_operator(domain, grid, op, cfg.weight), cfg.k,
                                   cfg.spectral_options());
    });
    r["surrogate"] = report_json(sur);
    const double worst = sur.eigenvalues.front().real();
    if (rb.c0 > 0.0 && worst > -rb.c0 + 1e-8)
      ctx.falsify("weighted surrogate has an eigenvalue right of -c0");
  }
  r["report"] = report_json(rep);
  if (box) {
    if (rep.zero_modes > 0 || !(rep.gap_abscissa < 0.0))
      ctx.falsify("inflow-box operator has no spectral gap");
  } else if (rep.zero_modes != 5) {
    ctx.falsify("torus operator has " + std::to_string(rep.zero_modes) + " zero modes, expected 5");
  }
  write_json(ctx.file("spectrum.json"), r);
  ctx.results = {{"gap_abscissa", rep.gap_abscissa},
                 {"zero_modes", rep.zero_modes},
                 {"method", rep.method}};
}

void run_sweep(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  ScalingConfig sc;
  sc.v_max_list = cfg.v_max_list;
  sc.dv = cfg.dv;
  sc.kernel = cfg.kernel;
  sc.n_cells = cfg.n_cells;
  sc.side = cfg.side;
  sc.weight = cfg.weight;
  sc.spectral = cfg.spectral_options();
  sc.k = cfg.k;
  sc.cache_dir = ctx.cache_dir;
  sc.seed = static_cast<unsigned>(cfg.seed);
  if (sc.weight.q <= 0.0) throw ConfigError("sweep needs weight.q > 0 for the Rayleigh bound");
  const auto rows = ctx.timed("sweep", [&] { return scaling_experiment(sc); });
  auto csv = open_csv(ctx.file("sweep.csv"));
  csv << "v_max,gap_L,gap_torus,gap_box,c0_rayleigh\n";
  json rj = json::array();
  for (const auto& r : rows) {
    csv << r.v_max << ',' << r.gap_L << ',' << r.gap_torus << ',' << r.gap_box << ',' << r.c0_rayleigh << '\n';
    rj.push_back({{"v_max", r.v_max},
                  {"n_per_axis", r.n_per_axis},
                  {"gap_L", r.gap_L},
                  {"gap_torus", r.gap_torus},
                  {"gap_box", r.gap_box},
                  {"c0_rayleigh", r.c0_rayleigh},
                  {"seconds", r.seconds}});
    if (!(r.gap_box > 0.0)) ctx.falsify("inflow-box gap not positive at v_max = " + std::to_string(r.v_max));
    if (!(r.c0_rayleigh > 0.0)) ctx.falsify("c0 not positive at v_max = " + std::to_string(r.v_max));
  }
  auto band = [&](auto get) {
    double lo = get(rows.front()), hi = lo;
    for (const auto& r : rows) {
      lo = std::min(lo, get(r));
      hi = std::max(hi, get(r));
    }
    return (hi - lo) / hi;
  };
  json trends;
  trends["box_band"] = band([](const ScalingRow& r) { return r.gap_box; });
  trends["c0_band"] = band([](const ScalingRow& r) { return r.c0_rayleigh; });
  json shrink = json::array();
  for (std::size_t i = 1; i < rows.size(); ++i) shrink.push_back(1.0 - rows[i].gap_torus / rows[i - 1].gap_torus);
  trends["torus_shrink"] = shrink;
  if (trends["box_band"].get<double>() > 0.25) ctx.falsify("inflow-box gap leaves the 25% band");
  if (trends["c0_band"].get<double>() > 0.25) ctx.falsify("c0 leaves the 25% band");
  if (cfg.control) {
    ScalingConfig hard = sc;
    hard.kernel.gamma = 0.5;
    hard.kernel.hard_control = true;
    hard.collision_only = true;
    const auto ctl = ctx.timed("control", [&] { return scaling_experiment(hard); });
    auto c2 = open_csv(ctx.file("sweep_control.csv"));
    c2 << "v_max,gap_L\n";
    for (const auto& r : ctl) c2 << r.v_max << ',' << r.gap_L << '\n';
    trends["control_band"] = band([](const ScalingRow& r) { return r.gap_L; });
  }
  write_json(ctx.file("sweep.json"), {{"rows", rj}, {"trends", trends}});
  ctx.results = trends;
}

void write_snapshots(Context& ctx, const EvolveResult& res, const VelocityGrid& grid,
                     const SpatialDomain& domain) {
  std::ofstream bin(ctx.file("snapshots.bin"), std::ios::binary);
  for (const auto& s : res.snapshots)
    bin.write(reinterpret_cast<const char*>(s.data.data()),
              static_cast<std::streamsize>(s.data.size() * sizeof(double)));
  write_json(ctx.file("snapshots.json"),
             {{"format", "float64 little-endian, column-major (velocity fastest) per snapshot"},
              {"n_snapshots", res.snapshots.size()},
              {"n_velocities", grid.size()},
              {"n_per_axis", grid.n_per_axis()},
              {"v_max", grid.v_max()},
              {"n_cells_per_axis", domain.n_cells},
              {"side", domain.side},
              {"times", res.snapshot_times}});
}

void run_evolve(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const VelocityGrid grid = cfg.grid();
  const SpatialDomain domain = cfg.domain();
  const bool box = domain.mode == DomainMode::InflowBox3;
  const CollisionOperator op = ctx.timed("assemble", [&] { return collision_operator(ctx, grid, cfg.kernel); });
  json r;
  double kappa = 0.0;
  if (box) {
    const KappaCalibration cal = ctx.timed("calibrate_kappa", [&] {
      return calibrate_kappa(domain, grid, cfg.weight, cfg.kappa, cfg.seed + 1);
    });
    kappa = cal.kappa;
    r["kappa"] = {{"value", cal.kappa}, {"c", cal.c}, {"C", cal.C}, {"halvings", cal.halvings}};
  }
  EvolveOptions o;
  o.kappa = kappa;
  o.scheme = cfg.scheme;
  o.snapshot_every = cfg.snapshot_every;
  o.max_snapshots = cfg.max_snapshots;
  o.energy_detail = box;
  const PhaseField f0 = initial_field(cfg, grid, domain);
  const EvolveResult res = ctx.timed("evolve", [&] {
    return evolve_linear(domain, grid, op, WeightSpec{cfg.weight.q, cfg.weight.rho, cfg.weight.beta},
                         f0, cfg.dt, cfg.t_end, o);
  });
  res.trace.write_csv(ctx.file("trace.csv"));
  const EnergySeries series = box ? EnergySeries::Total : EnergySeries::L2;
  const auto& E = box ? res.trace.e_total : res.trace.l2_norm_sq;
  double drift = 0.0;
  for (double e : E) drift = std::max(drift, std::abs(e - E.front()) / std::max(E.front(), 1e-300));
  r["relative_drift"] = drift;
  if (E.front() > 0.0) {
    const DecayFit fit = fit_decay_rate(res.trace, cfg.t_end - cfg.fit_window, cfg.t_end, series);
    r["fit"] = {{"lambda", fit.lambda_fit}, {"r_squared", fit.r_squared}, {"n_points", fit.n_points},
                {"window", {cfg.t_end - cfg.fit_window, cfg.t_end}}};
    const InequalityLedger led = energy_inequality_ledger(res.trace, std::max(fit.lambda_fit, 0.0), series);
    r["ledger"] = {{"n_steps", led.n_steps},
                   {"n_ok", led.n_ok},
                   {"fraction_ok", led.fraction_ok()},
                   {"n_nonincreasing", led.n_nonincreasing},
                   {"worst_excess", led.worst_excess}};
    const bool zero_inflow = !domain.inflow;
    if (zero_inflow && led.n_nonincreasing < led.n_steps)
      ctx.falsify("energy increased at " + std::to_string(led.n_steps - led.n_nonincreasing) +
                  " steps with zero inflow");
    if (zero_inflow && fit.lambda_fit > 0.0 && led.fraction_ok() < 0.99)
      ctx.falsify("discrete energy inequality holds at only " + std::to_string(led.fraction_ok()) +
                  " of the steps");
  }
  if (!res.snapshots.empty()) {
    write_snapshots(ctx, res, grid, domain);
    if (res.snapshots.size() >= 3 && cfg.snapshot_every == 1) {
      const FluidResidual fr = fluid_residuals(res.snapshots, cfg.dt, domain, grid, op);
      r["fluid_residuals"] = {{"mass", fr.mass}, {"momentum", fr.momentum}, {"energy", fr.energy},
                              {"theta", fr.theta}, {"lambda", fr.lambda}};
    }
  }
  write_json(ctx.file("evolve.json"), r);
  ctx.results = r;
}

void run_nonlinear(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const VelocityGrid grid = cfg.grid();
  SpatialDomain domain = cfg.domain();
  const CollisionOperator op = ctx.timed("assemble", [&] { return collision_operator(ctx, grid, cfg.kernel); });
  const GammaTensor gamma = ctx.timed("gamma_tensor", [&] {
    try {
      return GammaTensor(grid, cfg.kernel);
    } catch (const std::length_error& e) {
      throw ConfigError(std::string(e.what()) + " (grid.n_per_axis too large for the nonlinear run)");
    }
  });
  if (cfg.inflow == InflowKind::Gaussian && cfg.inflow_amplitude == 0.0) {
    domain.inflow = gaussian_inflow(1.0, cfg.lambda0, cfg.inflow_theta);
    const double unit = inflow_envelope(domain, grid, cfg.weight, 0.0, 0.0, cfg.dt);
    domain.inflow = gaussian_inflow(0.5 * cfg.delta / unit, cfg.lambda0, cfg.inflow_theta);
  }
  // Data scaled to max |h0| = delta; equilibrium-shaped data keep F positive.
  const PhaseField f0 = initial_field(cfg, grid, domain);
  PhaseField h0 = to_weighted(f0, grid, domain, cfg.weight);
  if (h0.max_abs() > 0.0) h0.data *= cfg.delta / h0.max_abs();
  PicardOptions po;
  po.max_iters = cfg.max_iters;
  po.tol = cfg.tol_picard;
  po.delta = cfg.delta;
  const PicardResult pr = ctx.timed("picard", [&] {
    return picard_solve(domain, grid, gamma, op, cfg.weight, h0, cfg.dt, cfg.t_end, po);
  });
  pr.report.write_json(ctx.file("iterations.json"));
  write_envelope_csv(pr.trajectory, ctx.file("envelope.csv"));
  const double env = inflow_envelope(domain, grid, cfg.weight, cfg.lambda0, cfg.t_end, cfg.dt);
  const LinfDecayReport lr = linf_decay_check(pr.trajectory, 0.5 * cfg.t_end, cfg.t_end, 0.0, env);
  double min_pos = std::numeric_limits<double>::infinity();
  bool pos_ok = true;
  for (const auto& h : pr.trajectory.states) {
    const PositivityReport p = positivity_check(to_plain(h, grid, domain, cfg.weight), grid);
    min_pos = std::min(min_pos, p.min_value);
    pos_ok = pos_ok && p.ok;
  }
  json r;
  r["converged"] = pr.report.converged;
  r["n_iters"] = pr.report.n_iters;
  r["max_contraction"] = pr.report.contraction_factors.empty()
                             ? 0.0
                             : *std::max_element(pr.report.contraction_factors.begin(),
                                                 pr.report.contraction_factors.end());
  r["linf_decay"] = {{"lambda", lr.lambda_fit}, {"r_squared", lr.r_squared}, {"C", lr.C},
                     {"data_norm", lr.data_norm}, {"monotone_after_transient", lr.monotone_after_transient}};
  r["positivity"] = {{"min", min_pos}, {"ok", pos_ok}};
  write_json(ctx.file("nonlinear.json"), r);
  if (!pr.report.converged) ctx.falsify("Picard iteration did not converge within max_iters");
  if (!pos_ok) ctx.falsify("positivity of F = mu + mu^1/2 f fails");
  if (pr.trajectory.sup_norm() > 0.0 && !(lr.lambda_fit > 0.0 && lr.lambda_fit < cfg.lambda0))
    ctx.falsify("fitted sup-norm decay rate outside (0, lambda0)");
  ctx.results = r;
}

void run_landau(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const VelocityGrid grid = cfg.grid();
  const LandauCoefficients co = ctx.timed("sigma", [&] { return assemble_sigma(grid, cfg.gamma_L); });
  const auto prof = landau_profile(co);
  auto csv = open_csv(ctx.file("landau_profile.csv"));
  csv << "speed,lambda1,lambda2\n";
  bool pd = true;
  for (const auto& p : prof) {
    csv << p.speed << ',' << p.lambda1 << ',' << p.lambda2 << '\n';
    pd = pd && p.lambda1 > 0.0 && p.lambda2 > 0.0;
  }
  const auto& far = prof.back();
  const double br = std::sqrt(1.0 + far.speed * far.speed);
  json r = {{"gamma_L", co.gamma_L},
            {"epsilon", co.epsilon},
            {"lambda1_over_bracket_gamma", far.lambda1 / std::pow(br, cfg.gamma_L)},
            {"lambda2_over_bracket_gamma_plus_2", far.lambda2 / std::pow(br, cfg.gamma_L + 2.0)},
            {"largest_speed", far.speed}};
  write_json(ctx.file("landau.json"), r);
  if (!pd) ctx.falsify("sigma is not positive definite at every node");
  ctx.results = r;
}

void run_selftest_cmd(Context& ctx) {
  const auto res = ctx.timed("selftest", [] { return run_selftest(); });
  json arr = json::array();
  int failed = 0;
  for (const auto& r : res) {
    ctx.log << (r.ok ? "PASS " : "FAIL ") << r.module << ": " << r.name;
    if (!r.detail.empty()) ctx.log << " [" << r.detail << ']';
    ctx.log << '\n';
    arr.push_back({{"module", r.module}, {"name", r.name}, {"ok", r.ok}, {"detail", r.detail}});
    failed += !r.ok;
  }
  write_json(ctx.file("selftest.json"), arr);
  if (failed) ctx.falsify(std::to_string(failed) + " selftest checks failed");
  ctx.results = {{"checks", res.size()}, {"failed", failed}};
}

const std::map<std::string, std::function<void(Context&)>>& pipelines() {
  static const std::map<std::string, std::function<void(Context&)>> m = {
      {"assemble", run_assemble}, {"spectrum", run_spectrum}, {"sweep", run_sweep},
      {"evolve", run_evolve},     {"nonlinear", run_nonlinear}, {"landau", run_landau},
      {"selftest", run_selftest_cmd}};
  return m;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"assemble", "spectrum", "sweep", "evolve",
                                                 "nonlinear", "landau", "selftest"};
  return names;
}

int run_subcommand(const std::string& name, const RunOptions& opts, std::ostream& log) {
  const auto it = pipelines().find(name);
  if (it == pipelines().end()) {
    log << "error: unknown subcommand '" << name << "'\n";
    return kExitConfig;
  }
  RunConfig cfg;
  try {
    if (name != "selftest" || !opts.config.empty()) cfg = load_config(opts.config);
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.out_dir) cfg.out_dir = *opts.out_dir;
    cfg.validate(name);
    if (opts.threads && *opts.threads < 1) throw ConfigError("--threads must be >= 1");
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (opts.threads) omp_set_num_threads(*opts.threads);

  Context ctx{cfg, cfg.out_dir, cfg.out_dir / "cache", opts.no_cache, log, {}, json::object(), json::object(), {}};
  std::error_code ec;
  fs::create_directories(ctx.cache_dir, ec);
  if (ec) {
    log << "config error: cannot create " << ctx.cache_dir << ": " << ec.message() << '\n';
    return kExitConfig;
  }

  const auto t0 = std::chrono::steady_clock::now();
  int code = kExitOk;
  std::string status = "ok", message;
  try {
    it->second(ctx);
    if (!ctx.falsifications.empty()) {
      code = kExitFalsified;
      status = "falsified";
    }
  } catch (const ConfigError& e) {
    code = kExitConfig;
    status = "config_error";
    message = e.what();
  } catch (const std::invalid_argument& e) {
    code = kExitConfig;
    status = "config_error";
    message = e.what();
  } catch (const FalsificationEvent& e) {
    ctx.falsify(e.what());
    code = kExitFalsified;
    status = "falsified";
  } catch (const std::exception& e) {
    code = kExitNumerical;
    status = "numerical_abort";
    message = e.what();
  }
  if (!message.empty()) log << status << ": " << message << '\n';
  ctx.timings["total"] = Context::seconds_since(t0);

  json manifest;
  manifest["tool"] = "kgap";
  manifest["version"] = kVersion;
  manifest["subcommand"] = name;
  manifest["status"] = status;
  manifest["exit_code"] = code;
  if (!message.empty()) manifest["message"] = message;
  manifest["falsifications"] = ctx.falsifications;
  manifest["seed"] = cfg.seed;
  manifest["threads"] = omp_get_max_threads();
  manifest["config_file"] = opts.config.string();
  manifest["config"] = json::parse(config_to_json(cfg));
  manifest["results"] = ctx.results;
  json files = json::array();
  auto add_file = [&](const fs::path& p) {
    if (!fs::is_regular_file(p)) return;
    files.push_back({{"path", fs::relative(p, ctx.out).generic_string()},
                     {"bytes", fs::file_size(p)},
                     {"sha256", sha256_file(p)}});
  };
  for (const auto& p : ctx.outputs) add_file(p);
  std::vector<fs::path> cached;
  for (const auto& e : fs::directory_iterator(ctx.cache_dir))
    if (e.path().extension() == ".bin") cached.push_back(e.path());
  std::sort(cached.begin(), cached.end());
  for (const auto& p : cached) add_file(p);
  manifest["outputs"] = files;
  manifest["timings_seconds"] = ctx.timings;
  try {
    write_json(ctx.out / "manifest.json", manifest);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    if (code == kExitOk) code = kExitNumerical;
  }
  log << name << ": " << status << " (exit " << code << ")\n";
  return code;
}

}  // namespace kgap
