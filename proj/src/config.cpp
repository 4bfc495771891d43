#include "kgap/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace kgap {

namespace pt = boost::property_tree;

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "grid.n_per_axis",      "grid.v_max",          "kernel.gamma",        "kernel.b_coeff",
      "kernel.n_angle",       "kernel.epsilon_reg",  "kernel.hard_control", "domain.mode",
      "domain.n_cells",       "domain.side",         "domain.inflow",       "domain.inflow_amplitude",
      "domain.inflow_theta",  "weight.q",            "weight.rho",          "weight.beta",
      "weight.kappa",         "weight.c0_policy",    "time.dt",             "time.t_end",
      "time.snapshot_every",  "time.max_snapshots",  "time.scheme",         "time.fit_window",
      "initial.kind",         "initial.amplitude",   "spectral.k",          "spectral.dense_cap",
      "spectral.v_max_list",  "spectral.dv",         "spectral.control",    "spectral.n_random",
      "nonlinear.delta",      "nonlinear.lambda0",   "nonlinear.tol_picard", "nonlinear.max_iters",
      "landau.gamma_L",       "run.seed",            "run.out_dir",         "run.cache"};
  return keys;
}

template <typename T>
T get(const pt::ptree& tree, const std::string& key, T fallback) {
  // get<T>(key, fallback) silently returns the fallback on a bad value.
  if (!tree.get_optional<std::string>(key)) return fallback;
  try {
    return tree.get<T>(key);
  } catch (const pt::ptree_bad_data&) {
    throw ConfigError("bad value for " + key + ": '" + tree.get<std::string>(key) + "'");
  }
}

bool get_bool(const pt::ptree& tree, const std::string& key, bool fallback) {
  const auto s = tree.get_optional<std::string>(key);
  if (!s) return fallback;
  if (*s == "true" || *s == "1" || *s == "yes" || *s == "on") return true;
  if (*s == "false" || *s == "0" || *s == "no" || *s == "off") return false;
  throw ConfigError("bad boolean for " + key + ": '" + *s + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad list entry for " + key + ": '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(key + " must not be empty");
  return out;
}

RunConfig from_tree(const pt::ptree& tree) {
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("key '" + section + "' outside of a section");
    for (const auto& [key, value] : body)
      if (!known_keys().count(section + "." + key))
        throw ConfigError("unknown config key " + section + "." + key);
  }
  RunConfig c;
  c.n_per_axis = get(tree, "grid.n_per_axis", c.n_per_axis);
  c.v_max = get(tree, "grid.v_max", c.v_max);
  c.kernel.gamma = get(tree, "kernel.gamma", c.kernel.gamma);
  c.kernel.b_coeff = get(tree, "kernel.b_coeff", c.kernel.b_coeff);
  c.kernel.n_angle = get(tree, "kernel.n_angle", c.kernel.n_angle);
  c.kernel.epsilon_reg = get(tree, "kernel.epsilon_reg", c.kernel.epsilon_reg);
  c.kernel.hard_control = get_bool(tree, "kernel.hard_control", c.kernel.hard_control);

  const std::string mode = get<std::string>(tree, "domain.mode", "box");
  if (mode == "box")
    c.mode = DomainMode::InflowBox3;
  else if (mode == "torus")
    c.mode = DomainMode::Torus3;
  else
    throw ConfigError("domain.mode must be 'box' or 'torus'");
  c.n_cells = get(tree, "domain.n_cells", c.n_cells);
  c.side = get(tree, "domain.side", c.side);
  const std::string inflow = get<std::string>(tree, "domain.inflow", "zero");
  if (inflow == "zero")
    c.inflow = InflowKind::Zero;
  else if (inflow == "gaussian")
    c.inflow = InflowKind::Gaussian;
  else
    throw ConfigError("domain.inflow must be 'zero' or 'gaussian'");
  c.inflow_amplitude = get(tree, "domain.inflow_amplitude", c.inflow_amplitude);
  c.inflow_theta = get(tree, "domain.inflow_theta", c.inflow_theta);

  c.weight.q = get(tree, "weight.q", c.weight.q);
  c.weight.rho = get(tree, "weight.rho", c.weight.rho);
  c.weight.beta = get(tree, "weight.beta", c.weight.beta);
  c.kappa = get(tree, "weight.kappa", c.kappa);
  if (get<std::string>(tree, "weight.c0_policy", "doubling") != "doubling")
    throw ConfigError("weight.c0_policy: only 'doubling' is supported");

  c.dt = get(tree, "time.dt", c.dt);
  c.t_end = get(tree, "time.t_end", c.t_end);
  c.snapshot_every = get(tree, "time.snapshot_every", c.snapshot_every);
  c.max_snapshots = get(tree, "time.max_snapshots", c.max_snapshots);
  const std::string scheme = get<std::string>(tree, "time.scheme", "backward_euler");
  if (scheme == "backward_euler")
    c.scheme = CollisionScheme::BackwardEuler;
  else if (scheme == "crank_nicolson")
    c.scheme = CollisionScheme::CrankNicolson;
  else
    throw ConfigError("time.scheme must be 'backward_euler' or 'crank_nicolson'");
  c.fit_window = get(tree, "time.fit_window", c.fit_window);

  const std::string init = get<std::string>(tree, "initial.kind", "random");
  if (init == "random")
    c.initial = InitialKind::Random;
  else if (init == "equilibrium")
    c.initial = InitialKind::Equilibrium;
  else if (init == "zero")
    c.initial = InitialKind::Zero;
  else if (init == "bump")
    c.initial = InitialKind::Bump;
  else if (init == "microscopic")
    c.initial = InitialKind::Microscopic;
  else
    throw ConfigError("initial.kind must be random, equilibrium, zero, bump or microscopic");
  c.amplitude = get(tree, "initial.amplitude", c.amplitude);

  c.k = get(tree, "spectral.k", c.k);
  c.dense_cap = get(tree, "spectral.dense_cap", c.dense_cap);
  if (auto s = tree.get_optional<std::string>("spectral.v_max_list"))
    c.v_max_list = parse_list("spectral.v_max_list", *s);
  c.dv = get(tree, "spectral.dv", c.dv);
  c.control = get_bool(tree, "spectral.control", c.control);
  c.n_random = get(tree, "spectral.n_random", c.n_random);

  c.delta = get(tree, "nonlinear.delta", c.delta);
  c.lambda0 = get(tree, "nonlinear.lambda0", c.lambda0);
  c.tol_picard = get(tree, "nonlinear.tol_picard", c.tol_picard);
  c.max_iters = get(tree, "nonlinear.max_iters", c.max_iters);

  c.gamma_L = get(tree, "landau.gamma_L", c.gamma_L);

  c.seed = get<std::uint64_t>(tree, "run.seed", c.seed);
  c.out_dir = get<std::string>(tree, "run.out_dir", c.out_dir.string());
  c.use_cache = get_bool(tree, "run.cache", c.use_cache);
  return c;
}

}  // namespace

void RunConfig::validate(const std::string& subcommand) const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  need(n_per_axis >= 3 && n_per_axis % 2 == 1, "grid.n_per_axis must be odd and >= 3");
  need(v_max > 0.0, "grid.v_max must be positive");
  try {
    kernel.validate();
    weight.validate(subcommand == "nonlinear");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  need(n_cells >= 2, "domain.n_cells must be >= 2");
  need(side > 0.0, "domain.side must be positive");
  need(inflow_theta > 0.0, "domain.inflow_theta must be positive");
  need(inflow_amplitude >= 0.0, "domain.inflow_amplitude must be nonnegative");
  need(mode == DomainMode::InflowBox3 || inflow == InflowKind::Zero,
       "the torus has no inflow boundary; use domain.inflow = zero");
  need(mode == DomainMode::InflowBox3 || weight.q == 0.0 || subcommand == "sweep",
       "the phase weight is not periodic; use weight.q = 0 on the torus");
  need(kappa >= 0.0, "weight.kappa must be nonnegative");
  need(dt > 0.0, "time.dt must be positive");
  need(t_end > 0.0, "time.t_end must be positive");
  need(snapshot_every >= 0, "time.snapshot_every must be >= 0");
  need(fit_window > 0.0 && fit_window <= t_end, "time.fit_window must lie in (0, t_end]");
  need(k >= 1, "spectral.k must be >= 1");
  need(dense_cap >= 1, "spectral.dense_cap must be >= 1");
  need(dv > 0.0, "spectral.dv must be positive");
  for (double vm : v_max_list) {
    const double steps = 2.0 * vm / dv;
    need(vm > 0.0 && std::abs(steps - std::round(steps)) < 1e-9 &&
             static_cast<long>(std::round(steps)) % 2 == 0,
         "spectral.v_max_list entries must be multiples of dv giving an odd node count");
  }
  need(n_random >= 1, "spectral.n_random must be >= 1");
  need(delta > 0.0, "nonlinear.delta must be positive");
  need(lambda0 > 0.0, "nonlinear.lambda0 must be positive");
  need(tol_picard > 0.0, "nonlinear.tol_picard must be positive");
  need(max_iters >= 1, "nonlinear.max_iters must be >= 1");
  need(gamma_L >= -3.0 && gamma_L < -2.0, "landau.gamma_L must lie in [-3, -2)");
  need(subcommand != "nonlinear" || mode == DomainMode::InflowBox3,
       "the nonlinear pipeline runs on the inflow box");
}

SpatialDomain RunConfig::domain() const {
  SpatialDomain d{mode, n_cells, side, {}};
  if (inflow == InflowKind::Gaussian && inflow_amplitude > 0.0)
    d.inflow = gaussian_inflow(inflow_amplitude, lambda0, inflow_theta);
  return d;
}

SpectralOptions RunConfig::spectral_options() const {
  SpectralOptions o;
  o.dense_cap = dense_cap;
  return o;
}

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return from_tree(tree);
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["grid"] = {{"n_per_axis", c.n_per_axis}, {"v_max", c.v_max}};
  j["kernel"] = {{"gamma", c.kernel.gamma},
                 {"b_coeff", c.kernel.b_coeff},
                 {"n_angle", c.kernel.n_angle},
                 {"epsilon_reg", c.kernel.epsilon_reg},
                 {"hard_control", c.kernel.hard_control}};
  j["domain"] = {{"mode", c.mode == DomainMode::Torus3 ? "torus" : "box"},
                 {"n_cells", c.n_cells},
                 {"side", c.side},
                 {"inflow", c.inflow == InflowKind::Zero ? "zero" : "gaussian"},
                 {"inflow_amplitude", c.inflow_amplitude},
                 {"inflow_theta", c.inflow_theta}};
  j["weight"] = {{"q", c.weight.q},
                 {"rho", c.weight.rho},
                 {"beta", c.weight.beta},
                 {"kappa", c.kappa},
                 {"c0_policy", "doubling"}};
  j["time"] = {{"dt", c.dt},
               {"t_end", c.t_end},
               {"snapshot_every", c.snapshot_every},
               {"max_snapshots", c.max_snapshots},
               {"scheme", c.scheme == CollisionScheme::BackwardEuler ? "backward_euler"
                                                                      : "crank_nicolson"},
               {"fit_window", c.fit_window}};
  static const char* kinds[] = {"random", "equilibrium", "zero", "bump", "microscopic"};
  j["initial"] = {{"kind", kinds[static_cast<int>(c.initial)]}, {"amplitude", c.amplitude}};
  j["spectral"] = {{"k", c.k},       {"dense_cap", c.dense_cap}, {"v_max_list", c.v_max_list},
                   {"dv", c.dv},     {"control", c.control},     {"n_random", c.n_random}};
  j["nonlinear"] = {{"delta", c.delta},
                    {"lambda0", c.lambda0},
                    {"tol_picard", c.tol_picard},
                    {"max_iters", c.max_iters}};
  j["landau"] = {{"gamma_L", c.gamma_L}};
  j["run"] = {{"seed", c.seed}, {"out_dir", c.out_dir.string()}, {"cache", c.use_cache}};
  return j.dump(2);
}

}  // namespace kgap
