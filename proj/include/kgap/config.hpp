#pragma once

#include "kgap/collision.hpp"
#include "kgap/domain.hpp"
#include "kgap/evolution.hpp"
#include "kgap/spectral.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace kgap {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class InflowKind { Zero, Gaussian };
enum class InitialKind { Random, Equilibrium, Zero, Bump, Microscopic };

struct RunConfig {
  // [grid]
  int n_per_axis = 9;
  double v_max = 6.0;
  // [kernel]
  CollisionKernel kernel;
  // [domain]
  DomainMode mode = DomainMode::InflowBox3;
  int n_cells = 4;
  double side = 1.0;
  InflowKind inflow = InflowKind::Zero;
  double inflow_amplitude = 0.0;  // 0 with gaussian: scaled to delta / 2 in nonlinear runs
  double inflow_theta = 1.0;
  // [weight]
  WeightSpec weight{1.0, 1.0, 1.5};
  double kappa = 0.05;
  // [time]
  double dt = 0.05;
  double t_end = 10.0;
  int snapshot_every = 0;
  std::size_t max_snapshots = 20000;
  CollisionScheme scheme = CollisionScheme::BackwardEuler;
  double fit_window = 1.0;  // fit over [t_end - fit_window, t_end]
  // [initial]
  InitialKind initial = InitialKind::Random;
  double amplitude = 1.0;
  // [spectral]
  int k = 6;
  int dense_cap = 6000;
  std::vector<double> v_max_list{4.0, 6.0, 8.0};
  double dv = 2.0;
  bool control = true;  // gamma = +0.5 collision-only sweep
  int n_random = 1000;
  // [nonlinear]
  double delta = 1e-2;
  double lambda0 = 0.5;
  double tol_picard = 1e-10;
  int max_iters = 12;
  // [landau]
  double gamma_L = -3.0;
  // [run]
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "out";
  bool use_cache = true;

  void validate(const std::string& subcommand) const;
  VelocityGrid grid() const { return VelocityGrid(n_per_axis, v_max); }
  SpatialDomain domain() const;
  SpectralOptions spectral_options() const;
};

// INI file with sections; unknown keys are rejected.
RunConfig load_config(const std::filesystem::path& file);
RunConfig parse_config(const std::string& text);
std::string config_to_json(const RunConfig& cfg);

}  // namespace kgap
