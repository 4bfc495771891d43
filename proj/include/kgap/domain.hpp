#pragma once

#include "kgap/velocity_grid.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>

namespace kgap {

enum class DomainMode { Torus3, InflowBox3 };

// g(t, x_face, v), in the plain (unweighted) representation.
using InflowFn = std::function<double(double, const Vec3&, const Vec3&)>;
// f0(x, v)
using InitialFn = std::function<double(const Vec3&, const Vec3&)>;

// Cell-centred grid on [0, side]^3; cell index is (i0 * n + i1) * n + i2.
struct SpatialDomain {
  DomainMode mode = DomainMode::InflowBox3;
  int n_cells = 4;
  double side = 1.0;
  InflowFn inflow;  // empty means zero inflow

  void validate() const;
  double dx() const { return side / n_cells; }
  int size() const { return n_cells * n_cells * n_cells; }
  int index(int i0, int i1, int i2) const { return (i0 * n_cells + i1) * n_cells + i2; }
  std::array<int, 3> multi_index(int c) const {
    return {c / (n_cells * n_cells), (c / n_cells) % n_cells, c % n_cells};
  }
  Vec3 cell_center(int c) const;
  double cell_volume() const { return dx() * dx() * dx(); }
  // sup |x| over the closed box.
  double sup_abs_x() const { return std::sqrt(3.0) * side; }
  double inflow_value(double t, const Vec3& x, const Vec3& v) const {
    return inflow ? inflow(t, x, v) : 0.0;
  }
};

struct WeightSpec {
  double q = 0.0;
  double rho = 1.0;
  double beta = 1.5;

  void validate(bool nonlinear = false) const;
  double w(const Vec3& v) const { return std::pow(1.0 + rho * rho * v.squaredNorm(), beta); }
  double W(const Vec3& x, const Vec3& v) const;
  // q |v|^2 / <v>, the absorption produced by transporting W.
  double absorption(const Vec3& v) const { return q * v.squaredNorm() / japanese_bracket(v); }
};

double weight_W(const WeightSpec& spec, const Vec3& x, const Vec3& v);

// max over interior cells and velocity nodes of |(-v.grad_h W) - q|v|^2 W / <v>| / W.
double weight_transport_identity_residual(const WeightSpec& spec, const VelocityGrid& grid,
                                          const SpatialDomain& domain);

// max over the same points of |d_i W| / (q W), using centred differences.
double weight_gradient_ratio(const WeightSpec& spec, const VelocityGrid& grid,
                             const SpatialDomain& domain);

struct ExitTime {
  double t_b = std::numeric_limits<double>::infinity();
  std::optional<Vec3> x_b;
};

ExitTime exit_time(const SpatialDomain& domain, const Vec3& x, const Vec3& v);

// Mild solution of d_t h + v.grad h + (q|v|^2/<v> + nu_v) h = 0 with initial
// datum h0 and inflow (wWg) on the boundary. nu_v is nu at this velocity.
double mild_transport_solution(const SpatialDomain& domain, const WeightSpec& spec, double nu_v,
                               double t, const Vec3& x, const Vec3& v, const InitialFn& h0,
                               const InflowFn& g);

// Built-in inflow data.
InflowFn zero_inflow();
// amplitude * exp(-decay t) * (2 pi)^{-3/4} exp(-|v|^2 / (4 theta)).
InflowFn gaussian_inflow(double amplitude, double decay, double theta = 1.0);

}  // namespace kgap
