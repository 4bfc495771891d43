#include "kgap/domain.hpp"

#include "kgap/phase_field.hpp"

#include <cmath>
#include <numbers>

namespace kgap {

void SpatialDomain::validate() const {
  if (n_cells < 2) throw std::invalid_argument("domain n_cells must be >= 2");
  if (!(side > 0.0)) throw std::invalid_argument("domain side must be positive");
}

Vec3 SpatialDomain::cell_center(int c) const {
  const auto m = multi_index(c);
  return Vec3((m[0] + 0.5) * dx(), (m[1] + 0.5) * dx(), (m[2] + 0.5) * dx());
}

void WeightSpec::validate(bool nonlinear) const {
  if (!(q >= 0.0)) throw std::invalid_argument("weight q must be >= 0");
  if (!(rho > 0.0)) throw std::invalid_argument("weight rho must be positive");
  if (nonlinear && !(beta > 1.0))
    throw std::invalid_argument("weight beta must exceed 1 for the nonlinear pipeline");
}

double WeightSpec::W(const Vec3& x, const Vec3& v) const {
  return std::exp(-q * x.dot(v) / japanese_bracket(v));
}

double weight_W(const WeightSpec& spec, const Vec3& x, const Vec3& v) { return spec.W(x, v); }

namespace {

template <class F>
void for_interior_points(const VelocityGrid& grid, const SpatialDomain& domain, F&& f) {
  const int n = domain.n_cells;
  const int lo = n >= 3 ? 1 : 0;
  const int hi = n >= 3 ? n - 2 : n - 1;
  for (int i0 = lo; i0 <= hi; ++i0)
    for (int i1 = lo; i1 <= hi; ++i1)
      for (int i2 = lo; i2 <= hi; ++i2) {
        const Vec3 x = domain.cell_center(domain.index(i0, i1, i2));
        for (int j = 0; j < grid.size(); ++j) f(x, grid.node(j));
      }
}

}  // namespace

double weight_transport_identity_residual(const WeightSpec& spec, const VelocityGrid& grid,
                                          const SpatialDomain& domain) {
  if (spec.q == 0.0) return 0.0;
  const double h = domain.dx();
  double worst = 0.0;
  for_interior_points(grid, domain, [&](const Vec3& x, const Vec3& v) {
    const double W0 = spec.W(x, v);
    double lhs = 0.0;
    for (int a = 0; a < 3; ++a) {
      Vec3 e = Vec3::Zero();
      e[a] = h;
      lhs -= v[a] * (spec.W(x + e, v) - spec.W(x - e, v)) / (2.0 * h);
    }
    worst = std::max(worst, std::abs(lhs - spec.absorption(v) * W0) / W0);
  });
  return worst;
}

double weight_gradient_ratio(const WeightSpec& spec, const VelocityGrid& grid,
                             const SpatialDomain& domain) {
  if (spec.q == 0.0) return 0.0;
  const double h = domain.dx();
  double worst = 0.0;
  for_interior_points(grid, domain, [&](const Vec3& x, const Vec3& v) {
    const double W0 = spec.W(x, v);
    for (int a = 0; a < 3; ++a) {
      Vec3 e = Vec3::Zero();
      e[a] = h;
      const double d = (spec.W(x + e, v) - spec.W(x - e, v)) / (2.0 * h);
      worst = std::max(worst, std::abs(d) / (spec.q * W0));
    }
  });
  return worst;
}

ExitTime exit_time(const SpatialDomain& domain, const Vec3& x, const Vec3& v) {
  if (domain.mode != DomainMode::InflowBox3)
    throw std::invalid_argument("exit_time is defined on the inflow box only");
  const double tol = 1e-12 * domain.side;
  for (int a = 0; a < 3; ++a)
    if (x[a] < -tol || x[a] > domain.side + tol)
      throw std::invalid_argument("exit_time: x lies outside the closed box");
  ExitTime out;
  int axis = -1;
  for (int a = 0; a < 3; ++a) {
    double t;
    if (v[a] > 0.0)
      t = std::max(0.0, x[a]) / v[a];
    else if (v[a] < 0.0)
      t = (domain.side - std::min(domain.side, x[a])) / (-v[a]);
    else
      continue;
    if (t < out.t_b) {
      out.t_b = t;
      axis = a;
    }
  }
  if (axis < 0) return out;
  Vec3 xb = x - out.t_b * v;
  for (int a = 0; a < 3; ++a) xb[a] = std::clamp(xb[a], 0.0, domain.side);
  xb[axis] = v[axis] > 0.0 ? 0.0 : domain.side;
  out.x_b = xb;
  return out;
}

double mild_transport_solution(const SpatialDomain& domain, const WeightSpec& spec, double nu_v,
                               double t, const Vec3& x, const Vec3& v, const InitialFn& h0,
                               const InflowFn& g) {
  if (t < 0.0) throw std::invalid_argument("mild_transport_solution: t must be >= 0");
  const double rate = spec.absorption(v) + nu_v;
  if (domain.mode == DomainMode::Torus3) {
    Vec3 y = x - t * v;
    for (int a = 0; a < 3; ++a) {
      y[a] = std::fmod(y[a], domain.side);
      if (y[a] < 0.0) y[a] += domain.side;
    }
    return std::exp(-rate * t) * h0(y, v);
  }
  const ExitTime ex = exit_time(domain, x, v);
  if (t <= ex.t_b) return std::exp(-rate * t) * h0(x - t * v, v);
  if (!g) return 0.0;
  const Vec3& xb = *ex.x_b;
  return std::exp(-rate * ex.t_b) * spec.w(v) * spec.W(xb, v) * g(t - ex.t_b, xb, v);
}

InflowFn zero_inflow() { return {}; }

InflowFn gaussian_inflow(double amplitude, double decay, double theta) {
  const double norm = std::pow(2.0 * std::numbers::pi, -0.75);
  return [=](double t, const Vec3&, const Vec3& v) {
    return amplitude * std::exp(-decay * t) * norm * std::exp(-v.squaredNorm() / (4.0 * theta));
  };
}

// ---------------------------------------------------------------------------

PhaseField PhaseField::from_function(const VelocityGrid& grid, const SpatialDomain& domain,
                                     const InitialFn& f, Representation r) {
  PhaseField out(grid, domain, r);
  for (int c = 0; c < domain.size(); ++c) {
    const Vec3 x = domain.cell_center(c);
    for (int j = 0; j < grid.size(); ++j) out.data(j, c) = f(x, grid.node(j));
  }
  return out;
}

Matrix weight_table(const VelocityGrid& grid, const SpatialDomain& domain, const WeightSpec& spec) {
  Matrix T(grid.size(), domain.size());
  for (int c = 0; c < domain.size(); ++c) {
    const Vec3 x = domain.cell_center(c);
    for (int j = 0; j < grid.size(); ++j) {
      const Vec3& v = grid.node(j);
      T(j, c) = spec.w(v) * spec.W(x, v);
    }
  }
  return T;
}

PhaseField to_weighted(const PhaseField& f, const VelocityGrid& grid, const SpatialDomain& domain,
                       const WeightSpec& spec) {
  if (f.rep != Representation::Plain) throw std::invalid_argument("to_weighted: field is weighted");
  PhaseField h = f;
  h.data = f.data.cwiseProduct(weight_table(grid, domain, spec));
  h.rep = Representation::Weighted;
  return h;
}

PhaseField to_plain(const PhaseField& h, const VelocityGrid& grid, const SpatialDomain& domain,
                    const WeightSpec& spec) {
  if (h.rep != Representation::Weighted) throw std::invalid_argument("to_plain: field is plain");
  PhaseField f = h;
  f.data = h.data.cwiseQuotient(weight_table(grid, domain, spec));
  f.rep = Representation::Plain;
  return f;
}

double l2_norm_sq(const PhaseField& f, const VelocityGrid& grid, const SpatialDomain& domain) {
  return f.data.squaredNorm() * domain.cell_volume() * grid.cell_volume();
}

PhaseField advect_step(const SpatialDomain& domain, const WeightSpec& spec,
                       const VelocityGrid& grid, const PhaseField& field, double dt,
                       double t_now, const Vector* nu) {
  if (!(dt > 0.0)) throw std::invalid_argument("advect_step: dt must be positive");
  const int n = domain.n_cells;
  const int Nv = grid.size();
  const int Nx = domain.size();
  if (field.data.rows() != Nv || field.data.cols() != Nx)
    throw std::invalid_argument("advect_step: field shape does not match grid and domain");
  const bool weighted = field.rep == Representation::Weighted;
  const bool torus = domain.mode == DomainMode::Torus3;
  const bool has_inflow = static_cast<bool>(domain.inflow);
  const double dx = domain.dx();
  PhaseField out = field;

  auto boundary_value = [&](double t, const Vec3& xb, const Vec3& v) {
    if (!has_inflow) return 0.0;
    const double g = domain.inflow(t, xb, v);
    return weighted ? spec.w(v) * spec.W(xb, v) * g : g;
  };

#pragma omp parallel for schedule(static)
  for (int j = 0; j < Nv; ++j) {
    const Vec3& v = grid.node(j);
    const double rate = (weighted ? spec.absorption(v) : 0.0) + (nu ? (*nu)[j] : 0.0);
    const double decay = std::exp(-rate * dt);
    const double d[3] = {dt * v[0] / dx, dt * v[1] / dx, dt * v[2] / dx};
    for (int c = 0; c < Nx; ++c) {
      const auto m = domain.multi_index(c);
      double s[3];
      for (int a = 0; a < 3; ++a) s[a] = m[a] - d[a];
      if (torus) {
        int base[3];
        double frac[3];
        for (int a = 0; a < 3; ++a) {
          const double fl = std::floor(s[a]);
          frac[a] = s[a] - fl;
          base[a] = static_cast<int>(((static_cast<long long>(fl) % n) + n) % n);
        }
        double val = 0.0;
        for (int k = 0; k < 8; ++k) {
          double w = 1.0;
          int id[3];
          for (int a = 0; a < 3; ++a) {
            const int o = (k >> (2 - a)) & 1;
            w *= o ? frac[a] : 1.0 - frac[a];
            id[a] = (base[a] + o) % n;
          }
          if (w != 0.0) val += w * field.data(j, domain.index(id[0], id[1], id[2]));
        }
        out.data(j, c) = decay * val;
        continue;
      }
      bool in_hull = true;
      for (int a = 0; a < 3; ++a) in_hull = in_hull && s[a] >= -1.0 && s[a] <= n;
      if (in_hull) {
        int base[3];
        double frac[3];
        for (int a = 0; a < 3; ++a) {
          int b = static_cast<int>(std::floor(s[a]));
          b = std::clamp(b, -1, n - 1);
          base[a] = b;
          frac[a] = s[a] - b;
        }
        double val = 0.0;
        for (int k = 0; k < 8; ++k) {
          double w = 1.0;
          int id[3];
          bool ghost = false;
          for (int a = 0; a < 3; ++a) {
            const int o = (k >> (2 - a)) & 1;
            w *= o ? frac[a] : 1.0 - frac[a];
            id[a] = base[a] + o;
            ghost = ghost || id[a] < 0 || id[a] >= n;
          }
          if (w == 0.0) continue;
          if (!ghost) {
            val += w * field.data(j, domain.index(id[0], id[1], id[2]));
          } else if (has_inflow) {
            Vec3 xb;
            for (int a = 0; a < 3; ++a) xb[a] = std::clamp((id[a] + 0.5) * dx, 0.0, domain.side);
            val += w * boundary_value(t_now + dt, xb, v);
          }
        }
        out.data(j, c) = decay * val;
      } else {
        const ExitTime ex = exit_time(domain, domain.cell_center(c), v);
        out.data(j, c) = std::exp(-rate * ex.t_b) * boundary_value(t_now + dt - ex.t_b, *ex.x_b, v);
      }
    }
  }
  return out;
}

}  // namespace kgap
