#include "kgap/selftest.hpp"

#include "kgap/landau.hpp"
#include "kgap/nonlinear.hpp"
#include "kgap/spectral.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

namespace kgap {

namespace {

class Checks {
 public:
  void add(const std::string& module, const std::string& name, bool ok, double value = NAN) {
    std::ostringstream d;
    if (!std::isnan(value)) d << value;
    out.push_back({module, name, ok, d.str()});
  }
  template <typename F>
  void guarded(const std::string& module, const std::string& name, F&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      out.push_back({module, name, false, std::string("threw: ") + e.what()});
    }
  }
  std::vector<SelftestResult> out;
};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

double bump(const Vec3& x) {
  double b = 1.0;
  for (int a = 0; a < 3; ++a) b *= std::pow(std::sin(std::numbers::pi * x[a]), 2);
  return b;
}

void grid_checks(Checks& ck) {
  ck.guarded("velocity_space", "grid (3, 1.0)", [&] {
    const VelocityGrid g(3, 1.0);
    ck.add("velocity_space", "grid (3, 1.0) has 27 nodes, dv = 1, a node at 0",
           g.size() == 27 && g.dv() == 1.0 && g.node(g.zero_node()).norm() == 0.0);
  });
  ck.guarded("velocity_space", "second moment", [&] {
    const VelocityGrid g(9, 6.0);
    Vector v2(g.size());
    for (int j = 0; j < g.size(); ++j)
      v2[j] = g.node(j).squaredNorm() * g.mu_half()[j] * g.mu_half()[j];
    const double m2 = integrate(g, v2);
    ck.add("velocity_space", "int |v|^2 mu = 3 within tol_q on (9, 6)",
           std::abs(m2 - 3.0) <= 3.0 * g.tol_q(), m2);
    ck.add("velocity_space", "integral of zero is zero",
           integrate(g, Vector::Zero(g.size())) == 0.0);
  });
  ck.guarded("velocity_space", "projection", [&] {
    const VelocityGrid g(7, 4.0);
    const auto p = project_P(g, g.mu_half());
    const double err = std::max({std::abs(p.coeffs.a - 1.0), p.coeffs.b.norm(), std::abs(p.coeffs.c)});
    ck.add("velocity_space", "project_P(mu^1/2) = (1, 0, 0)", err < 1e-12, err);
    Vector g12(g.size());
    for (int j = 0; j < g.size(); ++j) g12[j] = g.node(j)[0] * g.node(j)[1] * g.mu_half()[j];
    const auto q = project_P(g, g12);
    const double e2 = std::max({std::abs(q.coeffs.a), q.coeffs.b.norm(), std::abs(q.coeffs.c)});
    ck.add("velocity_space", "project_P(v1 v2 mu^1/2) = 0", e2 < 1e-12, e2);
  });
}

void collision_checks(Checks& ck, const VelocityGrid& g, const CollisionKernel& ker,
                      const CollisionOperator& op) {
  ck.guarded("collision_cutoff", "nu symmetry", [&] {
    double err = 0.0;
    for (int j = 0; j < g.size(); ++j) {
      const auto m = g.multi_index(j);
      err = std::max(err, std::abs(op.nu[j] - op.nu[g.reflect(j)]));
      err = std::max(err, std::abs(op.nu[j] - op.nu[g.index(m[1], m[2], m[0])]));
      err = std::max(err, std::abs(op.nu[j] - op.nu[g.index(m[1], m[0], m[2])]));
    }
    ck.add("collision_cutoff", "nu invariant under v -> -v and axis permutations",
           err <= 1e-12 * op.nu.maxCoeff(), err);
  });
  ck.guarded("collision_cutoff", "K mu^1/2", [&] {
    const Vector mh = g.mu_half();
    const double e = (op.K * mh - op.nu.cwiseProduct(mh)).norm() / op.nu.cwiseProduct(mh).norm();
    ck.add("collision_cutoff", "K mu^1/2 ~ nu mu^1/2 before correction", e < kAssemblyTolerance, e);
  });
  ck.guarded("collision_cutoff", "L invariant", [&] {
    Vector v2(g.size());
    for (int j = 0; j < g.size(); ++j) v2[j] = g.node(j)[1] * g.mu_half()[j];
    const double e = (op.L * v2).norm() / (op.L.norm() * v2.norm());
    ck.add("collision_cutoff", "L (v2 mu^1/2) = 0", e < 1e-12, e);
    Vector m(g.size());
    for (int j = 0; j < g.size(); ++j) m[j] = g.node(j)[0] * g.node(j)[1] * g.mu_half()[j];
    const double d = -m.dot(op.L * m);
    ck.add("collision_cutoff", "(g, -L g) > 0 for g = v1 v2 mu^1/2", d > 0.0, d);
  });
  ck.guarded("collision_cutoff", "Gamma", [&] {
    const Vector mh = g.mu_half();
    const Vector z = gamma_bilinear(g, ker, mh, mh);
    const double scale = (op.nu.cwiseProduct(mh)).norm();
    ck.add("collision_cutoff", "Gamma(mu^1/2, mu^1/2) ~ 0", z.norm() < kAssemblyTolerance * scale,
           z.norm() / scale);
    Vector f(g.size()), h(g.size());
    for (int j = 0; j < g.size(); ++j) {
      f[j] = (1.0 + g.node(j)[0]) * mh[j];
      h[j] = g.node(j).squaredNorm() * mh[j];
    }
    const Vector a = gamma_bilinear(g, ker, 2.0 * f, h);
    const Vector b = 2.0 * gamma_bilinear(g, ker, f, h);
    const double e = (a - b).norm() / std::max(b.norm(), 1e-300);
    ck.add("collision_cutoff", "Gamma(2f, g) = 2 Gamma(f, g)", e < 1e-13, e);
  });
}

void landau_checks(Checks& ck) {
  ck.guarded("landau_diagnostics", "sigma", [&] {
    const VelocityGrid g(7, 4.0);
    const LandauCoefficients co = assemble_sigma(g, -3.0);
    const Mat3& s0 = co.sigma_ij[g.zero_node()];
    const double iso = (s0 - s0.trace() / 3.0 * Mat3::Identity()).norm() / s0.norm();
    ck.add("landau_diagnostics", "sigma(0) is a multiple of the identity", iso < 1e-12, iso);
    const auto [l1, l2] = landau_eigs(co, g.zero_node());
    ck.add("landau_diagnostics", "lambda1 = lambda2 at v = 0", rel(l1, l2) < 1e-12, rel(l1, l2));
    double par = 0.0;
    for (int j = 0; j < g.size(); ++j) {
      const Vec3 v = g.node(j);
      if (v.norm() == 0.0) continue;
      const Vec3 sv = co.sigma_ij[j] * v;
      par = std::max(par, (sv - sv.dot(v) / v.squaredNorm() * v).norm() / sv.norm());
    }
    ck.add("landau_diagnostics", "sigma(v) v parallel to v", par < 1e-8, par);
    const Vector zero = Vector::Zero(g.size());
    ck.add("landau_diagnostics", "dissipation norm of 0 is 0",
           landau_dissipation_norm(g, co, zero) == 0.0);
    Vector f(g.size());
    for (int j = 0; j < g.size(); ++j) f[j] = (1.0 + g.node(j)[2]) * g.mu_half()[j];
    const double n1 = landau_dissipation_norm(g, co, f);
    const double n2 = landau_dissipation_norm(g, co, 2.0 * f);
    ck.add("landau_diagnostics", "norm(2f) = 4 norm(f)", rel(n2, 4.0 * n1) < 1e-14, rel(n2, 4.0 * n1));
  });
}

void transport_checks(Checks& ck) {
  ck.guarded("domain_transport", "weights", [&] {
    const VelocityGrid g(5, 4.0);
    const SpatialDomain box{DomainMode::InflowBox3, 4, 1.0, {}};
    const WeightSpec q0{0.0, 1.0, 1.5};
    const WeightSpec q1{1.0, 1.0, 1.5};
    bool one = true, zero_v = true;
    for (int c = 0; c < box.size(); ++c)
      for (int j = 0; j < g.size(); ++j) {
        one = one && q0.W(box.cell_center(c), g.node(j)) == 1.0;
        zero_v = zero_v && q1.W(box.cell_center(c), Vec3::Zero()) == 1.0;
      }
    ck.add("domain_transport", "q = 0 gives W = 1", one);
    ck.add("domain_transport", "v = 0 gives W = 1", zero_v);
    ck.add("domain_transport", "q = 0 transport identity residual is 0",
           weight_transport_identity_residual(q0, g, box) == 0.0);
  });
  ck.guarded("domain_transport", "exit time", [&] {
    const SpatialDomain box{DomainMode::InflowBox3, 4, 1.0, {}};
    const ExitTime a = exit_time(box, {0.5, 0.5, 0.5}, {0.25, 0.0, 0.0});
    const ExitTime b = exit_time(box, {0.2, 0.5, 0.5}, {-0.4, 0.0, 0.0});
    const ExitTime c = exit_time(box, {0.2, 0.5, 0.5}, Vec3::Zero());
    ck.add("domain_transport", "t_b((.5,.5,.5), (.25,0,0)) = 2 at (0,.5,.5)",
           std::abs(a.t_b - 2.0) < 1e-14 && a.x_b && (*a.x_b - Vec3(0, 0.5, 0.5)).norm() < 1e-14);
    ck.add("domain_transport", "t_b((.2,.5,.5), (-.4,0,0)) = 2 at (1,.5,.5)",
           std::abs(b.t_b - 2.0) < 1e-14 && b.x_b && (*b.x_b - Vec3(1, 0.5, 0.5)).norm() < 1e-14);
    ck.add("domain_transport", "v = 0 gives t_b = inf", std::isinf(c.t_b) && !c.x_b);
  });
  ck.guarded("domain_transport", "mild solution", [&] {
    const SpatialDomain box{DomainMode::InflowBox3, 4, 1.0, {}};
    const SpatialDomain torus{DomainMode::Torus3, 4, 1.0, {}};
    const WeightSpec q0{};
    const InitialFn f0 = [](const Vec3& x, const Vec3& v) { return (1.0 + x[0]) * maxwellian_half(v); };
    const Vec3 x{0.3, 0.6, 0.2}, v{0.7, -0.4, 0.1};
    ck.add("domain_transport", "mild solution at t = 0 is f0",
           mild_transport_solution(box, q0, 0.8, 0.0, x, v, f0, {}) == f0(x, v));
    const double t = 0.9;
    Vec3 y = x - t * v;
    for (int a = 0; a < 3; ++a) y[a] -= std::floor(y[a]);
    const double want = std::exp(-0.8 * t) * f0(y, v);
    const double got = mild_transport_solution(torus, q0, 0.8, t, x, v, f0, {});
    ck.add("domain_transport", "torus, constant nu: exp(-nu t) f0(x - t v)", rel(got, want) < 1e-14,
           rel(got, want));
    ck.add("domain_transport", "box, zero inflow, t > t_b gives 0",
           mild_transport_solution(box, q0, 0.8, 5.0, x, v, f0, {}) == 0.0);
  });
  ck.guarded("domain_transport", "advect", [&] {
    const VelocityGrid g(5, 4.0);
    const SpatialDomain box{DomainMode::InflowBox3, 4, 1.0, {}};
    const SpatialDomain torus{DomainMode::Torus3, 4, 1.0, {}};
    const WeightSpec q0{};
    const PhaseField z(g, box);
    ck.add("domain_transport", "zero field, zero inflow stays 0",
           advect_step(box, q0, g, z, 0.1, 0.0).max_abs() == 0.0);
    PhaseField one(g, torus);
    one.data.setOnes();
    const double e = (advect_step(torus, q0, g, one, 0.1, 0.0).data - one.data).cwiseAbs().maxCoeff();
    ck.add("domain_transport", "torus keeps a constant field", e < 1e-14, e);
  });
}

void evolution_checks(Checks& ck, const VelocityGrid& g, const CollisionOperator& op) {
  const SpatialDomain box{DomainMode::InflowBox3, 4, 1.0, {}};
  const SpatialDomain torus{DomainMode::Torus3, 4, 1.0, {}};
  const WeightSpec q0{};
  ck.guarded("evolution_energy", "pure transport vs mild", [&] {
    CollisionOperator zero = op;
    zero.L.setZero();
    zero.nu.setZero();
    const SpatialDomain t16{DomainMode::Torus3, 16, 1.0, {}};
    const InitialFn f0 = [](const Vec3& x, const Vec3& v) { return bump(x) * maxwellian_half(v); };
    const double dt = 0.1 / 16, T = 4 * dt;
    EvolveOptions o;
    o.energy_detail = false;
    const auto r = evolve_linear(t16, g, zero, q0, PhaseField::from_function(g, t16, f0), dt, T, o);
    double err = 0.0, ref = 0.0;
    for (int c = 0; c < t16.size(); ++c)
      for (int j = 0; j < g.size(); ++j) {
        const double ex = mild_transport_solution(t16, q0, 0.0, T, t16.cell_center(c), g.node(j), f0, {});
        err = std::max(err, std::abs(r.final.data(j, c) - ex));
        ref = std::max(ref, std::abs(ex));
      }
    // Linear interpolation: error ~ (dx^2 / dt) |v|^2 |f''| T / 8.
    ck.add("evolution_energy", "L = 0 torus run matches the mild solution (rel. 0.1)",
           err < 0.1 * ref, err / ref);
  });
  ck.guarded("evolution_energy", "equilibrium", [&] {
    PhaseField f0(g, torus);
    f0.data = g.mu_half().replicate(1, torus.size());
    EvolveOptions o;
    const auto r = evolve_linear(torus, g, op, q0, f0, 0.05, 1.0, o);
    double e = 0.0;
    for (double x : r.trace.e_total) e = std::max(e, rel(x, r.trace.e_total.front()));
    const double d = (r.final.data - f0.data).cwiseAbs().maxCoeff();
    ck.add("evolution_energy", "torus equilibrium stays put", d < 1e-12, d);
    ck.add("evolution_energy", "torus equilibrium energy constant to 1e-10", e < 1e-10, e);
  });
  ck.guarded("evolution_energy", "macro fields", [&] {
    PhaseField f(g, box);
    f.data = g.mu_half().replicate(1, box.size());
    const MacroFields m = macro_fields(f, g);
    const double e = std::max({(m.a.array() - 1.0).abs().maxCoeff(), m.b.cwiseAbs().maxCoeff(),
                               m.c.cwiseAbs().maxCoeff()});
    ck.add("evolution_energy", "mu^1/2 field has a = 1, b = 0, c = 0", e < 1e-12, e);
    const PhaseField h = PhaseField::from_function(
        g, box, [](const Vec3& x, const Vec3& v) { return x[0] * v[1] * maxwellian_half(v); });
    const MacroFields mh = macro_fields(h, g);
    const double other = std::max({mh.a.cwiseAbs().maxCoeff(), mh.b.row(0).cwiseAbs().maxCoeff(),
                                   mh.b.row(2).cwiseAbs().maxCoeff(), mh.c.cwiseAbs().maxCoeff()});
    ck.add("evolution_energy", "x1 v2 mu^1/2 has only b2", other < 1e-12 && mh.b.row(1).norm() > 0.1,
           other);
    PhaseField r = random_field(g, box, 7);
    r.data -= projection_matrix(g) * r.data;
    const MacroFields mr = macro_fields(r, g);
    const double rz = std::max({mr.a.cwiseAbs().maxCoeff(), mr.b.cwiseAbs().maxCoeff(),
                                mr.c.cwiseAbs().maxCoeff()});
    ck.add("evolution_energy", "f - Pf has zero (a, b, c)", rz < 1e-12, rz);
  });
  ck.guarded("evolution_energy", "fluid residuals", [&] {
    std::vector<PhaseField> zeros(4, PhaseField(g, box));
    ck.add("evolution_energy", "zero trajectory has zero fluid residuals",
           fluid_residuals(zeros, 0.05, box, g, op).max() == 0.0);
    PhaseField eq(g, box);
    eq.data = g.mu_half().replicate(1, box.size());
    std::vector<PhaseField> eqs(4, eq);
    const double r = fluid_residuals(eqs, 0.05, box, g, op).max();
    ck.add("evolution_energy", "equilibrium trajectory has zero fluid residuals", r < 1e-12, r);
  });
  ck.guarded("evolution_energy", "energy functionals", [&] {
    const PhaseField z(g, box);
    ck.add("evolution_energy", "E_int(0) = 0", interaction_functional(z, g, box, 0.05) == 0.0);
    ck.add("evolution_energy", "E(0) = 0", total_energy(z, g, box, WeightSpec{1.0, 1.0, 1.5}, 0.05) == 0.0);
    const PhaseField r = random_field(g, box, 3);
    const double e = total_energy(r, g, box, q0, 0.0);
    const double h = 0.5 * l2_norm_sq(r, g, box);
    ck.add("evolution_energy", "q = 0, kappa = 0 gives 1/2 |f|^2", rel(e, h) < 1e-15, rel(e, h));
  });
  ck.guarded("evolution_energy", "decay fits", [&] {
    EnergyTrace tr;
    for (int k = 0; k <= 100; ++k) {
      tr.times.push_back(0.01 * k);
      tr.e_total.push_back(std::exp(-3.0 * 0.01 * k));
    }
    const DecayFit fit = fit_decay_rate(tr, 0.0, 1.0);
    ck.add("evolution_energy", "exp(-3t) fits lambda = 3, r^2 = 1",
           std::abs(fit.lambda_fit - 3.0) < 1e-8 && std::abs(fit.r_squared - 1.0) < 1e-12,
           fit.lambda_fit);
    CollisionOperator absorb = op;
    const double nu0 = 0.5;
    absorb.nu.setConstant(nu0);
    absorb.L = -nu0 * Matrix::Identity(g.size(), g.size());
    EvolveOptions o;
    o.energy_detail = false;
    o.scheme = CollisionScheme::CrankNicolson;
    // x-independent data, so transport is exact and only the absorption acts.
    PhaseField f0(g, torus);
    f0.data = random_field(g, torus, 5).data.col(0).replicate(1, torus.size());
    const auto run = evolve_linear(torus, g, absorb, q0, f0, 0.01, 1.0, o);
    const DecayFit f2 = fit_decay_rate(run.trace, 0.0, 1.0, EnergySeries::L2);
    ck.add("evolution_energy", "pure absorption decays at 2 nu0", rel(f2.lambda_fit, 2 * nu0) < 1e-4,
           f2.lambda_fit);
  });
  ck.guarded("evolution_energy", "macro constant", [&] {
    const auto rep = macro_constant_estimate(box, g, op, 1, 0, 0.05,
                                             [&](std::uint64_t) { return PhaseField(g, box); });
    ck.add("evolution_energy", "equilibrium sample is skipped", rep.skipped == 1 && rep.used == 0);
    const auto micro = macro_constant_estimate(box, g, op, 1, 11, 0.05, [&](std::uint64_t s) {
      return random_field(g, box, s, true);
    });
    const auto mixed = macro_constant_estimate(box, g, op, 1, 11, 0.05);
    ck.add("evolution_energy", "microscopic data gives a smaller ratio",
           micro.used == 1 && micro.M < mixed.M, micro.M);
  });
}

void spectral_checks(Checks& ck, const VelocityGrid& g, const CollisionOperator& op) {
  ck.guarded("spectral_gap", "toy operator", [&] {
    const VelocityGrid g3(3, 1.0);
    CollisionOperator toy;
    const double nu0 = 0.7;
    toy.nu = Vector::Constant(g3.size(), nu0);
    toy.K = Matrix::Zero(g3.size(), g3.size());
    toy.L = -nu0 * Matrix::Identity(g3.size(), g3.size());
    const SpatialDomain torus{DomainMode::Torus3, 4, 1.0, {}};
    const FullOperator A = assemble_full_operator(torus, g3, toy);
    const Vec3 k{1, 0, 2};
    Eigen::VectorXcd x(A.dim());
    for (int c = 0; c < torus.size(); ++c) {
      const std::complex<double> e = std::exp(std::complex<double>(0, 2 * std::numbers::pi * k.dot(torus.cell_center(c))));
      for (int j = 0; j < g3.size(); ++j) x[c * g3.size() + j] = e;
    }
    const Eigen::VectorXcd y = A.apply(x);
    double err = 0.0;
    const double h = torus.dx();
    for (int j = 0; j < g3.size(); ++j) {
      const Vec3 v = g3.node(j);
      std::complex<double> sym = -nu0;
      for (int a = 0; a < 3; ++a) {
        const std::complex<double> ph = std::exp(std::complex<double>(0, 2 * std::numbers::pi * k[a] * h));
        // Upwind difference of e^{i theta x}: from the left for v > 0, the right for v < 0.
        sym -= v[a] > 0 ? v[a] * (1.0 - 1.0 / ph) / h : v[a] * (ph - 1.0) / h;
      }
      for (int c = 0; c < torus.size(); ++c)
        err = std::max(err, std::abs(y[c * g3.size() + j] - sym * x[c * g3.size() + j]));
    }
    ck.add("spectral_gap", "Fourier mode gets the upwind symbol minus nu0", err < 1e-12, err);
    const Vector rs = A.transport * Vector::Ones(A.dim());
    ck.add("spectral_gap", "torus transport block has zero row sums", rs.cwiseAbs().maxCoeff() < 1e-12,
           rs.cwiseAbs().maxCoeff());
  });
  ck.guarded("spectral_gap", "diagonal", [&] {
    Vector d(6);
    d << -1, -2, -3, -4, -5, -6;
    const SpectralReport r = dense_rightmost(d.asDiagonal().toDenseMatrix(), 3);
    ck.add("spectral_gap", "diag(-1, -2, ...) has rightmost -1",
           std::abs(r.eigenvalues.front() - std::complex<double>(-1.0, 0.0)) < 1e-14,
           r.eigenvalues.front().real());
  });
  ck.guarded("spectral_gap", "homogeneity", [&] {
    const SpatialDomain box{DomainMode::InflowBox3, 2, 1.0, {}};
    const WeightSpec ws{1.0, 1.0, 1.5};
    const PhaseField f = random_field(g, box, 9);
    const Vector x = Eigen::Map<const Vector>(f.data.data(), f.data.size());
    const double a = rayleigh_quotient(box, g, op, ws, 2.0, x);
    const double b = rayleigh_quotient(box, g, op, ws, 2.0, -3.5 * x);
    ck.add("spectral_gap", "Rayleigh quotient is scale invariant", rel(a, b) < 1e-13, rel(a, b));
  });
}

void nonlinear_checks(Checks& ck, const VelocityGrid& g, const CollisionKernel& ker,
                      const CollisionOperator& op) {
  const SpatialDomain box{DomainMode::InflowBox3, 2, 1.0, {}};
  const WeightSpec ws{1.0, 1.0, 1.5};
  ck.guarded("nonlinear_solver", "rhs", [&] {
    const GammaTensor gam(g, ker);
    const Matrix wt = weight_table(g, box, ws);
    const PhaseField z(g, box, Representation::Weighted);
    ck.add("nonlinear_solver", "rhs(0) = 0", weighted_rhs(gam, wt, z).max_abs() == 0.0);
    PhaseField h = to_weighted(random_field(g, box, 4), g, box, ws);
    h.data *= 1e-2;
    const PhaseField r1 = weighted_rhs(gam, wt, h);
    PhaseField h3 = h;
    h3.data *= 3.0;
    const PhaseField r3 = weighted_rhs(gam, wt, h3);
    const double e = (r3.data - 9.0 * r1.data).cwiseAbs().maxCoeff() / (9.0 * r1.max_abs());
    ck.add("nonlinear_solver", "rhs(3h) = 9 rhs(h)", e < 1e-13, e);
    const PicardResult pr = picard_solve(box, g, gam, op, ws, z, 0.05, 0.5);
    ck.add("nonlinear_solver", "zero data converges at the first iterate to 0",
           pr.report.converged && pr.report.n_iters == 1 && pr.trajectory.sup_norm() == 0.0);
    const LinfDecayReport lr = linf_decay_check(pr.trajectory, 0.0, 0.5, 0.3, 0.0);
    ck.add("nonlinear_solver", "zero data: decay bound holds trivially", lr.C == 0.0 && std::isfinite(lr.C));
  });
  ck.guarded("nonlinear_solver", "positivity", [&] {
    const PhaseField z(g, box);
    ck.add("nonlinear_solver", "f = 0 is positive", positivity_check(z, g).ok);
    PhaseField m(g, box);
    m.data = -2.0 * g.mu_half().replicate(1, box.size());
    ck.add("nonlinear_solver", "f = -2 mu^1/2 is not positive", !positivity_check(m, g).ok);
  });
}

}  // namespace

std::vector<SelftestResult> run_selftest() {
  Checks ck;
  grid_checks(ck);
  const VelocityGrid g(5, 4.0);
  const CollisionKernel ker;
  const CollisionOperator op = build_collision_operator(g, ker);
  collision_checks(ck, g, ker, op);
  landau_checks(ck);
  transport_checks(ck);
  evolution_checks(ck, g, op);
  spectral_checks(ck, g, op);
  nonlinear_checks(ck, g, ker, op);
  return ck.out;
}

}  // namespace kgap
