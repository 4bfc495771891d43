#include "support.hpp"

#include "kgap/evolution.hpp"

#include <fstream>

using namespace kgap;
using kgap::test::bump;
using kgap::test::op_for;

namespace {

const WeightSpec kQ0{0.0, 1.0, 1.5};
const WeightSpec kQ1{1.0, 1.0, 1.5};

SpatialDomain make(DomainMode m, int n) {
  SpatialDomain d;
  d.mode = m;
  d.n_cells = n;
  return d;
}

EvolveOptions quiet(CollisionScheme s = CollisionScheme::BackwardEuler) {
  EvolveOptions o;
  o.energy_detail = false;
  o.scheme = s;
  return o;
}

PhaseField equilibrium(const VelocityGrid& g, const SpatialDomain& d) {
  PhaseField f(g, d);
  f.data = g.mu_half().replicate(1, d.size());
  return f;
}

}  // namespace

TEST_CASE("pure transport matches the mild solution") {
  const VelocityGrid g(5, 4.0);
  CollisionOperator zero = op_for(g);
  zero.L.setZero();
  zero.nu.setZero();
  const InitialFn f0 = [](const Vec3& x, const Vec3& v) { return bump(x) * maxwellian_half(v); };
  double prev = 0.0;
  for (int n : {8, 16}) {
    const SpatialDomain t = make(DomainMode::Torus3, n);
    const double dt = 0.1 / n, T = 4 * 0.1 / 8;
    const auto r = evolve_linear(t, g, zero, kQ0, PhaseField::from_function(g, t, f0), dt, T, quiet());
    double err = 0.0;
    for (int c = 0; c < t.size(); ++c)
      for (int j = 0; j < g.size(); ++j)
        err = std::max(err, std::abs(r.final.data(j, c) -
                                     mild_transport_solution(t, kQ0, 0.0, T, t.cell_center(c), g.node(j), f0, {})));
    if (prev > 0.0) CHECK(prev / err > 1.6);
    prev = err;
  }
}

TEST_CASE("global equilibrium is stationary on the torus") {
  const VelocityGrid g(5, 4.0);
  const SpatialDomain t = make(DomainMode::Torus3, 4);
  const PhaseField f0 = equilibrium(g, t);
  const auto r = evolve_linear(t, g, op_for(g), kQ0, f0, 0.05, 1.0);
  CHECK((r.final.data - f0.data).cwiseAbs().maxCoeff() < 1e-12);
  for (double e : r.trace.e_total) CHECK(e == doctest::Approx(r.trace.e_total.front()).epsilon(1e-10));
}

TEST_CASE("zero inflow box dissipates") {
  const VelocityGrid g(5, 4.0);
  const SpatialDomain b = make(DomainMode::InflowBox3, 4);
  const auto r = evolve_linear(b, g, op_for(g), kQ1, random_field(g, b, 3), 0.05, 2.0);
  REQUIRE(r.trace.size() == 41);
  for (std::size_t k = 1; k < r.trace.size(); ++k) {
    CHECK(r.trace.l2_norm_sq[k] <= r.trace.l2_norm_sq[k - 1]);
    CHECK(r.trace.dissipation[k] >= -1e-12 * r.trace.l2_norm_sq[k]);
    CHECK(r.trace.boundary_outflux[k] >= 0.0);
    CHECK(r.trace.boundary_influx[k] == 0.0);
  }
}

TEST_CASE("evolution rejects bad input") {
  const VelocityGrid g(3, 2.0);
  const SpatialDomain b = make(DomainMode::InflowBox3, 2);
  const CollisionOperator op = op_for(g);
  PhaseField f = random_field(g, b, 1);
  CHECK_THROWS_AS(evolve_linear(b, g, op, kQ0, f, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(evolve_linear(b, VelocityGrid(5, 4.0), op, kQ0, f, 0.1, 1.0), std::invalid_argument);
  f.data(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(evolve_linear(b, g, op, kQ0, f, 0.1, 1.0), NumericalError);
}

TEST_CASE("Strang splitting with Crank-Nicolson halves is second order") {
  // Integer Courant numbers make transport exact, leaving only the splitting error.
  const VelocityGrid g(3, 2.0);
  const SpatialDomain t = make(DomainMode::Torus3, 32);
  const CollisionOperator op = op_for(g);
  const PhaseField f0 = PhaseField::from_function(g, t, [](const Vec3& x, const Vec3& v) {
    return bump(x) * (1.0 + v[0] + 0.5 * v[1] * v[2]) * maxwellian_half(v);
  });
  std::vector<Matrix> sol;
  for (double dt : {1.0 / 16, 1.0 / 32, 1.0 / 64})
    sol.push_back(evolve_linear(t, g, op, kQ0, f0, dt, 0.5, quiet(CollisionScheme::CrankNicolson)).final.data);
  const double ratio = (sol[0] - sol[1]).norm() / (sol[1] - sol[2]).norm();
  MESSAGE("Strang self-convergence ratio " << ratio);
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
}

TEST_CASE("macro fields") {
  const VelocityGrid g(5, 4.0);
  const SpatialDomain b = make(DomainMode::InflowBox3, 3);
  const MacroFields eq = macro_fields(equilibrium(g, b), g);
  CHECK((eq.a.array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(eq.b.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(eq.c.cwiseAbs().maxCoeff() < 1e-12);

  const PhaseField f = PhaseField::from_function(g, b, [](const Vec3& x, const Vec3& v) {
    return (1.0 + x[0]) * v[1] * maxwellian_half(v);
  });
  const MacroFields m = macro_fields(f, g);
  CHECK(m.a.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(m.c.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(m.b.row(0).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(m.b.row(2).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(m.b.row(1).cwiseAbs().minCoeff() > 0.1);

  // Removing Pf cell by cell leaves no macroscopic part.
  PhaseField r = random_field(g, b, 9);
  for (int c = 0; c < b.size(); ++c) r.data.col(c) -= project_P(g, r.data.col(c)).Pf;
  const MacroFields z = macro_fields(r, g);
  CHECK(z.a.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(z.b.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(z.c.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fluid residuals") {
  const VelocityGrid g(5, 4.0);
  const SpatialDomain b = make(DomainMode::InflowBox3, 4);
  const CollisionOperator op = op_for(g);
  const std::vector<PhaseField> zeros(3, PhaseField(g, b));
  CHECK(fluid_residuals(zeros, 0.1, b, g, op).max() == 0.0);

  const SpatialDomain t = make(DomainMode::Torus3, 4);
  EvolveOptions o = quiet();
  o.snapshot_every = 1;
  const auto r = evolve_linear(t, g, op, kQ0, equilibrium(g, t), 0.05, 0.2, o);
  REQUIRE(r.snapshots.size() >= 3);
  CHECK(fluid_residuals(r.snapshots, 0.05, t, g, op).max() < 1e-12);

  CHECK_THROWS_AS(fluid_residuals(std::vector<PhaseField>(2, PhaseField(g, b)), 0.1, b, g, op),
                  std::invalid_argument);
}

TEST_CASE("interaction functional and total energy") {
  const VelocityGrid g(5, 4.0);
  const SpatialDomain b = make(DomainMode::InflowBox3, 4);
  CHECK(interaction_functional(PhaseField(g, b), g, b, 0.05) == 0.0);
  CHECK(total_energy(PhaseField(g, b), g, b, kQ1, 0.05) == 0.0);
  CHECK_THROWS_AS(interaction_functional(PhaseField(g, b), g, make(DomainMode::Torus3, 4), 0.05),
                  std::invalid_argument);

  const PhaseField f = random_field(g, b, 4);
  CHECK(total_energy(f, g, b, kQ0, 0.0) == 0.5 * l2_norm_sq(f, g, b));

  // The frozen regression bound also covers purely microscopic data.
  constexpr double kEintBound = 1.0e-3;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const PhaseField m = random_field(g, b, 40 + s, true);
    const MacroFields mf = macro_fields(m, g);
    CHECK(mf.a.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(interaction_functional(m, g, b, 0.05)) <= kEintBound * std::sqrt(l2_norm_sq(m, g, b)));
  }

  const KappaCalibration kc = calibrate_kappa(b, g, kQ1, 0.05, 7, 20);
  CHECK(kc.kappa == 0.05);
  CHECK(kc.halvings == 0);
  CHECK(kc.c > 0.0);
  CHECK(kc.C / kc.c < 4.0);
}

TEST_CASE("decay fit") {
  EnergyTrace tr;
  for (int k = 0; k <= 100; ++k) {
    const double t = 0.01 * k;
    tr.times.push_back(t);
    tr.e_total.push_back(std::exp(-3.0 * t));
    tr.l2_norm_sq.push_back(2.0 * std::exp(-3.0 * t));
    tr.weighted_norm_sq.push_back(std::exp(-3.0 * t));
  }
  const DecayFit fit = fit_decay_rate(tr, 0.0, 1.0);
  CHECK(fit.lambda_fit == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.n_points == 101);
  CHECK(fit_decay_rate(tr, 0.5, 1.0, EnergySeries::L2).lambda_fit == doctest::Approx(3.0).epsilon(1e-8));
  CHECK_THROWS_AS(fit_decay_rate(tr, 2.0, 3.0), std::invalid_argument);
  tr.e_total[50] = 0.0;
  CHECK_THROWS_AS(fit_decay_rate(tr, 0.0, 1.0), std::domain_error);

  const InequalityLedger led = energy_inequality_ledger([] {
    EnergyTrace t;
    for (int k = 0; k <= 10; ++k) {
      t.times.push_back(0.1 * k);
      t.e_total.push_back(std::exp(-0.1 * k));
      t.boundary_influx.push_back(0.0);
    }
    return t;
  }(), 1.0);
  CHECK(led.n_steps == 10);
  CHECK(led.n_ok == 10);
  CHECK(led.n_nonincreasing == 10);
}

TEST_CASE("pure absorption decays at twice the rate") {
  const VelocityGrid g(3, 2.0);
  const SpatialDomain t = make(DomainMode::Torus3, 4);
  const double nu0 = 0.5;
  CollisionOperator absorb;
  absorb.nu = Vector::Constant(g.size(), nu0);
  absorb.K = Matrix::Zero(g.size(), g.size());
  absorb.L = -nu0 * Matrix::Identity(g.size(), g.size());
  PhaseField f0(g, t);
  f0.data = random_field(g, t, 5).data.col(0).replicate(1, t.size());
  const auto run = evolve_linear(t, g, absorb, kQ0, f0, 0.01, 1.0, quiet(CollisionScheme::CrankNicolson));
  CHECK(fit_decay_rate(run.trace, 0.0, 1.0, EnergySeries::L2).lambda_fit == doctest::Approx(2 * nu0).epsilon(1e-4));
}

TEST_CASE("energy trace csv") {
  const VelocityGrid g(3, 2.0);
  const SpatialDomain b = make(DomainMode::InflowBox3, 2);
  const auto r = evolve_linear(b, g, op_for(g), kQ1, random_field(g, b, 2), 0.1, 0.3);
  const auto file = kgap::test::cache_dir() / "trace_test.csv";
  r.trace.write_csv(file);
  std::ifstream in(file);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,l2,weighted,dissipation,e_int,e_total,influx,outflux");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 4);
}

TEST_CASE("macro constant") {
  const VelocityGrid g(3, 2.0);
  const SpatialDomain b = make(DomainMode::InflowBox3, 3);
  const CollisionOperator op = op_for(g);
  const auto eq = macro_constant_estimate(b, g, op, 2, 0, 0.05, [&](std::uint64_t) { return PhaseField(g, b); });
  CHECK(eq.skipped == 2);
  CHECK(eq.used == 0);

  const auto micro =
      macro_constant_estimate(b, g, op, 5, 11, 0.05, [&](std::uint64_t s) { return random_field(g, b, s, true); });
  const auto mixed = macro_constant_estimate(b, g, op, 5, 11, 0.05);
  CHECK(micro.used == 5);
  CHECK(std::isfinite(mixed.M));
  CHECK(micro.M < mixed.M);
}
