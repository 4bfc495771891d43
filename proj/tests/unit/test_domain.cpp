#include "support.hpp"

#include "kgap/phase_field.hpp"

using namespace kgap;
using kgap::test::bump;
using kgap::test::random_vector;

namespace {

SpatialDomain box(int n, double side = 1.0) {
  SpatialDomain d;
  d.mode = DomainMode::InflowBox3;
  d.n_cells = n;
  d.side = side;
  return d;
}

SpatialDomain torus(int n) {
  SpatialDomain d = box(n);
  d.mode = DomainMode::Torus3;
  return d;
}

}  // namespace

TEST_CASE("weight W") {
  const WeightSpec zero{0.0, 1.0, 1.5};
  CHECK(weight_W(zero, {0.3, 0.7, 0.1}, {2.0, -1.0, 4.0}) == 1.0);
  const WeightSpec one{1.0, 1.0, 1.5};
  CHECK(weight_W(one, {0.3, 0.7, 0.1}, Vec3::Zero()) == 1.0);
  CHECK(weight_W(one, {1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}) == doctest::Approx(0.49306869139523979).epsilon(1e-15));

  // e^{-qC} <= W <= e^{qC} with C = sup |x| over the box.
  const SpatialDomain d = box(4);
  const VelocityGrid g(7, 6.0);
  const double C = d.sup_abs_x();
  for (int c = 0; c < d.size(); ++c)
    for (int j = 0; j < g.size(); ++j) {
      const double W = weight_W(one, d.cell_center(c), g.node(j));
      CHECK(W >= std::exp(-C));
      CHECK(W <= std::exp(C));
    }

  CHECK_THROWS_AS(WeightSpec({-1.0, 1.0, 1.5}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(WeightSpec({1.0, 0.0, 1.5}).validate(), std::invalid_argument);
  CHECK_NOTHROW(WeightSpec({1.0, 1.0, 0.5}).validate());
  CHECK_THROWS_AS(WeightSpec({1.0, 1.0, 0.5}).validate(true), std::invalid_argument);
}

TEST_CASE("transport identity for W") {
  const VelocityGrid g(5, 4.0);
  const WeightSpec ws{1.0, 1.0, 1.5};
  const double r1 = weight_transport_identity_residual(ws, g, box(8));
  const double r2 = weight_transport_identity_residual(ws, g, box(16));
  const double r3 = weight_transport_identity_residual(ws, g, box(32));
  const double order = std::log2(r2 / r3);
  MESSAGE("orders " << std::log2(r1 / r2) << " " << order);
  CHECK(order > 1.8);
  CHECK(order < 2.2);
  CHECK(weight_transport_identity_residual(WeightSpec{0.0, 1.0, 1.5}, g, box(8)) == 0.0);
  // |d_i W| <= C q W with C = sup |v| / <v> <= 1, up to the centred-difference error.
  CHECK(weight_gradient_ratio(ws, g, box(16)) <= 1.0 + 1e-2);
}

TEST_CASE("exit time") {
  const SpatialDomain d = box(4);
  ExitTime e = exit_time(d, {0.5, 0.5, 0.5}, {0.25, 0.0, 0.0});
  CHECK(e.t_b == doctest::Approx(2.0).epsilon(1e-15));
  REQUIRE(e.x_b);
  CHECK((*e.x_b - Vec3(0.0, 0.5, 0.5)).norm() < 1e-15);

  e = exit_time(d, {0.2, 0.5, 0.5}, {-0.4, 0.0, 0.0});
  CHECK(e.t_b == doctest::Approx(2.0).epsilon(1e-15));
  REQUIRE(e.x_b);
  CHECK((*e.x_b - Vec3(1.0, 0.5, 0.5)).norm() < 1e-15);

  e = exit_time(d, {0.2, 0.5, 0.5}, Vec3::Zero());
  CHECK(std::isinf(e.t_b));
  CHECK_FALSE(e.x_b);

  CHECK_THROWS_AS(exit_time(d, {1.5, 0.5, 0.5}, {1.0, 0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(exit_time(torus(4), {0.5, 0.5, 0.5}, {1.0, 0.0, 0.0}), std::invalid_argument);

  SUBCASE("consistency on random rays") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0), s(-3.0, 3.0);
    for (int t = 0; t < 500; ++t) {
      const Vec3 x{u(rng), u(rng), u(rng)};
      const Vec3 v{s(rng), s(rng), s(rng)};
      const ExitTime ex = exit_time(d, x, v);
      REQUIRE(ex.x_b);
      const Vec3 xb = *ex.x_b;
      CHECK((xb - (x - ex.t_b * v)).norm() < 1e-12);
      const double face = std::min(xb.minCoeff(), 1.0 - xb.maxCoeff());
      CHECK(std::abs(face) < 1e-12);
      for (double f : {0.25, 0.5, 0.75}) {
        const Vec3 p = x - f * ex.t_b * v;
        CHECK(p.minCoeff() >= -1e-12);
        CHECK(p.maxCoeff() <= 1.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("mild transport solution") {
  const WeightSpec q0{0.0, 1.0, 1.5};
  const InitialFn f0 = [](const Vec3& x, const Vec3& v) { return bump(x) * (1.0 + v[0]); };
  const Vec3 x{0.3, 0.6, 0.45}, v{0.7, -0.2, 0.1};

  CHECK(mild_transport_solution(box(4), WeightSpec{1.0, 1.0, 1.5}, 0.7, 0.0, x, v, f0, zero_inflow()) == f0(x, v));

  const double nu0 = 0.5, t = 0.3;
  auto wrap = [](Vec3 p) {
    for (int a = 0; a < 3; ++a) p[a] -= std::floor(p[a]);
    return p;
  };
  CHECK(mild_transport_solution(torus(4), q0, nu0, t, x, v, f0, {}) ==
        doctest::Approx(std::exp(-nu0 * t) * f0(wrap(x - t * v), v)).epsilon(1e-14));
  // Past the exit time the zero inflow wins outright.
  const double tb = exit_time(box(4), x, v).t_b;
  CHECK(mild_transport_solution(box(4), q0, nu0, tb + 0.1, x, v, f0, zero_inflow()) == 0.0);
  CHECK_THROWS_AS(mild_transport_solution(box(4), q0, nu0, -1.0, x, v, f0, zero_inflow()), std::invalid_argument);

  // Inflow branch: exp(-nu t_b) (wW g)(t - t_b, x_b, v); W = 1 at q = 0.
  const InflowFn g = gaussian_inflow(2.0, 0.5);
  const ExitTime ex = exit_time(box(4), x, v);
  CHECK(mild_transport_solution(box(4), q0, nu0, tb + 0.1, x, v, f0, g) ==
        doctest::Approx(std::exp(-nu0 * tb) * q0.w(v) * g(0.1, *ex.x_b, v)).epsilon(1e-14));
}

TEST_CASE("advect step") {
  const VelocityGrid g(5, 4.0);
  const WeightSpec q0{0.0, 1.0, 1.5};

  SUBCASE("zero stays zero") {
    const PhaseField z(g, box(6));
    CHECK(advect_step(box(6), q0, g, z, 0.1, 0.0).max_abs() == 0.0);
  }
  SUBCASE("x-constant fields are fixed on the torus") {
    const PhaseField f = PhaseField::from_function(g, torus(6), [](const Vec3&, const Vec3& v) {
      return maxwellian_half(v) * (1.0 + v[1]);
    });
    const PhaseField h = advect_step(torus(6), q0, g, f, 0.137, 0.0);
    CHECK((h.data - f.data).cwiseAbs().maxCoeff() <= 1e-14 * f.max_abs());
  }
  SUBCASE("maximum principle with zero inflow") {
    const WeightSpec ws{1.0, 1.0, 1.5};
    PhaseField f(g, box(6), Representation::Weighted);
    f.data = random_vector(g.size() * box(6).size(), 77).reshaped(g.size(), box(6).size());
    for (double dt : {0.01, 0.2, 1.5}) CHECK(advect_step(box(6), ws, g, f, dt, 0.0).max_abs() <= f.max_abs());
  }
  // dt tied to dx keeps the fractional Courant numbers fixed across refinements.
  SUBCASE("two half steps match one step to interpolation order") {
    double prev = 0.0;
    for (int n : {8, 16, 32}) {
      const SpatialDomain d = torus(n);
      const PhaseField f = PhaseField::from_function(g, d, [](const Vec3& x, const Vec3& v) {
        return bump(x) * maxwellian_half(v);
      });
      const double dt = 0.15 * d.dx();
      const PhaseField one = advect_step(d, q0, g, f, dt, 0.0);
      const PhaseField two = advect_step(d, q0, g, advect_step(d, q0, g, f, dt / 2, 0.0), dt / 2, dt / 2);
      const double diff = (one.data - two.data).cwiseAbs().maxCoeff() / f.max_abs();
      if (prev > 0.0) CHECK(prev / diff > 3.0);
      prev = diff;
    }
  }
  SUBCASE("agrees with the mild solution on the box") {
    const double nu0 = 0.5;
    const InitialFn f0 = [](const Vec3& x, const Vec3& v) { return bump(x) * maxwellian_half(v); };
    const Vector nu = Vector::Constant(g.size(), nu0);
    double prev = 0.0;
    for (int n : {8, 16, 32}) {
      const SpatialDomain d = box(n);
      const double dt = 0.15 * d.dx();
      const PhaseField h = advect_step(d, q0, g, PhaseField::from_function(g, d, f0), dt, 0.0, &nu);
      double err = 0.0;
      for (int c = 0; c < d.size(); ++c)
        for (int j = 0; j < g.size(); ++j)
          err = std::max(err, std::abs(h.data(j, c) - mild_transport_solution(d, q0, nu0, dt, d.cell_center(c),
                                                                               g.node(j), f0, zero_inflow())));
      if (prev > 0.0) CHECK(prev / err > 3.0);
      prev = err;
    }
  }
  SUBCASE("rejects bad input") {
    const PhaseField f(g, box(4));
    CHECK_THROWS_AS(advect_step(box(4), q0, g, f, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(advect_step(box(6), q0, g, f, 0.1, 0.0), std::invalid_argument);
  }
}

TEST_CASE("weighted round trip") {
  const VelocityGrid g(5, 4.0);
  const SpatialDomain d = box(4);
  const WeightSpec ws{1.0, 1.0, 1.5};
  const PhaseField f = PhaseField::from_function(g, d, [](const Vec3& x, const Vec3& v) {
    return bump(x) * maxwellian_half(v) + x[0] * v[2];
  });
  const PhaseField back = to_plain(to_weighted(f, g, d, ws), g, d, ws);
  CHECK((back.data - f.data).cwiseAbs().maxCoeff() <= 1e-12 * f.max_abs());
  CHECK_THROWS_AS(to_plain(f, g, d, ws), std::invalid_argument);
}
