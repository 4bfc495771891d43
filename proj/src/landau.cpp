#include "kgap/landau.hpp"

#include "kgap/collision.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kgap {

namespace {

// J_n(a) = int_{-1}^{1} t^n e^{a (t - 1)} dt for n = 0, 2.
std::pair<double, double> angular_moments(double a) {
  if (a < 2.0) {
    // e^{-a} sum_k a^k / k! int t^{n+k}
    double term = 1.0, j0 = 0.0, j2 = 0.0;
    for (int k = 0; k < 60; ++k) {
      if (k % 2 == 0) {
        j0 += term * 2.0 / (k + 1);
        j2 += term * 2.0 / (k + 3);
      }
      term *= a / (k + 1);
    }
    const double e = std::exp(-a);
    return {e * j0, e * j2};
  }
  const double e2 = std::exp(-2.0 * a);
  const double j0 = (1.0 - e2) / a;
  const double j1 = (1.0 + e2) / a - j0 / a;
  const double j2 = (1.0 - e2) / a - 2.0 * j1 / a;
  return {j0, j2};
}

struct RadialRule {
  std::vector<double> x, w;
};

RadialRule radial_rule(double r, double epsilon) {
  std::vector<double> gx, gw;
  gauss_legendre(10, 0.0, 1.0, gx, gw);
  std::vector<double> edges = {0.0};
  // graded panels resolving the mollification scale, then uniform ones
  const double scale = std::max(epsilon, 1e-3);
  for (double e = scale / 64.0; e < 4.0 * scale && e < 0.25; e *= 2.0) edges.push_back(e);
  const double hi = r + 12.0;
  double e = edges.back();
  while (e < hi) {
    e = std::min(hi, e + 0.25);
    edges.push_back(e);
  }
  RadialRule rule;
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double len = edges[p + 1] - edges[p];
    for (std::size_t i = 0; i < gx.size(); ++i) {
      rule.x.push_back(edges[p] + len * gx[i]);
      rule.w.push_back(len * gw[i]);
    }
  }
  return rule;
}

}  // namespace

std::pair<double, double> landau_radial(double r, double gamma_L, double epsilon) {
  const double p = 0.5 * (gamma_L + 2.0);
  const RadialRule rule = radial_rule(r, epsilon);
  const double pref = 2.0 * std::numbers::pi * std::pow(2.0 * std::numbers::pi, -1.5);
  double l1 = 0.0, l2 = 0.0;
  for (std::size_t i = 0; i < rule.x.size(); ++i) {
    const double rho = rule.x[i];
    const double m2 = rho * rho + epsilon * epsilon;
    if (m2 == 0.0) continue;
    const double s = rho * rho / m2;
    const auto [j0, j2] = angular_moments(r * rho);
    const double common = rule.w[i] * rho * rho * std::pow(m2, p) *
                          std::exp(-0.5 * (r - rho) * (r - rho));
    l1 += common * (j0 - s * j2);
    l2 += common * (j0 - 0.5 * s * (j0 - j2));
  }
  return {pref * l1, pref * l2};
}

Mat3 sigma_at(const Vec3& v, double gamma_L, double epsilon) {
  const double r = v.norm();
  const auto [l1, l2] = landau_radial(r, gamma_L, epsilon);
  if (r == 0.0) return l1 * Mat3::Identity();
  const Vec3 e = v / r;
  return l1 * e * e.transpose() + l2 * (Mat3::Identity() - e * e.transpose());
}

LandauCoefficients assemble_sigma(const VelocityGrid& grid, double gamma_L, double epsilon) {
  if (!(gamma_L >= -3.0 && gamma_L < -2.0))
    throw std::invalid_argument("gamma_L must lie in [-3, -2)");
  LandauCoefficients c;
  c.gamma_L = gamma_L;
  c.epsilon = epsilon < 0.0 ? 0.5 * grid.dv() : epsilon;
  const int N = grid.size();
  c.velocities = grid.nodes();
  c.sigma_ij.resize(N);
  c.sigma_i.resize(N);
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < N; ++j) {
    c.sigma_ij[j] = sigma_at(grid.node(j), gamma_L, c.epsilon);
    c.sigma_i[j] = 0.5 * c.sigma_ij[j] * grid.node(j);
  }
  return c;
}

std::pair<double, double> landau_eigs(const LandauCoefficients& coeffs, int node) {
  if (node < 0 || node >= static_cast<int>(coeffs.sigma_ij.size()))
    throw std::out_of_range("landau_eigs: node index out of range");
  const Mat3& S = coeffs.sigma_ij[node];
  const Vec3& v = coeffs.velocities[node];
  Eigen::SelfAdjointEigenSolver<Mat3> es(S);
  const auto& ev = es.eigenvalues();
  if (v.norm() == 0.0) {
    const double m = ev.mean();
    return {m, m};
  }
  // the eigenvector best aligned with v carries lambda1
  int k = 0;
  double best = -1.0;
  for (int i = 0; i < 3; ++i) {
    const double a = std::abs(es.eigenvectors().col(i).dot(v.normalized()));
    if (a > best) {
      best = a;
      k = i;
    }
  }
  const double l1 = ev[k];
  const double l2 = 0.5 * (ev.sum() - l1);
  return {l1, l2};
}

std::array<Vector, 3> velocity_gradient(const VelocityGrid& grid, const Vector& f) {
  if (f.size() != grid.size()) throw std::invalid_argument("velocity_gradient: length mismatch");
  const int n = grid.n_per_axis();
  const double h = grid.dv();
  std::array<Vector, 3> g;
  for (auto& v : g) v.resize(grid.size());
  for (int j = 0; j < grid.size(); ++j) {
    const auto m = grid.multi_index(j);
    for (int a = 0; a < 3; ++a) {
      auto lo = m, hi = m;
      if (m[a] == 0) {
        hi[a] = 1;
        g[a][j] = (f[grid.index(hi[0], hi[1], hi[2])] - f[j]) / h;
      } else if (m[a] == n - 1) {
        lo[a] = n - 2;
        g[a][j] = (f[j] - f[grid.index(lo[0], lo[1], lo[2])]) / h;
      } else {
        lo[a] -= 1;
        hi[a] += 1;
        g[a][j] = (f[grid.index(hi[0], hi[1], hi[2])] - f[grid.index(lo[0], lo[1], lo[2])]) /
                  (2.0 * h);
      }
    }
  }
  return g;
}

double landau_dissipation_norm(const VelocityGrid& grid, const LandauCoefficients& coeffs,
                               const Vector& f) {
  if (static_cast<int>(coeffs.sigma_ij.size()) != grid.size())
    throw std::invalid_argument("landau_dissipation_norm: coefficients / grid mismatch");
  const auto g = velocity_gradient(grid, f);
  Vector dens(grid.size());
  for (int j = 0; j < grid.size(); ++j) {
    const Vec3 grad(g[0][j], g[1][j], g[2][j]);
    const Vec3 half_v = 0.5 * grid.node(j);
    const Mat3& S = coeffs.sigma_ij[j];
    dens[j] = grad.dot(S * grad) + half_v.dot(S * half_v) * f[j] * f[j];
  }
  return integrate(grid, dens);
}

double landau_surrogate_norm(const VelocityGrid& grid, double gamma_L, const Vector& f) {
  const auto g = velocity_gradient(grid, f);
  Vector dens(grid.size());
  for (int j = 0; j < grid.size(); ++j) {
    const Vec3& v = grid.node(j);
    const Vec3 grad(g[0][j], g[1][j], g[2][j]);
    const double br = japanese_bracket(v);
    Vec3 par = Vec3::Zero();
    if (v.norm() > 0.0) par = v.normalized() * v.normalized().dot(grad);
    const Vec3 perp = grad - par;
    dens[j] = std::pow(br, gamma_L) * par.squaredNorm() +
              std::pow(br, gamma_L + 2.0) * (perp.squaredNorm() + f[j] * f[j]);
  }
  return integrate(grid, dens);
}

std::vector<LandauProfileRow> landau_profile(const LandauCoefficients& coeffs) {
  std::vector<LandauProfileRow> rows;
  for (std::size_t j = 0; j < coeffs.velocities.size(); ++j) {
    const auto [l1, l2] = landau_eigs(coeffs, static_cast<int>(j));
    rows.push_back({coeffs.velocities[j].norm(), l1, l2});
  }
  std::sort(rows.begin(), rows.end(),
            [](const LandauProfileRow& a, const LandauProfileRow& b) { return a.speed < b.speed; });
  return rows;
}

}  // namespace kgap
