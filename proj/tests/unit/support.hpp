#pragma once

#include "kgap/collision.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

namespace kgap::test {

// Operators shared between test binaries are cached in the build tree.
inline std::filesystem::path cache_dir() {
  std::filesystem::path p = KGAP_TEST_CACHE;
  std::filesystem::create_directories(p);
  return p;
}

inline CollisionOperator op_for(const VelocityGrid& g, const CollisionKernel& k = {}) {
  return cached_collision_operator(g, k, cache_dir());
}

inline Vector random_vector(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Vector x(n);
  for (int i = 0; i < n; ++i) x[i] = nd(rng);
  return x;
}

inline Vector sample(const VelocityGrid& g, auto&& f) {
  Vector out(g.size());
  for (int j = 0; j < g.size(); ++j) out[j] = f(g.node(j));
  return out;
}

inline double bump(const Vec3& x) {
  double b = 1.0;
  for (int a = 0; a < 3; ++a) b *= std::pow(std::sin(std::numbers::pi * x[a]), 2);
  return b;
}

}  // namespace kgap::test
