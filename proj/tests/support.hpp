#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "nsmlmc/common.hpp"
#include "nsmlmc/parametrization.hpp"

namespace nsmlmc::testing {

/// Seeded source of random test inputs for property checks.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  Vec2 point(double lo = 0.0, double hi = 1.0) { return {uniform(lo, hi), uniform(lo, hi)}; }
  std::vector<double> vector(std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }
  ParamPoint param(std::size_t dim) { return ParamPoint(vector(dim, -1.0, 1.0), vector(dim, -1.0, 1.0)); }
  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Runs `body` on `cases` independent generators.
template <class Body>
void for_all(int cases, std::uint64_t seed, Body&& body) {
  for (int c = 0; c < cases; ++c) {
    Gen g(seed * 1000003u + static_cast<std::uint64_t>(c));
    body(g);
  }
}

}  // namespace nsmlmc::testing
