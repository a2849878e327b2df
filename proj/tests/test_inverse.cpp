#include <doctest.h>

#include <cmath>

#include "nsmlmc/inverse_problem.hpp"
#include "support.hpp"

using namespace nsmlmc;
using nsmlmc::testing::for_all;
using nsmlmc::testing::Gen;

namespace {

ObservationSet small_set(std::vector<double> values, Eigen::MatrixXd cov) {
  return ObservationSet({{0.1, 0.2}, {0.3, 0.4}}, {0.5}, std::move(values), std::move(cov));
}

}  // namespace

TEST_CASE("mismatch with a scaled identity covariance") {
  const ObservationSet obs = small_set({1, 2, 3, 4}, 2.0 * Eigen::MatrixXd::Identity(4, 4));
  CHECK(obs.mismatch({1, 2, 3, 4}) == 0.0);
  CHECK(obs.mismatch({2, 3, 4, 5}) == doctest::Approx(1.0));
  CHECK(obs.mismatch({1, 2, 3, 0}) == doctest::Approx(4.0));
}

TEST_CASE("mismatch with a correlated covariance") {
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(4, 4);
  c(0, 1) = c(1, 0) = 0.5;
  const ObservationSet obs = small_set({0, 0, 0, 0}, c);
  // r = (1, 1, 0, 0): r^T C^-1 r = 2 / 1.5
  CHECK(obs.mismatch({1, 1, 0, 0}) == doctest::Approx(0.5 * 2.0 / 1.5));
  // r = (1, -1, 0, 0): r^T C^-1 r = 2 / 0.5
  CHECK(obs.mismatch({1, -1, 0, 0}) == doctest::Approx(0.5 * 2.0 / 0.5));
}

TEST_CASE("mismatch is invariant under relabelling tracers") {
  for_all(20, 31, [](Gen& g) {
    const std::vector<double> y = g.vector(8, -1, 1), p = g.vector(8, -1, 1);
    const std::vector<double> d = g.vector(4, 0.5, 2.0);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(8, 8);
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int comp = 0; comp < 2; ++comp) c(2 * (k * 2 + j) + comp, 2 * (k * 2 + j) + comp) = d[j * 2 + comp];
    ObservationSet a({{0, 0}, {0.5, 0.5}}, {0.5, 1.0}, y, c);
    // Swap tracers 0 and 1 in every block.
    auto swap = [](std::vector<double> v) {
      for (int k = 0; k < 2; ++k)
        for (int comp = 0; comp < 2; ++comp) std::swap(v[4 * k + comp], v[4 * k + 2 + comp]);
      return v;
    };
    Eigen::MatrixXd cs = Eigen::MatrixXd::Zero(8, 8);
    for (int k = 0; k < 2; ++k)
      for (int comp = 0; comp < 2; ++comp) {
        cs(4 * k + comp, 4 * k + comp) = c(4 * k + 2 + comp, 4 * k + 2 + comp);
        cs(4 * k + 2 + comp, 4 * k + 2 + comp) = c(4 * k + comp, 4 * k + comp);
      }
    ObservationSet b({{0.5, 0.5}, {0, 0}}, {0.5, 1.0}, swap(y), cs);
    CHECK(a.mismatch(p) == doctest::Approx(b.mismatch(swap(p))));
  });
}

TEST_CASE("noise samples have the prescribed covariance") {
  Eigen::MatrixXd c(4, 4);
  c << 2, 0.5, 0, 0, 0.5, 1, 0, 0, 0, 0, 1, 0.2, 0, 0, 0.2, 0.5;
  const ObservationSet obs = small_set({0, 0, 0, 0}, c);
  std::mt19937_64 rng(3);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(4, 4);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto e = obs.sample_noise(rng);
    const Eigen::Map<const Eigen::VectorXd> v(e.data(), 4);
    s += v * v.transpose();
  }
  s /= n;
  CHECK((s - c).cwiseAbs().maxCoeff() < 0.03);
}

TEST_CASE("invalid observation sets are rejected") {
  CHECK_THROWS_AS(small_set({1, 2, 3}, Eigen::MatrixXd::Identity(3, 3)), ConfigError);
  Eigen::MatrixXd neg = Eigen::MatrixXd::Identity(4, 4);
  neg(2, 2) = -1;
  CHECK_THROWS_AS(small_set({1, 2, 3, 4}, neg), ConfigError);
  Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(4, 4);
  asym(0, 1) = 0.3;
  CHECK_THROWS_AS(small_set({1, 2, 3, 4}, asym), ConfigError);
  CHECK_THROWS_AS(ObservationSet({{0, 0}}, {1.0, 0.5}, {0, 0, 0, 0}, Eigen::MatrixXd::Identity(4, 4)), ConfigError);
}

TEST_CASE("observation times must lie on the level grid") {
  const ObservationSet obs({{0.1, 0.1}}, {0.3}, {0, 0}, Eigen::MatrixXd::Identity(2, 2));
  CHECK_THROWS_AS(obs.check_time_grid(make_level_spec(0, 4, 4, 1.0, 1)), ConfigError);
  const ObservationSet ok({{0.1, 0.1}}, {0.5, 1.0}, {0, 0, 0, 0}, Eigen::MatrixXd::Identity(4, 4));
  CHECK_NOTHROW(ok.check_time_grid(make_level_spec(0, 4, 4, 1.0, 1)));
}

TEST_CASE("zero-velocity forward map returns the initial positions") {
  FeProblem pb(make_level_spec(1, 4, 4, 1.0, 0), FieldExpansion{}, FeSolverOptions{});
  const ObservationSet obs({{0.1, 0.2}, {0.6, 0.3}}, {0.5, 1.0}, std::vector<double>(8, 0.0),
                           Eigen::MatrixXd::Identity(8, 8));
  const auto g = forward_map(pb, ParamPoint{}, obs);
  const std::vector<double> expect{0.1, 0.2, 0.6, 0.3, 0.1, 0.2, 0.6, 0.3};
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(expect[i]));
}

TEST_CASE("fe and spectral forward maps agree as the level grows") {
  const FieldExpansion e = make_expansion("none", "lagrangian-1d", 1, 2.0);
  const ObservationSet obs({{0.491, 0.908}, {0.725, 0.575}}, {0.5, 1.0}, std::vector<double>(8, 0.0),
                           Eigen::MatrixXd::Identity(8, 8));
  ParamPoint p(1);
  p.xi[0] = 0.5;
  SpectralConfig sc;
  sc.resolution = 32;
  sc.time_step = 1e-3;
  const ForwardResult ref = spectral_forward(sc, e, p, obs);
  double prev = 1e300;
  for (int l = 1; l <= 3; ++l) {
    FeProblem pb(make_level_spec(l, 4, 4, 1.0, 1), e, FeSolverOptions{});
    const ForwardResult r = fe_forward(pb, p, obs);
    double d = 0.0;
    for (std::size_t i = 0; i < r.observations.size(); ++i)
      d = std::max(d, std::abs(r.observations[i] - ref.observations[i]));
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("fe level model reports solver failures as infinite potential") {
  const FieldExpansion e = make_expansion("none", "lagrangian-1d", 1, 2.0);
  const ObservationSet obs({{0.1, 0.1}}, {0.5, 1.0}, {0, 0, 0, 0}, Eigen::MatrixXd::Identity(4, 4));
  FeModelConfig mc;
  mc.solver.krylov.max_iterations = 1;
  mc.solver.krylov.tolerance = 1e-30;
  FeLevelModel m(e, obs, mc);
  const LevelEvaluation r = m.evaluate(1, ParamPoint({0.0}, {1.0}));
  CHECK_FALSE(r.ok);
  CHECK(std::isinf(r.potential));
  CHECK(m.failures() == 1);
}
