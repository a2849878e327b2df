#include <doctest.h>

#include <cmath>
#include <map>

#include "nsmlmc/mlmcmc.hpp"
#include "nsmlmc/quadrature.hpp"
#include "support.hpp"

using namespace nsmlmc;
using nsmlmc::testing::for_all;
using nsmlmc::testing::Gen;

namespace {

int bin(double x) { return x < -1.0 / 3.0 ? 0 : (x < 1.0 / 3.0 ? 1 : 2); }

// Three equal cells of [-1, 1] with potentials 0, 1, 2.
FunctionModel three_state() {
  return FunctionModel(1, [](int, const ParamPoint& p) {
    return LevelEvaluation{static_cast<double>(bin(p.xi[0])), 0.0, true};
  });
}

// Level hierarchy on one coordinate: potentials and qois that change with the level.
LevelEvaluation toy(int l, const ParamPoint& p) {
  const double x = p.xi[0];
  const double h = std::exp2(-l);
  return {0.5 * (x - 0.3) * (x - 0.3) / (0.2 + h) + h * x, std::sin(2.0 * x) + h * x * x, true};
}

double exact(int level, const std::function<double(ChainState&)>& f, const LevelModel& m) {
  const QuadratureRule r = gauss_legendre(60);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    ChainState s(m, ParamPoint({0.0}, {r.nodes[i]}));
    const double w = r.weights[i] * std::exp(-s.at(level).potential);
    num += w * f(s);
    den += w;
  }
  return num / den;
}

}  // namespace

TEST_CASE("tabulated schedules") {
  // L = 2, a = 2: M_00 = 4^2/2^2, boundary m^0 4^(2-m), interior (l+l')^2 4^(2-l-l').
  const auto s = schedule(2, 2.0);
  std::map<std::pair<int, int>, std::size_t> m;
  for (const auto& e : s) m[{e.l, e.l_prime}] = e.samples;
  CHECK(m.size() == 6);
  CHECK(m[{0, 0}] == 4);
  CHECK(m[{0, 1}] == 4);
  CHECK(m[{1, 0}] == 4);
  CHECK(m[{0, 2}] == 1);
  CHECK(m[{2, 0}] == 1);
  CHECK(m[{1, 1}] == 4);

  // L = 3, a = 3: M_00 = 64/3, boundary m 4^(3-m), interior (l+l')^3 4^(3-l-l').
  std::map<std::pair<int, int>, std::size_t> n;
  for (const auto& e : schedule(3, 3.0)) n[{e.l, e.l_prime}] = e.samples;
  CHECK(n[{0, 0}] == 22);
  CHECK(n[{1, 0}] == 16);
  CHECK(n[{2, 0}] == 8);
  CHECK(n[{3, 0}] == 3);
  CHECK(n[{1, 1}] == 32);
  CHECK(n[{1, 2}] == 27);

  // L = 4, a = 0: M_00 = 256/256, boundary 4^(4-m)/16.
  std::map<std::pair<int, int>, std::size_t> z;
  for (const auto& e : schedule(4, 0.0)) z[{e.l, e.l_prime}] = e.samples;
  CHECK(z[{0, 0}] == 1);
  CHECK(z[{1, 0}] == 4);
  CHECK(z[{2, 0}] == 1);
  CHECK(z[{1, 1}] == 16);

  CHECK_THROWS_AS(schedule(2, 1.5), ConfigError);
  CHECK(schedule(2, 1.5, true).size() == 6);
}

TEST_CASE("degrees-of-freedom cost examples") {
  // 4*1 + 4*8 + 1*64 + 4*8 + 4*(8+8) + 1*64
  CHECK(dof_cost(2, 2.0) == 260.0);
  CHECK(dof_cost(0, 2.0) == 1.0);
  const double r = dof_cost(8, 0.0) / dof_cost(7, 0.0);
  CHECK(r > 6.0);
  CHECK(r < 10.0);
}

TEST_CASE("schedule entries are at least one and cover the triangle") {
  for_all(40, 41, [](Gen& g) {
    const int L = g.integer(0, 7);
    const double a = std::vector<double>{0, 2, 3, 4}[g.integer(0, 3)];
    const auto s = schedule(L, a);
    CHECK(s.size() == static_cast<std::size_t>((L + 1) * (L + 2) / 2));
    for (const auto& e : s) {
      CHECK(e.samples >= 1);
      CHECK(e.l + e.l_prime <= L);
    }
  });
}

TEST_CASE("acceptance probability satisfies detailed balance") {
  for_all(200, 42, [](Gen& g) {
    const double a = g.uniform(0, 10), b = g.uniform(0, 10);
    CHECK(std::exp(-a) * acceptance_probability(a, b) ==
          doctest::Approx(std::exp(-b) * acceptance_probability(b, a)));
  });
  CHECK(acceptance_probability(1.0, INFINITY) == 0.0);
}

TEST_CASE("reflection stays in the box and is an involution near faces") {
  for_all(200, 43, [](Gen& g) {
    const double x = g.uniform(-7, 7);
    const double r = reflect_into_box(x);
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
  });
  CHECK(reflect_into_box(1.25) == doctest::Approx(0.75));
  CHECK(reflect_into_box(-1.5) == doctest::Approx(-0.5));
  CHECK(reflect_into_box(3.5) == doctest::Approx(-0.5));
}

TEST_CASE("three-state chain balances flows and occupancy") {
  const FunctionModel m = three_state();
  for (SamplerKind kind : {SamplerKind::Independence, SamplerKind::ReflectionRandomWalk}) {
    ChainConfig cfg;
    cfg.sampler = kind;
    cfg.seed = 17;
    std::vector<int> seq;
    run_chain(m, 0, 1, cfg, 200000, [&](ChainState& s) { seq.push_back(bin(s.point().xi[0])); });
    double count[3][3] = {};
    double occ[3] = {};
    for (std::size_t i = 0; i < seq.size(); ++i) {
      occ[seq[i]] += 1;
      if (i) count[seq[i - 1]][seq[i]] += 1;
    }
    const double z = 1 + std::exp(-1.0) + std::exp(-2.0);
    for (int i = 0; i < 3; ++i) CHECK(occ[i] / seq.size() == doctest::Approx(std::exp(-i) / z).epsilon(0.04));
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) {
        const double tol = 5.0 * std::sqrt(count[i][j] + count[j][i]) + 1.0;
        CHECK(std::abs(count[i][j] - count[j][i]) < tol);
      }
  }
}

TEST_CASE("constant potential accepts every independence proposal") {
  FunctionModel m(2, [](int, const ParamPoint& p) { return LevelEvaluation{3.0, p.xi[0], true}; });
  ChainConfig cfg;
  cfg.seed = 5;
  double sum = 0.0;
  std::size_t n = 0;
  const ChainSummary s = run_chain(m, 0, 2, cfg, 20000, [&](ChainState& st) {
    sum += st.at(0).qoi;
    ++n;
  });
  CHECK(s.accepted == s.proposals);
  CHECK(s.recorded == 20000);
  CHECK(s.burn_in == 2000);
  CHECK(std::abs(sum / n) < 0.02);
}

TEST_CASE("burn-in rule") {
  ChainConfig c;
  CHECK(c.burn_in_for(10) == 50);
  CHECK(c.burn_in_for(1000) == 100);
  CHECK(c.burn_in_for(1001) == 101);
  c.burn_in = 7;
  CHECK(c.burn_in_for(1000) == 7);
}

TEST_CASE("states cache evaluations per level") {
  int calls = 0;
  FunctionModel m(1, [&](int l, const ParamPoint&) {
    ++calls;
    return LevelEvaluation{0.0, static_cast<double>(l), true};
  });
  ChainState s(m, ParamPoint(1));
  s.at(2);
  s.at(2);
  s.at(1);
  CHECK(calls == 2);
  CHECK(s.solves() == 2);
  CHECK(s.has(1));
  CHECK_FALSE(s.has(0));
}

TEST_CASE("exact six sums telescope across levels") {
  const FunctionModel m(1, toy);
  for (int L = 0; L <= 4; ++L) {
    const ExactExpectation ex = [&](int level, const std::function<double(ChainState&)>& f) {
      return exact(level, f, m);
    };
    double telescoped = 0.0;
    for (int lp = 0; lp <= L; ++lp)
      telescoped += ex(L - lp, [lp](ChainState& s) { return s.at(lp).qoi - (lp ? s.at(lp - 1).qoi : 0.0); });
    CHECK(assemble_exact(L, ex) == doctest::Approx(telescoped).epsilon(1e-12));
  }
}

TEST_CASE("estimator approaches the finest posterior expectation") {
  const FunctionModel m(1, toy);
  EstimatorOptions o;
  o.chain.seed = 9;
  const MLMCMCReport r = estimate(3, 2.0, m, o);
  CHECK_FALSE(r.failed);
  CHECK(r.per_term.size() == 1 + 3 + 2 * (6));
  double sum = 0.0;
  for (const auto& t : r.per_term) sum += t.mean;
  CHECK(sum == doctest::Approx(r.estimate));
  CHECK(r.dof_count == dof_cost(3, 2.0));
  const double target = exact(3, [](ChainState& s) { return s.at(3).qoi; }, m);
  CHECK(std::abs(r.estimate - target) < 6.0 * r.standard_error + 0.05);
}

TEST_CASE("estimates do not depend on the thread count") {
  const FunctionModel m(1, toy);
  EstimatorOptions o;
  o.chain.seed = 77;
  const MLMCMCReport a = estimate(3, 2.0, m, o);
  o.threads = 4;
  const MLMCMCReport b = estimate(3, 2.0, m, o);
  CHECK(a.estimate == b.estimate);
  CHECK(a.standard_error == b.standard_error);
}

TEST_CASE("chain seeds separate levels and roles") {
  std::map<std::uint64_t, int> seen;
  for (int l = 0; l < 6; ++l)
    for (int lp = 0; lp < 6; ++lp)
      for (int role = 0; role < 2; ++role) seen[chain_seed(1, l, lp, role)]++;
  CHECK(seen.size() == 72);
  CHECK(chain_seed(1, 2, 3, 0) != chain_seed(1, 3, 2, 0));
  CHECK(chain_seed(1, 2, 3, 0) != chain_seed(2, 2, 3, 0));
}

TEST_CASE("batch means of independent draws match the naive variance") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> x(40000);
  for (auto& v : x) v = n(rng);
  const MeanEstimate e = batch_means(x);
  CHECK(e.variance == doctest::Approx(1.0 / 40000).epsilon(0.2));
  CHECK(std::abs(e.mean) < 0.02);
}

TEST_CASE("batch means inflate the variance of correlated series") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> x(40000);
  double y = 0.0;
  for (auto& v : x) v = y = 0.9 * y + n(rng);
  const MeanEstimate e = batch_means(x);
  // AR(1): var of the mean ~ sigma^2 / (1 - rho)^2 / n.
  CHECK(e.variance == doctest::Approx(100.0 / 40000).epsilon(0.35));
  CHECK(e.effective_samples < 0.1 * x.size());
}

TEST_CASE("sampler names round trip") {
  CHECK(parse_sampler("independence") == SamplerKind::Independence);
  CHECK(parse_sampler("reflection-random-walk") == SamplerKind::ReflectionRandomWalk);
  CHECK(to_string(SamplerKind::ReflectionRandomWalk) == "reflection-random-walk");
  CHECK_THROWS_AS(parse_sampler("pcn"), ConfigError);
}
