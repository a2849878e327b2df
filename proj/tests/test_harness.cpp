#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nsmlmc/harness.hpp"
#include "support.hpp"

using namespace nsmlmc;
using nsmlmc::testing::for_all;
using nsmlmc::testing::Gen;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nsmlmc-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

LevelEvaluation toy(int l, const ParamPoint& p) {
  const double x = p.xi[0], h = std::exp2(-l);
  return {0.5 * (x - 0.2) * (x - 0.2) / 0.3 + h * x, std::cos(x) + h, true};
}

const char* kLayout =
    "tracer,time,x,y\n0,0,0.491,0.908\n1,0,0.012,0.312\n0,0.5,0.6,0.8\n1,0.5,0.2,0.2\n0,1,1.1,0.3\n1,1,0.7,-0.3\n";

}  // namespace

TEST_CASE("constant qoi gives the constant for any potential") {
  for_all(20, 51, [](Gen& g) {
    const double c = g.uniform(-5, 5);
    const double a = g.uniform(0, 4), b = g.uniform(-1, 1);
    const double v = tensor_posterior_expectation(
        {-1.0}, {1.0}, 16, [&](const std::vector<double>& x) { return PotentialAndQoi{a * (x[0] - b) * (x[0] - b), c}; });
    CHECK(v == doctest::Approx(c).epsilon(1e-13));
  });
}

TEST_CASE("posterior expectation is invariant under affine change of interval") {
  for_all(20, 52, [](Gen& g) {
    const double lo = g.uniform(-3, 0), hi = lo + g.uniform(0.5, 4);
    auto phi = [](double y) { return 0.7 * y * y + 0.2 * y; };
    auto q = [](double y) { return std::sin(y) + y * y; };
    const double direct = tensor_posterior_expectation(
        {lo}, {hi}, 24, [&](const std::vector<double>& x) { return PotentialAndQoi{phi(x[0]), q(x[0])}; });
    const double mapped = tensor_posterior_expectation({-1.0}, {1.0}, 24, [&](const std::vector<double>& x) {
      const double y = lo + 0.5 * (hi - lo) * (x[0] + 1.0);
      return PotentialAndQoi{phi(y), q(y)};
    });
    CHECK(direct == doctest::Approx(mapped).epsilon(1e-12));
  });
}

TEST_CASE("gaussian posterior moment from tensor quadrature") {
  // Phi = (x - m)^2 / 2 on [-8, 8] approximates the full Gaussian: E[x^2] = 1 + m^2.
  const double m = 0.4;
  const double v = tensor_posterior_expectation({-8.0}, {8.0}, 60, [&](const std::vector<double>& x) {
    return PotentialAndQoi{0.5 * (x[0] - m) * (x[0] - m), x[0] * x[0]};
  });
  CHECK(v == doctest::Approx(1.0 + m * m).epsilon(1e-10));
}

TEST_CASE("two-dimensional tensor rule factorizes") {
  const auto f = [](const std::vector<double>& x) {
    return PotentialAndQoi{x[0] * x[0] + 0.5 * x[1], std::exp(x[0]) * x[1]};
  };
  std::vector<QuadratureNode> nodes;
  const double v = tensor_posterior_expectation({-1, -1}, {1, 1}, 20, f, 2, &nodes);
  CHECK(nodes.size() == 400);
  const double e0 = tensor_posterior_expectation({-1}, {1}, 20, [](const std::vector<double>& x) {
    return PotentialAndQoi{x[0] * x[0], std::exp(x[0])};
  });
  const double e1 = tensor_posterior_expectation({-1}, {1}, 20, [](const std::vector<double>& x) {
    return PotentialAndQoi{0.5 * x[0], x[0]};
  });
  CHECK(v == doctest::Approx(e0 * e1).epsilon(1e-12));
}

TEST_CASE("quadrature order doubling converges for a smooth one-dimensional integrand") {
  const auto f = [](const std::vector<double>& x) {
    return PotentialAndQoi{2.0 * (x[0] - 0.3) * (x[0] - 0.3), std::tanh(x[0])};
  };
  const double a = tensor_posterior_expectation({-1}, {1}, 32, f);
  const double b = tensor_posterior_expectation({-1}, {1}, 64, f);
  CHECK(std::abs(a - b) < 1e-6);
}

TEST_CASE("config files parse and reject unknown keys") {
  const fs::path d = scratch("config");
  write(d / "a.cfg",
        "[problem]\nviscosity = 0.05\n[mlmcmc]\nlevels = 3\nenlargement = 3\nsampler = reflection-random-walk\n"
        "burn_in = 20\n[discretization]\ntruncation = 1, 1, 2\n[reference]\nvalue = -1.5\n");
  const ExperimentConfig c = load_config((d / "a.cfg").string());
  CHECK(c.viscosity == 0.05);
  CHECK(c.levels == 3);
  CHECK(c.enlargement == 3.0);
  CHECK(c.chain.sampler == SamplerKind::ReflectionRandomWalk);
  CHECK(c.chain.burn_in == 20);
  CHECK(c.truncation == std::vector<std::size_t>{1, 1, 2});
  CHECK(c.reference_value.value() == -1.5);
  CHECK(c.resolve("x.csv") == (d / "x.csv").string());

  write(d / "b.cfg", "[problem]\nviscosty = 0.05\n");
  CHECK_THROWS_AS(load_config((d / "b.cfg").string()), ConfigError);
  write(d / "c.cfg", "[solver]\nx = 1\n");
  CHECK_THROWS_AS(load_config((d / "c.cfg").string()), ConfigError);
  write(d / "e.cfg", "[problem]\nviscosity = -1\n");
  CHECK_THROWS_AS(load_config((d / "e.cfg").string()).validate(), ConfigError);
}

TEST_CASE("config hash tracks every setting") {
  ExperimentConfig a, b;
  CHECK(config_hash(a) == config_hash(b));
  b.chain.seed = a.chain.seed + 1;
  CHECK(config_hash(a) != config_hash(b));
  const auto h = provenance_header(a);
  CHECK(h.size() == 3);
  CHECK(h[0].rfind("config_hash=", 0) == 0);
  CHECK(h[1] == std::string("code_version=") + code_version());
}

TEST_CASE("observation files round trip") {
  const fs::path d = scratch("obs");
  write(d / "o.csv", kLayout);
  ExperimentConfig c;
  const ObservationSet o = read_observation_csv((d / "o.csv").string(), c);
  CHECK(o.tracer_count() == 2);
  CHECK(o.time_count() == 2);
  CHECK(o.value(1, 1).y == -0.3);
  write_observation_csv(o, (d / "p.csv").string(), {"x=1"});
  const ObservationSet p = read_observation_csv((d / "p.csv").string(), c);
  CHECK(p.values() == o.values());
  CHECK(p.initial_positions() == o.initial_positions());
  write(d / "bad.csv", "tracer,time,x,y\n0,0.5,1,1\n");
  CHECK_THROWS_AS(read_observation_table((d / "bad.csv").string()), ConfigError);
}

TEST_CASE("generated data with zero noise equals the forward map and is reproducible") {
  const fs::path d = scratch("gen");
  write(d / "o.csv", kLayout);
  ExperimentConfig c;
  c.reference_resolution = 16;
  c.reference_time_step = 1e-2;
  c.noise_variance = 0.0;
  const ObservationTable layout = read_observation_table((d / "o.csv").string());
  const GeneratedData g = generate_data(c, layout, 3);
  CHECK(g.observations.values() == g.noiseless);
  CHECK(g.observations.time_count() == 2);

  c.noise_variance = 1.0;
  const GeneratedData a = generate_data(c, layout, 3);
  const GeneratedData b = generate_data(c, layout, 3);
  CHECK(a.observations.values() != a.noiseless);
  write_generated_data(a, c, (d / "a.csv").string());
  write_generated_data(b, c, (d / "b.csv").string());
  CHECK(slurp(d / "a.csv") == slurp(d / "b.csv"));
  CHECK(slurp(d / "a.csv.truth") == slurp(d / "b.csv.truth"));
}

TEST_CASE("reference refuses more than three coordinates") {
  ExperimentConfig c;
  c.initial_family = "fourier-decay";
  c.forcing_family = "fourier-decay";
  c.modes = 2;
  const ObservationSet o({{0.1, 0.1}}, {0.5}, {0, 0}, Eigen::MatrixXd::Identity(2, 2));
  CHECK_THROWS_WITH_AS(reference_posterior(c, o, reference_options(c)), doctest::Contains("MLMCMC"), ConfigError);
}

TEST_CASE("minimal experiment emits one row and repeats byte for byte") {
  const FunctionModel m(1, toy);
  ExperimentConfig c;
  ExperimentOptions o;
  o.min_level = 1;
  o.max_level = 1;
  o.deterministic = true;
  const auto rows = run_experiment(c, m, 1.0, o);
  CHECK(rows.size() == 1);
  CHECK_FALSE(rows[0].failed);
  CHECK(rows[0].wall_time == 0.0);

  const fs::path d = scratch("det");
  o.max_level = 3;
  o.repetitions = 2;
  o.report_directory = (d / "r1").string();
  write_convergence_csv(run_experiment(c, m, 1.0, o), (d / "a.csv").string(), provenance_header(c));
  o.report_directory = (d / "r2").string();
  write_convergence_csv(run_experiment(c, m, 1.0, o), (d / "b.csv").string(), provenance_header(c));
  CHECK(slurp(d / "a.csv") == slurp(d / "b.csv"));
  CHECK(slurp(d / "r1" / "report-L3-r1.csv") == slurp(d / "r2" / "report-L3-r1.csv"));
  const auto back = read_convergence_csv((d / "a.csv").string());
  CHECK(back.size() == 6);
  CHECK(back[5].L == 3);
}

TEST_CASE("failed runs are recorded and the sweep continues") {
  const FunctionModel m(1, [](int l, const ParamPoint& p) {
    if (l >= 2) return LevelEvaluation{};
    return toy(l, p);
  });
  ExperimentConfig c;
  ExperimentOptions o;
  o.min_level = 1;
  o.max_level = 2;
  o.deterministic = true;
  const auto rows = run_experiment(c, m, 1.0, o);
  CHECK(rows.size() == 2);
  CHECK_FALSE(rows[0].failed);
  CHECK(rows[1].failed);
  CHECK_FALSE(rows[1].failure.empty());
}

TEST_CASE("aggregation and fitted reduction") {
  std::vector<ConvergenceRow> rows;
  for (int L = 1; L <= 4; ++L)
    for (int r = 0; r < 2; ++r) {
      ConvergenceRow row;
      row.L = L;
      row.repetition = r;
      row.error = std::exp2(-L) * (r ? 1.5 : 0.5);
      rows.push_back(row);
    }
  const auto pts = aggregate_convergence(rows);
  CHECK(pts.size() == 4);
  CHECK(pts[0].mean_error == doctest::Approx(0.5));
  CHECK(pts[0].error_spread == doctest::Approx(0.25));
  CHECK(fitted_reduction_per_level(pts) == doctest::Approx(2.0));
}

TEST_CASE("fe chain mean agrees with fe quadrature at a coarse level") {
  ExperimentConfig c;
  c.forcing_family = "lagrangian-1d";
  c.modes = 1;
  c.xi_bounds.lower = 0.0;
  c.xi_bounds.upper = 1.0;
  const ObservationSet obs({{0.2, 0.3}, {0.7, 0.6}}, {0.5, 1.0}, {0.25, 0.3, 0.7, 0.65, 0.3, 0.3, 0.7, 0.7},
                           0.01 * Eigen::MatrixXd::Identity(8, 8));
  const int level = 1;
  ReferenceOptions ro = reference_options(c);
  ro.solver = "fe";
  ro.fe_level = level;
  ro.quadrature_order = 16;
  const double quad = reference_posterior(c, obs, ro).value;

  const FeLevelModel model(build_expansion(c), obs, build_model_config(c));
  ChainConfig cfg;
  cfg.seed = 11;
  std::vector<double> q;
  run_chain(model, level, model.dimension(level), cfg, 4000, [&](ChainState& s) { q.push_back(s.at(level).qoi); });
  const MeanEstimate m = batch_means(q);
  CHECK(std::abs(m.mean - quad) < 4.0 * std::sqrt(m.variance));
}
