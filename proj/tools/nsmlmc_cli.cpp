#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "nsmlmc/harness.hpp"

using namespace nsmlmc;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string output;
  std::string data;
  long long seed = -1;
  int levels = -1;
  double enlargement = -1.0;
  int threads = 0;
  bool deterministic = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "experiment configuration file");
  app->add_option("--output", c.output, "output directory (overrides [output] directory)");
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--threads", c.threads, "worker threads");
  app->add_flag("--deterministic", c.deterministic, "serial run with wall times written as 0");
}

ExperimentConfig configure(const Common& c) {
  ExperimentConfig config;
  if (!c.config.empty()) {
    config = load_config(c.config);
  } else {
    config.base_directory = fs::current_path().string();
  }
  if (!c.output.empty()) config.output_directory = fs::absolute(c.output).string();
  if (c.levels >= 0) config.levels = c.levels;
  if (c.enlargement >= 0.0) config.enlargement = c.enlargement;
  if (c.threads > 0) config.threads = c.threads;
  if (c.deterministic) config.deterministic = true;
  if (config.deterministic) config.threads = 1;
  config.validate();
  return config;
}

std::string output_path(const ExperimentConfig& config, const std::string& name) {
  const fs::path dir = config.resolve(config.output_directory);
  fs::create_directories(dir);
  return (dir / name).string();
}

ObservationSet observations(const ExperimentConfig& config, const Common& c) {
  if (!c.data.empty()) return read_observation_csv(fs::absolute(c.data).string(), config);
  return load_observations(config);
}

int generate(const Common& c) {
  ExperimentConfig config = configure(c);
  const std::uint64_t seed = c.seed >= 0 ? static_cast<std::uint64_t>(c.seed) : config.data_seed;
  const ObservationTable layout = read_observation_table(config.resolve(config.observation_file));
  const GeneratedData data = generate_data(config, layout, seed);
  const std::string path = output_path(config, config.data_file);
  write_generated_data(data, config, path);
  std::cout << "wrote " << path << " (" << data.observations.tracer_count() << " tracers, "
            << data.observations.time_count() << " times)\n";
  return 0;
}

int reference(const Common& c, const std::string& solver, int order, int fe_level) {
  ExperimentConfig config = configure(c);
  ReferenceOptions options = reference_options(config);
  if (!solver.empty()) options.solver = solver;
  if (order > 0) options.quadrature_order = order;
  if (fe_level >= 0) options.fe_level = fe_level;
  const ObservationSet obs = observations(config, c);
  const ReferenceResult ref = reference_posterior(config, obs, options, config.threads);
  const std::string path = output_path(config, "reference.csv");
  write_reference_csv(ref, path, provenance_header(config));
  std::cout << std::setprecision(12) << "reference=" << ref.value << "\nwrote " << path << "\n";
  return 0;
}

double reference_for_run(const ExperimentConfig& config, double given) {
  if (std::isfinite(given)) return given;
  if (config.reference_value) return *config.reference_value;
  const fs::path stored = fs::path(config.resolve(config.output_directory)) / "reference.csv";
  if (fs::exists(stored)) return read_reference_value(stored.string());
  throw ConfigError("no reference value: set [reference] value, pass --reference or run 'reference' first");
}

int run(const Common& c, int min_level, int repetitions, double given_reference) {
  ExperimentConfig config = configure(c);
  if (c.seed >= 0) config.chain.seed = static_cast<std::uint64_t>(c.seed);
  if (repetitions > 0) config.repetitions = repetitions;
  const double ref = reference_for_run(config, given_reference);
  const ObservationSet obs = observations(config, c);
  FeLevelModel model(build_expansion(config), obs, build_model_config(config));

  ExperimentOptions options;
  options.min_level = std::min(min_level, config.levels);
  options.max_level = config.levels;
  options.repetitions = config.repetitions;
  options.threads = config.threads;
  options.deterministic = config.deterministic;
  options.report_directory = config.resolve(config.output_directory);
  options.header = provenance_header(config);
  const auto rows = run_experiment(config, model, ref, options, [](const ConvergenceRow& r) {
    std::cout << std::setprecision(8) << "L=" << r.L << " rep=" << r.repetition << " estimate=" << r.estimate
              << " error=" << r.error << (r.failed ? " FAILED: " + r.failure : "") << std::endl;
  });
  auto header = options.header;
  std::ostringstream rs;
  rs << std::setprecision(17) << "reference=" << ref;
  header.push_back(rs.str());
  const std::string path = output_path(config, "convergence.csv");
  write_convergence_csv(rows, path, header);
  std::cout << "wrote " << path << "\n";
  return 0;
}

int dof(const Common& c, bool generic) {
  ExperimentConfig config = configure(c);
  std::cout << "L,dof_cost,ratio\n" << std::setprecision(10);
  double previous = 0.0;
  for (int L = 1; L <= config.levels; ++L) {
    const double d = dof_cost(L, config.enlargement, generic || config.generic_schedule);
    std::cout << L << ',' << d << ',';
    if (previous > 0.0) std::cout << d / previous;
    std::cout << "\n";
    previous = d;
  }
  return 0;
}

int plot(const Common& c, const std::string& input) {
  ExperimentConfig config = configure(c);
  const std::string in = input.empty() ? output_path(config, "convergence.csv") : input;
  const auto points = aggregate_convergence(read_convergence_csv(in));
  const std::string path = output_path(config, "convergence-plot.csv");
  write_plot_csv(points, path, provenance_header(config));
  std::cout << "reduction per level=" << fitted_reduction_per_level(points) << "\nwrote " << path << "\n";
  return 0;
}

int forward(const Common& c, const std::string& solver, int level, double xi) {
  ExperimentConfig config = configure(c);
  const FieldExpansion expansion = build_expansion(config);
  const ObservationSet obs = observations(config, c);
  ParamPoint p(expansion.max_dimension());
  if (!p.xi.empty()) p.xi[0] = expansion.xi_bounds.to_canonical(xi);
  TracerTrajectory traj;
  double q = 0.0;
  std::vector<double> g;
  if (solver == "spectral") {
    const ForwardResult r = spectral_forward(build_spectral_config(config), expansion, p, obs, &traj);
    q = r.qoi;
    g = r.observations;
  } else {
    const FeModelConfig mc = build_model_config(config);
    const FeProblem problem(make_level_spec(level, mc.base_cells, mc.base_steps, mc.horizon, p.dimension()),
                            expansion, mc.solver);
    const auto fields = solve_forward_trajectory(problem, p);
    traj = integrate_tracers(obs.initial_positions(), fields);
    write_velocity_csv(fields.back(), output_path(config, "velocity-final.csv"));
    const ForwardResult r = fe_forward(problem, p, obs);
    q = r.qoi;
    g = r.observations;
  }
  write_trajectory_csv(traj, output_path(config, "tracers.csv"));
  std::cout << std::setprecision(12) << "qoi=" << q << " potential=" << obs.mismatch(g) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilevel MCMC for Navier-Stokes inversion from Lagrangian data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(code_version()));

  Common gen_opts, ref_opts, run_opts, dof_opts, plot_opts, fwd_opts;

  auto* gen = app.add_subcommand("generate-data", "synthetic observations from the spectral forward map");
  add_common(gen, gen_opts);

  auto* ref = app.add_subcommand("reference", "Gauss-Legendre posterior expectation of the QoI");
  add_common(ref, ref_opts);
  ref->add_option("--data", ref_opts.data, "observation CSV (overrides [observations] file)");
  std::string ref_solver;
  int ref_order = 0, ref_level = -1;
  ref->add_option("--solver", ref_solver, "spectral or fe")->check(CLI::IsMember({"spectral", "fe"}));
  ref->add_option("--order", ref_order, "Gauss-Legendre nodes per coordinate");
  ref->add_option("--fe-level", ref_level, "FE level when --solver fe");

  auto* run_cmd = app.add_subcommand("run", "MLMCMC estimates and errors against the reference");
  add_common(run_cmd, run_opts);
  run_cmd->add_option("--data", run_opts.data, "observation CSV (overrides [observations] file)");
  run_cmd->add_option("--levels", run_opts.levels, "finest level L");
  run_cmd->add_option("--enlargement", run_opts.enlargement, "sample enlargement exponent a");
  int min_level = 1, repetitions = 0;
  double given_reference = std::nan("");
  run_cmd->add_option("--min-level", min_level, "coarsest L of the sweep");
  run_cmd->add_option("--repetitions", repetitions, "independent seed sets per L");
  run_cmd->add_option("--reference", given_reference, "reference value");

  auto* dof_cmd = app.add_subcommand("dof-cost", "degrees-of-freedom cost of the sample schedule");
  add_common(dof_cmd, dof_opts);
  dof_cmd->add_option("--levels", dof_opts.levels, "largest L");
  dof_cmd->add_option("--enlargement", dof_opts.enlargement, "sample enlargement exponent a");
  bool generic = false;
  dof_cmd->add_flag("--generic", generic, "generic schedule without boundary rows");

  auto* plot_cmd = app.add_subcommand("convergence-plot-data", "aggregate convergence CSV into plot data");
  add_common(plot_cmd, plot_opts);
  std::string plot_input;
  plot_cmd->add_option("--input", plot_input, "convergence CSV (default <output>/convergence.csv)");

  auto* fwd = app.add_subcommand("forward", "single forward solve with tracer and velocity dumps");
  add_common(fwd, fwd_opts);
  fwd->add_option("--data", fwd_opts.data, "observation CSV (overrides [observations] file)");
  std::string fwd_solver = "fe";
  int fwd_level = 3;
  double fwd_xi = 0.5;
  fwd->add_option("--solver", fwd_solver, "fe or spectral")->check(CLI::IsMember({"spectral", "fe"}));
  fwd->add_option("--level", fwd_level, "FE level");
  fwd->add_option("--xi", fwd_xi, "physical value of the first forcing coefficient");

  CLI11_PARSE(app, argc, argv);
  try {
    if (gen->parsed()) return generate(gen_opts);
    if (ref->parsed()) return reference(ref_opts, ref_solver, ref_order, ref_level);
    if (run_cmd->parsed()) return run(run_opts, min_level, repetitions, given_reference);
    if (dof_cmd->parsed()) return dof(dof_opts, generic);
    if (plot_cmd->parsed()) return plot(plot_opts, plot_input);
    if (fwd->parsed()) return forward(fwd_opts, fwd_solver, fwd_level, fwd_xi);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
