#include "nsmlmc/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <boost/algorithm/string.hpp>

#include "nsmlmc/parallel.hpp"
#include "nsmlmc/quadrature.hpp"

namespace nsmlmc {

namespace {

std::ofstream open_output(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out.precision(17);
  return out;
}

void write_header(std::ostream& out, const std::vector<std::string>& header) {
  for (const auto& h : header) out << "# " << h << "\n";
}

std::vector<std::string> data_rows(std::istream& in) {
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) {
    boost::trim(line);
    if (line.empty() || line[0] == '#') continue;
    rows.push_back(line);
  }
  return rows;
}

}  // namespace

GeneratedData generate_data(const ExperimentConfig& config, const ObservationTable& layout, std::uint64_t seed) {
  const FieldExpansion expansion = build_expansion(config);
  std::mt19937_64 rng(seed);
  ParamPoint truth = sample_prior(expansion.max_dimension(), rng);
  if (config.data_xi) {
    if (truth.xi.empty()) throw ConfigError("[data] xi needs a forcing expansion");
    truth.xi[0] = expansion.xi_bounds.to_canonical(*config.data_xi);
    if (!truth.valid()) throw ConfigError("[data] xi lies outside the forcing bounds");
  }

  const bool noisy = config.noise_variance > 0.0 || !config.covariance_file.empty();
  const std::size_t m = 2 * layout.initial.size() * layout.times.size();
  Eigen::MatrixXd cov = noisy ? build_covariance(config, m) : Eigen::MatrixXd::Identity(m, m);
  ObservationSet shape(layout.initial, layout.times, std::vector<double>(m, 0.0), std::move(cov));

  const ForwardResult g = spectral_forward(build_spectral_config(config), expansion, truth, shape);
  std::vector<double> values = g.observations;
  if (noisy) {
    const std::vector<double> noise = shape.sample_noise(rng);
    for (std::size_t i = 0; i < m; ++i) values[i] += noise[i];
  }
  return {shape.with_values(std::move(values)), std::move(truth), g.observations};
}

void write_generated_data(const GeneratedData& data, const ExperimentConfig& config, const std::string& path) {
  auto header = provenance_header(config);
  header.push_back("generated by the spectral forward map");
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  write_observation_csv(data.observations, path, header);
  auto out = open_output(path + ".truth");
  write_header(out, header);
  out << "coordinate,index,canonical\n";
  for (std::size_t i = 0; i < data.truth.dimension(); ++i) out << "zeta," << i << ',' << data.truth.zeta[i] << "\n";
  for (std::size_t i = 0; i < data.truth.dimension(); ++i) out << "xi," << i << ',' << data.truth.xi[i] << "\n";
}

ReferenceOptions reference_options(const ExperimentConfig& config) {
  ReferenceOptions o;
  o.solver = config.reference_solver;
  o.quadrature_order = config.quadrature_order;
  o.resolution = config.reference_resolution;
  o.time_step = config.reference_time_step;
  o.fe_level = config.reference_fe_level;
  return o;
}

double tensor_posterior_expectation(const std::vector<double>& lower, const std::vector<double>& upper, int order,
                                    const std::function<PotentialAndQoi(const std::vector<double>&)>& f,
                                    int threads, std::vector<QuadratureNode>* nodes) {
  if (lower.size() != upper.size()) throw ConfigError("quadrature bounds differ in length");
  if (order < 1) throw ConfigError("quadrature order must be positive");
  const std::size_t d = lower.size();
  std::vector<QuadratureRule> rules;
  for (std::size_t i = 0; i < d; ++i) rules.push_back(gauss_legendre(order, lower[i], upper[i]));
  std::size_t count = 1;
  for (std::size_t i = 0; i < d; ++i) count *= static_cast<std::size_t>(order);

  std::vector<QuadratureNode> all(count);
  parallel_for(count, threads, [&](std::size_t n) {
    QuadratureNode& node = all[n];
    node.canonical.resize(d);
    node.weight = 1.0;
    std::size_t rest = n;
    for (std::size_t i = 0; i < d; ++i) {
      const std::size_t k = rest % static_cast<std::size_t>(order);
      rest /= static_cast<std::size_t>(order);
      node.canonical[i] = rules[i].nodes[k];
      node.weight *= rules[i].weights[k];
    }
    const PotentialAndQoi v = f(node.canonical);
    node.potential = v.potential;
    node.qoi = v.qoi;
  });

  double shift = std::numeric_limits<double>::infinity();
  for (const auto& node : all) shift = std::min(shift, node.potential);
  if (!std::isfinite(shift)) throw BlowUp("no quadrature node has a finite potential");
  double num = 0.0, den = 0.0;
  for (const auto& node : all) {
    if (!std::isfinite(node.potential)) continue;
    const double w = node.weight * std::exp(shift - node.potential);
    num += w * node.qoi;
    den += w;
  }
  if (nodes) *nodes = std::move(all);
  return num / den;
}

ReferenceResult reference_posterior(const ExperimentConfig& config, const ObservationSet& obs,
                                    const ReferenceOptions& options, int threads) {
  const FieldExpansion expansion = build_expansion(config);
  const std::size_t dim = expansion.max_dimension();
  const std::size_t active_zeta = expansion.modes_initial.size();
  const std::size_t active_xi = expansion.modes_forcing.size();
  const std::size_t active = active_zeta + active_xi;
  if (active == 0) throw ConfigError("the expansion has no random coordinates");
  if (active > 3)
    throw ConfigError("tensor quadrature supports at most 3 random coordinates; use the MLMCMC estimator instead");

  auto point_of = [&](const std::vector<double>& c) {
    ParamPoint p(dim);
    for (std::size_t i = 0; i < active_zeta; ++i) p.zeta[i] = c[i];
    for (std::size_t i = 0; i < active_xi; ++i) p.xi[i] = c[active_zeta + i];
    return p;
  };

  std::function<PotentialAndQoi(const std::vector<double>&)> f;
  std::shared_ptr<FeLevelModel> fe;
  if (options.solver == "spectral") {
    SpectralConfig sc = build_spectral_config(config);
    sc.resolution = options.resolution;
    sc.time_step = options.time_step;
    f = [&, sc](const std::vector<double>& c) {
      const ForwardResult r = spectral_forward(sc, expansion, point_of(c), obs);
      return PotentialAndQoi{obs.mismatch(r.observations), r.qoi};
    };
  } else if (options.solver == "fe") {
    FeModelConfig mc = build_model_config(config);
    mc.truncation.assign(static_cast<std::size_t>(options.fe_level) + 1, dim);
    fe = std::make_shared<FeLevelModel>(expansion, obs, mc);
    f = [&, fe](const std::vector<double>& c) {
      const LevelEvaluation e = fe->evaluate(options.fe_level, point_of(c));
      return PotentialAndQoi{e.potential, e.qoi};
    };
  } else {
    throw ConfigError("unknown reference solver '" + options.solver + "'");
  }

  ReferenceResult ref;
  ref.options = options;
  ref.viscosity = config.viscosity;
  ref.dimension = active;
  ref.value = tensor_posterior_expectation(std::vector<double>(active, -1.0), std::vector<double>(active, 1.0),
                                           options.quadrature_order, f, threads, &ref.nodes);
  return ref;
}

void write_reference_csv(const ReferenceResult& ref, const std::string& path, const std::vector<std::string>& header) {
  auto out = open_output(path);
  write_header(out, header);
  out << "# viscosity=" << ref.viscosity << "\n";
  out << "# solver=" << ref.options.solver << " quadrature_order=" << ref.options.quadrature_order;
  if (ref.options.solver == "spectral")
    out << " resolution=" << ref.options.resolution << " time_step=" << ref.options.time_step;
  else
    out << " fe_level=" << ref.options.fe_level;
  out << "\n";
  out << "# value=" << ref.value << "\n";
  out << "node";
  for (std::size_t i = 0; i < ref.dimension; ++i) out << ",c" << i;
  out << ",weight,potential,qoi\n";
  for (std::size_t n = 0; n < ref.nodes.size(); ++n) {
    const auto& node = ref.nodes[n];
    out << n;
    for (double c : node.canonical) out << ',' << c;
    out << ',' << node.weight << ',' << node.potential << ',' << node.qoi << "\n";
  }
}

double read_reference_value(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open reference file '" + path + "'");
  std::string line;
  while (std::getline(in, line)) {
    boost::trim(line);
    if (line.rfind("# value=", 0) == 0) return std::stod(line.substr(8));
  }
  throw ConfigError("reference file '" + path + "' has no value line");
}

std::uint64_t repetition_seed(std::uint64_t master, int L, int repetition) {
  return chain_seed(master, L, repetition, 99);
}

std::vector<ConvergenceRow> run_experiment(const ExperimentConfig& config, const LevelModel& model, double reference,
                                           const ExperimentOptions& options,
                                           const std::function<void(const ConvergenceRow&)>& progress) {
  std::vector<ConvergenceRow> rows;
  if (!options.report_directory.empty()) std::filesystem::create_directories(options.report_directory);
  for (int L = options.min_level; L <= options.max_level; ++L) {
    for (int r = 0; r < options.repetitions; ++r) {
      ConvergenceRow row;
      row.L = L;
      row.a = config.enlargement;
      row.repetition = r;
      row.seed = repetition_seed(config.chain.seed, L, r);
      row.dof_cost = dof_cost(L, config.enlargement, config.generic_schedule);
      EstimatorOptions eo;
      eo.chain = config.chain;
      eo.chain.seed = row.seed;
      eo.generic_schedule = config.generic_schedule;
      eo.threads = options.deterministic ? 1 : options.threads;
      try {
        MLMCMCReport report = estimate(L, config.enlargement, model, eo);
        if (options.deterministic) report.wall_time = 0.0;
        row.estimate = report.estimate;
        row.standard_error = report.standard_error;
        row.wall_time = report.wall_time;
        row.failed = report.failed;
        row.failure = report.failure;
        row.error = report.failed ? std::numeric_limits<double>::quiet_NaN() : std::abs(report.estimate - reference);
        if (!options.report_directory.empty()) {
          std::ostringstream name;
          name << "report-L" << L << "-r" << r << ".csv";
          auto header = options.header;
          std::ostringstream rs;
          rs.precision(17);
          rs << "reference=" << reference;
          header.push_back(rs.str());
          write_report_csv(report, (std::filesystem::path(options.report_directory) / name.str()).string(), header);
        }
      } catch (const std::exception& e) {
        row.failed = true;
        row.failure = e.what();
        row.estimate = row.error = std::numeric_limits<double>::quiet_NaN();
      }
      if (progress) progress(row);
      rows.push_back(row);
    }
  }
  return rows;
}

void write_convergence_csv(const std::vector<ConvergenceRow>& rows, const std::string& path,
                           const std::vector<std::string>& header) {
  auto out = open_output(path);
  write_header(out, header);
  out << "L,a,repetition,seed,estimate,error,standard_error,dof_cost,wall_time,failed\n";
  for (const auto& r : rows)
    out << r.L << ',' << r.a << ',' << r.repetition << ',' << r.seed << ',' << r.estimate << ',' << r.error << ','
        << r.standard_error << ',' << r.dof_cost << ',' << r.wall_time << ',' << (r.failed ? 1 : 0) << "\n";
}

std::vector<ConvergenceRow> read_convergence_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open convergence file '" + path + "'");
  std::vector<ConvergenceRow> rows;
  for (const auto& line : data_rows(in)) {
    if (line.rfind("L,", 0) == 0) continue;
    std::vector<std::string> p;
    boost::split(p, line, boost::is_any_of(","));
    if (p.size() != 10) throw ConfigError("malformed convergence row '" + line + "'");
    ConvergenceRow r;
    r.L = std::stoi(p[0]);
    r.a = std::stod(p[1]);
    r.repetition = std::stoi(p[2]);
    r.seed = std::stoull(p[3]);
    r.estimate = std::stod(p[4]);
    r.error = std::stod(p[5]);
    r.standard_error = std::stod(p[6]);
    r.dof_cost = std::stod(p[7]);
    r.wall_time = std::stod(p[8]);
    r.failed = p[9] == "1";
    rows.push_back(r);
  }
  return rows;
}

std::vector<ConvergencePoint> aggregate_convergence(const std::vector<ConvergenceRow>& rows) {
  std::map<int, std::vector<const ConvergenceRow*>> by_level;
  for (const auto& r : rows)
    if (!r.failed && std::isfinite(r.error)) by_level[r.L].push_back(&r);
  std::vector<ConvergencePoint> points;
  for (const auto& [L, group] : by_level) {
    ConvergencePoint p;
    p.L = L;
    p.repetitions = static_cast<int>(group.size());
    p.dof_cost = group.front()->dof_cost;
    for (const auto* r : group) p.mean_error += r->error;
    p.mean_error /= group.size();
    if (group.size() > 1) {
      double ss = 0.0;
      for (const auto* r : group) ss += (r->error - p.mean_error) * (r->error - p.mean_error);
      p.error_spread = std::sqrt(ss / (group.size() - 1) / group.size());
    }
    points.push_back(p);
  }
  return points;
}

void write_plot_csv(const std::vector<ConvergencePoint>& points, const std::string& path,
                    const std::vector<std::string>& header) {
  auto out = open_output(path);
  write_header(out, header);
  out << "L,mean_error,error_spread,dof_cost,repetitions\n";
  for (const auto& p : points)
    out << p.L << ',' << p.mean_error << ',' << p.error_spread << ',' << p.dof_cost << ',' << p.repetitions << "\n";
}

double fitted_reduction_per_level(const std::vector<ConvergencePoint>& points) {
  std::vector<std::pair<double, double>> xy;
  for (const auto& p : points)
    if (p.mean_error > 0.0) xy.emplace_back(p.L, std::log(p.mean_error));
  if (xy.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : xy) {
    mx += x;
    my += y;
  }
  mx /= xy.size();
  my /= xy.size();
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [x, y] : xy) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  return std::exp(-sxy / sxx);
}

std::vector<std::string> provenance_header(const ExperimentConfig& config) {
  std::ostringstream nu;
  nu.precision(17);
  nu << config.viscosity;
  return {"config_hash=" + hash_hex(config_hash(config)), std::string("code_version=") + code_version(),
          "viscosity=" + nu.str()};
}

}  // namespace nsmlmc
