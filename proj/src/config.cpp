#include "nsmlmc/config.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace nsmlmc {

namespace pt = boost::property_tree;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  boost::split(parts, s, boost::is_any_of(",; \t"), boost::token_compress_on);
  parts.erase(std::remove_if(parts.begin(), parts.end(), [](const std::string& p) { return p.empty(); }), parts.end());
  return parts;
}

bool parse_bool(const std::string& s) {
  const std::string v = boost::to_lower_copy(boost::trim_copy(s));
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ConfigError("expected a boolean, got '" + s + "'");
}

template <class T>
T get(const pt::ptree& tree, const std::string& key, T fallback) {
  const auto v = tree.get_optional<std::string>(key);
  if (!v) return fallback;
  const std::string s = boost::trim_copy(*v);
  try {
    if constexpr (std::is_same_v<T, bool>) {
      return parse_bool(s);
    } else if constexpr (std::is_same_v<T, std::string>) {
      return s;
    } else {
      std::size_t used = 0;
      T out{};
      if constexpr (std::is_floating_point_v<T>)
        out = static_cast<T>(std::stod(s, &used));
      else if constexpr (std::is_unsigned_v<T>)
        out = static_cast<T>(std::stoull(s, &used));
      else
        out = static_cast<T>(std::stoll(s, &used));
      if (used != s.size()) throw std::invalid_argument(s);
      return out;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("invalid value '" + s + "' for key '" + key + "'");
  }
}

const std::map<std::string, std::vector<std::string>>& known_keys() {
  static const std::map<std::string, std::vector<std::string>> keys = {
      {"problem",
       {"viscosity", "horizon", "initial_family", "forcing_family", "modes", "decay_exponent", "zeta_lower",
        "zeta_upper", "xi_lower", "xi_upper"}},
      {"discretization",
       {"base_cells", "base_steps", "truncation", "solver_tolerance", "solver_max_iterations", "solver_restart",
        "schur"}},
      {"observations", {"file", "noise_variance", "covariance_file"}},
      {"reference", {"solver", "resolution", "time_step", "quadrature_order", "fe_level", "value"}},
      {"mlmcmc",
       {"levels", "enlargement", "sampler", "step_size", "burn_in", "seed", "generic_schedule", "repetitions"}},
      {"data", {"seed", "xi", "file"}},
      {"output", {"directory", "threads", "deterministic"}},
  };
  return keys;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!(viscosity > 0.0)) throw ConfigError("viscosity must be positive");
  if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
  if (!(decay_exponent > 1.0)) throw ConfigError("decay exponent must exceed 1");
  if (base_cells < 2) throw ConfigError("base_cells must be at least 2");
  if (base_steps < 1) throw ConfigError("base_steps must be positive");
  if (!(noise_variance >= 0.0)) throw ConfigError("noise variance must be non-negative");
  if (reference_resolution < 4) throw ConfigError("reference resolution too small");
  if (!(reference_time_step > 0.0)) throw ConfigError("reference time step must be positive");
  if (quadrature_order < 1) throw ConfigError("quadrature order must be positive");
  if (reference_solver != "spectral" && reference_solver != "fe")
    throw ConfigError("reference solver must be 'spectral' or 'fe'");
  if (levels < 0) throw ConfigError("levels must be non-negative");
  if (!(enlargement >= 0.0)) throw ConfigError("enlargement must be non-negative");
  if (repetitions < 1) throw ConfigError("repetitions must be positive");
  if (threads < 1) throw ConfigError("threads must be positive");
  if (!(zeta_bounds.upper > zeta_bounds.lower) || !(xi_bounds.upper > xi_bounds.lower))
    throw ConfigError("coordinate bounds must satisfy lower < upper");
  chain.validate();
}

std::string ExperimentConfig::resolve(const std::string& path) const {
  if (path.empty()) return path;
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_directory) / p).string();
}

ExperimentConfig load_config(const std::string& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("cannot read config '" + path + "': " + e.message());
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) throw ConfigError("unknown config section [" + section + "]");
    for (const auto& [key, value] : body) {
      (void)value;
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
        throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
    }
  }

  ExperimentConfig c;
  c.base_directory = std::filesystem::absolute(path).parent_path().string();
  c.viscosity = get(tree, "problem.viscosity", c.viscosity);
  c.horizon = get(tree, "problem.horizon", c.horizon);
  c.initial_family = get(tree, "problem.initial_family", c.initial_family);
  c.forcing_family = get(tree, "problem.forcing_family", c.forcing_family);
  c.modes = get(tree, "problem.modes", c.modes);
  c.decay_exponent = get(tree, "problem.decay_exponent", c.decay_exponent);
  c.zeta_bounds.lower = get(tree, "problem.zeta_lower", c.zeta_bounds.lower);
  c.zeta_bounds.upper = get(tree, "problem.zeta_upper", c.zeta_bounds.upper);
  c.xi_bounds.lower = get(tree, "problem.xi_lower", c.xi_bounds.lower);
  c.xi_bounds.upper = get(tree, "problem.xi_upper", c.xi_bounds.upper);

  c.base_cells = get(tree, "discretization.base_cells", c.base_cells);
  c.base_steps = get(tree, "discretization.base_steps", c.base_steps);
  const std::string trunc = get<std::string>(tree, "discretization.truncation", "auto");
  if (trunc != "auto")
    for (const auto& t : split_list(trunc)) c.truncation.push_back(std::stoull(t));
  c.solver_tolerance = get(tree, "discretization.solver_tolerance", c.solver_tolerance);
  c.solver_max_iterations = get(tree, "discretization.solver_max_iterations", c.solver_max_iterations);
  c.solver_restart = get(tree, "discretization.solver_restart", c.solver_restart);
  c.schur = parse_schur_approximation(get<std::string>(tree, "discretization.schur", "stokes-fourier"));

  c.observation_file = get(tree, "observations.file", c.observation_file);
  c.noise_variance = get(tree, "observations.noise_variance", c.noise_variance);
  c.covariance_file = get(tree, "observations.covariance_file", c.covariance_file);

  c.reference_solver = get(tree, "reference.solver", c.reference_solver);
  c.reference_resolution = get(tree, "reference.resolution", c.reference_resolution);
  c.reference_time_step = get(tree, "reference.time_step", c.reference_time_step);
  c.quadrature_order = get(tree, "reference.quadrature_order", c.quadrature_order);
  c.reference_fe_level = get(tree, "reference.fe_level", c.reference_fe_level);
  if (tree.get_optional<std::string>("reference.value")) c.reference_value = get(tree, "reference.value", 0.0);

  c.levels = get(tree, "mlmcmc.levels", c.levels);
  c.enlargement = get(tree, "mlmcmc.enlargement", c.enlargement);
  c.chain.sampler = parse_sampler(get<std::string>(tree, "mlmcmc.sampler", "independence"));
  c.chain.step_size = get(tree, "mlmcmc.step_size", c.chain.step_size);
  const std::string burn = get<std::string>(tree, "mlmcmc.burn_in", "auto");
  c.chain.burn_in = burn == "auto" ? -1 : get(tree, "mlmcmc.burn_in", 0L);
  c.chain.seed = get(tree, "mlmcmc.seed", std::uint64_t{2024});
  c.generic_schedule = get(tree, "mlmcmc.generic_schedule", c.generic_schedule);
  c.repetitions = get(tree, "mlmcmc.repetitions", c.repetitions);

  c.data_seed = get(tree, "data.seed", c.data_seed);
  if (tree.get_optional<std::string>("data.xi")) c.data_xi = get(tree, "data.xi", 0.0);
  c.data_file = get(tree, "data.file", c.data_file);

  c.output_directory = get(tree, "output.directory", c.output_directory);
  c.threads = get(tree, "output.threads", c.threads);
  c.deterministic = get(tree, "output.deterministic", c.deterministic);
  c.validate();
  return c;
}

std::string canonical_form(const ExperimentConfig& c) {
  std::ostringstream s;
  std::string trunc = "auto";
  if (!c.truncation.empty()) {
    trunc.clear();
    for (std::size_t i = 0; i < c.truncation.size(); ++i) trunc += (i ? "," : "") + std::to_string(c.truncation[i]);
  }
  s << "problem.viscosity=" << fmt(c.viscosity) << "\n"
    << "problem.horizon=" << fmt(c.horizon) << "\n"
    << "problem.initial_family=" << c.initial_family << "\n"
    << "problem.forcing_family=" << c.forcing_family << "\n"
    << "problem.modes=" << c.modes << "\n"
    << "problem.decay_exponent=" << fmt(c.decay_exponent) << "\n"
    << "problem.zeta_bounds=" << fmt(c.zeta_bounds.lower) << "," << fmt(c.zeta_bounds.upper) << "\n"
    << "problem.xi_bounds=" << fmt(c.xi_bounds.lower) << "," << fmt(c.xi_bounds.upper) << "\n"
    << "discretization.base_cells=" << c.base_cells << "\n"
    << "discretization.base_steps=" << c.base_steps << "\n"
    << "discretization.truncation=" << trunc << "\n"
    << "discretization.solver_tolerance=" << fmt(c.solver_tolerance) << "\n"
    << "discretization.solver_max_iterations=" << c.solver_max_iterations << "\n"
    << "discretization.solver_restart=" << c.solver_restart << "\n"
    << "discretization.schur="
    << (c.schur == SchurApproximation::StokesFourier ? "stokes-fourier" : "pressure-mass") << "\n"
    << "observations.file=" << c.observation_file << "\n"
    << "observations.noise_variance=" << fmt(c.noise_variance) << "\n"
    << "observations.covariance_file=" << c.covariance_file << "\n"
    << "reference.solver=" << c.reference_solver << "\n"
    << "reference.resolution=" << c.reference_resolution << "\n"
    << "reference.time_step=" << fmt(c.reference_time_step) << "\n"
    << "reference.quadrature_order=" << c.quadrature_order << "\n"
    << "reference.fe_level=" << c.reference_fe_level << "\n"
    << "reference.value=" << (c.reference_value ? fmt(*c.reference_value) : "none") << "\n"
    << "mlmcmc.levels=" << c.levels << "\n"
    << "mlmcmc.enlargement=" << fmt(c.enlargement) << "\n"
    << "mlmcmc.sampler=" << to_string(c.chain.sampler) << "\n"
    << "mlmcmc.step_size=" << fmt(c.chain.step_size) << "\n"
    << "mlmcmc.burn_in=" << (c.chain.burn_in < 0 ? std::string("auto") : std::to_string(c.chain.burn_in)) << "\n"
    << "mlmcmc.seed=" << c.chain.seed << "\n"
    << "mlmcmc.generic_schedule=" << (c.generic_schedule ? "true" : "false") << "\n"
    << "mlmcmc.repetitions=" << c.repetitions << "\n"
    << "data.seed=" << c.data_seed << "\n"
    << "data.xi=" << (c.data_xi ? fmt(*c.data_xi) : "prior") << "\n"
    << "data.file=" << c.data_file << "\n";
  return s.str();
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_form(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

FieldExpansion build_expansion(const ExperimentConfig& c) {
  FieldExpansion e = make_expansion(c.initial_family, c.forcing_family, c.modes, c.decay_exponent);
  e.zeta_bounds = c.zeta_bounds;
  e.xi_bounds = c.xi_bounds;
  return e;
}

FeSolverOptions build_solver_options(const ExperimentConfig& c) {
  FeSolverOptions o;
  o.viscosity = c.viscosity;
  o.krylov.tolerance = c.solver_tolerance;
  o.krylov.max_iterations = c.solver_max_iterations;
  o.krylov.restart = c.solver_restart;
  o.schur = c.schur;
  return o;
}

FeModelConfig build_model_config(const ExperimentConfig& c) {
  FeModelConfig m;
  m.base_cells = c.base_cells;
  m.base_steps = c.base_steps;
  m.horizon = c.horizon;
  m.truncation = c.truncation;
  m.solver = build_solver_options(c);
  return m;
}

SpectralConfig build_spectral_config(const ExperimentConfig& c) {
  return SpectralConfig{c.reference_resolution, c.reference_time_step, c.viscosity, c.horizon};
}

Eigen::MatrixXd build_covariance(const ExperimentConfig& c, std::size_t size) {
  const auto n = static_cast<Eigen::Index>(size);
  if (c.covariance_file.empty()) {
    if (!(c.noise_variance > 0.0)) throw ConfigError("noise variance must be positive for inference");
    return c.noise_variance * Eigen::MatrixXd::Identity(n, n);
  }
  std::ifstream in(c.resolve(c.covariance_file));
  if (!in) throw ConfigError("cannot open covariance file '" + c.covariance_file + "'");
  Eigen::MatrixXd m(n, n);
  std::string line;
  Eigen::Index row = 0;
  while (std::getline(in, line)) {
    boost::trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto parts = split_list(line);
    if (row >= n || static_cast<Eigen::Index>(parts.size()) != n)
      throw ConfigError("covariance file must hold a " + std::to_string(size) + " x " + std::to_string(size) +
                        " matrix");
    for (Eigen::Index j = 0; j < n; ++j) m(row, j) = std::stod(parts[static_cast<std::size_t>(j)]);
    ++row;
  }
  if (row != n) throw ConfigError("covariance file has too few rows");
  return m;
}

ObservationTable read_observation_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open observation file '" + path + "'");
  std::map<double, std::map<int, Vec2>> rows;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    boost::trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      if (boost::to_lower_copy(line).rfind("tracer", 0) == 0) continue;
    }
    std::vector<std::string> parts;
    boost::split(parts, line, boost::is_any_of(","));
    if (parts.size() != 4) throw ConfigError("observation rows must be tracer,time,x,y: '" + line + "'");
    try {
      const int j = std::stoi(parts[0]);
      const double t = std::stod(parts[1]);
      rows[t][j] = Vec2{std::stod(parts[2]), std::stod(parts[3])};
    } catch (const std::exception&) {
      throw ConfigError("malformed observation row '" + line + "'");
    }
  }
  if (rows.empty() || rows.begin()->first != 0.0) throw ConfigError("observation file needs time-0 initial positions");
  ObservationTable table;
  const auto& init = rows.begin()->second;
  for (int j = 0; j < static_cast<int>(init.size()); ++j) {
    if (!init.count(j)) throw ConfigError("tracer ids must be 0..J-1");
    table.initial.push_back(init.at(j));
  }
  for (auto it = std::next(rows.begin()); it != rows.end(); ++it) {
    if (it->second.size() != table.initial.size()) throw ConfigError("every observation time must list all tracers");
    table.times.push_back(it->first);
  }
  table.values.resize(2 * table.initial.size() * table.times.size());
  for (std::size_t k = 0; k < table.times.size(); ++k)
    for (std::size_t j = 0; j < table.initial.size(); ++j) {
      const Vec2 v = rows.at(table.times[k]).at(static_cast<int>(j));
      const std::size_t i = ObservationSet::index(j, k, table.initial.size());
      table.values[i] = v.x;
      table.values[i + 1] = v.y;
    }
  return table;
}

ObservationSet read_observation_csv(const std::string& path, const ExperimentConfig& config) {
  ObservationTable t = read_observation_table(path);
  Eigen::MatrixXd cov = build_covariance(config, t.values.size());
  return ObservationSet(std::move(t.initial), std::move(t.times), std::move(t.values), std::move(cov));
}

void write_observation_csv(const ObservationSet& obs, const std::string& path, const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out.precision(17);
  for (const auto& h : header) out << "# " << h << "\n";
  out << "tracer,time,x,y\n";
  for (std::size_t j = 0; j < obs.tracer_count(); ++j)
    out << j << ",0," << obs.initial_positions()[j].x << ',' << obs.initial_positions()[j].y << "\n";
  for (std::size_t k = 0; k < obs.time_count(); ++k)
    for (std::size_t j = 0; j < obs.tracer_count(); ++j) {
      const Vec2 v = obs.value(j, k);
      out << j << ',' << obs.times()[k] << ',' << v.x << ',' << v.y << "\n";
    }
}

ObservationSet load_observations(const ExperimentConfig& config) {
  return read_observation_csv(config.resolve(config.observation_file), config);
}

}  // namespace nsmlmc
