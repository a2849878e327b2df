#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nsmlmc/fe_solver.hpp"
#include "nsmlmc/inverse_problem.hpp"
#include "nsmlmc/mlmcmc.hpp"
#include "nsmlmc/parametrization.hpp"

namespace nsmlmc {

/// Everything one experiment needs, read from an INI-style file with sections
/// [problem], [discretization], [observations], [reference], [mlmcmc], [data], [output].
struct ExperimentConfig {
  // [problem]
  double viscosity = 0.1;
  double horizon = 1.0;
  std::string initial_family = "none";
  std::string forcing_family = "lagrangian-1d";
  std::size_t modes = 1;
  double decay_exponent = 2.0;
  CoordinateBounds zeta_bounds{-1.0, 1.0};
  CoordinateBounds xi_bounds{0.0, 1.0};

  // [discretization]
  int base_cells = 4;
  int base_steps = 4;
  std::vector<std::size_t> truncation;  // empty: ceil(2^(l/q))
  double solver_tolerance = 1e-8;
  int solver_max_iterations = 500;
  int solver_restart = 30;
  SchurApproximation schur = SchurApproximation::StokesFourier;

  // [observations]
  std::string observation_file = "lagrangian-1d-observations.csv";
  double noise_variance = 1.0;
  std::string covariance_file;  // optional dense SPD matrix, one row per line

  // [reference]
  std::string reference_solver = "spectral";  // or "fe"
  int reference_resolution = 128;
  double reference_time_step = 1e-4;
  int quadrature_order = 32;
  int reference_fe_level = 4;
  std::optional<double> reference_value;

  // [mlmcmc]
  int levels = 4;
  double enlargement = 2.0;
  ChainConfig chain;
  bool generic_schedule = false;
  int repetitions = 1;

  // [data]
  std::uint64_t data_seed = 1;
  std::optional<double> data_xi;  // physical value of the first forcing coefficient
  std::string data_file = "generated-observations.csv";

  // [output]
  std::string output_directory = "results";
  int threads = 1;
  bool deterministic = false;

  /// Directory of the config file; relative paths resolve against it.
  std::string base_directory = ".";

  void validate() const;
  std::string resolve(const std::string& path) const;
};

ExperimentConfig load_config(const std::string& path);
/// Stable key=value listing of every setting.
std::string canonical_form(const ExperimentConfig& config);
/// FNV-1a hash of the canonical form.
std::uint64_t config_hash(const ExperimentConfig& config);
std::string hash_hex(std::uint64_t h);

FieldExpansion build_expansion(const ExperimentConfig& config);
FeSolverOptions build_solver_options(const ExperimentConfig& config);
FeModelConfig build_model_config(const ExperimentConfig& config);
SpectralConfig build_spectral_config(const ExperimentConfig& config);

/// Raw contents of an observation CSV (rows tracer,time,x,y; time-0 rows are the initial positions).
struct ObservationTable {
  std::vector<Vec2> initial;
  std::vector<double> times;
  std::vector<double> values;  // flattened like ObservationSet
};
ObservationTable read_observation_table(const std::string& path);

/// Observation table with the noise covariance from the config.
ObservationSet read_observation_csv(const std::string& path, const ExperimentConfig& config);
void write_observation_csv(const ObservationSet& obs, const std::string& path, const std::vector<std::string>& header);
ObservationSet load_observations(const ExperimentConfig& config);
/// sigma^2 I, or the dense matrix of [observations] covariance_file. Zero variance is rejected.
Eigen::MatrixXd build_covariance(const ExperimentConfig& config, std::size_t size);

}  // namespace nsmlmc
