#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nsmlmc/config.hpp"

namespace nsmlmc {

struct GeneratedData {
  ObservationSet observations;
  ParamPoint truth;  // canonical coordinates
  std::vector<double> noiseless;
};

/// Draws the true parameter (or takes [data] xi), runs the spectral forward map and adds N(0, Sigma) noise.
/// The tracer layout (initial positions, times) comes from `layout`. Zero noise variance gives noiseless data.
GeneratedData generate_data(const ExperimentConfig& config, const ObservationTable& layout, std::uint64_t seed);
/// Writes the data CSV and a "<path>.truth" sidecar with the true parameter.
void write_generated_data(const GeneratedData& data, const ExperimentConfig& config, const std::string& path);

struct ReferenceOptions {
  std::string solver = "spectral";
  int quadrature_order = 32;
  int resolution = 128;
  double time_step = 1e-4;
  int fe_level = 4;
};
ReferenceOptions reference_options(const ExperimentConfig& config);

struct QuadratureNode {
  std::vector<double> canonical;
  double weight = 0.0;
  double potential = 0.0;
  double qoi = 0.0;
};

struct ReferenceResult {
  double value = 0.0;
  ReferenceOptions options;
  double viscosity = 0.0;
  std::size_t dimension = 0;
  std::vector<QuadratureNode> nodes;
};

/// Tensor Gauss-Legendre approximation of int q e^{-Phi} dp / int e^{-Phi} dp on [lower, upper]^d.
/// `f` maps a point of the box to (Phi, q).
struct PotentialAndQoi {
  double potential;
  double qoi;
};
double tensor_posterior_expectation(const std::vector<double>& lower, const std::vector<double>& upper, int order,
                                    const std::function<PotentialAndQoi(const std::vector<double>&)>& f,
                                    int threads = 1, std::vector<QuadratureNode>* nodes = nullptr);

/// Posterior expectation of the QoI over the active coordinates of the expansion
/// (at most three), with forward solves by the spectral solver or a fixed FE level.
ReferenceResult reference_posterior(const ExperimentConfig& config, const ObservationSet& obs,
                                    const ReferenceOptions& options, int threads = 1);

void write_reference_csv(const ReferenceResult& ref, const std::string& path, const std::vector<std::string>& header);
/// Reads the value column of a reference CSV written by write_reference_csv.
double read_reference_value(const std::string& path);

struct ConvergenceRow {
  int L = 0;
  double a = 0.0;
  int repetition = 0;
  std::uint64_t seed = 0;
  double estimate = 0.0;
  double error = 0.0;
  double standard_error = 0.0;
  double dof_cost = 0.0;
  double wall_time = 0.0;
  bool failed = false;
  std::string failure;  // not written to CSV
};

struct ExperimentOptions {
  int min_level = 1;
  int max_level = 4;
  int repetitions = 1;
  int threads = 1;
  bool deterministic = false;
  /// Directory for per-run report CSVs; empty skips them.
  std::string report_directory;
  std::vector<std::string> header;
};

/// Seed of repetition r at finest level L.
std::uint64_t repetition_seed(std::uint64_t master, int L, int repetition);

/// MLMCMC estimates for L = min_level..max_level, `repetitions` independent seed sets each.
/// Failures of single runs are recorded in their row and the loop continues.
std::vector<ConvergenceRow> run_experiment(const ExperimentConfig& config, const LevelModel& model, double reference,
                                           const ExperimentOptions& options,
                                           const std::function<void(const ConvergenceRow&)>& progress = {});

void write_convergence_csv(const std::vector<ConvergenceRow>& rows, const std::string& path,
                           const std::vector<std::string>& header);
std::vector<ConvergenceRow> read_convergence_csv(const std::string& path);

/// Per-L mean absolute error over repetitions.
struct ConvergencePoint {
  int L = 0;
  double mean_error = 0.0;
  double error_spread = 0.0;  // standard error of the mean error
  double dof_cost = 0.0;
  int repetitions = 0;
};
std::vector<ConvergencePoint> aggregate_convergence(const std::vector<ConvergenceRow>& rows);
void write_plot_csv(const std::vector<ConvergencePoint>& points, const std::string& path,
                    const std::vector<std::string>& header);
/// Least-squares slope of log(mean error) against L, returned as the mean reduction factor per level.
double fitted_reduction_per_level(const std::vector<ConvergencePoint>& points);

/// "config_hash=..." and "code_version=..." lines for output headers.
std::vector<std::string> provenance_header(const ExperimentConfig& config);

}  // namespace nsmlmc
