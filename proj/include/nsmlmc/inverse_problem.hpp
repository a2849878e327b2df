#pragma once

#include <atomic>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "nsmlmc/fe_solver.hpp"
#include "nsmlmc/lagrangian.hpp"
#include "nsmlmc/parametrization.hpp"
#include "nsmlmc/spectral_solver.hpp"

namespace nsmlmc {

/// Noisy tracer positions y at times tau_k with Gaussian noise N(0, Sigma).
///
/// Values are flattened with tracer index fastest: entry 2*(k*J + j) + c holds
/// component c of tracer j at time tau_k.
class ObservationSet {
 public:
  ObservationSet() = default;
  /// Throws ConfigError on inconsistent sizes or when Sigma is not SPD.
  ObservationSet(std::vector<Vec2> initial_positions, std::vector<double> times, std::vector<double> values,
                 Eigen::MatrixXd covariance);

  const std::vector<Vec2>& initial_positions() const { return initial_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& values() const { return values_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  std::size_t tracer_count() const { return initial_.size(); }
  std::size_t time_count() const { return times_.size(); }
  std::size_t size() const { return values_.size(); }
  Vec2 value(std::size_t j, std::size_t k) const;
  static std::size_t index(std::size_t j, std::size_t k, std::size_t tracers) { return 2 * (k * tracers + j); }

  /// 1/2 (y - g)^T Sigma^-1 (y - g) via the Cholesky factor.
  double mismatch(const std::vector<double>& predicted) const;
  /// One draw from N(0, Sigma).
  std::vector<double> sample_noise(std::mt19937_64& rng) const;
  ObservationSet with_values(std::vector<double> values) const;
  /// Throws ConfigError unless every tau_k lies in (0, T] on the time grid of `spec`.
  void check_time_grid(const LevelSpec& spec) const;

 private:
  std::vector<Vec2> initial_;
  std::vector<double> times_;
  std::vector<double> values_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd cholesky_;  // lower factor L with Sigma = L L^T
};

/// Flattened tracer positions at the observation times plus the QoI at the horizon.
struct ForwardResult {
  std::vector<double> observations;
  double qoi = 0.0;
};

/// FE forward map at the problem's level: solve, advect tracers, extract positions.
ForwardResult fe_forward(const FeProblem& problem, const ParamPoint& p, const ObservationSet& obs);
std::vector<double> forward_map(const FeProblem& problem, const ParamPoint& p, const ObservationSet& obs);
double mismatch(const FeProblem& problem, const ParamPoint& p, const ObservationSet& obs);
/// Weighted-curl QoI of an FE snapshot.
double qoi(const FeLevel& level, const VelocityField& u);

struct SpectralConfig {
  int resolution = 128;
  double time_step = 1e-4;
  double viscosity = 0.1;
  double horizon = 1.0;
};

/// Same map computed with the pseudo-spectral solver.
ForwardResult spectral_forward(const SpectralConfig& config, const FieldExpansion& expansion, const ParamPoint& p,
                               const ObservationSet& obs, TracerTrajectory* trajectory = nullptr);

/// Potential and QoI of one parameter at one discretization level.
struct LevelEvaluation {
  double potential = std::numeric_limits<double>::infinity();
  double qoi = 0.0;
  bool ok = false;
};

/// Level hierarchy seen by the samplers. Implementations must be safe to call concurrently.
class LevelModel {
 public:
  virtual ~LevelModel() = default;
  /// Number of parameter coordinates the level-l approximation depends on.
  virtual std::size_t dimension(int level) const = 0;
  /// Solver failures are reported as ok = false with an infinite potential.
  virtual LevelEvaluation evaluate(int level, const ParamPoint& p) const = 0;
  /// Forward-solve cost proxy of one evaluation.
  virtual double cost(int level) const { return std::exp2(3.0 * level); }
};

struct FeModelConfig {
  int base_cells = 4;
  int base_steps = 4;
  double horizon = 1.0;
  /// Truncation dimension per level; empty means ceil(2^(l/q)) capped at the expansion size.
  std::vector<std::size_t> truncation;
  FeSolverOptions solver;
};

/// FE hierarchy with lazily built, shared read-only levels.
class FeLevelModel : public LevelModel {
 public:
  FeLevelModel(FieldExpansion expansion, ObservationSet obs, FeModelConfig config);

  std::size_t dimension(int level) const override;
  LevelEvaluation evaluate(int level, const ParamPoint& p) const override;

  const FeProblem& problem(int level) const;
  std::size_t failures() const { return failures_.load(); }
  std::size_t solves() const { return solves_.load(); }

 private:
  FieldExpansion expansion_;
  ObservationSet obs_;
  FeModelConfig config_;
  mutable std::mutex mutex_;
  mutable std::vector<std::shared_ptr<const FeProblem>> problems_;
  mutable std::atomic<std::size_t> failures_{0};
  mutable std::atomic<std::size_t> solves_{0};
};

/// Model defined by a callable, for surrogates and tests.
class FunctionModel : public LevelModel {
 public:
  using Function = std::function<LevelEvaluation(int, const ParamPoint&)>;
  FunctionModel(std::size_t dimension, Function f) : dimension_(dimension), f_(std::move(f)) {}
  std::size_t dimension(int) const override { return dimension_; }
  LevelEvaluation evaluate(int level, const ParamPoint& p) const override { return f_(level, p); }

 private:
  std::size_t dimension_;
  Function f_;
};

}  // namespace nsmlmc
