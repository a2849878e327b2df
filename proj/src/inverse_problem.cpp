#include "nsmlmc/inverse_problem.hpp"

#include <algorithm>
#include <cmath>

namespace nsmlmc {

ObservationSet::ObservationSet(std::vector<Vec2> initial_positions, std::vector<double> times,
                               std::vector<double> values, Eigen::MatrixXd covariance)
    : initial_(std::move(initial_positions)),
      times_(std::move(times)),
      values_(std::move(values)),
      covariance_(std::move(covariance)) {
  const std::size_t n = 2 * initial_.size() * times_.size();
  if (values_.size() != n)
    throw ConfigError("expected " + std::to_string(n) + " observation values, got " + std::to_string(values_.size()));
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (!(times_[k] > 0.0)) throw ConfigError("observation times must be positive");
    if (k > 0 && !(times_[k] > times_[k - 1])) throw ConfigError("observation times must be increasing");
  }
  if (covariance_.rows() != static_cast<Eigen::Index>(n) || covariance_.cols() != static_cast<Eigen::Index>(n))
    throw ConfigError("noise covariance must be " + std::to_string(n) + " x " + std::to_string(n));
  if (!covariance_.isApprox(covariance_.transpose(), 1e-12)) throw ConfigError("noise covariance is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(covariance_);
  if (llt.info() != Eigen::Success) throw ConfigError("noise covariance is not positive definite");
  cholesky_ = llt.matrixL();
}

Vec2 ObservationSet::value(std::size_t j, std::size_t k) const {
  const std::size_t i = index(j, k, tracer_count());
  return {values_.at(i), values_.at(i + 1)};
}

double ObservationSet::mismatch(const std::vector<double>& predicted) const {
  if (predicted.size() != values_.size()) throw ConfigError("prediction size does not match the observations");
  Eigen::VectorXd r(static_cast<Eigen::Index>(values_.size()));
  for (std::size_t i = 0; i < values_.size(); ++i) r[static_cast<Eigen::Index>(i)] = values_[i] - predicted[i];
  cholesky_.triangularView<Eigen::Lower>().solveInPlace(r);
  return 0.5 * r.squaredNorm();
}

std::vector<double> ObservationSet::sample_noise(std::mt19937_64& rng) const {
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(static_cast<Eigen::Index>(values_.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  const Eigen::VectorXd e = cholesky_.triangularView<Eigen::Lower>() * z;
  return {e.data(), e.data() + e.size()};
}

ObservationSet ObservationSet::with_values(std::vector<double> values) const {
  return ObservationSet(initial_, times_, std::move(values), covariance_);
}

void ObservationSet::check_time_grid(const LevelSpec& spec) const {
  for (double t : times_) {
    if (t > spec.horizon * (1.0 + 1e-12))
      throw ConfigError("observation time " + std::to_string(t) + " lies beyond the horizon");
    if (spec.time_index(t) < 0)
      throw ConfigError("observation time " + std::to_string(t) + " is not on the level-" +
                        std::to_string(spec.level) + " time grid");
  }
}

namespace {

/// Collects tracer positions whenever the clock hits an observation time.
class ObservationRecorder {
 public:
  explicit ObservationRecorder(const ObservationSet& obs) : obs_(obs), out_(obs.size(), 0.0) {}

  void record(double t, const std::vector<Vec2>& z) {
    while (next_ < obs_.time_count() && std::abs(obs_.times()[next_] - t) <= 1e-9 * std::max(1.0, t)) {
      for (std::size_t j = 0; j < z.size(); ++j) {
        const std::size_t i = ObservationSet::index(j, next_, z.size());
        out_[i] = z[j].x;
        out_[i + 1] = z[j].y;
      }
      ++next_;
    }
  }
  std::vector<double> finish() {
    if (next_ != obs_.time_count()) throw ConfigError("observation times were not all reached by the solver");
    return std::move(out_);
  }

 private:
  const ObservationSet& obs_;
  std::vector<double> out_;
  std::size_t next_ = 0;
};

}  // namespace

ForwardResult fe_forward(const FeProblem& problem, const ParamPoint& p, const ObservationSet& obs) {
  obs.check_time_grid(problem.spec());
  TracerIntegrator tracers(obs.initial_positions());
  ObservationRecorder rec(obs);
  ForwardResult out;
  const VelocityField last = solve_forward(problem, p, [&](const VelocityField& u, const SaddleSolveStats&) {
    if (u.time_index > 0) tracers.advance([&u](Vec2 z) { return evaluate_velocity_at(u, z); }, u.time());
    rec.record(u.time(), tracers.current());
  });
  out.observations = rec.finish();
  out.qoi = qoi(problem.level(), last);
  return out;
}

std::vector<double> forward_map(const FeProblem& problem, const ParamPoint& p, const ObservationSet& obs) {
  return fe_forward(problem, p, obs).observations;
}

double mismatch(const FeProblem& problem, const ParamPoint& p, const ObservationSet& obs) {
  return obs.mismatch(forward_map(problem, p, obs));
}

double qoi(const FeLevel& level, const VelocityField& u) { return fe_qoi(level, u); }

ForwardResult spectral_forward(const SpectralConfig& config, const FieldExpansion& expansion, const ParamPoint& p,
                               const ObservationSet& obs, TracerTrajectory* trajectory) {
  SpectralSolver solver(config.resolution, config.viscosity);
  TracerIntegrator tracers(obs.initial_positions());
  ObservationRecorder rec(obs);
  ForwardResult out;
  const SpectralState last =
      solve_spectral(solver, expansion, p, config.horizon, config.time_step, [&](const SpectralState& s) {
        if (s.time > 0.0) tracers.advance([&](Vec2 z) { return solver.evaluate(s, z); }, s.time);
        rec.record(s.time, tracers.current());
      });
  out.observations = rec.finish();
  out.qoi = solver.qoi(last);
  if (trajectory) *trajectory = tracers.take();
  return out;
}

FeLevelModel::FeLevelModel(FieldExpansion expansion, ObservationSet obs, FeModelConfig config)
    : expansion_(std::move(expansion)), obs_(std::move(obs)), config_(std::move(config)) {
  obs_.check_time_grid(make_level_spec(0, config_.base_cells, config_.base_steps, config_.horizon, 0));
}

std::size_t FeLevelModel::dimension(int level) const {
  if (level < 0) throw ConfigError("negative level");
  if (static_cast<std::size_t>(level) < config_.truncation.size()) return config_.truncation[level];
  const std::size_t cap = expansion_.max_dimension();
  return std::min(cap, truncation_dimension_for_level(level, expansion_.truncation_rate()));
}

const FeProblem& FeLevelModel::problem(int level) const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (problems_.size() <= static_cast<std::size_t>(level)) problems_.resize(level + 1);
  auto& slot = problems_[level];
  if (!slot) {
    const LevelSpec spec =
        make_level_spec(level, config_.base_cells, config_.base_steps, config_.horizon, dimension(level));
    slot = std::make_shared<const FeProblem>(spec, expansion_, config_.solver);
  }
  return *slot;
}

LevelEvaluation FeLevelModel::evaluate(int level, const ParamPoint& p) const {
  const FeProblem& pb = problem(level);
  ++solves_;
  LevelEvaluation e;
  try {
    const ForwardResult r = fe_forward(pb, p.truncated(std::min(p.dimension(), dimension(level))), obs_);
    e.potential = obs_.mismatch(r.observations);
    e.qoi = r.qoi;
    e.ok = std::isfinite(e.potential) && std::isfinite(e.qoi);
  } catch (const SolverDiverged&) {
    e = LevelEvaluation{};
  } catch (const BlowUp&) {
    e = LevelEvaluation{};
  }
  if (!e.ok) {
    ++failures_;
    e.potential = std::numeric_limits<double>::infinity();
  }
  return e;
}

}  // namespace nsmlmc
