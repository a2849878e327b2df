#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nsmlmc/common.hpp"
#include "nsmlmc/fe_solver.hpp"
#include "nsmlmc/spectral_solver.hpp"

namespace nsmlmc {

using VelocityEvaluator = std::function<Vec2(Vec2)>;

/// Positions of J tracers on a uniform time grid. Positions are unwrapped.
struct TracerTrajectory {
  std::vector<Vec2> initial_positions;
  std::vector<double> times;
  std::vector<std::vector<Vec2>> positions;  // positions[j][n]

  std::size_t tracer_count() const { return initial_positions.size(); }
  std::size_t step_count() const { return times.empty() ? 0 : times.size() - 1; }
  /// Positions of all tracers at time index n.
  std::vector<Vec2> snapshot(std::size_t n) const;
};

/// z + dt * u_next(z), with u_next looked up at z wrapped onto the torus.
Vec2 euler_step(Vec2 z, const VelocityEvaluator& u_next, double dt);

/// Bilinear interpolation on the periodic velocity mesh.
Vec2 evaluate_velocity_at(const VelocityField& field, Vec2 z);
/// Exact Fourier summation.
Vec2 evaluate_velocity_at(const SpectralSolver& solver, const SpectralState& state, Vec2 z);

/// Streaming integrator: call advance() once per solver step with the new velocity.
class TracerIntegrator {
 public:
  explicit TracerIntegrator(std::vector<Vec2> initial, double t0 = 0.0);

  void advance(const VelocityEvaluator& u_next, double t_next);
  const std::vector<Vec2>& current() const { return current_; }
  double time() const { return traj_.times.back(); }
  const TracerTrajectory& trajectory() const { return traj_; }
  TracerTrajectory take() { return std::move(traj_); }

 private:
  std::vector<Vec2> current_;
  TracerTrajectory traj_;
};

/// Tracers advected through a stored FE trajectory u^0..u^N.
TracerTrajectory integrate_tracers(const std::vector<Vec2>& initial, const std::vector<VelocityField>& velocity);

/// CSV with columns tracer,time,x,y.
void write_trajectory_csv(const TracerTrajectory& traj, const std::string& path);

}  // namespace nsmlmc
