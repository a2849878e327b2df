#include "nsmlmc/lagrangian.hpp"

#include <cmath>
#include <fstream>

namespace nsmlmc {

std::vector<Vec2> TracerTrajectory::snapshot(std::size_t n) const {
  std::vector<Vec2> out;
  out.reserve(positions.size());
  for (const auto& p : positions) out.push_back(p.at(n));
  return out;
}

Vec2 euler_step(Vec2 z, const VelocityEvaluator& u_next, double dt) { return z + dt * u_next(wrap_to_torus(z)); }

Vec2 evaluate_velocity_at(const VelocityField& field, Vec2 z) {
  const int n = field.level.velocity_cells();
  z = wrap_to_torus(z);
  const double x = z.x * n, y = z.y * n;
  int i = static_cast<int>(std::floor(x)), j = static_cast<int>(std::floor(y));
  const double s = x - i, t = y - j;
  i %= n;
  j %= n;
  const int i1 = (i + 1) % n, j1 = (j + 1) % n;
  const auto at = [n](int a, int b) { return static_cast<std::size_t>(a + n * b); };
  const double w00 = (1 - s) * (1 - t), w10 = s * (1 - t), w01 = (1 - s) * t, w11 = s * t;
  return {w00 * field.ux[at(i, j)] + w10 * field.ux[at(i1, j)] + w01 * field.ux[at(i, j1)] + w11 * field.ux[at(i1, j1)],
          w00 * field.uy[at(i, j)] + w10 * field.uy[at(i1, j)] + w01 * field.uy[at(i, j1)] + w11 * field.uy[at(i1, j1)]};
}

Vec2 evaluate_velocity_at(const SpectralSolver& solver, const SpectralState& state, Vec2 z) {
  return solver.evaluate(state, z);
}

TracerIntegrator::TracerIntegrator(std::vector<Vec2> initial, double t0) : current_(std::move(initial)) {
  traj_.initial_positions = current_;
  traj_.times.push_back(t0);
  traj_.positions.resize(current_.size());
  for (std::size_t j = 0; j < current_.size(); ++j) traj_.positions[j].push_back(current_[j]);
}

void TracerIntegrator::advance(const VelocityEvaluator& u_next, double t_next) {
  const double dt = t_next - traj_.times.back();
  for (std::size_t j = 0; j < current_.size(); ++j) {
    current_[j] = euler_step(current_[j], u_next, dt);
    traj_.positions[j].push_back(current_[j]);
  }
  traj_.times.push_back(t_next);
}

TracerTrajectory integrate_tracers(const std::vector<Vec2>& initial, const std::vector<VelocityField>& velocity) {
  if (velocity.empty()) throw ConfigError("empty velocity trajectory");
  TracerIntegrator tracers(initial, velocity.front().time());
  for (std::size_t n = 1; n < velocity.size(); ++n) {
    const VelocityField& u = velocity[n];
    tracers.advance([&u](Vec2 z) { return evaluate_velocity_at(u, z); }, u.time());
  }
  return tracers.take();
}

void write_trajectory_csv(const TracerTrajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out.precision(17);
  out << "tracer,time,x,y\n";
  for (std::size_t j = 0; j < traj.tracer_count(); ++j)
    for (std::size_t n = 0; n < traj.times.size(); ++n)
      out << j << ',' << traj.times[n] << ',' << traj.positions[j][n].x << ',' << traj.positions[j][n].y << "\n";
}

}  // namespace nsmlmc
