#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "nsmlmc/fe_level.hpp"
#include "nsmlmc/parametrization.hpp"
#include "nsmlmc/saddle_solver.hpp"

namespace nsmlmc {

struct FeSolverOptions {
  double viscosity = 0.1;
  KrylovOptions krylov;
  SchurApproximation schur = SchurApproximation::StokesFourier;
};

/// Velocity on the level's velocity mesh and zero-mean pressure on its pressure mesh at t_n.
struct VelocityField {
  LevelSpec level;
  int time_index = 0;
  std::vector<double> ux;
  std::vector<double> uy;
  std::vector<double> p;

  double time() const { return level.time(time_index); }
};

/// Load vector (f(t), v) split by component.
struct ForcingLoad {
  std::vector<double> fx;
  std::vector<double> fy;
};

/// Everything about one level that does not change during a forward solve:
/// the assembled discretization, the static block M/dt + nu K, the FFT
/// preconditioners, and precomputed load vectors of the forcing terms.
/// Shared read-only between chains.
class FeProblem {
 public:
  FeProblem(const LevelSpec& spec, FieldExpansion expansion, FeSolverOptions options);

  const FeLevel& level() const { return *level_; }
  const LevelSpec& spec() const { return level_->spec(); }
  const FeSolverOptions& options() const { return options_; }
  const FieldExpansion& expansion() const { return expansion_; }
  const StencilMatrix& static_block() const { return static_block_; }
  const StokesPreconditioner& step_preconditioner() const { return *step_pc_; }

  ForcingLoad forcing_load(const ParamPoint& p, double t) const;
  /// Interpolates u0 at the velocity nodes, then projects onto discretely divergence-free fields.
  VelocityField initial_state(const ParamPoint& p) const;
  /// L^2 projection of nodal values onto the discretely divergence-free subspace.
  VelocityField project(const GridField& nodal) const;

 private:
  std::shared_ptr<const FeLevel> level_;
  FieldExpansion expansion_;
  FeSolverOptions options_;
  StencilMatrix static_block_;
  std::unique_ptr<StokesPreconditioner> step_pc_;
  std::unique_ptr<StokesPreconditioner> projection_pc_;
  std::vector<ForcingLoad> mean_loads_;
  std::vector<ForcingLoad> mode_loads_;
};

/// Per-solve mutable state for the IMEX Euler scheme; one instance per chain.
class ImexStepper {
 public:
  explicit ImexStepper(const FeProblem& problem);

  /// Solves (u^{n+1}/dt, v) + nu(grad u^{n+1}, grad v) + c(u^n; u^{n+1}, v) + b(v, p^{n+1})
  ///        = (f(t_{n+1}) + u^n/dt, v),   b(u^{n+1}, r) = 0.
  SaddleSolveStats step(const VelocityField& state, const ForcingLoad& forcing, VelocityField& next);

 private:
  const FeProblem* problem_;
  StencilMatrix a_;
  std::vector<double> rhs_, x_;
  StokesPreconditioner::Workspace ws_;
};

SaddleSolveStats imex_step(const FeProblem& problem, const VelocityField& state, const ForcingLoad& forcing,
                           VelocityField& next);

using StepObserver = std::function<void(const VelocityField&, const SaddleSolveStats&)>;

/// Integrates from t_0 to t_N. The observer sees every state, the initial one included,
/// and only the current step is retained. Returns the final state.
VelocityField solve_forward(const FeProblem& problem, const ParamPoint& p, const StepObserver& observer = {});

/// Full trajectory u^0..u^N.
std::vector<VelocityField> solve_forward_trajectory(const FeProblem& problem, const ParamPoint& p);

/// 1/2 u^T M u.
double kinetic_energy(const FeLevel& level, const VelocityField& u);
/// max_r |b(u, r)| over pressure basis functions.
double divergence_residual(const FeLevel& level, const VelocityField& u);
double pressure_mean(const VelocityField& u);

/// Analytic field and its Jacobian [du1/dx, du1/dy, du2/dx, du2/dy] for error norms.
struct AnalyticVelocity {
  std::function<Vec2(Vec2)> value;
  std::function<std::array<double, 4>(Vec2)> jacobian;
};

/// ||u_h - u||_{H^1} by 3x3 Gauss quadrature on every velocity cell.
double h1_error(const FeLevel& level, const VelocityField& u, const AnalyticVelocity& exact);
/// ||u_h - u||_{L^2}.
double l2_error(const FeLevel& level, const VelocityField& u, const std::function<Vec2(Vec2)>& exact);
/// ||u_h - v_h||_{H^1} between two discrete fields on the same level.
double h1_norm(const FeLevel& level, const std::vector<double>& ux, const std::vector<double>& uy);

/// Weighted-curl quantity of interest 100 * int sqrt(x1 x2) (du1/dx2 - du2/dx1) dx.
double fe_qoi(const FeLevel& level, const VelocityField& u);

/// Velocity snapshot dump: header "# n=<nodes per side> t=<time>" then x,y,ux,uy rows.
void write_velocity_csv(const VelocityField& u, const std::string& path);

}  // namespace nsmlmc
