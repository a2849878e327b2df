#include "nsmlmc/fe_solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace nsmlmc {

namespace {

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw BlowUp(std::string("non-finite ") + what);
}

void remove_mean(std::vector<double>& p) {
  if (p.empty()) return;
  const double mean = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
  for (double& x : p) x -= mean;
}

ForcingLoad spatial_load(const FeLevel& level, const SpatialField& g) {
  ForcingLoad l;
  level.load_vector(g, l.fx, l.fy);
  return l;
}

}  // namespace

FeProblem::FeProblem(const LevelSpec& spec, FieldExpansion expansion, FeSolverOptions options)
    : level_(std::make_shared<FeLevel>(spec)), expansion_(std::move(expansion)), options_(options) {
  if (!(options_.viscosity > 0.0)) throw ConfigError("viscosity must be positive");
  const FeLevel& lv = *level_;
  const double dt = spec.time_step();
  static_block_ = lv.mass();
  for (std::size_t k = 0; k < static_block_.vals.size(); ++k)
    static_block_.vals[k] = lv.mass().vals[k] / dt + options_.viscosity * lv.stiffness().vals[k];
  step_pc_ = std::make_unique<StokesPreconditioner>(lv, 1.0 / dt, options_.viscosity, options_.schur,
                                                    options_.viscosity);
  projection_pc_ = std::make_unique<StokesPreconditioner>(lv, 1.0, 0.0, SchurApproximation::StokesFourier, 1.0);

  for (const auto& term : expansion_.mean_forcing) mean_loads_.push_back(spatial_load(lv, term.space));
  std::size_t modes = expansion_.modes_forcing.size();
  if (spec.truncation > 0) modes = std::min(modes, spec.truncation);
  for (std::size_t i = 0; i < modes; ++i) mode_loads_.push_back(spatial_load(lv, expansion_.modes_forcing[i].space));
}

ForcingLoad FeProblem::forcing_load(const ParamPoint& p, double t) const {
  const std::size_t nv = level_->velocity_nodes();
  ForcingLoad out{std::vector<double>(nv, 0.0), std::vector<double>(nv, 0.0)};
  auto accumulate = [&](const ForcingLoad& l, double c) {
    if (c == 0.0) return;
    for (std::size_t k = 0; k < nv; ++k) {
      out.fx[k] += c * l.fx[k];
      out.fy[k] += c * l.fy[k];
    }
  };
  for (std::size_t i = 0; i < mean_loads_.size(); ++i) accumulate(mean_loads_[i], expansion_.mean_forcing[i].time(t));
  const std::size_t active = std::min(p.dimension(), expansion_.modes_forcing.size());
  if (active > mode_loads_.size())
    throw ConfigError("parameter dimension " + std::to_string(p.dimension()) + " exceeds level truncation " +
                      std::to_string(mode_loads_.size()));
  for (std::size_t i = 0; i < active; ++i)
    accumulate(mode_loads_[i], expansion_.xi_bounds.to_physical(p.xi[i]) * expansion_.modes_forcing[i].time(t));
  return out;
}

VelocityField FeProblem::project(const GridField& nodal) const {
  const FeLevel& lv = *level_;
  if (nodal.n != lv.nv()) throw ConfigError("nodal field does not match the velocity mesh");
  const std::size_t nv = lv.velocity_nodes();
  const std::size_t np = lv.pressure_nodes();
  std::vector<double> rhs(2 * nv + np, 0.0), x(2 * nv + np, 0.0);
  lv.mass().multiply(nodal.ux.data(), rhs.data());
  lv.mass().multiply(nodal.uy.data(), rhs.data() + nv);

  StokesPreconditioner::Workspace ws;
  const LinearMap op = [&](const double* in, double* out) { apply_saddle(lv, lv.mass(), in, out); };
  const LinearMap pc = [&](const double* in, double* out) { projection_pc_->apply(in, out, ws); };
  KrylovOptions ko = options_.krylov;
  ko.tolerance = std::min(ko.tolerance, 1e-12);
  fgmres(op, pc, rhs, x, ko);

  VelocityField u;
  u.level = spec();
  u.ux.assign(x.begin(), x.begin() + nv);
  u.uy.assign(x.begin() + nv, x.begin() + 2 * nv);
  u.p.assign(np, 0.0);
  check_finite(u.ux, "initial velocity");
  check_finite(u.uy, "initial velocity");
  return u;
}

VelocityField FeProblem::initial_state(const ParamPoint& p) const {
  expansion_.check_dimension(p);
  return project(evaluate_initial_velocity(expansion_, p, level_->nv()));
}

ImexStepper::ImexStepper(const FeProblem& problem) : problem_(&problem), a_(problem.static_block()) {}

SaddleSolveStats ImexStepper::step(const VelocityField& state, const ForcingLoad& forcing, VelocityField& next) {
  const FeProblem& pb = *problem_;
  const FeLevel& lv = pb.level();
  const std::size_t nv = lv.velocity_nodes();
  const std::size_t np = lv.pressure_nodes();
  check_finite(state.ux, "velocity state");
  check_finite(state.uy, "velocity state");

  std::copy(pb.static_block().vals.begin(), pb.static_block().vals.end(), a_.vals.begin());
  lv.add_convection(state.ux.data(), state.uy.data(), a_);

  const double inv_dt = 1.0 / lv.spec().time_step();
  rhs_.assign(2 * nv + np, 0.0);
  lv.mass().multiply(state.ux.data(), rhs_.data());
  lv.mass().multiply(state.uy.data(), rhs_.data() + nv);
  for (std::size_t k = 0; k < nv; ++k) {
    rhs_[k] = rhs_[k] * inv_dt + forcing.fx[k];
    rhs_[nv + k] = rhs_[nv + k] * inv_dt + forcing.fy[k];
  }

  x_.resize(2 * nv + np);
  std::copy(state.ux.begin(), state.ux.end(), x_.begin());
  std::copy(state.uy.begin(), state.uy.end(), x_.begin() + nv);
  if (state.p.size() == np)
    std::copy(state.p.begin(), state.p.end(), x_.begin() + 2 * nv);
  else
    std::fill(x_.begin() + 2 * nv, x_.end(), 0.0);

  const LinearMap op = [&](const double* in, double* out) { apply_saddle(lv, a_, in, out); };
  const LinearMap pc = [&](const double* in, double* out) { pb.step_preconditioner().apply(in, out, ws_); };
  const SaddleSolveStats stats = fgmres(op, pc, rhs_, x_, pb.options().krylov);

  next.level = state.level;
  next.time_index = state.time_index + 1;
  next.ux.assign(x_.begin(), x_.begin() + nv);
  next.uy.assign(x_.begin() + nv, x_.begin() + 2 * nv);
  next.p.assign(x_.begin() + 2 * nv, x_.end());
  remove_mean(next.p);
  check_finite(next.ux, "velocity after step");
  check_finite(next.uy, "velocity after step");
  return stats;
}

SaddleSolveStats imex_step(const FeProblem& problem, const VelocityField& state, const ForcingLoad& forcing,
                           VelocityField& next) {
  ImexStepper stepper(problem);
  return stepper.step(state, forcing, next);
}

VelocityField solve_forward(const FeProblem& problem, const ParamPoint& p, const StepObserver& observer) {
  const LevelSpec& spec = problem.spec();
  ParamPoint q = p;
  if (spec.truncation > 0 && q.dimension() > spec.truncation) q = q.truncated(spec.truncation);
  VelocityField cur = problem.initial_state(q);
  if (observer) observer(cur, SaddleSolveStats{});
  ImexStepper stepper(problem);
  VelocityField next;
  for (int n = 0; n < spec.steps(); ++n) {
    const ForcingLoad f = problem.forcing_load(q, spec.time(n + 1));
    const SaddleSolveStats stats = stepper.step(cur, f, next);
    std::swap(cur, next);
    if (observer) observer(cur, stats);
  }
  return cur;
}

std::vector<VelocityField> solve_forward_trajectory(const FeProblem& problem, const ParamPoint& p) {
  std::vector<VelocityField> out;
  solve_forward(problem, p, [&](const VelocityField& u, const SaddleSolveStats&) { out.push_back(u); });
  return out;
}

double kinetic_energy(const FeLevel& level, const VelocityField& u) {
  std::vector<double> mu(level.velocity_nodes());
  double e = 0.0;
  level.mass().multiply(u.ux.data(), mu.data());
  e += std::inner_product(mu.begin(), mu.end(), u.ux.begin(), 0.0);
  level.mass().multiply(u.uy.data(), mu.data());
  e += std::inner_product(mu.begin(), mu.end(), u.uy.begin(), 0.0);
  return 0.5 * e;
}

double divergence_residual(const FeLevel& level, const VelocityField& u) {
  std::vector<double> r(level.pressure_nodes());
  level.div_x().multiply(u.ux.data(), r.data());
  level.div_y().multiply_add(u.uy.data(), r.data());
  double m = 0.0;
  for (double x : r) m = std::max(m, std::abs(x));
  return m;
}

double pressure_mean(const VelocityField& u) {
  if (u.p.empty()) return 0.0;
  return std::accumulate(u.p.begin(), u.p.end(), 0.0) / static_cast<double>(u.p.size());
}

namespace {

/// Calls visit(x, w, value, jacobian) at every quadrature point of every velocity cell.
template <class Visit>
void for_each_quadrature_point(const FeLevel& level, const std::vector<double>& ux, const std::vector<double>& uy,
                               Visit&& visit) {
  const int n = level.nv();
  const double h = level.h();
  const auto& gx = FeLevel::gauss_nodes();
  const auto& gw = FeLevel::gauss_weights();
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int nodes[4] = {level.velocity_node(i, j), level.velocity_node(i + 1, j), level.velocity_node(i, j + 1),
                            level.velocity_node(i + 1, j + 1)};
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          Vec2 v{};
          std::array<double, 4> jac{};
          for (int q = 0; q < 4; ++q) {
            const double phi = ReferenceQ1::value(q, gx[a], gx[b]);
            const double dx = ReferenceQ1::ds(q, gx[a], gx[b]) / h;
            const double dy = ReferenceQ1::dt(q, gx[a], gx[b]) / h;
            const double cx = ux[nodes[q]], cy = uy[nodes[q]];
            v.x += cx * phi;
            v.y += cy * phi;
            jac[0] += cx * dx;
            jac[1] += cx * dy;
            jac[2] += cy * dx;
            jac[3] += cy * dy;
          }
          visit(Vec2{(i + gx[a]) * h, (j + gx[b]) * h}, gw[a] * gw[b] * h * h, v, jac);
        }
      }
    }
  }
}

}  // namespace

double h1_error(const FeLevel& level, const VelocityField& u, const AnalyticVelocity& exact) {
  double s = 0.0;
  for_each_quadrature_point(level, u.ux, u.uy, [&](Vec2 x, double w, Vec2 v, const std::array<double, 4>& jac) {
    const Vec2 e = v - exact.value(x);
    const auto g = exact.jacobian(x);
    double d = e.x * e.x + e.y * e.y;
    for (int k = 0; k < 4; ++k) d += (jac[k] - g[k]) * (jac[k] - g[k]);
    s += w * d;
  });
  return std::sqrt(s);
}

double l2_error(const FeLevel& level, const VelocityField& u, const std::function<Vec2(Vec2)>& exact) {
  double s = 0.0;
  for_each_quadrature_point(level, u.ux, u.uy, [&](Vec2 x, double w, Vec2 v, const std::array<double, 4>&) {
    const Vec2 e = v - exact(x);
    s += w * (e.x * e.x + e.y * e.y);
  });
  return std::sqrt(s);
}

double h1_norm(const FeLevel& level, const std::vector<double>& ux, const std::vector<double>& uy) {
  double s = 0.0;
  for_each_quadrature_point(level, ux, uy, [&](Vec2, double w, Vec2 v, const std::array<double, 4>& jac) {
    s += w * (v.x * v.x + v.y * v.y + jac[0] * jac[0] + jac[1] * jac[1] + jac[2] * jac[2] + jac[3] * jac[3]);
  });
  return std::sqrt(s);
}

double fe_qoi(const FeLevel& level, const VelocityField& u) {
  const auto& cx = level.qoi_coeff_x();
  const auto& cy = level.qoi_coeff_y();
  return std::inner_product(cx.begin(), cx.end(), u.ux.begin(), 0.0) +
         std::inner_product(cy.begin(), cy.end(), u.uy.begin(), 0.0);
}

void write_velocity_csv(const VelocityField& u, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  const int n = u.level.velocity_cells();
  out.precision(17);
  out << "# n=" << n << " t=" << u.time() << "\n";
  out << "x,y,ux,uy\n";
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i + n * j);
      out << static_cast<double>(i) / n << ',' << static_cast<double>(j) / n << ',' << u.ux[k] << ',' << u.uy[k]
          << "\n";
    }
}

}  // namespace nsmlmc
