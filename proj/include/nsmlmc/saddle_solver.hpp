#pragma once

#include <functional>
#include <vector>

#include "nsmlmc/fe_level.hpp"
#include "nsmlmc/fft.hpp"

namespace nsmlmc {

struct SaddleSolveStats {
  int iterations = 0;
  double residual = 0.0;  // final relative residual
  double wall_time = 0.0;
};

/// Approximation of the pressure Schur complement S = B A^-1 B^T.
enum class SchurApproximation {
  /// Exact Schur complement of the convection-free block alpha M + beta K.
  StokesFourier,
  /// Pressure mass matrix scaled by 1/viscosity.
  PressureMass,
};

SchurApproximation parse_schur_approximation(const std::string& name);

/// Unknowns of a saddle system laid out as [u_x | u_y | p].
struct SaddleLayout {
  std::size_t velocity = 0;
  std::size_t pressure = 0;
  std::size_t size() const { return 2 * velocity + pressure; }
};

/// Block-factorization preconditioner for [A, B^T; B, 0] with A ~ alpha M + beta K.
/// Every block of the convection-free operator is circulant on the periodic mesh, so
/// the velocity block and the Schur complement are inverted mode by mode in Fourier
/// space (each coarse pressure mode couples four aliased fine velocity modes).
class StokesPreconditioner {
 public:
  StokesPreconditioner(const FeLevel& level, double alpha, double beta, SchurApproximation schur,
                       double viscosity);

  struct Workspace {
    RealBuffer rx, ry, rp, ux, uy, p;
    ComplexBuffer fx, fy, fp, gx, gy, gp;
  };

  /// z = P^-1 r. The pressure part of z has zero mean.
  void apply(const double* r, double* z, Workspace& ws) const;

  const SaddleLayout& layout() const { return layout_; }

 private:
  const FeLevel* level_;
  SaddleLayout layout_;
  std::vector<double> inv_a0_;     // fine modes
  std::vector<double> inv_schur_;  // coarse modes, 0 for the constant mode
};

struct KrylovOptions {
  double tolerance = 1e-8;
  int max_iterations = 500;
  int restart = 30;
};

using LinearMap = std::function<void(const double* in, double* out)>;

/// Right-preconditioned restarted flexible GMRES. `x` holds the initial guess and
/// receives the solution. Convergence is ||b - A x|| <= tol * ||b||.
/// Throws SolverDiverged when max_iterations is exhausted.
SaddleSolveStats fgmres(const LinearMap& op, const LinearMap& precond, const std::vector<double>& b,
                        std::vector<double>& x, const KrylovOptions& options);

/// y = [A u_x + Bx^T p; A u_y + By^T p; Bx u_x + By u_y].
void apply_saddle(const FeLevel& level, const StencilMatrix& a, const double* x, double* y);

}  // namespace nsmlmc
