#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "nsmlmc/fft.hpp"
#include "nsmlmc/parametrization.hpp"

namespace nsmlmc {

/// Fourier coefficients of the velocity, u(x) = sum_k u_k exp(2 pi i k.x), in the
/// half-complex layout of RealFft2d.
struct SpectralState {
  int n = 0;
  double time = 0.0;
  ComplexBuffer ux;
  ComplexBuffer uy;
};

/// Projected, dealiased spectra of separable forcing terms: f(t) = sum_m c_m(t) g_m.
struct SpectralForcing {
  std::vector<std::function<double(double)>> coefficients;
  std::vector<ComplexBuffer> gx;
  std::vector<ComplexBuffer> gy;

  bool empty() const { return coefficients.empty(); }
};

/// Pseudo-spectral solver for the projected-velocity form of Navier-Stokes on the
/// unit torus. Time stepping is RK4 in integrating-factor form (viscous decay exact),
/// nonlinear products are dealiased by the 2/3 rule. One instance per chain.
class SpectralSolver {
 public:
  SpectralSolver(int n, double viscosity);

  int n() const { return n_; }
  double viscosity() const { return nu_; }
  /// Largest retained |k_i| under the 2/3 rule.
  int cutoff() const { return cutoff_; }

  /// Samples u0 on the grid, transforms, projects and dealiases.
  SpectralState make_state(const SpatialField& u0, double t0 = 0.0) const;
  SpectralState zero_state(double t0 = 0.0) const;
  SpectralForcing make_forcing(const FieldExpansion& expansion, const ParamPoint& p) const;

  /// One RK4 step; throws BlowUp on non-finite coefficients.
  void step(SpectralState& s, const SpectralForcing& f, double dt);

  /// Exact evaluation of the truncated Fourier series at z (wrapped to the torus).
  Vec2 evaluate(const SpectralState& s, Vec2 z) const;
  GridField to_grid(const SpectralState& s) const;

  /// max |k.u_k| / max |u_k| over all modes.
  double divergence(const SpectralState& s) const;
  /// 1/2 int |u|^2 dx.
  double kinetic_energy(const SpectralState& s) const;
  /// Weighted-curl quantity of interest via exact weight integrals per mode.
  double qoi(const SpectralState& s) const;

 private:
  void nonlinear(const ComplexBuffer& ux, const ComplexBuffer& uy, const SpectralForcing& f, double t,
                 ComplexBuffer& nx, ComplexBuffer& ny);
  void project_dealias(ComplexBuffer& ax, ComplexBuffer& ay) const;
  int kx(std::size_t idx) const { return static_cast<int>(idx % static_cast<std::size_t>(half_)); }
  int ky(std::size_t idx) const { return signed_wavenumber(static_cast<int>(idx / half_), n_); }

  int n_;
  int half_;
  int cutoff_;
  double nu_;
  std::unique_ptr<RealFft2d> fft_;
  std::vector<double> kappa2_;   // |2 pi k|^2
  std::vector<char> retained_;   // 2/3-rule mask
  std::vector<std::complex<double>> weight_integral_;  // int_0^1 sqrt(x) e^{2 pi i k x} dx, k = -n/2..n/2
  double decay_dt_ = 0.0;
  std::vector<double> half_decay_;  // exp(-nu |2 pi k|^2 dt / 2)
  // Workspace.
  ComplexBuffer ka_, kb_, kc_, kd_, la_, lb_, lc_, ld_, sx_, sy_, tmp_, vx_, vy_;
  RealBuffer rx_, ry_, rxx_, rxy_, ryy_;
};

/// int_0^1 sqrt(x) exp(2 pi i k x) dx.
std::complex<double> sqrt_weight_integral(int k);

using SpectralObserver = std::function<void(const SpectralState&)>;

/// Integrates u0 = expansion initial field at p from t = 0 to `horizon` with fixed step dt.
/// The observer sees the initial state and every subsequent one.
SpectralState solve_spectral(SpectralSolver& solver, const FieldExpansion& expansion, const ParamPoint& p,
                             double horizon, double dt, const SpectralObserver& observer = {});

}  // namespace nsmlmc
