#include "nsmlmc/spectral_solver.hpp"

#include <algorithm>
#include <cmath>

#include "nsmlmc/quadrature.hpp"

namespace nsmlmc {

std::complex<double> sqrt_weight_integral(int k) {
  // x = s^2 turns the integrand into the smooth 2 s^2 exp(2 pi i k s^2).
  static const QuadratureRule rule = gauss_legendre(12, 0.0, 1.0);
  const int panels = 16 + 4 * std::abs(k);
  const double w = 1.0 / panels;
  std::complex<double> sum = 0.0;
  for (int m = 0; m < panels; ++m) {
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double s = (m + rule.nodes[q]) * w;
      sum += rule.weights[q] * w * 2.0 * s * s * std::polar(1.0, kTwoPi * k * s * s);
    }
  }
  return sum;
}

SpectralSolver::SpectralSolver(int n, double viscosity)
    : n_(n), half_(n / 2 + 1), cutoff_(n / 3), nu_(viscosity) {
  if (n < 4 || (n & (n - 1)) != 0) throw ConfigError("spectral resolution must be a power of two >= 4");
  if (!(viscosity > 0.0)) throw ConfigError("viscosity must be positive");
  fft_ = std::make_unique<RealFft2d>(n);
  const std::size_t ns = fft_->spectral_size();
  kappa2_.resize(ns);
  retained_.resize(ns);
  for (std::size_t i = 0; i < ns; ++i) {
    const int a = kx(i), b = ky(i);
    kappa2_[i] = kTwoPi * kTwoPi * (static_cast<double>(a) * a + static_cast<double>(b) * b);
    retained_[i] = std::abs(a) <= cutoff_ && std::abs(b) <= cutoff_;
  }
  weight_integral_.resize(static_cast<std::size_t>(n) + 1);
  for (int k = -n / 2; k <= n / 2; ++k) weight_integral_[static_cast<std::size_t>(k + n / 2)] = sqrt_weight_integral(k);
  for (auto* b : {&ka_, &kb_, &kc_, &kd_, &la_, &lb_, &lc_, &ld_, &sx_, &sy_, &tmp_, &vx_, &vy_}) b->resize(ns);
  for (auto* b : {&rx_, &ry_, &rxx_, &rxy_, &ryy_}) b->resize(fft_->real_size());
}

void SpectralSolver::project_dealias(ComplexBuffer& ax, ComplexBuffer& ay) const {
  for (std::size_t i = 0; i < ax.size(); ++i) {
    if (!retained_[i]) {
      ax[i] = ay[i] = 0.0;
      continue;
    }
    const double a = kx(i), b = ky(i);
    const double k2 = a * a + b * b;
    if (k2 == 0.0) continue;
    const std::complex<double> d = (a * ax[i] + b * ay[i]) / k2;
    ax[i] -= a * d;
    ay[i] -= b * d;
  }
}

SpectralState SpectralSolver::zero_state(double t0) const {
  SpectralState s;
  s.n = n_;
  s.time = t0;
  s.ux.assign(fft_->spectral_size(), 0.0);
  s.uy.assign(fft_->spectral_size(), 0.0);
  return s;
}

namespace {

void sample(int n, const SpatialField& f, RealBuffer& fx, RealBuffer& fy) {
  const double h = 1.0 / n;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const Vec2 v = f(Vec2{i * h, j * h});
      fx[i + static_cast<std::size_t>(n) * j] = v.x;
      fy[i + static_cast<std::size_t>(n) * j] = v.y;
    }
}

}  // namespace

SpectralState SpectralSolver::make_state(const SpatialField& u0, double t0) const {
  SpectralState s = zero_state(t0);
  if (!u0) return s;
  RealBuffer fx(fft_->real_size()), fy(fft_->real_size());
  sample(n_, u0, fx, fy);
  fft_->forward(fx, s.ux);
  fft_->forward(fy, s.uy);
  const double scale = 1.0 / (static_cast<double>(n_) * n_);
  for (std::size_t i = 0; i < s.ux.size(); ++i) {
    s.ux[i] *= scale;
    s.uy[i] *= scale;
  }
  project_dealias(s.ux, s.uy);
  return s;
}

SpectralForcing SpectralSolver::make_forcing(const FieldExpansion& e, const ParamPoint& p) const {
  e.check_dimension(p);
  SpectralForcing f;
  RealBuffer fx(fft_->real_size()), fy(fft_->real_size());
  const double scale = 1.0 / (static_cast<double>(n_) * n_);
  auto add = [&](const SeparableField& term, double c) {
    if (c == 0.0) return;
    sample(n_, term.space, fx, fy);
    ComplexBuffer gx(fft_->spectral_size()), gy(fft_->spectral_size());
    fft_->forward(fx, gx);
    fft_->forward(fy, gy);
    for (std::size_t i = 0; i < gx.size(); ++i) {
      gx[i] *= scale;
      gy[i] *= scale;
    }
    project_dealias(gx, gy);
    auto time = term.time;
    f.coefficients.push_back([time, c](double t) { return c * time(t); });
    f.gx.push_back(std::move(gx));
    f.gy.push_back(std::move(gy));
  };
  for (const auto& term : e.mean_forcing) add(term, 1.0);
  const std::size_t active = std::min(p.dimension(), e.modes_forcing.size());
  for (std::size_t i = 0; i < active; ++i) add(e.modes_forcing[i], e.xi_bounds.to_physical(p.xi[i]));
  return f;
}

void SpectralSolver::nonlinear(const ComplexBuffer& ux, const ComplexBuffer& uy, const SpectralForcing& f, double t,
                               ComplexBuffer& nx, ComplexBuffer& ny) {
  // -(u.grad)u = -div(u u) for solenoidal u, products formed on the grid.
  tmp_ = ux;
  fft_->inverse(tmp_, rx_);
  tmp_ = uy;
  fft_->inverse(tmp_, ry_);
  const double scale = 1.0 / (static_cast<double>(n_) * n_);
  for (std::size_t i = 0; i < rx_.size(); ++i) {
    rxx_[i] = rx_[i] * rx_[i] * scale;
    rxy_[i] = rx_[i] * ry_[i] * scale;
    ryy_[i] = ry_[i] * ry_[i] * scale;
  }
  fft_->forward(rxx_, nx);
  fft_->forward(rxy_, sx_);
  fft_->forward(ryy_, ny);
  const std::complex<double> i2pi(0.0, kTwoPi);
  for (std::size_t i = 0; i < nx.size(); ++i) {
    const double a = kx(i), b = ky(i);
    const std::complex<double> uu = nx[i], uv = sx_[i], vv = ny[i];
    nx[i] = -i2pi * (a * uu + b * uv);
    ny[i] = -i2pi * (a * uv + b * vv);
  }
  for (std::size_t m = 0; m < f.coefficients.size(); ++m) {
    const double c = f.coefficients[m](t);
    if (c == 0.0) continue;
    for (std::size_t i = 0; i < nx.size(); ++i) {
      nx[i] += c * f.gx[m][i];
      ny[i] += c * f.gy[m][i];
    }
  }
  project_dealias(nx, ny);
}

void SpectralSolver::step(SpectralState& s, const SpectralForcing& f, double dt) {
  const std::size_t ns = s.ux.size();
  const double t = s.time;
  ComplexBuffer& ax = ka_;
  ComplexBuffer& ay = la_;
  ComplexBuffer& bx = kb_;
  ComplexBuffer& by = lb_;
  ComplexBuffer& cx = kc_;
  ComplexBuffer& cy = lc_;
  ComplexBuffer& dx = kd_;
  ComplexBuffer& dy = ld_;
  ComplexBuffer& vx = vx_;
  ComplexBuffer& vy = vy_;
  if (dt != decay_dt_) {
    half_decay_.resize(ns);
    for (std::size_t i = 0; i < ns; ++i) half_decay_[i] = std::exp(-nu_ * kappa2_[i] * 0.5 * dt);
    decay_dt_ = dt;
  }

  nonlinear(s.ux, s.uy, f, t, ax, ay);
  for (std::size_t i = 0; i < ns; ++i) {
    const double eh = half_decay_[i];
    vx[i] = eh * (s.ux[i] + 0.5 * dt * ax[i]);
    vy[i] = eh * (s.uy[i] + 0.5 * dt * ay[i]);
  }
  nonlinear(vx, vy, f, t + 0.5 * dt, bx, by);
  for (std::size_t i = 0; i < ns; ++i) {
    const double eh = half_decay_[i];
    vx[i] = eh * s.ux[i] + 0.5 * dt * bx[i];
    vy[i] = eh * s.uy[i] + 0.5 * dt * by[i];
  }
  nonlinear(vx, vy, f, t + 0.5 * dt, cx, cy);
  for (std::size_t i = 0; i < ns; ++i) {
    const double eh = half_decay_[i];
    vx[i] = eh * (eh * s.ux[i] + dt * cx[i]);
    vy[i] = eh * (eh * s.uy[i] + dt * cy[i]);
  }
  nonlinear(vx, vy, f, t + dt, dx, dy);
  bool finite = true;
  for (std::size_t i = 0; i < ns; ++i) {
    const double eh = half_decay_[i];
    const double e = eh * eh;
    s.ux[i] = e * s.ux[i] + dt / 6.0 * (e * ax[i] + 2.0 * eh * (bx[i] + cx[i]) + dx[i]);
    s.uy[i] = e * s.uy[i] + dt / 6.0 * (e * ay[i] + 2.0 * eh * (by[i] + cy[i]) + dy[i]);
    finite = finite && std::isfinite(s.ux[i].real()) && std::isfinite(s.ux[i].imag()) &&
             std::isfinite(s.uy[i].real()) && std::isfinite(s.uy[i].imag());
  }
  if (!finite) throw BlowUp("non-finite spectral coefficients at t = " + std::to_string(t + dt));
  s.time = t + dt;
}

Vec2 SpectralSolver::evaluate(const SpectralState& s, Vec2 z) const {
  z = wrap_to_torus(z);
  const int c = cutoff_;
  std::vector<std::complex<double>> ex(static_cast<std::size_t>(c) + 1), ey(2 * static_cast<std::size_t>(c) + 1);
  for (int k = 0; k <= c; ++k) ex[k] = std::polar(1.0, kTwoPi * k * z.x);
  for (int k = -c; k <= c; ++k) ey[k + c] = std::polar(1.0, kTwoPi * k * z.y);
  Vec2 u{};
  for (int a = 0; a <= c; ++a) {
    std::complex<double> sx = 0.0, sy = 0.0;
    for (int b = -c; b <= c; ++b) {
      const std::size_t idx = a + static_cast<std::size_t>(half_) * ((b + n_) % n_);
      sx += s.ux[idx] * ey[b + c];
      sy += s.uy[idx] * ey[b + c];
    }
    const double w = a == 0 ? 1.0 : 2.0;
    u.x += w * (ex[a] * sx).real();
    u.y += w * (ex[a] * sy).real();
  }
  return u;
}

GridField SpectralSolver::to_grid(const SpectralState& s) const {
  GridField g(n_);
  ComplexBuffer c = s.ux;
  RealBuffer r(fft_->real_size());
  fft_->inverse(c, r);
  std::copy(r.begin(), r.end(), g.ux.begin());
  c = s.uy;
  fft_->inverse(c, r);
  std::copy(r.begin(), r.end(), g.uy.begin());
  return g;
}

double SpectralSolver::divergence(const SpectralState& s) const {
  double div = 0.0, mag = 0.0;
  for (std::size_t i = 0; i < s.ux.size(); ++i) {
    div = std::max(div, std::abs(static_cast<double>(kx(i)) * s.ux[i] + static_cast<double>(ky(i)) * s.uy[i]));
    mag = std::max(mag, std::max(std::abs(s.ux[i]), std::abs(s.uy[i])) * std::sqrt(kappa2_[i]) / kTwoPi);
  }
  return mag > 0.0 ? div / mag : 0.0;
}

double SpectralSolver::kinetic_energy(const SpectralState& s) const {
  double e = 0.0;
  for (std::size_t i = 0; i < s.ux.size(); ++i) {
    const int a = kx(i);
    const double w = (a == 0 || 2 * a == n_) ? 1.0 : 2.0;
    e += w * (std::norm(s.ux[i]) + std::norm(s.uy[i]));
  }
  return 0.5 * e;
}

double SpectralSolver::qoi(const SpectralState& s) const {
  double q = 0.0;
  const std::complex<double> i2pi(0.0, kTwoPi);
  for (std::size_t i = 0; i < s.ux.size(); ++i) {
    const int a = kx(i), b = ky(i);
    if (2 * a == n_ || 2 * std::abs(b) == n_) continue;
    const std::complex<double> curl = i2pi * (static_cast<double>(b) * s.ux[i] - static_cast<double>(a) * s.uy[i]);
    const double w = a == 0 ? 1.0 : 2.0;
    q += w * (curl * weight_integral_[a + n_ / 2] * weight_integral_[b + n_ / 2]).real();
  }
  return 100.0 * q;
}

SpectralState solve_spectral(SpectralSolver& solver, const FieldExpansion& expansion, const ParamPoint& p,
                             double horizon, double dt, const SpectralObserver& observer) {
  if (!(dt > 0.0) || !(horizon > 0.0)) throw ConfigError("time step and horizon must be positive");
  const double ratio = horizon / dt;
  const long steps = std::lround(ratio);
  if (std::abs(ratio - static_cast<double>(steps)) > 1e-9 * ratio)
    throw ConfigError("horizon must be an integer multiple of the spectral time step");
  expansion.check_dimension(p);
  SpectralState s = solver.make_state(
      expansion.mean_initial || !expansion.modes_initial.empty()
          ? SpatialField([&](Vec2 x) { return initial_velocity_at(expansion, p, x); })
          : SpatialField{});
  const SpectralForcing f = solver.make_forcing(expansion, p);
  if (observer) observer(s);
  for (long n = 0; n < steps; ++n) {
    solver.step(s, f, dt);
    s.time = horizon * static_cast<double>(n + 1) / static_cast<double>(steps);
    if (observer) observer(s);
  }
  return s;
}

}  // namespace nsmlmc
