#include "nsmlmc/saddle_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>

namespace nsmlmc {

SchurApproximation parse_schur_approximation(const std::string& name) {
  if (name == "stokes-fourier") return SchurApproximation::StokesFourier;
  if (name == "pressure-mass") return SchurApproximation::PressureMass;
  throw ConfigError("unknown Schur complement approximation '" + name + "'");
}

StokesPreconditioner::StokesPreconditioner(const FeLevel& level, double alpha, double beta,
                                           SchurApproximation schur, double viscosity)
    : level_(&level), layout_{level.velocity_nodes(), level.pressure_nodes()} {
  const int n = level.nv();
  const int nc = level.np();
  inv_a0_.resize(level.velocity_nodes());
  for (std::size_t k = 0; k < inv_a0_.size(); ++k)
    inv_a0_[k] = 1.0 / (alpha * level.mass_symbol()[k] + beta * level.stiffness_symbol()[k]);

  inv_schur_.assign(level.pressure_nodes(), 0.0);
  const auto& sx = level.div_x_symbol();
  const auto& sy = level.div_y_symbol();
  for (int ky = 0; ky < nc; ++ky) {
    for (int kx = 0; kx < nc; ++kx) {
      if (kx == 0 && ky == 0) continue;  // zero-mean pressure
      const auto coarse = static_cast<std::size_t>(kx) + static_cast<std::size_t>(nc) * ky;
      double s = 0.0;
      if (schur == SchurApproximation::StokesFourier) {
        for (int b = 0; b < 2; ++b) {
          for (int a = 0; a < 2; ++a) {
            const auto idx = static_cast<std::size_t>(kx + a * nc) + static_cast<std::size_t>(n) * (ky + b * nc);
            s += 0.25 * (std::norm(sx[idx]) + std::norm(sy[idx])) * inv_a0_[idx];
          }
        }
      } else {
        s = level.pressure_mass_symbol()[coarse] / viscosity;
      }
      inv_schur_[coarse] = s > 0.0 ? 1.0 / s : 0.0;
    }
  }
}

void StokesPreconditioner::apply(const double* r, double* z, Workspace& ws) const {
  const FeLevel& lv = *level_;
  const int n = lv.nv();
  const int nc = lv.np();
  const int hf = n / 2 + 1;
  const int hc = nc / 2 + 1;
  const std::size_t nvel = layout_.velocity;
  const std::size_t npre = layout_.pressure;

  ws.rx.assign(r, r + nvel);
  ws.ry.assign(r + nvel, r + 2 * nvel);
  ws.rp.assign(r + 2 * nvel, r + 2 * nvel + npre);
  lv.velocity_fft().forward(ws.rx, ws.fx);
  lv.velocity_fft().forward(ws.ry, ws.fy);
  lv.pressure_fft().forward(ws.rp, ws.fp);
  ws.gx.assign(ws.fx.size(), 0.0);
  ws.gy.assign(ws.fy.size(), 0.0);
  ws.gp.assign(ws.fp.size(), 0.0);

  // Full-spectrum lookups into half-complex storage via conjugate symmetry.
  auto fine = [&](const ComplexBuffer& a, int kx, int ky) {
    if (kx <= n / 2) return a[kx + static_cast<std::size_t>(hf) * ky];
    return std::conj(a[(n - kx) + static_cast<std::size_t>(hf) * ((n - ky) % n)]);
  };
  auto coarse = [&](const ComplexBuffer& a, int kx, int ky) {
    if (kx <= nc / 2) return a[kx + static_cast<std::size_t>(hc) * ky];
    return std::conj(a[(nc - kx) + static_cast<std::size_t>(hc) * ((nc - ky) % nc)]);
  };

  const auto& sx = lv.div_x_symbol();
  const auto& sy = lv.div_y_symbol();
  for (int ky = 0; ky < nc; ++ky) {
    for (int kx = 0; kx < nc; ++kx) {
      std::complex<double> rx[4], ry[4];
      std::size_t idx[4];
      int fkx[4], fky[4];
      std::complex<double> t = 0.0;
      for (int m = 0; m < 4; ++m) {
        fkx[m] = kx + (m & 1) * nc;
        fky[m] = ky + (m >> 1) * nc;
        idx[m] = static_cast<std::size_t>(fkx[m]) + static_cast<std::size_t>(n) * fky[m];
        rx[m] = fine(ws.fx, fkx[m], fky[m]);
        ry[m] = fine(ws.fy, fkx[m], fky[m]);
        t += (sx[idx[m]] * rx[m] + sy[idx[m]] * ry[m]) * inv_a0_[idx[m]];
      }
      const std::complex<double> ph =
          (0.25 * t - coarse(ws.fp, kx, ky)) * inv_schur_[kx + static_cast<std::size_t>(nc) * ky];
      for (int m = 0; m < 4; ++m) {
        if (fkx[m] > n / 2) continue;
        const auto out = fkx[m] + static_cast<std::size_t>(hf) * fky[m];
        ws.gx[out] = (rx[m] - std::conj(sx[idx[m]]) * ph) * inv_a0_[idx[m]];
        ws.gy[out] = (ry[m] - std::conj(sy[idx[m]]) * ph) * inv_a0_[idx[m]];
      }
      if (kx <= nc / 2) ws.gp[kx + static_cast<std::size_t>(hc) * ky] = ph;
    }
  }

  lv.velocity_fft().inverse(ws.gx, ws.ux);
  lv.velocity_fft().inverse(ws.gy, ws.uy);
  lv.pressure_fft().inverse(ws.gp, ws.p);
  const double sf = 1.0 / (static_cast<double>(n) * n);
  const double sc = 1.0 / (static_cast<double>(nc) * nc);
  for (std::size_t i = 0; i < nvel; ++i) {
    z[i] = ws.ux[i] * sf;
    z[nvel + i] = ws.uy[i] * sf;
  }
  for (std::size_t i = 0; i < npre; ++i) z[2 * nvel + i] = ws.p[i] * sc;
}

void apply_saddle(const FeLevel& level, const StencilMatrix& a, const double* x, double* y) {
  const std::size_t nv = level.velocity_nodes();
  const double* ux = x;
  const double* uy = x + nv;
  const double* p = x + 2 * nv;
  a.multiply(ux, y);
  a.multiply(uy, y + nv);
  level.div_x().multiply_transpose_add(p, y);
  level.div_y().multiply_transpose_add(p, y + nv);
  level.div_x().multiply(ux, y + 2 * nv);
  level.div_y().multiply_add(uy, y + 2 * nv);
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

}  // namespace

SaddleSolveStats fgmres(const LinearMap& op, const LinearMap& precond, const std::vector<double>& b,
                        std::vector<double>& x, const KrylovOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = b.size();
  x.resize(n, 0.0);
  SaddleSolveStats stats;
  auto finish = [&] {
    stats.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return stats;
  };

  const double bnorm = norm2(b);
  if (!std::isfinite(bnorm)) throw BlowUp("non-finite right-hand side in saddle solve");
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return finish();
  }
  const double target = options.tolerance * bnorm;
  const int m = std::max(1, options.restart);

  std::vector<double> r(n), w(n);
  auto residual = [&] {
    op(x.data(), w.data());
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
    return norm2(r);
  };

  double beta = residual();
  stats.residual = beta / bnorm;
  if (beta <= target) return finish();

  std::vector<std::vector<double>> v, z;
  std::vector<std::vector<double>> hess(m + 1, std::vector<double>(m, 0.0));
  std::vector<double> cs(m), sn(m), g(m + 1), y(m);
  int total = 0;

  while (total < options.max_iterations) {
    if (v.empty()) v.emplace_back(n);
    for (std::size_t i = 0; i < n; ++i) v[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;
    int k = 0;
    for (; k < m && total < options.max_iterations; ++k) {
      if (static_cast<int>(z.size()) <= k) z.emplace_back(n);
      if (static_cast<int>(v.size()) <= k + 1) v.emplace_back(n);
      precond(v[k].data(), z[k].data());
      op(z[k].data(), w.data());
      for (int i = 0; i <= k; ++i) {
        hess[i][k] = dot(w, v[i]);
        const double hik = hess[i][k];
        for (std::size_t j = 0; j < n; ++j) w[j] -= hik * v[i][j];
      }
      const double hnext = norm2(w);
      hess[k + 1][k] = hnext;
      if (hnext > 0.0)
        for (std::size_t j = 0; j < n; ++j) v[k + 1][j] = w[j] / hnext;

      for (int i = 0; i < k; ++i) {
        const double a = hess[i][k], c = hess[i + 1][k];
        hess[i][k] = cs[i] * a + sn[i] * c;
        hess[i + 1][k] = -sn[i] * a + cs[i] * c;
      }
      const double denom = std::hypot(hess[k][k], hess[k + 1][k]);
      cs[k] = denom > 0.0 ? hess[k][k] / denom : 1.0;
      sn[k] = denom > 0.0 ? hess[k + 1][k] / denom : 0.0;
      hess[k][k] = denom;
      hess[k + 1][k] = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      ++total;
      if (!std::isfinite(g[k + 1])) throw BlowUp("non-finite residual in saddle solve");
      if (std::abs(g[k + 1]) <= target || hnext == 0.0) {
        ++k;
        break;
      }
    }

    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int j = i + 1; j < k; ++j) s -= hess[i][j] * y[j];
      y[i] = hess[i][i] != 0.0 ? s / hess[i][i] : 0.0;
    }
    for (int i = 0; i < k; ++i)
      for (std::size_t j = 0; j < n; ++j) x[j] += y[i] * z[i][j];

    beta = residual();
    stats.iterations = total;
    stats.residual = beta / bnorm;
    if (!std::isfinite(beta)) throw BlowUp("non-finite residual in saddle solve");
    // The recurrence residual can undershoot the true one; restart in that case.
    if (beta <= target) return finish();
  }
  finish();
  throw SolverDiverged("FGMRES did not converge: relative residual " + std::to_string(stats.residual) + " after " +
                           std::to_string(stats.iterations) + " iterations",
                       stats.residual, stats.iterations);
}

}  // namespace nsmlmc
