#include "nsmlmc/fe_level.hpp"

#include <cmath>

namespace nsmlmc {

int LevelSpec::time_index(double t) const {
  const double x = t / horizon * steps();
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-9 * std::max(1.0, std::abs(x))) return -1;
  if (r < 0 || r > steps()) return -1;
  return static_cast<int>(r);
}

LevelSpec make_level_spec(int level, int base_cells, int base_steps, double horizon, std::size_t truncation) {
  if (level < 0) throw ConfigError("level must be non-negative");
  if (base_cells < 2) throw ConfigError("base resolution must be at least 2 cells");
  if (base_steps < 1) throw ConfigError("base number of time steps must be positive");
  if (!(horizon > 0.0)) throw ConfigError("time horizon must be positive");
  LevelSpec s;
  s.level = level;
  s.base_cells = base_cells;
  s.base_steps = base_steps;
  s.horizon = horizon;
  s.truncation = truncation;
  return s;
}

void StencilMatrix::multiply(const double* x, double* y) const {
  for (int r = 0; r < rows; ++r) {
    const int* c = &cols[static_cast<std::size_t>(r) * width];
    const double* v = &vals[static_cast<std::size_t>(r) * width];
    double s = 0.0;
    for (int k = 0; k < width; ++k) s += v[k] * x[c[k]];
    y[r] = s;
  }
}

void StencilMatrix::multiply_add(const double* x, double* y) const {
  for (int r = 0; r < rows; ++r) {
    const int* c = &cols[static_cast<std::size_t>(r) * width];
    const double* v = &vals[static_cast<std::size_t>(r) * width];
    double s = 0.0;
    for (int k = 0; k < width; ++k) s += v[k] * x[c[k]];
    y[r] += s;
  }
}

void StencilMatrix::multiply_transpose_add(const double* x, double* y) const {
  for (int r = 0; r < rows; ++r) {
    const int* c = &cols[static_cast<std::size_t>(r) * width];
    const double* v = &vals[static_cast<std::size_t>(r) * width];
    const double xr = x[r];
    for (int k = 0; k < width; ++k) y[c[k]] += v[k] * xr;
  }
}

double ReferenceQ1::value(int node, double s, double t) {
  const double a = (node & 1) ? s : 1.0 - s;
  const double b = (node & 2) ? t : 1.0 - t;
  return a * b;
}

double ReferenceQ1::ds(int node, double, double t) {
  const double b = (node & 2) ? t : 1.0 - t;
  return (node & 1) ? b : -b;
}

double ReferenceQ1::dt(int node, double s, double) {
  const double a = (node & 1) ? s : 1.0 - s;
  return (node & 2) ? a : -a;
}

const std::array<double, 3>& FeLevel::gauss_nodes() {
  static const std::array<double, 3> x = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
  return x;
}

const std::array<double, 3>& FeLevel::gauss_weights() {
  static const std::array<double, 3> w = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  return w;
}

int FeLevel::stencil_slot(int p, int q) {
  const int dx = (q & 1) - (p & 1);
  const int dy = ((q >> 1) & 1) - ((p >> 1) & 1);
  return (dy + 1) * 3 + (dx + 1);
}

FeLevel::FeLevel(const LevelSpec& spec) : spec_(spec), nv_(spec.velocity_cells()), np_(spec.pressure_cells()) {
  assemble();
  compute_symbols();
  velocity_fft_ = std::make_unique<RealFft2d>(nv_);
  pressure_fft_ = std::make_unique<RealFft2d>(np_);
}

namespace {

int slot25(int dx, int dy) { return (dy + 2) * 5 + (dx + 2); }

}  // namespace

void FeLevel::assemble() {
  const int nvel = static_cast<int>(velocity_nodes());
  const int npre = static_cast<int>(pressure_nodes());
  const double hh = h();
  const auto& gx = gauss_nodes();
  const auto& gw = gauss_weights();

  // Local matrices on the reference square.
  double m_loc[4][4] = {};
  double k_loc[4][4] = {};
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      const double w = gw[a] * gw[b];
      const double s = gx[a], t = gx[b];
      for (int p = 0; p < 4; ++p) {
        for (int q = 0; q < 4; ++q) {
          m_loc[p][q] += w * ReferenceQ1::value(p, s, t) * ReferenceQ1::value(q, s, t);
          k_loc[p][q] += w * (ReferenceQ1::ds(p, s, t) * ReferenceQ1::ds(q, s, t) +
                              ReferenceQ1::dt(p, s, t) * ReferenceQ1::dt(q, s, t));
        }
      }
      for (int c = 0; c < 2; ++c) {
        for (int r = 0; r < 4; ++r) {
          const double dr = c == 0 ? ReferenceQ1::ds(r, s, t) : ReferenceQ1::dt(r, s, t);
          const double vr = ReferenceQ1::value(r, s, t);
          for (int p = 0; p < 4; ++p) {
            for (int q = 0; q < 4; ++q) {
              const double dq = c == 0 ? ReferenceQ1::ds(q, s, t) : ReferenceQ1::dt(q, s, t);
              const double vp = ReferenceQ1::value(p, s, t);
              const double vq = ReferenceQ1::value(q, s, t);
              conv_[c][r][p][q] += w * hh * (vr * dq * vp + 0.5 * dr * vq * vp);
            }
          }
        }
      }
    }
  }

  mass_ = StencilMatrix(nvel, 9);
  stiffness_ = StencilMatrix(nvel, 9);
  for (int j = 0; j < nv_; ++j) {
    for (int i = 0; i < nv_; ++i) {
      const int row = velocity_node(i, j);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const auto k = static_cast<std::size_t>(row) * 9 + (dy + 1) * 3 + (dx + 1);
          mass_.cols[k] = velocity_node(i + dx, j + dy);
          stiffness_.cols[k] = mass_.cols[k];
        }
      }
    }
  }
  for (int j = 0; j < nv_; ++j) {
    for (int i = 0; i < nv_; ++i) {
      const int nodes[4] = {velocity_node(i, j), velocity_node(i + 1, j), velocity_node(i, j + 1),
                            velocity_node(i + 1, j + 1)};
      for (int p = 0; p < 4; ++p) {
        for (int q = 0; q < 4; ++q) {
          const auto k = static_cast<std::size_t>(nodes[p]) * 9 + stencil_slot(p, q);
          mass_.vals[k] += hh * hh * m_loc[p][q];
          stiffness_.vals[k] += k_loc[p][q];
        }
      }
    }
  }

  // Divergence: rows are coarse pressure nodes, 5x5 fine-node stencil around node 2J.
  div_x_ = StencilMatrix(npre, 25);
  div_y_ = StencilMatrix(npre, 25);
  for (int jj = 0; jj < np_; ++jj) {
    for (int ii = 0; ii < np_; ++ii) {
      const int row = pressure_node(ii, jj);
      for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
          const auto k = static_cast<std::size_t>(row) * 25 + slot25(dx, dy);
          div_x_.cols[k] = velocity_node(2 * ii + dx, 2 * jj + dy);
          div_y_.cols[k] = div_x_.cols[k];
        }
      }
    }
  }
  for (int j = 0; j < nv_; ++j) {
    for (int i = 0; i < nv_; ++i) {
      const int ci = i / 2, cj = j / 2, sx = i % 2, sy = j % 2;
      for (int pp = 0; pp < 4; ++pp) {
        const int px = pp & 1, py = (pp >> 1) & 1;
        const int row = pressure_node(ci + px, cj + py);
        for (int q = 0; q < 4; ++q) {
          const int qx = q & 1, qy = (q >> 1) & 1;
          double bx = 0.0, by = 0.0;
          for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
              const double w = gw[a] * gw[b];
              const double s = gx[a], t = gx[b];
              const double r = ReferenceQ1::value(pp, 0.5 * (sx + s), 0.5 * (sy + t));
              bx -= w * hh * ReferenceQ1::ds(q, s, t) * r;
              by -= w * hh * ReferenceQ1::dt(q, s, t) * r;
            }
          }
          const auto k = static_cast<std::size_t>(row) * 25 + slot25(sx + qx - 2 * px, sy + qy - 2 * py);
          div_x_.vals[k] += bx;
          div_y_.vals[k] += by;
        }
      }
    }
  }

  pressure_mass_ = StencilMatrix(npre, 9);
  const double big = 2.0 * hh;
  for (int j = 0; j < np_; ++j) {
    for (int i = 0; i < np_; ++i) {
      const int row = pressure_node(i, j);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          pressure_mass_.cols[static_cast<std::size_t>(row) * 9 + (dy + 1) * 3 + (dx + 1)] = pressure_node(i + dx, j + dy);
    }
  }
  for (int j = 0; j < np_; ++j) {
    for (int i = 0; i < np_; ++i) {
      const int nodes[4] = {pressure_node(i, j), pressure_node(i + 1, j), pressure_node(i, j + 1),
                            pressure_node(i + 1, j + 1)};
      for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q)
          pressure_mass_.vals[static_cast<std::size_t>(nodes[p]) * 9 + stencil_slot(p, q)] += big * big * m_loc[p][q];
    }
  }

  qoi_cx_.assign(velocity_nodes(), 0.0);
  qoi_cy_.assign(velocity_nodes(), 0.0);
  for (int j = 0; j < nv_; ++j) {
    for (int i = 0; i < nv_; ++i) {
      const int nodes[4] = {velocity_node(i, j), velocity_node(i + 1, j), velocity_node(i, j + 1),
                            velocity_node(i + 1, j + 1)};
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          const double x = (i + gx[a]) * hh;
          const double y = (j + gx[b]) * hh;
          const double w = 100.0 * gw[a] * gw[b] * hh * std::sqrt(x * y);
          for (int q = 0; q < 4; ++q) {
            qoi_cx_[nodes[q]] += w * ReferenceQ1::dt(q, gx[a], gx[b]);
            qoi_cy_[nodes[q]] -= w * ReferenceQ1::ds(q, gx[a], gx[b]);
          }
        }
      }
    }
  }
}

void FeLevel::compute_symbols() {
  const int n = nv_;
  // e[k][d + 2] = exp(2 pi i k d / n) for d in [-2, 2].
  std::vector<std::array<std::complex<double>, 5>> e(n);
  for (int k = 0; k < n; ++k)
    for (int d = -2; d <= 2; ++d) e[k][d + 2] = std::polar(1.0, kTwoPi * k * d / n);

  mass_symbol_.assign(velocity_nodes(), 0.0);
  stiffness_symbol_.assign(velocity_nodes(), 0.0);
  div_x_symbol_.assign(velocity_nodes(), 0.0);
  div_y_symbol_.assign(velocity_nodes(), 0.0);
  for (int ky = 0; ky < n; ++ky) {
    for (int kx = 0; kx < n; ++kx) {
      const auto idx = static_cast<std::size_t>(kx) + static_cast<std::size_t>(n) * ky;
      double m = 0.0, s = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int slot = (dy + 1) * 3 + (dx + 1);
          // Symmetric stencils: the symbol is real.
          const double c = (e[kx][dx + 2] * e[ky][dy + 2]).real();
          m += mass_.vals[slot] * c;
          s += stiffness_.vals[slot] * c;
        }
      }
      mass_symbol_[idx] = m;
      stiffness_symbol_[idx] = s;
      std::complex<double> bx = 0.0, by = 0.0;
      for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
          const auto ph = e[kx][dx + 2] * e[ky][dy + 2];
          bx += div_x_.vals[slot25(dx, dy)] * ph;
          by += div_y_.vals[slot25(dx, dy)] * ph;
        }
      }
      div_x_symbol_[idx] = bx;
      div_y_symbol_[idx] = by;
    }
  }

  const int nc = np_;
  pressure_mass_symbol_.assign(pressure_nodes(), 0.0);
  for (int ky = 0; ky < nc; ++ky) {
    for (int kx = 0; kx < nc; ++kx) {
      double m = 0.0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          m += pressure_mass_.vals[(dy + 1) * 3 + (dx + 1)] * std::cos(kTwoPi * (kx * dx + ky * dy) / nc);
      pressure_mass_symbol_[kx + static_cast<std::size_t>(nc) * ky] = m;
    }
  }
}

void FeLevel::add_convection(const double* wx, const double* wy, StencilMatrix& a) const {
  for (int j = 0; j < nv_; ++j) {
    for (int i = 0; i < nv_; ++i) {
      const int nodes[4] = {velocity_node(i, j), velocity_node(i + 1, j), velocity_node(i, j + 1),
                            velocity_node(i + 1, j + 1)};
      const double ux[4] = {wx[nodes[0]], wx[nodes[1]], wx[nodes[2]], wx[nodes[3]]};
      const double uy[4] = {wy[nodes[0]], wy[nodes[1]], wy[nodes[2]], wy[nodes[3]]};
      for (int p = 0; p < 4; ++p) {
        double* row = &a.vals[static_cast<std::size_t>(nodes[p]) * 9];
        for (int q = 0; q < 4; ++q) {
          double v = 0.0;
          for (int r = 0; r < 4; ++r) v += ux[r] * conv_[0][r][p][q] + uy[r] * conv_[1][r][p][q];
          row[stencil_slot(p, q)] += v;
        }
      }
    }
  }
}

}  // namespace nsmlmc
