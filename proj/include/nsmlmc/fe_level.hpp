#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include "nsmlmc/common.hpp"
#include "nsmlmc/fft.hpp"

namespace nsmlmc {

/// Discretization level l: pressure mesh with base_cells * 2^l cells per side,
/// velocity mesh refined once more, and base_steps * 2^l uniform time steps on [0, T].
struct LevelSpec {
  int level = 0;
  int base_cells = 4;
  int base_steps = 4;
  double horizon = 1.0;
  std::size_t truncation = 0;

  int pressure_cells() const { return base_cells << level; }
  int velocity_cells() const { return 2 * pressure_cells(); }
  /// h_l, the pressure-mesh size.
  double mesh_size() const { return 1.0 / pressure_cells(); }
  double velocity_mesh_size() const { return 1.0 / velocity_cells(); }
  int steps() const { return base_steps << level; }
  double time_step() const { return horizon / steps(); }
  double time(int n) const { return horizon * n / steps(); }
  /// Index n with t_n == t, or -1 when t is not on this level's time grid.
  int time_index(double t) const;
};

LevelSpec make_level_spec(int level, int base_cells, int base_steps, double horizon, std::size_t truncation);

/// Sparse matrix whose rows all share one stencil width (periodic uniform meshes).
struct StencilMatrix {
  int rows = 0;
  int width = 0;
  std::vector<int> cols;
  std::vector<double> vals;

  StencilMatrix() = default;
  StencilMatrix(int r, int w) : rows(r), width(w), cols(static_cast<std::size_t>(r) * w, 0),
                                vals(static_cast<std::size_t>(r) * w, 0.0) {}

  /// y = A x
  void multiply(const double* x, double* y) const;
  /// y += A x
  void multiply_add(const double* x, double* y) const;
  /// y += A^T x
  void multiply_transpose_add(const double* x, double* y) const;
};

/// Q1 basis on the reference square, local node order (0,0), (1,0), (0,1), (1,1).
struct ReferenceQ1 {
  static double value(int node, double s, double t);
  static double ds(int node, double s, double t);
  static double dt(int node, double s, double t);
};

/// Assembled, read-only discretization of one level of the Q1-iso-Q2/Q1 hierarchy
/// on the unit torus. All matrices are constant in time; the convection operator
/// is rebuilt per step from `convection_tensor`.
class FeLevel {
 public:
  explicit FeLevel(const LevelSpec& spec);

  const LevelSpec& spec() const { return spec_; }
  int nv() const { return nv_; }
  int np() const { return np_; }
  std::size_t velocity_nodes() const { return static_cast<std::size_t>(nv_) * nv_; }
  std::size_t pressure_nodes() const { return static_cast<std::size_t>(np_) * np_; }
  double h() const { return 1.0 / nv_; }

  int velocity_node(int i, int j) const { return wrap(i, nv_) + nv_ * wrap(j, nv_); }
  int pressure_node(int i, int j) const { return wrap(i, np_) + np_ * wrap(j, np_); }
  /// Slot of local entry (row node p, column node q) inside the 9-point stencil.
  static int stencil_slot(int p, int q);

  const StencilMatrix& mass() const { return mass_; }
  const StencilMatrix& stiffness() const { return stiffness_; }
  /// b(u, r) = -(div u, r), split by velocity component; rows are pressure nodes.
  const StencilMatrix& div_x() const { return div_x_; }
  const StencilMatrix& div_y() const { return div_y_; }
  const StencilMatrix& pressure_mass() const { return pressure_mass_; }

  /// conv[c][r][p][q]: coefficient of w_c at local node r in the skew-symmetrized
  /// convection entry (test p, trial q) of one velocity cell.
  using ConvectionTensor = std::array<std::array<std::array<std::array<double, 4>, 4>, 4>, 2>;
  const ConvectionTensor& convection_tensor() const { return conv_; }

  /// Adds the convection matrix for convecting velocity (wx, wy) to `a`, which must
  /// carry the 9-point velocity stencil layout.
  void add_convection(const double* wx, const double* wy, StencilMatrix& a) const;

  /// Fourier symbols over the full n x n fine spectrum (kx fastest), see RealFft2d.
  const std::vector<double>& mass_symbol() const { return mass_symbol_; }
  const std::vector<double>& stiffness_symbol() const { return stiffness_symbol_; }
  const std::vector<std::complex<double>>& div_x_symbol() const { return div_x_symbol_; }
  const std::vector<std::complex<double>>& div_y_symbol() const { return div_y_symbol_; }
  /// Coarse (np x np) symbol of the pressure mass matrix.
  const std::vector<double>& pressure_mass_symbol() const { return pressure_mass_symbol_; }

  const RealFft2d& velocity_fft() const { return *velocity_fft_; }
  const RealFft2d& pressure_fft() const { return *pressure_fft_; }

  /// Load vector (g, phi_j) of a spatial field, by 3x3 Gauss quadrature per cell.
  template <class Field>
  void load_vector(Field&& g, std::vector<double>& fx, std::vector<double>& fy) const;

  /// Coefficients c with l(u) = c_x . u_x + c_y . u_y for the weighted-curl functional
  /// 100 * int sqrt(x1 x2) (d u1/d x2 - d u2/d x1) dx.
  const std::vector<double>& qoi_coeff_x() const { return qoi_cx_; }
  const std::vector<double>& qoi_coeff_y() const { return qoi_cy_; }

  /// 3-point Gauss rule on [0, 1].
  static const std::array<double, 3>& gauss_nodes();
  static const std::array<double, 3>& gauss_weights();

 private:
  static int wrap(int i, int n) { return ((i % n) + n) % n; }
  void assemble();
  void compute_symbols();

  LevelSpec spec_;
  int nv_;
  int np_;
  StencilMatrix mass_, stiffness_, div_x_, div_y_, pressure_mass_;
  ConvectionTensor conv_{};
  std::vector<double> mass_symbol_, stiffness_symbol_, pressure_mass_symbol_;
  std::vector<std::complex<double>> div_x_symbol_, div_y_symbol_;
  std::vector<double> qoi_cx_, qoi_cy_;
  std::unique_ptr<RealFft2d> velocity_fft_, pressure_fft_;
};

template <class Field>
void FeLevel::load_vector(Field&& g, std::vector<double>& fx, std::vector<double>& fy) const {
  fx.assign(velocity_nodes(), 0.0);
  fy.assign(velocity_nodes(), 0.0);
  const double hh = h();
  const auto& gx = gauss_nodes();
  const auto& gw = gauss_weights();
  std::array<double, 4> phi{};
  for (int j = 0; j < nv_; ++j) {
    for (int i = 0; i < nv_; ++i) {
      const int nodes[4] = {velocity_node(i, j), velocity_node(i + 1, j), velocity_node(i, j + 1),
                            velocity_node(i + 1, j + 1)};
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          const double w = gw[a] * gw[b] * hh * hh;
          const Vec2 v = g(Vec2{(i + gx[a]) * hh, (j + gx[b]) * hh});
          for (int q = 0; q < 4; ++q) phi[q] = ReferenceQ1::value(q, gx[a], gx[b]);
          for (int q = 0; q < 4; ++q) {
            fx[nodes[q]] += w * v.x * phi[q];
            fy[nodes[q]] += w * v.y * phi[q];
          }
        }
      }
    }
  }
}

}  // namespace nsmlmc
