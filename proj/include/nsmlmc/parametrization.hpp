#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "nsmlmc/common.hpp"

namespace nsmlmc {

/// Truncated coordinates (zeta, xi) of the parametric initial velocity and forcing.
/// Coordinates live on the canonical box [-1, 1]; physical coefficients are obtained
/// through CoordinateBounds.
struct ParamPoint {
  std::vector<double> zeta;
  std::vector<double> xi;

  ParamPoint() = default;
  explicit ParamPoint(std::size_t dimension) : zeta(dimension, 0.0), xi(dimension, 0.0) {}
  ParamPoint(std::vector<double> z, std::vector<double> x);

  std::size_t dimension() const { return xi.size(); }
  /// True when both sequences have equal length and every coordinate is in [-1, 1].
  bool valid() const;
  /// First `dimension` coordinates of both sequences.
  ParamPoint truncated(std::size_t dimension) const;
};

/// Affine map from the canonical coordinate interval [-1, 1] to [lower, upper].
struct CoordinateBounds {
  double lower = -1.0;
  double upper = 1.0;

  double to_physical(double canonical) const {
    return lower + 0.5 * (upper - lower) * (canonical + 1.0);
  }
  double to_canonical(double physical) const {
    return 2.0 * (physical - lower) / (upper - lower) - 1.0;
  }
};

using SpatialField = std::function<Vec2(Vec2)>;

/// A term theta(t) * g(x); every built-in forcing is a sum of such terms.
struct SeparableField {
  std::function<double(double)> time;
  SpatialField space;

  Vec2 operator()(double t, Vec2 x) const { return time(t) * space(x); }
};

/// u0(x) = mean_initial(x) + sum_i c_i phi_i(x),  f(t,x) = mean_forcing(t,x) + sum_i d_i psi_i(t,x)
/// with c_i, d_i the physical images of zeta_i, xi_i.
struct FieldExpansion {
  std::string name;
  SpatialField mean_initial;                 // empty means zero
  std::vector<SeparableField> mean_forcing;  // sum of separable terms, may be empty
  std::vector<SpatialField> modes_initial;
  std::vector<SeparableField> modes_forcing;
  /// Analytic H^1 norms of modes_initial / L^2(0,T;L^2) norms of modes_forcing when known.
  std::vector<double> initial_mode_norms;
  std::vector<double> forcing_mode_norms;
  double decay_exponent = 2.0;
  CoordinateBounds zeta_bounds;
  CoordinateBounds xi_bounds;

  double truncation_rate() const { return decay_exponent - 1.0; }
  /// Largest truncation dimension this expansion can evaluate.
  std::size_t max_dimension() const;
  /// Throws ConfigError when p cannot be evaluated against this expansion.
  void check_dimension(const ParamPoint& p) const;
};

/// Nodal values of a planar vector field on the uniform periodic n x n grid with nodes
/// at (i/n, j/n); storage is row-major with x fastest: index = i + n*j.
struct GridField {
  int n = 0;
  std::vector<double> ux;
  std::vector<double> uy;

  GridField() = default;
  explicit GridField(int size) : n(size), ux(static_cast<std::size_t>(size) * size, 0.0),
                                 uy(static_cast<std::size_t>(size) * size, 0.0) {}
  Vec2 at(int i, int j) const {
    const auto k = static_cast<std::size_t>(i + n * j);
    return {ux[k], uy[k]};
  }
};

GridField evaluate_initial_velocity(const FieldExpansion& expansion, const ParamPoint& p, int grid_size);
GridField evaluate_forcing(const FieldExpansion& expansion, const ParamPoint& p, double t, int grid_size);

/// Pointwise versions used by quadrature loops.
Vec2 initial_velocity_at(const FieldExpansion& expansion, const ParamPoint& p, Vec2 x);
Vec2 forcing_at(const FieldExpansion& expansion, const ParamPoint& p, double t, Vec2 x);

/// Draws every coordinate i.i.d. from Uniform(-1, 1).
ParamPoint sample_prior(std::size_t dimension, std::mt19937_64& rng);

/// ceil(2^(level/q)), the smallest I with I^-q <= 2^-level.
std::size_t truncation_dimension_for_level(int level, double q);

/// Built-in families, selected by configuration keyword:
///   initial: "none", "taylor-green", "fourier-decay"
///   forcing: "none", "lagrangian-1d", "fourier-decay"
/// `count` is the number of modes for the fourier-decay families.
SpatialField builtin_initial_mode(const std::string& family, int index, double decay_exponent);
FieldExpansion make_expansion(const std::string& initial_family, const std::string& forcing_family,
                              std::size_t count, double decay_exponent);

/// Taylor-Green vortex (cos 2pi x sin 2pi y, -sin 2pi x cos 2pi y).
Vec2 taylor_green(Vec2 x);

}  // namespace nsmlmc
