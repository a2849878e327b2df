#include "nsmlmc/parametrization.hpp"

#include <algorithm>
#include <cmath>

namespace nsmlmc {

ParamPoint::ParamPoint(std::vector<double> z, std::vector<double> x) : zeta(std::move(z)), xi(std::move(x)) {
  if (zeta.size() != xi.size()) throw ConfigError("ParamPoint: zeta and xi must have equal length");
}

bool ParamPoint::valid() const {
  if (zeta.size() != xi.size()) return false;
  auto in_box = [](double c) { return c >= -1.0 && c <= 1.0; };
  return std::all_of(zeta.begin(), zeta.end(), in_box) && std::all_of(xi.begin(), xi.end(), in_box);
}

ParamPoint ParamPoint::truncated(std::size_t dimension) const {
  dimension = std::min(dimension, this->dimension());
  return ParamPoint(std::vector<double>(zeta.begin(), zeta.begin() + dimension),
                    std::vector<double>(xi.begin(), xi.begin() + dimension));
}

std::size_t FieldExpansion::max_dimension() const {
  return std::max(modes_initial.size(), modes_forcing.size());
}

void FieldExpansion::check_dimension(const ParamPoint& p) const {
  if (p.zeta.size() != p.xi.size()) throw ConfigError("parameter sequences have different lengths");
  if (p.dimension() > max_dimension()) {
    throw ConfigError("parameter dimension " + std::to_string(p.dimension()) + " exceeds the " +
                      std::to_string(max_dimension()) + " modes of expansion '" + name + "'");
  }
}

Vec2 initial_velocity_at(const FieldExpansion& e, const ParamPoint& p, Vec2 x) {
  Vec2 u = e.mean_initial ? e.mean_initial(x) : Vec2{};
  const std::size_t active = std::min(p.dimension(), e.modes_initial.size());
  for (std::size_t i = 0; i < active; ++i) u += e.zeta_bounds.to_physical(p.zeta[i]) * e.modes_initial[i](x);
  return u;
}

Vec2 forcing_at(const FieldExpansion& e, const ParamPoint& p, double t, Vec2 x) {
  Vec2 f{};
  for (const auto& term : e.mean_forcing) f += term(t, x);
  const std::size_t active = std::min(p.dimension(), e.modes_forcing.size());
  for (std::size_t i = 0; i < active; ++i) f += e.xi_bounds.to_physical(p.xi[i]) * e.modes_forcing[i](t, x);
  return f;
}

namespace {

template <class Eval>
GridField sample_on_grid(int n, Eval&& eval) {
  GridField g(n);
  const double h = 1.0 / n;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Vec2 v = eval(Vec2{i * h, j * h});
      g.ux[i + n * j] = v.x;
      g.uy[i + n * j] = v.y;
    }
  }
  return g;
}

}  // namespace

GridField evaluate_initial_velocity(const FieldExpansion& e, const ParamPoint& p, int grid_size) {
  e.check_dimension(p);
  return sample_on_grid(grid_size, [&](Vec2 x) { return initial_velocity_at(e, p, x); });
}

GridField evaluate_forcing(const FieldExpansion& e, const ParamPoint& p, double t, int grid_size) {
  e.check_dimension(p);
  return sample_on_grid(grid_size, [&](Vec2 x) { return forcing_at(e, p, t, x); });
}

ParamPoint sample_prior(std::size_t dimension, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ParamPoint p(dimension);
  for (auto& z : p.zeta) z = u(rng);
  for (auto& x : p.xi) x = u(rng);
  return p;
}

std::size_t truncation_dimension_for_level(int level, double q) {
  if (q <= 0.0) throw ConfigError("truncation rate q must be positive");
  if (level < 0) throw ConfigError("level must be non-negative");
  const double exact = std::exp2(level / q);
  // Guard against 2^(l/q) landing a hair above an integer through rounding.
  const double rounded = std::round(exact);
  if (std::abs(exact - rounded) < 1e-9 * rounded) return static_cast<std::size_t>(rounded);
  return static_cast<std::size_t>(std::ceil(exact));
}

Vec2 taylor_green(Vec2 x) {
  const double a = kTwoPi * x.x;
  const double b = kTwoPi * x.y;
  return {std::cos(a) * std::sin(b), -std::sin(a) * std::cos(b)};
}

namespace {

struct Wavevector {
  int k1;
  int k2;
};

// Wavevectors of the upper half plane ordered by |k|^2, then by angle; each
// contributes a cosine and a sine stream-function mode.
std::vector<Wavevector> half_plane_wavevectors(std::size_t count) {
  std::vector<Wavevector> ks;
  int radius = 1;
  while (2 * ks.size() < count) {
    ks.clear();
    for (int k2 = 0; k2 <= radius; ++k2) {
      for (int k1 = -radius; k1 <= radius; ++k1) {
        if (k2 == 0 && k1 <= 0) continue;
        ks.push_back({k1, k2});
      }
    }
    std::sort(ks.begin(), ks.end(), [](const Wavevector& a, const Wavevector& b) {
      const int na = a.k1 * a.k1 + a.k2 * a.k2;
      const int nb = b.k1 * b.k1 + b.k2 * b.k2;
      if (na != nb) return na < nb;
      return std::atan2(a.k2, a.k1) < std::atan2(b.k2, b.k1);
    });
    // Only shells fully inside the square are complete.
    const int complete = radius * radius;
    ks.erase(std::remove_if(ks.begin(), ks.end(),
                            [&](const Wavevector& k) { return k.k1 * k.k1 + k.k2 * k.k2 > complete; }),
             ks.end());
    ++radius;
  }
  return ks;
}

// Divergence-free mode amp * (k2, -k1)/|k| * cos(2 pi k.x + phase).
SpatialField stream_mode(Wavevector k, bool sine, double amplitude) {
  const double norm = std::hypot(k.k1, k.k2);
  const double dx = amplitude * k.k2 / norm;
  const double dy = -amplitude * k.k1 / norm;
  return [=](Vec2 x) {
    const double arg = kTwoPi * (k.k1 * x.x + k.k2 * x.y);
    const double c = sine ? std::sin(arg) : std::cos(arg);
    return Vec2{dx * c, dy * c};
  };
}

}  // namespace

SpatialField builtin_initial_mode(const std::string& family, int index, double decay_exponent) {
  if (family == "taylor-green") {
    if (index != 0) throw ConfigError("taylor-green family has a single mode");
    return taylor_green;
  }
  if (family == "fourier-decay") {
    const auto ks = half_plane_wavevectors(index + 1);
    const Wavevector k = ks[index / 2];
    const double kk = kTwoPi * std::hypot(k.k1, k.k2);
    // H^1 norm of the mode equals (index+1)^-s.
    const double amp = std::pow(index + 1.0, -decay_exponent) * std::sqrt(2.0 / (1.0 + kk * kk));
    return stream_mode(k, index % 2 == 1, amp);
  }
  throw ConfigError("unknown initial-condition family '" + family + "'");
}

FieldExpansion make_expansion(const std::string& initial_family, const std::string& forcing_family,
                              std::size_t count, double decay_exponent) {
  if (decay_exponent <= 1.0) throw ConfigError("decay exponent s must exceed 1");
  FieldExpansion e;
  e.name = initial_family + "/" + forcing_family;
  e.decay_exponent = decay_exponent;

  if (initial_family == "taylor-green") {
    e.modes_initial.push_back(taylor_green);
    e.initial_mode_norms.push_back(std::sqrt(0.5 * (1.0 + 8.0 * kPi * kPi)));
  } else if (initial_family == "fourier-decay") {
    for (std::size_t i = 0; i < count; ++i) {
      e.modes_initial.push_back(builtin_initial_mode(initial_family, static_cast<int>(i), decay_exponent));
      e.initial_mode_norms.push_back(std::pow(i + 1.0, -decay_exponent));
    }
  } else if (initial_family != "none") {
    throw ConfigError("unknown initial-condition family '" + initial_family + "'");
  }

  if (forcing_family == "lagrangian-1d") {
    SeparableField psi;
    psi.time = [](double t) { return std::exp(t); };
    psi.space = [](Vec2 x) {
      const double a = kTwoPi * x.x;
      const double b = kTwoPi * x.y;
      return Vec2{std::cos(a) * std::sin(b) + 1.0, -(std::sin(a) * std::cos(b) + 1.0)};
    };
    e.modes_forcing.push_back(psi);
  } else if (forcing_family == "fourier-decay") {
    const auto ks = half_plane_wavevectors(count);
    for (std::size_t i = 0; i < count; ++i) {
      // Spatial L^2 norm equals (i+1)^-s.
      const double amp = std::pow(i + 1.0, -decay_exponent) * std::sqrt(2.0);
      e.modes_forcing.push_back({[](double) { return 1.0; }, stream_mode(ks[i / 2], i % 2 == 1, amp)});
      e.forcing_mode_norms.push_back(std::pow(i + 1.0, -decay_exponent));
    }
  } else if (forcing_family != "none") {
    throw ConfigError("unknown forcing family '" + forcing_family + "'");
  }
  return e;
}

}  // namespace nsmlmc
