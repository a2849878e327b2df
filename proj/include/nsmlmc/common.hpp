#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace nsmlmc {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  Vec2& operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }
  friend Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend bool operator==(const Vec2&, const Vec2&) = default;

  double norm() const { return std::hypot(x, y); }
};

/// Maps a point of the plane into the fundamental cell [0,1)^2 of the unit torus.
inline Vec2 wrap_to_torus(Vec2 z) {
  z.x -= std::floor(z.x);
  z.y -= std::floor(z.y);
  // floor() of values just below an integer can leave exactly 1.0 behind.
  if (z.x >= 1.0) z.x = 0.0;
  if (z.y >= 1.0) z.y = 0.0;
  return z;
}

/// Invalid or inconsistent user configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The saddle-point iteration did not reach its tolerance.
class SolverDiverged : public std::runtime_error {
 public:
  SolverDiverged(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// Non-finite values appeared in a solver state.
class BlowUp : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Version string embedded in every output file.
const char* code_version();

}  // namespace nsmlmc
