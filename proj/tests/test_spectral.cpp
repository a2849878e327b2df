#include <doctest.h>

#include <cmath>

#include "nsmlmc/spectral_solver.hpp"
#include "support.hpp"

using namespace nsmlmc;
using nsmlmc::testing::for_all;
using nsmlmc::testing::Gen;

TEST_CASE("weight integrals against independent quadrature") {
  CHECK(std::abs(sqrt_weight_integral(0) - std::complex<double>(2.0 / 3.0, 0.0)) < 1e-14);
  // Reference values from adaptive arbitrary-precision quadrature.
  CHECK(std::abs(sqrt_weight_integral(1) -
                 std::complex<double>(-0.0273281513734195130386, -0.120300971562722874679)) < 1e-13);
  CHECK(std::abs(sqrt_weight_integral(3) -
                 std::complex<double>(-0.00625300895370317494300, -0.0454312520775866416066)) < 1e-13);
  CHECK(std::abs(sqrt_weight_integral(-2) -
                 std::complex<double>(-0.0109154629448188410471, 0.0656332683958103283803)) < 1e-13);
}

TEST_CASE("weight integrals are hermitian") {
  for (int k = 1; k < 40; ++k) CHECK(std::abs(sqrt_weight_integral(-k) - std::conj(sqrt_weight_integral(k))) < 1e-14);
}

TEST_CASE("taylor-green decays at the viscous rate") {
  const double nu = 0.1, dt = 1e-3;
  SpectralSolver s(16, nu);
  SpectralState st = s.make_state(taylor_green);
  for (int n = 0; n < 100; ++n) s.step(st, {}, dt);
  const double d = std::exp(-8.0 * kPi * kPi * nu * 0.1);
  for (Vec2 x : {Vec2{0.1, 0.2}, Vec2{0.55, 0.8}, Vec2{0.9, 0.35}}) {
    const Vec2 u = s.evaluate(st, x);
    const Vec2 e = d * taylor_green(x);
    CHECK((u - e).norm() < 1e-10 * d);
  }
}

TEST_CASE("exact evaluation reproduces the field between grid nodes") {
  SpectralSolver s(32, 0.1);
  const SpatialField f = [](Vec2 x) {
    return Vec2{std::sin(kTwoPi * x.y) + 0.5 * std::cos(kTwoPi * 3.0 * (x.x + x.y)),
                std::cos(kTwoPi * x.x) - 0.5 * std::cos(kTwoPi * 3.0 * (x.x + x.y))};
  };
  const SpectralState st = s.make_state(f);
  for_all(20, 5, [&](Gen& g) {
    const Vec2 x = g.point(-2.0, 3.0);
    CHECK((s.evaluate(st, x) - f(x)).norm() < 1e-12);
  });
}

TEST_CASE("states stay divergence free under forcing") {
  SpectralSolver s(32, 0.05);
  const FieldExpansion e = make_expansion("fourier-decay", "fourier-decay", 6, 2.0);
  Gen g(11);
  const ParamPoint p = g.param(6);
  const SpatialField u0 = [&](Vec2 x) { return initial_velocity_at(e, p, x); };
  SpectralState st = s.make_state(u0);
  const SpectralForcing f = s.make_forcing(e, p);
  for (int n = 0; n < 50; ++n) {
    s.step(st, f, 2e-3);
    CHECK(s.divergence(st) < 1e-12);
  }
}

TEST_CASE("projection removes gradient fields") {
  SpectralSolver s(16, 0.1);
  const SpatialField grad = [](Vec2 x) {
    return Vec2{kTwoPi * std::cos(kTwoPi * x.x) * std::sin(kTwoPi * 2 * x.y),
                kTwoPi * 2 * std::sin(kTwoPi * x.x) * std::cos(kTwoPi * 2 * x.y)};
  };
  const SpectralState st = s.make_state(grad);
  CHECK(s.kinetic_energy(st) < 1e-24);
}

TEST_CASE("unforced energy decreases") {
  SpectralSolver s(32, 0.02);
  const FieldExpansion e = make_expansion("fourier-decay", "none", 8, 1.5);
  Gen g(12);
  const ParamPoint p = g.param(8);
  SpectralState st = s.make_state([&](Vec2 x) { return initial_velocity_at(e, p, x); });
  double prev = s.kinetic_energy(st);
  for (int n = 0; n < 40; ++n) {
    s.step(st, {}, 5e-3);
    const double k = s.kinetic_energy(st);
    CHECK(k < prev);
    prev = k;
  }
}

TEST_CASE("taylor-green energy and qoi closed forms") {
  SpectralSolver s(16, 0.1);
  const SpectralState st = s.make_state(taylor_green);
  CHECK(s.kinetic_energy(st) == doctest::Approx(0.25).epsilon(1e-13));
  // 100 * 4 pi * (int_0^1 sqrt(x) cos(2 pi x) dx)^2
  CHECK(s.qoi(st) == doctest::Approx(0.938491564232869386556).epsilon(1e-12));
}

TEST_CASE("solver rejects bad sizes") {
  CHECK_THROWS_AS(SpectralSolver(12, 0.1), ConfigError);
  CHECK_THROWS_AS(SpectralSolver(16, 0.0), ConfigError);
  SpectralSolver s(16, 0.1);
  const FieldExpansion e = make_expansion("none", "none", 1, 2.0);
  CHECK_THROWS_AS(solve_spectral(s, e, ParamPoint(0), 1.0, 0.3), ConfigError);
}
