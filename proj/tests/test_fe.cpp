#include <doctest.h>

#include <cmath>

#include "nsmlmc/fe_solver.hpp"

using namespace nsmlmc;

namespace {

FieldExpansion taylor_green_expansion() {
  FieldExpansion e;
  e.name = "tg";
  e.mean_initial = taylor_green;
  return e;
}

AnalyticVelocity decayed_taylor_green(double nu, double t) {
  const double d = std::exp(-8.0 * kPi * kPi * nu * t);
  AnalyticVelocity a;
  a.value = [d](Vec2 x) { return d * taylor_green(x); };
  a.jacobian = [d](Vec2 x) {
    const double c1 = std::cos(kTwoPi * x.x), s1 = std::sin(kTwoPi * x.x);
    const double c2 = std::cos(kTwoPi * x.y), s2 = std::sin(kTwoPi * x.y);
    return std::array<double, 4>{-d * kTwoPi * s1 * s2, d * kTwoPi * c1 * c2, -d * kTwoPi * c1 * c2,
                                 d * kTwoPi * s1 * s2};
  };
  return a;
}

}  // namespace

TEST_CASE("level 0 mesh sizes") {
  FeLevel lv(make_level_spec(0, 4, 4, 1.0, 1));
  CHECK(lv.np() == 4);
  CHECK(lv.nv() == 8);
  CHECK(lv.spec().time_step() == doctest::Approx(0.25));
}

TEST_CASE("stiffness annihilates constants") {
  FeLevel lv(make_level_spec(1, 4, 4, 1.0, 1));
  std::vector<double> one(lv.velocity_nodes(), 1.0), out(lv.velocity_nodes());
  lv.stiffness().multiply(one.data(), out.data());
  for (double v : out) CHECK(std::abs(v) < 1e-13);
}

TEST_CASE("discrete divergence of the taylor-green interpolant shrinks with h") {
  double prev = 1e300;
  for (int l = 1; l <= 4; ++l) {
    FeLevel lv(make_level_spec(l, 4, 4, 1.0, 1));
    std::vector<double> ux(lv.velocity_nodes()), uy(lv.velocity_nodes()), r(lv.pressure_nodes());
    for (int j = 0; j < lv.nv(); ++j)
      for (int i = 0; i < lv.nv(); ++i) {
        const Vec2 v = taylor_green({i * lv.h(), j * lv.h()});
        ux[lv.velocity_node(i, j)] = v.x;
        uy[lv.velocity_node(i, j)] = v.y;
      }
    lv.div_x().multiply(ux.data(), r.data());
    lv.div_y().multiply_add(uy.data(), r.data());
    double m = 0.0;
    for (double v : r) m = std::max(m, std::abs(v));
    CHECK(m < prev);
    prev = m;
  }
}

TEST_CASE("zero state stays zero") {
  FeProblem pb(make_level_spec(1, 4, 4, 1.0, 0), FieldExpansion{}, FeSolverOptions{});
  const VelocityField u = solve_forward(pb, ParamPoint{});
  for (double v : u.ux) CHECK(v == 0.0);
  for (double v : u.uy) CHECK(v == 0.0);
}

TEST_CASE("taylor-green error decreases at first order") {
  const double nu = 0.1;
  std::vector<double> err;
  for (int l = 1; l <= 3; ++l) {
    FeProblem pb(make_level_spec(l, 4, 4, 0.25, 0), taylor_green_expansion(), FeSolverOptions{nu});
    int iters = 0;
    const VelocityField u = solve_forward(pb, ParamPoint{}, [&](const VelocityField& s, const SaddleSolveStats& st) {
      iters = std::max(iters, st.iterations);
      CHECK(divergence_residual(pb.level(), s) < 1e-6);
    });
    err.push_back(h1_error(pb.level(), u, decayed_taylor_green(nu, 0.25)));
    MESSAGE("level " << l << " H1 error " << err.back() << " max iterations " << iters);
  }
  for (std::size_t i = 1; i < err.size(); ++i) CHECK(err[i] < err[i - 1]);
}

TEST_CASE("projection is idempotent and divergence free") {
  FeProblem pb(make_level_spec(2, 4, 4, 1.0, 0), FieldExpansion{}, FeSolverOptions{});
  const int n = pb.level().nv();
  GridField g(n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double x = static_cast<double>(i) / n, y = static_cast<double>(j) / n;
      g.ux[i + n * j] = std::sin(kTwoPi * x) + 0.3 * std::cos(kTwoPi * y);
      g.uy[i + n * j] = std::cos(kTwoPi * (x + y));
    }
  const VelocityField u = pb.project(g);
  CHECK(divergence_residual(pb.level(), u) < 1e-10);
  GridField back(n);
  back.ux = u.ux;
  back.uy = u.uy;
  const VelocityField w = pb.project(back);
  CHECK(h1_norm(pb.level(), [&] {
          std::vector<double> d(u.ux.size());
          for (std::size_t i = 0; i < d.size(); ++i) d[i] = u.ux[i] - w.ux[i];
          return d;
        }(),
        [&] {
          std::vector<double> d(u.uy.size());
          for (std::size_t i = 0; i < d.size(); ++i) d[i] = u.uy[i] - w.uy[i];
          return d;
        }()) < 1e-9);
}

TEST_CASE("unforced kinetic energy decays") {
  const double nu = 0.05;
  FeProblem pb(make_level_spec(2, 4, 4, 0.5, 0), taylor_green_expansion(), FeSolverOptions{nu});
  double prev = 1e300;
  solve_forward(pb, ParamPoint{}, [&](const VelocityField& s, const SaddleSolveStats&) {
    const double e = kinetic_energy(pb.level(), s);
    CHECK(e < prev);
    prev = e;
  });
}

TEST_CASE("forward solves are deterministic") {
  const FieldExpansion e = make_expansion("none", "lagrangian-1d", 1, 2.0);
  FeProblem pb(make_level_spec(2, 4, 4, 1.0, 1), e, FeSolverOptions{});
  ParamPoint p(1);
  p.xi[0] = 0.3;
  const VelocityField a = solve_forward(pb, p);
  const VelocityField b = solve_forward(pb, p);
  CHECK(a.ux == b.ux);
  CHECK(a.uy == b.uy);
  CHECK(a.p == b.p);
  CHECK(std::abs(pressure_mean(a)) < 1e-12);
}

TEST_CASE("qoi of the taylor-green interpolant approaches the closed form") {
  // 100 * 4 pi * (int_0^1 sqrt(x) cos(2 pi x) dx)^2
  const double exact = 0.938491564232869386556;
  double prev = 1e300;
  for (int l = 1; l <= 4; ++l) {
    FeProblem pb(make_level_spec(l, 4, 4, 1.0, 0), taylor_green_expansion(), FeSolverOptions{});
    const double err = std::abs(fe_qoi(pb.level(), pb.initial_state(ParamPoint{})) - exact);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 0.02);
}

TEST_CASE("forcing beyond the truncation is rejected") {
  const FieldExpansion e = make_expansion("none", "fourier-decay", 4, 2.0);
  FeProblem pb(make_level_spec(1, 4, 4, 1.0, 2), e, FeSolverOptions{});
  CHECK_THROWS_AS(pb.forcing_load(ParamPoint(3), 0.5), ConfigError);
  CHECK_NOTHROW(pb.forcing_load(ParamPoint(2), 0.5));
}
