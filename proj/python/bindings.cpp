#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nsmlmc/harness.hpp"

namespace py = pybind11;
using namespace nsmlmc;

namespace {

ParamPoint point_for(const FieldExpansion& e, const std::vector<double>& xi) {
  ParamPoint p(e.max_dimension());
  if (xi.size() > p.dimension()) throw ConfigError("more coordinates than expansion modes");
  for (std::size_t i = 0; i < xi.size(); ++i) p.xi[i] = e.xi_bounds.to_canonical(xi[i]);
  return p;
}

py::dict forward_dict(const ForwardResult& r, const ObservationSet& obs) {
  py::dict d;
  d["observations"] = r.observations;
  d["qoi"] = r.qoi;
  d["potential"] = obs.mismatch(r.observations);
  return d;
}

py::dict report_dict(const MLMCMCReport& r) {
  py::list terms;
  for (const auto& t : r.per_term) {
    py::dict d;
    d["term"] = t.term;
    d["l"] = t.l;
    d["l_prime"] = t.l_prime;
    d["samples"] = t.samples;
    d["mean"] = t.mean;
    d["variance"] = t.variance;
    d["acceptance"] = t.acceptance;
    terms.append(d);
  }
  py::dict d;
  d["L"] = r.L;
  d["enlargement"] = r.enlargement;
  d["estimate"] = r.estimate;
  d["standard_error"] = r.standard_error;
  d["dof_count"] = r.dof_count;
  d["failed"] = r.failed;
  d["failure"] = r.failure;
  d["terms"] = terms;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multilevel MCMC for Navier-Stokes inversion from Lagrangian tracer data";
  m.attr("__version__") = code_version();

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<ExperimentConfig>(m, "Config")
      .def(py::init<>())
      .def_readwrite("viscosity", &ExperimentConfig::viscosity)
      .def_readwrite("horizon", &ExperimentConfig::horizon)
      .def_readwrite("levels", &ExperimentConfig::levels)
      .def_readwrite("enlargement", &ExperimentConfig::enlargement)
      .def_readwrite("noise_variance", &ExperimentConfig::noise_variance)
      .def_readwrite("reference_resolution", &ExperimentConfig::reference_resolution)
      .def_readwrite("reference_time_step", &ExperimentConfig::reference_time_step)
      .def_readwrite("quadrature_order", &ExperimentConfig::quadrature_order)
      .def_readwrite("observation_file", &ExperimentConfig::observation_file)
      .def_readwrite("base_directory", &ExperimentConfig::base_directory)
      .def_property_readonly("hash", [](const ExperimentConfig& c) { return hash_hex(config_hash(c)); })
      .def("validate", &ExperimentConfig::validate)
      .def("__repr__", [](const ExperimentConfig& c) { return canonical_form(c); });

  m.def("load_config", &load_config, py::arg("path"));

  m.def(
      "schedule",
      [](int L, double a, bool generic) {
        std::vector<std::tuple<int, int, std::size_t>> out;
        for (const auto& e : schedule(L, a, generic)) out.emplace_back(e.l, e.l_prime, e.samples);
        return out;
      },
      py::arg("L"), py::arg("a"), py::arg("generic") = false, "(l, l', M_ll') for every term of the estimator");
  m.def("dof_cost", py::overload_cast<int, double, bool>(&dof_cost), py::arg("L"), py::arg("a"),
        py::arg("generic") = false);

  m.def(
      "spectral_forward",
      [](const ExperimentConfig& c, const std::vector<double>& xi) {
        const ObservationSet obs = load_observations(c);
        const FieldExpansion e = build_expansion(c);
        py::gil_scoped_release release;
        const ForwardResult r = spectral_forward(build_spectral_config(c), e, point_for(e, xi), obs);
        py::gil_scoped_acquire acquire;
        return forward_dict(r, obs);
      },
      py::arg("config"), py::arg("xi"), "tracer positions, qoi and potential from the spectral solver");

  m.def(
      "fe_forward",
      [](const ExperimentConfig& c, int level, const std::vector<double>& xi) {
        const ObservationSet obs = load_observations(c);
        const FieldExpansion e = build_expansion(c);
        const FeModelConfig mc = build_model_config(c);
        const ParamPoint p = point_for(e, xi);
        FeProblem pb(make_level_spec(level, mc.base_cells, mc.base_steps, mc.horizon, p.dimension()), e, mc.solver);
        py::gil_scoped_release release;
        const ForwardResult r = fe_forward(pb, p, obs);
        py::gil_scoped_acquire acquire;
        return forward_dict(r, obs);
      },
      py::arg("config"), py::arg("level"), py::arg("xi"), "tracer positions, qoi and potential at an FE level");

  m.def(
      "reference_posterior",
      [](const ExperimentConfig& c, const std::string& solver, int order, int resolution, int fe_level) {
        ReferenceOptions o = reference_options(c);
        o.solver = solver;
        if (order > 0) o.quadrature_order = order;
        if (resolution > 0) o.resolution = resolution;
        if (fe_level >= 0) o.fe_level = fe_level;
        const ObservationSet obs = load_observations(c);
        py::gil_scoped_release release;
        return reference_posterior(c, obs, o, c.threads).value;
      },
      py::arg("config"), py::arg("solver") = "spectral", py::arg("order") = 0, py::arg("resolution") = 0,
      py::arg("fe_level") = -1);

  m.def(
      "posterior_expectation",
      [](const std::vector<double>& lower, const std::vector<double>& upper, int order,
         const std::function<std::pair<double, double>(const std::vector<double>&)>& f) {
        return tensor_posterior_expectation(lower, upper, order, [&](const std::vector<double>& x) {
          const auto [phi, q] = f(x);
          return PotentialAndQoi{phi, q};
        });
      },
      py::arg("lower"), py::arg("upper"), py::arg("order"), py::arg("f"),
      "int q e^-phi / int e^-phi by tensor Gauss-Legendre; f(x) returns (phi, q)");

  m.def(
      "estimate",
      [](int L, double a, std::size_t dimension,
         const std::function<std::pair<double, double>(int, const std::vector<double>&)>& model, std::uint64_t seed,
         const std::string& sampler, bool generic) {
        FunctionModel fm(dimension, [&](int level, const ParamPoint& p) {
          py::gil_scoped_acquire acquire;
          const auto [phi, q] = model(level, p.xi);
          return LevelEvaluation{phi, q, std::isfinite(phi)};
        });
        EstimatorOptions o;
        o.chain.seed = seed;
        o.chain.sampler = parse_sampler(sampler);
        o.generic_schedule = generic;
        return report_dict(estimate(L, a, fm, o));
      },
      py::arg("L"), py::arg("a"), py::arg("dimension"), py::arg("model"), py::arg("seed") = 0,
      py::arg("sampler") = "independence", py::arg("generic") = false,
      "MLMCMC estimate for a model given as model(level, xi) -> (phi, qoi) on [-1, 1]^dimension");

  m.def(
      "spectral_taylor_green",
      [](int n, double viscosity, double dt, int steps) {
        SpectralSolver s(n, viscosity);
        SpectralState st = s.make_state(taylor_green);
        for (int i = 0; i < steps; ++i) s.step(st, {}, dt);
        const Vec2 u = s.evaluate(st, {0.0, 0.25});
        return u.x;
      },
      py::arg("n"), py::arg("viscosity"), py::arg("dt"), py::arg("steps"),
      "first velocity component at (0, 1/4) after evolving the Taylor-Green vortex");
}
