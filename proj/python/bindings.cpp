#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "phom/cell_problem.hpp"
#include "phom/config.hpp"
#include "phom/effective_model.hpp"
#include "phom/experiments.hpp"
#include "phom/galerkin.hpp"
#include "phom/limit_diffusion.hpp"

namespace py = pybind11;
using namespace phom;

namespace {

py::object to_python(const nlohmann::ordered_json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::ordered_json from_python(const py::object& o) {
  return nlohmann::ordered_json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

// (paths, times, 2) array
py::array_t<double> paths_array(const TrajectoryEnsemble& ens) {
  const std::size_t n = ens.size(), m = ens.times.size();
  py::array_t<double> out({n, m, std::size_t{2}});
  auto v = out.mutable_unchecked<3>();
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t k = 0; k < m; ++k) {
      v(p, k, 0) = ens.paths[p][k].x();
      v(p, k, 1) = ens.paths[p][k].y();
    }
  return out;
}

py::dict ensemble_dict(const TrajectoryEnsemble& ens) {
  py::dict d;
  d["kind"] = ens.kind;
  d["eps"] = ens.eps;
  d["seed"] = ens.seed;
  d["modes_fingerprint"] = ens.modes_fingerprint;
  d["times"] = ens.times;
  d["paths"] = paths_array(ens);
  return d;
}

PhasePoint phase_point(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("a and b must have the same length");
  PhasePoint p;
  p.a = a;
  p.b = b;
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Passive tracers in locally stationary random flows";

  py::class_<Profile>(m, "Profile")
      .def_static("parse", &Profile::parse)
      .def_static("constant", &Profile::constant)
      .def_static("logistic", &Profile::logistic, py::arg("low"), py::arg("high"), py::arg("direction"), py::arg("center"))
      .def_static("gaussian_bump", &Profile::gaussian_bump, py::arg("base"), py::arg("amplitude"), py::arg("center"),
                  py::arg("width"))
      .def("value", &Profile::value)
      .def("gradient", &Profile::gradient)
      .def("reflected", &Profile::reflected)
      .def("__repr__", &Profile::describe);

  py::class_<ModeSet>(m, "ModeSet")
      .def(py::init([](const std::vector<std::pair<Vec2, std::pair<std::string, std::string>>>& modes, double gamma0,
                       double sigma_star) {
             std::vector<Mode> ms;
             for (const auto& [k, prof] : modes) ms.push_back({k, Profile::parse(prof.first), Profile::parse(prof.second)});
             return ModeSet(std::move(ms), gamma0, sigma_star);
           }),
           py::arg("modes"), py::arg("gamma0"), py::arg("sigma_star"),
           "modes: list of (k, (alpha profile text, sigma profile text))")
      .def_static("reference", &ModeSet::reference)
      .def("__len__", &ModeSet::size)
      .def_property_readonly("gamma0", &ModeSet::gamma0)
      .def_property_readonly("sigma_star", &ModeSet::sigma_star)
      .def_property_readonly("wavevectors", [](const ModeSet& s) {
        std::vector<Vec2> k;
        for (const Mode& md : s.modes()) k.push_back(md.k);
        return k;
      })
      .def("reflected", &ModeSet::reflected)
      .def("fingerprint", &ModeSet::fingerprint)
      .def("__repr__", &ModeSet::canonical);

  py::class_<ExperimentConfig>(m, "Config")
      .def(py::init<>())
      .def_static("load", &load_config)
      .def_static("parse", [](const std::string& text) { return parse_config(text); })
      .def_readwrite("modes", &ExperimentConfig::modes)
      .def_readwrite("eps_list", &ExperimentConfig::eps_list)
      .def_readwrite("T", &ExperimentConfig::T)
      .def_readwrite("n_paths", &ExperimentConfig::n_paths)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("output_dir", &ExperimentConfig::output_dir)
      .def_readwrite("x0", &ExperimentConfig::x0)
      .def_readwrite("s0", &ExperimentConfig::s0)
      .def_readwrite("t0", &ExperimentConfig::t0)
      .def_readwrite("probes", &ExperimentConfig::probes)
      .def_readwrite("u0", &ExperimentConfig::u0)
      .def_readwrite("average_probe", &ExperimentConfig::average_probe)
      .def_property(
          "threads", [](const ExperimentConfig& c) { return c.solver.threads; },
          [](ExperimentConfig& c, int t) { c.solver.threads = t; })
      .def_property(
          "coeff_samples", [](const ExperimentConfig& c) { return c.solver.coeff_samples; },
          [](ExperimentConfig& c, std::size_t n) { c.solver.coeff_samples = n; })
      .def_property(
          "pde_nodes", [](const ExperimentConfig& c) { return c.solver.pde_nodes; },
          [](ExperimentConfig& c, int n) { c.solver.pde_nodes = n; })
      .def_property(
          "bootstrap", [](const ExperimentConfig& c) { return c.solver.bootstrap; },
          [](ExperimentConfig& c, int n) { c.solver.bootstrap = n; })
      .def("validate", &ExperimentConfig::validate)
      .def("probe_points", &ExperimentConfig::probe_points)
      .def("to_dict", [](const ExperimentConfig& c) { return to_python(c.to_json()); })
      .def("to_toml", [](const ExperimentConfig& c) { return to_toml(c); })
      .def("content_hash", &ExperimentConfig::content_hash);

  py::class_<EffectiveModel>(m, "EffectiveModel")
      .def_static("constant", &EffectiveModel::constant, py::arg("A"), py::arg("B"))
      .def_static("from_dict", [](const py::object& o) { return EffectiveModel::from_json(from_python(o)); })
      .def("drift", &EffectiveModel::drift)
      .def("diffusivity", &EffectiveModel::diffusivity)
      .def("__len__", &EffectiveModel::size)
      .def("node", &EffectiveModel::node)
      .def("min_eigenvalue", &EffectiveModel::min_eigenvalue)
      .def("to_dict", [](const EffectiveModel& e) { return to_python(e.to_json()); });

  m.def(
      "sample_invariant",
      [](const ModeSet& modes, const Vec2& y, std::uint64_t seed) {
        RngStream rng(Seed{seed});
        const PhasePoint p = sample_invariant(modes, y, rng);
        return py::make_tuple(p.a, p.b);
      },
      py::arg("modes"), py::arg("y"), py::arg("seed"), "one draw (a, b) from the invariant Gaussian law at y");

  m.def("frame_velocity", [](const ModeSet& modes, const std::vector<double>& a, const std::vector<double>& b) {
    return frame_velocity(phase_point(a, b), modes);
  });

  m.def(
      "corrector",
      [](const ModeSet& modes, const std::vector<double>& a, const std::vector<double>& b, const Vec2& y, double tol,
         std::size_t n, std::uint64_t seed) {
        RngStream rng(Seed{seed});
        const CorrectorEstimate c = corrector_chi(phase_point(a, b), y, tol, n, modes, rng);
        py::dict d;
        d["chi"] = c.value;
        d["se"] = c.std_err;
        d["truncation"] = c.truncation;
        d["T_max"] = c.T_max;
        return d;
      },
      py::arg("modes"), py::arg("a"), py::arg("b"), py::arg("y") = Vec2::Zero(), py::arg("tol") = 1e-3,
      py::arg("n") = 1000, py::arg("seed") = 1, "Monte Carlo corrector (chi_1, chi_2) at one phase point");

  m.def(
      "galerkin_corrector",
      [](const ModeSet& modes, const std::vector<double>& a, const std::vector<double>& b, const Vec2& y, int degree) {
        return galerkin_solve(modes, y, degree).value(phase_point(a, b));
      },
      py::arg("modes"), py::arg("a"), py::arg("b"), py::arg("y") = Vec2::Zero(), py::arg("degree") = 8,
      "truncated Hermite-Galerkin corrector at one phase point");

  m.def(
      "effective_coefficients",
      [](const ModeSet& modes, const Vec2& y, std::size_t n, std::uint64_t seed, double tol) {
        RngStream rng(Seed{seed});
        EffectiveOptions opt;
        opt.tol = tol;
        const LocalEffective e = estimate_effective(modes, y, n, rng, opt);
        py::dict d;
        d["A"] = e.A.value;
        d["A_se"] = e.A.std_err;
        d["B"] = e.B.value;
        d["B_se"] = e.B.std_err;
        return d;
      },
      py::arg("modes"), py::arg("y") = Vec2::Zero(), py::arg("n") = 1000, py::arg("seed") = 1, py::arg("tol") = 1e-3,
      "drift B and diffusivity A of the limit at one slow point");

  m.def(
      "simulate",
      [](const ModeSet& modes, double eps, double T, std::size_t n_paths, std::uint64_t seed, const Vec2& x0,
         int threads) {
        EpsTrajectoryConfig cfg;
        cfg.eps = eps;
        cfg.T = T;
        cfg.x0 = x0;
        py::gil_scoped_release release;
        TrajectoryEnsemble ens = simulate_ensemble(cfg, modes, n_paths, Seed{seed}, threads);
        py::gil_scoped_acquire acquire;
        return ensemble_dict(ens);
      },
      py::arg("modes"), py::arg("eps"), py::arg("T"), py::arg("n_paths"), py::arg("seed"),
      py::arg("x0") = Vec2::Zero(), py::arg("threads") = 1,
      "eps-characteristics; 'paths' has shape (n_paths, n_times, 2)");

  m.def(
      "simulate_limit",
      [](const EffectiveModel& model, double T, std::size_t n_paths, std::uint64_t seed, const Vec2& x0, int threads) {
        LimitSdeConfig cfg;
        cfg.T = T;
        cfg.x0 = x0;
        py::gil_scoped_release release;
        TrajectoryEnsemble ens = simulate_limit(cfg, model, n_paths, Seed{seed}, threads);
        py::gil_scoped_acquire acquire;
        return ensemble_dict(ens);
      },
      py::arg("model"), py::arg("T"), py::arg("n_paths"), py::arg("seed"), py::arg("x0") = Vec2::Zero(),
      py::arg("threads") = 1);

  m.def(
      "solve_backward_pde",
      [](const EffectiveModel& model, const std::function<double(const Vec2&)>& u0, double T, double half_width,
         int nodes, double t) {
        BackwardPdeConfig pc;
        pc.x_min = pc.y_min = -half_width;
        pc.x_max = pc.y_max = half_width;
        pc.nx = pc.ny = nodes;
        pc.T = T;
        pc.u0 = u0;
        const PdeSolution sol = solve_backward_pde(pc, model, {t});
        const PdeSnapshot& s = sol.snapshot(t);
        py::array_t<double> u({sol.xs.size(), sol.ys.size()});
        std::copy(s.values.begin(), s.values.end(), u.mutable_data());
        py::dict d;
        d["x"] = sol.xs;
        d["y"] = sol.ys;
        d["u"] = u;
        d["dt"] = sol.dt;
        return d;
      },
      py::arg("model"), py::arg("u0"), py::arg("T"), py::arg("half_width") = 4.0, py::arg("nodes") = 101,
      py::arg("t") = 0.0, "u(t, .) on the grid, u[i, j] at (x[i], y[j])");

  m.def("build_effective_model", &build_effective_model);
  m.def("run_convergence", [](const ExperimentConfig& c) { return to_python(run_convergence(c).to_json()); });
  m.def("run_passive_scalar", [](const ExperimentConfig& c) { return to_python(run_passive_scalar(c).to_json()); });
  m.def(
      "run_averaging_check",
      [](const ExperimentConfig& c, const std::string& probe) { return to_python(run_averaging_check(c, probe).to_json()); },
      py::arg("config"), py::arg("probe") = "a1sq");
  m.def(
      "run_corrector_probes", [](const ExperimentConfig& c, int count) { return to_python(run_corrector_probes(c, count)); },
      py::arg("config"), py::arg("count") = 20);

  m.def("wasserstein1", &wasserstein1);
  m.def("sliced_wasserstein1", &sliced_wasserstein1, py::arg("a"), py::arg("b"), py::arg("projections") = 32);
}
