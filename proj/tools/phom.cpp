#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "phom/config.hpp"
#include "phom/experiments.hpp"
#include "phom/io.hpp"
#include "phom/limit_diffusion.hpp"

namespace fs = std::filesystem;
using namespace phom;
using J = nlohmann::ordered_json;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string coefficients;
};

void add_common(CLI::App* sub, Common& c, bool with_coefficients) {
  sub->add_option("--config", c.config, "TOML configuration file");
  sub->add_option("--seed", c.seed, "master seed (overrides the config)");
  sub->add_option("--out", c.out, "output directory (overrides the config)");
  sub->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  if (with_coefficients)
    sub->add_option("--coefficients", c.coefficients, "reuse a coefficients.json written by 'coeffs'");
}

ExperimentConfig resolve(const Common& c, const CLI::App* sub) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (sub->count("--seed")) cfg.seed = c.seed;
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.threads > 0) cfg.solver.threads = c.threads;
  cfg.validate();
  return cfg;
}

EffectiveModel model_for(const ExperimentConfig& cfg, const Common& c) {
  if (c.coefficients.empty()) return build_effective_model(cfg);
  std::ifstream in(c.coefficients);
  if (!in) throw std::runtime_error("cannot open " + c.coefficients);
  EffectiveModel m = EffectiveModel::from_json(J::parse(in));
  const auto& prov = m.provenance;
  if (prov.contains("modes_fingerprint") && prov["modes_fingerprint"] != cfg.modes.fingerprint())
    throw std::runtime_error(c.coefficients + " was computed for a different mode set");
  return m;
}

std::string path_in(const ExperimentConfig& cfg, const std::string& name) {
  return (fs::path(cfg.output_dir) / name).string();
}

template <class Writer>
void write_csv(const std::string& path, Writer&& w) {
  std::ostringstream s;
  w(s);
  write_text_file(path, s.str());
}

void cmd_simulate(const ExperimentConfig& cfg) {
  for (std::size_t e = 0; e < cfg.eps_list.size(); ++e) {
    EpsTrajectoryConfig ec;
    ec.eps = cfg.eps_list[e];
    ec.T = cfg.T;
    ec.x0 = cfg.x0;
    ec.s0 = cfg.s0;
    ec.substep_c = cfg.solver.substep_c;
    ec.macro_per_unit = cfg.solver.macro_per_unit;
    ec.bank_nodes = cfg.solver.bank_nodes;
    const auto ens = simulate_ensemble(ec, cfg.modes, cfg.n_paths, derived_seed(cfg.seed, 100 + e), cfg.solver.threads);
    const std::string stem = "ensemble_eps_" + format_real(ec.eps);
    J conf = cfg.to_json();
    write_ensemble(cfg.output_dir, stem, ens, J{{"experiment", conf}, {"seed_tag", 100 + e}, {"config_hash", cfg.content_hash()}});
    std::cout << "wrote " << path_in(cfg, stem + ".csv") << '\n';
  }
}

void cmd_coeffs(const ExperimentConfig& cfg) {
  const EffectiveModel m = build_effective_model(cfg);
  write_csv(path_in(cfg, "coefficients.csv"), [&](std::ostream& o) { m.write_csv(o); });
  write_json_file(path_in(cfg, "coefficients.json"), m.to_json());
  std::cout << "wrote " << path_in(cfg, "coefficients.csv") << '\n';
}

void cmd_limit(const ExperimentConfig& cfg, const EffectiveModel& m) {
  LimitSdeConfig lc;
  lc.x0 = cfg.x0;
  lc.s0 = cfg.s0;
  lc.T = cfg.T;
  lc.dt = cfg.solver.limit_dt;
  lc.macro_per_unit = cfg.solver.macro_per_unit;
  const auto ens = simulate_limit(lc, m, cfg.n_paths, derived_seed(cfg.seed, 2), cfg.solver.threads);
  write_ensemble(cfg.output_dir, "ensemble_limit", ens, J{{"experiment", cfg.to_json()}, {"seed_tag", 2}, {"config_hash", cfg.content_hash()}});

  const ScalarField u0 = ScalarField::parse(cfg.u0);
  BackwardPdeConfig pc;
  const double span = cfg.s0 + cfg.T - cfg.t0;
  const double hw = cfg.solver.pde_half_width > 0
                        ? cfg.solver.pde_half_width
                        : std::max(4.0, m.max_drift() * span + 6.0 * std::sqrt(std::max(0.0, m.max_trace()) * span));
  pc.x_min = pc.y_min = -hw;
  pc.x_max = pc.y_max = hw;
  pc.nx = pc.ny = cfg.solver.pde_nodes;
  pc.T = cfg.s0 + cfg.T;
  pc.u0 = [&u0](const Vec2& x) { return u0(x); };
  const PdeSolution sol = solve_backward_pde(pc, m, {cfg.t0});
  write_csv(path_in(cfg, "pde.csv"), [&](std::ostream& o) { sol.write_csv(o); });
  J meta;
  meta["u0"] = cfg.u0;
  meta["box"] = {-hw, hw, -hw, hw};
  meta["nodes"] = cfg.solver.pde_nodes;
  meta["dt"] = sol.dt;
  meta["steps"] = sol.steps;
  meta["columns"] = {"t", "x1", "x2", "u"};
  meta["provenance"] = provenance(cfg, J{{"limit", 2}});
  meta["effective_model"] = m.provenance;
  write_json_file(path_in(cfg, "pde.json"), meta);
  std::cout << "wrote " << path_in(cfg, "ensemble_limit.csv") << " and " << path_in(cfg, "pde.csv") << '\n';
}

void cmd_converge(const ExperimentConfig& cfg, const EffectiveModel& m) {
  const ConvergenceReport r = run_convergence(cfg, m);
  write_json_file(path_in(cfg, "convergence.json"), r.to_json());
  write_csv(path_in(cfg, "convergence.csv"), [&](std::ostream& o) { r.write_csv(o); });
  write_csv(path_in(cfg, "covariance_curves.csv"), [&](std::ostream& o) { r.write_curves_csv(o); });
  for (const auto& e : r.per_eps)
    std::cout << "eps " << e.eps << "  cov error " << e.cov_rel_error << "  sliced W1 " << e.sliced_w1.value << " +- "
              << e.sliced_w1.std_err << '\n';
  std::cout << "W1 monotone: " << (r.w1_monotone ? "yes" : "no") << '\n';
}

void cmd_average(const ExperimentConfig& cfg, const std::string& probe) {
  const AveragingReport r = run_averaging_check(cfg, probe.empty() ? cfg.average_probe : probe);
  write_json_file(path_in(cfg, "averaging.json"), r.to_json());
  write_csv(path_in(cfg, "averaging.csv"), [&](std::ostream& o) { r.write_csv(o); });
  for (const auto& e : r.per_eps)
    std::cout << "eps " << e.eps << "  median sup difference " << e.sup_difference.median << '\n';
}

void cmd_scalar(const ExperimentConfig& cfg, const EffectiveModel& m) {
  const PassiveScalarReport r = run_passive_scalar(cfg, m);
  write_json_file(path_in(cfg, "scalar.json"), r.to_json());
  write_csv(path_in(cfg, "scalar.csv"), [&](std::ostream& o) { r.write_csv(o); });
  for (const auto& e : r.per_eps)
    std::cout << "eps " << e.eps << "  mean W1 " << e.mean_w1.value << " +- " << e.mean_w1.std_err << "  max |E u - ubar| "
              << e.max_error << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Homogenization of passive tracers in locally stationary random flows"};
  app.require_subcommand(1);
  Common c;
  int probes = 20;
  std::string average_probe;

  auto* simulate = app.add_subcommand("simulate", "eps-characteristic ensembles for every eps in the list");
  auto* corrector = app.add_subcommand("corrector", "corrector values at random amplitude draws");
  auto* coeffs = app.add_subcommand("coeffs", "tabulate the effective drift and diffusivity");
  auto* limit = app.add_subcommand("limit", "limit diffusion ensemble and backward PDE solution");
  auto* converge = app.add_subcommand("converge", "convergence of eps-ensembles to the limit diffusion");
  auto* average = app.add_subcommand("average", "averaging check along eps-characteristics");
  auto* scalar = app.add_subcommand("scalar", "passive scalar u_eps versus the limit");
  for (auto* s : {simulate, corrector, coeffs}) add_common(s, c, false);
  for (auto* s : {limit, converge, scalar}) add_common(s, c, true);
  add_common(average, c, false);
  corrector->add_option("--probes", probes, "number of amplitude draws")->check(CLI::PositiveNumber);
  average->add_option("--probe", average_probe, "const, a1sq, w1 or w2");

  CLI11_PARSE(app, argc, argv);
  try {
    CLI::App* sub = app.get_subcommands().front();
    const ExperimentConfig cfg = resolve(c, sub);
    fs::create_directories(cfg.output_dir);
    write_text_file(path_in(cfg, "config.toml"), to_toml(cfg));
    if (sub == simulate) cmd_simulate(cfg);
    else if (sub == corrector) {
      write_json_file(path_in(cfg, "corrector.json"), run_corrector_probes(cfg, probes));
      std::cout << "wrote " << path_in(cfg, "corrector.json") << '\n';
    } else if (sub == coeffs) cmd_coeffs(cfg);
    else if (sub == limit) cmd_limit(cfg, model_for(cfg, c));
    else if (sub == converge) cmd_converge(cfg, model_for(cfg, c));
    else if (sub == average) cmd_average(cfg, average_probe);
    else if (sub == scalar) cmd_scalar(cfg, model_for(cfg, c));
  } catch (const std::exception& e) {
    std::cerr << "phom: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
