#include "phom/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "phom/cell_problem.hpp"
#include "phom/galerkin.hpp"
#include "phom/io.hpp"
#include "phom/limit_diffusion.hpp"
#include "phom/parallel.hpp"

namespace phom {

namespace {

using J = nlohmann::ordered_json;

constexpr std::uint64_t tag_coeffs = 1;
constexpr std::uint64_t tag_limit = 2;
constexpr std::uint64_t tag_eps = 100;
constexpr std::uint64_t tag_w1 = 300;
constexpr std::uint64_t tag_average = 400;
constexpr std::uint64_t tag_scalar_limit = 500;
constexpr std::uint64_t tag_corrector = 600;
constexpr std::uint64_t tag_scalar_eps = 1000;
constexpr std::uint64_t tag_scalar_w1 = 5000;

J vec_json(const Vec2& v) { return J::array({v.x(), v.y()}); }
J mat_json(const Mat2& m) { return J::array({J::array({m(0, 0), m(0, 1)}), J::array({m(1, 0), m(1, 1)})}); }

J moments_json(const MomentSummary& m) {
  J j;
  j["n"] = m.n;
  j["mean"] = vec_json(m.mean);
  j["mean_se"] = vec_json(m.mean_se);
  j["cov"] = mat_json(m.cov);
  j["cov_se"] = mat_json(m.cov_se);
  return j;
}

J se_json(const ValueWithSE& v) { return J{{"value", v.value}, {"se", v.std_err}}; }

J summary_json(const ScalarSummary& s) {
  J j;
  j["n"] = s.n;
  j["mean"] = s.mean;
  j["se"] = s.std_err;
  j["median"] = s.median;
  j["q10"] = s.q10;
  j["q90"] = s.q90;
  j["max"] = s.max;
  return j;
}

std::string csv_real(double v) { return format_real(v); }

ValueWithSE mean_se(const std::vector<double>& xs) {
  const ScalarSummary s = summarize(xs);
  return {s.mean, s.std_err};
}

EpsTrajectoryConfig eps_config(const ExperimentConfig& cfg, double eps, const Vec2& x0, double s0, double T) {
  EpsTrajectoryConfig ec;
  ec.eps = eps;
  ec.T = T;
  ec.substep_c = cfg.solver.substep_c;
  ec.x0 = x0;
  ec.s0 = s0;
  ec.macro_per_unit = cfg.solver.macro_per_unit;
  ec.bank_nodes = cfg.solver.bank_nodes;
  return ec;
}

LimitSdeConfig limit_config(const ExperimentConfig& cfg, const Vec2& x0, double s0, double T) {
  LimitSdeConfig lc;
  lc.x0 = x0;
  lc.s0 = s0;
  lc.T = T;
  lc.dt = cfg.solver.limit_dt;
  lc.macro_per_unit = cfg.solver.macro_per_unit;
  return lc;
}

// nodes and weights of the n-point rule for the standard normal
void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) jac(k, k - 1) = jac(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  nodes.resize(n);
  weights.resize(n);
  for (int k = 0; k < n; ++k) {
    nodes[k] = es.eigenvalues()(k);
    weights[k] = es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
  }
}

}  // namespace

ScalarField ScalarField::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string kind;
  in >> kind;
  ScalarField f;
  f.text_ = std::string(text);
  auto need = [&](int count) {
    std::vector<double> v(count);
    for (auto& x : v)
      if (!(in >> x)) throw std::invalid_argument("ScalarField: '" + std::string(text) + "' has too few parameters");
    std::string extra;
    if (in >> extra) throw std::invalid_argument("ScalarField: '" + std::string(text) + "' has extra tokens");
    return v;
  };
  if (kind == "const") {
    f.kind_ = 0;
    f.amp_ = need(1)[0];
  } else if (kind == "bump") {
    const auto v = need(4);
    f.kind_ = 1;
    f.amp_ = v[0];
    f.v_ = Vec2(v[1], v[2]);
    f.width_ = v[3];
  } else if (kind == "tanh") {
    const auto v = need(5);
    f.kind_ = 2;
    f.amp_ = v[0];
    f.v_ = Vec2(v[1], v[2]);
    f.offset_ = v[3];
    f.width_ = v[4];
    if (f.v_.isZero(0.0)) throw std::invalid_argument("ScalarField: tanh direction must be nonzero");
  } else {
    throw std::invalid_argument("ScalarField: unknown kind '" + kind + "'");
  }
  if (!(f.width_ > 0)) throw std::invalid_argument("ScalarField: width must be positive");
  return f;
}

double ScalarField::operator()(const Vec2& x) const {
  switch (kind_) {
    case 0:
      return amp_;
    case 1:
      return amp_ * std::exp(-(x - v_).squaredNorm() / (2 * width_ * width_));
    default:
      return amp_ * std::tanh((v_.dot(x) - offset_) / width_);
  }
}

double ScalarField::max_abs() const { return std::abs(amp_); }

AveragingProbe averaging_probe(const std::string& name, const ModeSet& modes) {
  const std::size_t n = modes.size();
  AveragingProbe p;
  p.name = name;
  if (name == "const") {
    p.degree = 0;
    p.f = [](const PhasePoint&, const Vec2& y) { return 1.0 + 0.5 * std::cos(y.x()) * std::sin(y.y()); };
  } else if (name == "a1sq") {
    p.degree = 2;
    p.support = {0};
    p.f = [](const PhasePoint& a, const Vec2&) { return a.a[0] * a.a[0]; };
  } else if (name == "w1" || name == "w2") {
    const int q = name == "w1" ? 0 : 1;
    p.degree = 1;
    for (std::size_t i = 0; i < n; ++i) p.support.push_back(n + i);
    p.f = [q, modes](const PhasePoint& a, const Vec2&) { return frame_velocity(a, modes)(q); };
  } else {
    throw std::invalid_argument("averaging_probe: unknown probe '" + name + "' (const, a1sq, w1, w2)");
  }
  return p;
}

double averaged_probe(const AveragingProbe& probe, const ModeSet& modes, const Vec2& y) {
  const std::size_t n = modes.size();
  const int m = probe.degree / 2 + 1;
  std::vector<double> nodes, weights;
  gauss_hermite(m, nodes, weights);
  std::vector<double> sd(probe.support.size());
  for (std::size_t s = 0; s < sd.size(); ++s) {
    const std::size_t c = probe.support[s];
    if (c >= 2 * n) throw std::invalid_argument("averaged_probe: support index out of range");
    sd[s] = modes[c % n].sigma.value(y);
  }
  PhasePoint pt(n);
  std::vector<int> idx(probe.support.size(), 0);
  double total = 0.0;
  for (;;) {
    double w = 1.0;
    for (std::size_t s = 0; s < idx.size(); ++s) {
      const std::size_t c = probe.support[s];
      (c < n ? pt.a[c] : pt.b[c - n]) = sd[s] * nodes[idx[s]];
      w *= weights[idx[s]];
    }
    total += w * probe.f(pt, y);
    std::size_t s = 0;
    while (s < idx.size() && ++idx[s] == m) idx[s++] = 0;
    if (s == idx.size()) break;
  }
  return total;
}

Seed derived_seed(std::uint64_t seed, std::uint64_t tag) { return Seed{RngStream(Seed{seed}).split(tag).key()}; }

EffectiveModel build_effective_model(const ExperimentConfig& cfg) {
  cfg.validate();
  EffectiveOptions opt;
  opt.tol = cfg.solver.tol;
  opt.dt = cfg.solver.aux_dt;
  opt.h_y = cfg.solver.h_y;
  opt.threads = cfg.solver.threads;
  const EffectiveGrid grid = cfg.modes.has_constant_profiles() ? EffectiveGrid{} : cfg.solver.coeff_grid;
  EffectiveModel model = tabulate_effective(cfg.modes, grid, cfg.solver.coeff_samples,
                                            derived_seed(cfg.seed, tag_coeffs), opt);
  model.provenance = provenance(cfg, J{{"coefficients", tag_coeffs}});
  return model;
}

J provenance(const ExperimentConfig& cfg, const J& seeds) {
  J p;
  p["tool"] = "phom";
  p["version"] = "0.1.0";
  p["config_hash"] = cfg.content_hash();
  p["modes_fingerprint"] = cfg.modes.fingerprint();
  p["seed"] = cfg.seed;
  p["seed_tags"] = seeds;
  p["seed_derivation"] = "RngStream(seed).split(tag).key(); path p of a stage uses split(p) of that key";
  J est;
  est["tol"] = cfg.solver.tol;
  est["aux_dt"] = cfg.solver.aux_dt;
  est["h_y"] = cfg.solver.h_y;
  est["coeff_samples"] = cfg.solver.coeff_samples;
  est["substep_c"] = cfg.solver.substep_c;
  est["bank_nodes"] = cfg.solver.bank_nodes;
  est["limit_dt"] = cfg.solver.limit_dt;
  est["bootstrap"] = cfg.solver.bootstrap;
  p["estimator"] = est;
  p["config"] = cfg.to_json();
  return p;
}

bool non_increasing_within(const std::vector<double>& values, const std::vector<double>& se) {
  for (std::size_t k = 0; k + 1 < values.size(); ++k)
    if (values[k + 1] > values[k] + std::max(se[k], se[k + 1])) return false;
  return true;
}

ConvergenceReport run_convergence(const ExperimentConfig& cfg, const EffectiveModel& model) {
  cfg.validate();
  const int threads = cfg.solver.threads;
  const auto has = [&](const char* m) { return std::find(cfg.metrics.begin(), cfg.metrics.end(), m) != cfg.metrics.end(); };
  ConvergenceReport rep;
  J seeds;
  seeds["limit"] = tag_limit;

  const TrajectoryEnsemble lim =
      simulate_limit(limit_config(cfg, cfg.x0, cfg.s0, cfg.T), model, cfg.n_paths, derived_seed(cfg.seed, tag_limit), threads);
  const auto lim_end = lim.endpoints();
  rep.limit_moments = moments(lim_end);
  const auto idx = curve_indices(lim.times.size(), cfg.solver.curve_points);
  for (std::size_t i : idx) rep.curve_times.push_back(lim.times[i] - cfg.s0);
  if (has("covariance_curve"))
    for (std::size_t i : idx) rep.limit_cov_curve.push_back(moments(lim.at(i)).cov);

  rep.reference_analytic = model.size() == 1;
  rep.reference_cov = rep.reference_analytic ? Mat2(model.diffusivity(cfg.x0) * cfg.T) : rep.limit_moments.cov;

  std::vector<double> w1, w1_se, err, err_se;
  for (std::size_t e = 0; e < cfg.eps_list.size(); ++e) {
    const double eps = cfg.eps_list[e];
    seeds["eps_" + format_real(eps)] = tag_eps + e;
    const TrajectoryEnsemble ens = simulate_ensemble(eps_config(cfg, eps, cfg.x0, cfg.s0, cfg.T), cfg.modes,
                                                     cfg.n_paths, derived_seed(cfg.seed, tag_eps + e), threads);
    if (ens.times.size() != lim.times.size()) throw std::logic_error("run_convergence: time grids differ");
    EpsConvergence ec;
    ec.eps = eps;
    const auto end = ens.endpoints();
    ec.moments = moments(end);
    ec.cov_rel_error = relative_error(ec.moments.cov, rep.reference_cov);
    err.push_back(ec.cov_rel_error);
    err_se.push_back(ec.moments.cov_se.norm() / rep.reference_cov.norm());
    if (has("sliced_wasserstein")) {
      seeds["bootstrap_" + format_real(eps)] = tag_w1 + e;
      ec.sliced_w1 = bootstrap_two_sample(
          end, lim_end, [](const std::vector<Vec2>& a, const std::vector<Vec2>& b) { return sliced_wasserstein1(a, b); },
          cfg.solver.bootstrap, derived_seed(cfg.seed, tag_w1 + e));
      w1.push_back(ec.sliced_w1.value);
      w1_se.push_back(ec.sliced_w1.std_err);
    }
    if (has("covariance_curve"))
      for (std::size_t i : idx) ec.cov_curve.push_back(moments(ens.at(i)).cov);
    rep.per_eps.push_back(std::move(ec));
  }
  rep.w1_monotone = non_increasing_within(w1, w1_se);
  rep.cov_monotone = non_increasing_within(err, err_se);
  rep.provenance = provenance(cfg, seeds);
  rep.provenance["effective_model"] = model.provenance;
  return rep;
}

ConvergenceReport run_convergence(const ExperimentConfig& cfg) { return run_convergence(cfg, build_effective_model(cfg)); }

J ConvergenceReport::to_json() const {
  J j;
  j["curve_times"] = curve_times;
  j["reference_cov"] = mat_json(reference_cov);
  j["reference_analytic"] = reference_analytic;
  j["limit_moments"] = moments_json(limit_moments);
  J lc = J::array();
  for (const auto& m : limit_cov_curve) lc.push_back(mat_json(m));
  j["limit_cov_curve"] = lc;
  J pe = J::array();
  for (const auto& e : per_eps) {
    J x;
    x["eps"] = e.eps;
    x["moments"] = moments_json(e.moments);
    x["cov_rel_error"] = e.cov_rel_error;
    x["sliced_w1"] = se_json(e.sliced_w1);
    J c = J::array();
    for (const auto& m : e.cov_curve) c.push_back(mat_json(m));
    x["cov_curve"] = c;
    pe.push_back(x);
  }
  j["per_eps"] = pe;
  j["w1_monotone"] = w1_monotone;
  j["cov_monotone"] = cov_monotone;
  j["provenance"] = provenance;
  return j;
}

void ConvergenceReport::write_csv(std::ostream& out) const {
  out << "eps,mean1,mean2,cov11,cov12,cov22,se_cov11,se_cov12,se_cov22,cov_rel_error,sliced_w1,sliced_w1_se\n";
  for (const auto& e : per_eps) {
    const auto& m = e.moments;
    out << csv_real(e.eps) << ',' << csv_real(m.mean.x()) << ',' << csv_real(m.mean.y()) << ',' << csv_real(m.cov(0, 0))
        << ',' << csv_real(m.cov(0, 1)) << ',' << csv_real(m.cov(1, 1)) << ',' << csv_real(m.cov_se(0, 0)) << ','
        << csv_real(m.cov_se(0, 1)) << ',' << csv_real(m.cov_se(1, 1)) << ',' << csv_real(e.cov_rel_error) << ','
        << csv_real(e.sliced_w1.value) << ',' << csv_real(e.sliced_w1.std_err) << '\n';
  }
}

void ConvergenceReport::write_curves_csv(std::ostream& out) const {
  out << "source,eps,t,c11,c12,c22\n";
  auto rows = [&](const char* source, double eps, const std::vector<Mat2>& curve) {
    for (std::size_t i = 0; i < curve.size() && i < curve_times.size(); ++i)
      out << source << ',' << csv_real(eps) << ',' << csv_real(curve_times[i]) << ',' << csv_real(curve[i](0, 0)) << ','
          << csv_real(curve[i](0, 1)) << ',' << csv_real(curve[i](1, 1)) << '\n';
  };
  rows("limit", 0.0, limit_cov_curve);
  for (const auto& e : per_eps) rows("eps", e.eps, e.cov_curve);
}

AveragingReport run_averaging_check(const ExperimentConfig& cfg, const std::string& probe_name) {
  cfg.validate();
  const AveragingProbe probe = averaging_probe(probe_name, cfg.modes);
  AveragingReport rep;
  rep.probe = probe_name;
  J seeds;
  for (std::size_t e = 0; e < cfg.eps_list.size(); ++e) {
    const double eps = cfg.eps_list[e];
    seeds["eps_" + format_real(eps)] = tag_average + e;
    const EpsTrajectoryConfig ec = eps_config(cfg, eps, cfg.x0, cfg.s0, cfg.T);
    const RngStream base(derived_seed(cfg.seed, tag_average + e));
    std::vector<double> sup_diff(cfg.n_paths), sup_int(cfg.n_paths);
    parallel_for(cfg.n_paths, cfg.solver.threads, [&](std::size_t p) {
      RngStream rng = base.split(p);
      bool first = true;
      double t_prev = 0.0, f_prev = 0.0, g_prev = 0.0, diff = 0.0, integral = 0.0, sd = 0.0, si = 0.0;
      integrate_eps_path(ec, cfg.modes, rng, [&](double t, const Vec2& x, const PhasePoint& amps) {
        const double f = probe.f(rotate(amps, x / eps, cfg.modes), x);
        const double g = averaged_probe(probe, cfg.modes, x);
        if (!first) {
          const double h = 0.5 * (t - t_prev);
          integral += h * (f + f_prev);
          diff += h * ((f - g) + (f_prev - g_prev));
          sd = std::max(sd, std::abs(diff));
          si = std::max(si, std::abs(integral));
        }
        first = false;
        t_prev = t;
        f_prev = f;
        g_prev = g;
      });
      sup_diff[p] = sd;
      sup_int[p] = si;
    });
    rep.per_eps.push_back({eps, summarize(sup_diff), summarize(sup_int)});
  }
  rep.provenance = provenance(cfg, seeds);
  return rep;
}

J AveragingReport::to_json() const {
  J j;
  j["probe"] = probe;
  J pe = J::array();
  for (const auto& e : per_eps)
    pe.push_back(J{{"eps", e.eps}, {"sup_difference", summary_json(e.sup_difference)},
                   {"sup_integral", summary_json(e.sup_integral)}});
  j["per_eps"] = pe;
  j["provenance"] = provenance;
  return j;
}

void AveragingReport::write_csv(std::ostream& out) const {
  out << "eps,median,mean,se,q10,q90,max,integral_median,integral_max\n";
  for (const auto& e : per_eps) {
    const auto& s = e.sup_difference;
    out << csv_real(e.eps) << ',' << csv_real(s.median) << ',' << csv_real(s.mean) << ',' << csv_real(s.std_err) << ','
        << csv_real(s.q10) << ',' << csv_real(s.q90) << ',' << csv_real(s.max) << ','
        << csv_real(e.sup_integral.median) << ',' << csv_real(e.sup_integral.max) << '\n';
  }
}

PassiveScalarReport run_passive_scalar(const ExperimentConfig& cfg, const EffectiveModel& model) {
  cfg.validate();
  const ScalarField u0 = ScalarField::parse(cfg.u0);
  const int threads = cfg.solver.threads;
  PassiveScalarReport rep;
  rep.u0 = u0.describe();
  rep.scale = u0.max_abs() > 0 ? u0.max_abs() : 1.0;
  rep.t0 = cfg.t0;
  rep.T = cfg.s0 + cfg.T;
  const double span = rep.T - cfg.t0;
  const auto probes = cfg.probe_points();

  double reach = 0.0;
  for (const auto& p : probes) reach = std::max(reach, p.cwiseAbs().maxCoeff());
  double hw = cfg.solver.pde_half_width;
  if (hw <= 0) {
    const double spread = std::sqrt(std::max(model.max_trace(), 0.0) * span);
    hw = std::max(4.0, reach + model.max_drift() * span + 6.0 * spread);
  }
  rep.pde_half_width = hw;
  BackwardPdeConfig pc;
  pc.x_min = pc.y_min = -hw;
  pc.x_max = pc.y_max = hw;
  pc.nx = pc.ny = cfg.solver.pde_nodes;
  pc.T = rep.T;
  pc.u0 = [&u0](const Vec2& x) { return u0(x); };
  const PdeSolution pde = solve_backward_pde(pc, model, {cfg.t0});
  rep.pde_dt = pde.dt;

  J seeds;
  seeds["limit_probe_base"] = tag_scalar_limit;
  seeds["eps_probe_base"] = tag_scalar_eps;
  seeds["bootstrap_base"] = tag_scalar_w1;
  std::vector<double> w1(cfg.eps_list.size(), 0.0), w1_var(cfg.eps_list.size(), 0.0);
  std::vector<double> max_err(cfg.eps_list.size(), 0.0);
  const auto values = [&](const TrajectoryEnsemble& ens) {
    std::vector<double> v;
    v.reserve(ens.size());
    for (const auto& x : ens.endpoints()) v.push_back(u0(x));
    return v;
  };
  const auto w1_stat = [](const std::vector<double>& a, const std::vector<double>& b) { return wasserstein1(a, b); };
  for (std::size_t pi = 0; pi < probes.size(); ++pi) {
    ProbeResult pr;
    pr.x = probes[pi];
    pr.pde = pde.value_at(cfg.t0, pr.x);
    const auto lim = values(simulate_limit(limit_config(cfg, pr.x, cfg.t0, span), model, cfg.n_paths,
                                           derived_seed(cfg.seed, tag_scalar_limit + pi), threads));
    pr.limit_mean = mean_se(lim);
    for (std::size_t e = 0; e < cfg.eps_list.size(); ++e) {
      const double eps = cfg.eps_list[e];
      const std::uint64_t tag = 100 * e + pi;
      const auto vals = values(simulate_ensemble(eps_config(cfg, eps, pr.x, cfg.t0, span), cfg.modes, cfg.n_paths,
                                                 derived_seed(cfg.seed, tag_scalar_eps + tag), threads));
      ProbeEps pe;
      pe.eps = eps;
      pe.mean = mean_se(vals);
      pe.abs_error = std::abs(pe.mean.value - pr.pde) / rep.scale;
      pe.w1 = bootstrap_two_sample(vals, lim, w1_stat, cfg.solver.bootstrap, derived_seed(cfg.seed, tag_scalar_w1 + tag));
      w1[e] += pe.w1.value / probes.size();
      w1_var[e] += pe.w1.std_err * pe.w1.std_err / (probes.size() * probes.size());
      max_err[e] = std::max(max_err[e], pe.abs_error);
      pr.per_eps.push_back(pe);
    }
    rep.probes.push_back(std::move(pr));
  }
  std::vector<double> w1_se(w1.size());
  for (std::size_t e = 0; e < cfg.eps_list.size(); ++e) {
    w1_se[e] = std::sqrt(w1_var[e]);
    rep.per_eps.push_back({cfg.eps_list[e], {w1[e], w1_se[e]}, max_err[e]});
  }
  rep.w1_monotone = non_increasing_within(w1, w1_se);
  rep.provenance = provenance(cfg, seeds);
  rep.provenance["effective_model"] = model.provenance;
  return rep;
}

PassiveScalarReport run_passive_scalar(const ExperimentConfig& cfg) {
  return run_passive_scalar(cfg, build_effective_model(cfg));
}

J PassiveScalarReport::to_json() const {
  J j;
  j["u0"] = u0;
  j["scale"] = scale;
  j["t0"] = t0;
  j["T"] = T;
  j["pde_dt"] = pde_dt;
  j["pde_half_width"] = pde_half_width;
  J ps = J::array();
  for (const auto& p : probes) {
    J x;
    x["x"] = vec_json(p.x);
    x["pde"] = p.pde;
    x["limit_mean"] = se_json(p.limit_mean);
    J pe = J::array();
    for (const auto& e : p.per_eps)
      pe.push_back(J{{"eps", e.eps}, {"mean", se_json(e.mean)}, {"abs_error", e.abs_error}, {"w1", se_json(e.w1)}});
    x["per_eps"] = pe;
    ps.push_back(x);
  }
  j["probes"] = ps;
  J pe = J::array();
  for (const auto& e : per_eps) pe.push_back(J{{"eps", e.eps}, {"mean_w1", se_json(e.mean_w1)}, {"max_error", e.max_error}});
  j["per_eps"] = pe;
  j["w1_monotone"] = w1_monotone;
  j["provenance"] = provenance;
  return j;
}

void PassiveScalarReport::write_csv(std::ostream& out) const {
  out << "probe,x1,x2,eps,mean,se,pde,limit_mean,limit_se,abs_error,w1,w1_se\n";
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& p = probes[i];
    for (const auto& e : p.per_eps)
      out << i << ',' << csv_real(p.x.x()) << ',' << csv_real(p.x.y()) << ',' << csv_real(e.eps) << ','
          << csv_real(e.mean.value) << ',' << csv_real(e.mean.std_err) << ',' << csv_real(p.pde) << ','
          << csv_real(p.limit_mean.value) << ',' << csv_real(p.limit_mean.std_err) << ',' << csv_real(e.abs_error)
          << ',' << csv_real(e.w1.value) << ',' << csv_real(e.w1.std_err) << '\n';
  }
}

J run_corrector_probes(const ExperimentConfig& cfg, int count) {
  cfg.validate();
  if (count < 1) throw std::invalid_argument("run_corrector_probes: count must be >= 1");
  const ModeSet& modes = cfg.modes;
  const Vec2 y = cfg.x0;
  RngStream draws(derived_seed(cfg.seed, tag_corrector));
  const RngStream paths = draws.split(1);
  SolverOptions opt;
  opt.dt = cfg.solver.aux_dt;
  opt.threads = cfg.solver.threads;
  std::unique_ptr<GalerkinCorrector> gal;
  if (modes.size() <= 4) {
    const int degree = modes.size() <= 2 ? 10 : (modes.size() == 3 ? 8 : 6);
    gal = std::make_unique<GalerkinCorrector>(galerkin_solve(modes, y, degree));
  }
  J rows = J::array();
  for (int c = 0; c < count; ++c) {
    const PhasePoint amps = sample_invariant(modes, y, draws);
    RngStream rng = paths.split(static_cast<std::uint64_t>(c));
    const CorrectorEstimate est = corrector_chi(amps, y, cfg.solver.tol, cfg.n_paths, modes, rng, opt);
    J r;
    r["a"] = amps.a;
    r["b"] = amps.b;
    r["chi"] = vec_json(est.value);
    r["se"] = vec_json(est.std_err);
    r["truncation"] = est.truncation;
    r["T_max"] = est.T_max;
    if (gal) r["galerkin"] = vec_json(gal->value(amps));
    rows.push_back(r);
  }
  J j;
  j["y"] = vec_json(y);
  j["n_paths"] = cfg.n_paths;
  if (gal) {
    j["galerkin_degree"] = gal->degree();
    j["galerkin_residual"] = gal->residual();
  }
  j["probes"] = rows;
  j["provenance"] = provenance(cfg, J{{"draws", tag_corrector}});
  return j;
}

}  // namespace phom
