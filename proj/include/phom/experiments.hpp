#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "phom/characteristics.hpp"
#include "phom/config.hpp"
#include "phom/effective_model.hpp"
#include "phom/metrics.hpp"

namespace phom {

/// Terminal data of the passive scalar. Text forms:
///   "const c"
///   "bump amp cx cy width"          amp exp(-|x - c|^2 / (2 width^2))
///   "tanh amp dx dy offset width"   amp tanh((d . x - offset) / width)
class ScalarField {
 public:
  static ScalarField parse(std::string_view text);
  double operator()(const Vec2& x) const;
  double max_abs() const;
  bool is_constant() const { return kind_ == 0; }
  const std::string& describe() const { return text_; }

 private:
  int kind_ = 0;
  double amp_ = 0.0, width_ = 1.0, offset_ = 0.0;
  Vec2 v_ = Vec2::Zero();
  std::string text_;
};

/// Test function F(a, y) for the averaging check, polynomial in the
/// amplitudes. `support` lists the amplitude coordinates it depends on
/// (i for a_i, N + i for b_i) and `degree` its total degree, which fixes the
/// Gauss-Hermite rule used for the average over nu_*^y.
struct AveragingProbe {
  std::string name;
  int degree = 0;
  std::vector<std::size_t> support;
  std::function<double(const PhasePoint& amps, const Vec2& y)> f;
};

/// Library probes: "const" (a-independent), "a1sq" (a_1^2), "w1", "w2"
/// (components of the frame velocity).
AveragingProbe averaging_probe(const std::string& name, const ModeSet& modes);
/// Integral of the probe against nu_*^y by tensor Gauss-Hermite quadrature on its support.
double averaged_probe(const AveragingProbe& probe, const ModeSet& modes, const Vec2& y);

/// Derived seed of one stage of an experiment: RngStream(seed).split(tag).key().
Seed derived_seed(std::uint64_t seed, std::uint64_t tag);

/// Effective coefficients for the configuration. Constant profiles give a
/// single node at the origin; otherwise the [solver] grid is tabulated.
EffectiveModel build_effective_model(const ExperimentConfig& cfg);

/// Provenance block embedded in every report.
nlohmann::ordered_json provenance(const ExperimentConfig& cfg, const nlohmann::ordered_json& seeds);

struct EpsConvergence {
  double eps = 0.0;
  MomentSummary moments;
  double cov_rel_error = 0.0;  // against the reference covariance
  ValueWithSE sliced_w1;        // endpoint clouds vs the limit ensemble
  std::vector<Mat2> cov_curve;
};

struct ConvergenceReport {
  std::vector<double> curve_times;
  Mat2 reference_cov = Mat2::Zero();  // A T for a constant model, else the limit ensemble covariance
  bool reference_analytic = false;
  MomentSummary limit_moments;
  std::vector<Mat2> limit_cov_curve;
  std::vector<EpsConvergence> per_eps;
  bool w1_monotone = true;    // W1 non-increasing along eps_list up to 1 SE
  bool cov_monotone = true;   // covariance error non-increasing up to 1 SE
  nlohmann::ordered_json provenance;

  nlohmann::ordered_json to_json() const;
  /// Columns: eps,mean1,mean2,cov11,cov12,cov22,se_cov11,se_cov12,se_cov22,cov_rel_error,sliced_w1,sliced_w1_se.
  void write_csv(std::ostream& out) const;
  /// Columns: source,eps,t,c11,c12,c22 (source is eps or limit).
  void write_curves_csv(std::ostream& out) const;
};

ConvergenceReport run_convergence(const ExperimentConfig& cfg, const EffectiveModel& model);
ConvergenceReport run_convergence(const ExperimentConfig& cfg);

struct EpsAveraging {
  double eps = 0.0;
  ScalarSummary sup_difference;  // sup_t |int_0^t F^eps - int_0^t Fbar(x_eps)|
  ScalarSummary sup_integral;    // sup_t |int_0^t F^eps|
};

struct AveragingReport {
  std::string probe;
  std::vector<EpsAveraging> per_eps;
  nlohmann::ordered_json provenance;

  nlohmann::ordered_json to_json() const;
  /// Columns: eps,median,mean,se,q10,q90,max,integral_median,integral_max.
  void write_csv(std::ostream& out) const;
};

AveragingReport run_averaging_check(const ExperimentConfig& cfg, const std::string& probe);

struct ProbeEps {
  double eps = 0.0;
  ValueWithSE mean;        // E u0(x_eps(T; t0, x))
  double abs_error = 0.0;  // |mean - pde| / max|u0|
  ValueWithSE w1;          // W1 of u0(x_eps) vs u0(x) values
};

struct ProbeResult {
  Vec2 x = Vec2::Zero();
  double pde = 0.0;       // ubar(t0, x)
  ValueWithSE limit_mean; // E u0(x(T; t0, x)) of the limit SDE
  std::vector<ProbeEps> per_eps;
};

struct EpsScalar {
  double eps = 0.0;
  ValueWithSE mean_w1;     // W1 averaged over probes
  double max_error = 0.0;  // max over probes of abs_error
};

struct PassiveScalarReport {
  std::string u0;
  double scale = 1.0;  // max|u0|
  double t0 = 0.0, T = 0.0;
  double pde_dt = 0.0;
  double pde_half_width = 0.0;
  std::vector<ProbeResult> probes;
  std::vector<EpsScalar> per_eps;
  bool w1_monotone = true;
  nlohmann::ordered_json provenance;

  nlohmann::ordered_json to_json() const;
  /// Columns: probe,x1,x2,eps,mean,se,pde,limit_mean,limit_se,abs_error,w1,w1_se.
  void write_csv(std::ostream& out) const;
};

PassiveScalarReport run_passive_scalar(const ExperimentConfig& cfg, const EffectiveModel& model);
PassiveScalarReport run_passive_scalar(const ExperimentConfig& cfg);

/// Corrector values at `count` amplitude draws from nu_*^{x0}: Monte Carlo
/// estimate with SE and, for N <= 4, the Galerkin value.
nlohmann::ordered_json run_corrector_probes(const ExperimentConfig& cfg, int count);

/// True if values[k+1] <= values[k] + max(se[k], se[k+1]) for all k.
bool non_increasing_within(const std::vector<double>& values, const std::vector<double>& se);

}  // namespace phom
