#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "phom/field_model.hpp"
#include "phom/rng.hpp"

namespace phom {

/// Settings of one diffusively scaled characteristic x_eps(t; s0, x0) on [s0, s0 + T].
struct EpsTrajectoryConfig {
  double eps = 0.1;
  double T = 1.0;
  /// Micro step = substep_c * eps^2 / (1 + |k|_max * amplitude_scale(modes)).
  double substep_c = 0.1;
  Vec2 x0 = Vec2::Zero();
  double s0 = 0.0;
  int macro_per_unit = 64;
  int bank_nodes = 33;
  /// Amplitude noise per micro step is drawn as this many exact sub-steps, so a
  /// run shares its noise with one whose micro step is this many times smaller.
  int noise_substeps = 1;

  void validate() const;
};

/// Typical upper size of the fast velocity amplitude: 3 sqrt(sum_i max sigma_i^2).
double amplitude_scale(const ModeSet& modes);

/// Uniform time discretisation shared by all paths of one configuration.
struct TimeGrid {
  std::vector<double> macro_times;
  int substeps = 1;   // micro steps per macro interval
  double dt = 0.0;    // micro step (macro time units)
};
TimeGrid make_time_grid(const EpsTrajectoryConfig& cfg, const ModeSet& modes);

/// Called at every micro node with the macro time, the position and the
/// unrotated amplitudes a(t/eps^2; x) at the slow point x.
using StepObserver = std::function<void(double t, const Vec2& x, const PhasePoint& amps)>;

/// Heun integration of dx/dt = W(t/eps^2, x/eps, x)/eps + U(t/eps^2, x/eps, x).
/// The amplitudes are advanced exactly between micro steps; the predictor uses
/// the field at the step start and the corrector the field at the step end.
/// Constant profiles use exact OU amplitudes directly (U = 0); otherwise a
/// CoefficientBank with cfg.bank_nodes nodes supplies a(t; y) and its
/// y-gradient. Returns positions on the macro grid. Throws std::runtime_error
/// if |x| exceeds 1e6.
std::vector<Vec2> integrate_eps_path(const EpsTrajectoryConfig& cfg, const ModeSet& modes, RngStream& rng,
                                     const StepObserver& observer = {});

/// Same integrator with amplitudes frozen in time and zero y-gradient.
std::vector<Vec2> integrate_eps_path_frozen(const EpsTrajectoryConfig& cfg, const ModeSet& modes,
                                            const PhasePoint& amps);

/// Integrates the unscaled characteristic dX/dtau = V_eps(tau, X) on the micro
/// time scale with the same noise consumption as integrate_eps_path and
/// returns eps * X(t / eps^2) on the macro grid.
std::vector<Vec2> integrate_unscaled_path(const EpsTrajectoryConfig& cfg, const ModeSet& modes, RngStream& rng);

/// Seeded collection of paths on a shared time grid.
struct TrajectoryEnsemble {
  std::string kind;  // "eps" or "limit"
  double eps = 0.0;
  std::uint64_t seed = 0;
  std::string modes_fingerprint;
  std::vector<double> times;
  std::vector<std::vector<Vec2>> paths;

  std::size_t size() const { return paths.size(); }
  std::vector<Vec2> endpoints() const;
  std::vector<Vec2> at(std::size_t time_index) const;
};

/// n_paths independent characteristics; path p uses RngStream(seed).split(p),
/// so the result does not depend on the thread count.
TrajectoryEnsemble simulate_ensemble(const EpsTrajectoryConfig& cfg, const ModeSet& modes, std::size_t n_paths,
                                     Seed seed, int threads = 1);

}  // namespace phom
