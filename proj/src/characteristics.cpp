#include "phom/characteristics.hpp"

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "phom/coefficient_bank.hpp"
#include "phom/parallel.hpp"

namespace phom {

void EpsTrajectoryConfig::validate() const {
  if (!(eps > 0 && eps <= 1)) throw std::invalid_argument("EpsTrajectoryConfig: eps must lie in (0, 1]");
  if (!(T > 0)) throw std::invalid_argument("EpsTrajectoryConfig: T must be positive");
  if (!(substep_c > 0 && substep_c <= 0.1))
    throw std::invalid_argument("EpsTrajectoryConfig: substep_c must lie in (0, 0.1]");
  if (macro_per_unit < 1) throw std::invalid_argument("EpsTrajectoryConfig: macro_per_unit must be >= 1");
  if (noise_substeps < 1) throw std::invalid_argument("EpsTrajectoryConfig: noise_substeps must be >= 1");
  if (!x0.allFinite() || !std::isfinite(s0)) throw std::invalid_argument("EpsTrajectoryConfig: non-finite start");
}

double amplitude_scale(const ModeSet& modes) {
  double s2 = 0.0;
  for (const Mode& m : modes.modes()) s2 += m.sigma.upper_bound() * m.sigma.upper_bound();
  return 3.0 * std::sqrt(s2);
}

TimeGrid make_time_grid(const EpsTrajectoryConfig& cfg, const ModeSet& modes) {
  cfg.validate();
  TimeGrid grid;
  const int n_macro = std::max(1, static_cast<int>(std::ceil(cfg.T * cfg.macro_per_unit - 1e-9)));
  const double macro_dt = cfg.T / n_macro;
  grid.macro_times.resize(static_cast<std::size_t>(n_macro) + 1);
  for (int k = 0; k <= n_macro; ++k) grid.macro_times[k] = cfg.s0 + k * macro_dt;
  const double raw = cfg.substep_c * cfg.eps * cfg.eps / (1.0 + modes.max_wavenumber() * amplitude_scale(modes));
  grid.substeps = std::max(1, static_cast<int>(std::ceil(macro_dt / raw - 1e-9)));
  grid.dt = macro_dt / grid.substeps;
  return grid;
}

namespace {

// Supplies a(t; y) and its y-gradient along one path.
class AmplitudeSource {
 public:
  enum class Kind { stationary, bank, frozen };

  AmplitudeSource(const ModeSet& modes, int bank_nodes, int noise_substeps, RngStream& rng)
      : modes_(modes), pieces_(noise_substeps) {
    if (modes.has_constant_profiles()) {
      kind_ = Kind::stationary;
      state_ = sample_invariant(modes, Vec2::Zero(), rng);
      decay_.resize(modes.size());
      sd_.resize(modes.size());
    } else {
      kind_ = Kind::bank;
      bank_.emplace(CoefficientBank::init_stationary(modes, bank_nodes, rng));
    }
  }
  AmplitudeSource(const ModeSet& modes, const PhasePoint& frozen) : modes_(modes), kind_(Kind::frozen), state_(frozen) {}

  bool has_gradient() const { return kind_ == Kind::bank; }

  void eval(const Vec2& y, PhasePoint& amps, PhaseGradient& grads) const {
    if (kind_ == Kind::bank)
      bank_->eval(modes_, y, amps, &grads);
    else
      amps = state_;
  }

  void advance(double dt_fast, RngStream& rng) {
    for (int r = 0; r < pieces_; ++r) advance_once(dt_fast / pieces_, rng);
  }

 private:
  void advance_once(double dt_fast, RngStream& rng) {
    switch (kind_) {
      case Kind::frozen:
        return;
      case Kind::bank:
        bank_->step(dt_fast, rng);
        return;
      case Kind::stationary:
        if (dt_fast != cached_dt_) {
          for (std::size_t i = 0; i < modes_.size(); ++i) {
            const double alpha = modes_[i].alpha.value(Vec2::Zero());
            const double sigma = modes_[i].sigma.value(Vec2::Zero());
            decay_[i] = std::exp(-alpha * dt_fast);
            sd_[i] = sigma * std::sqrt(-std::expm1(-2.0 * alpha * dt_fast));
          }
          cached_dt_ = dt_fast;
        }
        for (std::size_t i = 0; i < modes_.size(); ++i) {
          state_.a[i] = decay_[i] * state_.a[i] + sd_[i] * rng.normal();
          state_.b[i] = decay_[i] * state_.b[i] + sd_[i] * rng.normal();
        }
        return;
    }
  }

  const ModeSet& modes_;
  int pieces_ = 1;
  Kind kind_;
  PhasePoint state_;
  std::optional<CoefficientBank> bank_;
  std::vector<double> decay_, sd_;
  double cached_dt_ = -1.0;
};

// dx/dt = W(a, x/eps)/eps + U(grad a, x/eps) in macro variables.
Vec2 scaled_velocity(const ModeSet& modes, const PhasePoint& amps, const PhaseGradient* grads, const Vec2& x,
                     double eps) {
  Vec2 w = Vec2::Zero(), u = Vec2::Zero();
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const Vec2& k = modes[i].k;
    const double phase = k.dot(x) / eps;
    const double c = std::cos(phase), s = std::sin(phase);
    w += perp(k) * (-amps.a[i] * s + amps.b[i] * c);
    if (grads) u += perp(grads->a[i]) * c + perp(grads->b[i]) * s;
  }
  return w / eps + u;
}

void guard(const Vec2& x, double t) {
  if (!x.allFinite() || x.norm() > 1e6) {
    std::ostringstream msg;
    msg << "characteristic blew up at t = " << t << " (|x| = " << x.norm() << ")";
    throw std::runtime_error(msg.str());
  }
}

std::vector<Vec2> integrate(const EpsTrajectoryConfig& cfg, const ModeSet& modes, AmplitudeSource& source,
                            RngStream& rng, const StepObserver& observer) {
  const TimeGrid grid = make_time_grid(cfg, modes);
  const double eps = cfg.eps;
  const double dt = grid.dt;
  const double dt_fast = dt / (eps * eps);
  const bool with_grad = source.has_gradient();

  std::vector<Vec2> out;
  out.reserve(grid.macro_times.size());
  Vec2 x = cfg.x0;
  out.push_back(x);

  PhasePoint amps(modes.size());
  PhaseGradient grads(modes.size());
  source.eval(x, amps, grads);
  Vec2 v_start = scaled_velocity(modes, amps, with_grad ? &grads : nullptr, x, eps);
  double t = cfg.s0;
  if (observer) observer(t, x, amps);

  for (std::size_t k = 1; k < grid.macro_times.size(); ++k) {
    for (int s = 0; s < grid.substeps; ++s) {
      source.advance(dt_fast, rng);
      const Vec2 predictor = x + dt * v_start;
      source.eval(predictor, amps, grads);
      const Vec2 v_end = scaled_velocity(modes, amps, with_grad ? &grads : nullptr, predictor, eps);
      x += 0.5 * dt * (v_start + v_end);
      t = grid.macro_times[k - 1] + (s + 1) * dt;
      source.eval(x, amps, grads);
      v_start = scaled_velocity(modes, amps, with_grad ? &grads : nullptr, x, eps);
      if (observer) observer(t, x, amps);
    }
    guard(x, grid.macro_times[k]);
    out.push_back(x);
  }
  return out;
}

}  // namespace

std::vector<Vec2> integrate_eps_path(const EpsTrajectoryConfig& cfg, const ModeSet& modes, RngStream& rng,
                                     const StepObserver& observer) {
  cfg.validate();
  AmplitudeSource source(modes, cfg.bank_nodes, cfg.noise_substeps, rng);
  return integrate(cfg, modes, source, rng, observer);
}

std::vector<Vec2> integrate_eps_path_frozen(const EpsTrajectoryConfig& cfg, const ModeSet& modes,
                                            const PhasePoint& amps) {
  cfg.validate();
  AmplitudeSource source(modes, amps);
  RngStream unused;
  return integrate(cfg, modes, source, unused, {});
}

std::vector<Vec2> integrate_unscaled_path(const EpsTrajectoryConfig& cfg, const ModeSet& modes, RngStream& rng) {
  cfg.validate();
  AmplitudeSource source(modes, cfg.bank_nodes, cfg.noise_substeps, rng);
  const TimeGrid grid = make_time_grid(cfg, modes);
  const double eps = cfg.eps;
  const double dtau = grid.dt / (eps * eps);
  const bool with_grad = source.has_gradient();

  // V_eps(tau, X) = W(tau, X, eps X) + eps U(tau, X, eps X)
  PhasePoint amps(modes.size());
  PhaseGradient grads(modes.size());
  auto velocity = [&](const Vec2& X) {
    source.eval(eps * X, amps, grads);
    Vec2 v = eval_W(amps, X, modes);
    if (with_grad) v += eps * eval_U(grads, X, modes);
    return v;
  };

  std::vector<Vec2> out;
  Vec2 X = cfg.x0 / eps;
  out.push_back(eps * X);
  Vec2 v_start = velocity(X);
  for (std::size_t k = 1; k < grid.macro_times.size(); ++k) {
    for (int s = 0; s < grid.substeps; ++s) {
      source.advance(dtau, rng);
      const Vec2 predictor = X + dtau * v_start;
      const Vec2 v_end = velocity(predictor);
      X += 0.5 * dtau * (v_start + v_end);
      v_start = velocity(X);
    }
    guard(eps * X, grid.macro_times[k]);
    out.push_back(eps * X);
  }
  return out;
}

std::vector<Vec2> TrajectoryEnsemble::endpoints() const { return at(times.size() - 1); }

std::vector<Vec2> TrajectoryEnsemble::at(std::size_t time_index) const {
  std::vector<Vec2> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(p.at(time_index));
  return out;
}

TrajectoryEnsemble simulate_ensemble(const EpsTrajectoryConfig& cfg, const ModeSet& modes, std::size_t n_paths,
                                     Seed seed, int threads) {
  if (n_paths < 1) throw std::invalid_argument("simulate_ensemble: n_paths must be >= 1");
  cfg.validate();
  TrajectoryEnsemble ens;
  ens.kind = "eps";
  ens.eps = cfg.eps;
  ens.seed = seed.value;
  ens.modes_fingerprint = modes.fingerprint();
  ens.times = make_time_grid(cfg, modes).macro_times;
  ens.paths.resize(n_paths);
  const RngStream base(seed);
  parallel_for(n_paths, threads, [&](std::size_t p) {
    RngStream rng = base.split(p);
    ens.paths[p] = integrate_eps_path(cfg, modes, rng);
  });
  return ens;
}

}  // namespace phom
