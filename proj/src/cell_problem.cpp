#include "phom/cell_problem.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "phom/parallel.hpp"
#include "phom/stats.hpp"

namespace phom {

namespace {

constexpr std::size_t kMaxModes = 32;
const double kJacobianLimit = std::exp(50.0);

int checked_steps(double t, double dt) {
  if (!(t >= 0)) throw std::invalid_argument("time horizon must be non-negative");
  return static_cast<int>(std::ceil(t / dt - 1e-9));
}

// Step size dividing [0, t] evenly with at most opt.dt per step.
double fitted_dt(double t, double dt) {
  if (t <= 0) return dt;
  const int m = std::max(1, checked_steps(t, dt));
  return t / m;
}

void reduce(const std::vector<Eigen::MatrixXd>& samples, const std::vector<char>& ok, Eigen::MatrixXd& mean,
            Eigen::MatrixXd& se, std::size_t& used) {
  const Eigen::Index r = samples.front().rows(), c = samples.front().cols();
  std::vector<Accumulator> acc(static_cast<std::size_t>(r * c));
  used = 0;
  for (std::size_t p = 0; p < samples.size(); ++p) {
    if (!ok[p]) continue;
    ++used;
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) acc[static_cast<std::size_t>(i * c + j)].add(samples[p](i, j));
  }
  mean.resize(r, c);
  se.resize(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) {
      mean(i, j) = acc[static_cast<std::size_t>(i * c + j)].mean();
      se(i, j) = acc[static_cast<std::size_t>(i * c + j)].std_err();
    }
}

}  // namespace

AuxDynamics::AuxDynamics(const ModeSet& modes, const Vec2& y, double dt) : n_(modes.size()), dt_(dt), y_(y) {
  if (!(dt > 0)) throw std::invalid_argument("AuxDynamics: dt must be positive");
  if (n_ > kMaxModes) throw std::invalid_argument("AuxDynamics: at most 32 modes supported");
  for (std::size_t i = 0; i < n_; ++i) {
    const double a = modes[i].alpha.value(y);
    const double s = modes[i].sigma.value(y);
    k_.push_back(modes[i].k);
    alpha_.push_back(a);
    sigma_.push_back(s);
    decay_.push_back(std::exp(-a * dt));
    noise_.push_back(s * std::sqrt(-std::expm1(-2.0 * a * dt)));
    weight_.push_back(-std::expm1(-a * dt) / a);
  }
  delta_.resize(n_ * n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) delta_[i * n_ + j] = delta(k_[i], k_[j]);
}

double AuxDynamics::omega(const PhasePoint& s, std::size_t i) const {
  double w = 0.0;
  for (std::size_t j = 0; j < n_; ++j) w += delta_[i * n_ + j] * s.b[j];
  return w;
}

Vec2 AuxDynamics::frame_velocity(const PhasePoint& s) const {
  Vec2 w = Vec2::Zero();
  for (std::size_t i = 0; i < n_; ++i) w += perp(k_[i]) * s.b[i];
  return w;
}

int AuxDynamics::steps_for(double t) const { return checked_steps(t, dt_); }

void AuxDynamics::step(PhasePoint& s, RngStream& rng, double* xi) const {
  std::array<double, kMaxModes> theta;
  for (std::size_t i = 0; i < n_; ++i) theta[i] = dt_ * omega(s, i);
  for (std::size_t i = 0; i < n_; ++i) {
    const double c = std::cos(theta[i]), sn = std::sin(theta[i]);
    const double a = s.a[i] * c + s.b[i] * sn;
    const double b = -s.a[i] * sn + s.b[i] * c;
    const double za = rng.normal(), zb = rng.normal();
    if (xi) {
      xi[i] = za;
      xi[n_ + i] = zb;
    }
    s.a[i] = decay_[i] * a + noise_[i] * za;
    s.b[i] = decay_[i] * b + noise_[i] * zb;
  }
}

void AuxDynamics::step_tangent(PhasePoint& s, Eigen::MatrixXd& J, RngStream& rng, double* xi) const {
  const Eigen::Index n = static_cast<Eigen::Index>(n_);
  thread_local Eigen::MatrixXd old;
  thread_local Eigen::RowVectorXd coupling;
  old = J;
  std::array<double, kMaxModes> theta;
  for (std::size_t i = 0; i < n_; ++i) theta[i] = dt_ * omega(s, i);
  for (std::size_t i = 0; i < n_; ++i) {
    const Eigen::Index ia = static_cast<Eigen::Index>(i), ib = n + ia;
    const double c = std::cos(theta[i]), sn = std::sin(theta[i]);
    const double a = s.a[i] * c + s.b[i] * sn;
    const double b = -s.a[i] * sn + s.b[i] * c;
    // d theta_i / d b_j = dt delta(k_i, k_j)
    coupling.setZero(old.cols());
    for (std::size_t j = 0; j < n_; ++j) {
      const double d = delta_[i * n_ + j];
      if (d != 0.0) coupling += d * old.row(n + static_cast<Eigen::Index>(j));
    }
    coupling *= dt_;
    J.row(ia) = decay_[i] * (c * old.row(ia) + sn * old.row(ib) + b * coupling);
    J.row(ib) = decay_[i] * (-sn * old.row(ia) + c * old.row(ib) - a * coupling);
    const double za = rng.normal(), zb = rng.normal();
    if (xi) {
      xi[i] = za;
      xi[n_ + i] = zb;
    }
    s.a[i] = decay_[i] * a + noise_[i] * za;
    s.b[i] = decay_[i] * b + noise_[i] * zb;
  }
}

AuxState aux_step(const AuxState& s, double dt, const ModeSet& modes, RngStream& rng) {
  AuxDynamics dyn(modes, s.y, dt);
  AuxState out = s;
  dyn.step(out.amps, rng);
  return out;
}

MeanEstimate semigroup_estimate(const PhaseFunction& F, const PhasePoint& amps, const Vec2& y, double t,
                                std::size_t n, const ModeSet& modes, RngStream& rng, const SolverOptions& opt) {
  if (!(t >= 0)) throw std::invalid_argument("semigroup_estimate: t must be non-negative");
  MeanEstimate est;
  if (t == 0.0) {
    est.value = F(amps);
    est.n_samples = n;
    return est;
  }
  const AuxDynamics dyn(modes, y, fitted_dt(t, opt.dt));
  const int steps = dyn.steps_for(t);
  std::vector<double> values(n);
  parallel_for(n, opt.threads, [&](std::size_t p) {
    RngStream r = rng.split(p);
    PhasePoint s = amps;
    for (int k = 0; k < steps; ++k) dyn.step(s, r);
    values[p] = F(s);
  });
  Accumulator acc;
  for (double v : values) acc.add(v);
  est.value = acc.mean();
  est.std_err = acc.std_err();
  est.n_samples = n;
  return est;
}

double corrector_horizon(const ModeSet& modes, const Vec2& y, double tol) {
  if (!(tol > 0)) throw std::invalid_argument("corrector tolerance must be positive");
  double wnorm = 0.0;
  for (int q = 0; q < 2; ++q) {
    double s2 = 0.0;
    for (std::size_t i = 0; i < modes.size(); ++i) {
      const double kp = perp(modes[i].k)(q);
      const double s = modes[i].sigma.value(y);
      s2 += kp * kp * s * s;
    }
    wnorm = std::max(wnorm, std::sqrt(s2));
  }
  const double g = modes.gamma0();
  return std::max(std::log(wnorm / (g * tol)), std::log(1.0 / tol)) / g;
}

namespace detail {

Vec2 chi_path(const AuxDynamics& dyn, const PhasePoint& amps, int steps, RngStream& rng) {
  const std::size_t N = dyn.size();
  PhasePoint s = amps;
  Vec2 sum = Vec2::Zero();
  for (int k = 0; k < steps; ++k) {
    for (std::size_t i = 0; i < N; ++i) sum += perp(dyn.k()[i]) * (dyn.step_weight(i) * s.b[i]);
    dyn.step(s, rng);
  }
  return sum;
}

bool chi_gradient_path(const AuxDynamics& dyn, const PhasePoint& amps, int steps, RngStream& rng,
                       Eigen::MatrixXd& out) {
  const std::size_t N = dyn.size();
  const Eigen::Index n = static_cast<Eigen::Index>(N);
  PhasePoint s = amps;
  Eigen::MatrixXd J = Eigen::MatrixXd::Identity(2 * n, 2 * n);
  out.setZero(2, 2 * n);
  for (int k = 0; k < steps; ++k) {
    for (std::size_t i = 0; i < N; ++i) {
      const Vec2 c = perp(dyn.k()[i]) * dyn.step_weight(i);
      const auto row = J.row(n + static_cast<Eigen::Index>(i));
      out.row(0) += c(0) * row;
      out.row(1) += c(1) * row;
    }
    dyn.step_tangent(s, J, rng);
    if ((k & 63) == 63 && !(J.cwiseAbs().maxCoeff() < kJacobianLimit)) return false;
  }
  return out.allFinite();
}

Eigen::MatrixXd frame_velocity_gradient(const ModeSet& modes) {
  const Eigen::Index n = static_cast<Eigen::Index>(modes.size());
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2, 2 * n);
  for (Eigen::Index i = 0; i < n; ++i) g.col(n + i) = perp(modes[static_cast<std::size_t>(i)].k);
  return g;
}

}  // namespace detail

CorrectorEstimate corrector_chi(const PhasePoint& amps, const Vec2& y, double tol, std::size_t n,
                                const ModeSet& modes, RngStream& rng, const SolverOptions& opt) {
  CorrectorEstimate est;
  est.T_max = corrector_horizon(modes, y, tol);
  est.truncation = 2.0 * tol;
  const AuxDynamics dyn(modes, y, opt.dt);
  const int steps = dyn.steps_for(est.T_max);
  std::vector<Vec2> values(n);
  parallel_for(n, opt.threads, [&](std::size_t p) {
    RngStream r = rng.split(p);
    values[p] = detail::chi_path(dyn, amps, steps, r);
  });
  Accumulator acc[2];
  for (const Vec2& v : values)
    for (int q = 0; q < 2; ++q) acc[q].add(v(q));
  for (int q = 0; q < 2; ++q) {
    est.value(q) = acc[q].mean();
    est.std_err(q) = acc[q].std_err();
  }
  est.n_samples = n;
  est.warning = est.std_err.maxCoeff() > tol;
  return est;
}

ThetaEstimate corrector_theta(std::size_t mode, const PhaseFunction& F, const PhaseFunction& G,
                              const PhasePoint& amps, const Vec2& y, double tol, std::size_t n,
                              const ModeSet& modes, RngStream& rng, const SolverOptions& opt) {
  if (mode >= modes.size()) throw std::out_of_range("corrector_theta: mode index out of range");
  if (!(tol > 0)) throw std::invalid_argument("corrector_theta: tol must be positive");
  ThetaEstimate est;
  const AuxDynamics dyn(modes, y, opt.dt);
  const double alpha = dyn.alpha()[mode];
  est.T_max = std::log(1.0 / tol) / alpha;
  const int steps = dyn.steps_for(est.T_max);
  const double damp = std::exp(-alpha * opt.dt);
  const double w0 = dyn.step_weight(mode);
  std::vector<std::complex<double>> values(n);
  parallel_for(n, opt.threads, [&](std::size_t p) {
    RngStream r = rng.split(p);
    PhasePoint s = amps;
    std::complex<double> sum = 0.0;
    double phase = 0.0, weight = w0;
    for (int k = 0; k < steps; ++k) {
      sum += weight * std::polar(1.0, phase) * std::complex<double>(F(s), G(s));
      phase += opt.dt * dyn.omega(s, mode);
      weight *= damp;
      dyn.step(s, r);
    }
    values[p] = -sum;
  });
  Accumulator re, im;
  for (const auto& v : values) {
    re.add(v.real());
    im.add(v.imag());
  }
  est.theta1 = re.mean();
  est.theta2 = im.mean();
  est.se1 = re.std_err();
  est.se2 = im.std_err();
  est.n_samples = n;
  return est;
}

GradientEstimate grad_semigroup_variational(const PhaseGradientFunction& grad_f, const PhasePoint& amps,
                                            const Vec2& y, double t, std::size_t n, const ModeSet& modes,
                                            RngStream& rng, const SolverOptions& opt) {
  const AuxDynamics dyn(modes, y, fitted_dt(t, opt.dt));
  const int steps = dyn.steps_for(t);
  const Eigen::Index dim = 2 * static_cast<Eigen::Index>(modes.size());
  std::vector<Eigen::MatrixXd> samples(n);
  std::vector<char> ok(n, 1);
  parallel_for(n, opt.threads, [&](std::size_t p) {
    RngStream r = rng.split(p);
    PhasePoint s = amps;
    Eigen::MatrixXd J = Eigen::MatrixXd::Identity(dim, dim);
    for (int k = 0; k < steps; ++k) {
      dyn.step_tangent(s, J, r);
      if ((k & 63) == 63 && !(J.cwiseAbs().maxCoeff() < kJacobianLimit)) {
        ok[p] = 0;
        break;
      }
    }
    samples[p] = (grad_f(s).transpose() * J);
    if (!samples[p].allFinite()) ok[p] = 0;
  });
  GradientEstimate est;
  Eigen::MatrixXd mean, se;
  reduce(samples, ok, mean, se, est.n_samples);
  est.value = mean.row(0).transpose();
  est.std_err = se.row(0).transpose();
  est.n_flagged = n - est.n_samples;
  return est;
}

GradientEstimate grad_semigroup_bel(const PhaseFunction& f, const PhasePoint& amps, const Vec2& y, double t,
                                    std::size_t n, const ModeSet& modes, RngStream& rng,
                                    const SolverOptions& opt) {
  if (!(t > 0)) throw std::invalid_argument("grad_semigroup_bel: t must be positive");
  const AuxDynamics dyn(modes, y, fitted_dt(t, opt.dt));
  const int steps = dyn.steps_for(t);
  const std::size_t N = modes.size();
  const Eigen::Index dim = 2 * static_cast<Eigen::Index>(N);
  Eigen::VectorXd inv_scale(dim);
  for (std::size_t i = 0; i < N; ++i) {
    inv_scale(static_cast<Eigen::Index>(i)) = 1.0 / dyn.noise_scale(i);
    inv_scale(static_cast<Eigen::Index>(N + i)) = 1.0 / dyn.noise_scale(i);
  }
  std::vector<Eigen::MatrixXd> samples(n);
  std::vector<char> ok(n, 1);
  parallel_for(n, opt.threads, [&](std::size_t p) {
    RngStream r = rng.split(p);
    PhasePoint s = amps;
    Eigen::MatrixXd J = Eigen::MatrixXd::Identity(dim, dim);
    Eigen::VectorXd xi(dim), acc = Eigen::VectorXd::Zero(dim);
    for (int k = 0; k < steps; ++k) {
      dyn.step_tangent(s, J, r, xi.data());
      acc += J.transpose() * xi.cwiseProduct(inv_scale);
      if ((k & 63) == 63 && !(J.cwiseAbs().maxCoeff() < kJacobianLimit)) {
        ok[p] = 0;
        break;
      }
    }
    samples[p] = (f(s) / steps * acc).transpose();
    if (!samples[p].allFinite()) ok[p] = 0;
  });
  GradientEstimate est;
  Eigen::MatrixXd mean, se;
  reduce(samples, ok, mean, se, est.n_samples);
  est.value = mean.row(0).transpose();
  est.std_err = se.row(0).transpose();
  est.n_flagged = n - est.n_samples;
  return est;
}

CorrectorGradient grad_chi_variational(const PhasePoint& amps, const Vec2& y, double tol, std::size_t n,
                                       const ModeSet& modes, RngStream& rng, const SolverOptions& opt) {
  CorrectorGradient est;
  est.T_max = corrector_horizon(modes, y, tol);
  const AuxDynamics dyn(modes, y, opt.dt);
  const int steps = dyn.steps_for(est.T_max);
  std::vector<Eigen::MatrixXd> samples(n);
  std::vector<char> ok(n, 1);
  parallel_for(n, opt.threads, [&](std::size_t p) {
    RngStream r = rng.split(p);
    ok[p] = detail::chi_gradient_path(dyn, amps, steps, r, samples[p]) ? 1 : 0;
  });
  reduce(samples, ok, est.value, est.std_err, est.n_samples);
  est.n_flagged = n - est.n_samples;
  return est;
}

CorrectorGradient grad_chi_bel(const PhasePoint& amps, const Vec2& y, double tol, std::size_t n,
                               const ModeSet& modes, RngStream& rng, const SolverOptions& opt) {
  CorrectorGradient est;
  est.T_max = corrector_horizon(modes, y, tol);
  const AuxDynamics dyn(modes, y, opt.dt);
  const int steps = dyn.steps_for(est.T_max);
  const std::size_t N = modes.size();
  const Eigen::Index n2 = static_cast<Eigen::Index>(N);
  const Eigen::Index dim = 2 * n2;
  Eigen::VectorXd inv_scale(dim);
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(2, dim);  // rows: sum_i k_i^perp_q phi_i on b_i
  for (std::size_t i = 0; i < N; ++i) {
    const Eigen::Index ii = static_cast<Eigen::Index>(i);
    inv_scale(ii) = inv_scale(n2 + ii) = 1.0 / dyn.noise_scale(i);
    weights.col(n2 + ii) = perp(modes[i].k) * dyn.step_weight(i);
  }
  std::vector<Eigen::MatrixXd> samples(n);
  std::vector<char> ok(n, 1);
  parallel_for(n, opt.threads, [&](std::size_t p) {
    RngStream r = rng.split(p);
    PhasePoint s = amps;
    Eigen::MatrixXd J = Eigen::MatrixXd::Identity(dim, dim);
    Eigen::VectorXd xi(dim), acc = Eigen::VectorXd::Zero(dim), b(dim);
    Eigen::MatrixXd total = weights;  // t = 0 term, exact
    for (int k = 1; k < steps; ++k) {
      dyn.step_tangent(s, J, r, xi.data());
      acc += J.transpose() * xi.cwiseProduct(inv_scale);
      for (std::size_t i = 0; i < N; ++i) {
        b(static_cast<Eigen::Index>(i)) = 0.0;
        b(n2 + static_cast<Eigen::Index>(i)) = s.b[i];
      }
      // weights * b = estimator integrand at step k; times the BEL weight acc / k
      total += (weights * b) * (acc.transpose() / k);
      if ((k & 63) == 63 && !(J.cwiseAbs().maxCoeff() < kJacobianLimit)) {
        ok[p] = 0;
        break;
      }
    }
    samples[p] = total;
    if (!total.allFinite()) ok[p] = 0;
  });
  reduce(samples, ok, est.value, est.std_err, est.n_samples);
  est.n_flagged = n - est.n_samples;
  return est;
}

CorrectorYGradient grad_chi_y(const PhasePoint& amps, const Vec2& y, double h, double tol, std::size_t n,
                              const ModeSet& modes, RngStream& rng, const SolverOptions& opt) {
  if (!(h >= 1e-4 && h <= 1e-1)) throw std::invalid_argument("grad_chi_y: h must lie in [1e-4, 1e-1]");
  CorrectorYGradient est;
  est.h = h;
  const int steps = checked_steps(corrector_horizon(modes, y, tol), opt.dt);
  const AuxDynamics plus[2] = {AuxDynamics(modes, y + Vec2(h, 0), opt.dt), AuxDynamics(modes, y + Vec2(0, h), opt.dt)};
  const AuxDynamics minus[2] = {AuxDynamics(modes, y - Vec2(h, 0), opt.dt),
                                AuxDynamics(modes, y - Vec2(0, h), opt.dt)};
  std::vector<Mat2> values(n);
  parallel_for(n, opt.threads, [&](std::size_t p) {
    const RngStream base = rng.split(p);
    for (int j = 0; j < 2; ++j) {
      RngStream rp = base, rm = base;
      const Vec2 up = detail::chi_path(plus[j], amps, steps, rp);
      const Vec2 dn = detail::chi_path(minus[j], amps, steps, rm);
      values[p].col(j) = (up - dn) / (2.0 * h);
    }
  });
  Accumulator acc[2][2];
  for (const Mat2& v : values)
    for (int q = 0; q < 2; ++q)
      for (int j = 0; j < 2; ++j) acc[q][j].add(v(q, j));
  for (int q = 0; q < 2; ++q)
    for (int j = 0; j < 2; ++j) {
      est.value(q, j) = acc[q][j].mean();
      est.std_err(q, j) = acc[q][j].std_err();
    }
  est.n_samples = n;
  return est;
}

}  // namespace phom
