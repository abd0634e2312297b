#pragma once

#include <array>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "phom/field_model.hpp"
#include "phom/rng.hpp"

namespace phom {

/// State of the auxiliary (Lagrangian frame) amplitude process at a frozen slow point y.
struct AuxState {
  PhasePoint amps;
  Vec2 y = Vec2::Zero();
};

/// Discretisation of the auxiliary dynamics at fixed y:
///
///   d a_i = (-alpha_i a_i + omega_i b_i) dt + sqrt(2 alpha_i) sigma_i dw,
///   d b_i = (-alpha_i b_i - omega_i a_i) dt + sqrt(2 alpha_i) sigma_i dw,
///   omega_i = sum_j delta(k_i, k_j) b_j = k_i . w(a).
///
/// One step rotates every (a_i, b_i) pair by omega_i dt (frozen at the step
/// start) and then applies the exact OU transition. The state vector used by
/// Jacobians is ordered (a_1..a_N, b_1..b_N). At most 32 modes.
class AuxDynamics {
 public:
  AuxDynamics(const ModeSet& modes, const Vec2& y, double dt);

  std::size_t size() const { return n_; }
  double dt() const { return dt_; }
  const Vec2& y() const { return y_; }
  const std::vector<double>& alpha() const { return alpha_; }
  const std::vector<double>& sigma() const { return sigma_; }
  const std::vector<Vec2>& k() const { return k_; }
  double delta_ij(std::size_t i, std::size_t j) const { return delta_[i * n_ + j]; }
  /// Per-step noise scale sigma_i sqrt(1 - exp(-2 alpha_i dt)).
  double noise_scale(std::size_t i) const { return noise_[i]; }
  /// (1 - exp(-alpha_i dt)) / alpha_i, the exact OU weight of one step in a time integral.
  double step_weight(std::size_t i) const { return weight_[i]; }

  double omega(const PhasePoint& s, std::size_t i) const;
  Vec2 frame_velocity(const PhasePoint& s) const;

  /// Advance s by one step with fresh normals; xi (if not null) receives the
  /// 2N normals used, a-channels first.
  void step(PhasePoint& s, RngStream& rng, double* xi = nullptr) const;

  /// Advance s and the tangent matrix J (2N rows) by one step.
  void step_tangent(PhasePoint& s, Eigen::MatrixXd& J, RngStream& rng, double* xi = nullptr) const;

  /// Number of steps covering [0, t] (t is rounded to the step grid).
  int steps_for(double t) const;

 private:
  std::size_t n_;
  double dt_;
  Vec2 y_;
  std::vector<Vec2> k_;
  std::vector<double> alpha_, sigma_, decay_, noise_, weight_, delta_;
};

/// Exponential-Euler step of the auxiliary SDE (dt <= 1e-2 by default).
AuxState aux_step(const AuxState& s, double dt, const ModeSet& modes, RngStream& rng);

/// Monte Carlo mean with standard error.
struct MeanEstimate {
  double value = 0.0;
  double std_err = 0.0;
  std::size_t n_samples = 0;
};

struct SolverOptions {
  double dt = 1e-2;  // aux step
  int threads = 1;
};

using PhaseFunction = std::function<double(const PhasePoint&)>;

/// P_t F(a) estimated from n independent auxiliary paths started at a.
MeanEstimate semigroup_estimate(const PhaseFunction& F, const PhasePoint& amps, const Vec2& y, double t,
                                std::size_t n, const ModeSet& modes, RngStream& rng, const SolverOptions& opt = {});

/// Corrector value in both directions at one phase point.
struct CorrectorEstimate {
  Vec2 value = Vec2::Zero();
  Vec2 std_err = Vec2::Zero();
  double T_max = 0.0;
  double truncation = 0.0;  // reported bound on the neglected tail
  std::size_t n_samples = 0;
  bool warning = false;     // std_err above the requested tolerance
};

/// Truncation horizon for the corrector time integral:
/// max(ln(|w|/(gamma0 tol)), ln(1/tol)) / gamma0 with |w| the L2(nu) norm of w_q.
double corrector_horizon(const ModeSet& modes, const Vec2& y, double tol);

/// chi_q(a; y) = int_0^inf P_t w_q(a) dt for q = 1, 2, estimated pathwise: each
/// path contributes sum_n sum_i k_i^perp_q phi_i b_i(t_n) with the exact OU
/// step weights phi_i, up to T_max.
CorrectorEstimate corrector_chi(const PhasePoint& amps, const Vec2& y, double tol, std::size_t n,
                                const ModeSet& modes, RngStream& rng, const SolverOptions& opt = {});

/// Solution of the damped complex cell problem
///   (L - alpha_i + i k_i.w) Psi = K,   K = F + i G,
/// i.e. Psi = Theta1 + i Theta2 of the coupled real system. Sampled from the
/// Feynman-Kac functional int_0^inf E[exp(-alpha_i t + i int_0^t k_i.w) K(a(t))] dt,
/// which represents -Psi.
struct ThetaEstimate {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double se1 = 0.0;
  double se2 = 0.0;
  double T_max = 0.0;
  std::size_t n_samples = 0;
};

ThetaEstimate corrector_theta(std::size_t mode, const PhaseFunction& F, const PhaseFunction& G,
                              const PhasePoint& amps, const Vec2& y, double tol, std::size_t n,
                              const ModeSet& modes, RngStream& rng, const SolverOptions& opt = {});

/// Gradient of a function of the phase point in the Jacobian ordering.
using PhaseGradientFunction = std::function<Eigen::VectorXd(const PhasePoint&)>;

/// Vector estimate (length 2N, a-components first) with per-entry standard errors.
struct GradientEstimate {
  Eigen::VectorXd value;
  Eigen::VectorXd std_err;
  std::size_t n_samples = 0;
  std::size_t n_flagged = 0;  // samples dropped by the Jacobian overflow guard
};

/// grad_a P_t f = E[grad f(a(t)) J(t)] with the pathwise Jacobian.
GradientEstimate grad_semigroup_variational(const PhaseGradientFunction& grad_f, const PhasePoint& amps,
                                            const Vec2& y, double t, std::size_t n, const ModeSet& modes,
                                            RngStream& rng, const SolverOptions& opt = {});

/// Bismut-Elworthy-Li estimator of grad_a P_t f, t > 0:
///   (1/m) E[f(a_m) sum_n <S^-1 J_{n+1}, xi_n>]   on the m-step chain.
GradientEstimate grad_semigroup_bel(const PhaseFunction& f, const PhasePoint& amps, const Vec2& y, double t,
                                    std::size_t n, const ModeSet& modes, RngStream& rng,
                                    const SolverOptions& opt = {});

/// grad_a chi_q for q = 1, 2 as rows of a 2 x 2N matrix.
struct CorrectorGradient {
  Eigen::MatrixXd value;    // 2 x 2N
  Eigen::MatrixXd std_err;  // 2 x 2N
  double T_max = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_flagged = 0;
};

/// Pathwise derivative of the corrector estimator (the exact derivative of
/// the estimator used by corrector_chi, propagated with the Jacobian).
CorrectorGradient grad_chi_variational(const PhasePoint& amps, const Vec2& y, double tol, std::size_t n,
                                       const ModeSet& modes, RngStream& rng, const SolverOptions& opt = {});

/// Time integral of BEL estimates of grad P_t w_q up to T_max, evaluated at
/// every step of one path with the same step weights as the variational
/// estimator (exact gradient at t = 0). Variance grows like 1/t near t = 0.
CorrectorGradient grad_chi_bel(const PhasePoint& amps, const Vec2& y, double tol, std::size_t n,
                               const ModeSet& modes, RngStream& rng, const SolverOptions& opt = {});

/// d chi_q / d y_j by central differences with common random numbers.
/// value(q, j); h in [1e-4, 1e-1].
struct CorrectorYGradient {
  Mat2 value = Mat2::Zero();
  Mat2 std_err = Mat2::Zero();
  double h = 0.0;
  std::size_t n_samples = 0;
};

CorrectorYGradient grad_chi_y(const PhasePoint& amps, const Vec2& y, double h, double tol, std::size_t n,
                              const ModeSet& modes, RngStream& rng, const SolverOptions& opt = {});

namespace detail {

/// Single-path building blocks shared with the effective-coefficient estimators.

/// Pathwise corrector sample (both directions) from a, using rng for the noise.
Vec2 chi_path(const AuxDynamics& dyn, const PhasePoint& amps, int steps, RngStream& rng);

/// Pathwise corrector gradient sample (2 x 2N); returns false if the Jacobian overflowed.
bool chi_gradient_path(const AuxDynamics& dyn, const PhasePoint& amps, int steps, RngStream& rng,
                       Eigen::MatrixXd& out);

/// Rows of grad w_q in Jacobian ordering (2 x 2N).
Eigen::MatrixXd frame_velocity_gradient(const ModeSet& modes);

}  // namespace detail

}  // namespace phom
