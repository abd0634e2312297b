#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "phom/field_model.hpp"
#include "phom/rng.hpp"

namespace phom {

/// Filter-bank representation of the two-sided stationary amplitude fields
///
///   a_i(t; y) = sqrt(2 alpha_i(y)) sigma_i(y) Z(alpha_i(y)),
///   Z(alpha)  = int_{-inf}^t exp(-alpha (t - s)) dw_{i,a}(s)
///
/// (and likewise for b_i). For every (mode, channel) pair the bank stores Z at
/// M Chebyshev-Lobatto nodes in [gamma0, 1/gamma0] together with the companion
/// Y(alpha) = int (t - s) exp(-alpha (t - s)) dw(s) = -dZ/dalpha, all driven by
/// one Brownian path. Values at arbitrary alpha come from barycentric
/// interpolation over the nodes, so the field can be queried at any
/// trajectory-dependent slow point y in O(M).
///
/// Updates are exact in law: the increments of (Z_m, Y_m) over a step are
/// drawn jointly from their Gaussian law through a low-rank eigenfactor of the
/// 2M x 2M increment covariance.
class CoefficientBank {
 public:
  /// Stationary warm start. Throws std::invalid_argument for M < 4 and
  /// std::runtime_error when the joint covariance is numerically indefinite.
  static CoefficientBank init_stationary(const ModeSet& modes, int num_nodes, RngStream& rng);
  /// All states zero at time t0 (used to drive the bank with a stored path).
  static CoefficientBank quiescent(const ModeSet& modes, int num_nodes, double t0 = 0.0);

  /// Advance fast time by dt. All nodes of one (mode, channel) pair share the
  /// Brownian increment; distinct pairs are independent.
  void step(double dt, RngStream& rng);

  /// Advance using prescribed Brownian increments dw (size 2N, a-channels
  /// first) with midpoint-weighted kernels. Matches a midpoint quadrature of
  /// the stochastic convolution on the same increments.
  void step_driven(double dt, std::span<const double> dw);

  /// Amplitudes a_i(t; y), b_i(t; y) and, if grads != nullptr, their
  /// y-gradients. Throws std::logic_error if some alpha_i(y) leaves the node
  /// interval.
  void eval(const ModeSet& modes, const Vec2& y, PhasePoint& amps, PhaseGradient* grads) const;
  std::pair<PhasePoint, PhaseGradient> eval(const ModeSet& modes, const Vec2& y) const;

  double time() const { return time_; }
  int num_nodes() const { return num_nodes_; }
  std::size_t num_modes() const { return num_modes_; }
  const std::vector<double>& alpha_nodes() const { return nodes_; }

  /// Raw node states; channel 0 is the a-channel, 1 the b-channel.
  double z(std::size_t mode, int channel, int node) const { return z_[index(mode, channel, node)]; }
  double y(std::size_t mode, int channel, int node) const { return y_[index(mode, channel, node)]; }

  /// Interpolated Z(alpha), Y(alpha) for one (mode, channel) pair.
  std::pair<double, double> interpolate(std::size_t mode, int channel, double alpha) const;

  /// Low-rank factor L (2M x r) with L L^T equal to the joint covariance of
  /// (Z_1..Z_M, Y_1..Y_M) increments over a step dt; dt = +inf gives the
  /// stationary covariance.
  static Eigen::MatrixXd increment_factor(const std::vector<double>& nodes, double dt);

 private:
  CoefficientBank(const ModeSet& modes, int num_nodes, double t0);
  std::size_t index(std::size_t mode, int channel, int node) const {
    return (mode * 2 + static_cast<std::size_t>(channel)) * static_cast<std::size_t>(num_nodes_) +
           static_cast<std::size_t>(node);
  }
  void barycentric_weights(double alpha, std::vector<double>& w) const;

  int num_nodes_;
  std::size_t num_modes_;
  double lo_, hi_;
  double time_;
  std::vector<double> nodes_;
  std::vector<double> bary_;
  std::vector<double> z_;
  std::vector<double> y_;

  double cached_dt_ = -1.0;
  Eigen::MatrixXd factor_;
  std::vector<double> decay_;
  mutable std::vector<double> scratch_;
};

}  // namespace phom
