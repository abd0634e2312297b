#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "phom/profile.hpp"
#include "phom/rng.hpp"

namespace phom {

/// One Fourier mode of the stream function: wavevector plus the slow-variable
/// profiles of its relaxation rate alpha and its amplitude sigma.
struct Mode {
  Vec2 k;
  Profile alpha;
  Profile sigma;
};

/// The finite set of modes defining the quasi-periodic field, together with
/// the global bounds gamma0 <= alpha_i <= 1/gamma0, sigma_* <= sigma_i <= 1/sigma_*.
class ModeSet {
 public:
  /// Throws std::invalid_argument when a bound or the distinct/nonzero
  /// wavevector requirement is violated.
  ModeSet(std::vector<Mode> modes, double gamma0, double sigma_star);

  /// N = 3 modes k = (1,0), (0,1), (1,1) with alpha = sigma = 1,
  /// gamma0 = sigma_star = 0.5.
  static ModeSet reference();

  std::size_t size() const { return modes_.size(); }
  const Mode& operator[](std::size_t i) const { return modes_[i]; }
  const std::vector<Mode>& modes() const { return modes_; }
  double gamma0() const { return gamma0_; }
  double sigma_star() const { return sigma_star_; }

  bool has_constant_profiles() const;
  double max_wavenumber() const;

  /// Same wavevectors with every profile reflected, y -> f(-y).
  ModeSet reflected() const;
  /// Same set with alpha_i replaced.
  ModeSet with_alpha(std::size_t i, const Profile& alpha) const;

  /// Canonical text form and its 64-bit FNV-1a hash (hex).
  std::string canonical() const;
  std::string fingerprint() const;

 private:
  std::vector<Mode> modes_;
  double gamma0_;
  double sigma_star_;
};

/// Mode amplitudes (a_i, b_i), i = 1..N.
struct PhasePoint {
  std::vector<double> a;
  std::vector<double> b;

  PhasePoint() = default;
  explicit PhasePoint(std::size_t n) : a(n, 0.0), b(n, 0.0) {}
  std::size_t size() const { return a.size(); }
};

/// y-gradients of the amplitudes: a[i] = (d a_i/d y_1, d a_i/d y_2).
struct PhaseGradient {
  std::vector<Vec2> a;
  std::vector<Vec2> b;

  PhaseGradient() = default;
  explicit PhaseGradient(std::size_t n) : a(n, Vec2::Zero()), b(n, Vec2::Zero()) {}
  std::size_t size() const { return a.size(); }
};

/// alpha_i(y), sigma_i(y) and their gradients evaluated at one slow point.
struct LocalCoefficients {
  std::vector<double> alpha;
  std::vector<double> sigma;
  std::vector<Vec2> dalpha;
  std::vector<Vec2> dsigma;
};

LocalCoefficients local_coefficients(const ModeSet& modes, const Vec2& y);

/// delta(k, l) = k . l^perp = k_1 l_2 - k_2 l_1.
inline double delta(const Vec2& k, const Vec2& l) { return k.x() * l.y() - k.y() * l.x(); }

/// Draw from the product Gaussian invariant measure nu_*^y.
PhasePoint sample_invariant(const ModeSet& modes, const Vec2& y, RngStream& rng);

/// Exact Ornstein-Uhlenbeck transition of every amplitude over dt at fixed y.
PhasePoint ou_exact_step(const PhasePoint& state, const Vec2& y, double dt, const ModeSet& modes,
                         RngStream& rng);

/// The shift group tau_x acting on amplitudes (rotation of each (a_i, b_i) by k_i . x).
PhasePoint rotate(const PhasePoint& amps, const Vec2& x, const ModeSet& modes);

/// Stream function H = sum_i a_i cos(k_i.x) + b_i sin(k_i.x).
double eval_H(const PhasePoint& amps, const Vec2& x, const ModeSet& modes);

/// Fast velocity W = sum_i k_i^perp (-a_i sin(k_i.x) + b_i cos(k_i.x)).
Vec2 eval_W(const PhasePoint& amps, const Vec2& x, const ModeSet& modes);

/// Slow correction U = sum_i a_{i,y}^perp cos(k_i.x) + b_{i,y}^perp sin(k_i.x),
/// with the perpendicular gradient (d_2, -d_1).
Vec2 eval_U(const PhaseGradient& grads, const Vec2& x, const ModeSet& modes);

/// V = W + eps U.
Vec2 eval_V(const PhasePoint& amps, const PhaseGradient& grads, const Vec2& x, double eps,
            const ModeSet& modes);

/// The frame velocity w(a) = sum_i k_i^perp b_i, so that W(a, x) = w(tau_x a).
Vec2 frame_velocity(const PhasePoint& amps, const ModeSet& modes);

}  // namespace phom
