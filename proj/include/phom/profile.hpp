#pragma once

#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace phom {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Rotation by -90 degrees: k^perp = (k_2, -k_1).
inline Vec2 perp(const Vec2& k) { return {k.y(), -k.x()}; }

/// Smooth scalar coefficient profile y -> f(y) on R^2 with analytic first and
/// second derivatives.
///
/// Three families are provided:
///   constant        f(y) = c
///   logistic        f(y) = low + (high - low) * s(d . y - c), s the logistic sigmoid
///   gaussian bump   f(y) = base + amp * exp(-|y - center|^2 / (2 w^2))
///
/// Text form (used by config files): "const 1.0", "logistic 0.5 2.0 1 0 0"
/// (low high dx dy center), "bump 1.0 0.3 0 0 0.5" (base amp cx cy width).
class Profile {
 public:
  enum class Kind { constant, logistic, gaussian_bump };

  Profile() : Profile(constant(1.0)) {}

  static Profile constant(double value);
  static Profile logistic(double low, double high, const Vec2& direction, double center);
  static Profile gaussian_bump(double base, double amplitude, const Vec2& center, double width);
  static Profile parse(std::string_view text);

  double value(const Vec2& y) const;
  Vec2 gradient(const Vec2& y) const;
  Mat2 hessian(const Vec2& y) const;

  /// Bounds of f over all of R^2.
  double lower_bound() const;
  double upper_bound() const;

  bool is_constant() const { return kind_ == Kind::constant; }
  Kind kind() const { return kind_; }

  /// Profile of y -> f(-y).
  Profile reflected() const;

  std::string describe() const;

 private:
  Profile(Kind kind, double p0, double p1, const Vec2& v, double p2)
      : kind_(kind), p0_(p0), p1_(p1), v_(v), p2_(p2) {}

  Kind kind_;
  double p0_;  // constant value / low / base
  double p1_;  // high / amplitude
  Vec2 v_;     // logistic direction / bump center
  double p2_;  // logistic center offset / bump width
};

}  // namespace phom
