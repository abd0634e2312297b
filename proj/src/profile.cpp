#include "phom/profile.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace phom {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

Profile Profile::constant(double value) { return {Kind::constant, value, 0.0, Vec2::Zero(), 0.0}; }

Profile Profile::logistic(double low, double high, const Vec2& direction, double center) {
  if (!(std::isfinite(low) && std::isfinite(high)) || !direction.allFinite())
    throw std::invalid_argument("logistic profile: non-finite parameter");
  return {Kind::logistic, low, high, direction, center};
}

Profile Profile::gaussian_bump(double base, double amplitude, const Vec2& center, double width) {
  if (!(width > 0)) throw std::invalid_argument("gaussian bump profile: width must be positive");
  return {Kind::gaussian_bump, base, amplitude, center, width};
}

Profile Profile::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string kind;
  in >> kind;
  std::vector<double> p;
  double v;
  while (in >> v) p.push_back(v);
  if (!in.eof()) throw std::invalid_argument("profile: cannot parse '" + std::string(text) + "'");
  if (kind == "const" || kind == "constant") {
    if (p.size() != 1) throw std::invalid_argument("profile const expects 1 value");
    return constant(p[0]);
  }
  if (kind == "logistic") {
    if (p.size() != 5) throw std::invalid_argument("profile logistic expects: low high dx dy center");
    return logistic(p[0], p[1], Vec2(p[2], p[3]), p[4]);
  }
  if (kind == "bump") {
    if (p.size() != 5) throw std::invalid_argument("profile bump expects: base amp cx cy width");
    return gaussian_bump(p[0], p[1], Vec2(p[2], p[3]), p[4]);
  }
  throw std::invalid_argument("profile: unknown kind '" + kind + "'");
}

double Profile::value(const Vec2& y) const {
  switch (kind_) {
    case Kind::constant:
      return p0_;
    case Kind::logistic:
      return p0_ + (p1_ - p0_) * sigmoid(v_.dot(y) - p2_);
    case Kind::gaussian_bump:
      return p0_ + p1_ * std::exp(-(y - v_).squaredNorm() / (2.0 * p2_ * p2_));
  }
  return 0.0;
}

Vec2 Profile::gradient(const Vec2& y) const {
  switch (kind_) {
    case Kind::constant:
      return Vec2::Zero();
    case Kind::logistic: {
      const double s = sigmoid(v_.dot(y) - p2_);
      return (p1_ - p0_) * s * (1.0 - s) * v_;
    }
    case Kind::gaussian_bump: {
      const Vec2 r = y - v_;
      const double w2 = p2_ * p2_;
      const double g = std::exp(-r.squaredNorm() / (2.0 * w2));
      return -p1_ * g / w2 * r;
    }
  }
  return Vec2::Zero();
}

Mat2 Profile::hessian(const Vec2& y) const {
  switch (kind_) {
    case Kind::constant:
      return Mat2::Zero();
    case Kind::logistic: {
      const double s = sigmoid(v_.dot(y) - p2_);
      return (p1_ - p0_) * s * (1.0 - s) * (1.0 - 2.0 * s) * (v_ * v_.transpose());
    }
    case Kind::gaussian_bump: {
      const Vec2 r = y - v_;
      const double w2 = p2_ * p2_;
      const double g = std::exp(-r.squaredNorm() / (2.0 * w2));
      return p1_ * g * (r * r.transpose() / (w2 * w2) - Mat2::Identity() / w2);
    }
  }
  return Mat2::Zero();
}

double Profile::lower_bound() const {
  switch (kind_) {
    case Kind::constant:
      return p0_;
    case Kind::logistic:
      return v_.isZero() ? value(Vec2::Zero()) : std::min(p0_, p1_);
    case Kind::gaussian_bump:
      return p0_ + std::min(0.0, p1_);
  }
  return 0.0;
}

double Profile::upper_bound() const {
  switch (kind_) {
    case Kind::constant:
      return p0_;
    case Kind::logistic:
      return v_.isZero() ? value(Vec2::Zero()) : std::max(p0_, p1_);
    case Kind::gaussian_bump:
      return p0_ + std::max(0.0, p1_);
  }
  return 0.0;
}

Profile Profile::reflected() const {
  switch (kind_) {
    case Kind::constant:
      return *this;
    case Kind::logistic:
      return logistic(p0_, p1_, -v_, p2_);
    case Kind::gaussian_bump:
      return gaussian_bump(p0_, p1_, -v_, p2_);
  }
  return *this;
}

std::string Profile::describe() const {
  std::ostringstream out;
  out << std::setprecision(17);
  switch (kind_) {
    case Kind::constant:
      out << "const " << p0_;
      break;
    case Kind::logistic:
      out << "logistic " << p0_ << ' ' << p1_ << ' ' << v_.x() << ' ' << v_.y() << ' ' << p2_;
      break;
    case Kind::gaussian_bump:
      out << "bump " << p0_ << ' ' << p1_ << ' ' << v_.x() << ' ' << v_.y() << ' ' << p2_;
      break;
  }
  return out.str();
}

}  // namespace phom
