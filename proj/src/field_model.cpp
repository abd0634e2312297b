#include "phom/field_model.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace phom {

ModeSet::ModeSet(std::vector<Mode> modes, double gamma0, double sigma_star)
    : modes_(std::move(modes)), gamma0_(gamma0), sigma_star_(sigma_star) {
  if (modes_.empty()) throw std::invalid_argument("ModeSet: at least one mode required");
  if (!(gamma0 > 0 && gamma0 < 1)) throw std::invalid_argument("ModeSet: gamma0 must lie in (0,1)");
  if (!(sigma_star > 0 && sigma_star < 1))
    throw std::invalid_argument("ModeSet: sigma_star must lie in (0,1)");
  constexpr double slack = 1e-12;
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    const Mode& m = modes_[i];
    if (!m.k.allFinite() || m.k.isZero(0.0))
      throw std::invalid_argument("ModeSet: wavevector " + std::to_string(i) + " is zero or non-finite");
    for (std::size_t j = 0; j < i; ++j)
      if ((modes_[j].k - m.k).isZero(0.0))
        throw std::invalid_argument("ModeSet: wavevectors must be distinct");
    if (m.alpha.lower_bound() < gamma0 - slack || m.alpha.upper_bound() > 1.0 / gamma0 + slack)
      throw std::invalid_argument("ModeSet: alpha profile of mode " + std::to_string(i) +
                                  " leaves [gamma0, 1/gamma0]");
    if (m.sigma.lower_bound() < sigma_star - slack || m.sigma.upper_bound() > 1.0 / sigma_star + slack)
      throw std::invalid_argument("ModeSet: sigma profile of mode " + std::to_string(i) +
                                  " leaves [sigma_star, 1/sigma_star]");
  }
}

ModeSet ModeSet::reference() {
  std::vector<Mode> modes;
  for (const Vec2& k : {Vec2(1, 0), Vec2(0, 1), Vec2(1, 1)})
    modes.push_back({k, Profile::constant(1.0), Profile::constant(1.0)});
  return ModeSet(std::move(modes), 0.5, 0.5);
}

bool ModeSet::has_constant_profiles() const {
  for (const Mode& m : modes_)
    if (!m.alpha.is_constant() || !m.sigma.is_constant()) return false;
  return true;
}

double ModeSet::max_wavenumber() const {
  double kmax = 0.0;
  for (const Mode& m : modes_) kmax = std::max(kmax, m.k.norm());
  return kmax;
}

ModeSet ModeSet::reflected() const {
  std::vector<Mode> out;
  for (const Mode& m : modes_) out.push_back({m.k, m.alpha.reflected(), m.sigma.reflected()});
  return ModeSet(std::move(out), gamma0_, sigma_star_);
}

ModeSet ModeSet::with_alpha(std::size_t i, const Profile& alpha) const {
  std::vector<Mode> out = modes_;
  out.at(i).alpha = alpha;
  return ModeSet(std::move(out), gamma0_, sigma_star_);
}

std::string ModeSet::canonical() const {
  std::ostringstream out;
  out.precision(17);
  out << "gamma0=" << gamma0_ << ";sigma_star=" << sigma_star_;
  for (const Mode& m : modes_)
    out << ";k=" << m.k.x() << ',' << m.k.y() << ";alpha=" << m.alpha.describe()
        << ";sigma=" << m.sigma.describe();
  return out.str();
}

std::string ModeSet::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

LocalCoefficients local_coefficients(const ModeSet& modes, const Vec2& y) {
  LocalCoefficients c;
  const std::size_t n = modes.size();
  c.alpha.resize(n);
  c.sigma.resize(n);
  c.dalpha.resize(n);
  c.dsigma.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    c.alpha[i] = modes[i].alpha.value(y);
    c.sigma[i] = modes[i].sigma.value(y);
    c.dalpha[i] = modes[i].alpha.gradient(y);
    c.dsigma[i] = modes[i].sigma.gradient(y);
  }
  return c;
}

PhasePoint sample_invariant(const ModeSet& modes, const Vec2& y, RngStream& rng) {
  PhasePoint p(modes.size());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const double s = modes[i].sigma.value(y);
    p.a[i] = s * rng.normal();
    p.b[i] = s * rng.normal();
  }
  return p;
}

PhasePoint ou_exact_step(const PhasePoint& state, const Vec2& y, double dt, const ModeSet& modes,
                         RngStream& rng) {
  if (!(dt >= 0)) throw std::invalid_argument("ou_exact_step: dt must be non-negative");
  PhasePoint out(state.size());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const double alpha = modes[i].alpha.value(y);
    const double sigma = modes[i].sigma.value(y);
    const double decay = std::exp(-alpha * dt);
    const double sd = sigma * std::sqrt(-std::expm1(-2.0 * alpha * dt));
    out.a[i] = decay * state.a[i] + sd * rng.normal();
    out.b[i] = decay * state.b[i] + sd * rng.normal();
  }
  return out;
}

PhasePoint rotate(const PhasePoint& amps, const Vec2& x, const ModeSet& modes) {
  PhasePoint out(amps.size());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const double phase = modes[i].k.dot(x);
    const double c = std::cos(phase), s = std::sin(phase);
    out.a[i] = amps.a[i] * c + amps.b[i] * s;
    out.b[i] = -amps.a[i] * s + amps.b[i] * c;
  }
  return out;
}

double eval_H(const PhasePoint& amps, const Vec2& x, const ModeSet& modes) {
  double h = 0.0;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const double phase = modes[i].k.dot(x);
    h += amps.a[i] * std::cos(phase) + amps.b[i] * std::sin(phase);
  }
  return h;
}

Vec2 eval_W(const PhasePoint& amps, const Vec2& x, const ModeSet& modes) {
  Vec2 w = Vec2::Zero();
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const double phase = modes[i].k.dot(x);
    w += perp(modes[i].k) * (-amps.a[i] * std::sin(phase) + amps.b[i] * std::cos(phase));
  }
  return w;
}

Vec2 eval_U(const PhaseGradient& grads, const Vec2& x, const ModeSet& modes) {
  Vec2 u = Vec2::Zero();
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const double phase = modes[i].k.dot(x);
    u += perp(grads.a[i]) * std::cos(phase) + perp(grads.b[i]) * std::sin(phase);
  }
  return u;
}

Vec2 eval_V(const PhasePoint& amps, const PhaseGradient& grads, const Vec2& x, double eps,
            const ModeSet& modes) {
  return eval_W(amps, x, modes) + eps * eval_U(grads, x, modes);
}

Vec2 frame_velocity(const PhasePoint& amps, const ModeSet& modes) {
  Vec2 w = Vec2::Zero();
  for (std::size_t i = 0; i < modes.size(); ++i) w += perp(modes[i].k) * amps.b[i];
  return w;
}

}  // namespace phom
