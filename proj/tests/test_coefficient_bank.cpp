#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "phom/coefficient_bank.hpp"

using namespace phom;

namespace {

ModeSet unit_alpha() { return ModeSet({{{1, 0}, Profile::constant(1.0), Profile::constant(1.0)}}, 0.5, 0.5); }

ModeSet two_constant() {
  return ModeSet({{{1, 0}, Profile::constant(1.0), Profile::constant(1.0)},
                  {{0, 1}, Profile::constant(1.5), Profile::constant(0.8)}},
                 0.5, 0.5);
}

ModeSet varying() {
  std::vector<Mode> m;
  m.push_back({{1, 0}, Profile::logistic(0.6, 1.8, {1, 0.5}, 0.2), Profile::gaussian_bump(1.0, 0.4, {0.3, -0.2}, 0.8)});
  m.push_back({{0, 1}, Profile::gaussian_bump(1.2, -0.5, {-0.5, 0.5}, 1.1), Profile::logistic(0.7, 1.5, {0, 1}, -0.3)});
  return ModeSet(std::move(m), 0.5, 0.5);
}

// reference amplitude and gradient of one (mode, channel) from the stored path
struct Reference {
  double value;
  Vec2 grad;
};

Reference reference_amplitude(const Mode& mode, const Vec2& y, const oracle::ConvolutionPath& path) {
  const double al = mode.alpha.value(y), s = mode.sigma.value(y);
  const Vec2 dal = mode.alpha.gradient(y), ds = mode.sigma.gradient(y);
  const auto [z, yy] = path.convolve(al);
  const double r = std::sqrt(2 * al);
  const Vec2 gamma = ds + dal * s / (2 * al);
  return {r * s * z, r * gamma * z - r * s * dal * yy};
}

struct DrivenRun {
  double max_rel = 0.0;
  double max_grad_rel = 0.0;
};

// Drive a quiescent bank from t = -40 with stored increments and compare with
// direct quadrature at 20 random (t, y).
DrivenRun run_against_quadrature(const ModeSet& modes, int nodes, std::uint64_t seed) {
  const double t0 = -40.0, dt = 1e-3, T = 2.0;
  const std::size_t steps = static_cast<std::size_t>(std::lround((T - t0) / dt));
  const std::size_t n = modes.size();
  RngStream rng(Seed{seed});
  std::vector<std::vector<double>> dw(2 * n, std::vector<double>(steps));
  for (auto& ch : dw)
    for (auto& w : ch) w = std::sqrt(dt) * rng.normal();
  std::vector<std::size_t> stops;
  for (int q = 0; q < 20; ++q) stops.push_back(steps - 1 - static_cast<std::size_t>(rng.uniform() * 1900));
  std::sort(stops.begin(), stops.end());

  DrivenRun run;
  CoefficientBank bank = CoefficientBank::quiescent(modes, nodes, t0);
  std::vector<double> inc(2 * n);
  std::size_t k = 0;
  for (std::size_t stop : stops) {
    for (; k <= stop; ++k) {
      for (std::size_t c = 0; c < 2 * n; ++c) inc[c] = dw[c][k];
      bank.step_driven(dt, inc);
    }
    const Vec2 y(1.5 * rng.normal(), 1.5 * rng.normal());
    PhasePoint amps;
    PhaseGradient grads;
    bank.eval(modes, y, amps, &grads);
    double num = 0, den = 0, gnum = 0, gden = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (int ch = 0; ch < 2; ++ch) {
        oracle::ConvolutionPath p{t0, dt, std::vector<double>(dw[ch * n + i].begin(), dw[ch * n + i].begin() + k)};
        const Reference ref = reference_amplitude(modes[i], y, p);
        const double v = ch == 0 ? amps.a[i] : amps.b[i];
        const Vec2 g = ch == 0 ? grads.a[i] : grads.b[i];
        num += (v - ref.value) * (v - ref.value);
        den += ref.value * ref.value;
        gnum += (g - ref.grad).squaredNorm();
        gden += ref.grad.squaredNorm();
      }
    }
    run.max_rel = std::max(run.max_rel, std::sqrt(num / den));
    run.max_grad_rel = std::max(run.max_grad_rel, std::sqrt(gnum / gden));
  }
  return run;
}

}  // namespace

TEST_CASE("bank: rejects fewer than four nodes") {
  RngStream rng(Seed{1});
  CHECK_THROWS_AS(CoefficientBank::init_stationary(unit_alpha(), 3, rng), std::invalid_argument);
}

TEST_CASE("bank: stationary initialisation has the kernel covariances") {
  const ModeSet modes = two_constant();
  RngStream rng(Seed{2});
  oracle::Moments vz, zy, vy, cross;
  const int n = 100000;
  for (int s = 0; s < n; ++s) {
    const CoefficientBank bank = CoefficientBank::init_stationary(modes, 9, rng);
    const auto [z, y] = bank.interpolate(0, 0, 1.0);
    const auto [z2, y2] = bank.interpolate(1, 1, 1.0);
    vz.add(z * z);
    zy.add(z * y);
    vy.add(y * y);
    cross.add(z * z2);
  }
  CHECK(std::abs(vz.mean - 0.5) < 3 * vz.se());
  CHECK(std::abs(zy.mean - 0.25) < 3 * zy.se());
  CHECK(std::abs(vy.mean - 0.25) < 3 * vy.se());
  CHECK(std::abs(cross.mean) < 3 * cross.se());
}

TEST_CASE("bank: stepping preserves stationarity and couples close nodes") {
  const ModeSet modes = unit_alpha();
  RngStream rng(Seed{3});
  oracle::Moments v_lo, v_hi, c, v1, v2;
  const int n = 3000;
  for (int s = 0; s < n; ++s) {
    CoefficientBank bank = CoefficientBank::init_stationary(modes, 9, rng);
    for (int k = 0; k < 1000; ++k) bank.step(0.01, rng);
    const double lo = bank.z(0, 0, 8), hi = bank.z(0, 0, 0);
    v_lo.add(lo * lo);
    v_hi.add(hi * hi);
    const double a = bank.interpolate(0, 1, 1.0).first, b = bank.interpolate(0, 1, 1.01).first;
    c.add(a * b);
    v1.add(a * a);
    v2.add(b * b);
  }
  CHECK(std::abs(v_lo.mean - 1.0 / (2 * 0.5)) < 3 * v_lo.se());
  CHECK(std::abs(v_hi.mean - 1.0 / (2 * 2.0)) < 3 * v_hi.se());
  CHECK(c.mean / std::sqrt(v1.mean * v2.mean) >= 0.999);
}

TEST_CASE("bank: halving the step leaves the law unchanged") {
  const ModeSet modes = unit_alpha();
  RngStream rng(Seed{4});
  oracle::Moments coarse, fine;
  for (int s = 0; s < 40000; ++s) {
    CoefficientBank b1 = CoefficientBank::quiescent(modes, 6);
    CoefficientBank b2 = CoefficientBank::quiescent(modes, 6);
    b1.step(0.4, rng);
    b2.step(0.2, rng);
    b2.step(0.2, rng);
    coarse.add(b1.interpolate(0, 0, 1.3).second);
    fine.add(b2.interpolate(0, 0, 1.3).second);
  }
  const double se = std::hypot(coarse.var(), fine.var()) * std::sqrt(2.0 / coarse.n);
  CHECK(std::abs(coarse.var() - fine.var()) < 3 * se);
  CHECK(std::abs(coarse.mean - fine.mean) < 3 * std::hypot(coarse.se(), fine.se()));
}

TEST_CASE("bank: direct quadrature of the stochastic convolution") {
  const DrivenRun run = run_against_quadrature(varying(), 33, 5);
  CHECK(run.max_rel <= 1e-3);
  CHECK(run.max_grad_rel <= 1e-3);
}

TEST_CASE("bank: interpolation error falls at least fourfold when nodes double") {
  const double e5 = run_against_quadrature(varying(), 5, 6).max_rel;
  const double e10 = run_against_quadrature(varying(), 10, 6).max_rel;
  CHECK(e10 * 4 <= e5);
}

TEST_CASE("bank: y-gradient is the derivative of the evaluation") {
  const ModeSet modes = varying();
  RngStream rng(Seed{7});
  CoefficientBank bank = CoefficientBank::init_stationary(modes, 33, rng);
  for (int k = 0; k < 50; ++k) bank.step(0.05, rng);
  const Vec2 y(0.2, -0.4);
  const auto [amps, grads] = bank.eval(modes, y);
  double err[3];
  const double hs[3] = {0.08, 0.04, 0.02};
  for (int l = 0; l < 3; ++l) {
    double e = 0;
    for (int j = 0; j < 2; ++j) {
      const Vec2 d = Vec2::Unit(j) * hs[l];
      const auto [p, pg] = bank.eval(modes, y + d);
      const auto [m, mg] = bank.eval(modes, y - d);
      for (std::size_t i = 0; i < modes.size(); ++i) {
        e = std::max(e, std::abs((p.a[i] - m.a[i]) / (2 * hs[l]) - grads.a[i](j)));
        e = std::max(e, std::abs((p.b[i] - m.b[i]) / (2 * hs[l]) - grads.b[i](j)));
      }
    }
    err[l] = e;
  }
  const double slope1 = std::log2(err[0] / err[1]), slope2 = std::log2(err[1] / err[2]);
  CHECK(slope1 == doctest::Approx(2.0).epsilon(0.1));
  CHECK(slope2 == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("bank: constant profiles give zero gradients and the invariant law") {
  const ModeSet modes = two_constant();
  RngStream rng(Seed{8});
  oracle::Moments va, vb;
  for (int s = 0; s < 20000; ++s) {
    CoefficientBank bank = CoefficientBank::init_stationary(modes, 8, rng);
    bank.step(0.3, rng);
    const auto [amps, grads] = bank.eval(modes, {0.7, 0.1});
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(grads.a[i].isZero(0.0));
      CHECK(grads.b[i].isZero(0.0));
    }
    va.add(amps.a[0] * amps.a[0]);
    vb.add(amps.b[1] * amps.b[1]);
  }
  CHECK(std::abs(va.mean - 1.0) < 3 * va.se());
  CHECK(std::abs(vb.mean - 0.64) < 3 * vb.se());
}

TEST_CASE("bank: marginal law and autocovariance at a varying slow point") {
  const ModeSet modes = varying();
  const Vec2 y(0.5, 0.3);
  const double s0 = modes[0].sigma.value(y), a0 = modes[0].alpha.value(y);
  RngStream rng(Seed{9});
  oracle::Moments var, cov;
  const double lag = 0.6;
  for (int s = 0; s < 20000; ++s) {
    CoefficientBank bank = CoefficientBank::init_stationary(modes, 17, rng);
    const double x0 = bank.eval(modes, y).first.a[0];
    bank.step(lag, rng);
    const double x1 = bank.eval(modes, y).first.a[0];
    var.add(x0 * x0);
    cov.add(x0 * x1);
  }
  CHECK(std::abs(var.mean - s0 * s0) < 3 * var.se());
  CHECK(std::abs(cov.mean - s0 * s0 * std::exp(-a0 * lag)) < 3 * cov.se());
}
