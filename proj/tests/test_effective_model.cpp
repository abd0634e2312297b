#include "doctest.h"

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "phom/effective_model.hpp"
#include "phom/galerkin.hpp"

using namespace phom;

namespace {

ModeSet one_mode(double alpha, double sigma) {
  return ModeSet({{{1, 0}, Profile::constant(alpha), Profile::constant(sigma)}}, 0.4, 0.4);
}

const oracle::Logistic kRate{0.7, 1.6, {1, 0.3}, 0.1};

ModeSet one_logistic() {
  return ModeSet({{{1, 0}, Profile::logistic(kRate.low, kRate.high, kRate.d, kRate.c), Profile::constant(1.0)}}, 0.5,
                 0.5);
}

ModeSet two_varying() {
  return ModeSet({{{1, 0}, Profile::logistic(0.7, 1.6, {1, 0.3}, 0.1), Profile::constant(1.0)},
                  {{1, 1}, Profile::gaussian_bump(1.2, -0.4, {0.2, -0.3}, 0.9), Profile::constant(0.8)}},
                 0.5, 0.5);
}

}  // namespace

TEST_CASE("effective: single-mode diffusivity closed form") {
  RngStream rng(Seed{1});
  const AEstimate A = estimate_A(one_mode(1.0, 1.0), Vec2::Zero(), 1000, rng);
  const Mat2 want = oracle::single_mode_A({1, 0}, 1.0, 1.0);
  CHECK(want.isApprox((Mat2() << 0, 0, 0, 2).finished()));
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      CHECK(std::abs(A.value(r, c) - want(r, c)) <= 3 * A.std_err(r, c) + A.truncation(r, c) + 1e-9);
  CHECK(A.value(0, 1) == A.value(1, 0));
  CHECK(A.projection < 1e-3 * A.value.trace());
}

TEST_CASE("effective: diffusivity scales with the amplitude variance") {
  RngStream r1(Seed{2}), r2(Seed{3});
  const AEstimate a1 = estimate_A(one_mode(1.3, 1.0), Vec2::Zero(), 1000, r1);
  const AEstimate a2 = estimate_A(one_mode(1.3, std::sqrt(2.0)), Vec2::Zero(), 1000, r2);
  const double se = std::hypot(2 * a1.std_err(1, 1), a2.std_err(1, 1));
  CHECK(std::abs(a2.value(1, 1) - 2 * a1.value(1, 1)) <= 3 * se + a2.truncation(1, 1) + 2 * a1.truncation(1, 1) + 1e-9);
  CHECK(a2.value(1, 1) == doctest::Approx(oracle::single_mode_A({1, 0}, 1.3, std::sqrt(2.0))(1, 1)).epsilon(1e-3));
}

TEST_CASE("effective: constant profiles have no drift") {
  RngStream rng(Seed{4});
  const BEstimate B = estimate_B(ModeSet::reference(), {0.3, -0.7}, 1000, rng);
  for (int q = 0; q < 2; ++q) CHECK(std::abs(B.value(q)) <= 3 * B.std_err(q) + 1e-12);
}

TEST_CASE("effective: single mode with a varying rate matches the closed-form drift") {
  const ModeSet modes = one_logistic();
  for (const Vec2& y : {Vec2(0.3, -0.2), Vec2(-0.5, 0.4)}) {
    RngStream rng(Seed{5});
    const BEstimate B = estimate_B(modes, y, 2000, rng);
    const Vec2 want = oracle::single_mode_B({1, 0}, kRate.value(y), kRate.gradient(y), 1.0);
    CAPTURE(y.transpose());
    for (int q = 0; q < 2; ++q) CHECK(std::abs(B.value(q) - want(q)) <= 3 * B.std_err(q) + 2e-3);
  }
}

TEST_CASE("effective: reflecting the profiles reflects the drift") {
  const ModeSet modes = two_varying();
  const Vec2 y(0.3, -0.2);
  RngStream r1(Seed{6}), r2(Seed{7});
  const BEstimate b = estimate_B(modes, y, 2000, r1);
  const BEstimate br = estimate_B(modes.reflected(), -y, 2000, r2);
  for (int q = 0; q < 2; ++q) CHECK(std::abs(b.value(q) + br.value(q)) <= 3 * std::hypot(b.std_err(q), br.std_err(q)));
}

TEST_CASE("effective: Monte Carlo agrees with the Galerkin oracle") {
  SUBCASE("reference set diffusivity") {
    const ModeSet modes = ModeSet::reference();
    RngStream rng(Seed{8});
    const AEstimate A = estimate_A(modes, Vec2::Zero(), 3000, rng);
    const GalerkinSystem s8(modes, Vec2::Zero(), 8), s6(modes, Vec2::Zero(), 6);
    const Mat2 g8 = galerkin_diffusivity(s8, galerkin_solve(s8));
    const Mat2 g6 = galerkin_diffusivity(s6, galerkin_solve(s6));
    const double slack = (g8 - g6).cwiseAbs().maxCoeff();
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) CHECK(std::abs(A.value(r, c) - g8(r, c)) <= 3 * A.std_err(r, c) + A.truncation(r, c) + slack);
    CHECK(A.value.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff() > 0);
  }
  SUBCASE("varying two-mode set") {
    const ModeSet modes = two_varying();
    const Vec2 y(0.3, -0.2);
    RngStream rng(Seed{9});
    const LocalEffective e = estimate_effective(modes, y, 2000, rng);
    const GalerkinSystem sys(modes, y, 8);
    const Mat2 gA = galerkin_diffusivity(sys, galerkin_solve(sys));
    const Vec2 gB = galerkin_drift(modes, y, 8);
    const double slack = (gB - galerkin_drift(modes, y, 6)).cwiseAbs().maxCoeff();
    for (int q = 0; q < 2; ++q) CHECK(std::abs(e.B.value(q) - gB(q)) <= 3 * e.B.std_err(q) + slack + 1e-3);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) CHECK(std::abs(e.A.value(r, c) - gA(r, c)) <= 3 * e.A.std_err(r, c) + e.A.truncation(r, c));
  }
}

TEST_CASE("effective: requires enough samples") {
  RngStream rng(Seed{10});
  CHECK_THROWS_AS(estimate_A(ModeSet::reference(), Vec2::Zero(), 999, rng), std::invalid_argument);
  CHECK_THROWS_AS(estimate_B(ModeSet::reference(), Vec2::Zero(), 10, rng), std::invalid_argument);
}

TEST_CASE("effective: PSD projection clips negative eigenvalues") {
  Mat2 A;
  A << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3, -1
  const double moved = project_psd(A);
  CHECK(moved == doctest::Approx(1.0));
  CHECK(A.isApprox(1.5 * (Mat2() << 1, 1, 1, 1).finished()));
  Mat2 B = Mat2::Identity();
  CHECK(project_psd(B) == 0.0);
}

TEST_CASE("effective: tabulated model interpolates bilinearly and clamps") {
  std::vector<Mat2> A;
  std::vector<Vec2> B;
  const std::vector<double> xs{0.0, 1.0, 3.0}, ys{-1.0, 1.0};
  for (double x : xs)
    for (double y : ys) {
      A.push_back(Mat2::Identity() * (1 + x + 2 * y));
      B.emplace_back(x - y, 3 * x);
    }
  const EffectiveModel m(xs, ys, A, B);
  CHECK(m.drift({2.0, 0.5}).isApprox(Vec2(1.5, 6.0)));
  CHECK(m.diffusivity({0.5, 0.0})(0, 0) == doctest::Approx(1.5));
  CHECK(m.drift({10.0, 5.0}).isApprox(Vec2(2.0, 9.0)));
  CHECK(m.diffusivity({-4.0, -4.0})(1, 1) == doctest::Approx(-1.0));
  CHECK(m.max_trace() == doctest::Approx(12.0));
  CHECK_THROWS_AS(EffectiveModel({0.0, 0.0}, {0.0}, {Mat2::Zero(), Mat2::Zero()}, {Vec2::Zero(), Vec2::Zero()}),
                  std::invalid_argument);
}

TEST_CASE("effective: tabulation is deterministic, matches the pointwise estimate and round-trips") {
  const ModeSet modes = ModeSet::reference();
  const EffectiveGrid grid{-1, 1, 0, 0, 2, 1};
  const EffectiveModel a = tabulate_effective(modes, grid, 1000, Seed{11});
  const EffectiveModel b = tabulate_effective(modes, grid, 1000, Seed{11}, {1e-3, 1e-2, 0.02, 2});
  REQUIRE(a.size() == 2);
  for (std::size_t p = 0; p < 2; ++p) {
    CHECK(a.A_at(p) == b.A_at(p));
    CHECK(a.B_at(p) == b.B_at(p));
  }
  RngStream r0 = RngStream(Seed{11}).split(0);
  const LocalEffective local = estimate_effective(modes, a.node(0), 1000, r0);
  CHECK(local.A.value == a.A_at(0));
  CHECK(local.B.value == a.B_at(0));
  // constant profiles: the two nodes agree statistically
  const auto& d = a.details;
  REQUIRE(d.size() == 2);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      CHECK(std::abs(d[0].A.value(r, c) - d[1].A.value(r, c)) <= 3 * std::hypot(d[0].A.std_err(r, c), d[1].A.std_err(r, c)));
  CHECK(a.min_eigenvalue() > 0);

  const EffectiveModel back = EffectiveModel::from_json(a.to_json());
  for (std::size_t p = 0; p < 2; ++p) {
    CHECK(back.A_at(p) == a.A_at(p));
    CHECK(back.B_at(p) == a.B_at(p));
  }
  CHECK(back.xs() == a.xs());
  std::ostringstream csv;
  a.write_csv(csv);
  CHECK(csv.str().rfind("y1,y2,B1,B2,A11,A12,A22,se_B1,se_B2,se_A11,se_A12,se_A22\n", 0) == 0);
}

TEST_CASE("effective: diffusivity varies smoothly and stably across a grid") {
  const ModeSet modes = one_logistic();
  const EffectiveGrid grid{-1, 1, 0, 0, 5, 1};
  const EffectiveModel lo = tabulate_effective(modes, grid, 1000, Seed{12});
  const EffectiveModel hi = tabulate_effective(modes, grid, 2000, Seed{13});
  const double h = 0.5;
  for (std::size_t p = 0; p + 1 < lo.size(); ++p) {
    const double dlo = (lo.A_at(p + 1)(1, 1) - lo.A_at(p)(1, 1)) / h;
    const double dhi = (hi.A_at(p + 1)(1, 1) - hi.A_at(p)(1, 1)) / h;
    CHECK(std::abs(dlo) < 10.0);
    const double se = std::hypot(lo.details[p].A.std_err(1, 1), lo.details[p + 1].A.std_err(1, 1)) / h;
    CHECK(std::abs(dlo - dhi) <= 3 * std::sqrt(1.5) * se + 1e-6);
  }
}
