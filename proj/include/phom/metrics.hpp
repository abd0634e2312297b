#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "phom/profile.hpp"
#include "phom/rng.hpp"

namespace phom {

struct ValueWithSE {
  double value = 0.0;
  double std_err = 0.0;
};

/// Exact W1 between two empirical laws on R (sample sizes may differ).
double wasserstein1(std::vector<double> a, std::vector<double> b);

/// Average of the 1-d W1 distances over `projections` equi-angular
/// directions theta_k = pi k / projections.
double sliced_wasserstein1(const std::vector<Vec2>& a, const std::vector<Vec2>& b, int projections = 32);

/// Bootstrap standard error of stat(a, b): both samples are resampled with
/// replacement `resamples` times from RngStream(seed).
ValueWithSE bootstrap_two_sample(const std::vector<double>& a, const std::vector<double>& b,
                                 const std::function<double(const std::vector<double>&, const std::vector<double>&)>& stat,
                                 int resamples, Seed seed);
ValueWithSE bootstrap_two_sample(const std::vector<Vec2>& a, const std::vector<Vec2>& b,
                                 const std::function<double(const std::vector<Vec2>&, const std::vector<Vec2>&)>& stat,
                                 int resamples, Seed seed);

struct MomentSummary {
  std::size_t n = 0;
  Vec2 mean = Vec2::Zero();
  Vec2 mean_se = Vec2::Zero();
  Mat2 cov = Mat2::Zero();     // unbiased sample covariance
  Mat2 cov_se = Mat2::Zero();  // delta-method SE of each entry
};

MomentSummary moments(const std::vector<Vec2>& xs);

struct ScalarSummary {
  std::size_t n = 0;
  double mean = 0.0, std_err = 0.0;
  double median = 0.0, q10 = 0.0, q90 = 0.0, max = 0.0;
};

ScalarSummary summarize(std::vector<double> xs);

/// Relative Frobenius error |M - ref| / |ref|.
double relative_error(const Mat2& M, const Mat2& ref);

/// Indices of `count` macro times spread evenly over (0, T]; always includes the last index.
std::vector<std::size_t> curve_indices(std::size_t n_times, int count = 8);

}  // namespace phom
