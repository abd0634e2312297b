#include "phom/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace phom {

double wasserstein1(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein1: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  if (a.size() == b.size()) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / na;
  }
  // integrate |Qa(u) - Qb(u)| over the merged quantile breakpoints
  std::size_t i = 0, j = 0;
  double u = 0.0, s = 0.0;
  while (i < a.size() && j < b.size()) {
    const double ua = (i + 1) / na, ub = (j + 1) / nb;
    const double next = std::min(ua, ub);
    s += (next - u) * std::abs(a[i] - b[j]);
    u = next;
    if (ua <= next) ++i;
    if (ub <= next) ++j;
  }
  return s;
}

double sliced_wasserstein1(const std::vector<Vec2>& a, const std::vector<Vec2>& b, int projections) {
  if (projections < 1) throw std::invalid_argument("sliced_wasserstein1: projections must be >= 1");
  std::vector<double> pa(a.size()), pb(b.size());
  double total = 0.0;
  for (int k = 0; k < projections; ++k) {
    const double th = std::numbers::pi * k / projections;
    const Vec2 dir(std::cos(th), std::sin(th));
    for (std::size_t i = 0; i < a.size(); ++i) pa[i] = dir.dot(a[i]);
    for (std::size_t i = 0; i < b.size(); ++i) pb[i] = dir.dot(b[i]);
    total += wasserstein1(pa, pb);
  }
  return total / projections;
}

namespace {

template <class T>
ValueWithSE bootstrap_impl(const std::vector<T>& a, const std::vector<T>& b,
                           const std::function<double(const std::vector<T>&, const std::vector<T>&)>& stat,
                           int resamples, Seed seed) {
  ValueWithSE out;
  out.value = stat(a, b);
  if (resamples < 2) return out;
  RngStream rng(seed);
  std::vector<T> ra(a.size()), rb(b.size());
  double s = 0.0, s2 = 0.0;
  for (int r = 0; r < resamples; ++r) {
    for (auto& v : ra) v = a[rng.next_u64() % a.size()];
    for (auto& v : rb) v = b[rng.next_u64() % b.size()];
    const double x = stat(ra, rb);
    s += x;
    s2 += x * x;
  }
  const double m = s / resamples;
  out.std_err = std::sqrt(std::max(0.0, (s2 - resamples * m * m) / (resamples - 1)));
  return out;
}

}  // namespace

ValueWithSE bootstrap_two_sample(const std::vector<double>& a, const std::vector<double>& b,
                                 const std::function<double(const std::vector<double>&, const std::vector<double>&)>& stat,
                                 int resamples, Seed seed) {
  return bootstrap_impl(a, b, stat, resamples, seed);
}

ValueWithSE bootstrap_two_sample(const std::vector<Vec2>& a, const std::vector<Vec2>& b,
                                 const std::function<double(const std::vector<Vec2>&, const std::vector<Vec2>&)>& stat,
                                 int resamples, Seed seed) {
  return bootstrap_impl(a, b, stat, resamples, seed);
}

MomentSummary moments(const std::vector<Vec2>& xs) {
  MomentSummary m;
  m.n = xs.size();
  if (m.n < 2) throw std::invalid_argument("moments: need at least two samples");
  const double n = static_cast<double>(m.n);
  for (const auto& x : xs) m.mean += x;
  m.mean /= n;
  Mat2 s = Mat2::Zero(), s2 = Mat2::Zero();
  for (const auto& x : xs) {
    const Vec2 d = x - m.mean;
    const Mat2 p = d * d.transpose();
    s += p;
    s2 += p.cwiseProduct(p);
  }
  m.cov = s / (n - 1);
  const Mat2 mean_p = s / n;
  const Mat2 var_p = (s2 / n - mean_p.cwiseProduct(mean_p)).cwiseMax(0.0);
  m.cov_se = (var_p / n).cwiseSqrt();
  m.mean_se = (m.cov.diagonal() / n).cwiseSqrt();
  return m;
}

ScalarSummary summarize(std::vector<double> xs) {
  ScalarSummary s;
  s.n = xs.size();
  if (xs.empty()) return s;
  std::sort(xs.begin(), xs.end());
  double sum = 0.0, sum2 = 0.0;
  for (double x : xs) {
    sum += x;
    sum2 += x * x;
  }
  const double n = static_cast<double>(xs.size());
  s.mean = sum / n;
  if (xs.size() > 1) s.std_err = std::sqrt(std::max(0.0, (sum2 - n * s.mean * s.mean) / (n - 1)) / n);
  auto q = [&](double p) {
    const double r = p * (n - 1);
    const std::size_t i = static_cast<std::size_t>(r);
    const double f = r - static_cast<double>(i);
    return i + 1 < xs.size() ? (1 - f) * xs[i] + f * xs[i + 1] : xs.back();
  };
  s.median = q(0.5);
  s.q10 = q(0.1);
  s.q90 = q(0.9);
  s.max = xs.back();
  return s;
}

double relative_error(const Mat2& M, const Mat2& ref) {
  const double r = ref.norm();
  if (r == 0.0) throw std::invalid_argument("relative_error: zero reference");
  return (M - ref).norm() / r;
}

std::vector<std::size_t> curve_indices(std::size_t n_times, int count) {
  if (n_times < 2 || count < 1) throw std::invalid_argument("curve_indices: need two times and count >= 1");
  const std::size_t last = n_times - 1;
  std::vector<std::size_t> idx;
  for (int c = 1; c <= count; ++c) {
    const std::size_t i = std::max<std::size_t>(1, (last * c + count / 2) / count);
    if (idx.empty() || idx.back() != i) idx.push_back(i);
  }
  return idx;
}

}  // namespace phom
