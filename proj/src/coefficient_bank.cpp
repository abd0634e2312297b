#include "phom/coefficient_bank.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace phom {

namespace {

// int_0^h u^k exp(-c u) du for k = 0, 1, 2; h = +inf allowed.
double kernel_moment(int k, double c, double h) {
  if (std::isinf(h)) {
    const double fact = (k == 2) ? 2.0 : 1.0;
    return fact / std::pow(c, k + 1);
  }
  const double x = c * h;
  double g;
  if (x < 2.0) {
    // g_k(x) = int_0^1 s^k exp(-x s) ds = sum_n (-x)^n / (n! (n + k + 1))
    g = 0.0;
    double term = 1.0;
    for (int n = 0; n < 60; ++n) {
      g += term / (n + k + 1);
      term *= -x / (n + 1);
      if (std::abs(term) < 1e-18) break;
    }
  } else {
    const double e = std::exp(-x);
    switch (k) {
      case 0:
        g = (1.0 - e) / x;
        break;
      case 1:
        g = (1.0 - e * (1.0 + x)) / (x * x);
        break;
      default:
        g = (2.0 - e * (2.0 + 2.0 * x + x * x)) / (x * x * x);
        break;
    }
  }
  return std::pow(h, k + 1) * g;
}

}  // namespace

CoefficientBank::CoefficientBank(const ModeSet& modes, int num_nodes, double t0)
    : num_nodes_(num_nodes),
      num_modes_(modes.size()),
      lo_(modes.gamma0()),
      hi_(1.0 / modes.gamma0()),
      time_(t0) {
  if (num_nodes < 4) throw std::invalid_argument("CoefficientBank: need at least 4 alpha nodes");
  nodes_.resize(num_nodes);
  bary_.resize(num_nodes);
  const double mid = 0.5 * (lo_ + hi_), half = 0.5 * (hi_ - lo_);
  for (int j = 0; j < num_nodes; ++j) {
    nodes_[j] = mid + half * std::cos(std::numbers::pi * j / (num_nodes - 1));
    bary_[j] = (j % 2 == 0 ? 1.0 : -1.0) * ((j == 0 || j == num_nodes - 1) ? 0.5 : 1.0);
  }
  z_.assign(num_modes_ * 2 * num_nodes, 0.0);
  y_.assign(num_modes_ * 2 * num_nodes, 0.0);
  decay_.resize(num_nodes);
}

Eigen::MatrixXd CoefficientBank::increment_factor(const std::vector<double>& nodes, double dt) {
  const int m = static_cast<int>(nodes.size());
  Eigen::MatrixXd cov(2 * m, 2 * m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double c = nodes[i] + nodes[j];
      cov(i, j) = kernel_moment(0, c, dt);
      cov(i, m + j) = kernel_moment(1, c, dt);
      cov(m + i, j) = cov(i, m + j);
      cov(m + i, m + j) = kernel_moment(2, c, dt);
    }
  }
  // The matrix is symmetric by construction except for the ZY block order.
  cov = 0.5 * (cov + cov.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw std::runtime_error("CoefficientBank: eigensolver failed");
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double lmax = lambda.maxCoeff();
  if (lambda.minCoeff() < -1e-9 * lmax) {
    std::ostringstream msg;
    msg << "CoefficientBank: joint covariance is not positive semidefinite (min eigenvalue "
        << lambda.minCoeff() << ", max " << lmax << ", dt " << dt << ")";
    throw std::runtime_error(msg.str());
  }
  std::vector<int> keep;
  for (int k = 0; k < 2 * m; ++k)
    if (lambda(k) > 1e-15 * lmax) keep.push_back(k);
  Eigen::MatrixXd factor(2 * m, static_cast<int>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
    factor.col(static_cast<int>(c)) = eig.eigenvectors().col(keep[c]) * std::sqrt(lambda(keep[c]));
  return factor;
}

CoefficientBank CoefficientBank::init_stationary(const ModeSet& modes, int num_nodes, RngStream& rng) {
  CoefficientBank bank(modes, num_nodes, 0.0);
  const Eigen::MatrixXd factor = increment_factor(bank.nodes_, std::numeric_limits<double>::infinity());
  const int m = num_nodes;
  Eigen::VectorXd xi(factor.cols());
  for (std::size_t mode = 0; mode < bank.num_modes_; ++mode) {
    for (int ch = 0; ch < 2; ++ch) {
      for (int r = 0; r < xi.size(); ++r) xi(r) = rng.normal();
      const Eigen::VectorXd v = factor * xi;
      for (int j = 0; j < m; ++j) {
        bank.z_[bank.index(mode, ch, j)] = v(j);
        bank.y_[bank.index(mode, ch, j)] = v(m + j);
      }
    }
  }
  return bank;
}

CoefficientBank CoefficientBank::quiescent(const ModeSet& modes, int num_nodes, double t0) {
  return CoefficientBank(modes, num_nodes, t0);
}

void CoefficientBank::step(double dt, RngStream& rng) {
  if (!(dt > 0)) throw std::invalid_argument("CoefficientBank::step: dt must be positive");
  const int m = num_nodes_;
  if (dt != cached_dt_) {
    factor_ = increment_factor(nodes_, dt);
    for (int j = 0; j < m; ++j) decay_[j] = std::exp(-nodes_[j] * dt);
    cached_dt_ = dt;
  }
  const int rank = static_cast<int>(factor_.cols());
  scratch_.resize(static_cast<std::size_t>(rank));
  for (std::size_t mode = 0; mode < num_modes_; ++mode) {
    for (int ch = 0; ch < 2; ++ch) {
      for (int r = 0; r < rank; ++r) scratch_[r] = rng.normal();
      double* z = &z_[index(mode, ch, 0)];
      double* y = &y_[index(mode, ch, 0)];
      for (int j = 0; j < m; ++j) {
        double iz = 0.0, iy = 0.0;
        for (int r = 0; r < rank; ++r) {
          iz += factor_(j, r) * scratch_[r];
          iy += factor_(m + j, r) * scratch_[r];
        }
        const double z_old = z[j];
        z[j] = decay_[j] * z_old + iz;
        y[j] = decay_[j] * (y[j] + dt * z_old) + iy;
      }
    }
  }
  time_ += dt;
}

void CoefficientBank::step_driven(double dt, std::span<const double> dw) {
  if (!(dt > 0)) throw std::invalid_argument("CoefficientBank::step_driven: dt must be positive");
  if (dw.size() != 2 * num_modes_)
    throw std::invalid_argument("CoefficientBank::step_driven: need one increment per (mode, channel)");
  const int m = num_nodes_;
  for (std::size_t mode = 0; mode < num_modes_; ++mode) {
    for (int ch = 0; ch < 2; ++ch) {
      const double w = dw[ch == 0 ? mode : num_modes_ + mode];
      double* z = &z_[index(mode, ch, 0)];
      double* y = &y_[index(mode, ch, 0)];
      for (int j = 0; j < m; ++j) {
        const double decay = std::exp(-nodes_[j] * dt);
        const double half = std::exp(-nodes_[j] * 0.5 * dt);
        const double z_old = z[j];
        z[j] = decay * z_old + half * w;
        y[j] = decay * (y[j] + dt * z_old) + 0.5 * dt * half * w;
      }
    }
  }
  time_ += dt;
}

void CoefficientBank::barycentric_weights(double alpha, std::vector<double>& w) const {
  const double tol = 1e-12 * hi_;
  if (!(alpha >= lo_ - tol && alpha <= hi_ + tol)) {
    std::ostringstream msg;
    msg << "CoefficientBank: alpha = " << alpha << " outside node interval [" << lo_ << ", " << hi_ << "]";
    throw std::logic_error(msg.str());
  }
  w.assign(static_cast<std::size_t>(num_nodes_), 0.0);
  for (int j = 0; j < num_nodes_; ++j) {
    if (alpha == nodes_[j]) {
      w[j] = 1.0;
      return;
    }
  }
  double total = 0.0;
  for (int j = 0; j < num_nodes_; ++j) {
    w[j] = bary_[j] / (alpha - nodes_[j]);
    total += w[j];
  }
  for (double& v : w) v /= total;
}

std::pair<double, double> CoefficientBank::interpolate(std::size_t mode, int channel, double alpha) const {
  barycentric_weights(alpha, scratch_);
  double zi = 0.0, yi = 0.0;
  for (int j = 0; j < num_nodes_; ++j) {
    zi += scratch_[j] * z_[index(mode, channel, j)];
    yi += scratch_[j] * y_[index(mode, channel, j)];
  }
  return {zi, yi};
}

void CoefficientBank::eval(const ModeSet& modes, const Vec2& y, PhasePoint& amps, PhaseGradient* grads) const {
  const std::size_t n = num_modes_;
  if (amps.size() != n) amps = PhasePoint(n);
  if (grads && grads->size() != n) *grads = PhaseGradient(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double alpha = modes[i].alpha.value(y);
    const double sigma = modes[i].sigma.value(y);
    barycentric_weights(alpha, scratch_);
    double za = 0, ya = 0, zb = 0, yb = 0;
    const double* zpa = &z_[index(i, 0, 0)];
    const double* ypa = &y_[index(i, 0, 0)];
    const double* zpb = &z_[index(i, 1, 0)];
    const double* ypb = &y_[index(i, 1, 0)];
    for (int j = 0; j < num_nodes_; ++j) {
      const double w = scratch_[j];
      za += w * zpa[j];
      ya += w * ypa[j];
      zb += w * zpb[j];
      yb += w * ypb[j];
    }
    const double root = std::sqrt(2.0 * alpha);
    amps.a[i] = root * sigma * za;
    amps.b[i] = root * sigma * zb;
    if (grads) {
      const Vec2 dalpha = modes[i].alpha.gradient(y);
      const Vec2 gamma = modes[i].sigma.gradient(y) + dalpha * (sigma / (2.0 * alpha));
      grads->a[i] = root * (gamma * za - sigma * ya * dalpha);
      grads->b[i] = root * (gamma * zb - sigma * yb * dalpha);
    }
  }
}

std::pair<PhasePoint, PhaseGradient> CoefficientBank::eval(const ModeSet& modes, const Vec2& y) const {
  PhasePoint amps(num_modes_);
  PhaseGradient grads(num_modes_);
  eval(modes, y, amps, &grads);
  return {amps, grads};
}

}  // namespace phom
