#pragma once

#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "phom/field_model.hpp"

namespace phom {

/// Sparse polynomial in the normalised Hermite basis psi_m(u) = prod_v h_{m_v}(u_v),
/// u_v = (phase variable v) / sigma, keyed by the packed multi-index.
using HermitePoly = std::unordered_map<std::uint64_t, double>;

/// Tensor Hermite basis in 2N variables (a_1..a_N, b_1..b_N) of total degree <= D,
/// orthonormal with respect to nu_*^y.
class HermiteBasis {
 public:
  HermiteBasis(std::size_t num_modes, int degree);

  std::size_t size() const { return keys_.size(); }
  std::size_t num_vars() const { return vars_; }
  int degree() const { return degree_; }
  std::uint64_t key(std::size_t idx) const { return keys_[idx]; }
  /// -1 if the multi-index is not in the basis.
  long index_of(std::uint64_t key) const;

  static int exponent(std::uint64_t key, std::size_t var) { return static_cast<int>((key >> (8 * var)) & 0xff); }
  static std::uint64_t with_exponent(std::uint64_t key, std::size_t var, int e);
  static int total_degree(std::uint64_t key, std::size_t vars);
  static std::uint64_t unit(std::size_t var) { return std::uint64_t{1} << (8 * var); }

  Eigen::VectorXd to_vector(const HermitePoly& p) const;  // drops terms outside the basis
  HermitePoly to_poly(const Eigen::VectorXd& c) const;

 private:
  std::size_t vars_;
  int degree_;
  std::vector<std::uint64_t> keys_;
  std::unordered_map<std::uint64_t, long> index_;
};

/// Elementary operations on Hermite expansions.
HermitePoly hermite_mul_u(const HermitePoly& p, std::size_t var);
HermitePoly hermite_d_u(const HermitePoly& p, std::size_t var);
void hermite_axpy(double s, const HermitePoly& x, HermitePoly& y);
double hermite_eval(const HermitePoly& p, const std::vector<double>& u);

/// Galerkin matrices of the auxiliary generator L = LL + w.D at one slow point.
class GalerkinSystem {
 public:
  GalerkinSystem(const ModeSet& modes, const Vec2& y, int degree);

  const HermiteBasis& basis() const { return basis_; }
  std::size_t num_modes() const { return n_; }
  const Vec2& y() const { return y_; }
  const std::vector<double>& alpha() const { return alpha_; }
  const std::vector<double>& sigma() const { return sigma_; }
  const std::vector<Vec2>& k() const { return k_; }

  /// Matrix of L (column m = coefficients of L psi_m, truncated).
  const Eigen::SparseMatrix<double>& generator() const { return generator_; }
  /// Matrix of the transport part w.D alone.
  const Eigen::SparseMatrix<double>& transport() const { return transport_; }
  /// Matrix of multiplication by k_i . w (truncated).
  Eigen::SparseMatrix<double> multiplier(std::size_t mode) const;

  /// Expansion of w_q (q = 0, 1).
  HermitePoly frame_velocity(int q) const;
  /// Apply L to a polynomial exactly (no truncation).
  HermitePoly apply_generator(const HermitePoly& p) const;
  HermitePoly apply_transport(const HermitePoly& p) const;

  /// Variable indices of a_i and b_i in the basis.
  std::size_t var_a(std::size_t i) const { return i; }
  std::size_t var_b(std::size_t i) const { return n_ + i; }

 private:
  HermiteBasis basis_;
  std::size_t n_;
  Vec2 y_;
  std::vector<double> alpha_, sigma_;
  std::vector<Vec2> k_;
  Eigen::SparseMatrix<double> generator_, transport_;
};

/// Truncated spectral correctors chi_1, chi_2 at one slow point.
class GalerkinCorrector {
 public:
  GalerkinCorrector(const HermiteBasis& basis, std::vector<double> sigma, Eigen::MatrixXd coeffs, double residual)
      : basis_(basis), sigma_(std::move(sigma)), coeffs_(std::move(coeffs)), residual_(residual) {}

  const Eigen::MatrixXd& coefficients() const { return coeffs_; }  // size x 2
  const HermiteBasis& basis() const { return basis_; }
  int degree() const { return basis_.degree(); }
  /// Norm of the truncated residual -L chi - w_q (projected), max over q.
  double residual() const { return residual_; }

  Vec2 value(const PhasePoint& amps) const;
  /// 2 x 2N gradient in the Jacobian ordering.
  Eigen::MatrixXd gradient(const PhasePoint& amps) const;
  HermitePoly poly(int q) const;

  /// L2(nu) distance between two expansions (max over q).
  double l2_distance(const GalerkinCorrector& other) const;

 private:
  HermiteBasis basis_;
  std::vector<double> sigma_;
  Eigen::MatrixXd coeffs_;
  double residual_;
};

/// Solve -L chi_q = w_q on the mean-zero part of the basis. N <= 4, D <= 14.
/// Throws std::runtime_error if the truncated system is singular.
GalerkinCorrector galerkin_solve(const GalerkinSystem& sys);
GalerkinCorrector galerkin_solve(const ModeSet& modes, const Vec2& y, int degree);

/// Solve (L - alpha_i + i k_i.w)(Theta1 + i Theta2) = F + i G in the basis.
std::pair<Eigen::VectorXd, Eigen::VectorXd> galerkin_theta(const GalerkinSystem& sys, std::size_t mode,
                                                           const Eigen::VectorXd& F, const Eigen::VectorXd& G);

/// Effective diffusivity from the Galerkin corrector.
Mat2 galerkin_diffusivity(const GalerkinSystem& sys, const GalerkinCorrector& chi);

/// Effective drift from Galerkin correctors and Theta solves. The y-derivative
/// of the corrector is taken by central differences of the coefficients with
/// step h; requires y-independent sigma profiles.
Vec2 galerkin_drift(const ModeSet& modes, const Vec2& y, int degree, double h = 1e-4);

}  // namespace phom
