#include "phom/galerkin.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <Eigen/SparseLU>

namespace phom {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

// Normalised probabilists' Hermite polynomials h_0..h_deg at u.
void hermite_values(double u, int deg, std::vector<double>& h) {
  h.assign(static_cast<std::size_t>(deg) + 2, 0.0);
  h[0] = 1.0;
  if (deg >= 1) h[1] = u;
  for (int n = 1; n < deg; ++n) h[n + 1] = (u * h[n] - std::sqrt(static_cast<double>(n)) * h[n - 1]) / std::sqrt(n + 1.0);
}

Eigen::SparseMatrix<double> assemble(const HermiteBasis& basis, const std::function<HermitePoly(const HermitePoly&)>& op) {
  Triplets t;
  for (std::size_t m = 0; m < basis.size(); ++m) {
    const HermitePoly image = op(HermitePoly{{basis.key(m), 1.0}});
    for (const auto& [key, c] : image) {
      const long row = basis.index_of(key);
      if (row >= 0 && c != 0.0) t.emplace_back(row, static_cast<int>(m), c);
    }
  }
  const int n = static_cast<int>(basis.size());
  Eigen::SparseMatrix<double> M(n, n);
  M.setFromTriplets(t.begin(), t.end());
  return M;
}

}  // namespace

HermiteBasis::HermiteBasis(std::size_t num_modes, int degree) : vars_(2 * num_modes), degree_(degree) {
  if (num_modes < 1 || num_modes > 4) throw std::invalid_argument("HermiteBasis: 1 <= N <= 4 required");
  if (degree < 1 || degree > 14) throw std::invalid_argument("HermiteBasis: 1 <= D <= 14 required");
  // enumerate by total degree, then lexicographically
  for (int d = 0; d <= degree; ++d) {
    std::vector<int> e(vars_, 0);
    std::function<void(std::size_t, int)> rec = [&](std::size_t v, int left) {
      if (v + 1 == vars_) {
        e[v] = left;
        std::uint64_t key = 0;
        for (std::size_t w = 0; w < vars_; ++w) key |= static_cast<std::uint64_t>(e[w]) << (8 * w);
        index_[key] = static_cast<long>(keys_.size());
        keys_.push_back(key);
        return;
      }
      for (int x = left; x >= 0; --x) {
        e[v] = x;
        rec(v + 1, left - x);
      }
    };
    rec(0, d);
  }
}

long HermiteBasis::index_of(std::uint64_t key) const {
  const auto it = index_.find(key);
  return it == index_.end() ? -1 : it->second;
}

std::uint64_t HermiteBasis::with_exponent(std::uint64_t key, std::size_t var, int e) {
  const std::uint64_t mask = std::uint64_t{0xff} << (8 * var);
  return (key & ~mask) | (static_cast<std::uint64_t>(e) << (8 * var));
}

int HermiteBasis::total_degree(std::uint64_t key, std::size_t vars) {
  int d = 0;
  for (std::size_t v = 0; v < vars; ++v) d += exponent(key, v);
  return d;
}

Eigen::VectorXd HermiteBasis::to_vector(const HermitePoly& p) const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
  for (const auto& [key, v] : p) {
    const long idx = index_of(key);
    if (idx >= 0) c(idx) += v;
  }
  return c;
}

HermitePoly HermiteBasis::to_poly(const Eigen::VectorXd& c) const {
  HermitePoly p;
  for (std::size_t m = 0; m < size(); ++m)
    if (c(static_cast<Eigen::Index>(m)) != 0.0) p[keys_[m]] = c(static_cast<Eigen::Index>(m));
  return p;
}

HermitePoly hermite_mul_u(const HermitePoly& p, std::size_t var) {
  HermitePoly out;
  for (const auto& [key, c] : p) {
    const int e = HermiteBasis::exponent(key, var);
    if (e >= 254) throw std::overflow_error("hermite_mul_u: degree overflow");
    out[HermiteBasis::with_exponent(key, var, e + 1)] += c * std::sqrt(e + 1.0);
    if (e > 0) out[HermiteBasis::with_exponent(key, var, e - 1)] += c * std::sqrt(static_cast<double>(e));
  }
  return out;
}

HermitePoly hermite_d_u(const HermitePoly& p, std::size_t var) {
  HermitePoly out;
  for (const auto& [key, c] : p) {
    const int e = HermiteBasis::exponent(key, var);
    if (e > 0) out[HermiteBasis::with_exponent(key, var, e - 1)] += c * std::sqrt(static_cast<double>(e));
  }
  return out;
}

void hermite_axpy(double s, const HermitePoly& x, HermitePoly& y) {
  if (s == 0.0) return;
  for (const auto& [key, c] : x) y[key] += s * c;
}

double hermite_eval(const HermitePoly& p, const std::vector<double>& u) {
  int deg = 0;
  for (const auto& [key, c] : p) deg = std::max(deg, HermiteBasis::total_degree(key, u.size()));
  std::vector<std::vector<double>> h(u.size());
  for (std::size_t v = 0; v < u.size(); ++v) hermite_values(u[v], deg, h[v]);
  double sum = 0.0;
  for (const auto& [key, c] : p) {
    double term = c;
    for (std::size_t v = 0; v < u.size(); ++v) term *= h[v][static_cast<std::size_t>(HermiteBasis::exponent(key, v))];
    sum += term;
  }
  return sum;
}

GalerkinSystem::GalerkinSystem(const ModeSet& modes, const Vec2& y, int degree)
    : basis_(modes.size(), degree), n_(modes.size()), y_(y) {
  for (std::size_t i = 0; i < n_; ++i) {
    alpha_.push_back(modes[i].alpha.value(y));
    sigma_.push_back(modes[i].sigma.value(y));
    k_.push_back(modes[i].k);
  }
  transport_ = assemble(basis_, [this](const HermitePoly& p) { return apply_transport(p); });
  generator_ = assemble(basis_, [this](const HermitePoly& p) { return apply_generator(p); });
}

HermitePoly GalerkinSystem::apply_transport(const HermitePoly& p) const {
  // w.D = sum_{i,j} delta(k_i,k_j) sigma_j u_{b_j} (u_{b_i} d_{a_i} - u_{a_i} d_{b_i})
  HermitePoly out;
  for (std::size_t i = 0; i < n_; ++i) {
    HermitePoly r = hermite_mul_u(hermite_d_u(p, var_a(i)), var_b(i));
    hermite_axpy(-1.0, hermite_mul_u(hermite_d_u(p, var_b(i)), var_a(i)), r);
    for (std::size_t j = 0; j < n_; ++j) {
      const double d = delta(k_[i], k_[j]);
      if (d != 0.0) hermite_axpy(d * sigma_[j], hermite_mul_u(r, var_b(j)), out);
    }
  }
  return out;
}

HermitePoly GalerkinSystem::apply_generator(const HermitePoly& p) const {
  HermitePoly out = apply_transport(p);
  for (const auto& [key, c] : p) {
    double lambda = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      lambda += alpha_[i] * (HermiteBasis::exponent(key, var_a(i)) + HermiteBasis::exponent(key, var_b(i)));
    if (lambda != 0.0) out[key] -= lambda * c;
  }
  return out;
}

Eigen::SparseMatrix<double> GalerkinSystem::multiplier(std::size_t mode) const {
  return assemble(basis_, [this, mode](const HermitePoly& p) {
    HermitePoly out;
    for (std::size_t j = 0; j < n_; ++j) {
      const double d = delta(k_[mode], k_[j]);
      if (d != 0.0) hermite_axpy(d * sigma_[j], hermite_mul_u(p, var_b(j)), out);
    }
    return out;
  });
}

HermitePoly GalerkinSystem::frame_velocity(int q) const {
  HermitePoly w;
  for (std::size_t i = 0; i < n_; ++i) {
    const double c = perp(k_[i])(q) * sigma_[i];
    if (c != 0.0) w[HermiteBasis::unit(var_b(i))] += c;
  }
  return w;
}

GalerkinCorrector galerkin_solve(const GalerkinSystem& sys) {
  const HermiteBasis& basis = sys.basis();
  const int n = static_cast<int>(basis.size()) - 1;  // drop the constant
  Eigen::SparseMatrix<double> L = -sys.generator().bottomRightCorner(n, n);
  L.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(L);
  if (lu.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "galerkin_solve: truncated generator is singular at degree " << basis.degree()
        << "; increase the degree";
    throw std::runtime_error(msg.str());
  }
  Eigen::MatrixXd coeffs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(basis.size()), 2);
  double residual = 0.0;
  for (int q = 0; q < 2; ++q) {
    const Eigen::VectorXd rhs = basis.to_vector(sys.frame_velocity(q)).tail(n);
    const Eigen::VectorXd c = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !c.allFinite())
      throw std::runtime_error("galerkin_solve: linear solve failed; increase the degree");
    coeffs.col(q).tail(n) = c;
    // residual of -L chi - w_q outside the truncated space plus the in-space part
    HermitePoly r = sys.apply_generator(basis.to_poly(coeffs.col(q)));
    for (auto& [key, v] : r) v = -v;
    hermite_axpy(-1.0, sys.frame_velocity(q), r);
    double s2 = 0.0;
    for (const auto& [key, v] : r) s2 += v * v;
    residual = std::max(residual, std::sqrt(s2));
  }
  return GalerkinCorrector(basis, sys.sigma(), std::move(coeffs), residual);
}

GalerkinCorrector galerkin_solve(const ModeSet& modes, const Vec2& y, int degree) {
  return galerkin_solve(GalerkinSystem(modes, y, degree));
}

Vec2 GalerkinCorrector::value(const PhasePoint& amps) const {
  const std::size_t N = sigma_.size();
  std::vector<std::vector<double>> h(2 * N);
  for (std::size_t i = 0; i < N; ++i) {
    hermite_values(amps.a[i] / sigma_[i], basis_.degree(), h[i]);
    hermite_values(amps.b[i] / sigma_[i], basis_.degree(), h[N + i]);
  }
  Vec2 out = Vec2::Zero();
  for (std::size_t m = 0; m < basis_.size(); ++m) {
    const std::uint64_t key = basis_.key(m);
    double psi = 1.0;
    for (std::size_t v = 0; v < 2 * N; ++v) psi *= h[v][static_cast<std::size_t>(HermiteBasis::exponent(key, v))];
    out(0) += coeffs_(static_cast<Eigen::Index>(m), 0) * psi;
    out(1) += coeffs_(static_cast<Eigen::Index>(m), 1) * psi;
  }
  return out;
}

Eigen::MatrixXd GalerkinCorrector::gradient(const PhasePoint& amps) const {
  const std::size_t N = sigma_.size();
  std::vector<std::vector<double>> h(2 * N);
  std::vector<double> u(2 * N);
  for (std::size_t i = 0; i < N; ++i) {
    u[i] = amps.a[i] / sigma_[i];
    u[N + i] = amps.b[i] / sigma_[i];
  }
  for (std::size_t v = 0; v < 2 * N; ++v) hermite_values(u[v], basis_.degree(), h[v]);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2, static_cast<Eigen::Index>(2 * N));
  for (std::size_t m = 0; m < basis_.size(); ++m) {
    const std::uint64_t key = basis_.key(m);
    for (std::size_t v = 0; v < 2 * N; ++v) {
      const int e = HermiteBasis::exponent(key, v);
      if (e == 0) continue;
      double d = std::sqrt(static_cast<double>(e)) * h[v][static_cast<std::size_t>(e - 1)] / sigma_[v % N];
      for (std::size_t w = 0; w < 2 * N; ++w)
        if (w != v) d *= h[w][static_cast<std::size_t>(HermiteBasis::exponent(key, w))];
      g(0, static_cast<Eigen::Index>(v)) += coeffs_(static_cast<Eigen::Index>(m), 0) * d;
      g(1, static_cast<Eigen::Index>(v)) += coeffs_(static_cast<Eigen::Index>(m), 1) * d;
    }
  }
  return g;
}

HermitePoly GalerkinCorrector::poly(int q) const { return basis_.to_poly(coeffs_.col(q)); }

double GalerkinCorrector::l2_distance(const GalerkinCorrector& other) const {
  double worst = 0.0;
  for (int q = 0; q < 2; ++q) {
    HermitePoly diff = poly(q);
    hermite_axpy(-1.0, other.poly(q), diff);
    double s2 = 0.0;
    for (const auto& [key, v] : diff) s2 += v * v;
    worst = std::max(worst, std::sqrt(s2));
  }
  return worst;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> galerkin_theta(const GalerkinSystem& sys, std::size_t mode,
                                                           const Eigen::VectorXd& F, const Eigen::VectorXd& G) {
  const int n = static_cast<int>(sys.basis().size());
  Eigen::SparseMatrix<double> shifted = sys.generator();
  for (int m = 0; m < n; ++m) shifted.coeffRef(m, m) -= sys.alpha()[mode];
  const Eigen::SparseMatrix<double> M = sys.multiplier(mode);
  Triplets t;
  auto put = [&t](const Eigen::SparseMatrix<double>& A, int r0, int c0, double s) {
    for (int c = 0; c < A.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator it(A, c); it; ++it)
        t.emplace_back(r0 + static_cast<int>(it.row()), c0 + c, s * it.value());
  };
  put(shifted, 0, 0, 1.0);
  put(M, 0, n, -1.0);
  put(M, n, 0, 1.0);
  put(shifted, n, n, 1.0);
  Eigen::SparseMatrix<double> block(2 * n, 2 * n);
  block.setFromTriplets(t.begin(), t.end());
  block.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(block);
  if (lu.info() != Eigen::Success) throw std::runtime_error("galerkin_theta: singular truncated system");
  Eigen::VectorXd rhs(2 * n);
  rhs << F, G;
  const Eigen::VectorXd sol = lu.solve(rhs);
  return {sol.head(n), sol.tail(n)};
}

Mat2 galerkin_diffusivity(const GalerkinSystem& sys, const GalerkinCorrector& chi) {
  const HermiteBasis& basis = sys.basis();
  Mat2 A = Mat2::Zero();
  for (std::size_t i = 0; i < sys.num_modes(); ++i) {
    for (std::size_t v : {sys.var_a(i), sys.var_b(i)}) {
      const Eigen::VectorXd d0 = basis.to_vector(hermite_d_u(chi.poly(0), v));
      const Eigen::VectorXd d1 = basis.to_vector(hermite_d_u(chi.poly(1), v));
      // sigma_i^2 from nu cancels the 1/sigma_i^2 of the derivative rescaling
      const double s = 2.0 * sys.alpha()[i];
      A(0, 0) += s * d0.dot(d0);
      A(0, 1) += s * d0.dot(d1);
      A(1, 1) += s * d1.dot(d1);
    }
  }
  A(1, 0) = A(0, 1);
  return A;
}

Vec2 galerkin_drift(const ModeSet& modes, const Vec2& y, int degree, double h) {
  for (const Mode& m : modes.modes())
    if (!m.sigma.is_constant()) throw std::invalid_argument("galerkin_drift: sigma profiles must be constant");
  const GalerkinSystem sys(modes, y, degree);
  const GalerkinCorrector chi = galerkin_solve(sys);
  const HermiteBasis& basis = sys.basis();
  const std::size_t N = modes.size();

  HermitePoly w[2] = {sys.frame_velocity(0), sys.frame_velocity(1)};
  Eigen::MatrixXd dchi[2];  // d coeffs / d y_j
  for (int j = 0; j < 2; ++j) {
    const Vec2 e = (j == 0 ? Vec2(h, 0) : Vec2(0, h));
    const GalerkinCorrector up = galerkin_solve(GalerkinSystem(modes, y + e, degree));
    const GalerkinCorrector dn = galerkin_solve(GalerkinSystem(modes, y - e, degree));
    dchi[j] = (up.coefficients() - dn.coefficients()) / (2.0 * h);
  }

  Vec2 B = Vec2::Zero();
  for (int q = 0; q < 2; ++q) {
    const HermitePoly c = chi.poly(q);
    const Vec2 eperp = perp(q == 0 ? Vec2(1, 0) : Vec2(0, 1));
    // R_l chi
    std::vector<HermitePoly> R(N);
    for (std::size_t l = 0; l < N; ++l) {
      R[l] = hermite_mul_u(hermite_d_u(c, sys.var_a(l)), sys.var_b(l));
      hermite_axpy(-1.0, hermite_mul_u(hermite_d_u(c, sys.var_b(l)), sys.var_a(l)), R[l]);
    }
    for (std::size_t i = 0; i < N; ++i) {
      const Vec2 dalpha = modes[i].alpha.gradient(y);
      const HermitePoly chi_a = hermite_d_u(c, sys.var_a(i));
      const HermitePoly chi_b = hermite_d_u(c, sys.var_b(i));
      for (int j = 0; j < 2; ++j) {
        if (dalpha(j) == 0.0) continue;
        HermitePoly F{{0, eperp(j)}};
        for (std::size_t l = 0; l < N; ++l) hermite_axpy(perp(sys.k()[l])(j), R[l], F);
        HermitePoly wa, wb;
        for (std::size_t l = 0; l < N; ++l) {
          const double s = perp(sys.k()[l])(j) * sys.sigma()[l];
          if (s == 0.0) continue;
          hermite_axpy(s, hermite_mul_u(chi_a, sys.var_b(l)), wa);
          hermite_axpy(s, hermite_mul_u(chi_b, sys.var_b(l)), wb);
        }
        hermite_axpy(1.0 / sys.sigma()[i], wa, F);
        HermitePoly G;
        hermite_axpy(1.0 / sys.sigma()[i], wb, G);
        const auto [t1, t2] = galerkin_theta(sys, i, basis.to_vector(F), basis.to_vector(G));
        const double moment = sys.sigma()[i] * (t1(basis.index_of(HermiteBasis::unit(sys.var_a(i)))) +
                                                t2(basis.index_of(HermiteBasis::unit(sys.var_b(i)))));
        B(q) += dalpha(j) * moment;
      }
    }
    for (int j = 0; j < 2; ++j)
      for (const auto& [key, v] : w[j]) B(q) += v * dchi[j](basis.index_of(key), q);
  }
  return B;
}

}  // namespace phom
