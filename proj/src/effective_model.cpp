#include "phom/effective_model.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "phom/cell_problem.hpp"
#include "phom/parallel.hpp"
#include "phom/stats.hpp"

namespace phom {

namespace {

// Sub-stream ids below one outer sample stream.
enum Stream : std::uint64_t { inner_a1 = 1, inner_a2 = 2, chi_y = 3, theta_path = 4, theta_inner = 5 };

struct Setup {
  AuxDynamics dyn;
  int steps;
  double T_max;
};

Setup make_setup(const ModeSet& modes, const Vec2& y, const EffectiveOptions& opt) {
  const double T = corrector_horizon(modes, y, opt.tol);
  AuxDynamics dyn(modes, y, opt.dt);
  const int steps = dyn.steps_for(T);
  return {std::move(dyn), steps, T};
}

// 2 sum_i alpha_i sigma_i^2 (g1_q . g2_q' + g2_q . g1_q') / 2 over the (a_i, b_i) entries.
Mat2 a_integrand(const AuxDynamics& dyn, const Eigen::MatrixXd& g1, const Eigen::MatrixXd& g2) {
  const Eigen::Index N = static_cast<Eigen::Index>(dyn.size());
  Eigen::VectorXd w(2 * N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const double s = dyn.sigma()[static_cast<std::size_t>(i)];
    w(i) = w(N + i) = 2.0 * dyn.alpha()[static_cast<std::size_t>(i)] * s * s;
  }
  const Eigen::MatrixXd prod = g1 * w.asDiagonal() * g2.transpose();
  return 0.5 * (prod + prod.transpose());
}

struct BSample {
  Vec2 theta = Vec2::Zero();
  Vec2 chi_y = Vec2::Zero();
  bool ok = true;
};

BSample b_sample(const ModeSet& modes, const Setup& s, const Setup (&plus)[2], const Setup (&minus)[2],
                 const LocalCoefficients& lc, double lambda, bool has_dalpha, double h,
                 const PhasePoint& amps, const RngStream& stream) {
  BSample out;
  const AuxDynamics& dyn = s.dyn;
  const std::size_t N = modes.size();
  const Vec2 w0 = dyn.frame_velocity(amps);

  // E[w . chi_{q,y}] with common noise at y +- h e_j
  for (int j = 0; j < 2; ++j) {
    RngStream rp = stream.split(chi_y), rm = stream.split(chi_y);
    const Vec2 up = detail::chi_path(plus[j].dyn, amps, s.steps, rp);
    const Vec2 dn = detail::chi_path(minus[j].dyn, amps, s.steps, rm);
    out.chi_y += w0(j) * (up - dn) / (2.0 * h);
  }
  if (!has_dalpha) return out;

  // Theta term: random time t ~ Exp(lambda), phase along the auxiliary path
  RngStream rt = stream.split(theta_path);
  const double t = rt.exponential(lambda);
  const int m = static_cast<int>(std::floor(t / dyn.dt() + 0.5));
  PhasePoint z = amps;
  std::vector<double> phase(N, 0.0);
  for (int k = 0; k < m; ++k) {
    for (std::size_t i = 0; i < N; ++i) phase[i] += dyn.dt() * dyn.omega(z, i);
    dyn.step(z, rt);
  }
  RngStream ri = stream.split(theta_inner);
  Eigen::MatrixXd g;  // grad chi_q at z, 2 x 2N
  if (!detail::chi_gradient_path(dyn, z, s.steps, ri, g)) {
    out.ok = false;
    return out;
  }
  const Vec2 wz = dyn.frame_velocity(z);
  const Eigen::Index n = static_cast<Eigen::Index>(N);
  for (int q = 0; q < 2; ++q) {
    const Vec2 eperp = perp(q == 0 ? Vec2(1, 0) : Vec2(0, 1));
    // D^perp chi_q = sum_l k_l^perp R_l chi_q,  R_l = b_l d_{a_l} - a_l d_{b_l}
    Vec2 dperp = Vec2::Zero();
    for (std::size_t l = 0; l < N; ++l) {
      const Eigen::Index L = static_cast<Eigen::Index>(l);
      dperp += perp(modes[l].k) * (z.b[l] * g(q, L) - z.a[l] * g(q, n + L));
    }
    for (std::size_t i = 0; i < N; ++i) {
      const Eigen::Index I = static_cast<Eigen::Index>(i);
      const double weight = std::exp(-(lc.alpha[i] - lambda) * t) / lambda;
      const std::complex<double> rot = std::polar(weight, phase[i]);
      for (int j = 0; j < 2; ++j) {
        if (lc.dalpha[i](j) == 0.0) continue;
        const double F = eperp(j) + dperp(j) + wz(j) * g(q, I);
        const double G = wz(j) * g(q, n + I);
        // Feynman-Kac sample of -(Theta1 + i Theta2)
        const std::complex<double> psi = -rot * std::complex<double>(F, G);
        out.theta(q) += lc.dalpha[i](j) * (psi.real() * amps.a[i] + psi.imag() * amps.b[i]);
      }
    }
  }
  return out;
}

void check_n(std::size_t n, const char* who) {
  if (n < 1000) throw std::invalid_argument(std::string(who) + ": n must be >= 1000");
}

}  // namespace

double project_psd(Mat2& A) {
  A = 0.5 * (A + A.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Mat2> eig(A);
  Eigen::Vector2d lam = eig.eigenvalues();
  if (lam.minCoeff() >= 0.0) return 0.0;
  const Mat2 before = A;
  lam = lam.cwiseMax(0.0);
  A = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
  A(1, 0) = A(0, 1);
  return (A - before).norm();
}

LocalEffective estimate_effective(const ModeSet& modes, const Vec2& y, std::size_t n, RngStream& rng,
                                  const EffectiveOptions& opt) {
  check_n(n, "estimate_effective");
  if (!(opt.h_y >= 1e-4 && opt.h_y <= 1e-1)) throw std::invalid_argument("h_y must lie in [1e-4, 1e-1]");
  const Setup s = make_setup(modes, y, opt);
  const Setup plus[2] = {make_setup(modes, y + Vec2(opt.h_y, 0), opt), make_setup(modes, y + Vec2(0, opt.h_y), opt)};
  const Setup minus[2] = {make_setup(modes, y - Vec2(opt.h_y, 0), opt), make_setup(modes, y - Vec2(0, opt.h_y), opt)};
  const LocalCoefficients lc = local_coefficients(modes, y);
  double lambda = lc.alpha.front();
  bool has_dalpha = false;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    lambda = std::min(lambda, lc.alpha[i]);
    if (!lc.dalpha[i].isZero(0.0)) has_dalpha = true;
  }
  const bool constant = modes.has_constant_profiles();

  std::vector<Mat2> a_samples(n);
  std::vector<BSample> b_samples(n);
  std::vector<char> a_ok(n, 1);
  parallel_for(n, opt.threads, [&](std::size_t p) {
    RngStream stream = rng.split(p);
    const PhasePoint amps = sample_invariant(modes, y, stream);
    Eigen::MatrixXd g1, g2;
    RngStream r1 = stream.split(inner_a1), r2 = stream.split(inner_a2);
    const bool ok1 = detail::chi_gradient_path(s.dyn, amps, s.steps, r1, g1);
    const bool ok2 = detail::chi_gradient_path(s.dyn, amps, s.steps, r2, g2);
    if (ok1 && ok2)
      a_samples[p] = a_integrand(s.dyn, g1, g2);
    else
      a_ok[p] = 0;
    if (!constant) b_samples[p] = b_sample(modes, s, plus, minus, lc, lambda, has_dalpha, opt.h_y, amps, stream);
  });

  LocalEffective out;
  out.y = y;
  // A
  Accumulator acc[2][2];
  for (std::size_t p = 0; p < n; ++p) {
    if (!a_ok[p]) continue;
    for (int q = 0; q < 2; ++q)
      for (int r = 0; r < 2; ++r) acc[q][r].add(a_samples[p](q, r));
  }
  AEstimate& A = out.A;
  for (int q = 0; q < 2; ++q)
    for (int r = 0; r < 2; ++r) {
      A.raw(q, r) = acc[q][r].mean();
      A.std_err(q, r) = acc[q][r].std_err();
    }
  A.n_samples = acc[0][0].count();
  A.n_flagged = n - A.n_samples;
  const double tail = std::exp(-modes.gamma0() * s.T_max);
  for (int q = 0; q < 2; ++q)
    for (int r = 0; r < 2; ++r)
      A.truncation(q, r) = (2.0 * tail + tail * tail) * std::sqrt(std::abs(A.raw(q, q) * A.raw(r, r)));
  A.value = A.raw;
  A.projection = project_psd(A.value);
  A.warning = A.projection > 1e-3 * std::abs(A.raw.trace());

  // B
  BEstimate& B = out.B;
  if (constant) {
    B.n_samples = n;
    return out;
  }
  Accumulator tot[2], th[2], cy[2];
  for (std::size_t p = 0; p < n; ++p) {
    if (!b_samples[p].ok) continue;
    for (int q = 0; q < 2; ++q) {
      tot[q].add(b_samples[p].theta(q) + b_samples[p].chi_y(q));
      th[q].add(b_samples[p].theta(q));
      cy[q].add(b_samples[p].chi_y(q));
    }
  }
  for (int q = 0; q < 2; ++q) {
    B.value(q) = tot[q].mean();
    B.std_err(q) = tot[q].std_err();
    B.theta_term(q) = th[q].mean();
    B.theta_se(q) = th[q].std_err();
    B.chi_y_term(q) = cy[q].mean();
    B.chi_y_se(q) = cy[q].std_err();
  }
  B.n_samples = tot[0].count();
  B.n_flagged = n - B.n_samples;
  return out;
}

AEstimate estimate_A(const ModeSet& modes, const Vec2& y, std::size_t n, RngStream& rng,
                     const EffectiveOptions& opt) {
  check_n(n, "estimate_A");
  // The drift part is skipped by evaluating on the constant-profile copy at y.
  std::vector<Mode> frozen;
  for (const Mode& m : modes.modes())
    frozen.push_back({m.k, Profile::constant(m.alpha.value(y)), Profile::constant(m.sigma.value(y))});
  const ModeSet local(std::move(frozen), modes.gamma0(), modes.sigma_star());
  return estimate_effective(local, y, n, rng, opt).A;
}

BEstimate estimate_B(const ModeSet& modes, const Vec2& y, std::size_t n, RngStream& rng,
                     const EffectiveOptions& opt) {
  return estimate_effective(modes, y, n, rng, opt).B;
}

std::vector<double> EffectiveGrid::xs() const {
  std::vector<double> v(static_cast<std::size_t>(std::max(nx, 1)));
  for (int i = 0; i < static_cast<int>(v.size()); ++i)
    v[i] = nx <= 1 ? x_min : x_min + (x_max - x_min) * i / (nx - 1);
  return v;
}

std::vector<double> EffectiveGrid::ys() const {
  std::vector<double> v(static_cast<std::size_t>(std::max(ny, 1)));
  for (int i = 0; i < static_cast<int>(v.size()); ++i)
    v[i] = ny <= 1 ? y_min : y_min + (y_max - y_min) * i / (ny - 1);
  return v;
}

EffectiveModel::EffectiveModel(std::vector<double> xs, std::vector<double> ys, std::vector<Mat2> A,
                               std::vector<Vec2> B)
    : xs_(std::move(xs)), ys_(std::move(ys)), A_(std::move(A)), B_(std::move(B)) {
  if (xs_.empty() || ys_.empty()) throw std::invalid_argument("EffectiveModel: empty grid");
  if (A_.size() != xs_.size() * ys_.size() || B_.size() != A_.size())
    throw std::invalid_argument("EffectiveModel: table size does not match the grid");
  for (std::size_t i = 1; i < xs_.size(); ++i)
    if (!(xs_[i] > xs_[i - 1])) throw std::invalid_argument("EffectiveModel: x nodes must increase");
  for (std::size_t i = 1; i < ys_.size(); ++i)
    if (!(ys_[i] > ys_[i - 1])) throw std::invalid_argument("EffectiveModel: y nodes must increase");
}

EffectiveModel EffectiveModel::constant(const Mat2& A, const Vec2& B) {
  return EffectiveModel({0.0}, {0.0}, {A}, {B});
}

void EffectiveModel::locate(const Vec2& y, std::size_t& i0, std::size_t& j0, double& fx, double& fy) const {
  auto axis = [](const std::vector<double>& nodes, double v, std::size_t& i, double& f) {
    if (nodes.size() == 1 || v <= nodes.front()) {
      i = 0;
      f = 0.0;
      return;
    }
    if (v >= nodes.back()) {
      i = nodes.size() - 2;
      f = 1.0;
      return;
    }
    i = static_cast<std::size_t>(std::upper_bound(nodes.begin(), nodes.end(), v) - nodes.begin()) - 1;
    f = (v - nodes[i]) / (nodes[i + 1] - nodes[i]);
  };
  axis(xs_, y.x(), i0, fx);
  axis(ys_, y.y(), j0, fy);
}

Vec2 EffectiveModel::drift(const Vec2& y) const {
  std::size_t i, j;
  double fx, fy;
  locate(y, i, j, fx, fy);
  const std::size_t ny = ys_.size();
  const std::size_t i1 = xs_.size() > 1 ? i + 1 : i, j1 = ny > 1 ? j + 1 : j;
  return (1 - fx) * (1 - fy) * B_[i * ny + j] + fx * (1 - fy) * B_[i1 * ny + j] + (1 - fx) * fy * B_[i * ny + j1] +
         fx * fy * B_[i1 * ny + j1];
}

Mat2 EffectiveModel::diffusivity(const Vec2& y) const {
  std::size_t i, j;
  double fx, fy;
  locate(y, i, j, fx, fy);
  const std::size_t ny = ys_.size();
  const std::size_t i1 = xs_.size() > 1 ? i + 1 : i, j1 = ny > 1 ? j + 1 : j;
  return (1 - fx) * (1 - fy) * A_[i * ny + j] + fx * (1 - fy) * A_[i1 * ny + j] + (1 - fx) * fy * A_[i * ny + j1] +
         fx * fy * A_[i1 * ny + j1];
}

double EffectiveModel::max_trace() const {
  double m = 0.0;
  for (const Mat2& A : A_) m = std::max(m, A.trace());
  return m;
}

double EffectiveModel::max_drift() const {
  double m = 0.0;
  for (const Vec2& B : B_) m = std::max(m, B.cwiseAbs().maxCoeff());
  return m;
}

double EffectiveModel::min_eigenvalue() const {
  double m = std::numeric_limits<double>::infinity();
  for (const Mat2& A : A_) m = std::min(m, Eigen::SelfAdjointEigenSolver<Mat2>(A).eigenvalues().minCoeff());
  return m;
}

nlohmann::ordered_json EffectiveModel::to_json() const {
  using nlohmann::ordered_json;
  ordered_json j;
  j["x_nodes"] = xs_;
  j["y_nodes"] = ys_;
  ordered_json nodes = ordered_json::array();
  for (std::size_t p = 0; p < A_.size(); ++p) {
    ordered_json e;
    const Vec2 y = node(p);
    e["y"] = {y.x(), y.y()};
    e["B"] = {B_[p].x(), B_[p].y()};
    e["A"] = {A_[p](0, 0), A_[p](0, 1), A_[p](1, 1)};
    if (p < details.size()) {
      const LocalEffective& d = details[p];
      e["B_se"] = {d.B.std_err.x(), d.B.std_err.y()};
      e["B_theta_term"] = {d.B.theta_term.x(), d.B.theta_term.y()};
      e["B_chi_y_term"] = {d.B.chi_y_term.x(), d.B.chi_y_term.y()};
      e["A_se"] = {d.A.std_err(0, 0), d.A.std_err(0, 1), d.A.std_err(1, 1)};
      e["A_truncation"] = {d.A.truncation(0, 0), d.A.truncation(0, 1), d.A.truncation(1, 1)};
      e["A_projection"] = d.A.projection;
      e["A_projection_warning"] = d.A.warning;
      e["n_samples"] = d.A.n_samples;
      e["n_flagged"] = d.A.n_flagged + d.B.n_flagged;
    }
    nodes.push_back(std::move(e));
  }
  j["nodes"] = std::move(nodes);
  j["provenance"] = provenance;
  return j;
}

EffectiveModel EffectiveModel::from_json(const nlohmann::ordered_json& j) {
  std::vector<double> xs = j.at("x_nodes").get<std::vector<double>>();
  std::vector<double> ys = j.at("y_nodes").get<std::vector<double>>();
  std::vector<Mat2> A;
  std::vector<Vec2> B;
  for (const auto& e : j.at("nodes")) {
    const auto a = e.at("A").get<std::vector<double>>();
    const auto b = e.at("B").get<std::vector<double>>();
    if (a.size() != 3 || b.size() != 2) throw std::invalid_argument("EffectiveModel::from_json: malformed node");
    Mat2 m;
    m << a[0], a[1], a[1], a[2];
    A.push_back(m);
    B.emplace_back(b[0], b[1]);
  }
  EffectiveModel model(std::move(xs), std::move(ys), std::move(A), std::move(B));
  if (j.contains("provenance")) model.provenance = j["provenance"];
  return model;
}

void EffectiveModel::write_csv(std::ostream& out) const {
  out << "y1,y2,B1,B2,A11,A12,A22,se_B1,se_B2,se_A11,se_A12,se_A22\n";
  out.precision(17);
  for (std::size_t p = 0; p < A_.size(); ++p) {
    const Vec2 y = node(p);
    out << y.x() << ',' << y.y() << ',' << B_[p].x() << ',' << B_[p].y() << ',' << A_[p](0, 0) << ','
        << A_[p](0, 1) << ',' << A_[p](1, 1);
    if (p < details.size()) {
      const LocalEffective& d = details[p];
      out << ',' << d.B.std_err.x() << ',' << d.B.std_err.y() << ',' << d.A.std_err(0, 0) << ','
          << d.A.std_err(0, 1) << ',' << d.A.std_err(1, 1) << '\n';
    } else {
      out << ",0,0,0,0,0\n";
    }
  }
}

EffectiveModel tabulate_effective(const ModeSet& modes, const EffectiveGrid& grid, std::size_t n, Seed seed,
                                  const EffectiveOptions& opt) {
  const std::vector<double> xs = grid.xs(), ys = grid.ys();
  const std::size_t count = xs.size() * ys.size();
  std::vector<LocalEffective> local(count);
  EffectiveOptions inner = opt;
  inner.threads = count >= static_cast<std::size_t>(std::max(1, opt.threads)) ? 1 : opt.threads;
  const RngStream base(seed);
  parallel_for(count, inner.threads == 1 ? opt.threads : 1, [&](std::size_t p) {
    RngStream r = base.split(p);
    local[p] = estimate_effective(modes, Vec2(xs[p / ys.size()], ys[p % ys.size()]), n, r, inner);
  });
  std::vector<Mat2> A;
  std::vector<Vec2> B;
  for (const auto& l : local) {
    A.push_back(l.A.value);
    B.push_back(l.B.value);
  }
  EffectiveModel model(xs, ys, std::move(A), std::move(B));
  model.details = std::move(local);
  model.provenance["modes_fingerprint"] = modes.fingerprint();
  model.provenance["seed"] = seed.value;
  model.provenance["samples_per_node"] = n;
  model.provenance["tol"] = opt.tol;
  model.provenance["aux_dt"] = opt.dt;
  model.provenance["h_y"] = opt.h_y;
  return model;
}

}  // namespace phom
