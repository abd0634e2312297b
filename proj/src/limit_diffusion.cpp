#include "phom/limit_diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "phom/parallel.hpp"

namespace phom {

void LimitSdeConfig::validate() const {
  if (!(dt > 0 && dt <= 1e-2)) throw std::invalid_argument("LimitSdeConfig: dt must lie in (0, 1e-2]");
  if (!(T > 0)) throw std::invalid_argument("LimitSdeConfig: T must be positive");
  if (macro_per_unit < 1) throw std::invalid_argument("LimitSdeConfig: macro_per_unit must be >= 1");
  if (!x0.allFinite() || !std::isfinite(s0)) throw std::invalid_argument("LimitSdeConfig: non-finite start");
}

Mat2 psd_cholesky(const Mat2& A) {
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  const double tol = 1e-12 * scale;
  const double a11 = A(0, 0), a12 = 0.5 * (A(0, 1) + A(1, 0)), a22 = A(1, 1);
  Mat2 L = Mat2::Zero();
  if (a11 > tol) {
    L(0, 0) = std::sqrt(a11);
    L(1, 0) = a12 / L(0, 0);
    const double r = a22 - L(1, 0) * L(1, 0);
    if (r < -1e-9 * scale) throw std::runtime_error("psd_cholesky: matrix is not positive semidefinite");
    L(1, 1) = std::sqrt(std::max(r, 0.0));
    return L;
  }
  if (a11 < -tol || std::abs(a12) > 1e-6 * scale || a22 < -tol)
    throw std::runtime_error("psd_cholesky: matrix is not positive semidefinite");
  L(1, 1) = std::sqrt(std::max(a22, 0.0));
  return L;
}

namespace {

TimeGrid limit_grid(const LimitSdeConfig& cfg) {
  TimeGrid grid;
  const int n_macro = std::max(1, static_cast<int>(std::ceil(cfg.T * cfg.macro_per_unit - 1e-9)));
  const double macro_dt = cfg.T / n_macro;
  grid.macro_times.resize(static_cast<std::size_t>(n_macro) + 1);
  for (int k = 0; k <= n_macro; ++k) grid.macro_times[k] = cfg.s0 + k * macro_dt;
  grid.substeps = std::max(1, static_cast<int>(std::ceil(macro_dt / cfg.dt - 1e-9)));
  grid.dt = macro_dt / grid.substeps;
  return grid;
}

}  // namespace

std::vector<Vec2> simulate_limit_path(const LimitSdeConfig& cfg, const EffectiveModel& model, RngStream& rng) {
  cfg.validate();
  const TimeGrid grid = limit_grid(cfg);
  const double sq = std::sqrt(grid.dt);
  std::vector<Vec2> out;
  out.reserve(grid.macro_times.size());
  Vec2 x = cfg.x0;
  out.push_back(x);
  for (std::size_t k = 1; k < grid.macro_times.size(); ++k) {
    for (int s = 0; s < grid.substeps; ++s) {
      Mat2 L;
      try {
        L = psd_cholesky(model.diffusivity(x));
      } catch (const std::runtime_error& e) {
        std::ostringstream msg;
        msg << "simulate_limit: " << e.what() << " at x = (" << x.x() << ", " << x.y() << ")";
        throw std::runtime_error(msg.str());
      }
      const double z1 = rng.normal(), z2 = rng.normal();
      x += model.drift(x) * grid.dt + L * Vec2(z1, z2) * sq;
    }
    out.push_back(x);
  }
  return out;
}

TrajectoryEnsemble simulate_limit(const LimitSdeConfig& cfg, const EffectiveModel& model, std::size_t n_paths,
                                  Seed seed, int threads) {
  if (n_paths < 1) throw std::invalid_argument("simulate_limit: n_paths must be >= 1");
  cfg.validate();
  TrajectoryEnsemble ens;
  ens.kind = "limit";
  ens.seed = seed.value;
  ens.times = limit_grid(cfg).macro_times;
  ens.paths.resize(n_paths);
  const RngStream base(seed);
  parallel_for(n_paths, threads, [&](std::size_t p) {
    RngStream rng = base.split(p);
    ens.paths[p] = simulate_limit_path(cfg, model, rng);
  });
  return ens;
}

namespace {

void check_grid(const BackwardPdeConfig& cfg) {
  if (cfg.nx < 3 || cfg.ny < 3) throw std::invalid_argument("BackwardPdeConfig: need at least 3 nodes per axis");
  if (!(cfg.x_max > cfg.x_min && cfg.y_max > cfg.y_min)) throw std::invalid_argument("BackwardPdeConfig: empty box");
  if (!(cfg.T > 0)) throw std::invalid_argument("BackwardPdeConfig: T must be positive");
  if (!cfg.u0) throw std::invalid_argument("BackwardPdeConfig: terminal function missing");
}

struct NodeCoefficients {
  std::vector<Mat2> A;
  std::vector<Vec2> B;
};

NodeCoefficients sample_model(const BackwardPdeConfig& cfg, const EffectiveModel& model) {
  NodeCoefficients c;
  for (int i = 0; i < cfg.nx; ++i)
    for (int j = 0; j < cfg.ny; ++j) {
      const Vec2 x(cfg.x_min + i * cfg.hx(), cfg.y_min + j * cfg.hy());
      c.A.push_back(model.diffusivity(x));
      c.B.push_back(model.drift(x));
    }
  return c;
}

// Stated restriction min(h^2 / (2 max tr A), h / max|B|) and the sharper
// sum-of-coefficients bound that keeps the explicit update monotone.
std::pair<double, double> stability_bounds(const BackwardPdeConfig& cfg, const NodeCoefficients& c) {
  const double hx = cfg.hx(), hy = cfg.hy(), h = std::min(hx, hy);
  double trace = 0.0, drift = 0.0, rate = 0.0;
  for (std::size_t p = 0; p < c.A.size(); ++p) {
    const Mat2& A = c.A[p];
    const Vec2& B = c.B[p];
    trace = std::max(trace, A.trace());
    drift = std::max(drift, B.cwiseAbs().maxCoeff());
    rate = std::max(rate, A(0, 0) / (hx * hx) + A(1, 1) / (hy * hy) + std::abs(A(0, 1)) / (2 * hx * hy) +
                              std::abs(B.x()) / hx + std::abs(B.y()) / hy);
  }
  const double inf = std::numeric_limits<double>::infinity();
  const double stated = std::min(trace > 0 ? h * h / (2 * trace) : inf, drift > 0 ? h / drift : inf);
  const double sharp = rate > 0 ? 1.0 / rate : inf;
  return {stated, sharp};
}

}  // namespace

double pde_stable_dt(const BackwardPdeConfig& cfg, const EffectiveModel& model) {
  check_grid(cfg);
  const auto [stated, sharp] = stability_bounds(cfg, sample_model(cfg, model));
  return std::min(stated, sharp);
}

PdeSolution solve_backward_pde(const BackwardPdeConfig& cfg, const EffectiveModel& model,
                               const std::vector<double>& report_times) {
  check_grid(cfg);
  const NodeCoefficients coef = sample_model(cfg, model);
  const auto [stated, sharp] = stability_bounds(cfg, coef);
  double t_min = report_times.empty() ? 0.0 : *std::min_element(report_times.begin(), report_times.end());
  if (!(t_min < cfg.T)) t_min = cfg.T;
  for (double t : report_times)
    if (t > cfg.T) throw std::invalid_argument("solve_backward_pde: report time after the terminal time");

  double dt_max = 0.9 * std::min(stated, sharp);
  if (cfg.dt > 0) {
    if (cfg.dt > stated) {
      std::ostringstream msg;
      msg << "solve_backward_pde: dt = " << cfg.dt << " violates the stability restriction dt <= " << stated;
      throw std::invalid_argument(msg.str());
    }
    dt_max = cfg.dt;
  }
  const double span = cfg.T - t_min;
  const int steps = span > 0 ? std::max(1, static_cast<int>(std::ceil(span / dt_max - 1e-12))) : 0;
  const double dt = steps > 0 ? span / steps : 0.0;

  PdeSolution sol;
  sol.dt = dt;
  sol.steps = steps;
  for (int i = 0; i < cfg.nx; ++i) sol.xs.push_back(cfg.x_min + i * cfg.hx());
  for (int j = 0; j < cfg.ny; ++j) sol.ys.push_back(cfg.y_min + j * cfg.hy());

  const int nx = cfg.nx, ny = cfg.ny;
  std::vector<double> u(static_cast<std::size_t>(nx * ny)), next(u.size());
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) u[static_cast<std::size_t>(i * ny + j)] = cfg.u0(Vec2(sol.xs[i], sol.ys[j]));

  std::vector<int> report_steps;
  for (double t : report_times) report_steps.push_back(dt > 0 ? static_cast<int>(std::lround((cfg.T - t) / dt)) : 0);
  report_steps.push_back(steps);
  std::sort(report_steps.begin(), report_steps.end());
  report_steps.erase(std::unique(report_steps.begin(), report_steps.end()), report_steps.end());

  sol.snapshots.push_back({cfg.T, u});
  const double hx = cfg.hx(), hy = cfg.hy();
  // zero-gradient boundary: indices outside the box are clamped
  auto at = [&](int i, int j) {
    i = std::clamp(i, 0, nx - 1);
    j = std::clamp(j, 0, ny - 1);
    return u[static_cast<std::size_t>(i * ny + j)];
  };
  std::size_t next_report = 0;
  while (next_report < report_steps.size() && report_steps[next_report] == 0) ++next_report;
  for (int n = 1; n <= steps; ++n) {
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        const std::size_t p = static_cast<std::size_t>(i * ny + j);
        const Mat2& A = coef.A[p];
        const Vec2& B = coef.B[p];
        const double c = u[p];
        const double ux = B.x() > 0 ? (at(i + 1, j) - c) / hx : (c - at(i - 1, j)) / hx;
        const double uy = B.y() > 0 ? (at(i, j + 1) - c) / hy : (c - at(i, j - 1)) / hy;
        const double uxx = (at(i + 1, j) - 2 * c + at(i - 1, j)) / (hx * hx);
        const double uyy = (at(i, j + 1) - 2 * c + at(i, j - 1)) / (hy * hy);
        const double uxy =
            (at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) + at(i - 1, j - 1)) / (4 * hx * hy);
        next[p] = c + dt * (B.x() * ux + B.y() * uy + 0.5 * A(0, 0) * uxx + A(0, 1) * uxy + 0.5 * A(1, 1) * uyy);
      }
    }
    u.swap(next);
    if (next_report < report_steps.size() && report_steps[next_report] == n) {
      sol.snapshots.push_back({cfg.T - n * dt, u});
      ++next_report;
    }
  }
  return sol;
}

const PdeSnapshot& PdeSolution::snapshot(double t) const {
  if (snapshots.empty()) throw std::logic_error("PdeSolution: no snapshots");
  const PdeSnapshot* best = &snapshots.front();
  for (const auto& s : snapshots)
    if (std::abs(s.t - t) < std::abs(best->t - t)) best = &s;
  return *best;
}

double PdeSolution::value_at(double t, const Vec2& x) const {
  const PdeSnapshot& s = snapshot(t);
  const std::size_t ny = ys.size();
  auto axis = [](const std::vector<double>& nodes, double v, std::size_t& i, double& f) {
    const double h = nodes[1] - nodes[0];
    const double r = std::clamp((v - nodes.front()) / h, 0.0, static_cast<double>(nodes.size() - 1));
    i = std::min(static_cast<std::size_t>(r), nodes.size() - 2);
    f = r - static_cast<double>(i);
  };
  std::size_t i, j;
  double fx, fy;
  axis(xs, x.x(), i, fx);
  axis(ys, x.y(), j, fy);
  const auto v = [&](std::size_t a, std::size_t b) { return s.values[a * ny + b]; };
  return (1 - fx) * (1 - fy) * v(i, j) + fx * (1 - fy) * v(i + 1, j) + (1 - fx) * fy * v(i, j + 1) +
         fx * fy * v(i + 1, j + 1);
}

void PdeSolution::write_csv(std::ostream& out) const {
  out << "t,x1,x2,u\n";
  out.precision(17);
  const std::size_t ny = ys.size();
  for (const auto& s : snapshots)
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (std::size_t j = 0; j < ny; ++j) out << s.t << ',' << xs[i] << ',' << ys[j] << ',' << s.values[i * ny + j] << '\n';
}

}  // namespace phom
