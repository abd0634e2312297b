#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "phom/characteristics.hpp"
#include "phom/effective_model.hpp"

namespace phom {

struct LimitSdeConfig {
  Vec2 x0 = Vec2::Zero();
  double s0 = 0.0;
  double T = 1.0;
  double dt = 1e-2;  // Euler-Maruyama step, <= 1e-2; shrunk to divide the macro grid
  int macro_per_unit = 64;

  void validate() const;
};

/// Robust lower-triangular factor L with L L^T = A for a PSD 2 x 2 matrix.
/// Throws std::runtime_error if A is indefinite beyond round-off.
Mat2 psd_cholesky(const Mat2& A);

/// Euler-Maruyama paths of dx = B(x) dt + sqrt(A(x)) dW, sampled on the same
/// macro grid layout as the eps-characteristics. Path p uses RngStream(seed).split(p).
TrajectoryEnsemble simulate_limit(const LimitSdeConfig& cfg, const EffectiveModel& model, std::size_t n_paths,
                                  Seed seed, int threads = 1);

/// Single path (macro grid) driven by rng.
std::vector<Vec2> simulate_limit_path(const LimitSdeConfig& cfg, const EffectiveModel& model, RngStream& rng);

struct BackwardPdeConfig {
  double x_min = -4.0, x_max = 4.0, y_min = -4.0, y_max = 4.0;
  int nx = 101, ny = 101;
  double T = 1.0;   // terminal time; the solution is reported at times t <= T
  double dt = 0.0;  // 0 selects the largest stable step (times 0.9)
  std::function<double(const Vec2&)> u0;

  double hx() const { return (x_max - x_min) / (nx - 1); }
  double hy() const { return (y_max - y_min) / (ny - 1); }
};

/// Grid function u(t, .) on the PDE lattice, value(ix, iy) at index ix * ny + iy.
struct PdeSnapshot {
  double t = 0.0;
  std::vector<double> values;
};

struct PdeSolution {
  std::vector<double> xs, ys;
  double dt = 0.0;
  int steps = 0;
  std::vector<PdeSnapshot> snapshots;  // ordered by decreasing t, first is t = T

  /// Bilinear interpolation of the snapshot nearest to t.
  double value_at(double t, const Vec2& x) const;
  const PdeSnapshot& snapshot(double t) const;
  /// Columns: t,x1,x2,u.
  void write_csv(std::ostream& out) const;
};

/// Largest explicit step allowed by the stability restriction
/// dt <= min(h^2 / (2 max tr A), h / max |B|) on the given grid.
double pde_stable_dt(const BackwardPdeConfig& cfg, const EffectiveModel& model);

/// Explicit finite differences for
///   du/dt + B . grad u + 1/2 A : grad^2 u = 0,   u(T, .) = u0,
/// marched backwards from T: upwind drift, centred diffusion with the
/// four-point stencil for the mixed term, zero-gradient (outflow) boundary.
/// Snapshots are stored at every requested time (rounded to the step grid)
/// plus t = T and the final time min(report_times). Throws std::invalid_argument
/// if a user-supplied dt violates the stability restriction.
PdeSolution solve_backward_pde(const BackwardPdeConfig& cfg, const EffectiveModel& model,
                               const std::vector<double>& report_times);

}  // namespace phom
