#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "phom/field_model.hpp"
#include "phom/rng.hpp"

namespace phom {

struct EffectiveOptions {
  double tol = 1e-3;   // corrector truncation tolerance
  double dt = 1e-2;    // auxiliary SDE step
  double h_y = 0.02;   // finite-difference step for d chi / d y
  int threads = 1;
};

struct AEstimate {
  Mat2 value = Mat2::Zero();       // after PSD projection
  Mat2 raw = Mat2::Zero();         // symmetrised, before projection
  Mat2 std_err = Mat2::Zero();
  Mat2 truncation = Mat2::Zero();  // bias bound from the finite time horizon
  double projection = 0.0;         // Frobenius size of the PSD correction
  bool warning = false;            // projection > 1e-3 trace
  std::size_t n_samples = 0;
  std::size_t n_flagged = 0;
};

struct BEstimate {
  Vec2 value = Vec2::Zero();
  Vec2 std_err = Vec2::Zero();
  Vec2 theta_term = Vec2::Zero();  // sum_{i,j} alpha_{i,y_j} E[Theta1 a_i + Theta2 b_i]
  Vec2 theta_se = Vec2::Zero();
  Vec2 chi_y_term = Vec2::Zero();  // E[w . chi_{q,y}]
  Vec2 chi_y_se = Vec2::Zero();
  std::size_t n_samples = 0;
  std::size_t n_flagged = 0;
};

/// A_{qq'}(y) = 2 sum_i alpha_i sigma_i^2 E_nu[chi_{q,a_i} chi_{q',a_i} + chi_{q,b_i} chi_{q',b_i}].
/// Each outer draw a ~ nu_*^y gets two independent inner gradient paths whose
/// symmetrised product is unbiased for the integrand. Requires n >= 1000.
AEstimate estimate_A(const ModeSet& modes, const Vec2& y, std::size_t n, RngStream& rng,
                     const EffectiveOptions& opt = {});

/// B_q(y) = sum_{i,j} alpha_{i,y_j} E_nu[Theta1_{ij} a_i + Theta2_{ij} b_i] + E_nu[w . chi_{q,y}].
/// The Theta functional is sampled at an exponential random time with the
/// inner corrector gradient taken at the auxiliary state reached. Requires n >= 1000.
BEstimate estimate_B(const ModeSet& modes, const Vec2& y, std::size_t n, RngStream& rng,
                     const EffectiveOptions& opt = {});

struct LocalEffective {
  Vec2 y = Vec2::Zero();
  AEstimate A;
  BEstimate B;
};

/// A and B from the same outer draws (common random numbers).
LocalEffective estimate_effective(const ModeSet& modes, const Vec2& y, std::size_t n, RngStream& rng,
                                  const EffectiveOptions& opt = {});

/// Rectangular lattice of slow points; nx = 1 (ny = 1) collapses that axis to x_min (y_min).
struct EffectiveGrid {
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
  int nx = 1, ny = 1;

  std::vector<double> xs() const;
  std::vector<double> ys() const;
};

/// Tabulated effective drift and diffusivity with bilinear interpolation
/// (clamped to the table outside the grid).
class EffectiveModel {
 public:
  EffectiveModel() : EffectiveModel(constant(Mat2::Zero(), Vec2::Zero())) {}
  EffectiveModel(std::vector<double> xs, std::vector<double> ys, std::vector<Mat2> A, std::vector<Vec2> B);

  static EffectiveModel constant(const Mat2& A, const Vec2& B);

  Vec2 drift(const Vec2& y) const;
  Mat2 diffusivity(const Vec2& y) const;

  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }
  std::size_t size() const { return A_.size(); }
  /// Node (ix, iy) stored at ix * ny + iy.
  const Mat2& A_at(std::size_t idx) const { return A_[idx]; }
  const Vec2& B_at(std::size_t idx) const { return B_[idx]; }
  Vec2 node(std::size_t idx) const { return {xs_[idx / ys_.size()], ys_[idx % ys_.size()]}; }

  double max_trace() const;
  double max_drift() const;
  /// Smallest eigenvalue over the nodes.
  double min_eigenvalue() const;

  /// Optional per-node estimator details and provenance.
  std::vector<LocalEffective> details;
  nlohmann::ordered_json provenance = nlohmann::ordered_json::object();

  nlohmann::ordered_json to_json() const;
  static EffectiveModel from_json(const nlohmann::ordered_json& j);
  /// Columns: y1,y2,B1,B2,A11,A12,A22,se_B1,se_B2,se_A11,se_A12,se_A22.
  void write_csv(std::ostream& out) const;

 private:
  void locate(const Vec2& y, std::size_t& i0, std::size_t& j0, double& fx, double& fy) const;
  std::vector<double> xs_, ys_;
  std::vector<Mat2> A_;
  std::vector<Vec2> B_;
};

/// Per-node estimate_effective; node p uses RngStream(seed).split(p) and the
/// nodes are processed in parallel.
EffectiveModel tabulate_effective(const ModeSet& modes, const EffectiveGrid& grid, std::size_t n, Seed seed,
                                  const EffectiveOptions& opt = {});

/// Eigenvalue clipping of a symmetric 2 x 2 matrix; returns the Frobenius size of the change.
double project_psd(Mat2& A);

}  // namespace phom
