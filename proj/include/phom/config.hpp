#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "phom/effective_model.hpp"
#include "phom/field_model.hpp"

namespace phom {

/// Numerical settings shared by the experiments ([solver] section).
struct SolverConfig {
  double substep_c = 0.1;      // micro step constant of the eps-characteristics
  int macro_per_unit = 64;     // stored positions per unit time
  int bank_nodes = 33;         // Chebyshev nodes of the coefficient bank
  double tol = 1e-3;           // corrector truncation tolerance
  double aux_dt = 1e-2;        // auxiliary dynamics step
  double h_y = 0.02;           // slow-variable finite-difference step
  std::size_t coeff_samples = 10000;
  EffectiveGrid coeff_grid{-2.0, 2.0, -2.0, 2.0, 5, 5};  // ignored for constant profiles
  double limit_dt = 1e-2;
  int pde_nodes = 101;         // per axis
  double pde_half_width = 0.0; // 0: six standard deviations of the displacement, at least 4
  int bootstrap = 40;
  int curve_points = 8;
  int threads = 1;
};

/// Everything one experiment run needs. Parsed from a TOML file with the
/// sections [modes], [experiment] and [solver].
struct ExperimentConfig {
  ModeSet modes = ModeSet::reference();
  std::vector<double> eps_list{0.4, 0.3, 0.2, 0.15, 0.1};
  double T = 2.0;
  std::size_t n_paths = 10000;
  std::vector<std::string> metrics{"moments", "sliced_wasserstein", "covariance_curve"};
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  Vec2 x0 = Vec2::Zero();
  double s0 = 0.0;
  // passive scalar / averaging
  double t0 = 0.0;                 // start time of u_eps(t0, x)
  std::vector<Vec2> probes;        // empty: 3 x 3 lattice with spacing 0.5
  std::string u0 = "bump 1 0 0 1";
  std::string average_probe = "a1sq";
  SolverConfig solver;

  /// Throws std::invalid_argument on a violated invariant.
  void validate() const;
  std::vector<Vec2> probe_points() const;
  /// Canonical JSON form (without the thread count).
  nlohmann::ordered_json to_json() const;
  /// Hash of the canonical form without the output directory.
  std::string content_hash() const;
};

ExperimentConfig parse_config(std::string_view toml_text);
ExperimentConfig load_config(const std::string& path);
/// TOML text that parse_config maps back to the same configuration.
std::string to_toml(const ExperimentConfig& cfg);

}  // namespace phom
