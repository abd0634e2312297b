#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "phom/config.hpp"
#include "phom/io.hpp"
#include "phom/metrics.hpp"

using namespace phom;

namespace {

// int |F_a - F_b| dx by sweeping the merged support
double w1_by_cdf(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<double> pts = a;
  pts.insert(pts.end(), b.begin(), b.end());
  std::sort(pts.begin(), pts.end());
  double total = 0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double x = pts[i];
    const double fa = static_cast<double>(std::upper_bound(a.begin(), a.end(), x) - a.begin()) / a.size();
    const double fb = static_cast<double>(std::upper_bound(b.begin(), b.end(), x) - b.begin()) / b.size();
    total += std::abs(fa - fb) * (pts[i + 1] - x);
  }
  return total;
}

const char* kFullConfig = R"(
[modes]
gamma0 = 0.4
sigma_star = 0.5
k = [[1, 0], [0, 2]]
alpha = ["logistic 0.6 1.8 1 0 0", "const 1.2"]
sigma = ["const 1", "bump 1.0 0.3 0 0 0.5"]

[experiment]
eps_list = [0.5, 0.25]
T = 1.5
n_paths = 200
metrics = ["moments", "covariance_curve"]
seed = "0xff"
output_dir = "somewhere"
x0 = [0.1, -0.2]
s0 = 0.5
t0 = 0.75
probes = [[0, 0], [0.5, 0.5]]
u0 = "tanh 1 1 0 0 0.5"
average_probe = "w1"

[solver]
substep_c = 0.05
macro_per_unit = 32
bank_nodes = 17
tol = 2e-3
aux_dt = 5e-3
h_y = 0.01
coeff_samples = 2000
coeff_box = [-1, 1, -1.5, 1.5]
coeff_nodes = [3, 4]
limit_dt = 5e-3
pde_nodes = 81
pde_half_width = 5
bootstrap = 20
curve_points = 4
threads = 2
)";

}  // namespace

TEST_CASE("metrics: W1 on the line") {
  CHECK(wasserstein1({0, 1, 2}, {0, 1, 2}) == 0.0);
  CHECK(wasserstein1({0, 1, 2}, {0.5, 1.5, 2.5}) == doctest::Approx(0.5));
  RngStream rng(Seed{1});
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> a(37 + trial), b(53);
    for (double& v : a) v = rng.normal();
    for (double& v : b) v = 0.3 + 1.4 * rng.normal();
    CHECK(wasserstein1(a, b) == doctest::Approx(w1_by_cdf(a, b)).epsilon(1e-12));
    CHECK(wasserstein1(a, b) == doctest::Approx(wasserstein1(b, a)).epsilon(1e-12));
  }
}

TEST_CASE("metrics: sliced W1 of a translated cloud") {
  RngStream rng(Seed{2});
  std::vector<Vec2> a(200);
  for (auto& p : a) p = {rng.normal(), rng.normal()};
  CHECK(sliced_wasserstein1(a, a) == 0.0);
  const Vec2 v(0.3, -0.4);
  std::vector<Vec2> b = a;
  for (auto& p : b) p += v;
  double want = 0;
  for (int k = 0; k < 32; ++k) {
    const double th = std::numbers::pi * k / 32;
    want += std::abs(v.x() * std::cos(th) + v.y() * std::sin(th));
  }
  CHECK(sliced_wasserstein1(a, b) == doctest::Approx(want / 32).epsilon(1e-12));
  CHECK(sliced_wasserstein1(a, b) >= 0.0);
}

TEST_CASE("metrics: bootstrap keeps the full-sample statistic and is reproducible") {
  RngStream rng(Seed{3});
  std::vector<double> a(300), b(300);
  for (double& v : a) v = rng.normal();
  for (double& v : b) v = 0.5 + rng.normal();
  const auto stat = [](const std::vector<double>& x, const std::vector<double>& y) { return wasserstein1(x, y); };
  const ValueWithSE r1 = bootstrap_two_sample(a, b, stat, 40, Seed{9});
  const ValueWithSE r2 = bootstrap_two_sample(a, b, stat, 40, Seed{9});
  CHECK(r1.value == wasserstein1(a, b));
  CHECK(r1.std_err == r2.std_err);
  CHECK(r1.std_err > 0.0);
  // the mean difference of two unit normals has SE sqrt(2/300)
  const auto diff = [](const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0;
    for (double v : y) s += v;
    for (double v : x) s -= v;
    return s / static_cast<double>(x.size());
  };
  const ValueWithSE d = bootstrap_two_sample(a, b, diff, 400, Seed{10});
  CHECK(d.std_err == doctest::Approx(std::sqrt(2.0 / 300)).epsilon(0.2));
}

TEST_CASE("metrics: moment summary and its standard errors") {
  const std::vector<Vec2> pts{{0, 0}, {2, 0}, {0, 2}, {2, 2}};
  const MomentSummary m = moments(pts);
  CHECK(m.mean.isApprox(Vec2(1, 1)));
  CHECK(m.cov(0, 0) == doctest::Approx(4.0 / 3));
  CHECK(m.cov(0, 1) == doctest::Approx(0.0));

  RngStream rng(Seed{4});
  const Mat2 C = (Mat2() << 2.0, 0.6, 0.6, 1.0).finished();
  const Mat2 L = C.llt().matrixL();
  oracle::Moments c11, c12;
  double se11 = 0, se12 = 0;
  const int reps = 400;
  for (int r = 0; r < reps; ++r) {
    std::vector<Vec2> xs(500);
    for (auto& x : xs) x = L * Vec2(rng.normal(), rng.normal());
    const MomentSummary s = moments(xs);
    c11.add(s.cov(0, 0));
    c12.add(s.cov(0, 1));
    se11 += s.cov_se(0, 0) / reps;
    se12 += s.cov_se(0, 1) / reps;
  }
  CHECK(std::abs(c11.mean - 2.0) < 3 * c11.se());
  CHECK(se11 == doctest::Approx(std::sqrt(c11.var())).epsilon(0.15));
  CHECK(se12 == doctest::Approx(std::sqrt(c12.var())).epsilon(0.15));
}

TEST_CASE("metrics: scalar summary, errors and curve indices") {
  std::vector<double> xs;
  for (int i = 100; i >= 0; --i) xs.push_back(i);
  const ScalarSummary s = summarize(xs);
  CHECK(s.median == 50.0);
  CHECK(s.q10 == doctest::Approx(10.0));
  CHECK(s.q90 == doctest::Approx(90.0));
  CHECK(s.max == 100.0);
  CHECK(s.mean == 50.0);
  CHECK(relative_error(2 * Mat2::Identity(), Mat2::Identity()) == doctest::Approx(1.0));
  const auto idx = curve_indices(129, 8);
  REQUIRE(idx.size() == 8);
  CHECK(idx.back() == 128);
  CHECK(idx.front() > 0);
  CHECK(std::is_sorted(idx.begin(), idx.end()));
}

TEST_CASE("config: full file parses") {
  const ExperimentConfig c = parse_config(kFullConfig);
  CHECK(c.modes.size() == 2);
  CHECK(c.modes.gamma0() == 0.4);
  CHECK(c.modes[1].k == Vec2(0, 2));
  CHECK(c.modes[0].alpha.kind() == Profile::Kind::logistic);
  CHECK(c.eps_list == std::vector<double>{0.5, 0.25});
  CHECK(c.T == 1.5);
  CHECK(c.n_paths == 200);
  CHECK(c.seed == 255);
  CHECK(c.output_dir == "somewhere");
  CHECK(c.x0 == Vec2(0.1, -0.2));
  CHECK(c.probes.size() == 2);
  CHECK(c.average_probe == "w1");
  CHECK(c.solver.coeff_grid.nx == 3);
  CHECK(c.solver.coeff_grid.ny == 4);
  CHECK(c.solver.coeff_grid.y_max == 1.5);
  CHECK(c.solver.threads == 2);
  CHECK(c.solver.pde_half_width == 5.0);
}

TEST_CASE("config: TOML round trip and content hash") {
  const ExperimentConfig c = parse_config(kFullConfig);
  const ExperimentConfig back = parse_config(to_toml(c));
  CHECK(back.to_json() == c.to_json());
  CHECK(back.content_hash() == c.content_hash());
  ExperimentConfig other = c;
  other.solver.threads = 7;
  CHECK(other.content_hash() == c.content_hash());
  other.output_dir = "elsewhere";
  CHECK(other.content_hash() == c.content_hash());
  other.seed = 256;
  CHECK(other.content_hash() != c.content_hash());
  const ExperimentConfig ref = load_config(PHOM_SOURCE_DIR "/configs/reference.toml");
  CHECK(ref.modes.fingerprint() == ModeSet::reference().fingerprint());
  CHECK(ref.probe_points().size() == 9);
}

TEST_CASE("config: invalid input is rejected") {
  CHECK_THROWS_AS(parse_config("[experiment]\nbogus = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("[nowhere]\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("[experiment]\neps_list = [0.1, 0.2]\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("[experiment]\nn_paths = 50\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("[experiment]\nmetrics = [\"moments\", \"nonsense\"]\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("[modes]\nk = [[1, 0]]\nalpha = [\"const 9\"]\nsigma = [\"const 1\"]\n"),
                  std::invalid_argument);
  CHECK_THROWS(parse_config("[experiment\n"));
  CHECK_THROWS(load_config("/nonexistent/file.toml"));
}

TEST_CASE("io: hashing and number formatting") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(format_real(0.1) == "0.1");
  CHECK(format_real(2.0) == "2");
  CHECK(format_real(1e-7) == "1e-07");
  CHECK(std::stod(format_real(1.0 / 3)) == 1.0 / 3);
}

TEST_CASE("io: ensemble CSV and sidecar") {
  TrajectoryEnsemble ens;
  ens.kind = "eps";
  ens.eps = 0.2;
  ens.seed = 42;
  ens.modes_fingerprint = "abc";
  ens.times = {0.0, 0.5};
  ens.paths = {{{0, 0}, {1, 2}}, {{0, 0}, {-1, 0.25}}};
  std::ostringstream csv;
  write_ensemble_csv(csv, ens);
  CHECK(csv.str() == "path_id,t,x1,x2\n0,0,0,0\n0,0.5,1,2\n1,0,0,0\n1,0.5,-1,0.25\n");
  const auto side = ensemble_sidecar(ens, {{"k", 1}});
  CHECK(side["kind"] == "eps");
  CHECK(side["n_paths"] == 2);
  CHECK(side["n_times"] == 2);
  CHECK(side["seed"] == 42);
  CHECK(side["modes_fingerprint"] == "abc");

  const auto dir = std::filesystem::temp_directory_path() / "phom_io_test" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  write_ensemble(dir.string(), "ens", ens, {{"k", 1}});
  std::ifstream in(dir / "ens.csv");
  std::stringstream got;
  got << in.rdbuf();
  CHECK(got.str() == csv.str());
  std::ifstream js(dir / "ens.json");
  CHECK(nlohmann::json::parse(js)["config"]["k"] == 1);
  std::filesystem::remove_all(dir.parent_path());
}
