#include "phom/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#define TOML_EXCEPTIONS 1
#include <toml++/toml.hpp>

#include "phom/io.hpp"

namespace phom {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument("config: " + msg); }

void check_keys(const toml::table& t, const std::string& section, const std::set<std::string>& known) {
  for (const auto& [key, node] : t)
    if (!known.count(std::string(key.str()))) fail("unknown key '" + std::string(key.str()) + "' in [" + section + "]");
}

double get_real(const toml::node& n, const std::string& what) {
  if (auto v = n.value<double>()) return *v;
  fail(what + " must be a number");
}

long long get_int(const toml::node& n, const std::string& what) {
  if (auto v = n.as_integer()) return v->get();
  if (auto d = n.as_floating_point(); d && std::floor(d->get()) == d->get()) return static_cast<long long>(d->get());
  fail(what + " must be an integer");
}

std::string get_string(const toml::node& n, const std::string& what) {
  if (auto v = n.value<std::string>()) return *v;
  fail(what + " must be a string");
}

const toml::array& get_array(const toml::node& n, const std::string& what) {
  if (auto a = n.as_array()) return *a;
  fail(what + " must be an array");
}

Vec2 get_vec2(const toml::node& n, const std::string& what) {
  const auto& a = get_array(n, what);
  if (a.size() != 2) fail(what + " must have two entries");
  return {get_real(*a.get(0), what), get_real(*a.get(1), what)};
}

std::vector<double> get_reals(const toml::node& n, const std::string& what) {
  std::vector<double> out;
  for (const auto& e : get_array(n, what)) out.push_back(get_real(e, what));
  return out;
}

ModeSet parse_modes(const toml::table& t) {
  check_keys(t, "modes", {"gamma0", "sigma_star", "k", "alpha", "sigma"});
  if (!t.contains("k")) fail("[modes] needs k");
  const auto& ks = get_array(*t.get("k"), "modes.k");
  const std::size_t n = ks.size();
  auto profiles = [&](const char* key) {
    std::vector<Profile> out;
    if (!t.contains(key)) {
      out.assign(n, Profile::constant(1.0));
      return out;
    }
    const auto& arr = get_array(*t.get(key), std::string("modes.") + key);
    if (arr.size() != n) fail(std::string("modes.") + key + " must have one entry per wavevector");
    for (const auto& e : arr) {
      try {
        out.push_back(Profile::parse(get_string(e, std::string("modes.") + key)));
      } catch (const std::invalid_argument& err) {
        fail(std::string("modes.") + key + ": " + err.what());
      }
    }
    return out;
  };
  const auto alpha = profiles("alpha");
  const auto sigma = profiles("sigma");
  std::vector<Mode> modes;
  for (std::size_t i = 0; i < n; ++i) modes.push_back({get_vec2(*ks.get(i), "modes.k"), alpha[i], sigma[i]});
  const double g0 = t.contains("gamma0") ? get_real(*t.get("gamma0"), "modes.gamma0") : 0.5;
  const double ss = t.contains("sigma_star") ? get_real(*t.get("sigma_star"), "modes.sigma_star") : 0.5;
  return ModeSet(std::move(modes), g0, ss);
}

void parse_experiment(const toml::table& t, ExperimentConfig& c) {
  check_keys(t, "experiment",
             {"eps_list", "T", "n_paths", "metrics", "seed", "output_dir", "x0", "s0", "t0", "probes", "u0",
              "average_probe"});
  if (auto n = t.get("eps_list")) c.eps_list = get_reals(*n, "eps_list");
  if (auto n = t.get("T")) c.T = get_real(*n, "T");
  if (auto n = t.get("n_paths")) {
    const long long v = get_int(*n, "n_paths");
    if (v < 0) fail("n_paths must be positive");
    c.n_paths = static_cast<std::size_t>(v);
  }
  if (auto n = t.get("metrics")) {
    c.metrics.clear();
    for (const auto& e : get_array(*n, "metrics")) c.metrics.push_back(get_string(e, "metrics"));
  }
  if (auto n = t.get("seed")) {
    if (n->is_string()) {
      const std::string text = get_string(*n, "seed");
      std::size_t used = 0;
      try {
        c.seed = std::stoull(text, &used, 0);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != text.size() || text.front() == '-') fail("seed must be an unsigned 64-bit integer");
    } else {
      const long long v = get_int(*n, "seed");
      if (v < 0) fail("seed must be non-negative");
      c.seed = static_cast<std::uint64_t>(v);
    }
  }
  if (auto n = t.get("output_dir")) c.output_dir = get_string(*n, "output_dir");
  if (auto n = t.get("x0")) c.x0 = get_vec2(*n, "x0");
  if (auto n = t.get("s0")) c.s0 = get_real(*n, "s0");
  if (auto n = t.get("t0")) c.t0 = get_real(*n, "t0");
  if (auto n = t.get("probes")) {
    c.probes.clear();
    for (const auto& e : get_array(*n, "probes")) c.probes.push_back(get_vec2(e, "probes"));
  }
  if (auto n = t.get("u0")) c.u0 = get_string(*n, "u0");
  if (auto n = t.get("average_probe")) c.average_probe = get_string(*n, "average_probe");
}

void parse_solver(const toml::table& t, SolverConfig& s) {
  check_keys(t, "solver",
             {"substep_c", "macro_per_unit", "bank_nodes", "tol", "aux_dt", "h_y", "coeff_samples", "coeff_box",
              "coeff_nodes", "limit_dt", "pde_nodes", "pde_half_width", "bootstrap", "curve_points", "threads"});
  auto integer = [&](const char* key, int& dst) {
    if (auto n = t.get(key)) dst = static_cast<int>(get_int(*n, key));
  };
  auto real = [&](const char* key, double& dst) {
    if (auto n = t.get(key)) dst = get_real(*n, key);
  };
  real("substep_c", s.substep_c);
  integer("macro_per_unit", s.macro_per_unit);
  integer("bank_nodes", s.bank_nodes);
  real("tol", s.tol);
  real("aux_dt", s.aux_dt);
  real("h_y", s.h_y);
  if (auto n = t.get("coeff_samples")) s.coeff_samples = static_cast<std::size_t>(get_int(*n, "coeff_samples"));
  if (auto n = t.get("coeff_box")) {
    const auto box = get_reals(*n, "coeff_box");
    if (box.size() != 4) fail("coeff_box must be [x_min, x_max, y_min, y_max]");
    s.coeff_grid.x_min = box[0];
    s.coeff_grid.x_max = box[1];
    s.coeff_grid.y_min = box[2];
    s.coeff_grid.y_max = box[3];
  }
  if (auto n = t.get("coeff_nodes")) {
    const auto& a = get_array(*n, "coeff_nodes");
    if (a.size() != 2) fail("coeff_nodes must be [nx, ny]");
    s.coeff_grid.nx = static_cast<int>(get_int(*a.get(0), "coeff_nodes"));
    s.coeff_grid.ny = static_cast<int>(get_int(*a.get(1), "coeff_nodes"));
  }
  real("limit_dt", s.limit_dt);
  integer("pde_nodes", s.pde_nodes);
  real("pde_half_width", s.pde_half_width);
  integer("bootstrap", s.bootstrap);
  integer("curve_points", s.curve_points);
  integer("threads", s.threads);
}

toml::array vec2_array(const Vec2& v) { return toml::array{v.x(), v.y()}; }

}  // namespace

void ExperimentConfig::validate() const {
  if (eps_list.empty()) fail("eps_list is empty");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0 && eps_list[i] <= 1)) fail("eps values must lie in (0, 1]");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1])) fail("eps_list must be strictly decreasing");
  }
  if (!(T > 0)) fail("T must be positive");
  if (n_paths < 100) fail("n_paths must be >= 100");
  for (const auto& m : metrics)
    if (m != "moments" && m != "sliced_wasserstein" && m != "covariance_curve") fail("unknown metric '" + m + "'");
  if (!(t0 >= s0 && t0 < s0 + T)) fail("t0 must lie in [s0, s0 + T)");
  const auto& s = solver;
  if (!(s.substep_c > 0 && s.substep_c <= 1)) fail("substep_c must lie in (0, 1]");
  if (s.macro_per_unit < 1) fail("macro_per_unit must be >= 1");
  if (s.bank_nodes < 4) fail("bank_nodes must be >= 4");
  if (!(s.tol > 0 && s.tol < 1)) fail("tol must lie in (0, 1)");
  if (!(s.aux_dt > 0 && s.aux_dt <= 0.1)) fail("aux_dt must lie in (0, 0.1]");
  if (!(s.h_y >= 1e-4 && s.h_y <= 0.1)) fail("h_y must lie in [1e-4, 0.1]");
  if (s.coeff_samples < 1000) fail("coeff_samples must be >= 1000");
  if (s.coeff_grid.nx < 1 || s.coeff_grid.ny < 1) fail("coeff_nodes must be >= 1");
  if (!(s.limit_dt > 0 && s.limit_dt <= 1e-2)) fail("limit_dt must lie in (0, 1e-2]");
  if (s.pde_nodes < 3) fail("pde_nodes must be >= 3");
  if (s.pde_half_width < 0) fail("pde_half_width must be >= 0");
  if (s.bootstrap < 0) fail("bootstrap must be >= 0");
  if (s.curve_points < 1) fail("curve_points must be >= 1");
  if (s.threads < 1) fail("threads must be >= 1");
}

std::vector<Vec2> ExperimentConfig::probe_points() const {
  if (!probes.empty()) return probes;
  std::vector<Vec2> out;
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j) out.emplace_back(0.5 * i, 0.5 * j);
  return out;
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  using J = nlohmann::ordered_json;
  J modes_j;
  modes_j["gamma0"] = modes.gamma0();
  modes_j["sigma_star"] = modes.sigma_star();
  J ks = J::array(), as = J::array(), ss = J::array();
  for (const auto& m : modes.modes()) {
    ks.push_back({m.k.x(), m.k.y()});
    as.push_back(m.alpha.describe());
    ss.push_back(m.sigma.describe());
  }
  modes_j["k"] = ks;
  modes_j["alpha"] = as;
  modes_j["sigma"] = ss;
  J exp;
  exp["eps_list"] = eps_list;
  exp["T"] = T;
  exp["n_paths"] = n_paths;
  exp["metrics"] = metrics;
  exp["seed"] = seed;
  exp["output_dir"] = output_dir;
  exp["x0"] = {x0.x(), x0.y()};
  exp["s0"] = s0;
  exp["t0"] = t0;
  J pr = J::array();
  for (const auto& p : probe_points()) pr.push_back({p.x(), p.y()});
  exp["probes"] = pr;
  exp["u0"] = u0;
  exp["average_probe"] = average_probe;
  const auto& s = solver;
  J sol;
  sol["substep_c"] = s.substep_c;
  sol["macro_per_unit"] = s.macro_per_unit;
  sol["bank_nodes"] = s.bank_nodes;
  sol["tol"] = s.tol;
  sol["aux_dt"] = s.aux_dt;
  sol["h_y"] = s.h_y;
  sol["coeff_samples"] = s.coeff_samples;
  sol["coeff_box"] = {s.coeff_grid.x_min, s.coeff_grid.x_max, s.coeff_grid.y_min, s.coeff_grid.y_max};
  sol["coeff_nodes"] = {s.coeff_grid.nx, s.coeff_grid.ny};
  sol["limit_dt"] = s.limit_dt;
  sol["pde_nodes"] = s.pde_nodes;
  sol["pde_half_width"] = s.pde_half_width;
  sol["bootstrap"] = s.bootstrap;
  sol["curve_points"] = s.curve_points;
  // threads excluded
  J out;
  out["modes"] = modes_j;
  out["experiment"] = exp;
  out["solver"] = sol;
  return out;
}

std::string ExperimentConfig::content_hash() const {
  auto j = to_json();
  j["experiment"].erase("output_dir");
  return fnv1a_hex(j.dump());
}

ExperimentConfig parse_config(std::string_view text) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config: " << e.description() << " at line " << e.source().begin.line;
    throw std::invalid_argument(msg.str());
  }
  ExperimentConfig cfg;
  for (const auto& [key, node] : root) {
    const std::string k(key.str());
    if (k != "modes" && k != "experiment" && k != "solver") fail("unknown section [" + k + "]");
    if (!node.is_table()) fail("'" + k + "' must be a section");
  }
  if (auto t = root["modes"].as_table()) cfg.modes = parse_modes(*t);
  if (auto t = root["experiment"].as_table()) parse_experiment(*t, cfg);
  if (auto t = root["solver"].as_table()) parse_solver(*t, cfg.solver);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_toml(const ExperimentConfig& cfg) {
  toml::table modes, exp, sol;
  modes.insert("gamma0", cfg.modes.gamma0());
  modes.insert("sigma_star", cfg.modes.sigma_star());
  toml::array ks, as, ss;
  for (const auto& m : cfg.modes.modes()) {
    ks.push_back(vec2_array(m.k));
    as.push_back(m.alpha.describe());
    ss.push_back(m.sigma.describe());
  }
  modes.insert("k", ks);
  modes.insert("alpha", as);
  modes.insert("sigma", ss);
  toml::array eps;
  for (double e : cfg.eps_list) eps.push_back(e);
  exp.insert("eps_list", eps);
  exp.insert("T", cfg.T);
  exp.insert("n_paths", static_cast<std::int64_t>(cfg.n_paths));
  toml::array metrics;
  for (const auto& m : cfg.metrics) metrics.push_back(m);
  exp.insert("metrics", metrics);
  if (cfg.seed > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
    exp.insert("seed", std::to_string(cfg.seed));
  else
    exp.insert("seed", static_cast<std::int64_t>(cfg.seed));
  exp.insert("output_dir", cfg.output_dir);
  exp.insert("x0", vec2_array(cfg.x0));
  exp.insert("s0", cfg.s0);
  exp.insert("t0", cfg.t0);
  toml::array probes;
  for (const auto& p : cfg.probe_points()) probes.push_back(vec2_array(p));
  exp.insert("probes", probes);
  exp.insert("u0", cfg.u0);
  exp.insert("average_probe", cfg.average_probe);
  const auto& s = cfg.solver;
  sol.insert("substep_c", s.substep_c);
  sol.insert("macro_per_unit", s.macro_per_unit);
  sol.insert("bank_nodes", s.bank_nodes);
  sol.insert("tol", s.tol);
  sol.insert("aux_dt", s.aux_dt);
  sol.insert("h_y", s.h_y);
  sol.insert("coeff_samples", static_cast<std::int64_t>(s.coeff_samples));
  sol.insert("coeff_box", toml::array{s.coeff_grid.x_min, s.coeff_grid.x_max, s.coeff_grid.y_min, s.coeff_grid.y_max});
  sol.insert("coeff_nodes", toml::array{s.coeff_grid.nx, s.coeff_grid.ny});
  sol.insert("limit_dt", s.limit_dt);
  sol.insert("pde_nodes", s.pde_nodes);
  sol.insert("pde_half_width", s.pde_half_width);
  sol.insert("bootstrap", s.bootstrap);
  sol.insert("curve_points", s.curve_points);
  sol.insert("threads", s.threads);
  std::ostringstream out;
  out << "[modes]\n" << modes << "\n\n[experiment]\n" << exp << "\n\n[solver]\n" << sol << '\n';
  return out.str();
}

}  // namespace phom
