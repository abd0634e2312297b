#include "phom/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace phom {

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_real(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_ensemble_csv(std::ostream& out, const TrajectoryEnsemble& ens) {
  out << "path_id,t,x1,x2\n";
  std::string line;
  for (std::size_t p = 0; p < ens.paths.size(); ++p) {
    const auto& path = ens.paths[p];
    for (std::size_t k = 0; k < path.size(); ++k) {
      line = std::to_string(p);
      line += ',';
      line += format_real(ens.times[k]);
      line += ',';
      line += format_real(path[k].x());
      line += ',';
      line += format_real(path[k].y());
      line += '\n';
      out << line;
    }
  }
}

nlohmann::ordered_json ensemble_sidecar(const TrajectoryEnsemble& ens, const nlohmann::ordered_json& config) {
  nlohmann::ordered_json j;
  j["kind"] = ens.kind;
  j["eps"] = ens.eps;
  j["seed"] = ens.seed;
  j["modes_fingerprint"] = ens.modes_fingerprint;
  j["n_paths"] = ens.paths.size();
  j["n_times"] = ens.times.size();
  j["t_first"] = ens.times.empty() ? 0.0 : ens.times.front();
  j["t_last"] = ens.times.empty() ? 0.0 : ens.times.back();
  j["columns"] = {"path_id", "t", "x1", "x2"};
  j["config"] = config;
  return j;
}

void write_text_file(const std::string& path, std::string_view text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

void write_json_file(const std::string& path, const nlohmann::ordered_json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

void write_ensemble(const std::string& dir, const std::string& stem, const TrajectoryEnsemble& ens,
                    const nlohmann::ordered_json& config) {
  std::ostringstream csv;
  write_ensemble_csv(csv, ens);
  const std::filesystem::path base(dir);
  write_text_file((base / (stem + ".csv")).string(), csv.str());
  write_json_file((base / (stem + ".json")).string(), ensemble_sidecar(ens, config));
}

}  // namespace phom
