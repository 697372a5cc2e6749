#include "splitnet/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "splitnet/errors.hpp"

namespace splitnet {

std::string tool_version() { return "0.1.0"; }

std::string hash_bytes(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string hash_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open for hashing: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return hash_bytes(ss.str());
}

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& [path, hash] : m.input_hashes)
    inputs.push_back({{"path", path}, {"hash", hash}});
  return nlohmann::json{{"schema_version", 1},
                        {"command", m.command},
                        {"config", m.config},
                        {"tool_version", m.tool_version},
                        {"base_seed", m.base_seed},
                        {"input_hashes", inputs},
                        {"output_paths", m.output_paths},
                        {"started_at", m.started_at},
                        {"finished_at", m.finished_at}};
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.config = j.at("config");
  m.tool_version = j.value("tool_version", "");
  m.base_seed = j.value("base_seed", std::uint64_t{0});
  for (const auto& e : j.value("input_hashes", nlohmann::json::array()))
    m.input_hashes.emplace_back(e.at("path").get<std::string>(), e.at("hash").get<std::string>());
  m.output_paths = j.value("output_paths", std::vector<std::string>{});
  m.started_at = j.value("started_at", "");
  m.finished_at = j.value("finished_at", "");
  return m;
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  os << to_json(manifest).dump(2) << "\n";
}

}  // namespace splitnet
