#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace splitnet {

// One manifest is written next to the outputs of every CLI command; rerunning
// with an identical manifest reproduces identical outputs (timing excepted).
struct RunManifest {
  std::string command;
  nlohmann::json config;  // resolved snapshot, flags already folded in
  std::string tool_version;
  std::uint64_t base_seed = 0;
  std::vector<std::pair<std::string, std::string>> input_hashes;  // path, fnv1a-64 hex
  std::vector<std::string> output_paths;
  std::string started_at;
  std::string finished_at;
};

std::string tool_version();

// FNV-1a 64-bit hash of a file's bytes, hex-encoded.
std::string hash_file(const std::string& path);
std::string hash_bytes(const std::string& bytes);

nlohmann::json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& j);
void write_manifest(const RunManifest& manifest, const std::string& path);

std::string timestamp_now();

}  // namespace splitnet
