#include "hictl/cli/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "hictl/error.hpp"
#include "hictl/trainer/checkpoint.hpp"

#ifndef HICTL_GIT_DESCRIBE
#define HICTL_GIT_DESCRIBE "unknown"
#endif

namespace hictl::cli {

InputDigest digest_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read input " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(train::fnv1a64(bytes.data(), bytes.size())));
  return {path.string(), bytes.size(), hex};
}

std::string git_describe() { return HICTL_GIT_DESCRIBE; }

std::string manifest_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["config"] = m.config;
  nlohmann::ordered_json seeds = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.seeds) seeds[k] = v;
  j["seeds"] = seeds;
  j["inputs"] = nlohmann::ordered_json::array();
  for (const auto& d : m.inputs) j["inputs"].push_back({{"path", d.path}, {"bytes", d.bytes}, {"fnv1a64", d.fnv1a64}});
  j["outputs"] = m.outputs;
  j["wall_seconds"] = m.wall_seconds;
  j["git_describe"] = m.git_describe;
  return j.dump(2) + "\n";
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << manifest_json(m);
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read manifest " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed manifest " + path.string() + ": " + e.what());
  }
  RunManifest m;
  if (!j.contains("command") || !j.contains("config")) throw ConfigError("manifest lacks command or config");
  m.command = j["command"].get<std::string>();
  m.config = j["config"].get<ConfigMap>();
  return m;
}

}  // namespace hictl::cli
