#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hictl/cli/config_file.hpp"

namespace hictl::cli {

struct InputDigest {
  std::string path;
  std::uint64_t bytes = 0;
  std::string fnv1a64;  // hex
};

/// Record of one command invocation; `config` holds every resolved
/// setting, so running the same command with it reproduces the outputs.
struct RunManifest {
  std::string command;
  ConfigMap config;
  std::vector<std::pair<std::string, std::uint64_t>> seeds;
  std::vector<InputDigest> inputs;
  std::vector<std::string> outputs;
  double wall_seconds = 0.0;
  std::string git_describe;
};

InputDigest digest_file(const std::filesystem::path& path);
std::string git_describe();

std::string manifest_json(const RunManifest& m);
void write_manifest(const std::filesystem::path& path, const RunManifest& m);
/// Command name and config of a manifest file.
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace hictl::cli
