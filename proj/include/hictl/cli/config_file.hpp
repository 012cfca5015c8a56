#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace hictl::cli {

/// Resolved settings of one run, key -> textual value.
using ConfigMap = std::map<std::string, std::string>;

/// Flat "key = value" lines; '#' starts a comment, blank lines are ignored.
/// Throws ConfigError with the line number on malformed lines or
/// duplicate keys.
ConfigMap parse_config(const std::string& text, const std::string& origin = "config");
ConfigMap read_config_file(const std::filesystem::path& path);
std::string format_config(const ConfigMap& cfg);

/// Throws ConfigError naming the first key not in `known`.
void require_known_keys(const ConfigMap& cfg, const std::set<std::string>& known);

// Typed access; a missing key or an unparsable value throws ConfigError
// naming the key.
std::string get_string(const ConfigMap& cfg, const std::string& key);
std::int64_t get_int(const ConfigMap& cfg, const std::string& key);
std::uint64_t get_uint(const ConfigMap& cfg, const std::string& key);
double get_double(const ConfigMap& cfg, const std::string& key);
bool get_bool(const ConfigMap& cfg, const std::string& key);
/// Comma-separated list; empty string gives an empty list.
std::vector<std::string> get_list(const ConfigMap& cfg, const std::string& key);

}  // namespace hictl::cli
