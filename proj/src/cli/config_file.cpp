#include "hictl/cli/config_file.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "hictl/error.hpp"

namespace hictl::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* kind) {
  throw ConfigError("config key '" + key + "': expected " + kind + ", got '" + value + "'");
}

template <class V>
V parse_number(const ConfigMap& cfg, const std::string& key, const char* kind) {
  const std::string s = get_string(cfg, key);
  V v{};
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (s.empty() || r.ec != std::errc() || r.ptr != end) bad_value(key, s, kind);
  return v;
}

}  // namespace

ConfigMap parse_config(const std::string& text, const std::string& origin) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    const std::string where = origin + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (!out.emplace(key, trim(std::string_view(t).substr(eq + 1))).second) {
      throw ConfigError(where + ": duplicate key '" + key + "'");
    }
  }
  return out;
}

ConfigMap read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string format_config(const ConfigMap& cfg) {
  std::string out;
  for (const auto& [k, v] : cfg) out += k + " = " + v + "\n";
  return out;
}

void require_known_keys(const ConfigMap& cfg, const std::set<std::string>& known) {
  for (const auto& [k, v] : cfg) {
    if (!known.contains(k)) throw ConfigError("unknown config key '" + k + "'");
  }
}

std::string get_string(const ConfigMap& cfg, const std::string& key) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

std::int64_t get_int(const ConfigMap& cfg, const std::string& key) { return parse_number<std::int64_t>(cfg, key, "an integer"); }

std::uint64_t get_uint(const ConfigMap& cfg, const std::string& key) {
  return parse_number<std::uint64_t>(cfg, key, "a non-negative integer");
}

double get_double(const ConfigMap& cfg, const std::string& key) { return parse_number<double>(cfg, key, "a number"); }

bool get_bool(const ConfigMap& cfg, const std::string& key) {
  const std::string s = get_string(cfg, key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  bad_value(key, s, "true or false");
}

std::vector<std::string> get_list(const ConfigMap& cfg, const std::string& key) {
  std::vector<std::string> out;
  std::stringstream ss(get_string(cfg, key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace hictl::cli
