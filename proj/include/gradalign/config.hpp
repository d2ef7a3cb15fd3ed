#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace gradalign {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat `key = value` file: one pair per line, `#` starts a comment, blank
// lines ignored, the first `=` splits, surrounding whitespace trimmed.
// Duplicate keys are rejected, and callers name the keys they understand so
// a typo fails loudly instead of being silently ignored.
class Config {
 public:
  static Config load(const std::string& path);
  static Config parse(const std::string& text);

  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  // Throws ConfigError when any stored key is not in `allowed`.
  void require_known(const std::vector<std::string>& allowed) const;

  // Required lookups throw ConfigError when the key is absent or malformed.
  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Comma-separated doubles, e.g. `grid = 0.1, 0.2, 0.4`.
  std::vector<double> get_double_list(const std::string& key) const;

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace gradalign
