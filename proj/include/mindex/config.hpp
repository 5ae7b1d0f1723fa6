#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mindex/types.hpp"

namespace mindex {

using Json = nlohmann::json;

/// Validated run configuration. Keys are dotted paths ("adam.lr"); every key
/// has a declared type and bounds, and nothing outside that table is accepted.
class RunConfig {
 public:
  /// All defaults with the "desk" preset applied.
  RunConfig();

  const Json& at(const std::string& key) const;
  bool is_null(const std::string& key) const { return at(key).is_null(); }

  double num(const std::string& key) const { return at(key).get<double>(); }
  long long integer(const std::string& key) const { return at(key).get<long long>(); }
  bool flag(const std::string& key) const { return at(key).get<bool>(); }
  std::string str(const std::string& key) const { return at(key).get<std::string>(); }
  std::optional<double> opt_num(const std::string& key) const;
  std::optional<long long> opt_integer(const std::string& key) const;
  std::vector<double> num_list(const std::string& key) const;
  std::vector<long long> int_list(const std::string& key) const;
  std::vector<std::string> str_list(const std::string& key) const;

  /// Validates and stores one value; throws ParseError naming the key.
  void set(const std::string& key, const Json& value);

  std::uint64_t seed() const { return static_cast<std::uint64_t>(integer("seed")); }

  /// Nested JSON of every key, sorted.
  Json effective_config() const;
  /// FNV-1a of the compact effective_config dump.
  std::uint64_t hash() const;
  std::string hash_hex() const;

  const std::map<std::string, Json>& values() const { return values_; }

 private:
  std::map<std::string, Json> values_;
};

/// Names of every accepted key, in declaration order.
std::vector<std::string> config_keys();

/// Parses "key = value" lines with optional [section] headers; values are
/// JSON literals (numbers, "strings", true/false, null, [arrays]). '#' starts a comment.
std::vector<std::pair<std::string, Json>> parse_config_text(const std::string& text);

/// Reads a config file. A .json file may be a flat/nested key object or any
/// output report carrying an `effective_config` object.
std::vector<std::pair<std::string, Json>> read_config_file(const std::string& path);

/// Parses a flag value: JSON if it parses, else a plain string.
Json parse_flag_value(const std::string& text);

/// Preset overrides ("desk" is empty, "full" widens the experiment grids).
std::vector<std::pair<std::string, Json>> preset_values(const std::string& name);

/// defaults < preset < file < flags. The preset name is taken from the flags,
/// then the file, then the default.
RunConfig parse_config(const std::optional<std::string>& path,
                       const std::vector<std::pair<std::string, Json>>& flags = {});

}  // namespace mindex
