#pragma once

#include "netform/montecarlo.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace netform {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& message)
      : std::runtime_error(key.empty() ? message : key + ": " + message), key(key) {}
  std::string key;
};

// Flat "key = value" text with [section] headers; '#' starts a comment.
// Keys are addressed as "section.key".
class ConfigFile {
 public:
  static ConfigFile parse(std::istream& in, const std::string& base_dir = ".");
  static ConfigFile load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key, double fallback) const;
  long long integer(const std::string& key, long long fallback) const;
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<std::string> words(const std::string& key) const;

  // Keys present in the file but never read.
  std::vector<std::string> unused() const;
  const std::string& base_dir() const { return base_dir_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
  std::string base_dir_ = ".";
};

struct RunConfig {
  ExperimentConfig experiment;  // holds model, shocks, solver and estimation settings
  std::string source;
};

// Builds a run configuration; rejects unknown keys.
RunConfig build_run_config(const ConfigFile& file);
RunConfig load_run_config(const std::string& path);

// T^3 whitespace-separated table file, index order (own type, j type, k type).
TypeTable load_type_table(const std::string& path, int T);

}  // namespace netform
