#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace boocap::pipeline {

/// Sectioned key=value settings. Every key is `section.name`; only keys with a
/// built-in default are accepted.
class Config {
 public:
  /// All keys at their defaults.
  Config();

  /// `[section]` headers, `name = value` lines, `#` or `;` comments.
  static Config parse(std::string_view text);
  static Config load(const std::string& path);

  /// Throws ConfigError for unknown keys.
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  bool is_set(const std::string& key) const { return !get(key).empty(); }

  long get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  /// Comma separated; empty string gives an empty list.
  std::vector<std::string> get_list(const std::string& key) const;

  /// Throws ConfigError when a configured input file does not exist.
  void check_paths() const;

  /// Sorted `key=value` lines of every setting that can change results
  /// (everything except run.jobs and paths.out).
  std::string canonical() const;
  std::string hash() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace boocap::pipeline
