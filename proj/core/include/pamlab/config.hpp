#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pamlab {

/// Flat key-value configuration. Text form is one `key = value` per line,
/// `#` comments, and optional `[section]` headers that prefix the keys that
/// follow with `section.`. Keys are dotted paths ("covariance.eta").
class ConfigMap {
 public:
  ConfigMap() = default;

  static ConfigMap parse(std::string_view text);
  static ConfigMap load(const std::string& path);

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  void erase(const std::string& key);

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;

  /// Entries under `prefix.` with the prefix stripped.
  ConfigMap subtree(const std::string& prefix) const;
  /// Merge `other` under `prefix.` (empty prefix merges at top level).
  void merge(const ConfigMap& other, const std::string& prefix = "");

  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

  /// Sorted keys, trimmed values, numbers in shortest round-trip form.
  /// Semantically equal configurations produce identical text.
  std::string canonical_text() const;
  /// FNV-1a 64 of canonical_text(), as 16 hex digits.
  std::string hash() const;

 private:
  std::map<std::string, std::string> entries_;
};

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull);
std::string hex64(std::uint64_t value);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

/// Canonical form of a scalar or comma-separated list value.
std::string normalize_value(std::string_view value);

}  // namespace pamlab
