#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace logforge {

/// Plain-text `key = value` configuration. Lines starting with '#' and blank
/// lines are ignored; keys may repeat (pools, pattern lists).
class KeyValueConfig {
 public:
  static KeyValueConfig parse_string(const std::string& text);
  static KeyValueConfig parse_file(const std::string& path);

  bool has(const std::string& key) const;

  /// Value of a key that must occur exactly once.
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const;
  double get_double_or(const std::string& key, double fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;

  /// All values of a repeatable key, in file order.
  std::vector<std::string> get_all(const std::string& key) const;

  /// Throws ConfigError if any key is not in `allowed`.
  void require_known_keys(const std::set<std::string>& allowed) const;

  const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }

 private:
  std::vector<std::pair<std::string, std::string>> items_;
};

/// Splits on commas, trims surrounding whitespace from each piece.
std::vector<std::string> split_csv(const std::string& value);

}  // namespace logforge
