#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "logforge/log_entry.hpp"
#include "logforge/validator.hpp"

namespace logforge {

std::int64_t to_epoch_seconds(const Timestamp& t);
Timestamp from_epoch_seconds(std::int64_t seconds, TimestampStyle style);

struct WeightedCode {
  std::string code;
  double weight = 1.0;
};

/// Static generation recipe: independent pools for codes and description
/// patterns (their pairing carries no meaning, which is exactly what gives
/// static fakes away), plus a start time and a geometric inter-arrival gap.
struct GenTemplate {
  std::vector<WeightedCode> codes;
  std::vector<std::string> patterns;  // may contain {hex} {num} {word} {ver} slots
  Timestamp start;
  double mean_gap = 2.0;  // mean of the whole-second geometric gap; zero gaps allowed

  void validate() const;

  /// `key = value` file; `code = NAME WEIGHT` and `pattern = TEXT` repeat.
  static GenTemplate load(const std::string& path);
};

/// A small built-in recipe, handy for demos and tests.
GenTemplate default_template();

/// Derives a template from real entries: codes seen >= code_min_count (their
/// frequencies become weights), the most common descriptions as literal
/// patterns, and the earliest timestamp as start.
GenTemplate mine_template(const std::vector<LogEntry>& entries, std::size_t max_patterns = 20,
                          std::size_t code_min_count = 5);

/// n syntactically valid entries with monotone timestamps in the requested
/// direction (ties occur whenever the geometric gap draws zero). When rules
/// are given, precondition events are injected at random earlier slots until
/// check_coherence accepts the file. Byte-identical output per seed.
LogFile generate_static(const GenTemplate& tmpl, std::size_t n, std::uint64_t seed,
                        FileOrder order = FileOrder::kAscending,
                        const CoherenceRuleSet& rules = {});

}  // namespace logforge
