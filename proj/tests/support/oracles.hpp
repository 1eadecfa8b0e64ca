#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "logforge/log_entry.hpp"
#include "logforge/validator.hpp"

namespace logforge::testing {

// Independent brute-force oracles. These re-derive the checked properties
// from first principles and must stay decoupled from the library paths they
// verify.

inline bool leap_year_oracle(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

inline bool calendar_ok_oracle(int y, int mo, int d, int h, int mi, int s) {
  static const int kLen[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (mo < 1 || mo > 12 || d < 1) return false;
  const int month_len = kLen[mo - 1] + (mo == 2 && leap_year_oracle(y) ? 1 : 0);
  return d <= month_len && h >= 0 && h <= 23 && mi >= 0 && mi <= 59 && s >= 0 && s <= 59;
}

/// Non-strict monotone in the given direction, by exhaustive pair comparison.
inline bool chronology_oracle(const LogFile& file, bool ascending) {
  const auto& e = file.entries;
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (std::size_t j = i + 1; j < e.size(); ++j) {
      const auto a = e[i].timestamp.instant();
      const auto b = e[j].timestamp.instant();
      if (ascending ? b < a : a < b) return false;
    }
  }
  return true;
}

/// For every dependent occurrence, scan backwards for a precondition.
inline std::size_t coherence_violations_oracle(const std::vector<std::string>& codes,
                                               const CoherenceRuleSet& rules) {
  std::size_t violations = 0;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    for (const CoherenceRule& rule : rules.rules) {
      if (rule.dependent_code != codes[i]) continue;
      bool found = false;
      for (std::size_t j = 0; j < i && !found; ++j) {
        if (codes[j] == rule.precondition_code) found = true;
      }
      if (!found) ++violations;
    }
  }
  return violations;
}

/// Direct scan over all (A, B) code pairs.
inline CoherenceRuleSet mine_rules_oracle(const std::vector<std::vector<std::string>>& files,
                                          std::size_t min_support) {
  std::set<std::string> all_codes;
  for (const auto& f : files)
    for (const auto& c : f) all_codes.insert(c);

  CoherenceRuleSet out;
  for (const std::string& pre : all_codes) {
    for (const std::string& dep : all_codes) {
      if (pre == dep) continue;
      std::size_t support = 0;
      bool holds = true;
      for (const auto& f : files) {
        std::size_t first_dep = f.size();
        for (std::size_t i = 0; i < f.size(); ++i) {
          if (f[i] == dep) {
            first_dep = i;
            break;
          }
        }
        if (first_dep == f.size()) continue;  // file has no dependent
        ++support;
        bool before = false;
        for (std::size_t i = 0; i < first_dep && !before; ++i) before = f[i] == pre;
        if (!before) {
          holds = false;
          break;
        }
      }
      if (holds && support >= min_support) out.rules.push_back({pre, dep, support});
    }
  }
  return out;
}

}  // namespace logforge::testing
