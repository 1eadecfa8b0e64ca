#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "logforge/log_entry.hpp"

namespace logforge {

/// "A must precede B": every occurrence of dependent_code must have at least
/// one earlier occurrence of precondition_code, in chronological order.
struct CoherenceRule {
  std::string precondition_code;
  std::string dependent_code;
  std::size_t support = 0;  // files the rule was observed in

  bool operator==(const CoherenceRule&) const = default;
};

struct CoherenceRuleSet {
  std::vector<CoherenceRule> rules;
  bool empty() const { return rules.empty(); }
};

/// Lines: "PRECONDITION<TAB>DEPENDENT<TAB>SUPPORT".
void write_rules(const std::string& path, const CoherenceRuleSet& rules);
CoherenceRuleSet read_rules(const std::string& path);

/// Event codes considered known. When empty, the shape constraint
/// (1..32 non-whitespace chars) is the fallback check.
struct EventCodeLexicon {
  std::set<std::string> codes;
  bool empty() const { return codes.empty(); }
};

EventCodeLexicon mine_lexicon(const std::vector<LogEntry>& entries, std::size_t min_count = 5);

struct SyntacticVerdict {
  bool date_time_ok = false;
  bool event_id_ok = false;
  bool description_ok = false;
  bool all_ok() const { return date_time_ok && event_id_ok && description_ok; }
};

struct Violation {
  std::size_t index;     // line index (syntactic) or entry index (semantic)
  std::string property;  // date_time | event_id | description | chronology | coherence
  std::string reason;
};

/// Per-line syntactic verdicts plus file-level semantic verdicts, with pass
/// rates over the checked populations.
struct PropertyReport {
  std::size_t line_count = 0;
  std::vector<SyntacticVerdict> per_line;
  std::size_t date_time_pass = 0;
  std::size_t event_id_pass = 0;
  std::size_t description_pass = 0;

  bool chronology_checked = false;
  bool chronology_ok = true;
  bool coherence_checked = false;
  bool coherence_ok = true;

  std::vector<Violation> violations;

  double date_time_rate() const;
  double event_id_rate() const;
  double description_rate() const;

  std::string to_json() const;
};

enum class OrderPolicy : std::uint8_t { kAscending, kDescending, kAuto };

/// Per-line structural check of the three syntactic properties. Field
/// boundaries here are strict single separators, so excess whitespace fails
/// the affected property until the line is cleansed.
PropertyReport check_syntactic(const std::vector<std::string>& lines, const FieldSchema& schema,
                               const EventCodeLexicon& lexicon = {});

struct ChronologyResult {
  bool ok = true;
  FileOrder direction = FileOrder::kAscending;  // the direction checked
  std::vector<Violation> violations;
};

/// Non-strict monotonicity of entry timestamps: ties are always legal. kAuto
/// follows the first unequal adjacent pair, and an all-equal file passes.
ChronologyResult check_chronology(const LogFile& file, OrderPolicy order);

struct CoherenceResult {
  bool ok = true;
  std::vector<Violation> violations;
};

/// Every dependent occurrence must have a preceding precondition occurrence
/// in chronological order (file order for ascending files, reversed for
/// descending ones).
CoherenceResult check_coherence(const LogFile& file, const CoherenceRuleSet& rules);

/// Emits (A -> B) iff in every corpus file containing B some A occurs before
/// the first B, and B occurs in at least min_support files. Output is sorted
/// by (precondition, dependent).
CoherenceRuleSet mine_rules(const std::vector<LogFile>& corpus, std::size_t min_support);

/// Full report: syntactic per line, then semantic over the parseable entries.
PropertyReport validate_lines(const std::vector<std::string>& lines, const FieldSchema& schema,
                              OrderPolicy order, const CoherenceRuleSet& rules,
                              const EventCodeLexicon& lexicon = {});

}  // namespace logforge
