#include "logforge/validator.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace logforge {

void write_rules(const std::string& path, const CoherenceRuleSet& rules) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open rules file for writing: " + path);
  for (const CoherenceRule& r : rules.rules) {
    out << r.precondition_code << '\t' << r.dependent_code << '\t' << r.support << '\n';
  }
}

CoherenceRuleSet read_rules(const std::string& path) {
  CoherenceRuleSet set;
  for (const std::string& line : read_lines(path)) {
    if (line.empty()) continue;
    std::istringstream in(line);
    CoherenceRule r;
    std::string support;
    if (!std::getline(in, r.precondition_code, '\t') ||
        !std::getline(in, r.dependent_code, '\t') || !std::getline(in, support)) {
      throw std::runtime_error("malformed rule line: " + line);
    }
    r.support = static_cast<std::size_t>(std::stoull(support));
    set.rules.push_back(std::move(r));
  }
  return set;
}

EventCodeLexicon mine_lexicon(const std::vector<LogEntry>& entries, std::size_t min_count) {
  std::map<std::string, std::size_t> freq;
  for (const LogEntry& e : entries) ++freq[e.event_code];
  EventCodeLexicon lex;
  for (auto& [code, n] : freq) {
    if (n >= min_count) lex.codes.insert(code);
  }
  return lex;
}

double PropertyReport::date_time_rate() const {
  return line_count ? static_cast<double>(date_time_pass) / line_count : 1.0;
}
double PropertyReport::event_id_rate() const {
  return line_count ? static_cast<double>(event_id_pass) / line_count : 1.0;
}
double PropertyReport::description_rate() const {
  return line_count ? static_cast<double>(description_pass) / line_count : 1.0;
}

std::string PropertyReport::to_json() const {
  nlohmann::json j;
  j["line_count"] = line_count;
  j["syntactic"] = {
      {"date_time_pass_rate", date_time_rate()},
      {"event_id_pass_rate", event_id_rate()},
      {"description_pass_rate", description_rate()},
  };
  nlohmann::json sem;
  if (chronology_checked) sem["chronology_ok"] = chronology_ok;
  if (coherence_checked) sem["coherence_ok"] = coherence_ok;
  j["semantic"] = sem;
  nlohmann::json v = nlohmann::json::array();
  for (const Violation& viol : violations) {
    v.push_back({{"index", viol.index}, {"property", viol.property}, {"reason", viol.reason}});
  }
  j["violations"] = v;
  return j.dump(2);
}

namespace {

bool code_shape_ok(const std::string& code) {
  return !code.empty() && code.size() <= 32;
}

/// Strict split on single separators: a run of two blanks yields an empty
/// field, which marks the excess-whitespace defect cleansing repairs.
std::vector<std::string> split_strict(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ' ' || c == '\t') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

PropertyReport check_syntactic(const std::vector<std::string>& lines, const FieldSchema& schema,
                               const EventCodeLexicon& lexicon) {
  PropertyReport report;
  report.line_count = lines.size();
  report.per_line.reserve(lines.size());

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::vector<std::string> fields = split_strict(lines[i]);
    SyntacticVerdict v;

    std::size_t pos = 0;
    std::string ts_text;
    std::string ts_reason = "no timestamp field";
    if (pos < fields.size() && !fields[pos].empty()) {
      ts_text = fields[pos];
      ++pos;
      if (ts_text.size() == 10 && ts_text[4] == '-' && ts_text[7] == '-' &&
          schema.allows(TimestampStyle::kSpaceSeparated) && pos < fields.size() &&
          !fields[pos].empty()) {
        ts_text += ' ';
        ts_text += fields[pos];
        ++pos;
      }
      auto r = parse_timestamp_checked(ts_text, schema);
      if (auto* err = std::get_if<TimestampError>(&r)) {
        ts_reason = std::string(to_string(err->reason));
      } else {
        v.date_time_ok = true;
      }
    }
    if (!v.date_time_ok) {
      report.violations.push_back({i, "date_time", ts_reason});
    }

    if (pos < fields.size() && !fields[pos].empty()) {
      const std::string& code = fields[pos];
      v.event_id_ok = lexicon.empty() ? code_shape_ok(code) : lexicon.codes.count(code) > 0;
      if (!v.event_id_ok) {
        report.violations.push_back(
            {i, "event_id", lexicon.empty() ? "bad code shape" : "unknown code: " + code});
      }
      ++pos;
    } else {
      report.violations.push_back({i, "event_id", "no event code field"});
    }

    // Description: everything after the code, with no empty fields (an empty
    // field inside the remainder is collapsed-away whitespace noise).
    std::size_t desc_fields = 0;
    bool desc_clean = true;
    for (std::size_t f = pos; f < fields.size(); ++f) {
      if (fields[f].empty())
        desc_clean = false;
      else
        ++desc_fields;
    }
    const std::size_t needed = static_cast<std::size_t>(schema.field_count) - 2;
    v.description_ok = desc_clean && desc_fields >= needed;
    if (!v.description_ok) {
      report.violations.push_back(
          {i, "description", desc_fields < needed ? "missing description" : "excess whitespace"});
    }

    report.date_time_pass += v.date_time_ok;
    report.event_id_pass += v.event_id_ok;
    report.description_pass += v.description_ok;
    report.per_line.push_back(v);
  }
  return report;
}

namespace {

FileOrder detect_direction(const std::vector<LogEntry>& entries) {
  for (std::size_t i = 1; i < entries.size(); ++i) {
    auto a = entries[i - 1].timestamp.instant();
    auto b = entries[i].timestamp.instant();
    if (a < b) return FileOrder::kAscending;
    if (b < a) return FileOrder::kDescending;
  }
  return FileOrder::kAscending;  // all equal: vacuously consistent
}

}  // namespace

ChronologyResult check_chronology(const LogFile& file, OrderPolicy order) {
  ChronologyResult result;
  const auto& entries = file.entries;
  switch (order) {
    case OrderPolicy::kAscending: result.direction = FileOrder::kAscending; break;
    case OrderPolicy::kDescending: result.direction = FileOrder::kDescending; break;
    case OrderPolicy::kAuto: result.direction = detect_direction(entries); break;
  }
  const bool ascending = result.direction == FileOrder::kAscending;
  for (std::size_t i = 1; i < entries.size(); ++i) {
    auto prev = entries[i - 1].timestamp.instant();
    auto cur = entries[i].timestamp.instant();
    const bool bad = ascending ? cur < prev : prev < cur;
    if (bad) {
      result.ok = false;
      result.violations.push_back(
          {i, "chronology",
           format_timestamp(entries[i].timestamp) + (ascending ? " before " : " after ") +
               format_timestamp(entries[i - 1].timestamp)});
    }
  }
  return result;
}

namespace {

/// Entry indices in chronological order: file order for ascending files,
/// reversed for descending ones.
std::vector<std::size_t> chronological_order(const LogFile& file) {
  std::vector<std::size_t> order(file.entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  FileOrder dir = file.declared_order;
  if (dir == FileOrder::kUnknown) dir = detect_direction(file.entries);
  if (dir == FileOrder::kDescending) std::reverse(order.begin(), order.end());
  return order;
}

}  // namespace

CoherenceResult check_coherence(const LogFile& file, const CoherenceRuleSet& rules) {
  CoherenceResult result;
  if (rules.empty() || file.entries.empty()) return result;

  const std::vector<std::size_t> order = chronological_order(file);
  std::set<std::string> seen;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t idx = order[pos];
    const std::string& code = file.entries[idx].event_code;
    for (const CoherenceRule& rule : rules.rules) {
      if (rule.dependent_code == code && !seen.count(rule.precondition_code)) {
        result.ok = false;
        result.violations.push_back(
            {idx, "coherence", code + " without preceding " + rule.precondition_code});
      }
    }
    seen.insert(code);
  }
  return result;
}

CoherenceRuleSet mine_rules(const std::vector<LogFile>& corpus, std::size_t min_support) {
  // For each dependent code B: how many files contain it, and which codes
  // precede its first occurrence in every one of those files.
  std::map<std::string, std::size_t> file_count;
  std::map<std::string, std::set<std::string>> always_before;

  for (const LogFile& file : corpus) {
    const std::vector<std::size_t> order = chronological_order(file);
    std::set<std::string> seen;
    std::map<std::string, std::set<std::string>> first_preceders;
    for (std::size_t idx : order) {
      const std::string& code = file.entries[idx].event_code;
      if (!first_preceders.count(code)) first_preceders[code] = seen;
      seen.insert(code);
    }
    for (auto& [code, preceders] : first_preceders) {
      auto [it, inserted] = always_before.try_emplace(code, preceders);
      if (!inserted) {
        std::set<std::string> merged;
        std::set_intersection(it->second.begin(), it->second.end(), preceders.begin(),
                              preceders.end(), std::inserter(merged, merged.begin()));
        it->second = std::move(merged);
      }
      ++file_count[code];
    }
  }

  CoherenceRuleSet out;
  for (auto& [dependent, preceders] : always_before) {
    if (file_count[dependent] < min_support) continue;
    for (const std::string& pre : preceders) {
      if (pre == dependent) continue;
      out.rules.push_back({pre, dependent, file_count[dependent]});
    }
  }
  std::sort(out.rules.begin(), out.rules.end(), [](const CoherenceRule& a, const CoherenceRule& b) {
    if (a.precondition_code != b.precondition_code)
      return a.precondition_code < b.precondition_code;
    return a.dependent_code < b.dependent_code;
  });
  return out;
}

PropertyReport validate_lines(const std::vector<std::string>& lines, const FieldSchema& schema,
                              OrderPolicy order, const CoherenceRuleSet& rules,
                              const EventCodeLexicon& lexicon) {
  PropertyReport report = check_syntactic(lines, schema, lexicon);

  ParsedLines parsed = parse_lines(lines, schema);
  LogFile file{std::move(parsed.entries), FileOrder::kUnknown};

  ChronologyResult chrono = check_chronology(file, order);
  report.chronology_checked = true;
  report.chronology_ok = chrono.ok;
  for (Violation& v : chrono.violations) {
    v.index = parsed.entry_lines[v.index];  // map entry index back to source line
    report.violations.push_back(std::move(v));
  }

  if (!rules.empty()) {
    CoherenceResult coher = check_coherence(file, rules);
    report.coherence_checked = true;
    report.coherence_ok = coher.ok;
    for (Violation& v : coher.violations) {
      v.index = parsed.entry_lines[v.index];
      report.violations.push_back(std::move(v));
    }
  }
  return report;
}

}  // namespace logforge
