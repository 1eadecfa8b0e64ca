#include "logforge/log_entry.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "logforge/config.hpp"

namespace logforge {

namespace {

bool is_blank(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v' || c == '\n';
}

bool all_digits(const std::string& s, std::size_t from, std::size_t count) {
  for (std::size_t i = from; i < from + count; ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  return true;
}

int num(const std::string& s, std::size_t from, std::size_t count) {
  int v = 0;
  for (std::size_t i = from; i < from + count; ++i) v = v * 10 + (s[i] - '0');
  return v;
}

bool valid_calendar(int year, int month, int day) {
  using namespace std::chrono;
  return year_month_day{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                        std::chrono::day{static_cast<unsigned>(day)}}
      .ok();
}

std::variant<Timestamp, TimestampError> check_ranges(int y, int mo, int d, int h, int mi, int s,
                                                     TimestampStyle style,
                                                     const std::string& src) {
  if (!valid_calendar(y, mo, d) || h > 23 || mi > 59 || s > 59) {
    return TimestampError{TimestampErrorReason::kOutOfRange, src};
  }
  return Timestamp{y, mo, d, h, mi, s, style};
}

}  // namespace

const char* to_string(TimestampStyle style) {
  switch (style) {
    case TimestampStyle::kTSeparated: return "t_separated";
    case TimestampStyle::kSpaceSeparated: return "space_separated";
    case TimestampStyle::kCompact: return "compact";
  }
  return "?";
}

std::optional<TimestampStyle> timestamp_style_from_string(const std::string& name) {
  if (name == "t_separated" || name == "t") return TimestampStyle::kTSeparated;
  if (name == "space_separated" || name == "space") return TimestampStyle::kSpaceSeparated;
  if (name == "compact") return TimestampStyle::kCompact;
  return std::nullopt;
}

const char* to_string(FileOrder order) {
  switch (order) {
    case FileOrder::kAscending: return "ascending";
    case FileOrder::kDescending: return "descending";
    case FileOrder::kUnknown: return "unknown";
  }
  return "?";
}

bool FieldSchema::allows(TimestampStyle style) const {
  return std::find(timestamp_formats.begin(), timestamp_formats.end(), style) !=
         timestamp_formats.end();
}

void FieldSchema::validate() const {
  if (field_count < 3) throw ConfigError("field_count must be >= 3");
  if (timestamp_formats.empty()) throw ConfigError("no timestamp formats accepted");
}

FieldSchema FieldSchema::load(const std::string& path) {
  KeyValueConfig cfg = KeyValueConfig::parse_file(path);
  cfg.require_known_keys({"timestamp_formats", "separator", "field_count"});
  FieldSchema schema;
  if (cfg.has("timestamp_formats")) {
    schema.timestamp_formats.clear();
    for (const std::string& name : split_csv(cfg.get("timestamp_formats"))) {
      auto style = timestamp_style_from_string(name);
      if (!style) throw ConfigError("unknown timestamp format: " + name);
      schema.timestamp_formats.push_back(*style);
    }
  }
  std::string sep = cfg.get_or("separator", "space");
  if (sep == "space")
    schema.separator = " ";
  else if (sep == "tab")
    schema.separator = "\t";
  else
    throw ConfigError("unknown separator: " + sep);
  schema.field_count = static_cast<int>(cfg.get_int_or("field_count", 3));
  schema.validate();
  return schema;
}

std::variant<Timestamp, TimestampError> parse_timestamp_checked(const std::string& s,
                                                                const FieldSchema& schema) {
  const bool wants_t = schema.allows(TimestampStyle::kTSeparated);
  const bool wants_space = schema.allows(TimestampStyle::kSpaceSeparated);
  const bool wants_compact = schema.allows(TimestampStyle::kCompact);

  if (s.size() == 19 && (wants_t || wants_space)) {
    // YYYY-MM-DD?HH:MM:SS with ? in {'T', ' '}
    TimestampStyle style;
    if (s[10] == 'T' && wants_t)
      style = TimestampStyle::kTSeparated;
    else if (s[10] == ' ' && wants_space)
      style = TimestampStyle::kSpaceSeparated;
    else
      return TimestampError{TimestampErrorReason::kNonDigit, s};
    if (s[4] != '-' || s[7] != '-' || s[13] != ':' || s[16] != ':' || !all_digits(s, 0, 4) ||
        !all_digits(s, 5, 2) || !all_digits(s, 8, 2) || !all_digits(s, 11, 2) ||
        !all_digits(s, 14, 2) || !all_digits(s, 17, 2)) {
      return TimestampError{TimestampErrorReason::kNonDigit, s};
    }
    return check_ranges(num(s, 0, 4), num(s, 5, 2), num(s, 8, 2), num(s, 11, 2), num(s, 14, 2),
                        num(s, 17, 2), style, s);
  }

  if (s.size() == 15 && wants_compact) {
    // YYYYMMDDTHHMMSS
    if (s[8] != 'T') return TimestampError{TimestampErrorReason::kNonDigit, s};
    if (!all_digits(s, 0, 8) || !all_digits(s, 9, 6)) {
      return TimestampError{TimestampErrorReason::kNonDigit, s};
    }
    return check_ranges(num(s, 0, 4), num(s, 4, 2), num(s, 6, 2), num(s, 9, 2), num(s, 11, 2),
                        num(s, 13, 2), TimestampStyle::kCompact, s);
  }

  // No accepted notation has this length: excess or missing digits.
  return TimestampError{TimestampErrorReason::kBadLength, s};
}

Timestamp parse_timestamp(const std::string& s, const FieldSchema& schema) {
  auto r = parse_timestamp_checked(s, schema);
  if (auto* err = std::get_if<TimestampError>(&r)) {
    throw InvalidTimestamp(err->reason, err->detail);
  }
  return std::get<Timestamp>(r);
}

std::string format_timestamp(const Timestamp& t) {
  char buf[24];
  switch (t.style) {
    case TimestampStyle::kTSeparated:
      std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d", t.year, t.month, t.day,
                    t.hour, t.minute, t.second);
      break;
    case TimestampStyle::kSpaceSeparated:
      std::snprintf(buf, sizeof buf, "%04d-%02d-%02d %02d:%02d:%02d", t.year, t.month, t.day,
                    t.hour, t.minute, t.second);
      break;
    case TimestampStyle::kCompact:
      std::snprintf(buf, sizeof buf, "%04d%02d%02dT%02d%02d%02d", t.year, t.month, t.day, t.hour,
                    t.minute, t.second);
      break;
  }
  return buf;
}

std::string EntryError::message() const {
  if (kind == Kind::kInvalidTimestamp) {
    return std::string("invalid timestamp (") + logforge::to_string(timestamp_reason) + ")";
  }
  return "missing field: " + field;
}

std::variant<LogEntry, EntryError> parse_entry_checked(const std::string& line,
                                                       const FieldSchema& schema) {
  std::vector<std::string> tokens = split_tokens(line);
  if (tokens.empty() || !(tokens[0][0] >= '0' && tokens[0][0] <= '9')) {
    // Nothing that could start a date: the timestamp field itself is absent.
    return EntryError{EntryError::Kind::kMissingField, {}, "timestamp"};
  }

  std::size_t consumed = 1;
  std::string ts_text = tokens[0];
  // A date-only first token means the space-separated notation: time follows
  // in the next field.
  if (tokens[0].size() == 10 && tokens[0][4] == '-' && tokens[0][7] == '-' &&
      schema.allows(TimestampStyle::kSpaceSeparated) && tokens.size() >= 2) {
    ts_text += ' ';
    ts_text += tokens[1];
    consumed = 2;
  }

  auto ts = parse_timestamp_checked(ts_text, schema);
  if (auto* err = std::get_if<TimestampError>(&ts)) {
    return EntryError{EntryError::Kind::kInvalidTimestamp, err->reason, {}};
  }

  if (tokens.size() <= consumed) {
    return EntryError{EntryError::Kind::kMissingField, {}, "event_code"};
  }
  std::string code = tokens[consumed++];

  const std::size_t desc_needed = static_cast<std::size_t>(schema.field_count) - 2;
  if (tokens.size() < consumed + desc_needed) {
    return EntryError{EntryError::Kind::kMissingField, {}, "description"};
  }
  std::string desc;
  for (std::size_t i = consumed; i < tokens.size(); ++i) {
    if (!desc.empty()) desc += ' ';
    desc += tokens[i];
  }
  return LogEntry{std::get<Timestamp>(ts), std::move(code), std::move(desc)};
}

LogEntry parse_entry(const std::string& line, const FieldSchema& schema) {
  auto r = parse_entry_checked(line, schema);
  if (auto* err = std::get_if<EntryError>(&r)) {
    if (err->kind == EntryError::Kind::kInvalidTimestamp) {
      throw InvalidTimestamp(err->timestamp_reason, line);
    }
    throw MissingField(err->field);
  }
  return std::get<LogEntry>(r);
}

std::string serialize_entry(const LogEntry& e, const FieldSchema& schema) {
  if (e.event_code.empty()) throw std::invalid_argument("empty event code");
  for (char c : e.event_code) {
    if (is_blank(c)) throw std::invalid_argument("whitespace in event code");
  }
  if (e.description.find('\n') != std::string::npos) {
    throw std::invalid_argument("line break in description");
  }
  return format_timestamp(e.timestamp) + schema.separator + e.event_code + schema.separator +
         e.description;
}

std::string cleanse_whitespace(const std::string& line) {
  std::string out;
  out.reserve(line.size());
  bool pending_sep = false;
  for (char c : line) {
    if (is_blank(c)) {
      if (!out.empty()) pending_sep = true;
      continue;
    }
    if (pending_sep) {
      out += ' ';
      pending_sep = false;
    }
    out += c;
  }
  return out;
}

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_blank(line[i])) ++i;
    std::size_t start = i;
    while (i < line.size() && !is_blank(line[i])) ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

ParsedLines parse_lines(const std::vector<std::string>& lines, const FieldSchema& schema) {
  ParsedLines out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto r = parse_entry_checked(lines[i], schema);
    if (auto* err = std::get_if<EntryError>(&r)) {
      out.failures.push_back({i, err->message()});
    } else {
      out.entries.push_back(std::get<LogEntry>(std::move(r)));
      out.entry_lines.push_back(i);
    }
  }
  return out;
}

void write_log_file(const std::string& path, const LogFile& file, const FieldSchema& schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  for (const LogEntry& e : file.entries) {
    out << serialize_entry(e, schema) << '\n';
  }
}

}  // namespace logforge
