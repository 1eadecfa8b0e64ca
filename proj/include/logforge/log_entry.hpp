#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "logforge/errors.hpp"

namespace logforge {

/// Which notation a timestamp was written in. All three carry the same six
/// calendar fields; only the rendering differs.
enum class TimestampStyle : std::uint8_t {
  kTSeparated,      // 2021-09-30T14:00:07
  kSpaceSeparated,  // 2021-09-30 14:00:07
  kCompact,         // 20210930T140007
};

const char* to_string(TimestampStyle style);
std::optional<TimestampStyle> timestamp_style_from_string(const std::string& name);

struct Timestamp {
  int year = 1970;
  int month = 1;
  int day = 1;
  int hour = 0;
  int minute = 0;
  int second = 0;
  TimestampStyle style = TimestampStyle::kTSeparated;

  /// Calendar instant, for chronological comparison; ignores style.
  std::array<int, 6> instant() const { return {year, month, day, hour, minute, second}; }

  bool operator==(const Timestamp&) const = default;
};

/// One parsed log line: date/time, a short event code, free-text description.
struct LogEntry {
  Timestamp timestamp;
  std::string event_code;   // non-empty, no whitespace
  std::string description;  // no line breaks

  bool operator==(const LogEntry&) const = default;
};

enum class FileOrder : std::uint8_t { kAscending, kDescending, kUnknown };

const char* to_string(FileOrder order);

/// Entries in source-line order, plus the direction new lines were appended in.
struct LogFile {
  std::vector<LogEntry> entries;
  FileOrder declared_order = FileOrder::kUnknown;
};

/// Which timestamp notations a corpus accepts, and how many whitespace-
/// separated fields a line must carry at minimum.
struct FieldSchema {
  std::vector<TimestampStyle> timestamp_formats = {
      TimestampStyle::kTSeparated, TimestampStyle::kSpaceSeparated, TimestampStyle::kCompact};
  std::string separator = " ";
  int field_count = 3;

  bool allows(TimestampStyle style) const;

  /// Loads from a `key = value` file with keys: timestamp_formats (csv of
  /// t_separated|space_separated|compact), separator (space|tab), field_count.
  static FieldSchema load(const std::string& path);
  void validate() const;  // throws ConfigError on bad field_count / empty formats
};

struct TimestampError {
  TimestampErrorReason reason;
  std::string detail;
};

/// Non-throwing core of parse_timestamp.
std::variant<Timestamp, TimestampError> parse_timestamp_checked(const std::string& s,
                                                                const FieldSchema& schema);

/// Parses one timestamp string in any notation the schema accepts.
/// Throws InvalidTimestamp{BAD_LENGTH | NON_DIGIT | OUT_OF_RANGE}.
Timestamp parse_timestamp(const std::string& s, const FieldSchema& schema);

std::string format_timestamp(const Timestamp& t);

struct EntryError {
  enum class Kind { kInvalidTimestamp, kMissingField } kind;
  // kInvalidTimestamp
  TimestampErrorReason timestamp_reason = TimestampErrorReason::kBadLength;
  // kMissingField
  std::string field;
  std::string message() const;
};

std::variant<LogEntry, EntryError> parse_entry_checked(const std::string& line,
                                                       const FieldSchema& schema);

/// Splits a line into timestamp / event code / description. Runs of blanks
/// count as one separator; the description keeps single interior spaces.
/// Throws InvalidTimestamp or MissingField.
LogEntry parse_entry(const std::string& line, const FieldSchema& schema);

/// Canonical single-separator rendering; parse_entry(serialize_entry(e)) == e.
std::string serialize_entry(const LogEntry& e, const FieldSchema& schema);

/// Collapses every run of blanks to one space and trims the ends. Idempotent,
/// and never changes the whitespace-split token sequence.
std::string cleanse_whitespace(const std::string& line);

/// Whitespace-run tokenization shared by the parser and the corpus code.
std::vector<std::string> split_tokens(const std::string& line);

/// Reads a line-oriented UTF-8 file; handles both \n and \r\n.
std::vector<std::string> read_lines(const std::string& path);

struct ParsedLines {
  std::vector<LogEntry> entries;
  std::vector<std::size_t> entry_lines;  // source line index of each entry
  struct Failure {
    std::size_t line;
    std::string reason;
  };
  std::vector<Failure> failures;  // parse errors are recorded, never dropped
};

ParsedLines parse_lines(const std::vector<std::string>& lines, const FieldSchema& schema);

void write_log_file(const std::string& path, const LogFile& file, const FieldSchema& schema);

}  // namespace logforge
