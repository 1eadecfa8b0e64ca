#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fixture_corpus.hpp"
#include "logforge/log_entry.hpp"
#include "logforge/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace logforge;
using logforge::testing::TempDir;

namespace {

FieldSchema any_schema() { return FieldSchema{}; }

FieldSchema only(TimestampStyle style) {
  FieldSchema s;
  s.timestamp_formats = {style};
  return s;
}

TimestampErrorReason reason_of(const std::string& text, const FieldSchema& schema) {
  try {
    parse_timestamp(text, schema);
  } catch (const InvalidTimestamp& e) {
    return e.reason();
  }
  FAIL("expected InvalidTimestamp for: ", text);
  return TimestampErrorReason::kBadLength;
}

}  // namespace

TEST_CASE("parse_timestamp accepts the three notations") {
  const Timestamp t1 = parse_timestamp("2021-09-30T14:00:07", any_schema());
  CHECK(t1 == Timestamp{2021, 9, 30, 14, 0, 7, TimestampStyle::kTSeparated});

  const Timestamp t2 = parse_timestamp("20210830T104958", any_schema());
  CHECK(t2 == Timestamp{2021, 8, 30, 10, 49, 58, TimestampStyle::kCompact});

  const Timestamp t3 = parse_timestamp("2021-08-30 10:49:58", any_schema());
  CHECK(t3 == Timestamp{2021, 8, 30, 10, 49, 58, TimestampStyle::kSpaceSeparated});
}

TEST_CASE("parse_timestamp rejection reasons") {
  CHECK(reason_of("20211340T104958", any_schema()) == TimestampErrorReason::kOutOfRange);
  CHECK(reason_of("202108301T104958", any_schema()) == TimestampErrorReason::kBadLength);
  CHECK(reason_of("", any_schema()) == TimestampErrorReason::kBadLength);
  CHECK(reason_of("2021-09-3OT14:00:07", any_schema()) == TimestampErrorReason::kNonDigit);
  CHECK(reason_of("2021-09-30X14:00:07", any_schema()) == TimestampErrorReason::kNonDigit);
  CHECK(reason_of("20210830Z104958", any_schema()) == TimestampErrorReason::kNonDigit);
  // 24th hour and 60th second are out of range, not shape errors
  CHECK(reason_of("2021-09-30T24:00:07", any_schema()) == TimestampErrorReason::kOutOfRange);
  CHECK(reason_of("2021-09-30T14:00:60", any_schema()) == TimestampErrorReason::kOutOfRange);
}

TEST_CASE("schema restricts accepted notations") {
  CHECK_THROWS_AS(parse_timestamp("2021-09-30T14:00:07", only(TimestampStyle::kCompact)),
                  InvalidTimestamp);
  CHECK_THROWS_AS(parse_timestamp("2021-09-30 14:00:07", only(TimestampStyle::kTSeparated)),
                  InvalidTimestamp);
  CHECK_NOTHROW(parse_timestamp("20210930T140007", only(TimestampStyle::kCompact)));
}

TEST_CASE("compact timestamps agree with a brute-force calendar oracle") {
  SplitMix64 rng(2024);
  std::size_t accepted = 0;
  for (int trial = 0; trial < 8000; ++trial) {
    const int y = 1899 + static_cast<int>(rng.next_below(203));
    const int mo = static_cast<int>(rng.next_below(14));
    const int d = static_cast<int>(rng.next_below(33));
    const int h = static_cast<int>(rng.next_below(25));
    const int mi = static_cast<int>(rng.next_below(61));
    const int s = static_cast<int>(rng.next_below(61));
    char buf[20];
    std::snprintf(buf, sizeof buf, "%04d%02d%02dT%02d%02d%02d", y, mo, d, h, mi, s);
    const bool expect = logforge::testing::calendar_ok_oracle(y, mo, d, h, mi, s);
    auto got = parse_timestamp_checked(buf, any_schema());
    const bool ok = std::holds_alternative<Timestamp>(got);
    CAPTURE(buf);
    CHECK(ok == expect);
    accepted += ok;
  }
  CHECK(accepted > 100);  // the generator must actually hit valid dates

  // leap-year corner cases
  CHECK(std::holds_alternative<Timestamp>(parse_timestamp_checked("20200229T000000", any_schema())));
  CHECK(std::holds_alternative<Timestamp>(parse_timestamp_checked("20000229T000000", any_schema())));
  CHECK_FALSE(std::holds_alternative<Timestamp>(parse_timestamp_checked("19000229T000000", any_schema())));
  CHECK_FALSE(std::holds_alternative<Timestamp>(parse_timestamp_checked("20210229T000000", any_schema())));
}

TEST_CASE("format(parse(s)) reproduces accepted strings") {
  for (const char* s : {"2021-09-30T14:00:07", "20210830T104958", "2021-08-30 10:49:58",
                        "2020-02-29 23:59:59", "00010101T000000"}) {
    CHECK(format_timestamp(parse_timestamp(s, any_schema())) == cleanse_whitespace(s));
  }
}

TEST_CASE("parse_entry splits timestamp, code, description") {
  const LogEntry e1 = parse_entry("20210830T104958  EFW  Write failed", any_schema());
  CHECK(e1.timestamp == Timestamp{2021, 8, 30, 10, 49, 58, TimestampStyle::kCompact});
  CHECK(e1.event_code == "EFW");
  CHECK(e1.description == "Write failed");

  const LogEntry e2 = parse_entry("2021-09-30T14:00:07 EFR Could not access file", any_schema());
  CHECK(e2.event_code == "EFR");
  CHECK(e2.description == "Could not access file");

  // space-separated stamps consume two raw fields
  const LogEntry e3 = parse_entry("2021-08-30 10:49:58 SINIT Session 00af initialized", any_schema());
  CHECK(e3.timestamp.style == TimestampStyle::kSpaceSeparated);
  CHECK(e3.event_code == "SINIT");
  CHECK(e3.description == "Session 00af initialized");
}

TEST_CASE("parse_entry error taxonomy") {
  CHECK_THROWS_AS(parse_entry("EFW Write failed", any_schema()), MissingField);
  CHECK_THROWS_AS(parse_entry("", any_schema()), MissingField);
  CHECK_THROWS_AS(parse_entry("20210830T104958 EFW", any_schema()), MissingField);
  CHECK_THROWS_AS(parse_entry("20210830T104958", any_schema()), MissingField);
  CHECK_THROWS_AS(parse_entry("20211340T104958 EFW Write failed", any_schema()), InvalidTimestamp);

  FieldSchema wide = any_schema();
  wide.field_count = 4;
  CHECK_THROWS_AS(parse_entry("20210830T104958 EFW Write", wide), MissingField);
  CHECK_NOTHROW(parse_entry("20210830T104958 EFW Write failed", wide));
}

TEST_CASE("serialize_entry canonical forms match the notation table") {
  const FieldSchema schema = any_schema();
  LogEntry e{Timestamp{2021, 8, 30, 10, 49, 58, TimestampStyle::kCompact}, "EFW", "Write failed"};
  CHECK(serialize_entry(e, schema) == "20210830T104958 EFW Write failed");

  e.timestamp.style = TimestampStyle::kSpaceSeparated;
  CHECK(serialize_entry(e, schema) == "2021-08-30 10:49:58 EFW Write failed");

  e.timestamp.style = TimestampStyle::kTSeparated;
  CHECK(serialize_entry(e, schema) == "2021-08-30T10:49:58 EFW Write failed");
}

TEST_CASE("serialize_entry rejects entries violating the invariants") {
  const FieldSchema schema = any_schema();
  LogEntry bad_code{Timestamp{}, "E FW", "x"};
  CHECK_THROWS_AS(serialize_entry(bad_code, schema), std::invalid_argument);
  LogEntry empty_code{Timestamp{}, "", "x"};
  CHECK_THROWS_AS(serialize_entry(empty_code, schema), std::invalid_argument);
  LogEntry bad_desc{Timestamp{}, "EFW", "a\nb"};
  CHECK_THROWS_AS(serialize_entry(bad_desc, schema), std::invalid_argument);
}

TEST_CASE("parse/serialize round-trip on fixture lines") {
  const FieldSchema schema = any_schema();
  const auto lines = logforge::testing::fixture_corpus_lines({1000, 7});
  for (const std::string& line : lines) {
    const LogEntry e = parse_entry(line, schema);
    CHECK(parse_entry(serialize_entry(e, schema), schema) == e);
    CHECK(serialize_entry(e, schema) == line);
  }
}

TEST_CASE("cleanse_whitespace collapses runs and trims") {
  CHECK(cleanse_whitespace("20210830T104958     EFW   Write  failed") ==
        "20210830T104958 EFW Write failed");
  CHECK(cleanse_whitespace("") == "");
  CHECK(cleanse_whitespace("   ") == "");
  CHECK(cleanse_whitespace("\tA\t \tB ") == "A B");
}

TEST_CASE("cleanse_whitespace is idempotent and token-preserving") {
  SplitMix64 rng(99);
  const char* pieces[] = {"EFW", "a1",  "2021", "Write", "x", "KB500",
                          " ",   "  ",  "\t",   "   \t", "",  "\t\t "};
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    const int n = 1 + static_cast<int>(rng.next_below(12));
    for (int i = 0; i < n; ++i) s += pieces[rng.next_below(std::size(pieces))];
    const std::string once = cleanse_whitespace(s);
    CHECK(cleanse_whitespace(once) == once);
    CHECK(split_tokens(once) == split_tokens(s));
  }
}

TEST_CASE("read_lines and parse_lines keep failures, never drop them") {
  TempDir dir;
  logforge::testing::write_file(dir.file("mixed.log"),
                                "20210830T104958 EFW Write failed\r\n"
                                "not a log line\n"
                                "\n"
                                "20211340T104958 EFW bad month\n"
                                "2021-08-30 10:49:59 EFR Could not access file\n");
  const auto lines = read_lines(dir.file("mixed.log"));
  REQUIRE(lines.size() == 5);
  CHECK(lines[0].back() == 'd');  // \r stripped

  const ParsedLines parsed = parse_lines(lines, any_schema());
  CHECK(parsed.entries.size() == 2);
  CHECK(parsed.entry_lines == std::vector<std::size_t>{0, 4});
  REQUIRE(parsed.failures.size() == 2);
  CHECK(parsed.failures[0].line == 1);
  CHECK(parsed.failures[1].line == 3);
}

TEST_CASE("schema config file") {
  TempDir dir;
  logforge::testing::write_file(dir.file("schema.cfg"),
                                "# cbs-like\n"
                                "timestamp_formats = space_separated, compact\n"
                                "field_count = 3\n"
                                "separator = space\n");
  const FieldSchema schema = FieldSchema::load(dir.file("schema.cfg"));
  CHECK(schema.allows(TimestampStyle::kSpaceSeparated));
  CHECK(schema.allows(TimestampStyle::kCompact));
  CHECK_FALSE(schema.allows(TimestampStyle::kTSeparated));

  logforge::testing::write_file(dir.file("bad.cfg"), "field_count = 2\n");
  CHECK_THROWS_AS(FieldSchema::load(dir.file("bad.cfg")), ConfigError);
  logforge::testing::write_file(dir.file("unknown.cfg"), "fields = 3\n");
  CHECK_THROWS_AS(FieldSchema::load(dir.file("unknown.cfg")), ConfigError);
}
