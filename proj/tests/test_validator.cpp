#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fixture_corpus.hpp"
#include "logforge/rng.hpp"
#include "logforge/validator.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace logforge;
using logforge::testing::TempDir;

namespace {

Timestamp at_second(int s) {
  return Timestamp{2021, 8, 30, 10, 49 + s / 60, s % 60, TimestampStyle::kCompact};
}

LogFile file_of_seconds(const std::vector<int>& seconds, FileOrder order = FileOrder::kUnknown) {
  LogFile f;
  f.declared_order = order;
  for (int s : seconds) f.entries.push_back({at_second(s), "EV", "x"});
  return f;
}

LogFile file_of_codes(const std::vector<std::string>& codes) {
  LogFile f;
  f.declared_order = FileOrder::kAscending;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    f.entries.push_back({at_second(static_cast<int>(i)), codes[i], "x"});
  }
  return f;
}

CoherenceRuleSet rules_of(std::initializer_list<std::pair<const char*, const char*>> pairs) {
  CoherenceRuleSet set;
  for (auto& [a, b] : pairs) set.rules.push_back({a, b, 1});
  return set;
}

}  // namespace

TEST_CASE("check_syntactic verdicts per line") {
  const FieldSchema schema;
  const std::vector<std::string> lines = {
      "20210830T104958 EFW Write failed",       // all ok
      "20211340T104958 EFW Write failed",       // month 13
      "20210830T104958 EFW",                    // no description
      "EFW Write failed",                       // no timestamp
      "20210830T104958 THIS_CODE_IS_WAY_TOO_LONG_FOR_AN_IDENTIFIER_FIELD x y",
  };
  const PropertyReport r = check_syntactic(lines, schema);
  REQUIRE(r.per_line.size() == 5);
  CHECK(r.per_line[0].all_ok());
  CHECK_FALSE(r.per_line[1].date_time_ok);
  CHECK(r.per_line[1].event_id_ok);
  CHECK(r.per_line[2].date_time_ok);
  CHECK_FALSE(r.per_line[2].description_ok);
  CHECK_FALSE(r.per_line[3].date_time_ok);
  CHECK_FALSE(r.per_line[4].event_id_ok);

  // pass rates are the complements of the violation counts
  CHECK(r.date_time_rate() == doctest::Approx(3.0 / 5));
  CHECK(r.event_id_rate() == doctest::Approx(4.0 / 5));
  std::size_t date_violations = 0;
  for (const Violation& v : r.violations) date_violations += v.property == "date_time";
  CHECK(date_violations == 2);
}

TEST_CASE("raw checking is strict about separators; cleansing repairs it") {
  const FieldSchema schema;
  const std::string raw = "20210830T104958  EFW   Write failed";
  const PropertyReport before = check_syntactic({raw}, schema);
  CHECK(before.per_line[0].date_time_ok);
  CHECK_FALSE(before.per_line[0].event_id_ok);     // empty field after double space
  CHECK_FALSE(before.per_line[0].description_ok);  // excess whitespace inside remainder

  const PropertyReport after = check_syntactic({cleanse_whitespace(raw)}, schema);
  CHECK(after.per_line[0].all_ok());

  // a space inside the timestamp cannot be repaired by cleansing
  const std::string broken = "2021083 0T104958 EFW Write failed";
  CHECK_FALSE(check_syntactic({cleanse_whitespace(broken)}, schema).per_line[0].date_time_ok);
}

TEST_CASE("event lexicon replaces the shape fallback when provided") {
  const FieldSchema schema;
  EventCodeLexicon lexicon;
  lexicon.codes = {"EFW", "EFR"};
  const std::vector<std::string> lines = {"20210830T104958 EFW Write failed",
                                          "20210830T104958 ZZZ Write failed"};
  const PropertyReport with = check_syntactic(lines, schema, lexicon);
  CHECK(with.per_line[0].event_id_ok);
  CHECK_FALSE(with.per_line[1].event_id_ok);
  const PropertyReport without = check_syntactic(lines, schema);
  CHECK(without.per_line[1].event_id_ok);  // shape fallback accepts any short token
}

TEST_CASE("mine_lexicon keeps codes seen at least min_count times") {
  std::vector<LogEntry> entries;
  for (int i = 0; i < 6; ++i) entries.push_back({at_second(i), "EFW", "x"});
  for (int i = 0; i < 2; ++i) entries.push_back({at_second(i), "RARE", "x"});
  const EventCodeLexicon lex = mine_lexicon(entries, 5);
  CHECK(lex.codes.count("EFW") == 1);
  CHECK(lex.codes.count("RARE") == 0);
}

TEST_CASE("check_chronology spec cases") {
  CHECK(check_chronology(file_of_seconds({}), OrderPolicy::kAscending).ok);
  CHECK(check_chronology(file_of_seconds({0, 0, 1}), OrderPolicy::kAscending).ok);

  const ChronologyResult bad = check_chronology(file_of_seconds({1, 0}), OrderPolicy::kAscending);
  CHECK_FALSE(bad.ok);
  REQUIRE(bad.violations.size() == 1);
  CHECK(bad.violations[0].index == 1);

  CHECK(check_chronology(file_of_seconds({5, 3, 3, 1}), OrderPolicy::kAuto).ok);
  CHECK(check_chronology(file_of_seconds({2, 2, 2}), OrderPolicy::kAuto).ok);
  CHECK(check_chronology(file_of_seconds({2, 2, 2}), OrderPolicy::kAuto).direction ==
        FileOrder::kAscending);
  CHECK_FALSE(check_chronology(file_of_seconds({5, 3, 4}), OrderPolicy::kAuto).ok);
}

TEST_CASE("check_chronology agrees with the pairwise oracle on 1000 random files") {
  SplitMix64 rng(31337);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<int> seconds(rng.next_below(12));
    for (int& s : seconds) s = static_cast<int>(rng.next_below(5));
    if (rng.next_below(2)) std::sort(seconds.begin(), seconds.end());
    const LogFile f = file_of_seconds(seconds);
    CAPTURE(trial);
    CHECK(check_chronology(f, OrderPolicy::kAscending).ok ==
          logforge::testing::chronology_oracle(f, true));
    CHECK(check_chronology(f, OrderPolicy::kDescending).ok ==
          logforge::testing::chronology_oracle(f, false));
    const bool auto_ok = check_chronology(f, OrderPolicy::kAuto).ok;
    CHECK(auto_ok == (logforge::testing::chronology_oracle(f, true) ||
                      logforge::testing::chronology_oracle(f, false)));
  }
}

TEST_CASE("check_coherence spec cases") {
  const CoherenceRuleSet rules = rules_of({{"PSTART", "PWRITE"}});
  CHECK(check_coherence(file_of_codes({"PSTART", "PWRITE"}), rules).ok);

  const CoherenceResult bad = check_coherence(file_of_codes({"PWRITE", "PSTART"}), rules);
  CHECK_FALSE(bad.ok);
  REQUIRE(bad.violations.size() == 1);
  CHECK(bad.violations[0].index == 0);

  CHECK(check_coherence(file_of_codes({"PWRITE", "PSTART"}), CoherenceRuleSet{}).ok);
  // every dependent occurrence needs only one earlier precondition
  CHECK(check_coherence(file_of_codes({"PSTART", "PWRITE", "PWRITE"}), rules).ok);
}

TEST_CASE("check_coherence honors chronological order for descending files") {
  const CoherenceRuleSet rules = rules_of({{"S", "W"}});
  LogFile desc;
  desc.declared_order = FileOrder::kDescending;
  desc.entries.push_back({at_second(5), "W", "x"});
  desc.entries.push_back({at_second(1), "S", "x"});
  CHECK(check_coherence(desc, rules).ok);  // chronologically S comes first
}

TEST_CASE("check_coherence agrees with a backward-scan oracle on 1000 random files") {
  SplitMix64 rng(777);
  const std::vector<std::string> alphabet = {"S", "W", "A", "B", "C"};
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> codes(1 + rng.next_below(15));
    for (auto& c : codes) c = alphabet[rng.next_below(alphabet.size())];
    CoherenceRuleSet rules;
    const std::size_t n_rules = rng.next_below(4);
    for (std::size_t r = 0; r < n_rules; ++r) {
      std::string a = alphabet[rng.next_below(alphabet.size())];
      std::string b = alphabet[rng.next_below(alphabet.size())];
      if (a != b) rules.rules.push_back({a, b, 1});
    }
    const CoherenceResult got = check_coherence(file_of_codes(codes), rules);
    const std::size_t expected = logforge::testing::coherence_violations_oracle(codes, rules);
    CAPTURE(trial);
    CHECK(got.violations.size() == expected);
    CHECK(got.ok == (expected == 0));
  }
}

TEST_CASE("mine_rules spec cases") {
  std::vector<LogFile> corpus;
  for (int f = 0; f < 10; ++f) corpus.push_back(file_of_codes({"S", "A", "B", "W"}));
  const CoherenceRuleSet mined = mine_rules(corpus, 2);
  bool has_sw = false;
  for (const CoherenceRule& r : mined.rules) {
    if (r.precondition_code == "S" && r.dependent_code == "W") {
      has_sw = true;
      CHECK(r.support == 10);
    }
  }
  CHECK(has_sw);

  // one counterexample file kills the rule
  corpus.push_back(file_of_codes({"W", "S"}));
  for (const CoherenceRule& r : mine_rules(corpus, 2).rules) {
    CHECK_FALSE((r.precondition_code == "S" && r.dependent_code == "W"));
  }

  // a single-code corpus cannot produce rules (A != B required)
  CHECK(mine_rules({file_of_codes({"S", "S", "S"})}, 1).rules.empty());
}

TEST_CASE("mine_rules equals the brute-force oracle on random corpora") {
  SplitMix64 rng(4242);
  const std::vector<std::string> alphabet = {"S", "W", "A", "B"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<LogFile> corpus;
    std::vector<std::vector<std::string>> raw;
    const std::size_t n_files = 1 + rng.next_below(8);
    for (std::size_t f = 0; f < n_files; ++f) {
      std::vector<std::string> codes(1 + rng.next_below(15));
      for (auto& c : codes) c = alphabet[rng.next_below(alphabet.size())];
      corpus.push_back(file_of_codes(codes));
      raw.push_back(codes);
    }
    const std::size_t min_support = 1 + rng.next_below(3);
    CoherenceRuleSet got = mine_rules(corpus, min_support);
    CoherenceRuleSet expected = logforge::testing::mine_rules_oracle(raw, min_support);
    std::sort(expected.rules.begin(), expected.rules.end(),
              [](const CoherenceRule& a, const CoherenceRule& b) {
                if (a.precondition_code != b.precondition_code)
                  return a.precondition_code < b.precondition_code;
                return a.dependent_code < b.dependent_code;
              });
    CAPTURE(trial);
    CHECK(got.rules == expected.rules);

    // consistency by construction: replaying mined rules never violates
    for (const LogFile& f : corpus) {
      CHECK(check_coherence(f, got).ok);
    }
  }
}

TEST_CASE("rule files round-trip") {
  TempDir dir;
  CoherenceRuleSet rules;
  rules.rules = {{"PSTART", "PWRITE", 12}, {"SINIT", "SDONE", 7}};
  write_rules(dir.file("rules.tsv"), rules);
  CHECK(read_rules(dir.file("rules.tsv")).rules == rules.rules);
}

TEST_CASE("fixture corpus passes chronology; an adjacent swap fails it") {
  LogFile real = logforge::testing::fixture_corpus({400, 5});
  CHECK(check_chronology(real, OrderPolicy::kAuto).ok);

  // swap the first adjacent pair with unequal timestamps
  for (std::size_t i = 1; i < real.entries.size(); ++i) {
    if (real.entries[i - 1].timestamp.instant() != real.entries[i].timestamp.instant()) {
      std::swap(real.entries[i - 1], real.entries[i]);
      break;
    }
  }
  CHECK_FALSE(check_chronology(real, OrderPolicy::kAuto).ok);
}

TEST_CASE("validate_lines composes syntactic and semantic checks with JSON export") {
  const FieldSchema schema;
  const std::vector<std::string> lines = {
      "20210830T104958 PSTART proc started",
      "20210830T104959 PWRITE wrote bytes",
      "20210830T104957 EFW Write failed",  // chronology violation
  };
  const CoherenceRuleSet rules = rules_of({{"PSTART", "PWRITE"}});
  const PropertyReport report = validate_lines(lines, schema, OrderPolicy::kAscending, rules);
  CHECK(report.chronology_checked);
  CHECK_FALSE(report.chronology_ok);
  CHECK(report.coherence_checked);
  CHECK(report.coherence_ok);
  const std::string json = report.to_json();
  CHECK(json.find("\"chronology_ok\": false") != std::string::npos);
  CHECK(json.find("\"violations\"") != std::string::npos);
}
