#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixture_corpus.hpp"
#include "logforge/harness.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace logforge;
using logforge::testing::TempDir;
using logforge::testing::write_file;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// The deterministic part of the report: JSON minus the environment stamp.
std::string deterministic_json(const ExperimentReport& report) {
  std::string j = report.to_json();
  const auto pos = j.find("\"environment\"");
  REQUIRE(pos != std::string::npos);
  return j.substr(0, pos);
}

std::string tiny_spec_text(const std::string& corpus, const std::string& out_dir,
                           const std::string& schemes, bool parallel = false) {
  std::ostringstream cfg;
  cfg << "corpus = " << corpus << "\n"
      << "out_dir = " << out_dir << "\n"
      << "schemes = " << schemes << "\n"
      << "n_train = 240\n"
      << "n_test = 60\n"
      << "min_freq = 1\n"
      << "sample_count = 50\n"
      << "seed = 11\n"
      << "mle_epochs = 1\n"
      << "adv_epochs = 1\n"
      << "batch_size = 8\n"
      << "g_lr_mle = 0.3\n"
      << "d_lr = 0.3\n"
      << "rollouts = 2\n"
      << "embed_dim = 8\n"
      << "hidden_dim = 12\n"
      << "max_seq_len = 24\n"
      << "parallel = " << (parallel ? "true" : "false") << "\n";
  return cfg.str();
}

}  // namespace

TEST_CASE("experiment spec parsing, overrides, and validation") {
  TempDir dir;
  logforge::testing::write_fixture_corpus(dir.file("c.log"), {100, 1});
  write_file(dir.file("spec.cfg"), "corpus = " + dir.file("c.log") + "\n" +
                                       "out_dir = " + dir.file("out") + "\n" +
                                       "schemes = pg, coop\n"
                                       "mle_epochs = 4\n"
                                       "pg.adv_epochs = 2\n"
                                       "sample_count = 10\n");
  const ExperimentSpec spec = ExperimentSpec::load(dir.file("spec.cfg"));
  REQUIRE(spec.scheme_configs.size() == 2);
  CHECK(spec.scheme_configs[0].scheme == TrainScheme::kPolicyGradient);
  CHECK(spec.scheme_configs[0].adv_epochs == 2);
  CHECK(spec.scheme_configs[0].mle_epochs == 4);  // inherited from the base
  CHECK(spec.scheme_configs[1].scheme == TrainScheme::kCooperative);
  CHECK(spec.scheme_configs[1].adv_epochs == 3);  // default
  CHECK(spec.scheme_configs[0].seed != spec.scheme_configs[1].seed);

  write_file(dir.file("bad.cfg"), "corpus = " + dir.file("c.log") + "\n" +
                                      "out_dir = " + dir.file("out") + "\n" +
                                      "schemesss = pg\n");
  CHECK_THROWS_AS(ExperimentSpec::load(dir.file("bad.cfg")), ConfigError);

  write_file(dir.file("missing.cfg"), "corpus = /no/such/file.log\nout_dir = x\n");
  CHECK_THROWS_AS(ExperimentSpec::load(dir.file("missing.cfg")), ConfigError);
}

TEST_CASE("compare_semantics verdicts and baseline guard") {
  const LogFile real = logforge::testing::fixture_corpus({80, 3});
  CoherenceRuleSet rules;
  rules.rules = {{"SINIT", "SDONE", 5}};

  LogFile shuffled = real;
  std::rotate(shuffled.entries.begin(), shuffled.entries.end() - 1, shuffled.entries.end());
  const SemanticsRow row = compare_semantics(shuffled, real, rules);
  CHECK_FALSE(row.chronology_ok);

  // a generated file that keeps order passes chronology
  const SemanticsRow ok = compare_semantics(real, real, rules);
  CHECK(ok.chronology_ok);

  // corrupt baseline: the real side itself violates chronology
  CHECK_THROWS_AS(compare_semantics(real, shuffled, rules), BaselineViolation);
  CHECK_THROWS_AS(compare_semantics(LogFile{}, real, rules), DomainError);
}

TEST_CASE("single-scheme experiment: stages, report invariants, determinism, resume") {
  TempDir dir;
  logforge::testing::write_fixture_corpus(dir.file("corpus.log"), {340, 19});

  write_file(dir.file("a.cfg"), tiny_spec_text(dir.file("corpus.log"), dir.file("a"), "iw"));
  const ExperimentSpec spec = ExperimentSpec::load(dir.file("a.cfg"));
  const ExperimentReport report = run_experiment(spec);

  REQUIRE(report.rows.size() == 2);  // iw + static
  const SchemeRow& iw = report.rows[0];
  const SchemeRow& st = report.rows[1];
  CHECK(iw.name == "iw");
  CHECK(st.name == "static");
  CHECK(st.is_static);

  // static baseline anchors the table: 100% syntactic, chronology clean
  CHECK(st.raw_date_time == doctest::Approx(1.0));
  CHECK(st.raw_event_id == doctest::Approx(1.0));
  CHECK(st.raw_description == doctest::Approx(1.0));
  CHECK(st.chronology_ok);
  CHECK(st.coherence_ok);

  // cleansing never lowers a pass rate
  for (const SchemeRow& r : report.rows) {
    CHECK(r.clean_date_time >= r.raw_date_time);
    CHECK(r.clean_event_id >= r.raw_event_id);
    CHECK(r.clean_description >= r.raw_description);
  }

  // stage artifacts exist
  for (const char* name : {"train.log", "test.log", "train.idx", "test.idx", "vocab.json",
                           "rules.tsv", "pretrain.ckpt", "mle_metrics.csv", "iw.ckpt",
                           "iw_metrics.csv", "iw_samples.log", "iw_d.ckpt", "static_samples.log",
                           "report.json", "report.txt", "spec.fingerprint"}) {
    CAPTURE(name);
    CHECK(fs::exists(dir.file(std::string("a/") + name)));
  }
  CHECK(read_lines(dir.file("a/iw_samples.log")).size() == 50);

  // rendered text mirrors the three tables
  const std::string text = report.to_text();
  CHECK(text.find("Training results") != std::string::npos);
  CHECK(text.find("Syntactic properties") != std::string::npos);
  CHECK(text.find("Semantic properties") != std::string::npos);

  // determinism: a fresh directory yields the identical deterministic report
  write_file(dir.file("b.cfg"), tiny_spec_text(dir.file("corpus.log"), dir.file("b"), "iw"));
  const ExperimentReport again = run_experiment(ExperimentSpec::load(dir.file("b.cfg")));
  CHECK(deterministic_json(again) == deterministic_json(report));
  CHECK(slurp(dir.file("a/iw_samples.log")) == slurp(dir.file("b/iw_samples.log")));
  CHECK(slurp(dir.file("a/iw_metrics.csv")) == slurp(dir.file("b/iw_metrics.csv")));

  // resume: wipe the report, keep stage artifacts; the rerun must not retrain
  fs::remove(dir.file("a/report.json"));
  fs::remove(dir.file("a/report.txt"));
  const auto ckpt_time = fs::last_write_time(dir.file("a/iw.ckpt"));
  const ExperimentReport resumed = run_experiment(spec);
  CHECK(fs::last_write_time(dir.file("a/iw.ckpt")) == ckpt_time);
  CHECK(deterministic_json(resumed) == deterministic_json(report));
  CHECK(load_report(dir.file("a")).to_text() == resumed.to_text());

  // a different spec refuses to reuse the directory
  write_file(dir.file("c.cfg"), tiny_spec_text(dir.file("corpus.log"), dir.file("a"), "iw") +
                                    "pass_threshold = 0.8\n");
  CHECK_THROWS_AS(run_experiment(ExperimentSpec::load(dir.file("c.cfg"))), StageFailure);
}

TEST_CASE("zero schemes produce the static-baseline-only report") {
  TempDir dir;
  logforge::testing::write_fixture_corpus(dir.file("corpus.log"), {320, 23});
  write_file(dir.file("spec.cfg"), tiny_spec_text(dir.file("corpus.log"), dir.file("out"), ""));
  const ExperimentReport report = run_experiment(ExperimentSpec::load(dir.file("spec.cfg")));
  REQUIRE(report.rows.size() == 1);
  CHECK(report.rows[0].name == "static");
  CHECK(std::isnan(report.rows[0].final_metrics.acc));
}

TEST_CASE("parallel scheme execution matches the sequential results") {
  TempDir dir;
  logforge::testing::write_fixture_corpus(dir.file("corpus.log"), {340, 29});
  write_file(dir.file("seq.cfg"),
             tiny_spec_text(dir.file("corpus.log"), dir.file("seq"), "iw, coop", false));
  write_file(dir.file("par.cfg"),
             tiny_spec_text(dir.file("corpus.log"), dir.file("par"), "iw, coop", true));
  const ExperimentReport sequential = run_experiment(ExperimentSpec::load(dir.file("seq.cfg")));
  const ExperimentReport parallel = run_experiment(ExperimentSpec::load(dir.file("par.cfg")));
  CHECK(deterministic_json(sequential) == deterministic_json(parallel));
  for (const char* name : {"iw_samples.log", "coop_samples.log", "iw_metrics.csv",
                           "coop_metrics.csv"}) {
    CAPTURE(name);
    CHECK(slurp(dir.file(std::string("seq/") + name)) ==
          slurp(dir.file(std::string("par/") + name)));
  }
}

TEST_CASE("report json round-trips through load_report") {
  TempDir dir;
  logforge::testing::write_fixture_corpus(dir.file("corpus.log"), {300, 31});
  write_file(dir.file("spec.cfg"), tiny_spec_text(dir.file("corpus.log"), dir.file("out"), ""));
  const ExperimentReport report = run_experiment(ExperimentSpec::load(dir.file("spec.cfg")));
  const ExperimentReport loaded = load_report(dir.file("out"));
  CHECK(loaded.to_text() == report.to_text());
  CHECK(loaded.master_seed == report.master_seed);
  CHECK(loaded.rows.size() == report.rows.size());
}
