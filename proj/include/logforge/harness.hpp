#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "logforge/log_entry.hpp"
#include "logforge/staticgen.hpp"
#include "logforge/training.hpp"
#include "logforge/validator.hpp"

namespace logforge {

/// Full experiment description, loadable from a key=value file. Per-scheme
/// overrides use a scheme prefix (e.g. `pg.adv_epochs = 1`).
struct ExperimentSpec {
  std::string corpus_path;
  FieldSchema schema;
  std::size_t n_train = 2000;
  std::size_t n_test = 500;
  TokenMode mode = TokenMode::kWord;
  std::size_t min_freq = 2;
  std::size_t max_seq_len = 0;  // 0 = mode default
  std::vector<TrainConfig> scheme_configs;
  TrainConfig base_config;  // shared MLE pretraining and defaults
  std::size_t sample_count = 200;
  bool cleanse_before_validate = true;
  std::string out_dir;
  std::uint64_t master_seed = 1;
  double pass_threshold = 0.9;  // share of entries a property needs post-cleanse
  bool parallel_schemes = false;
  std::string rules_path;              // optional; mined from the train split when empty
  std::int64_t rules_gap_seconds = 60;  // idle gap that separates mining segments
  std::size_t rules_chunk = 400;        // segment size cap for mining
  std::size_t rules_min_support = 3;
  std::size_t lexicon_min_count = 5;

  static ExperimentSpec load(const std::string& path);
  void validate() const;

  std::size_t effective_max_seq_len() const {
    return max_seq_len ? max_seq_len : default_max_seq_len(mode);
  }
};

/// Table-V shaped semantic comparison. Throws BaselineViolation when the real
/// held-out file itself breaks chronology (corrupt ingestion, not a result).
struct SemanticsRow {
  bool chronology_ok = false;
  bool coherence_ok = false;
  std::size_t chronology_violations = 0;
  std::size_t coherence_violations = 0;
};

SemanticsRow compare_semantics(const LogFile& generated, const LogFile& real_heldout,
                               const CoherenceRuleSet& rules);

struct SchemeRow {
  std::string name;  // pg | iw | coop | static
  bool is_static = false;
  MetricsRow final_metrics;  // NaN columns for the static baseline
  // Syntactic pass rates, raw then after whitespace cleansing.
  double raw_date_time = 0, raw_event_id = 0, raw_description = 0;
  double clean_date_time = 0, clean_event_id = 0, clean_description = 0;
  bool date_time_pass = false, event_id_pass = false, description_pass = false;
  bool chronology_ok = false, coherence_ok = false;
  std::size_t parseable_entries = 0;
  std::size_t sample_count = 0;
};

struct ExperimentReport {
  std::vector<SchemeRow> rows;
  double pass_threshold = 0.9;
  std::uint64_t master_seed = 0;
  std::size_t vocab_size = 0;
  std::size_t generator_params = 0;
  double duration_seconds = 0;  // environment stamp; excluded from determinism

  std::string to_json() const;
  std::string to_text() const;
};

/// Executes split -> vocab -> rules -> MLE pretrain -> adversarial training
/// per scheme -> sample generation -> validation -> report. Stage artifacts
/// land in spec.out_dir and finished stages are reused on a rerun. Failures
/// surface as StageFailure with earlier artifacts intact.
ExperimentReport run_experiment(const ExperimentSpec& spec);

/// Re-renders the text report from a finished experiment directory.
ExperimentReport load_report(const std::string& out_dir);

}  // namespace logforge
