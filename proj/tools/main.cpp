#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "logforge/checkpoint.hpp"
#include "logforge/corpus.hpp"
#include "logforge/harness.hpp"
#include "logforge/log_entry.hpp"
#include "logforge/staticgen.hpp"
#include "logforge/training.hpp"
#include "logforge/validator.hpp"

namespace fs = std::filesystem;
using namespace logforge;

namespace {

// Exit codes: 0 ok, 1 validation verdict failed, 2 usage error, 3 internal.
constexpr int kOk = 0;
constexpr int kVerdictFail = 1;
constexpr int kUsage = 2;
constexpr int kInternal = 3;

struct GlobalOpts {
  std::uint64_t seed = 1;
  std::string out;
  bool quiet = false;
};

/// Human-readable chatter goes to stderr so stdout stays machine-parseable.
class Console {
 public:
  explicit Console(bool quiet) : quiet_(quiet) {}
  template <typename T>
  Console& operator<<(const T& v) {
    if (!quiet_) std::cerr << v;
    return *this;
  }

 private:
  bool quiet_;
};

/// Machine output sink: --out file when given, stdout otherwise.
class MachineOut {
 public:
  explicit MachineOut(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw std::runtime_error("cannot open output file: " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

FieldSchema load_schema_or_default(const std::string& path) {
  return path.empty() ? FieldSchema{} : FieldSchema::load(path);
}

int cmd_ingest(const GlobalOpts& g, const std::string& corpus, const std::string& schema_path,
               std::size_t n_train, std::size_t n_test) {
  Console console(g.quiet);
  const FieldSchema schema = load_schema_or_default(schema_path);
  const std::string dir = g.out.empty() ? "." : g.out;
  fs::create_directories(dir);
  const CorpusSplit split = sample_split_file(corpus, schema, n_train, n_test, g.seed);
  write_log_file((fs::path(dir) / "train.log").string(), LogFile{split.train, FileOrder::kUnknown},
                 schema);
  write_log_file((fs::path(dir) / "test.log").string(), LogFile{split.test, FileOrder::kUnknown},
                 schema);
  write_manifest((fs::path(dir) / "train.idx").string(), split.train_lines);
  write_manifest((fs::path(dir) / "test.idx").string(), split.test_lines);
  console << "ingest: " << split.train.size() << " train / " << split.test.size()
          << " test entries into " << dir << "\n";
  return kOk;
}

int cmd_mine_rules(const GlobalOpts& g, const std::vector<std::string>& files,
                   std::size_t min_support, std::int64_t gap_seconds, std::size_t chunk) {
  Console console(g.quiet);
  const FieldSchema schema;
  std::vector<LogFile> corpus;
  for (const std::string& path : files) {
    ParsedLines parsed = parse_lines(read_lines(path), schema);
    if (gap_seconds > 0 || chunk > 0) {
      LogFile current;
      for (LogEntry& e : parsed.entries) {
        if (!current.entries.empty()) {
          const std::int64_t gap = to_epoch_seconds(e.timestamp) -
                                   to_epoch_seconds(current.entries.back().timestamp);
          if ((gap_seconds > 0 && gap > gap_seconds) ||
              (chunk > 0 && current.entries.size() >= chunk)) {
            corpus.push_back(std::move(current));
            current = LogFile{};
          }
        }
        current.entries.push_back(std::move(e));
      }
      if (!current.entries.empty()) corpus.push_back(std::move(current));
    } else {
      corpus.push_back(LogFile{std::move(parsed.entries), FileOrder::kUnknown});
    }
  }
  const CoherenceRuleSet rules = mine_rules(corpus, min_support);
  MachineOut out(g.out);
  for (const CoherenceRule& r : rules.rules) {
    out.stream() << r.precondition_code << '\t' << r.dependent_code << '\t' << r.support << '\n';
  }
  console << "mine-rules: " << rules.rules.size() << " rules from " << corpus.size()
          << " segment(s)\n";
  return kOk;
}

int cmd_gen_static(const GlobalOpts& g, const std::string& template_path, std::size_t n,
                   const std::string& order, const std::string& rules_path) {
  Console console(g.quiet);
  const GenTemplate tmpl =
      template_path.empty() ? default_template() : GenTemplate::load(template_path);
  CoherenceRuleSet rules;
  if (!rules_path.empty()) rules = read_rules(rules_path);
  const FileOrder dir = order == "desc" ? FileOrder::kDescending : FileOrder::kAscending;
  const LogFile file = generate_static(tmpl, n, g.seed, dir, rules);
  const FieldSchema schema;
  MachineOut out(g.out);
  for (const LogEntry& e : file.entries) out.stream() << serialize_entry(e, schema) << '\n';
  console << "gen-static: " << file.entries.size() << " entries (" << order << ")\n";
  return kOk;
}

int cmd_train(const GlobalOpts& g, const std::string& scheme_name, const std::string& config_path) {
  Console console(g.quiet);
  const KeyValueConfig cfg_file = KeyValueConfig::parse_file(config_path);
  cfg_file.require_known_keys({"train", "test", "mode", "min_freq", "mle_epochs", "adv_epochs",
                               "batch_size", "g_lr_mle", "g_lr_adv", "d_lr", "rollouts",
                               "embed_dim", "hidden_dim", "max_seq_len", "seed", "scheme"});
  const std::string train_path = cfg_file.get("train");
  const std::string test_path = cfg_file.get("test");
  const TokenMode mode = cfg_file.get_or("mode", "word") == "char" ? TokenMode::kChar
                                                                   : TokenMode::kWord;
  const std::size_t min_freq = static_cast<std::size_t>(cfg_file.get_int_or("min_freq", 2));

  TrainConfig cfg = apply_train_config(TrainConfig{}, cfg_file, "");
  auto scheme = train_scheme_from_string(scheme_name);
  if (!scheme) throw ConfigError("unknown scheme: " + scheme_name);
  cfg.scheme = *scheme;
  if (!cfg_file.has("seed")) cfg.seed = g.seed;
  if (cfg.max_seq_len == TrainConfig{}.max_seq_len && mode == TokenMode::kChar) {
    cfg.max_seq_len = default_max_seq_len(mode);
  }
  cfg.validate();

  const FieldSchema schema;
  ParsedLines train_parsed = parse_lines(read_lines(train_path), schema);
  ParsedLines test_parsed = parse_lines(read_lines(test_path), schema);
  if (train_parsed.entries.empty()) throw ConfigError("no parseable training entries");
  const CorpusSplit split{std::move(train_parsed.entries), std::move(test_parsed.entries), {}, {},
                          cfg.seed};
  const Vocabulary vocab = Vocabulary::build(split.train, schema, mode, min_freq);
  const EncodedCorpus corpus = encode_corpus(split, vocab, schema, cfg.max_seq_len);

  const std::string dir = g.out.empty() ? "." : g.out;
  fs::create_directories(dir);
  auto path_of = [&](const std::string& name) { return (fs::path(dir) / name).string(); };

  SequenceModel gen = SequenceModel::init(static_cast<int>(vocab.size()), cfg.embed_dim,
                                          cfg.hidden_dim, derive_seed(cfg.seed, 0x91));
  TrainingMetrics all = pretrain_mle(gen, corpus, cfg);

  TrainingMetrics adv;
  if (cfg.scheme == TrainScheme::kPolicyGradient) {
    Discriminator d = Discriminator::init(static_cast<int>(vocab.size()), cfg.embed_dim,
                                          cfg.hidden_dim, derive_seed(cfg.seed, 0x92));
    adv = train_adversarial_pg(gen, d, corpus, cfg);
    save_checkpoint(path_of("discriminator.ckpt"), d, vocab);
  } else if (cfg.scheme == TrainScheme::kImportanceWeighted) {
    Discriminator d = Discriminator::init(static_cast<int>(vocab.size()), cfg.embed_dim,
                                          cfg.hidden_dim, derive_seed(cfg.seed, 0x92));
    adv = train_adversarial_iw(gen, d, corpus, cfg);
    save_checkpoint(path_of("discriminator.ckpt"), d, vocab);
  } else {
    SequenceModel mediator = SequenceModel::init(static_cast<int>(vocab.size()), cfg.embed_dim,
                                                 cfg.hidden_dim, derive_seed(cfg.seed, 0x93));
    Discriminator aux = Discriminator::init(static_cast<int>(vocab.size()), cfg.embed_dim,
                                            cfg.hidden_dim, derive_seed(cfg.seed, 0x94));
    adv = train_cooperative(gen, mediator, aux, corpus, cfg);
    save_checkpoint(path_of("mediator.ckpt"), mediator, vocab);
    save_checkpoint(path_of("discriminator.ckpt"), aux, vocab);
  }
  for (MetricsRow& r : adv.rows) {
    r.epoch += cfg.mle_epochs;
    all.rows.push_back(r);
  }
  write_metrics_csv(path_of("metrics.csv"), all.rows);
  save_checkpoint(path_of("generator.ckpt"), gen, vocab);

  if (const auto alarm = detect_collapse(all.rows, 1)) {
    console << "WARNING: overtraining signature at epoch " << alarm->epoch << " (diversity "
            << alarm->diversity << ", acc " << alarm->acc << ")\n";
  }
  if (!all.rows.empty()) {
    const MetricsRow& r = all.rows.back();
    console << "train[" << scheme_name << "]: g_loss=" << r.g_loss << " d_loss=" << r.d_loss
            << " g_nll=" << r.g_nll << " d_nll=" << r.d_nll << " acc=" << r.acc << "\n";
  }
  console << "train: artifacts in " << dir << "\n";
  return kOk;
}

int cmd_gen_neural(const GlobalOpts& g, const std::string& model_path, std::size_t n,
                   double temperature) {
  Console console(g.quiet);
  const LoadedCheckpoint loaded = load_checkpoint(model_path);
  if (!loaded.sequence_model) {
    throw std::runtime_error("checkpoint is a " + loaded.kind + ", need a sequence model");
  }
  NoiseSource noise(g.seed);
  SampleOptions opts;
  opts.max_len = default_max_seq_len(loaded.vocab.mode());
  opts.temperature = temperature;
  const auto seqs = sample_sequences(*loaded.sequence_model, noise, n, opts);
  MachineOut out(g.out);
  for (const TokenSequence& s : seqs) out.stream() << loaded.vocab.decode(s) << '\n';
  console << "gen-neural: " << n << " samples at temperature " << temperature << "\n";
  return kOk;
}

int cmd_validate(const GlobalOpts& g, const std::string& file, const std::string& schema_path,
                 const std::string& rules_path, const std::string& order, bool cleanse) {
  Console console(g.quiet);
  const FieldSchema schema = load_schema_or_default(schema_path);
  CoherenceRuleSet rules;
  if (!rules_path.empty()) rules = read_rules(rules_path);
  OrderPolicy policy = OrderPolicy::kAuto;
  if (order == "asc") policy = OrderPolicy::kAscending;
  if (order == "desc") policy = OrderPolicy::kDescending;

  std::vector<std::string> lines = read_lines(file);
  if (cleanse) {
    for (std::string& line : lines) line = cleanse_whitespace(line);
  }
  const PropertyReport report = validate_lines(lines, schema, policy, rules);
  MachineOut out(g.out);
  out.stream() << report.to_json() << '\n';

  const bool syntactic_clean = report.date_time_pass == report.line_count &&
                               report.event_id_pass == report.line_count &&
                               report.description_pass == report.line_count;
  const bool pass = syntactic_clean && report.chronology_ok &&
                    (!report.coherence_checked || report.coherence_ok);
  console << "validate: " << (pass ? "PASS" : "FAIL") << " (" << report.violations.size()
          << " violations over " << report.line_count << " lines)\n";
  return pass ? kOk : kVerdictFail;
}

int cmd_detect(const GlobalOpts& g, const std::string& file, const std::string& model_path,
               const std::string& schema_path, const std::string& rules_path) {
  Console console(g.quiet);
  const FieldSchema schema = load_schema_or_default(schema_path);
  CoherenceRuleSet rules;
  if (!rules_path.empty()) rules = read_rules(rules_path);

  const std::vector<std::string> lines = read_lines(file);
  const PropertyReport report = validate_lines(lines, schema, OrderPolicy::kAuto, rules);
  const bool syntactic_clean = report.date_time_pass == report.line_count &&
                               report.event_id_pass == report.line_count &&
                               report.description_pass == report.line_count;
  bool properties_ok = syntactic_clean && report.chronology_ok &&
                       (!report.coherence_checked || report.coherence_ok);

  nlohmann::json j;
  j["properties"] = nlohmann::json::parse(report.to_json());
  j["properties_ok"] = properties_ok;

  bool model_fake = false;
  if (!model_path.empty()) {
    const LoadedCheckpoint loaded = load_checkpoint(model_path);
    if (!loaded.discriminator) {
      throw std::runtime_error("checkpoint is a " + loaded.kind + ", need a discriminator");
    }
    std::vector<TokenSequence> seqs;
    for (const std::string& line : lines) {
      if (!line.empty()) {
        seqs.push_back(loaded.vocab.encode(line, default_max_seq_len(loaded.vocab.mode())));
      }
    }
    if (!seqs.empty()) {
      const auto scores = discriminate_batch(*loaded.discriminator, seqs);
      double mean = 0;
      for (float s : scores) mean += s;
      mean /= static_cast<double>(scores.size());
      model_fake = mean < 0.5;
      j["discriminator"] = {{"mean_score", mean}, {"judged_fake", model_fake}};
    }
  } else {
    j["discriminator"] = nullptr;  // degrades to property checks only
  }

  MachineOut out(g.out);
  out.stream() << j.dump(2) << '\n';
  const bool flagged = !properties_ok || model_fake;
  console << "detect: " << (flagged ? "SUSPECT" : "CLEAN") << "\n";
  return flagged ? kVerdictFail : kOk;
}

int cmd_experiment(const GlobalOpts& g, const std::string& config_path) {
  Console console(g.quiet);
  ExperimentSpec spec = ExperimentSpec::load(config_path);
  const ExperimentReport report = run_experiment(spec);
  if (!g.quiet) std::cerr << report.to_text();
  MachineOut out(g.out);
  if (!g.out.empty()) out.stream() << report.to_json() << '\n';
  console << "experiment: report written to " << spec.out_dir << "\n";
  return kOk;
}

int cmd_report(const std::string& out_dir) {
  const ExperimentReport report = load_report(out_dir);
  std::cout << report.to_text();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"logforge: generate, validate, and detect fake system logs"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "global random seed");
  app.add_option("--out", g.out, "output file or directory (machine output)");
  app.add_flag("--quiet", g.quiet, "suppress human-readable chatter on stderr");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "sample disjoint train/test splits from a corpus");
  std::string in_corpus, in_schema;
  std::size_t n_train = 2000, n_test = 500;
  ingest->add_option("corpus", in_corpus, "corpus log file")->required();
  ingest->add_option("--schema", in_schema, "schema config file");
  ingest->add_option("--n-train", n_train, "training sample size");
  ingest->add_option("--n-test", n_test, "test sample size");

  // mine-rules
  auto* mine = app.add_subcommand("mine-rules", "mine event-coherence rules from log files");
  std::vector<std::string> mine_files;
  std::size_t min_support = 3, mine_chunk = 0;
  std::int64_t mine_gap = 0;
  mine->add_option("files", mine_files, "log files (one coherence scope each)")->required();
  mine->add_option("--min-support", min_support, "minimum files containing the dependent");
  mine->add_option("--gap-seconds", mine_gap, "split files at idle gaps longer than this");
  mine->add_option("--chunk", mine_chunk, "split files into segments of at most this many entries");

  // gen-static
  auto* gstatic = app.add_subcommand("gen-static", "flog-style static generation");
  std::string tmpl_path, gs_order = "asc", gs_rules;
  std::size_t gs_n = 100;
  gstatic->add_option("--template", tmpl_path, "template config (built-in demo when omitted)");
  gstatic->add_option("--n", gs_n, "number of entries");
  gstatic->add_option("--order", gs_order, "asc|desc")
      ->check(CLI::IsMember({"asc", "desc"}));
  gstatic->add_option("--rules", gs_rules, "coherence rules to satisfy by injection");

  // train
  auto* train = app.add_subcommand("train", "MLE pretraining plus one adversarial scheme");
  std::string tr_scheme, tr_config;
  train->add_option("--scheme", tr_scheme, "pg|iw|coop")
      ->required()
      ->check(CLI::IsMember({"pg", "iw", "coop"}));
  train->add_option("--config", tr_config, "training config file")->required();

  // gen-neural
  auto* gneural = app.add_subcommand("gen-neural", "sample lines from a trained generator");
  std::string gn_model;
  std::size_t gn_n = 100;
  double gn_temp = 1.0;
  gneural->add_option("--model", gn_model, "generator checkpoint")->required();
  gneural->add_option("--n", gn_n, "number of samples");
  gneural->add_option("--temperature", gn_temp, "sampling temperature (0 = greedy)");

  // validate
  auto* validate = app.add_subcommand("validate", "check syntactic and semantic log properties");
  std::string v_file, v_schema, v_rules, v_order = "auto";
  bool v_cleanse = false;
  validate->add_option("file", v_file, "log file")->required();
  validate->add_option("--schema", v_schema, "schema config file");
  validate->add_option("--rules", v_rules, "coherence rules file");
  validate->add_option("--order", v_order, "asc|desc|auto")
      ->check(CLI::IsMember({"asc", "desc", "auto"}));
  validate->add_flag("--cleanse", v_cleanse, "collapse whitespace before checking");

  // detect
  auto* detect = app.add_subcommand("detect", "forgery triage: property checks plus optional model score");
  std::string d_file, d_model, d_schema, d_rules;
  detect->add_option("file", d_file, "log file")->required();
  detect->add_option("--model", d_model, "discriminator checkpoint");
  detect->add_option("--schema", d_schema, "schema config file");
  detect->add_option("--rules", d_rules, "coherence rules file");

  // experiment
  auto* experiment = app.add_subcommand("experiment", "run the full training/evaluation pipeline");
  std::string e_config;
  experiment->add_option("--config", e_config, "experiment spec file")->required();

  // report
  auto* report = app.add_subcommand("report", "re-render the report of a finished experiment");
  std::string r_dir;
  report->add_option("dir", r_dir, "experiment output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*ingest) return cmd_ingest(g, in_corpus, in_schema, n_train, n_test);
    if (*mine) return cmd_mine_rules(g, mine_files, min_support, mine_gap, mine_chunk);
    if (*gstatic) return cmd_gen_static(g, tmpl_path, gs_n, gs_order, gs_rules);
    if (*train) return cmd_train(g, tr_scheme, tr_config);
    if (*gneural) return cmd_gen_neural(g, gn_model, gn_n, gn_temp);
    if (*validate) return cmd_validate(g, v_file, v_schema, v_rules, v_order, v_cleanse);
    if (*detect) return cmd_detect(g, d_file, d_model, d_schema, d_rules);
    if (*experiment) return cmd_experiment(g, e_config);
    if (*report) return cmd_report(r_dir);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}
