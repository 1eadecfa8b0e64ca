#include "logforge/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "logforge/checkpoint.hpp"
#include "logforge/rng.hpp"

namespace fs = std::filesystem;

namespace logforge {

namespace {

constexpr std::uint64_t kTagSplit = 201;
constexpr std::uint64_t kTagPretrainInit = 202;
constexpr std::uint64_t kTagSchemeSeed = 203;
constexpr std::uint64_t kTagDiscInit = 204;
constexpr std::uint64_t kTagMediatorInit = 205;
constexpr std::uint64_t kTagAuxDInit = 206;
constexpr std::uint64_t kTagSample = 207;
constexpr std::uint64_t kTagStatic = 208;
constexpr std::uint64_t kTagPretrainCfg = 209;

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

ExperimentSpec ExperimentSpec::load(const std::string& path) {
  const KeyValueConfig cfg = KeyValueConfig::parse_file(path);

  ExperimentSpec spec;
  spec.corpus_path = cfg.get("corpus");
  spec.out_dir = cfg.get("out_dir");
  spec.n_train = static_cast<std::size_t>(cfg.get_int_or("n_train", 2000));
  spec.n_test = static_cast<std::size_t>(cfg.get_int_or("n_test", 500));
  const std::string mode = cfg.get_or("mode", "word");
  if (mode == "word")
    spec.mode = TokenMode::kWord;
  else if (mode == "char")
    spec.mode = TokenMode::kChar;
  else
    throw ConfigError("unknown tokenization mode: " + mode);
  spec.min_freq = static_cast<std::size_t>(cfg.get_int_or("min_freq", 2));
  spec.max_seq_len = static_cast<std::size_t>(cfg.get_int_or("max_seq_len", 0));
  spec.sample_count = static_cast<std::size_t>(cfg.get_int_or("sample_count", 200));
  spec.cleanse_before_validate = cfg.get_bool_or("cleanse", true);
  spec.master_seed = static_cast<std::uint64_t>(cfg.get_int_or("seed", 1));
  spec.pass_threshold = cfg.get_double_or("pass_threshold", 0.9);
  spec.parallel_schemes = cfg.get_bool_or("parallel", false);
  spec.rules_path = cfg.get_or("rules", "");
  spec.rules_gap_seconds = cfg.get_int_or("rules_gap_seconds", 60);
  spec.rules_chunk = static_cast<std::size_t>(cfg.get_int_or("rules_chunk", 400));
  spec.rules_min_support = static_cast<std::size_t>(cfg.get_int_or("rules_min_support", 3));
  spec.lexicon_min_count = static_cast<std::size_t>(cfg.get_int_or("lexicon_min_count", 5));

  if (cfg.has("timestamp_formats")) {
    spec.schema.timestamp_formats.clear();
    for (const std::string& name : split_csv(cfg.get("timestamp_formats"))) {
      auto style = timestamp_style_from_string(name);
      if (!style) throw ConfigError("unknown timestamp format: " + name);
      spec.schema.timestamp_formats.push_back(*style);
    }
  }
  spec.schema.field_count = static_cast<int>(cfg.get_int_or("field_count", 3));
  spec.schema.validate();

  spec.base_config = apply_train_config(TrainConfig{}, cfg, "");
  spec.base_config.max_seq_len = spec.effective_max_seq_len();
  spec.base_config.seed = derive_seed(spec.master_seed, kTagPretrainCfg);

  const auto scheme_names = split_csv(cfg.get_or("schemes", ""));
  std::set<std::string> allowed = {
      "corpus", "out_dir", "schemes", "n_train", "n_test", "mode", "min_freq", "max_seq_len",
      "sample_count", "cleanse", "seed", "pass_threshold", "parallel", "rules",
      "rules_gap_seconds", "rules_chunk",
      "rules_min_support", "lexicon_min_count", "timestamp_formats", "separator", "field_count",
      "mle_epochs", "adv_epochs", "batch_size", "g_lr_mle", "g_lr_adv", "d_lr", "rollouts",
      "embed_dim", "hidden_dim"};
  for (std::size_t i = 0; i < scheme_names.size(); ++i) {
    const std::string& name = scheme_names[i];
    auto scheme = train_scheme_from_string(name);
    if (!scheme) throw ConfigError("unknown scheme: " + name);
    TrainConfig sc = apply_train_config(spec.base_config, cfg, name + ".");
    sc.scheme = *scheme;
    sc.seed = derive_seed(spec.master_seed, kTagSchemeSeed, i);
    spec.scheme_configs.push_back(sc);
    for (const char* k : {"mle_epochs", "adv_epochs", "batch_size", "g_lr_mle", "g_lr_adv",
                          "d_lr", "rollouts", "embed_dim", "hidden_dim", "max_seq_len", "seed",
                          "scheme"}) {
      allowed.insert(name + "." + k);
    }
  }
  cfg.require_known_keys(allowed);
  spec.validate();
  return spec;
}

void ExperimentSpec::validate() const {
  if (!fs::exists(corpus_path)) throw ConfigError("corpus file not found: " + corpus_path);
  if (!rules_path.empty() && !fs::exists(rules_path)) {
    throw ConfigError("rules file not found: " + rules_path);
  }
  if (out_dir.empty()) throw ConfigError("out_dir must be set");
  if (sample_count < 1) throw ConfigError("sample_count must be >= 1");
  if (n_train < 1 || n_test < 1) throw ConfigError("n_train and n_test must be >= 1");
  if (!(pass_threshold >= 0.0 && pass_threshold <= 1.0)) {
    throw ConfigError("pass_threshold must lie in [0,1]");
  }
  schema.validate();
  base_config.validate();
  for (const TrainConfig& c : scheme_configs) c.validate();
}

SemanticsRow compare_semantics(const LogFile& generated, const LogFile& real_heldout,
                               const CoherenceRuleSet& rules) {
  if (generated.entries.empty() || real_heldout.entries.empty()) {
    throw DomainError("compare_semantics needs non-empty files");
  }
  const ChronologyResult real_chrono = check_chronology(real_heldout, OrderPolicy::kAuto);
  if (!real_chrono.ok) {
    throw BaselineViolation("real held-out file fails chronology: ingestion is corrupt");
  }
  SemanticsRow row;
  const ChronologyResult chrono = check_chronology(generated, OrderPolicy::kAuto);
  row.chronology_ok = chrono.ok;
  row.chronology_violations = chrono.violations.size();
  const CoherenceResult coher = check_coherence(generated, rules);
  row.coherence_ok = coher.ok;
  row.coherence_violations = coher.violations.size();
  return row;
}

// ---- report rendering --------------------------------------------------------

namespace {

nlohmann::json metrics_json(const MetricsRow& m) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isnan(v)) return nullptr;
    return v;
  };
  return {{"epoch", m.epoch},   {"g_loss", num(m.g_loss)}, {"d_loss", num(m.d_loss)},
          {"g_nll", num(m.g_nll)}, {"d_nll", num(m.d_nll)},   {"acc", num(m.acc)},
          {"diversity", num(m.diversity)}};
}

MetricsRow metrics_from_json(const nlohmann::json& j) {
  MetricsRow m;
  auto num = [&](const char* k) {
    return j.at(k).is_null() ? std::numeric_limits<double>::quiet_NaN() : j.at(k).get<double>();
  };
  m.epoch = j.at("epoch").get<int>();
  m.g_loss = num("g_loss");
  m.d_loss = num("d_loss");
  m.g_nll = num("g_nll");
  m.d_nll = num("d_nll");
  m.acc = num("acc");
  m.diversity = num("diversity");
  return m;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::string ExperimentReport::to_json() const {
  nlohmann::json j;
  j["pass_threshold"] = pass_threshold;
  j["master_seed"] = master_seed;
  j["vocab_size"] = vocab_size;
  j["generator_params"] = generator_params;
  nlohmann::json schemes = nlohmann::json::array();
  for (const SchemeRow& r : rows) {
    schemes.push_back({
        {"name", r.name},
        {"is_static", r.is_static},
        {"metrics", metrics_json(r.final_metrics)},
        {"syntactic",
         {{"raw",
           {{"date_time", r.raw_date_time},
            {"event_id", r.raw_event_id},
            {"description", r.raw_description}}},
          {"cleansed",
           {{"date_time", r.clean_date_time},
            {"event_id", r.clean_event_id},
            {"description", r.clean_description}}},
          {"pass",
           {{"date_time", r.date_time_pass},
            {"event_id", r.event_id_pass},
            {"description", r.description_pass}}}}},
        {"semantic", {{"chronology_ok", r.chronology_ok}, {"coherence_ok", r.coherence_ok}}},
        {"parseable_entries", r.parseable_entries},
        {"sample_count", r.sample_count},
    });
  }
  j["schemes"] = schemes;
  j["environment"] = {{"duration_seconds", duration_seconds}};
  return j.dump(2);
}

ExperimentReport report_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  ExperimentReport rep;
  rep.pass_threshold = j.at("pass_threshold").get<double>();
  rep.master_seed = j.at("master_seed").get<std::uint64_t>();
  rep.vocab_size = j.at("vocab_size").get<std::size_t>();
  rep.generator_params = j.at("generator_params").get<std::size_t>();
  rep.duration_seconds = j.at("environment").at("duration_seconds").get<double>();
  for (const auto& s : j.at("schemes")) {
    SchemeRow r;
    r.name = s.at("name").get<std::string>();
    r.is_static = s.at("is_static").get<bool>();
    r.final_metrics = metrics_from_json(s.at("metrics"));
    const auto& syn = s.at("syntactic");
    r.raw_date_time = syn.at("raw").at("date_time").get<double>();
    r.raw_event_id = syn.at("raw").at("event_id").get<double>();
    r.raw_description = syn.at("raw").at("description").get<double>();
    r.clean_date_time = syn.at("cleansed").at("date_time").get<double>();
    r.clean_event_id = syn.at("cleansed").at("event_id").get<double>();
    r.clean_description = syn.at("cleansed").at("description").get<double>();
    r.date_time_pass = syn.at("pass").at("date_time").get<bool>();
    r.event_id_pass = syn.at("pass").at("event_id").get<bool>();
    r.description_pass = syn.at("pass").at("description").get<bool>();
    r.chronology_ok = s.at("semantic").at("chronology_ok").get<bool>();
    r.coherence_ok = s.at("semantic").at("coherence_ok").get<bool>();
    r.parseable_entries = s.at("parseable_entries").get<std::size_t>();
    r.sample_count = s.at("sample_count").get<std::size_t>();
    rep.rows.push_back(std::move(r));
  }
  return rep;
}

std::string ExperimentReport::to_text() const {
  std::ostringstream out;
  char line[256];

  out << "Training results\n";
  std::snprintf(line, sizeof line, "  %-8s %10s %10s %10s %10s %8s\n", "scheme", "g_loss",
                "d_loss", "g_nll", "d_nll", "acc");
  out << line;
  for (const SchemeRow& r : rows) {
    std::snprintf(line, sizeof line, "  %-8s %10s %10s %10s %10s %8s\n", r.name.c_str(),
                  fmt(r.final_metrics.g_loss).c_str(), fmt(r.final_metrics.d_loss).c_str(),
                  fmt(r.final_metrics.g_nll).c_str(), fmt(r.final_metrics.d_nll).c_str(),
                  fmt(r.final_metrics.acc).c_str());
    out << line;
  }

  std::snprintf(line, sizeof line,
                "\nSyntactic properties (pass = cleansed rate >= %.2f, raw -> cleansed)\n",
                pass_threshold);
  out << line;
  std::snprintf(line, sizeof line, "  %-8s %-22s %-22s %-22s\n", "scheme", "date_time", "event_id",
                "description");
  out << line;
  auto syn_cell = [](double raw, double clean, bool pass) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f -> %.3f %s", raw, clean, pass ? "ok" : "x");
    return std::string(buf);
  };
  for (const SchemeRow& r : rows) {
    std::snprintf(line, sizeof line, "  %-8s %-22s %-22s %-22s\n", r.name.c_str(),
                  syn_cell(r.raw_date_time, r.clean_date_time, r.date_time_pass).c_str(),
                  syn_cell(r.raw_event_id, r.clean_event_id, r.event_id_pass).c_str(),
                  syn_cell(r.raw_description, r.clean_description, r.description_pass).c_str());
    out << line;
  }

  out << "\nSemantic properties\n";
  std::snprintf(line, sizeof line, "  %-8s %-10s %-10s\n", "scheme", "chronology", "coherence");
  out << line;
  for (const SchemeRow& r : rows) {
    std::snprintf(line, sizeof line, "  %-8s %-10s %-10s\n", r.name.c_str(),
                  r.chronology_ok ? "ok" : "x", r.coherence_ok ? "ok" : "x");
    out << line;
  }

  std::snprintf(line, sizeof line,
                "\nenvironment: seed=%llu vocab=%zu generator_params=%zu duration=%.1fs\n",
                static_cast<unsigned long long>(master_seed), vocab_size, generator_params,
                duration_seconds);
  out << line;
  return out.str();
}

// ---- pipeline ----------------------------------------------------------------

namespace {

std::string spec_fingerprint(const ExperimentSpec& spec) {
  std::ostringstream s;
  s << spec.corpus_path << '|' << spec.n_train << '|' << spec.n_test << '|'
    << to_string(spec.mode) << '|' << spec.min_freq << '|' << spec.effective_max_seq_len() << '|'
    << spec.sample_count << '|' << spec.cleanse_before_validate << '|' << spec.master_seed << '|'
    << spec.pass_threshold << '|' << spec.rules_path << '|' << spec.rules_gap_seconds << '|'
    << spec.rules_chunk << '|'
    << spec.rules_min_support << '|' << spec.lexicon_min_count << '|' << spec.schema.field_count;
  for (TimestampStyle f : spec.schema.timestamp_formats) s << ',' << to_string(f);
  auto cfg = [&](const TrainConfig& c) {
    s << '|' << to_string(c.scheme) << ':' << c.mle_epochs << ',' << c.adv_epochs << ','
      << c.batch_size << ',' << c.g_lr_mle << ',' << c.g_lr_adv << ',' << c.d_lr << ','
      << c.rollouts << ',' << c.embed_dim << ',' << c.hidden_dim << ',' << c.max_seq_len << ','
      << c.seed;
  };
  cfg(spec.base_config);
  for (const TrainConfig& c : spec.scheme_configs) cfg(c);

  const std::string text = s.str();
  std::uint64_t h = 0;
  for (unsigned char c : text) h = mix64(h ^ c);
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

template <typename Fn>
auto run_stage(const std::string& name, Fn fn) {
  try {
    return fn();
  } catch (const StageFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw StageFailure(name, e.what());
  }
}

CorpusSplit stage_split(const ExperimentSpec& spec) {
  const std::string train_log = join_path(spec.out_dir, "train.log");
  const std::string test_log = join_path(spec.out_dir, "test.log");
  const std::string train_idx = join_path(spec.out_dir, "train.idx");
  const std::string test_idx = join_path(spec.out_dir, "test.idx");
  if (fs::exists(train_log) && fs::exists(test_log) && fs::exists(train_idx) &&
      fs::exists(test_idx)) {
    CorpusSplit split;
    split.seed = derive_seed(spec.master_seed, kTagSplit);
    ParsedLines train = parse_lines(read_lines(train_log), spec.schema);
    ParsedLines test = parse_lines(read_lines(test_log), spec.schema);
    split.train = std::move(train.entries);
    split.test = std::move(test.entries);
    split.train_lines = read_manifest(train_idx);
    split.test_lines = read_manifest(test_idx);
    return split;
  }
  CorpusSplit split = sample_split_file(spec.corpus_path, spec.schema, spec.n_train, spec.n_test,
                                        derive_seed(spec.master_seed, kTagSplit));
  write_log_file(train_log, LogFile{split.train, FileOrder::kUnknown}, spec.schema);
  write_log_file(test_log, LogFile{split.test, FileOrder::kUnknown}, spec.schema);
  write_manifest(train_idx, split.train_lines);
  write_manifest(test_idx, split.test_lines);
  return split;
}

Vocabulary stage_vocab(const ExperimentSpec& spec, const CorpusSplit& split) {
  const std::string path = join_path(spec.out_dir, "vocab.json");
  if (fs::exists(path)) {
    const nlohmann::json j = nlohmann::json::parse(read_text_file(path));
    return Vocabulary::from_tokens(j.at("tokens").get<std::vector<std::string>>(),
                                   j.at("mode").get<std::string>() == "char" ? TokenMode::kChar
                                                                             : TokenMode::kWord);
  }
  Vocabulary vocab = Vocabulary::build(split.train, spec.schema, spec.mode, spec.min_freq);
  nlohmann::json j;
  j["mode"] = to_string(vocab.mode());
  j["tokens"] = vocab.tokens();
  write_text_file(path, j.dump());
  return vocab;
}

CoherenceRuleSet stage_rules(const ExperimentSpec& spec, const CorpusSplit& split) {
  const std::string path = join_path(spec.out_dir, "rules.tsv");
  if (fs::exists(path)) return read_rules(path);
  CoherenceRuleSet rules;
  if (!spec.rules_path.empty()) {
    rules = read_rules(spec.rules_path);
  } else {
    // Mine from the train split, segmented at idle gaps (with a size cap):
    // bursts separated by quiet periods behave like self-contained files.
    std::vector<LogFile> segments;
    LogFile current;
    for (std::size_t i = 0; i < split.train.size(); ++i) {
      if (!current.entries.empty()) {
        const std::int64_t gap = to_epoch_seconds(split.train[i].timestamp) -
                                 to_epoch_seconds(current.entries.back().timestamp);
        if (gap > spec.rules_gap_seconds || current.entries.size() >= spec.rules_chunk) {
          segments.push_back(std::move(current));
          current = LogFile{};
        }
      }
      current.entries.push_back(split.train[i]);
    }
    if (!current.entries.empty()) segments.push_back(std::move(current));
    rules = mine_rules(segments, spec.rules_min_support);
  }
  write_rules(path, rules);
  return rules;
}

SequenceModel stage_pretrain(const ExperimentSpec& spec, const Vocabulary& vocab,
                             const EncodedCorpus& corpus) {
  const std::string ckpt = join_path(spec.out_dir, "pretrain.ckpt");
  const std::string csv = join_path(spec.out_dir, "mle_metrics.csv");
  if (fs::exists(ckpt) && fs::exists(csv)) {
    LoadedCheckpoint loaded = load_checkpoint(ckpt);
    if (!loaded.sequence_model) throw std::runtime_error("pretrain.ckpt is not a sequence model");
    return std::move(*loaded.sequence_model);
  }
  SequenceModel g =
      SequenceModel::init(static_cast<int>(vocab.size()), spec.base_config.embed_dim,
                          spec.base_config.hidden_dim, derive_seed(spec.master_seed, kTagPretrainInit));
  TrainingMetrics metrics = pretrain_mle(g, corpus, spec.base_config, [&](int epoch) {
    save_checkpoint(join_path(spec.out_dir, "pretrain_epoch" + std::to_string(epoch) + ".ckpt"), g,
                    vocab);
  });
  write_metrics_csv(csv, metrics.rows);
  save_checkpoint(ckpt, g, vocab);
  return g;
}

struct SchemeArtifacts {
  std::string name;
  MetricsRow final_metrics;
  std::vector<std::string> sample_lines;
};

SchemeArtifacts stage_scheme(const ExperimentSpec& spec, std::size_t index,
                             const SequenceModel& pretrained, const Vocabulary& vocab,
                             const EncodedCorpus& corpus) {
  const TrainConfig& cfg = spec.scheme_configs[index];
  const std::string name = to_string(cfg.scheme);
  const std::string ckpt = join_path(spec.out_dir, name + ".ckpt");
  const std::string csv = join_path(spec.out_dir, name + "_metrics.csv");
  const std::string samples_path = join_path(spec.out_dir, name + "_samples.log");

  SchemeArtifacts art;
  art.name = name;

  SequenceModel g = pretrained;
  if (fs::exists(ckpt) && fs::exists(csv) && fs::exists(samples_path)) {
    LoadedCheckpoint loaded = load_checkpoint(ckpt);
    if (!loaded.sequence_model) throw std::runtime_error(ckpt + " is not a sequence model");
    g = std::move(*loaded.sequence_model);
    art.sample_lines = read_lines(samples_path);
    const auto rows = read_metrics_csv(csv);
    if (!rows.empty()) art.final_metrics = rows.back();
    return art;
  }

  const auto hook = [&](int epoch) {
    save_checkpoint(join_path(spec.out_dir, name + "_epoch" + std::to_string(epoch) + ".ckpt"), g,
                    vocab);
  };

  {
    TrainingMetrics metrics;
    if (cfg.scheme == TrainScheme::kPolicyGradient) {
      Discriminator d = Discriminator::init(static_cast<int>(vocab.size()), cfg.embed_dim,
                                            cfg.hidden_dim,
                                            derive_seed(spec.master_seed, kTagDiscInit, index));
      metrics = train_adversarial_pg(g, d, corpus, cfg, hook);
      save_checkpoint(join_path(spec.out_dir, name + "_d.ckpt"), d, vocab);
    } else if (cfg.scheme == TrainScheme::kImportanceWeighted) {
      Discriminator d = Discriminator::init(static_cast<int>(vocab.size()), cfg.embed_dim,
                                            cfg.hidden_dim,
                                            derive_seed(spec.master_seed, kTagDiscInit, index));
      metrics = train_adversarial_iw(g, d, corpus, cfg, hook);
      save_checkpoint(join_path(spec.out_dir, name + "_d.ckpt"), d, vocab);
    } else {
      SequenceModel mediator =
          SequenceModel::init(static_cast<int>(vocab.size()), cfg.embed_dim, cfg.hidden_dim,
                              derive_seed(spec.master_seed, kTagMediatorInit, index));
      Discriminator aux_d = Discriminator::init(static_cast<int>(vocab.size()), cfg.embed_dim,
                                                cfg.hidden_dim,
                                                derive_seed(spec.master_seed, kTagAuxDInit, index));
      metrics = train_cooperative(g, mediator, aux_d, corpus, cfg, hook);
      save_checkpoint(join_path(spec.out_dir, name + "_mediator.ckpt"), mediator, vocab);
      save_checkpoint(join_path(spec.out_dir, name + "_d.ckpt"), aux_d, vocab);
    }
    if (metrics.rows.empty()) {
      metrics.rows.push_back(compute_metrics(g, nullptr, corpus, cfg, 0, 0.0, 0.0));
    }
    write_metrics_csv(csv, metrics.rows);
    // Round the reported row through the CSV so a fresh run and a resumed run
    // render byte-identical reports.
    art.final_metrics = read_metrics_csv(csv).back();
    save_checkpoint(ckpt, g, vocab);

    NoiseSource noise(derive_seed(spec.master_seed, kTagSample, index));
    SampleOptions opts;
    opts.max_len = spec.effective_max_seq_len();
    auto seqs = sample_sequences(g, noise, spec.sample_count, opts);
    std::ofstream out(samples_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + samples_path);
    art.sample_lines.clear();
    for (const TokenSequence& s : seqs) {
      art.sample_lines.push_back(vocab.decode(s));
      out << art.sample_lines.back() << '\n';
    }
  }
  return art;
}

std::vector<std::string> stage_static(const ExperimentSpec& spec, const CorpusSplit& split,
                                      const CoherenceRuleSet& rules) {
  const std::string path = join_path(spec.out_dir, "static_samples.log");
  if (fs::exists(path)) return read_lines(path);
  const GenTemplate tmpl = mine_template(split.train, 20, spec.lexicon_min_count);
  const LogFile file = generate_static(tmpl, spec.sample_count,
                                       derive_seed(spec.master_seed, kTagStatic),
                                       FileOrder::kAscending, rules);
  write_log_file(path, file, spec.schema);
  return read_lines(path);
}

SchemeRow evaluate_samples(const ExperimentSpec& spec, const std::string& name, bool is_static,
                           const MetricsRow& final_metrics,
                           const std::vector<std::string>& raw_lines, const LogFile& real_heldout,
                           const CoherenceRuleSet& rules, const EventCodeLexicon& lexicon) {
  SchemeRow row;
  row.name = name;
  row.is_static = is_static;
  row.final_metrics = final_metrics;
  row.sample_count = raw_lines.size();

  const PropertyReport raw = check_syntactic(raw_lines, spec.schema, lexicon);
  row.raw_date_time = raw.date_time_rate();
  row.raw_event_id = raw.event_id_rate();
  row.raw_description = raw.description_rate();

  std::vector<std::string> cleansed;
  cleansed.reserve(raw_lines.size());
  for (const std::string& line : raw_lines) cleansed.push_back(cleanse_whitespace(line));
  const std::vector<std::string>& judged =
      spec.cleanse_before_validate ? cleansed : raw_lines;
  const PropertyReport clean = check_syntactic(cleansed, spec.schema, lexicon);
  row.clean_date_time = clean.date_time_rate();
  row.clean_event_id = clean.event_id_rate();
  row.clean_description = clean.description_rate();
  row.date_time_pass = row.clean_date_time >= spec.pass_threshold;
  row.event_id_pass = row.clean_event_id >= spec.pass_threshold;
  row.description_pass = row.clean_description >= spec.pass_threshold;

  ParsedLines parsed = parse_lines(judged, spec.schema);
  row.parseable_entries = parsed.entries.size();
  LogFile generated{std::move(parsed.entries), FileOrder::kUnknown};
  if (generated.entries.empty()) {
    row.chronology_ok = false;
    row.coherence_ok = false;
  } else {
    const SemanticsRow sem = compare_semantics(generated, real_heldout, rules);
    row.chronology_ok = sem.chronology_ok;
    row.coherence_ok = sem.coherence_ok;
  }
  return row;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto started = std::chrono::steady_clock::now();
  fs::create_directories(spec.out_dir);

  const std::string fingerprint = spec_fingerprint(spec);
  const std::string fingerprint_path = join_path(spec.out_dir, "spec.fingerprint");
  if (fs::exists(fingerprint_path)) {
    if (read_text_file(fingerprint_path) != fingerprint) {
      throw StageFailure("fingerprint",
                         "output directory holds artifacts of a different spec; "
                         "use a fresh out_dir or delete " +
                             fingerprint_path);
    }
  } else {
    write_text_file(fingerprint_path, fingerprint);
  }

  const CorpusSplit split = run_stage("split", [&] { return stage_split(spec); });
  const Vocabulary vocab = run_stage("vocab", [&] { return stage_vocab(spec, split); });
  const CoherenceRuleSet rules = run_stage("rules", [&] { return stage_rules(spec, split); });
  const EventCodeLexicon lexicon = mine_lexicon(split.train, spec.lexicon_min_count);
  const EncodedCorpus corpus =
      encode_corpus(split, vocab, spec.schema, spec.effective_max_seq_len());

  SequenceModel pretrained;
  std::size_t generator_params = 0;
  if (!spec.scheme_configs.empty()) {
    pretrained = run_stage("pretrain", [&] { return stage_pretrain(spec, vocab, corpus); });
    generator_params = pretrained.param_count();
  }

  std::vector<SchemeArtifacts> artifacts(spec.scheme_configs.size());
  if (spec.parallel_schemes && spec.scheme_configs.size() > 1) {
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(spec.scheme_configs.size());
    for (std::size_t i = 0; i < spec.scheme_configs.size(); ++i) {
      workers.emplace_back([&, i] {
        try {
          artifacts[i] = stage_scheme(spec, i, pretrained, vocab, corpus);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
    for (std::thread& w : workers) w.join();
    for (std::size_t i = 0; i < errors.size(); ++i) {
      if (!errors[i]) continue;
      try {
        std::rethrow_exception(errors[i]);
      } catch (const StageFailure&) {
        throw;
      } catch (const std::exception& e) {
        throw StageFailure(to_string(spec.scheme_configs[i].scheme), e.what());
      }
    }
  } else {
    for (std::size_t i = 0; i < spec.scheme_configs.size(); ++i) {
      artifacts[i] = run_stage(to_string(spec.scheme_configs[i].scheme),
                               [&] { return stage_scheme(spec, i, pretrained, vocab, corpus); });
    }
  }

  const std::vector<std::string> static_lines =
      run_stage("static", [&] { return stage_static(spec, split, rules); });

  ExperimentReport report = run_stage("report", [&] {
    ExperimentReport rep;
    rep.pass_threshold = spec.pass_threshold;
    rep.master_seed = spec.master_seed;
    rep.vocab_size = vocab.size();
    rep.generator_params = generator_params;
    const LogFile real_heldout{split.test, FileOrder::kUnknown};
    for (std::size_t i = 0; i < artifacts.size(); ++i) {
      rep.rows.push_back(evaluate_samples(spec, artifacts[i].name, false,
                                          artifacts[i].final_metrics, artifacts[i].sample_lines,
                                          real_heldout, rules, lexicon));
    }
    MetricsRow blank;
    blank.epoch = 0;
    blank.g_loss = blank.d_loss = blank.g_nll = blank.d_nll = blank.acc = blank.diversity =
        std::numeric_limits<double>::quiet_NaN();
    rep.rows.push_back(evaluate_samples(spec, "static", true, blank, static_lines, real_heldout,
                                        rules, lexicon));
    return rep;
  });

  report.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_text_file(join_path(spec.out_dir, "report.json"), report.to_json());
  write_text_file(join_path(spec.out_dir, "report.txt"), report.to_text());
  return report;
}

ExperimentReport load_report(const std::string& out_dir) {
  return report_from_json(read_text_file(join_path(out_dir, "report.json")));
}

}  // namespace logforge
