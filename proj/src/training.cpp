#include "logforge/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <set>

#include "logforge/rng.hpp"

namespace logforge {

namespace {

constexpr std::uint64_t kTagMleShuffle = 101;
constexpr std::uint64_t kTagAdvShuffle = 102;
constexpr std::uint64_t kTagDNoise = 103;
constexpr std::uint64_t kTagGSample = 104;
constexpr std::uint64_t kTagRollout = 105;
constexpr std::uint64_t kTagMetrics = 106;
constexpr std::uint64_t kTagProbe = 107;
constexpr std::uint64_t kTagMediator = 108;
constexpr std::uint64_t kTagAuxD = 109;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kProbeSamples = 200;

}  // namespace

const char* to_string(TrainScheme scheme) {
  switch (scheme) {
    case TrainScheme::kPolicyGradient: return "pg";
    case TrainScheme::kImportanceWeighted: return "iw";
    case TrainScheme::kCooperative: return "coop";
  }
  return "?";
}

std::optional<TrainScheme> train_scheme_from_string(const std::string& name) {
  if (name == "pg") return TrainScheme::kPolicyGradient;
  if (name == "iw") return TrainScheme::kImportanceWeighted;
  if (name == "coop") return TrainScheme::kCooperative;
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (mle_epochs < 0 || adv_epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (rollouts < 1) throw ConfigError("rollouts must be >= 1");
  if (g_lr_mle <= 0 || g_lr_adv <= 0 || d_lr <= 0) throw ConfigError("learning rates must be > 0");
  if (embed_dim < 1 || hidden_dim < 1) throw ConfigError("model dims must be >= 1");
  if (max_seq_len < 3) throw ConfigError("max_seq_len must be >= 3");
}

TrainConfig apply_train_config(TrainConfig base, const KeyValueConfig& cfg,
                               const std::string& prefix) {
  auto key = [&](const char* k) { return prefix + k; };
  base.mle_epochs = static_cast<int>(cfg.get_int_or(key("mle_epochs"), base.mle_epochs));
  base.adv_epochs = static_cast<int>(cfg.get_int_or(key("adv_epochs"), base.adv_epochs));
  base.batch_size = static_cast<int>(cfg.get_int_or(key("batch_size"), base.batch_size));
  base.g_lr_mle = cfg.get_double_or(key("g_lr_mle"), base.g_lr_mle);
  base.g_lr_adv = cfg.get_double_or(key("g_lr_adv"), base.g_lr_adv);
  base.d_lr = cfg.get_double_or(key("d_lr"), base.d_lr);
  base.rollouts = static_cast<int>(cfg.get_int_or(key("rollouts"), base.rollouts));
  base.embed_dim = static_cast<int>(cfg.get_int_or(key("embed_dim"), base.embed_dim));
  base.hidden_dim = static_cast<int>(cfg.get_int_or(key("hidden_dim"), base.hidden_dim));
  base.max_seq_len =
      static_cast<std::size_t>(cfg.get_int_or(key("max_seq_len"), static_cast<std::int64_t>(base.max_seq_len)));
  base.seed = static_cast<std::uint64_t>(
      cfg.get_int_or(key("seed"), static_cast<std::int64_t>(base.seed)));
  if (cfg.has(key("scheme"))) {
    auto scheme = train_scheme_from_string(cfg.get(key("scheme")));
    if (!scheme) throw ConfigError("unknown scheme: " + cfg.get(key("scheme")));
    base.scheme = *scheme;
  }
  return base;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open metrics csv for writing: " + path);
  out << "epoch,g_loss,d_loss,g_nll,d_nll,acc\n";
  auto cell = [](double v) {
    if (std::isnan(v)) return std::string("nan");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };
  for (const MetricsRow& r : rows) {
    out << r.epoch << ',' << cell(r.g_loss) << ',' << cell(r.d_loss) << ',' << cell(r.g_nll)
        << ',' << cell(r.d_nll) << ',' << cell(r.acc) << '\n';
  }
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::vector<MetricsRow> rows;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open metrics csv: " + path);
  std::string line;
  if (!std::getline(in, line)) return rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    MetricsRow r;
    r.diversity = std::numeric_limits<double>::quiet_NaN();
    auto next = [&]() -> double {
      if (!std::getline(cells, cell, ',')) throw std::runtime_error("short metrics row: " + line);
      return cell == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(cell);
    };
    r.epoch = static_cast<int>(next());
    r.g_loss = next();
    r.d_loss = next();
    r.g_nll = next();
    r.d_nll = next();
    r.acc = next();
    rows.push_back(r);
  }
  return rows;
}

EncodedCorpus encode_corpus(const CorpusSplit& split, const Vocabulary& vocab,
                            const FieldSchema& schema, std::size_t max_len) {
  EncodedCorpus out;
  out.train.reserve(split.train.size());
  out.test.reserve(split.test.size());
  for (const LogEntry& e : split.train) out.train.push_back(vocab.encode(serialize_entry(e, schema), max_len));
  for (const LogEntry& e : split.test) out.test.push_back(vocab.encode(serialize_entry(e, schema), max_len));
  return out;
}

std::vector<double> importance_weights(const std::vector<float>& d_scores) {
  std::vector<double> weights(d_scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < d_scores.size(); ++i) {
    const double s = d_scores[i];
    if (!(s > 0.0 && s < 1.0)) {
      throw DomainError("discriminator score outside (0,1): " + std::to_string(s));
    }
    weights[i] = s / (1.0 - s);
    total += weights[i];
  }
  for (double& w : weights) w /= total;
  return weights;
}

double sample_diversity(const SequenceModel& net, std::uint64_t seed, std::size_t probe_count,
                        std::size_t max_len) {
  NoiseSource noise(seed);
  SampleOptions opts;
  opts.max_len = max_len;
  auto samples = sample_sequences(net, noise, probe_count, opts);
  std::set<std::int32_t> distinct;
  std::size_t total = 0;
  for (const TokenSequence& s : samples) {
    for (std::size_t i = 1; i < s.ids.size(); ++i) {  // skip the BOS frame marker
      distinct.insert(s.ids[i]);
      ++total;
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(distinct.size()) / static_cast<double>(total);
}

namespace {

using ParamList = std::vector<std::pair<std::string, Tensor*>>;

std::vector<Tensor> snapshot_params(ParamList params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (auto& [name, tensor] : params) out.push_back(*tensor);
  return out;
}

void restore_params(ParamList params, const std::vector<Tensor>& snap) {
  for (std::size_t i = 0; i < params.size(); ++i) *params[i].second = snap[i];
}

std::vector<TokenSequence> gather(const std::vector<TokenSequence>& pool,
                                  const std::vector<std::size_t>& order, std::size_t begin,
                                  std::size_t count) {
  std::vector<TokenSequence> out;
  out.reserve(count);
  for (std::size_t i = begin; i < begin + count; ++i) out.push_back(pool[order[i]]);
  return out;
}

SampleOptions sampling_options(const TrainConfig& cfg) {
  SampleOptions opts;
  opts.max_len = cfg.max_seq_len;
  return opts;
}

}  // namespace

double discriminator_step_labeled(Discriminator& d, const std::vector<TokenSequence>& reals,
                                  const std::vector<TokenSequence>& fakes, double lr) {
  std::vector<TokenSequence> all = reals;
  all.insert(all.end(), fakes.begin(), fakes.end());
  const TokenBatch batch = make_batch(all);

  Graph graph;
  auto bound = bind_params(graph, d);
  const int probs = disc_forward_graph(graph, d, bound, batch);
  std::vector<float> labels(all.size(), 0.0f);
  for (std::size_t i = 0; i < reals.size(); ++i) labels[i] = 1.0f;
  const int loss = graph.bce_loss(probs, std::move(labels));
  graph.backward_from(loss);
  sgd_step(graph, bound, static_cast<float>(lr));
  return graph.scalar(loss);
}

double discriminator_step(Discriminator& d, const std::vector<TokenSequence>& reals,
                          const SequenceModel& g, const TrainConfig& cfg,
                          std::uint64_t noise_seed) {
  NoiseSource noise(noise_seed);
  auto fakes = sample_sequences(g, noise, reals.size(), sampling_options(cfg));
  return discriminator_step_labeled(d, reals, fakes, cfg.d_lr);
}

double pg_generator_step(SequenceModel& g, const Discriminator& d, const TrainConfig& cfg,
                         std::uint64_t sample_seed, std::uint64_t rollout_seed, double& baseline,
                         bool& baseline_ready) {
  const std::size_t batch_size = static_cast<std::size_t>(cfg.batch_size);
  NoiseSource sample_noise(sample_seed);
  auto seqs = sample_sequences(g, sample_noise, batch_size, sampling_options(cfg));
  const TokenBatch batch = make_batch(seqs);

  // Per-transition rewards. The final transition of each row is scored by the
  // discriminator on the finished sequence; earlier ones by the mean score of
  // K Monte-Carlo completions.
  std::vector<std::vector<double>> reward(batch_size);
  for (std::size_t b = 0; b < batch_size; ++b) {
    reward[b].assign(seqs[b].ids.size() > 0 ? seqs[b].ids.size() - 1 : 0, 0.0);
  }
  const auto full_scores = discriminate_batch(d, seqs);
  for (std::size_t b = 0; b < batch_size; ++b) {
    if (!reward[b].empty()) reward[b].back() = full_scores[b];
  }

  auto state = make_plain_state<float>(static_cast<int>(batch_size), g.hidden_dim);
  std::vector<std::int32_t> cur(batch_size);
  for (int p = 0; p + 1 < batch.length; ++p) {
    for (std::size_t b = 0; b < batch_size; ++b) cur[b] = batch.id_at(static_cast<int>(b), p);
    plain_gru_step(g.cell, g.embedding, g.embed_dim, g.hidden_dim, cur, state);
    // state covers positions 0..p. Transition t = p scores the prefix through
    // position p+1, so rollouts resume after feeding p+1 into a scratch copy.
    std::vector<std::size_t> active;
    for (std::size_t b = 0; b < batch_size; ++b) {
      const std::size_t len = seqs[b].ids.size();
      // transition t = p exists when p+1 < len; it is non-final when p+2 < len
      if (p + 2 < len) active.push_back(b);
    }
    // Feed position p+1 into a scratch copy to get the rollout start state.
    if (!active.empty()) {
      auto roll_base = make_plain_state<float>(static_cast<int>(active.size()), g.hidden_dim);
      for (std::size_t i = 0; i < active.size(); ++i) {
        const float* src = state.h.data() + active[i] * static_cast<std::size_t>(g.hidden_dim);
        std::copy(src, src + g.hidden_dim,
                  roll_base.h.data() + i * static_cast<std::size_t>(g.hidden_dim));
      }
      std::vector<std::int32_t> next_tok(active.size());
      for (std::size_t i = 0; i < active.size(); ++i) {
        next_tok[i] = batch.id_at(static_cast<int>(active[i]), p + 1);
      }
      std::vector<float> roll_logits;
      plain_lm_step(g, next_tok, roll_base, roll_logits);
      // roll_base now covers prefix 0..p+1 for every active row.

      std::vector<TokenSequence> completions;
      completions.reserve(active.size() * static_cast<std::size_t>(cfg.rollouts));
      for (int k = 0; k < cfg.rollouts; ++k) {
        NoiseSource roll_noise(derive_seed(rollout_seed, static_cast<std::uint64_t>(p),
                                           static_cast<std::uint64_t>(k)));
        auto roll_state = roll_base;
        std::vector<float> step_logits = roll_logits;
        std::vector<TokenSequence> partial(active.size());
        std::vector<std::uint8_t> alive(active.size(), 1);
        for (std::size_t i = 0; i < active.size(); ++i) {
          partial[i].ids.assign(seqs[active[i]].ids.begin(),
                                seqs[active[i]].ids.begin() + p + 2);
        }
        std::size_t live = active.size();
        std::vector<std::int32_t> roll_cur(active.size());
        std::vector<double> probs(static_cast<std::size_t>(g.vocab));
        while (live > 0) {
          live = 0;
          for (std::size_t i = 0; i < active.size(); ++i) {
            if (!alive[i]) {
              roll_cur[i] = TokenIds::kPad;
              continue;
            }
            const float* row = step_logits.data() + i * static_cast<std::size_t>(g.vocab);
            double mx = row[0];
            for (int v = 1; v < g.vocab; ++v) mx = std::max(mx, static_cast<double>(row[v]));
            double sum = 0.0;
            for (int v = 0; v < g.vocab; ++v) {
              probs[static_cast<std::size_t>(v)] = std::exp(row[v] - mx);
              sum += probs[static_cast<std::size_t>(v)];
            }
            double u = roll_noise.unit() * sum;
            std::int32_t tok = g.vocab - 1;
            for (int v = 0; v < g.vocab; ++v) {
              u -= probs[static_cast<std::size_t>(v)];
              if (u < 0.0) {
                tok = v;
                break;
              }
            }
            partial[i].ids.push_back(tok);
            roll_cur[i] = tok;
            if (tok != TokenIds::kEos && partial[i].ids.size() < cfg.max_seq_len) {
              ++live;
            } else {
              alive[i] = 0;
            }
          }
          if (live > 0) plain_lm_step(g, roll_cur, roll_state, step_logits);
        }
        for (auto& seq : partial) completions.push_back(std::move(seq));
      }
      const auto scores = discriminate_batch(d, completions);
      for (std::size_t i = 0; i < active.size(); ++i) {
        double mean = 0.0;
        for (int k = 0; k < cfg.rollouts; ++k) {
          mean += scores[static_cast<std::size_t>(k) * active.size() + i];
        }
        reward[active[i]][static_cast<std::size_t>(p)] = mean / cfg.rollouts;
      }
    }
  }

  // Moving-average baseline; initialized to the first observed batch mean so
  // a constant reward yields an exactly zero update.
  double mean_reward = 0.0;
  std::size_t reward_count = 0;
  for (const auto& row : reward) {
    for (double r : row) {
      mean_reward += r;
      ++reward_count;
    }
  }
  mean_reward = reward_count ? mean_reward / reward_count : 0.0;
  if (!baseline_ready) {
    baseline = mean_reward;
    baseline_ready = true;
  }
  const double advantage_base = baseline;
  baseline = 0.9 * baseline + 0.1 * mean_reward;

  std::vector<std::vector<double>> advantage(batch_size);
  for (std::size_t b = 0; b < batch_size; ++b) {
    advantage[b].resize(reward[b].size());
    for (std::size_t t = 0; t < reward[b].size(); ++t) {
      advantage[b][t] = reward[b][t] - advantage_base;
    }
  }

  Graph graph;
  auto bound = bind_params(graph, g);
  auto unroll = lm_teacher_forced(graph, g, bound, batch);
  const int loss = pg_surrogate_loss(graph, unroll, advantage, cfg.batch_size);
  graph.backward_from(loss);
  sgd_step(graph, bound, static_cast<float>(cfg.g_lr_adv));
  return graph.scalar(loss);
}

double iw_generator_step(SequenceModel& g, const Discriminator& d, const TrainConfig& cfg,
                         std::uint64_t sample_seed) {
  const std::size_t batch_size = static_cast<std::size_t>(cfg.batch_size);
  NoiseSource noise(sample_seed);
  auto seqs = sample_sequences(g, noise, batch_size, sampling_options(cfg));
  const auto scores = discriminate_batch(d, seqs);
  const auto weights = importance_weights(scores);

  std::vector<double> coeff(batch_size);
  for (std::size_t b = 0; b < batch_size; ++b) {
    coeff[b] = weights[b] - 1.0 / static_cast<double>(batch_size);
  }

  const TokenBatch batch = make_batch(seqs);
  Graph graph;
  auto bound = bind_params(graph, g);
  auto unroll = lm_teacher_forced(graph, g, bound, batch);
  const int loss = iw_surrogate_loss(graph, unroll, coeff);
  graph.backward_from(loss);
  sgd_step(graph, bound, static_cast<float>(cfg.g_lr_adv));
  return graph.scalar(loss);
}

double cooperative_mediator_step(SequenceModel& mediator,
                                 const std::vector<TokenSequence>& real_half,
                                 const SequenceModel& g, const TrainConfig& cfg,
                                 std::uint64_t noise_seed) {
  NoiseSource noise(noise_seed);
  auto fakes = sample_sequences(g, noise, real_half.size(), sampling_options(cfg));
  std::vector<TokenSequence> all = real_half;
  all.insert(all.end(), fakes.begin(), fakes.end());
  const TokenBatch batch = make_batch(all);

  Graph graph;
  auto bound = bind_params(graph, mediator);
  auto unroll = lm_teacher_forced(graph, mediator, bound, batch);
  const int loss = mle_loss(graph, unroll);
  graph.backward_from(loss);
  sgd_step(graph, bound, static_cast<float>(cfg.d_lr));
  return graph.scalar(loss);
}

double cooperative_generator_step(SequenceModel& g, const SequenceModel& mediator,
                                  const TrainConfig& cfg, std::uint64_t sample_seed) {
  const std::size_t batch_size = static_cast<std::size_t>(cfg.batch_size);
  NoiseSource noise(sample_seed);
  auto seqs = sample_sequences(g, noise, batch_size, sampling_options(cfg));
  const TokenBatch batch = make_batch(seqs);
  const auto ref = plain_step_logps(mediator, batch);

  Graph graph;
  auto bound = bind_params(graph, g);
  auto unroll = lm_teacher_forced(graph, g, bound, batch);
  const int loss = coop_kl_loss(graph, unroll, ref);
  graph.backward_from(loss);
  sgd_step(graph, bound, static_cast<float>(cfg.g_lr_adv));
  return graph.scalar(loss);
}

MetricsRow compute_metrics(const SequenceModel& g, const Discriminator* d,
                           const EncodedCorpus& corpus, const TrainConfig& cfg, int epoch,
                           double g_loss, double d_loss) {
  MetricsRow row;
  row.epoch = epoch;
  row.g_loss = g_loss;
  row.d_loss = d_loss;
  row.g_nll = plain_nll(g, corpus.test);
  row.diversity = sample_diversity(g, derive_seed(cfg.seed, kTagProbe, static_cast<std::uint64_t>(epoch)),
                                   kProbeSamples, cfg.max_seq_len);
  if (d == nullptr || corpus.test.empty()) {
    row.d_nll = kNaN;
    row.acc = kNaN;
    return row;
  }

  NoiseSource noise(derive_seed(cfg.seed, kTagMetrics, static_cast<std::uint64_t>(epoch)));
  auto fakes = sample_sequences(g, noise, corpus.test.size(), sampling_options(cfg));
  const auto real_scores = discriminate_batch(*d, corpus.test);
  const auto fake_scores = discriminate_batch(*d, fakes);

  double nll = 0.0;
  std::size_t correct = 0;
  for (float s : real_scores) {
    nll -= std::log(std::max(1e-7, static_cast<double>(s)));
    if (s > 0.5f) ++correct;
  }
  for (float s : fake_scores) {
    nll -= std::log(std::max(1e-7, 1.0 - static_cast<double>(s)));
    if (s <= 0.5f) ++correct;
  }
  const double total = static_cast<double>(real_scores.size() + fake_scores.size());
  row.d_nll = nll / total;
  row.acc = static_cast<double>(correct) / total;
  return row;
}

TrainingMetrics pretrain_mle(SequenceModel& g, const EncodedCorpus& corpus,
                             const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (corpus.train.empty()) throw ConfigError("empty training corpus");
  TrainingMetrics metrics;
  std::vector<std::size_t> order(corpus.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < cfg.mle_epochs; ++epoch) {
    const auto snapshot = snapshot_params(g.params());
    SplitMix64 shuffle_rng(derive_seed(cfg.seed, kTagMleShuffle, static_cast<std::uint64_t>(epoch)));
    shuffle(order, shuffle_rng);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    try {
      for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
        const std::size_t count = std::min<std::size_t>(cfg.batch_size, order.size() - begin);
        const TokenBatch batch = make_batch(gather(corpus.train, order, begin, count));
        Graph graph;
        auto bound = bind_params(graph, g);
        auto unroll = lm_teacher_forced(graph, g, bound, batch);
        const int loss = mle_loss(graph, unroll);
        graph.backward_from(loss);
        sgd_step(graph, bound, static_cast<float>(cfg.g_lr_mle));
        loss_sum += graph.scalar(loss);
        ++batches;
      }
    } catch (const NumericalError&) {
      restore_params(g.params(), snapshot);
      break;
    }
    metrics.rows.push_back(
        compute_metrics(g, nullptr, corpus, cfg, epoch, loss_sum / std::max<std::size_t>(1, batches), kNaN));
    if (on_epoch) on_epoch(epoch);
  }
  return metrics;
}

namespace {

template <typename GStep>
TrainingMetrics adversarial_loop(SequenceModel& g, Discriminator& d, const EncodedCorpus& corpus,
                                 const TrainConfig& cfg, GStep g_step,
                                 const EpochCallback& on_epoch) {
  cfg.validate();
  if (corpus.train.empty()) throw ConfigError("empty training corpus");
  TrainingMetrics metrics;
  std::vector<std::size_t> order(corpus.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < cfg.adv_epochs; ++epoch) {
    const auto g_snapshot = snapshot_params(g.params());
    const auto d_snapshot = snapshot_params(d.params());
    SplitMix64 shuffle_rng(derive_seed(cfg.seed, kTagAdvShuffle, static_cast<std::uint64_t>(epoch)));
    shuffle(order, shuffle_rng);

    double g_loss_sum = 0.0, d_loss_sum = 0.0;
    std::size_t batches = 0;
    try {
      std::size_t batch_index = 0;
      for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++batch_index) {
        const std::size_t count = std::min<std::size_t>(cfg.batch_size, order.size() - begin);
        g_loss_sum += g_step(epoch, batch_index);
        d_loss_sum += discriminator_step(
            d, gather(corpus.train, order, begin, count), g, cfg,
            derive_seed(cfg.seed, kTagDNoise, static_cast<std::uint64_t>(epoch), batch_index));
        ++batches;
      }
    } catch (const NumericalError&) {
      restore_params(g.params(), g_snapshot);
      restore_params(d.params(), d_snapshot);
      break;
    }
    metrics.rows.push_back(compute_metrics(g, &d, corpus, cfg, epoch,
                                           g_loss_sum / std::max<std::size_t>(1, batches),
                                           d_loss_sum / std::max<std::size_t>(1, batches)));
    if (on_epoch) on_epoch(epoch);
  }
  return metrics;
}

}  // namespace

TrainingMetrics train_adversarial_pg(SequenceModel& g, Discriminator& d,
                                     const EncodedCorpus& corpus, const TrainConfig& cfg,
                                     const EpochCallback& on_epoch) {
  if (cfg.scheme != TrainScheme::kPolicyGradient) {
    throw ConfigError("config scheme is not pg");
  }
  double baseline = 0.0;
  bool baseline_ready = false;
  return adversarial_loop(
      g, d, corpus, cfg,
      [&](int epoch, std::size_t batch_index) {
        return pg_generator_step(
            g, d, cfg,
            derive_seed(cfg.seed, kTagGSample, static_cast<std::uint64_t>(epoch), batch_index),
            derive_seed(cfg.seed, kTagRollout, static_cast<std::uint64_t>(epoch), batch_index),
            baseline, baseline_ready);
      },
      on_epoch);
}

TrainingMetrics train_adversarial_iw(SequenceModel& g, Discriminator& d,
                                     const EncodedCorpus& corpus, const TrainConfig& cfg,
                                     const EpochCallback& on_epoch) {
  if (cfg.scheme != TrainScheme::kImportanceWeighted) {
    throw ConfigError("config scheme is not iw");
  }
  return adversarial_loop(
      g, d, corpus, cfg,
      [&](int epoch, std::size_t batch_index) {
        return iw_generator_step(
            g, d, cfg,
            derive_seed(cfg.seed, kTagGSample, static_cast<std::uint64_t>(epoch), batch_index));
      },
      on_epoch);
}

TrainingMetrics train_cooperative(SequenceModel& g, SequenceModel& mediator, Discriminator& aux_d,
                                  const EncodedCorpus& corpus, const TrainConfig& cfg,
                                  const EpochCallback& on_epoch) {
  if (cfg.scheme != TrainScheme::kCooperative) {
    throw ConfigError("config scheme is not coop");
  }
  cfg.validate();
  if (corpus.train.empty()) throw ConfigError("empty training corpus");
  TrainingMetrics metrics;
  std::vector<std::size_t> order(corpus.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < cfg.adv_epochs; ++epoch) {
    const auto g_snapshot = snapshot_params(g.params());
    const auto m_snapshot = snapshot_params(mediator.params());
    const auto d_snapshot = snapshot_params(aux_d.params());
    SplitMix64 shuffle_rng(derive_seed(cfg.seed, kTagAdvShuffle, static_cast<std::uint64_t>(epoch)));
    shuffle(order, shuffle_rng);

    double g_loss_sum = 0.0, m_loss_sum = 0.0;
    std::size_t batches = 0;
    try {
      std::size_t batch_index = 0;
      for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++batch_index) {
        const std::size_t count = std::min<std::size_t>(cfg.batch_size, order.size() - begin);
        const std::size_t half = std::max<std::size_t>(1, count / 2);
        m_loss_sum += cooperative_mediator_step(
            mediator, gather(corpus.train, order, begin, half), g, cfg,
            derive_seed(cfg.seed, kTagMediator, static_cast<std::uint64_t>(epoch), batch_index));
        g_loss_sum += cooperative_generator_step(
            g, mediator, cfg,
            derive_seed(cfg.seed, kTagGSample, static_cast<std::uint64_t>(epoch), batch_index));
        ++batches;
      }
      // Post-hoc reporting discriminator: the mediator defines no accuracy,
      // so train a plain classifier against the current generator.
      batch_index = 0;
      for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++batch_index) {
        const std::size_t count = std::min<std::size_t>(cfg.batch_size, order.size() - begin);
        discriminator_step(aux_d, gather(corpus.train, order, begin, count), g, cfg,
                     derive_seed(cfg.seed, kTagAuxD, static_cast<std::uint64_t>(epoch), batch_index));
      }
    } catch (const NumericalError&) {
      restore_params(g.params(), g_snapshot);
      restore_params(mediator.params(), m_snapshot);
      restore_params(aux_d.params(), d_snapshot);
      break;
    }
    metrics.rows.push_back(compute_metrics(g, &aux_d, corpus, cfg, epoch,
                                           g_loss_sum / std::max<std::size_t>(1, batches),
                                           m_loss_sum / std::max<std::size_t>(1, batches)));
    if (on_epoch) on_epoch(epoch);
  }
  return metrics;
}

std::optional<CollapseAlarm> detect_collapse(const std::vector<MetricsRow>& history,
                                             std::size_t window) {
  if (window == 0 || history.size() < window) return std::nullopt;
  for (std::size_t i = history.size() - window; i < history.size(); ++i) {
    const MetricsRow& r = history[i];
    if (std::isnan(r.acc) || !(r.diversity < 0.1 && r.acc > 0.8)) return std::nullopt;
  }
  const MetricsRow& last = history.back();
  return CollapseAlarm{last.epoch, last.diversity, last.acc};
}

}  // namespace logforge
