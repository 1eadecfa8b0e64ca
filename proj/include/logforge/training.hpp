#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "logforge/config.hpp"
#include "logforge/corpus.hpp"
#include "logforge/nets.hpp"

namespace logforge {

enum class TrainScheme : std::uint8_t { kPolicyGradient, kImportanceWeighted, kCooperative };

const char* to_string(TrainScheme scheme);
std::optional<TrainScheme> train_scheme_from_string(const std::string& name);

struct TrainConfig {
  int mle_epochs = 50;
  int adv_epochs = 3;
  int batch_size = 32;
  double g_lr_mle = 1e-2;   // plain SGD throughout; fewest moving parts to check
  double g_lr_adv = 1e-3;
  double d_lr = 1e-2;
  int rollouts = 4;  // Monte-Carlo completions per prefix (policy gradient)
  TrainScheme scheme = TrainScheme::kPolicyGradient;
  std::uint64_t seed = 1;
  int embed_dim = 32;
  int hidden_dim = 64;
  std::size_t max_seq_len = 64;

  void validate() const;
};

/// Applies `prefix`‑qualified keys from a key=value config over `base`
/// (e.g. prefix "pg." reads pg.adv_epochs). Empty prefix reads bare keys.
TrainConfig apply_train_config(TrainConfig base, const KeyValueConfig& cfg,
                               const std::string& prefix);

/// One epoch row of the training table. d-side fields are NaN while no
/// discriminator exists (MLE pretraining).
struct MetricsRow {
  int epoch = 0;
  double g_loss = 0, d_loss = 0, g_nll = 0, d_nll = 0, acc = 0;
  double diversity = 1.0;  // distinct-token ratio of the sample probe
};

struct TrainingMetrics {
  std::vector<MetricsRow> rows;
};

/// CSV with header epoch,g_loss,d_loss,g_nll,d_nll,acc.
void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);
/// Inverse of write_metrics_csv; the diversity probe is not part of the CSV
/// schema and reads back as NaN.
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

struct EncodedCorpus {
  std::vector<TokenSequence> train;
  std::vector<TokenSequence> test;
};

EncodedCorpus encode_corpus(const CorpusSplit& split, const Vocabulary& vocab,
                            const FieldSchema& schema, std::size_t max_len);

/// Normalized MaliGAN-style weights r/(1‑r) over a batch of discriminator
/// scores; non-negative, sum to 1.
std::vector<double> importance_weights(const std::vector<float>& d_scores);

/// Distinct-token ratio over `probe_count` fresh samples (collapse signal).
double sample_diversity(const SequenceModel& net, std::uint64_t seed, std::size_t probe_count,
                        std::size_t max_len);

/// Table row: held-out generator NLL, discriminator NLL and accuracy on a
/// balanced labeled held-out set (fresh fakes each call), plus the diversity
/// probe. Pass d == nullptr while no discriminator exists.
MetricsRow compute_metrics(const SequenceModel& g, const Discriminator* d,
                           const EncodedCorpus& corpus, const TrainConfig& cfg, int epoch,
                           double g_loss, double d_loss);

/// Invoked after each finished epoch (checkpointing hook).
using EpochCallback = std::function<void(int)>;

// Single alternation steps. The epoch loops are built from these; they are
// public so tests can pin down the per-update contracts.

/// One discriminator update on an explicit labeled batch; returns the BCE.
double discriminator_step_labeled(Discriminator& d, const std::vector<TokenSequence>& reals,
                                  const std::vector<TokenSequence>& fakes, double lr);

/// One discriminator update: reals vs an equal count of fresh G samples.
double discriminator_step(Discriminator& d, const std::vector<TokenSequence>& reals,
                          const SequenceModel& g, const TrainConfig& cfg,
                          std::uint64_t noise_seed);

/// One REINFORCE generator update with K-rollout rewards and the moving-
/// average baseline (initialized to the first observed batch mean, so a
/// constant reward produces an exactly zero update).
double pg_generator_step(SequenceModel& g, const Discriminator& d, const TrainConfig& cfg,
                         std::uint64_t sample_seed, std::uint64_t rollout_seed, double& baseline,
                         bool& baseline_ready);

/// One importance-weighted generator update.
double iw_generator_step(SequenceModel& g, const Discriminator& d, const TrainConfig& cfg,
                         std::uint64_t sample_seed);

/// One mediator maximum-likelihood update on a 50/50 real/generated mixture.
double cooperative_mediator_step(SequenceModel& mediator,
                                 const std::vector<TokenSequence>& real_half,
                                 const SequenceModel& g, const TrainConfig& cfg,
                                 std::uint64_t noise_seed);

/// One cooperative generator update against a frozen mediator.
double cooperative_generator_step(SequenceModel& g, const SequenceModel& mediator,
                                  const TrainConfig& cfg, std::uint64_t sample_seed);

/// Teacher-forced maximum likelihood; per-epoch held-out NLL in the metrics.
/// A NumericalError mid-epoch restores the last end-of-epoch parameters and
/// returns the rows collected so far.
TrainingMetrics pretrain_mle(SequenceModel& g, const EncodedCorpus& corpus,
                             const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// SeqGAN-style alternation: REINFORCE on rollout rewards with a moving-
/// average baseline for G, binary cross-entropy for D.
TrainingMetrics train_adversarial_pg(SequenceModel& g, Discriminator& d,
                                     const EncodedCorpus& corpus, const TrainConfig& cfg,
                                     const EpochCallback& on_epoch = {});

/// MaliGAN-style alternation: normalized importance-weighted maximum
/// likelihood on G's own samples, same D step as the policy-gradient scheme.
TrainingMetrics train_adversarial_iw(SequenceModel& g, Discriminator& d,
                                     const EncodedCorpus& corpus, const TrainConfig& cfg,
                                     const EpochCallback& on_epoch = {});

/// CoT-style cooperative alternation: the mediator fits a balanced mixture of
/// real and generated batches by maximum likelihood; G descends the per-step
/// KL against the mediator's predictions. aux_d is trained post-hoc per
/// reporting row, purely so the accuracy column stays comparable.
TrainingMetrics train_cooperative(SequenceModel& g, SequenceModel& mediator, Discriminator& aux_d,
                                  const EncodedCorpus& corpus, const TrainConfig& cfg,
                                  const EpochCallback& on_epoch = {});

struct CollapseAlarm {
  int epoch = 0;
  double diversity = 0;
  double acc = 0;
};

/// Fires when, over the trailing `window` rows, the diversity probe sits
/// below 0.1 while reported accuracy stays above 0.8: degenerate output that
/// still "scores well".
std::optional<CollapseAlarm> detect_collapse(const std::vector<MetricsRow>& history,
                                             std::size_t window);

}  // namespace logforge
