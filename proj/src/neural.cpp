#include "logforge/nets.hpp"

#include <algorithm>
#include <cmath>

namespace logforge {

TokenBatch make_batch(const std::vector<TokenSequence>& seqs) {
  TokenBatch batch;
  batch.batch = static_cast<int>(seqs.size());
  std::size_t max_len = 1;
  for (const TokenSequence& s : seqs) max_len = std::max(max_len, s.ids.size());
  batch.length = static_cast<int>(max_len);
  batch.ids.assign(static_cast<std::size_t>(batch.batch) * batch.length, TokenIds::kPad);
  batch.valid.assign(batch.ids.size(), 0);
  for (int b = 0; b < batch.batch; ++b) {
    const auto& ids = seqs[static_cast<std::size_t>(b)].ids;
    for (std::size_t t = 0; t < ids.size(); ++t) {
      batch.ids[static_cast<std::size_t>(b) * batch.length + t] = ids[t];
      batch.valid[static_cast<std::size_t>(b) * batch.length + t] = 1;
    }
  }
  return batch;
}

std::vector<std::vector<float>> forward_generator(const SequenceModel& net,
                                                  const TokenSequence& prefix) {
  if (prefix.ids.empty() || prefix.ids.front() != TokenIds::kBos) {
    throw DomainError("generator prefix must start with BOS");
  }
  auto state = make_plain_state<float>(1, net.hidden_dim);
  std::vector<float> logits;
  std::vector<std::vector<float>> steps;
  for (std::int32_t id : prefix.ids) {
    plain_lm_step(net, {id}, state, logits);
    std::vector<float> probs(logits.begin(), logits.end());
    softmax_row(probs.data(), net.vocab);
    steps.push_back(std::move(probs));
  }
  return steps;
}

namespace {

std::int32_t draw_token(const float* logits, int vocab, double temperature, NoiseSource& noise) {
  if (temperature <= 0.0) {
    int best = 0;
    for (int v = 1; v < vocab; ++v)
      if (logits[v] > logits[best]) best = v;
    return best;
  }
  std::vector<double> probs(static_cast<std::size_t>(vocab));
  double mx = logits[0] / temperature;
  for (int v = 1; v < vocab; ++v) mx = std::max(mx, static_cast<double>(logits[v]) / temperature);
  double sum = 0.0;
  for (int v = 0; v < vocab; ++v) {
    probs[static_cast<std::size_t>(v)] = std::exp(static_cast<double>(logits[v]) / temperature - mx);
    sum += probs[static_cast<std::size_t>(v)];
  }
  double u = noise.unit() * sum;
  for (int v = 0; v < vocab; ++v) {
    u -= probs[static_cast<std::size_t>(v)];
    if (u < 0.0) return v;
  }
  return vocab - 1;
}

}  // namespace

std::vector<TokenSequence> sample_sequences(const SequenceModel& net, NoiseSource& noise,
                                            std::size_t count, const SampleOptions& options) {
  std::vector<TokenSequence> out(count);
  if (count == 0) return out;
  const int n = static_cast<int>(count);
  auto state = make_plain_state<float>(n, net.hidden_dim);
  if (options.init_noise > 0.0) {
    for (float& v : state.h) v = static_cast<float>(options.init_noise * noise.normal());
  }

  std::vector<std::int32_t> current(count, TokenIds::kBos);
  std::vector<std::uint8_t> alive(count, 1);
  for (std::size_t i = 0; i < count; ++i) out[i].ids.push_back(TokenIds::kBos);

  std::vector<float> logits;
  std::size_t live = count;
  while (live > 0) {
    plain_lm_step(net, current, state, logits);
    live = 0;
    for (std::size_t i = 0; i < count; ++i) {
      if (!alive[i]) continue;
      const float* row = logits.data() + i * static_cast<std::size_t>(net.vocab);
      const std::int32_t tok = draw_token(row, net.vocab, options.temperature, noise);
      out[i].ids.push_back(tok);
      current[i] = tok;
      if (tok == TokenIds::kEos || out[i].ids.size() >= options.max_len) {
        alive[i] = 0;
      } else {
        ++live;
      }
    }
  }
  return out;
}

TokenSequence sample_sequence(const SequenceModel& net, NoiseSource& noise,
                              const SampleOptions& options) {
  return sample_sequences(net, noise, 1, options)[0];
}

std::vector<float> discriminate_batch(const Discriminator& net,
                                      const std::vector<TokenSequence>& seqs) {
  for (const TokenSequence& s : seqs) {
    if (s.ids.empty()) throw DomainError("cannot discriminate an empty sequence");
  }
  const TokenBatch batch = make_batch(seqs);
  auto state = make_plain_state<float>(batch.batch, net.hidden_dim);
  std::vector<double> pooled(static_cast<std::size_t>(batch.batch) * net.hidden_dim, 0.0);
  std::vector<double> lengths(static_cast<std::size_t>(batch.batch), 0.0);

  std::vector<std::int32_t> ids(static_cast<std::size_t>(batch.batch));
  for (int t = 0; t < batch.length; ++t) {
    for (int b = 0; b < batch.batch; ++b) ids[static_cast<std::size_t>(b)] = batch.id_at(b, t);
    plain_gru_step(net.cell, net.embedding, net.embed_dim, net.hidden_dim, ids, state);
    for (int b = 0; b < batch.batch; ++b) {
      if (!batch.valid_at(b, t)) continue;
      const float* h = state.h.data() + static_cast<std::size_t>(b) * net.hidden_dim;
      double* p = pooled.data() + static_cast<std::size_t>(b) * net.hidden_dim;
      for (int j = 0; j < net.hidden_dim; ++j) p[j] += h[j];
      lengths[static_cast<std::size_t>(b)] += 1.0;
    }
  }

  std::vector<float> scores(static_cast<std::size_t>(batch.batch));
  std::vector<float> feature(static_cast<std::size_t>(net.hidden_dim));
  for (int b = 0; b < batch.batch; ++b) {
    const double* p = pooled.data() + static_cast<std::size_t>(b) * net.hidden_dim;
    const double inv = lengths[static_cast<std::size_t>(b)] > 0 ? 1.0 / lengths[static_cast<std::size_t>(b)] : 0.0;
    // same mean-pool + RMS normalization as the training graph, in float
    double ss = 0.0;
    for (int j = 0; j < net.hidden_dim; ++j) {
      feature[static_cast<std::size_t>(j)] = static_cast<float>(p[j] * inv);
      ss += static_cast<double>(feature[static_cast<std::size_t>(j)]) * feature[static_cast<std::size_t>(j)];
    }
    const float inv_rms =
        1.0f / std::sqrt(static_cast<float>(ss / net.hidden_dim) + 1e-6f);
    double logit = net.bo.data[0];
    for (int j = 0; j < net.hidden_dim; ++j) {
      logit += static_cast<double>(feature[static_cast<std::size_t>(j)]) * inv_rms *
               net.wo.data[static_cast<std::size_t>(j)];
    }
    double s = logit >= 0 ? 1.0 / (1.0 + std::exp(-logit)) : std::exp(logit) / (1.0 + std::exp(logit));
    s = std::min(1.0 - 1e-7, std::max(1e-7, s));  // keep strictly inside (0,1)
    if (!std::isfinite(s)) throw NumericalError("non-finite discriminator score");
    scores[static_cast<std::size_t>(b)] = static_cast<float>(s);
  }
  return scores;
}

float discriminate(const Discriminator& net, const TokenSequence& seq) {
  return discriminate_batch(net, {seq})[0];
}

double plain_nll(const SequenceModel& net, const std::vector<TokenSequence>& seqs) {
  if (seqs.empty()) return 0.0;
  const TokenBatch batch = make_batch(seqs);
  auto state = make_plain_state<float>(batch.batch, net.hidden_dim);
  std::vector<std::int32_t> ids(static_cast<std::size_t>(batch.batch));
  std::vector<float> logits;
  double total = 0.0;
  double count = 0.0;
  for (int t = 0; t + 1 < batch.length; ++t) {
    for (int b = 0; b < batch.batch; ++b) ids[static_cast<std::size_t>(b)] = batch.id_at(b, t);
    plain_lm_step(net, ids, state, logits);
    for (int b = 0; b < batch.batch; ++b) {
      if (!batch.valid_at(b, t) || !batch.valid_at(b, t + 1)) continue;
      const float* row = logits.data() + static_cast<std::size_t>(b) * net.vocab;
      double mx = row[0];
      for (int v = 1; v < net.vocab; ++v) mx = std::max(mx, static_cast<double>(row[v]));
      double sum = 0.0;
      for (int v = 0; v < net.vocab; ++v) sum += std::exp(row[v] - mx);
      const double lp = row[batch.id_at(b, t + 1)] - mx - std::log(sum);
      total -= lp;
      count += 1.0;
    }
  }
  return count > 0 ? total / count : 0.0;
}

std::vector<Tensor> plain_step_logps(const SequenceModel& net, const TokenBatch& batch) {
  std::vector<Tensor> steps;
  auto state = make_plain_state<float>(batch.batch, net.hidden_dim);
  std::vector<std::int32_t> ids(static_cast<std::size_t>(batch.batch));
  std::vector<float> logits;
  for (int t = 0; t + 1 < batch.length; ++t) {
    bool any = false;
    for (int b = 0; b < batch.batch; ++b) {
      ids[static_cast<std::size_t>(b)] = batch.id_at(b, t);
      any = any || (batch.valid_at(b, t) && batch.valid_at(b, t + 1));
    }
    if (!any) break;
    plain_lm_step(net, ids, state, logits);
    Tensor lp(std::vector<int>{batch.batch, net.vocab});
    for (int b = 0; b < batch.batch; ++b) {
      const float* row = logits.data() + static_cast<std::size_t>(b) * net.vocab;
      float* out = lp.data.data() + static_cast<std::size_t>(b) * net.vocab;
      float mx = row[0];
      for (int v = 1; v < net.vocab; ++v) mx = std::max(mx, row[v]);
      double sum = 0.0;
      for (int v = 0; v < net.vocab; ++v) sum += std::exp(static_cast<double>(row[v] - mx));
      const float lse = mx + static_cast<float>(std::log(sum));
      for (int v = 0; v < net.vocab; ++v) out[v] = row[v] - lse;
    }
    steps.push_back(std::move(lp));
  }
  return steps;
}

double value_function(const std::vector<double>& d_real, const std::vector<double>& d_fake) {
  if (d_real.empty() || d_fake.empty()) {
    throw DomainError("value function needs at least one score per side");
  }
  auto checked = [](double v) {
    if (!(v > 0.0 && v < 1.0)) {
      throw DomainError("discriminator output outside (0,1): " + std::to_string(v));
    }
    return v;
  };
  double real = 0.0;
  for (double v : d_real) real += std::log(checked(v));
  double fake = 0.0;
  for (double v : d_fake) fake += std::log(1.0 - checked(v));
  return real / static_cast<double>(d_real.size()) + fake / static_cast<double>(d_fake.size());
}

}  // namespace logforge
