#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "logforge/corpus.hpp"
#include "logforge/graph.hpp"
#include "logforge/rng.hpp"
#include "logforge/tensor.hpp"

namespace logforge {

template <typename T>
struct GruCellT {
  TensorT<T> wxz, whz, bz;  // update gate
  TensorT<T> wxr, whr, br;  // reset gate
  TensorT<T> wxc, whc, bc;  // candidate state
};

/// Autoregressive token model: embedding, one gated recurrent cell, and a
/// projection to vocabulary logits. Doubles as the mediator in cooperative
/// training (same architecture family).
template <typename T>
struct SequenceModelT {
  int vocab = 0;
  int embed_dim = 0;
  int hidden_dim = 0;
  TensorT<T> embedding;  // [V x E]
  GruCellT<T> cell;
  TensorT<T> who, bo;  // [H x V], [V]

  static SequenceModelT init(int vocab, int embed_dim, int hidden_dim, std::uint64_t seed);
  std::vector<std::pair<std::string, TensorT<T>*>> params();
  std::vector<std::pair<std::string, const TensorT<T>*>> params() const;
  std::size_t param_count() const;

  template <typename U>
  SequenceModelT<U> cast() const {
    SequenceModelT<U> out;
    out.vocab = vocab;
    out.embed_dim = embed_dim;
    out.hidden_dim = hidden_dim;
    out.embedding = embedding.template cast<U>();
    out.cell.wxz = cell.wxz.template cast<U>();
    out.cell.whz = cell.whz.template cast<U>();
    out.cell.bz = cell.bz.template cast<U>();
    out.cell.wxr = cell.wxr.template cast<U>();
    out.cell.whr = cell.whr.template cast<U>();
    out.cell.br = cell.br.template cast<U>();
    out.cell.wxc = cell.wxc.template cast<U>();
    out.cell.whc = cell.whc.template cast<U>();
    out.cell.bc = cell.bc.template cast<U>();
    out.who = who.template cast<U>();
    out.bo = bo.template cast<U>();
    return out;
  }
};

/// Binary real-vs-generated classifier: embedding, recurrent encoder with
/// mean pooling over time, and a logistic scalar head.
template <typename T>
struct DiscriminatorT {
  int vocab = 0;
  int embed_dim = 0;
  int hidden_dim = 0;
  TensorT<T> embedding;
  GruCellT<T> cell;
  TensorT<T> wo, bo;  // [H x 1], [1]

  static DiscriminatorT init(int vocab, int embed_dim, int hidden_dim, std::uint64_t seed);
  std::vector<std::pair<std::string, TensorT<T>*>> params();
  std::vector<std::pair<std::string, const TensorT<T>*>> params() const;
  std::size_t param_count() const;
};

using SequenceModel = SequenceModelT<float>;
using Discriminator = DiscriminatorT<float>;

// ---- batching ---------------------------------------------------------------

/// Padded [B x L] id matrix with a validity mask, plus the teacher-forcing
/// view (inputs are positions 0..L-2, targets 1..L-1).
struct TokenBatch {
  int batch = 0;
  int length = 0;                    // padded frame length
  std::vector<std::int32_t> ids;     // [B x L], kPad after EOS
  std::vector<std::uint8_t> valid;   // [B x L] 1 where ids is a real token

  std::int32_t id_at(int b, int t) const { return ids[static_cast<std::size_t>(b) * length + t]; }
  bool valid_at(int b, int t) const {
    return valid[static_cast<std::size_t>(b) * length + t] != 0;
  }
};

TokenBatch make_batch(const std::vector<TokenSequence>& seqs);

// ---- graph binding ----------------------------------------------------------

template <typename T>
struct BoundParams {
  std::vector<std::pair<TensorT<T>*, int>> tensors;  // parameter <-> input node
  int node_of(const TensorT<T>* t) const {
    for (auto& [p, id] : tensors)
      if (p == t) return id;
    throw std::logic_error("parameter not bound");
  }
};

template <typename T, typename Net>
BoundParams<T> bind_params(GraphT<T>& g, Net& net) {
  BoundParams<T> bound;
  for (auto& [name, tensor] : net.params()) {
    bound.tensors.emplace_back(tensor, g.input(*tensor, true));
  }
  return bound;
}

/// param -= lr * grad for every bound tensor that received gradient.
template <typename T>
void sgd_step(GraphT<T>& g, const BoundParams<T>& bound, T lr) {
  for (auto& [tensor, node] : bound.tensors) {
    if (!g.has_grad(node)) continue;
    const TensorT<T>& grad = g.grad(node);
    for (std::size_t i = 0; i < tensor->data.size(); ++i) {
      tensor->data[i] -= lr * grad.data[i];
    }
    check_finite(*tensor, "sgd_step");
  }
}

/// One recurrent cell step inside a graph; x is [B x E], h is [B x H].
template <typename T>
int gru_step_graph(GraphT<T>& g, const GruCellT<T>& cell, const BoundParams<T>& bound, int x,
                   int h) {
  const int z = g.sigmoid(g.add_row_broadcast(
      g.add(g.matmul(x, bound.node_of(&cell.wxz)), g.matmul(h, bound.node_of(&cell.whz))),
      bound.node_of(&cell.bz)));
  const int r = g.sigmoid(g.add_row_broadcast(
      g.add(g.matmul(x, bound.node_of(&cell.wxr)), g.matmul(h, bound.node_of(&cell.whr))),
      bound.node_of(&cell.br)));
  const int c = g.tanh_op(g.add_row_broadcast(
      g.add(g.matmul(x, bound.node_of(&cell.wxc)), g.matmul(g.mul(r, h), bound.node_of(&cell.whc))),
      bound.node_of(&cell.bc)));
  // h' = (1 - z) * h + z * c
  return g.add(g.mul(g.affine(z, T(-1), T(1)), h), g.mul(z, c));
}

/// Teacher-forced unroll. step_logp[t] is the [B x V] log-softmax at step t;
/// seq_logp[b] is the masked sum of target log-probs for row b.
template <typename T>
struct LmUnroll {
  std::vector<int> step_logp;
  std::vector<std::vector<std::int32_t>> step_targets;
  std::vector<std::vector<T>> step_mask;
  int seq_logp = -1;
  double token_count = 0;
};

template <typename T>
LmUnroll<T> lm_teacher_forced(GraphT<T>& g, SequenceModelT<T>& net, const BoundParams<T>& bound,
                              const TokenBatch& batch) {
  LmUnroll<T> out;
  const int emb_node = bound.node_of(&net.embedding);
  const int who = bound.node_of(&net.who);
  const int bo = bound.node_of(&net.bo);

  int h = g.constant(TensorT<T>(std::vector<int>{batch.batch, net.hidden_dim}));
  int acc = -1;
  for (int t = 0; t + 1 < batch.length; ++t) {
    std::vector<std::int32_t> in_ids(batch.batch), tgt_ids(batch.batch);
    std::vector<T> mask(batch.batch);
    bool any = false;
    for (int b = 0; b < batch.batch; ++b) {
      in_ids[b] = batch.id_at(b, t);
      tgt_ids[b] = batch.id_at(b, t + 1);
      const bool live = batch.valid_at(b, t) && batch.valid_at(b, t + 1);
      mask[b] = live ? T(1) : T(0);
      if (live) {
        any = true;
        out.token_count += 1.0;
      }
    }
    if (!any) break;
    const int x = g.embed(emb_node, in_ids);
    h = gru_step_graph(g, net.cell, bound, x, h);
    const int logits = g.add_row_broadcast(g.matmul(h, who), bo);
    const int lp = g.log_softmax_rows(logits);
    out.step_logp.push_back(lp);
    out.step_targets.push_back(tgt_ids);
    out.step_mask.push_back(mask);
    const int picked = g.pick_rows(lp, tgt_ids, mask);
    acc = acc < 0 ? picked : g.add(acc, picked);
  }
  out.seq_logp = acc;
  return out;
}

/// Mean per-token negative log-likelihood (scalar node).
template <typename T>
int mle_loss(GraphT<T>& g, const LmUnroll<T>& unroll) {
  return g.sum_to_scalar(unroll.seq_logp, T(-1.0 / (unroll.token_count > 0 ? unroll.token_count : 1)));
}

template <typename T>
int zero_scalar(GraphT<T>& g) {
  return g.constant(TensorT<T>(std::vector<int>{1}));
}

/// REINFORCE surrogate: -(1/B) sum over transitions of advantage * log-prob.
/// Advantages (rewards minus baseline) are frozen inputs, so the node is a
/// deterministic function of the generator parameters.
template <typename T>
int pg_surrogate_loss(GraphT<T>& g, const LmUnroll<T>& unroll,
                      const std::vector<std::vector<double>>& advantage, int batch_size) {
  int acc = -1;
  for (std::size_t t = 0; t < unroll.step_logp.size(); ++t) {
    std::vector<T> w(static_cast<std::size_t>(batch_size), T(0));
    bool any = false;
    for (std::size_t b = 0; b < w.size(); ++b) {
      if (unroll.step_mask[t][b] == T(0) || t >= advantage[b].size()) continue;
      w[b] = static_cast<T>(advantage[b][t]);
      any = any || w[b] != T(0);
    }
    if (!any) continue;
    const int picked = g.pick_rows(unroll.step_logp[t], unroll.step_targets[t], std::move(w));
    acc = acc < 0 ? picked : g.add(acc, picked);
  }
  if (acc < 0) return zero_scalar(g);
  return g.sum_to_scalar(acc, T(-1) / static_cast<T>(batch_size));
}

/// Importance-weighted maximum-likelihood surrogate: -sum_i coeff_i log p(x_i)
/// with frozen coefficients coeff_i = w_i - 1/B.
template <typename T>
int iw_surrogate_loss(GraphT<T>& g, const LmUnroll<T>& unroll, const std::vector<double>& coeff) {
  std::vector<T> neg(coeff.size());
  for (std::size_t i = 0; i < coeff.size(); ++i) neg[i] = -static_cast<T>(coeff[i]);
  return g.dot_const(unroll.seq_logp, std::move(neg));
}

/// Cooperative objective: mean per-token KL(G || mediator) over G's own
/// samples, mediator predictions frozen. Zero exactly at the matched fixed
/// point, which is what makes the no-learning-signal case testable.
template <typename T>
int coop_kl_loss(GraphT<T>& g, const LmUnroll<T>& unroll,
                 const std::vector<TensorT<T>>& mediator_logp) {
  int acc = -1;
  for (std::size_t t = 0; t < unroll.step_logp.size() && t < mediator_logp.size(); ++t) {
    const int kl = g.kl_rows(unroll.step_logp[t], mediator_logp[t], unroll.step_mask[t]);
    acc = acc < 0 ? kl : g.add(acc, kl);
  }
  if (acc < 0) return zero_scalar(g);
  return g.sum_to_scalar(acc, static_cast<T>(1.0 / (unroll.token_count > 0 ? unroll.token_count : 1)));
}

/// Discriminator forward: probability-of-real for each row, shape [B].
template <typename T>
int disc_forward_graph(GraphT<T>& g, DiscriminatorT<T>& net, const BoundParams<T>& bound,
                       const TokenBatch& batch) {
  const int emb_node = bound.node_of(&net.embedding);
  int h = g.constant(TensorT<T>(std::vector<int>{batch.batch, net.hidden_dim}));
  int hsum = -1;
  std::vector<T> lengths(batch.batch, T(0));
  for (int t = 0; t < batch.length; ++t) {
    std::vector<std::int32_t> ids(batch.batch);
    std::vector<T> mask(batch.batch);
    bool any = false;
    for (int b = 0; b < batch.batch; ++b) {
      ids[b] = batch.id_at(b, t);
      mask[b] = batch.valid_at(b, t) ? T(1) : T(0);
      if (mask[b] != T(0)) {
        lengths[b] += T(1);
        any = true;
      }
    }
    if (!any) break;
    const int x = g.embed(emb_node, ids);
    h = gru_step_graph(g, net.cell, bound, x, h);
    const int masked = g.rowwise_scale(h, mask);
    hsum = hsum < 0 ? masked : g.add(hsum, masked);
  }
  std::vector<T> inv_len(batch.batch);
  for (int b = 0; b < batch.batch; ++b) inv_len[b] = lengths[b] > T(0) ? T(1) / lengths[b] : T(0);
  const int pooled = g.rms_normalize_rows(g.rowwise_scale(hsum, inv_len));
  const int logit = g.add_row_broadcast(g.matmul(pooled, bound.node_of(&net.wo)),
                                        bound.node_of(&net.bo));
  return g.sigmoid(g.reshape(logit, {batch.batch}));
}

// ---- tape-free forward passes (sampling, rollouts, metrics) -----------------

/// Scratch state for stepping N sequences in lockstep without a tape.
template <typename T>
struct PlainState {
  int count = 0;
  std::vector<T> h;  // [N x H]
};

template <typename T>
PlainState<T> make_plain_state(int count, int hidden_dim) {
  return PlainState<T>{count, std::vector<T>(static_cast<std::size_t>(count) * hidden_dim, T(0))};
}

/// Advances every sequence by one token; writes vocabulary logits ([N x V]).
template <typename T>
void plain_lm_step(const SequenceModelT<T>& net, const std::vector<std::int32_t>& ids,
                   PlainState<T>& state, std::vector<T>& logits);

/// Advances the discriminator encoder; logits stay internal, pooling is the
/// caller's job via the returned hidden snapshot.
template <typename T>
void plain_gru_step(const GruCellT<T>& cell, const TensorT<T>& embedding, int embed_dim,
                    int hidden_dim, const std::vector<std::int32_t>& ids, PlainState<T>& state);

/// Per-step next-token distributions for a fixed prefix (teacher forcing).
/// Every row sums to 1 within 1e-5.
std::vector<std::vector<float>> forward_generator(const SequenceModel& net,
                                                  const TokenSequence& prefix);

struct SampleOptions {
  std::size_t max_len = 64;
  double temperature = 1.0;   // 0 selects the argmax at every step
  double init_noise = 0.0;    // stddev of an optional hidden-state perturbation
};

/// Ancestral sampling until EOS or max_len; deterministic per noise state.
TokenSequence sample_sequence(const SequenceModel& net, NoiseSource& noise,
                              const SampleOptions& options);

/// Batched sampling that shares the lockstep forward pass.
std::vector<TokenSequence> sample_sequences(const SequenceModel& net, NoiseSource& noise,
                                            std::size_t count, const SampleOptions& options);

/// Probability-of-real for one framed sequence, clamped into (0, 1).
float discriminate(const Discriminator& net, const TokenSequence& seq);

/// Batched discriminator scores.
std::vector<float> discriminate_batch(const Discriminator& net,
                                      const std::vector<TokenSequence>& seqs);

/// Teacher-forced mean per-token NLL of real sequences under the model, no tape.
double plain_nll(const SequenceModel& net, const std::vector<TokenSequence>& seqs);

/// Per-step log-softmax rows for a whole batch (used to freeze the mediator's
/// predictions during the cooperative generator step). Output: one [B x V]
/// tensor per teacher-forcing step.
std::vector<Tensor> plain_step_logps(const SequenceModel& net, const TokenBatch& batch);

/// Empirical minimax value: mean(log d_real) + mean(log(1 - d_fake)).
/// Throws DomainError when a score lies outside (0, 1) or a list is empty.
double value_function(const std::vector<double>& d_real, const std::vector<double>& d_fake);

// ---- template definitions ----------------------------------------------------

namespace detail {

template <typename T>
TensorT<T> uniform_init(std::vector<int> shape, SplitMix64& rng) {
  TensorT<T> t(std::move(shape));
  for (T& v : t.data) v = static_cast<T>((rng.next_unit() * 2.0 - 1.0) * 0.08);
  return t;
}

}  // namespace detail

template <typename T>
SequenceModelT<T> SequenceModelT<T>::init(int vocab, int embed_dim, int hidden_dim,
                                          std::uint64_t seed) {
  SplitMix64 rng(derive_seed(seed, 0x9e7));
  SequenceModelT<T> m;
  m.vocab = vocab;
  m.embed_dim = embed_dim;
  m.hidden_dim = hidden_dim;
  m.embedding = detail::uniform_init<T>({vocab, embed_dim}, rng);
  m.cell.wxz = detail::uniform_init<T>({embed_dim, hidden_dim}, rng);
  m.cell.whz = detail::uniform_init<T>({hidden_dim, hidden_dim}, rng);
  m.cell.bz = detail::uniform_init<T>({hidden_dim}, rng);
  m.cell.wxr = detail::uniform_init<T>({embed_dim, hidden_dim}, rng);
  m.cell.whr = detail::uniform_init<T>({hidden_dim, hidden_dim}, rng);
  m.cell.br = detail::uniform_init<T>({hidden_dim}, rng);
  m.cell.wxc = detail::uniform_init<T>({embed_dim, hidden_dim}, rng);
  m.cell.whc = detail::uniform_init<T>({hidden_dim, hidden_dim}, rng);
  m.cell.bc = detail::uniform_init<T>({hidden_dim}, rng);
  m.who = detail::uniform_init<T>({hidden_dim, vocab}, rng);
  m.bo = detail::uniform_init<T>({vocab}, rng);
  return m;
}

template <typename T>
std::vector<std::pair<std::string, TensorT<T>*>> SequenceModelT<T>::params() {
  return {{"embedding", &embedding}, {"wxz", &cell.wxz}, {"whz", &cell.whz}, {"bz", &cell.bz},
          {"wxr", &cell.wxr},        {"whr", &cell.whr}, {"br", &cell.br},   {"wxc", &cell.wxc},
          {"whc", &cell.whc},        {"bc", &cell.bc},   {"who", &who},      {"bo", &bo}};
}

template <typename T>
std::vector<std::pair<std::string, const TensorT<T>*>> SequenceModelT<T>::params() const {
  auto mutable_params = const_cast<SequenceModelT*>(this)->params();
  std::vector<std::pair<std::string, const TensorT<T>*>> out;
  for (auto& [name, tensor] : mutable_params) out.emplace_back(name, tensor);
  return out;
}

template <typename T>
std::size_t SequenceModelT<T>::param_count() const {
  std::size_t n = 0;
  for (auto& [name, tensor] : params()) n += tensor->size();
  return n;
}

template <typename T>
DiscriminatorT<T> DiscriminatorT<T>::init(int vocab, int embed_dim, int hidden_dim,
                                          std::uint64_t seed) {
  SplitMix64 rng(derive_seed(seed, 0xd15c));
  DiscriminatorT<T> m;
  m.vocab = vocab;
  m.embed_dim = embed_dim;
  m.hidden_dim = hidden_dim;
  m.embedding = detail::uniform_init<T>({vocab, embed_dim}, rng);
  m.cell.wxz = detail::uniform_init<T>({embed_dim, hidden_dim}, rng);
  m.cell.whz = detail::uniform_init<T>({hidden_dim, hidden_dim}, rng);
  m.cell.bz = detail::uniform_init<T>({hidden_dim}, rng);
  m.cell.wxr = detail::uniform_init<T>({embed_dim, hidden_dim}, rng);
  m.cell.whr = detail::uniform_init<T>({hidden_dim, hidden_dim}, rng);
  m.cell.br = detail::uniform_init<T>({hidden_dim}, rng);
  m.cell.wxc = detail::uniform_init<T>({embed_dim, hidden_dim}, rng);
  m.cell.whc = detail::uniform_init<T>({hidden_dim, hidden_dim}, rng);
  m.cell.bc = detail::uniform_init<T>({hidden_dim}, rng);
  m.wo = detail::uniform_init<T>({hidden_dim, 1}, rng);
  m.bo = detail::uniform_init<T>({1}, rng);
  return m;
}

template <typename T>
std::vector<std::pair<std::string, TensorT<T>*>> DiscriminatorT<T>::params() {
  return {{"embedding", &embedding}, {"wxz", &cell.wxz}, {"whz", &cell.whz}, {"bz", &cell.bz},
          {"wxr", &cell.wxr},        {"whr", &cell.whr}, {"br", &cell.br},   {"wxc", &cell.wxc},
          {"whc", &cell.whc},        {"bc", &cell.bc},   {"wo", &wo},        {"bo", &bo}};
}

template <typename T>
std::vector<std::pair<std::string, const TensorT<T>*>> DiscriminatorT<T>::params() const {
  auto mutable_params = const_cast<DiscriminatorT*>(this)->params();
  std::vector<std::pair<std::string, const TensorT<T>*>> out;
  for (auto& [name, tensor] : mutable_params) out.emplace_back(name, tensor);
  return out;
}

template <typename T>
std::size_t DiscriminatorT<T>::param_count() const {
  std::size_t n = 0;
  for (auto& [name, tensor] : params()) n += tensor->size();
  return n;
}

namespace detail {

/// h <- GRU(h, embed[ids]); shared by the generator and discriminator paths.
template <typename T>
void gru_advance(const GruCellT<T>& cell, const TensorT<T>& embedding, int embed_dim,
                 int hidden_dim, const std::vector<std::int32_t>& ids, std::vector<T>& h) {
  const int n = static_cast<int>(ids.size());
  const std::size_t nh = static_cast<std::size_t>(n) * hidden_dim;
  std::vector<T> x(static_cast<std::size_t>(n) * embed_dim);
  for (int i = 0; i < n; ++i) {
    const T* src = embedding.data.data() + static_cast<std::size_t>(ids[static_cast<std::size_t>(i)]) * embed_dim;
    std::copy(src, src + embed_dim, x.data() + static_cast<std::size_t>(i) * embed_dim);
  }

  auto gate = [&](const TensorT<T>& wx, const TensorT<T>& wh, const TensorT<T>& b,
                  const std::vector<T>& hin, std::vector<T>& out) {
    out.assign(nh, T(0));
    for (int i = 0; i < n; ++i) {
      T* row = out.data() + static_cast<std::size_t>(i) * hidden_dim;
      for (int j = 0; j < hidden_dim; ++j) row[j] = b.data[static_cast<std::size_t>(j)];
    }
    matmul_acc(x.data(), wx.data.data(), out.data(), n, embed_dim, hidden_dim);
    matmul_acc(hin.data(), wh.data.data(), out.data(), n, hidden_dim, hidden_dim);
  };

  std::vector<T> z, r, c, rh(nh);
  gate(cell.wxz, cell.whz, cell.bz, h, z);
  gate(cell.wxr, cell.whr, cell.br, h, r);
  for (std::size_t i = 0; i < nh; ++i) {
    z[i] = z[i] >= T(0) ? T(1) / (T(1) + std::exp(-z[i])) : std::exp(z[i]) / (T(1) + std::exp(z[i]));
    r[i] = r[i] >= T(0) ? T(1) / (T(1) + std::exp(-r[i])) : std::exp(r[i]) / (T(1) + std::exp(r[i]));
    rh[i] = r[i] * h[i];
  }
  gate(cell.wxc, cell.whc, cell.bc, rh, c);
  for (std::size_t i = 0; i < nh; ++i) {
    const T cand = std::tanh(c[i]);
    h[i] = (T(1) - z[i]) * h[i] + z[i] * cand;
    if (!std::isfinite(h[i])) throw NumericalError("non-finite value in gru_advance");
  }
}

}  // namespace detail

template <typename T>
void plain_lm_step(const SequenceModelT<T>& net, const std::vector<std::int32_t>& ids,
                   PlainState<T>& state, std::vector<T>& logits) {
  detail::gru_advance(net.cell, net.embedding, net.embed_dim, net.hidden_dim, ids, state.h);
  const int n = state.count;
  logits.assign(static_cast<std::size_t>(n) * net.vocab, T(0));
  for (int i = 0; i < n; ++i) {
    T* row = logits.data() + static_cast<std::size_t>(i) * net.vocab;
    for (int v = 0; v < net.vocab; ++v) row[v] = net.bo.data[static_cast<std::size_t>(v)];
  }
  matmul_acc(state.h.data(), net.who.data.data(), logits.data(), n, net.hidden_dim, net.vocab);
  for (T v : logits) {
    if (!std::isfinite(v)) throw NumericalError("non-finite value in plain_lm_step");
  }
}

template <typename T>
void plain_gru_step(const GruCellT<T>& cell, const TensorT<T>& embedding, int embed_dim,
                    int hidden_dim, const std::vector<std::int32_t>& ids, PlainState<T>& state) {
  detail::gru_advance(cell, embedding, embed_dim, hidden_dim, ids, state.h);
}

}  // namespace logforge
