#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "logforge/tensor.hpp"

namespace logforge {

/// Reverse-mode tape over TensorT values. Nodes are created in topological
/// order by construction, so the backward pass is a reverse walk. One graph
/// is built per training step and then discarded.
template <typename T>
class GraphT {
 public:
  using Tensor = TensorT<T>;

  int input(Tensor value, bool needs_grad) {
    nodes_.push_back(Node{std::move(value), Tensor{}, needs_grad, nullptr});
    return static_cast<int>(nodes_.size()) - 1;
  }
  int constant(Tensor value) { return input(std::move(value), false); }

  const Tensor& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

  /// Gradient buffer, allocated on first touch.
  Tensor& grad(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.data.empty()) n.grad = Tensor(n.value.shape);
    return n.grad;
  }
  bool has_grad(int id) const {
    return !nodes_[static_cast<std::size_t>(id)].grad.data.empty();
  }

  // ---- ops ----------------------------------------------------------------

  int matmul(int a, int b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    const int m = av.rows(), k = av.cols(), n = bv.cols();
    Tensor out(std::vector<int>{m, n});
    matmul_acc(av.data.data(), bv.data.data(), out.data.data(), m, k, n);
    return emit(std::move(out), "matmul", [a, b, m, k, n](GraphT& g, int self) {
      const Tensor& dout = g.grad_of(self);
      if (g.wants(a)) {
        matmul_grad_a(dout.data.data(), g.value(b).data.data(), g.grad(a).data.data(), m, k, n);
      }
      if (g.wants(b)) {
        matmul_grad_b(g.value(a).data.data(), dout.data.data(), g.grad(b).data.data(), m, k, n);
      }
    });
  }

  int add(int a, int b) {
    Tensor out = value(a);
    const Tensor& bv = value(b);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += bv.data[i];
    return emit(std::move(out), "add", [a, b](GraphT& g, int self) {
      const Tensor& dout = g.grad_of(self);
      for (int p : {a, b}) {
        if (!g.wants(p)) continue;
        Tensor& dp = g.grad(p);
        for (std::size_t i = 0; i < dout.data.size(); ++i) dp.data[i] += dout.data[i];
      }
    });
  }

  /// [M x N] + [N] broadcast over rows.
  int add_row_broadcast(int mat, int vec) {
    Tensor out = value(mat);
    const Tensor& v = value(vec);
    const int n = out.cols();
    for (int r = 0; r < out.rows(); ++r)
      for (int c = 0; c < n; ++c) out.at(r, c) += v.data[static_cast<std::size_t>(c)];
    return emit(std::move(out), "add_row_broadcast", [mat, vec, n](GraphT& g, int self) {
      const Tensor& dout = g.grad_of(self);
      if (g.wants(mat)) {
        Tensor& dm = g.grad(mat);
        for (std::size_t i = 0; i < dout.data.size(); ++i) dm.data[i] += dout.data[i];
      }
      if (g.wants(vec)) {
        Tensor& dv = g.grad(vec);
        const int rows = dout.rows();
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < n; ++c) dv.data[static_cast<std::size_t>(c)] += dout.at(r, c);
      }
    });
  }

  int mul(int a, int b) {
    Tensor out = value(a);
    const Tensor& bv = value(b);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= bv.data[i];
    return emit(std::move(out), "mul", [a, b](GraphT& g, int self) {
      const Tensor& dout = g.grad_of(self);
      if (g.wants(a)) {
        Tensor& da = g.grad(a);
        const Tensor& bv = g.value(b);
        for (std::size_t i = 0; i < dout.data.size(); ++i) da.data[i] += dout.data[i] * bv.data[i];
      }
      if (g.wants(b)) {
        Tensor& db = g.grad(b);
        const Tensor& av = g.value(a);
        for (std::size_t i = 0; i < dout.data.size(); ++i) db.data[i] += dout.data[i] * av.data[i];
      }
    });
  }

  /// scale * a + shift, elementwise.
  int affine(int a, T scale, T shift) {
    Tensor out = value(a);
    for (T& v : out.data) v = scale * v + shift;
    return emit(std::move(out), "affine", [a, scale](GraphT& g, int self) {
      if (!g.wants(a)) return;
      const Tensor& dout = g.grad_of(self);
      Tensor& da = g.grad(a);
      for (std::size_t i = 0; i < dout.data.size(); ++i) da.data[i] += scale * dout.data[i];
    });
  }

  int sigmoid(int a) {
    Tensor out = value(a);
    for (T& v : out.data) {
      v = v >= T(0) ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
    }
    return emit(std::move(out), "sigmoid", [a](GraphT& g, int self) {
      if (!g.wants(a)) return;
      const Tensor& dout = g.grad_of(self);
      const Tensor& y = g.value(self);
      Tensor& da = g.grad(a);
      for (std::size_t i = 0; i < dout.data.size(); ++i) {
        da.data[i] += dout.data[i] * y.data[i] * (T(1) - y.data[i]);
      }
    });
  }

  int tanh_op(int a) {
    Tensor out = value(a);
    for (T& v : out.data) v = std::tanh(v);
    return emit(std::move(out), "tanh", [a](GraphT& g, int self) {
      if (!g.wants(a)) return;
      const Tensor& dout = g.grad_of(self);
      const Tensor& y = g.value(self);
      Tensor& da = g.grad(a);
      for (std::size_t i = 0; i < dout.data.size(); ++i) {
        da.data[i] += dout.data[i] * (T(1) - y.data[i] * y.data[i]);
      }
    });
  }

  /// Gather rows of an embedding table: out[i] = table[ids[i]].
  int embed(int table, std::vector<std::int32_t> ids) {
    const Tensor& tab = value(table);
    const int dim = tab.cols();
    Tensor out(std::vector<int>{static_cast<int>(ids.size()), dim});
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const T* src = tab.data.data() + static_cast<std::size_t>(ids[i]) * dim;
      T* dst = out.data.data() + i * dim;
      for (int c = 0; c < dim; ++c) dst[c] = src[c];
    }
    return emit(std::move(out), "embed", [table, ids = std::move(ids), dim](GraphT& g, int self) {
      if (!g.wants(table)) return;
      const Tensor& dout = g.grad_of(self);
      Tensor& dt = g.grad(table);
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const T* src = dout.data.data() + i * dim;
        T* dst = dt.data.data() + static_cast<std::size_t>(ids[i]) * dim;
        for (int c = 0; c < dim; ++c) dst[c] += src[c];
      }
    });
  }

  /// Row-wise log-softmax.
  int log_softmax_rows(int a) {
    Tensor out = value(a);
    const int n = out.cols();
    for (int r = 0; r < out.rows(); ++r) {
      T* row = out.data.data() + static_cast<std::size_t>(r) * n;
      T mx = row[0];
      for (int i = 1; i < n; ++i) mx = row[i] > mx ? row[i] : mx;
      T sum = T(0);
      for (int i = 0; i < n; ++i) sum += std::exp(row[i] - mx);
      const T lse = mx + std::log(sum);
      for (int i = 0; i < n; ++i) row[i] -= lse;
    }
    return emit(std::move(out), "log_softmax", [a, n](GraphT& g, int self) {
      if (!g.wants(a)) return;
      const Tensor& dout = g.grad_of(self);
      const Tensor& lp = g.value(self);
      Tensor& da = g.grad(a);
      for (int r = 0; r < dout.rows(); ++r) {
        const T* drow = dout.data.data() + static_cast<std::size_t>(r) * n;
        const T* lprow = lp.data.data() + static_cast<std::size_t>(r) * n;
        T* darow = da.data.data() + static_cast<std::size_t>(r) * n;
        T dsum = T(0);
        for (int i = 0; i < n; ++i) dsum += drow[i];
        for (int i = 0; i < n; ++i) darow[i] += drow[i] - std::exp(lprow[i]) * dsum;
      }
    });
  }

  /// out[b] = weight[b] * mat[b, ids[b]]; weights of 0 mask a row out.
  int pick_rows(int mat, std::vector<std::int32_t> ids, std::vector<T> weights) {
    const Tensor& m = value(mat);
    const int n = m.cols();
    Tensor out(std::vector<int>{m.rows()});
    for (int b = 0; b < m.rows(); ++b) {
      out.data[static_cast<std::size_t>(b)] = weights[static_cast<std::size_t>(b)] * m.at(b, ids[static_cast<std::size_t>(b)]);
    }
    return emit(std::move(out), "pick_rows",
                [mat, ids = std::move(ids), weights = std::move(weights), n](GraphT& g, int self) {
                  if (!g.wants(mat)) return;
                  const Tensor& dout = g.grad_of(self);
                  Tensor& dm = g.grad(mat);
                  for (std::size_t b = 0; b < ids.size(); ++b) {
                    dm.data[b * n + static_cast<std::size_t>(ids[b])] += weights[b] * dout.data[b];
                  }
                });
  }

  /// Per-row KL(softmax-of-self || fixed reference), from log-probabilities:
  /// out[b] = w[b] * sum_v exp(lp[b,v]) * (lp[b,v] - ref[b,v]).
  int kl_rows(int logp, Tensor ref_logp, std::vector<T> weights) {
    const Tensor& lp = value(logp);
    const int n = lp.cols();
    Tensor out(std::vector<int>{lp.rows()});
    for (int b = 0; b < lp.rows(); ++b) {
      T acc = T(0);
      for (int v = 0; v < n; ++v) {
        acc += std::exp(lp.at(b, v)) * (lp.at(b, v) - ref_logp.at(b, v));
      }
      out.data[static_cast<std::size_t>(b)] = weights[static_cast<std::size_t>(b)] * acc;
    }
    return emit(std::move(out), "kl_rows",
                [logp, ref = std::move(ref_logp), weights = std::move(weights), n](GraphT& g,
                                                                                   int self) {
                  if (!g.wants(logp)) return;
                  const Tensor& dout = g.grad_of(self);
                  const Tensor& lp = g.value(logp);
                  Tensor& dl = g.grad(logp);
                  for (int b = 0; b < lp.rows(); ++b) {
                    const T w = weights[static_cast<std::size_t>(b)] * dout.data[static_cast<std::size_t>(b)];
                    if (w == T(0)) continue;
                    for (int v = 0; v < n; ++v) {
                      const T p = std::exp(lp.at(b, v));
                      dl.at(b, v) += w * p * (lp.at(b, v) - ref.at(b, v) + T(1));
                    }
                  }
                });
  }

  /// Scales each row by a fixed factor.
  int rowwise_scale(int mat, std::vector<T> factors) {
    Tensor out = value(mat);
    const int n = out.cols();
    for (int r = 0; r < out.rows(); ++r) {
      const T f = factors[static_cast<std::size_t>(r)];
      for (int c = 0; c < n; ++c) out.at(r, c) *= f;
    }
    return emit(std::move(out), "rowwise_scale",
                [mat, factors = std::move(factors), n](GraphT& g, int self) {
                  if (!g.wants(mat)) return;
                  const Tensor& dout = g.grad_of(self);
                  Tensor& dm = g.grad(mat);
                  for (int r = 0; r < dout.rows(); ++r) {
                    const T f = factors[static_cast<std::size_t>(r)];
                    for (int c = 0; c < n; ++c) dm.at(r, c) += f * dout.at(r, c);
                  }
                });
  }

  /// Scales each row to unit root-mean-square (plus epsilon). Keeps the
  /// pooled encoder features at O(1) regardless of the small init scale.
  int rms_normalize_rows(int a) {
    const Tensor& av = value(a);
    const int n = av.cols();
    Tensor out = av;
    std::vector<T> inv_rms(static_cast<std::size_t>(av.rows()));
    for (int r = 0; r < av.rows(); ++r) {
      T ss = T(0);
      for (int c = 0; c < n; ++c) ss += av.at(r, c) * av.at(r, c);
      const T rms = std::sqrt(ss / static_cast<T>(n) + T(1e-6));
      inv_rms[static_cast<std::size_t>(r)] = T(1) / rms;
      for (int c = 0; c < n; ++c) out.at(r, c) *= inv_rms[static_cast<std::size_t>(r)];
    }
    return emit(std::move(out), "rms_normalize_rows",
                [a, inv_rms = std::move(inv_rms), n](GraphT& g, int self) {
                  if (!g.wants(a)) return;
                  const Tensor& dout = g.grad_of(self);
                  const Tensor& y = g.value(self);
                  Tensor& da = g.grad(a);
                  for (int r = 0; r < dout.rows(); ++r) {
                    T dot = T(0);
                    for (int c = 0; c < n; ++c) dot += dout.at(r, c) * y.at(r, c);
                    dot /= static_cast<T>(n);
                    const T inv = inv_rms[static_cast<std::size_t>(r)];
                    for (int c = 0; c < n; ++c) {
                      da.at(r, c) += inv * (dout.at(r, c) - y.at(r, c) * dot);
                    }
                  }
                });
  }

  /// Scalar node: scale * sum of all elements.
  int sum_to_scalar(int a, T scale) {
    const Tensor& av = value(a);
    T acc = T(0);
    for (T v : av.data) acc += v;
    Tensor out(std::vector<int>{1});
    out.data[0] = scale * acc;
    return emit(std::move(out), "sum_to_scalar", [a, scale](GraphT& g, int self) {
      if (!g.wants(a)) return;
      const T d = scale * g.grad_of(self).data[0];
      Tensor& da = g.grad(a);
      for (T& v : da.data) v += d;
    });
  }

  /// Scalar node: sum_b weights[b] * vec[b].
  int dot_const(int vec, std::vector<T> weights) {
    const Tensor& v = value(vec);
    T acc = T(0);
    for (std::size_t i = 0; i < v.data.size(); ++i) acc += weights[i] * v.data[i];
    Tensor out(std::vector<int>{1});
    out.data[0] = acc;
    return emit(std::move(out), "dot_const", [vec, weights = std::move(weights)](GraphT& g, int self) {
      if (!g.wants(vec)) return;
      const T d = g.grad_of(self).data[0];
      Tensor& dv = g.grad(vec);
      for (std::size_t i = 0; i < dv.data.size(); ++i) dv.data[i] += d * weights[i];
    });
  }

  int add_scalars(int a, int b) { return add(a, b); }

  /// Flattens [B x 1] to [B] (or any reshape of equal element count).
  int reshape(int a, std::vector<int> shape) {
    Tensor out = value(a);
    out.shape = std::move(shape);
    return emit(std::move(out), "reshape", [a](GraphT& g, int self) {
      if (!g.wants(a)) return;
      const Tensor& dout = g.grad_of(self);
      Tensor& da = g.grad(a);
      for (std::size_t i = 0; i < dout.data.size(); ++i) da.data[i] += dout.data[i];
    });
  }

  /// Mean binary cross-entropy of probabilities against fixed labels, with
  /// inputs clamped to [1e-7, 1 - 1e-7] before the log (same tolerance the
  /// oracles use).
  int bce_loss(int probs, std::vector<T> labels) {
    const Tensor& p = value(probs);
    const std::size_t batch = p.data.size();
    const T lo = T(1e-7), hi = T(1) - T(1e-7);
    T acc = T(0);
    for (std::size_t i = 0; i < batch; ++i) {
      T pc = p.data[i] < lo ? lo : (p.data[i] > hi ? hi : p.data[i]);
      acc += labels[i] * std::log(pc) + (T(1) - labels[i]) * std::log(T(1) - pc);
    }
    Tensor out(std::vector<int>{1});
    out.data[0] = -acc / static_cast<T>(batch);
    return emit(std::move(out), "bce_loss",
                [probs, labels = std::move(labels), lo, hi](GraphT& g, int self) {
                  if (!g.wants(probs)) return;
                  const T d = g.grad_of(self).data[0];
                  const Tensor& p = g.value(probs);
                  Tensor& dp = g.grad(probs);
                  const T inv_b = T(1) / static_cast<T>(p.data.size());
                  for (std::size_t i = 0; i < p.data.size(); ++i) {
                    if (p.data[i] < lo || p.data[i] > hi) continue;  // clamped: flat
                    dp.data[i] += d * inv_b * (-labels[i] / p.data[i] +
                                               (T(1) - labels[i]) / (T(1) - p.data[i]));
                  }
                });
  }

  // ---- backward -------------------------------------------------------------

  /// Seeds d(loss)/d(loss) = 1 and propagates to every reachable input.
  void backward_from(int loss_id) {
    grad(loss_id).data[0] = T(1);
    for (int id = loss_id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.backward && !n.grad.data.empty()) n.backward(*this, id);
    }
  }

  T scalar(int id) const { return value(id).data[0]; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    std::function<void(GraphT&, int)> backward;
  };

  /// True when a parent wants gradient flow: inputs flagged needs_grad, and
  /// every interior node (its parents might).
  bool wants(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.needs_grad || n.backward != nullptr;
  }

  const Tensor& grad_of(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

  int emit(Tensor out, const char* op, std::function<void(GraphT&, int)> backward) {
    check_finite(out, op);
    nodes_.push_back(Node{std::move(out), Tensor{}, false, std::move(backward)});
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
};

using Graph = GraphT<float>;

}  // namespace logforge
