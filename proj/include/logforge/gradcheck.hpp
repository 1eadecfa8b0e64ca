#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "logforge/graph.hpp"
#include "logforge/rng.hpp"

namespace logforge {

struct GradCheckOptions {
  double epsilon = 1e-3;
  int probes_per_tensor = 8;
  std::uint64_t seed = 17;
};

/// Central finite differences against the tape's analytic gradients, over a
/// random subset of parameter scalars. `build(graph, bound)` must construct
/// the scalar loss from the tensors' current values (sampling and any
/// reference distributions frozen by the caller), filling `bound` with
/// (tensor, input-node) pairs, typically via bind_params.
///
/// Returns max over probes of |analytic - numeric| / max(|a|, |n|, 1e-8).
///
/// Checks instantiate T = double: the float nets share this exact templated
/// code path, and double evaluation keeps the difference quotient clear of
/// the float32 cancellation floor.
template <typename T, typename Build>
double grad_check(Build build, const GradCheckOptions& options = {}) {
  GraphT<T> g;
  std::vector<std::pair<TensorT<T>*, int>> bound;
  const int loss = build(g, bound);
  g.backward_from(loss);

  struct Probe {
    TensorT<T>* tensor;
    std::size_t element;
    double analytic;
  };
  std::vector<Probe> probes;
  SplitMix64 rng(options.seed);
  for (auto& [tensor, node] : bound) {
    if (tensor->data.empty()) continue;
    for (int k = 0; k < options.probes_per_tensor; ++k) {
      const std::size_t e = static_cast<std::size_t>(rng.next_below(tensor->data.size()));
      const double a = g.has_grad(node) ? static_cast<double>(g.grad(node).data[e]) : 0.0;
      probes.push_back({tensor, e, a});
    }
  }

  auto eval = [&]() {
    GraphT<T> g2;
    std::vector<std::pair<TensorT<T>*, int>> b2;
    const int l = build(g2, b2);
    return static_cast<double>(g2.scalar(l));
  };

  double max_rel = 0.0;
  for (const Probe& p : probes) {
    const T saved = p.tensor->data[p.element];
    p.tensor->data[p.element] = saved + static_cast<T>(options.epsilon);
    const double up = eval();
    p.tensor->data[p.element] = saved - static_cast<T>(options.epsilon);
    const double down = eval();
    p.tensor->data[p.element] = saved;
    const double numeric = (up - down) / (2.0 * options.epsilon);
    const double rel = std::abs(p.analytic - numeric) /
                       std::max({std::abs(p.analytic), std::abs(numeric), 1e-8});
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace logforge
