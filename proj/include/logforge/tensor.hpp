#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "logforge/errors.hpp"

namespace logforge {

/// Dense row-major tensor. Production code instantiates T = float (32-bit
/// reals everywhere); gradient checks instantiate T = double.
template <typename T>
struct TensorT {
  std::vector<int> shape;
  std::vector<T> data;

  TensorT() = default;
  explicit TensorT(std::vector<int> s, T fill = T(0)) : shape(std::move(s)) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    data.assign(n, fill);
  }

  std::size_t size() const { return data.size(); }
  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  T& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
  const T& at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols() + c]; }

  bool same_shape(const TensorT& o) const { return shape == o.shape; }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> out;
    out.shape = shape;
    out.data.reserve(data.size());
    for (T v : data) out.data.push_back(static_cast<U>(v));
    return out;
  }
};

using Tensor = TensorT<float>;

template <typename T>
void check_finite(const TensorT<T>& t, const char* op) {
  for (T v : t.data) {
    if (!std::isfinite(v)) {
      throw NumericalError(std::string("non-finite value in ") + op);
    }
  }
}

// Cache-friendly kernels shared by the tape ops and the tape-free forward
// passes used for sampling and rollouts.

/// C[M x N] += A[M x K] * B[K x N]
template <typename T>
void matmul_acc(const T* a, const T* b, T* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<std::size_t>(i) * k;
    T* crow = c + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const T av = arow[p];
      if (av == T(0)) continue;
      const T* brow = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

/// dA[M x K] += dC[M x N] * B^T
template <typename T>
void matmul_grad_a(const T* dc, const T* b, T* da, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const T* dcrow = dc + static_cast<std::size_t>(i) * n;
    T* darow = da + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const T* brow = b + static_cast<std::size_t>(p) * n;
      T acc = T(0);
      for (int j = 0; j < n; ++j) acc += dcrow[j] * brow[j];
      darow[p] += acc;
    }
  }
}

/// dB[K x N] += A^T * dC[M x N]
template <typename T>
void matmul_grad_b(const T* a, const T* dc, T* db, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<std::size_t>(i) * k;
    const T* dcrow = dc + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const T av = arow[p];
      if (av == T(0)) continue;
      T* dbrow = db + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) dbrow[j] += av * dcrow[j];
    }
  }
}

/// Stable in-place softmax of a row; returns nothing, normalizes to sum 1.
template <typename T>
void softmax_row(T* row, int n) {
  T mx = row[0];
  for (int i = 1; i < n; ++i) mx = row[i] > mx ? row[i] : mx;
  T sum = T(0);
  for (int i = 0; i < n; ++i) {
    row[i] = std::exp(row[i] - mx);
    sum += row[i];
  }
  for (int i = 0; i < n; ++i) row[i] /= sum;
}

}  // namespace logforge
