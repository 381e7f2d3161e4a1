#pragma once

#include <cassert>
#include <cstddef>
#include <cstring>
#include <span>
#include <vector>

namespace simgcl {

/// Dense row-major matrix. Rows are node embeddings throughout the engine.
template <class S>
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<S> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, S(0)) {}

  S* row(std::size_t i) { return data.data() + i * cols; }
  const S* row(std::size_t i) const { return data.data() + i * cols; }
  std::span<S> row_span(std::size_t i) { return {row(i), cols}; }
  std::span<const S> row_span(std::size_t i) const { return {row(i), cols}; }

  S& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  S at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  void resize(std::size_t r, std::size_t c) {
    rows = r;
    cols = c;
    data.assign(r * c, S(0));
  }

  void set_zero() { std::memset(data.data(), 0, data.size() * sizeof(S)); }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

template <class S>
inline S dot(const S* a, const S* b, std::size_t n) {
  S acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <class S>
inline void axpy(S alpha, const S* x, S* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class S>
inline S squared_norm(const S* a, std::size_t n) {
  return dot(a, a, n);
}

}  // namespace simgcl
