#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "simgcl/dataset.hpp"
#include "simgcl/matrix.hpp"

namespace simgcl {

/// Symmetrically normalized bipartite adjacency in CSR form. Node ids are
/// users first, then items offset by num_users. Column indices are sorted
/// within each row, so equal graphs have identical storage.
template <class S>
struct SparseAdjacency {
  std::size_t num_nodes = 0;
  std::vector<std::size_t> row_offsets;
  std::vector<std::uint32_t> column_indices;
  std::vector<S> values;

  std::size_t nnz() const { return column_indices.size(); }

  /// y = A x, row-major dense operands with x.cols == y.cols.
  void multiply(const Matrix<S>& x, Matrix<S>& y) const {
    if (x.rows != num_nodes) throw std::runtime_error("adjacency/matrix dimension mismatch");
    if (!y.same_shape(x)) y.resize(x.rows, x.cols);
    const std::size_t d = x.cols;
    for (std::size_t a = 0; a < num_nodes; ++a) {
      S* __restrict__ out = y.row(a);
      std::fill(out, out + d, S(0));
      for (std::size_t k = row_offsets[a]; k < row_offsets[a + 1]; ++k) {
        const S v = values[k];
        const S* __restrict__ src = x.row(column_indices[k]);
        for (std::size_t j = 0; j < d; ++j) out[j] += v * src[j];
      }
    }
  }

  bool operator==(const SparseAdjacency& o) const {
    return num_nodes == o.num_nodes && row_offsets == o.row_offsets &&
           column_indices == o.column_indices && values == o.values;
  }
};

namespace detail {

/// Builds D^{-1/2} A D^{-1/2} from undirected user-item edges. Degrees are
/// taken in the given (possibly augmented) edge set; zero-degree nodes get
/// empty rows and never receive self-loops.
template <class S>
SparseAdjacency<S> build_from_edges(
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
    std::size_t num_users, std::size_t num_items) {
  const std::size_t n = num_users + num_items;
  SparseAdjacency<S> adj;
  adj.num_nodes = n;

  std::vector<std::uint32_t> degree(n, 0);
  for (const auto& [u, i] : edges) {
    ++degree[u];
    ++degree[num_users + i];
  }

  adj.row_offsets.assign(n + 1, 0);
  for (std::size_t a = 0; a < n; ++a) adj.row_offsets[a + 1] = adj.row_offsets[a] + degree[a];

  const std::size_t nnz = 2 * edges.size();
  adj.column_indices.resize(nnz);
  adj.values.resize(nnz);

  std::vector<double> inv_sqrt_deg(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    if (degree[a] > 0) inv_sqrt_deg[a] = 1.0 / std::sqrt(double(degree[a]));
  }

  std::vector<std::size_t> cursor(adj.row_offsets.begin(), adj.row_offsets.end() - 1);
  for (const auto& [u, i] : edges) {
    const std::uint32_t a = u;
    const std::uint32_t b = std::uint32_t(num_users + i);
    const S v = S(inv_sqrt_deg[a] * inv_sqrt_deg[b]);
    adj.column_indices[cursor[a]] = b;
    adj.values[cursor[a]++] = v;
    adj.column_indices[cursor[b]] = a;
    adj.values[cursor[b]++] = v;
  }

  // Canonical order: sort each row's columns (values follow).
  for (std::size_t a = 0; a < n; ++a) {
    const std::size_t lo = adj.row_offsets[a], hi = adj.row_offsets[a + 1];
    std::vector<std::pair<std::uint32_t, S>> entries;
    entries.reserve(hi - lo);
    for (std::size_t k = lo; k < hi; ++k) entries.emplace_back(adj.column_indices[k], adj.values[k]);
    std::sort(entries.begin(), entries.end());
    for (std::size_t k = lo; k < hi; ++k) {
      adj.column_indices[k] = entries[k - lo].first;
      adj.values[k] = entries[k - lo].second;
    }
  }
  return adj;
}

}  // namespace detail

template <class S>
SparseAdjacency<S> build_adjacency(const InteractionDataset& dataset) {
  if (dataset.train.empty()) throw std::runtime_error("build_adjacency: empty train split");
  return detail::build_from_edges<S>(dataset.train, dataset.num_users, dataset.num_items);
}

/// Keeps exactly floor(keep_rate*|E|) training edges, sampled uniformly
/// without replacement, and renormalizes with the surviving degrees.
template <class S>
SparseAdjacency<S> edge_dropout(const InteractionDataset& dataset, double keep_rate,
                                std::uint64_t seed) {
  if (keep_rate <= 0.0 || keep_rate > 1.0) {
    throw std::runtime_error("edge_dropout: keep_rate must be in (0,1]");
  }
  const std::size_t n_edges = dataset.train.size();
  const std::size_t n_keep = std::size_t(std::floor(keep_rate * double(n_edges)));

  std::vector<std::uint32_t> idx(n_edges);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 gen(seed);
  // Partial Fisher-Yates: first n_keep positions are the sample.
  for (std::size_t k = 0; k < n_keep && k + 1 < n_edges; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, n_edges - 1);
    std::swap(idx[k], idx[pick(gen)]);
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> kept;
  kept.reserve(n_keep);
  for (std::size_t k = 0; k < n_keep; ++k) kept.push_back(dataset.train[idx[k]]);
  return detail::build_from_edges<S>(kept, dataset.num_users, dataset.num_items);
}

/// Drops floor((1-keep_rate)*|N|) nodes uniformly with all incident edges,
/// renormalizing on the surviving subgraph.
template <class S>
SparseAdjacency<S> node_dropout(const InteractionDataset& dataset, double keep_rate,
                                std::uint64_t seed) {
  if (keep_rate <= 0.0 || keep_rate > 1.0) {
    throw std::runtime_error("node_dropout: keep_rate must be in (0,1]");
  }
  const std::size_t n = dataset.num_nodes();
  const std::size_t n_drop = std::size_t(std::floor((1.0 - keep_rate) * double(n)));

  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 gen(seed);
  for (std::size_t k = 0; k < n_drop && k + 1 < n; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, n - 1);
    std::swap(idx[k], idx[pick(gen)]);
  }
  std::vector<char> dropped(n, 0);
  for (std::size_t k = 0; k < n_drop; ++k) dropped[idx[k]] = 1;

  std::vector<std::pair<std::uint32_t, std::uint32_t>> kept;
  kept.reserve(dataset.train.size());
  for (const auto& [u, i] : dataset.train) {
    if (!dropped[u] && !dropped[dataset.num_users + i]) kept.emplace_back(u, i);
  }
  return detail::build_from_edges<S>(kept, dataset.num_users, dataset.num_items);
}

/// L independent edge-dropout draws, one adjacency per propagation layer.
template <class S>
std::vector<SparseAdjacency<S>> random_walk_views(const InteractionDataset& dataset,
                                                  double keep_rate, int num_layers,
                                                  std::uint64_t seed) {
  if (num_layers < 1) throw std::runtime_error("random_walk_views: need at least one layer");
  std::mt19937_64 gen(seed);
  std::vector<SparseAdjacency<S>> views;
  views.reserve(num_layers);
  for (int l = 0; l < num_layers; ++l) views.push_back(edge_dropout<S>(dataset, keep_rate, gen()));
  return views;
}

enum class AugmentKind { NodeDropout, EdgeDropout, RandomWalk };

/// The two contrastive views of one epoch. ND/ED hold one adjacency per
/// view; RW holds exactly L per view.
template <class S>
struct AugmentedGraphPair {
  AugmentKind kind;
  std::vector<SparseAdjacency<S>> view_a;
  std::vector<SparseAdjacency<S>> view_b;
};

template <class S>
AugmentedGraphPair<S> draw_augmented_pair(const InteractionDataset& dataset, AugmentKind kind,
                                          double keep_rate, int num_layers,
                                          std::uint64_t seed_a, std::uint64_t seed_b) {
  AugmentedGraphPair<S> pair;
  pair.kind = kind;
  switch (kind) {
    case AugmentKind::NodeDropout:
      pair.view_a.push_back(node_dropout<S>(dataset, keep_rate, seed_a));
      pair.view_b.push_back(node_dropout<S>(dataset, keep_rate, seed_b));
      break;
    case AugmentKind::EdgeDropout:
      pair.view_a.push_back(edge_dropout<S>(dataset, keep_rate, seed_a));
      pair.view_b.push_back(edge_dropout<S>(dataset, keep_rate, seed_b));
      break;
    case AugmentKind::RandomWalk:
      pair.view_a = random_walk_views<S>(dataset, keep_rate, num_layers, seed_a);
      pair.view_b = random_walk_views<S>(dataset, keep_rate, num_layers, seed_b);
      break;
  }
  return pair;
}

}  // namespace simgcl
