#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "simgcl/dataset.hpp"
#include "simgcl/matrix.hpp"
#include "simgcl/rng.hpp"

namespace simgcl {

/// Worker cap for the embarrassingly parallel ranking pass. SIMGCL_THREADS
/// limits it; results are written to per-user slots and reduced in user
/// order, so the output is identical at any thread count.
inline unsigned ranking_threads() {
  unsigned n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("SIMGCL_THREADS")) {
    const long cap = std::atol(env);
    if (cap >= 1 && unsigned(cap) < n) n = unsigned(cap);
  }
  return n;
}

/// Per-user top-K item lists. Users without a truth interaction (or absent
/// from training) are skipped and marked not evaluated.
struct RankingResult {
  int k = 0;
  std::vector<std::vector<std::uint32_t>> items;  // per user, scores non-increasing
  std::vector<char> evaluated;
};

/// Full ranking: score(u,i) = e_u . e_i over all items, training positives
/// masked to -inf (unless disabled), ties broken by ascending item index.
template <class S>
RankingResult rank_all(const Matrix<S>& reps, std::size_t num_users, std::size_t num_items,
                       const std::vector<std::vector<std::uint32_t>>& train_by_user,
                       const std::vector<std::vector<std::uint32_t>>& truth_by_user, int k,
                       bool mask_train = true) {
  if (reps.rows != num_users + num_items) throw std::runtime_error("rank_all: shape mismatch");
  RankingResult result;
  result.k = k;
  result.items.resize(num_users);
  result.evaluated.assign(num_users, 0);

  auto score_user = [&](std::uint32_t u, std::vector<S>& scores,
                        std::vector<std::uint32_t>& order) {
    const S* eu = reps.row(u);
    for (std::uint32_t i = 0; i < num_items; ++i) {
      scores[i] = dot(eu, reps.row(num_users + i), reps.cols);
    }
    if (mask_train) {
      for (std::uint32_t i : train_by_user[u]) scores[i] = -std::numeric_limits<S>::infinity();
    }
    const std::size_t top = std::min<std::size_t>(k, num_items);
    order.resize(num_items);
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + top, order.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                        if (scores[a] != scores[b]) return scores[a] > scores[b];
                        return a < b;
                      });
    result.items[u].assign(order.begin(), order.begin() + top);
  };

  auto run_block = [&](std::uint32_t begin, std::uint32_t end) {
    std::vector<S> scores(num_items);
    std::vector<std::uint32_t> order;
    for (std::uint32_t u = begin; u < end; ++u) {
      if (truth_by_user[u].empty() || train_by_user[u].empty()) continue;
      result.evaluated[u] = 1;
      score_user(u, scores, order);
    }
  };

  const unsigned workers = std::min<unsigned>(ranking_threads(), std::max<std::size_t>(num_users, 1));
  if (workers <= 1) {
    run_block(0, std::uint32_t(num_users));
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (num_users + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(num_users, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(run_block, std::uint32_t(lo), std::uint32_t(hi));
    }
    for (auto& t : pool) t.join();
  }
  return result;
}

/// Mean Recall@K and NDCG@K over evaluated users.
inline std::pair<double, double> recall_ndcg(
    const RankingResult& result, const std::vector<std::vector<std::uint32_t>>& truth_by_user,
    int k) {
  double recall_sum = 0, ndcg_sum = 0;
  std::size_t n = 0;
  for (std::size_t u = 0; u < result.items.size(); ++u) {
    if (!result.evaluated[u]) continue;
    const auto& truth = truth_by_user[u];
    const auto& top = result.items[u];
    std::size_t hits = 0;
    double dcg = 0;
    for (std::size_t r = 0; r < top.size() && int(r) < k; ++r) {
      if (std::binary_search(truth.begin(), truth.end(), top[r])) {
        ++hits;
        dcg += 1.0 / std::log2(double(r) + 2.0);
      }
    }
    double idcg = 0;
    const std::size_t ideal = std::min<std::size_t>(k, truth.size());
    for (std::size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(double(r) + 2.0);
    recall_sum += double(hits) / double(truth.size());
    ndcg_sum += idcg > 0 ? dcg / idcg : 0.0;
    ++n;
  }
  if (n == 0) return {0.0, 0.0};
  return {recall_sum / double(n), ndcg_sum / double(n)};
}

/// Recall@K split by the popularity group of each hit item; the three
/// contributions sum to the overall recall.
inline std::array<double, 3> group_recall(
    const RankingResult& result, const std::vector<std::vector<std::uint32_t>>& truth_by_user,
    const PopularityGroups& groups, int k) {
  std::array<double, 3> sums{0, 0, 0};
  std::size_t n = 0;
  for (std::size_t u = 0; u < result.items.size(); ++u) {
    if (!result.evaluated[u]) continue;
    const auto& truth = truth_by_user[u];
    std::array<double, 3> hits{0, 0, 0};
    const auto& top = result.items[u];
    for (std::size_t r = 0; r < top.size() && int(r) < k; ++r) {
      if (!std::binary_search(truth.begin(), truth.end(), top[r])) continue;
      // Items never seen in training have zero interactions and count as
      // unpopular, keeping the three contributions a partition of recall.
      const std::uint8_t g = groups.group_of[top[r]];
      hits[g < 3 ? g : 0] += 1.0;
    }
    for (int g = 0; g < 3; ++g) sums[g] += hits[g] / double(truth.size());
    ++n;
  }
  if (n > 0) {
    for (auto& s : sums) s /= double(n);
  }
  return sums;
}

/// Log of the average pairwise Gaussian potential over normalized rows:
/// log E exp(-2 ||f(u)-f(v)||^2) over ordered distinct node pairs. All pairs
/// are enumerated when their count stays within all_pairs_limit; otherwise
/// pair_budget i.i.d. pairs are sampled.
template <class S>
double uniformity(const Matrix<S>& reps, std::span<const std::uint32_t> node_ids,
                  std::size_t pair_budget = 100000, std::size_t all_pairs_limit = 1000000,
                  std::uint64_t seed = 0) {
  const std::size_t m = node_ids.size();
  if (m < 2) throw std::runtime_error("uniformity: need at least two sampled nodes");
  const std::size_t d = reps.cols;

  Matrix<double> z(m, d);
  for (std::size_t r = 0; r < m; ++r) {
    const S* src = reps.row(node_ids[r]);
    double n2 = 0;
    for (std::size_t k = 0; k < d; ++k) n2 += double(src[k]) * double(src[k]);
    if (n2 <= 0) {
      throw std::runtime_error("uniformity: zero-norm row for node " +
                               std::to_string(node_ids[r]));
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (std::size_t k = 0; k < d; ++k) z.at(r, k) = double(src[k]) * inv;
  }

  auto potential = [&](std::size_t a, std::size_t b) {
    double dist2 = 0;
    const double* za = z.row(a);
    const double* zb = z.row(b);
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = za[k] - zb[k];
      dist2 += diff * diff;
    }
    return std::exp(-2.0 * dist2);
  };

  double sum = 0;
  std::size_t count = 0;
  if (m * (m - 1) <= all_pairs_limit) {
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) {
        if (a == b) continue;
        sum += potential(a, b);
        ++count;
      }
    }
  } else {
    SplitMix64 rng(derive_seed(seed, "uniformity"));
    for (std::size_t t = 0; t < pair_budget; ++t) {
      const std::size_t a = rng.next_below(m);
      std::size_t b = rng.next_below(m - 1);
      if (b >= a) ++b;
      sum += potential(a, b);
      ++count;
    }
  }
  return std::log(sum / double(count));
}

/// Writes "external_id v_0 ... v_{d-1}" rows at 17 significant digits after
/// a single header line, losslessly re-parseable.
template <class S>
void export_embeddings(const Matrix<S>& reps, std::span<const std::uint32_t> node_rows,
                       std::span<const std::string> external_ids, const std::string& path) {
  if (node_rows.size() != external_ids.size()) {
    throw std::runtime_error("export_embeddings: ids and rows differ in length");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "id";
  for (std::size_t k = 0; k < reps.cols; ++k) out << " e" << k;
  out << '\n';
  char buf[64];
  for (std::size_t r = 0; r < node_rows.size(); ++r) {
    out << external_ids[r];
    const S* row = reps.row(node_rows[r]);
    for (std::size_t k = 0; k < reps.cols; ++k) {
      std::snprintf(buf, sizeof(buf), " %.17g", double(row[k]));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("short write on " + path);
}

}  // namespace simgcl
