#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "simgcl/dataset.hpp"

namespace simgcl {

/// Generator for desk-scale implicit-feedback benchmark data: Zipf item
/// popularity (long tail) plus user/item cluster affinity (learnable
/// structure), lognormal user activity.
struct SyntheticSpec {
  std::size_t num_users = 900;
  std::size_t num_items = 1400;
  std::size_t target_interactions = 100000;
  int clusters = 12;
  double zipf_exponent = 1.05;
  double affinity = 0.75;  // share of draws taken from the user's own cluster
  double activity_sigma = 0.8;
  std::uint64_t seed = 7;
};

namespace detail {

/// Cumulative-weight sampler over item ids.
struct WeightedPicker {
  std::vector<std::uint32_t> ids;
  std::vector<double> cumulative;

  void build(const std::vector<std::uint32_t>& item_ids, const std::vector<double>& weights) {
    ids = item_ids;
    cumulative.resize(ids.size());
    double acc = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      acc += weights[ids[k]];
      cumulative[k] = acc;
    }
  }

  bool empty() const { return ids.empty(); }

  std::uint32_t pick(std::mt19937_64& gen) const {
    std::uniform_real_distribution<double> unit(0.0, cumulative.back());
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), unit(gen));
    const std::size_t k = std::min<std::size_t>(it - cumulative.begin(), ids.size() - 1);
    return ids[k];
  }
};

}  // namespace detail

inline std::vector<RawInteraction> synthesize_interactions(const SyntheticSpec& spec) {
  if (spec.num_users == 0 || spec.num_items == 0 || spec.clusters < 1) {
    throw std::runtime_error("synthesize_interactions: bad spec");
  }
  std::mt19937_64 gen(spec.seed);

  // Zipf weights on a random popularity order.
  std::vector<std::uint32_t> pop_order(spec.num_items);
  for (std::uint32_t i = 0; i < spec.num_items; ++i) pop_order[i] = i;
  std::shuffle(pop_order.begin(), pop_order.end(), gen);
  std::vector<double> weight(spec.num_items);
  for (std::size_t rank = 0; rank < spec.num_items; ++rank) {
    weight[pop_order[rank]] = std::pow(double(rank + 1), -spec.zipf_exponent);
  }

  std::uniform_int_distribution<int> pick_cluster(0, spec.clusters - 1);
  std::vector<int> item_cluster(spec.num_items);
  for (auto& c : item_cluster) c = pick_cluster(gen);
  std::vector<int> user_cluster(spec.num_users);
  for (auto& c : user_cluster) c = pick_cluster(gen);

  std::vector<std::vector<std::uint32_t>> cluster_items(spec.clusters);
  std::vector<std::uint32_t> all_items(spec.num_items);
  for (std::uint32_t i = 0; i < spec.num_items; ++i) {
    all_items[i] = i;
    cluster_items[item_cluster[i]].push_back(i);
  }
  detail::WeightedPicker global;
  global.build(all_items, weight);
  std::vector<detail::WeightedPicker> in_cluster(spec.clusters);
  for (int c = 0; c < spec.clusters; ++c) in_cluster[c].build(cluster_items[c], weight);

  std::lognormal_distribution<double> activity(0.0, spec.activity_sigma);
  std::vector<double> act(spec.num_users);
  double act_sum = 0;
  for (auto& a : act) {
    a = activity(gen);
    act_sum += a;
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<RawInteraction> out;
  out.reserve(spec.target_interactions + spec.num_users);
  for (std::uint32_t u = 0; u < spec.num_users; ++u) {
    std::size_t want = std::size_t(
        std::lround(act[u] / act_sum * double(spec.target_interactions)));
    want = std::max<std::size_t>(want, 3);
    want = std::min(want, spec.num_items / 2);

    const detail::WeightedPicker& own = in_cluster[user_cluster[u]];
    std::unordered_set<std::uint32_t> chosen;
    std::size_t attempts = 0;
    while (chosen.size() < want && attempts < want * 60) {
      ++attempts;
      const bool local = !own.empty() && unit(gen) < spec.affinity;
      chosen.insert(local ? own.pick(gen) : global.pick(gen));
    }
    for (std::uint32_t i : chosen) {
      RawInteraction r;
      r.user_id = "u" + std::to_string(u);
      r.item_id = "i" + std::to_string(i);
      out.push_back(std::move(r));
    }
  }
  std::shuffle(out.begin(), out.end(), gen);
  return out;
}

inline void write_interactions(const std::vector<RawInteraction>& interactions,
                               const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& r : interactions) {
    out << r.user_id << ' ' << r.item_id;
    if (r.rating) out << ' ' << *r.rating;
    out << '\n';
  }
}

}  // namespace simgcl
