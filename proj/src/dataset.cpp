#include "simgcl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace simgcl {

namespace {

bool parse_number(const std::string& tok, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(tok, &pos);
    return pos == tok.size();
  } catch (...) {
    return false;
  }
}

}  // namespace

std::vector<RawInteraction> load_interactions(const std::string& path,
                                              std::optional<double> rating_threshold) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open interaction file: " + path);

  std::vector<RawInteraction> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string user, item, rating_tok, ts_tok;
    if (!(ss >> user)) continue;  // blank line
    if (!(ss >> item)) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected at least 2 tokens");
    }
    RawInteraction r;
    r.user_id = std::move(user);
    r.item_id = std::move(item);
    if (ss >> rating_tok) {
      double rating;
      if (!parse_number(rating_tok, rating)) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": malformed rating '" + rating_tok + "'");
      }
      r.rating = rating;
      if (ss >> ts_tok) {
        // Fourth column is pass-through; keep it when it parses as an integer.
        try {
          r.timestamp = std::stoll(ts_tok);
        } catch (...) {
        }
      }
    }
    if (rating_threshold && r.rating && *r.rating < *rating_threshold) continue;
    out.push_back(std::move(r));
  }
  return out;
}

InteractionDataset split_dataset(const std::vector<RawInteraction>& interactions,
                                 const SplitRatios& ratios, std::uint64_t seed) {
  if (interactions.empty()) throw std::runtime_error("split_dataset: no interactions");
  if (ratios.train <= 0 || ratios.validation <= 0 || ratios.test <= 0) {
    throw std::runtime_error("split_dataset: ratios must be positive");
  }

  // Deduplicate on (user,item) keeping first occurrence.
  std::vector<std::size_t> order;
  {
    std::unordered_map<std::string, std::size_t> seen;
    seen.reserve(interactions.size() * 2);
    for (std::size_t k = 0; k < interactions.size(); ++k) {
      const auto& r = interactions[k];
      std::string key = r.user_id + '\x1f' + r.item_id;
      if (seen.emplace(std::move(key), k).second) order.push_back(k);
    }
  }

  std::mt19937_64 gen(seed);
  std::shuffle(order.begin(), order.end(), gen);

  InteractionDataset ds;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  pairs.reserve(order.size());
  for (std::size_t k : order) {
    const auto& r = interactions[k];
    auto [uit, unew] = ds.user_index.emplace(r.user_id, std::uint32_t(ds.user_ids.size()));
    if (unew) ds.user_ids.push_back(r.user_id);
    auto [iit, inew] = ds.item_index.emplace(r.item_id, std::uint32_t(ds.item_ids.size()));
    if (inew) ds.item_ids.push_back(r.item_id);
    pairs.emplace_back(uit->second, iit->second);
  }
  ds.num_users = ds.user_ids.size();
  ds.num_items = ds.item_ids.size();

  const double total = ratios.train + ratios.validation + ratios.test;
  const std::size_t n = pairs.size();
  const std::size_t n_train = std::size_t(std::floor(n * ratios.train / total));
  const std::size_t n_valid = std::size_t(std::floor(n * ratios.validation / total));

  ds.train.assign(pairs.begin(), pairs.begin() + n_train);
  ds.validation.assign(pairs.begin() + n_train, pairs.begin() + n_train + n_valid);
  ds.test.assign(pairs.begin() + n_train + n_valid, pairs.end());

  ds.item_popularity.assign(ds.num_items, 0);
  for (const auto& [u, i] : ds.train) {
    (void)u;
    ++ds.item_popularity[i];
  }
  return ds;
}

PopularityGroups popularity_groups(const InteractionDataset& dataset) {
  if (dataset.train.empty()) throw std::runtime_error("popularity_groups: empty train split");

  std::vector<std::uint32_t> ranked;
  for (std::uint32_t i = 0; i < dataset.num_items; ++i) {
    if (dataset.item_popularity[i] > 0) ranked.push_back(i);
  }
  std::sort(ranked.begin(), ranked.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (dataset.item_popularity[a] != dataset.item_popularity[b]) {
      return dataset.item_popularity[a] < dataset.item_popularity[b];
    }
    return a < b;
  });

  const std::size_t r = ranked.size();
  const std::size_t n_unpop = std::size_t(std::floor(0.8 * double(r)));
  const std::size_t n_pop = std::size_t(std::ceil(0.05 * double(r)));

  PopularityGroups g;
  g.group_of.assign(dataset.num_items, 3);
  for (std::size_t k = 0; k < r; ++k) {
    std::uint8_t tag = k < n_unpop ? 0 : (k >= r - n_pop ? 2 : 1);
    g.group_of[ranked[k]] = tag;
    (tag == 0 ? g.unpopular : tag == 1 ? g.normal : g.popular).push_back(ranked[k]);
  }
  return g;
}

std::vector<std::vector<std::uint32_t>> group_by_user(
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& split,
    std::size_t num_users) {
  std::vector<std::vector<std::uint32_t>> by_user(num_users);
  for (const auto& [u, i] : split) by_user[u].push_back(i);
  for (auto& v : by_user) std::sort(v.begin(), v.end());
  return by_user;
}

namespace {

void write_pairs(const std::string& path,
                 const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& [u, i] : pairs) out << u << ' ' << i << '\n';
}

void write_tokens(const std::string& path, const std::vector<std::string>& tokens) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& t : tokens) out << t << '\n';
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> read_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  std::uint32_t u, i;
  while (in >> u >> i) pairs.emplace_back(u, i);
  return pairs;
}

std::vector<std::string> read_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  return tokens;
}

}  // namespace

void write_split_dir(const InteractionDataset& dataset, const std::string& dir,
                     std::uint64_t seed, const std::string& source,
                     std::optional<double> rating_threshold) {
  std::filesystem::create_directories(dir);
  write_pairs(dir + "/train.txt", dataset.train);
  write_pairs(dir + "/valid.txt", dataset.validation);
  write_pairs(dir + "/test.txt", dataset.test);
  write_tokens(dir + "/user_ids.txt", dataset.user_ids);
  write_tokens(dir + "/item_ids.txt", dataset.item_ids);

  nlohmann::json m;
  m["num_users"] = dataset.num_users;
  m["num_items"] = dataset.num_items;
  m["num_train"] = dataset.train.size();
  m["num_validation"] = dataset.validation.size();
  m["num_test"] = dataset.test.size();
  m["seed"] = seed;
  m["source"] = source;
  if (rating_threshold) m["rating_threshold"] = *rating_threshold;
  std::ofstream out(dir + "/manifest.json");
  if (!out) throw std::runtime_error("cannot write " + dir + "/manifest.json");
  out << m.dump(2) << '\n';
}

InteractionDataset load_split_dir(const std::string& dir) {
  InteractionDataset ds;
  ds.user_ids = read_tokens(dir + "/user_ids.txt");
  ds.item_ids = read_tokens(dir + "/item_ids.txt");
  ds.num_users = ds.user_ids.size();
  ds.num_items = ds.item_ids.size();
  for (std::uint32_t k = 0; k < ds.num_users; ++k) ds.user_index[ds.user_ids[k]] = k;
  for (std::uint32_t k = 0; k < ds.num_items; ++k) ds.item_index[ds.item_ids[k]] = k;
  ds.train = read_pairs(dir + "/train.txt");
  ds.validation = read_pairs(dir + "/valid.txt");
  ds.test = read_pairs(dir + "/test.txt");
  for (const auto& splits : {&ds.train, &ds.validation, &ds.test}) {
    for (const auto& [u, i] : *splits) {
      if (u >= ds.num_users || i >= ds.num_items) {
        throw std::runtime_error("split index out of range in " + dir);
      }
    }
  }
  ds.item_popularity.assign(ds.num_items, 0);
  for (const auto& [u, i] : ds.train) {
    (void)u;
    ++ds.item_popularity[i];
  }
  return ds;
}

}  // namespace simgcl
