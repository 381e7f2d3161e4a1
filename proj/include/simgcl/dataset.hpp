#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace simgcl {

/// One line of a raw interaction file. Ratings and timestamps are optional;
/// retained interactions are treated as implicit positives.
struct RawInteraction {
  std::string user_id;
  std::string item_id;
  std::optional<double> rating;
  std::optional<long long> timestamp;
};

struct SplitRatios {
  double train = 7;
  double validation = 1;
  double test = 2;
};

/// Immutable ID-mapped interaction data. Users and items get dense indices
/// assigned by first appearance in the shuffled order; node id space is
/// users first, then items offset by num_users.
struct InteractionDataset {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> train;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> validation;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> test;
  std::vector<std::string> user_ids;  // index -> external token
  std::vector<std::string> item_ids;
  std::unordered_map<std::string, std::uint32_t> user_index;  // token -> index
  std::unordered_map<std::string, std::uint32_t> item_index;
  std::vector<std::uint32_t> item_popularity;  // training interaction count

  std::size_t num_nodes() const { return num_users + num_items; }
};

/// The 80/15/5 popularity partition of items that appear in training,
/// ranked by ascending training count (ties by ascending item index).
struct PopularityGroups {
  std::vector<std::uint32_t> unpopular;
  std::vector<std::uint32_t> normal;
  std::vector<std::uint32_t> popular;

  /// group_of[i] in {0:unpopular, 1:normal, 2:popular, 3:unranked}.
  std::vector<std::uint8_t> group_of;
};

/// Parses "user item [rating [extra]]" lines. Interactions with a rating
/// below `rating_threshold` are dropped; everything kept is an implicit
/// positive. Throws std::runtime_error naming the offending line.
std::vector<RawInteraction> load_interactions(const std::string& path,
                                              std::optional<double> rating_threshold);

/// Deduplicates (user,item) pairs, shuffles deterministically, assigns dense
/// IDs by first appearance, and splits globally: train gets floor(r_t*n),
/// validation floor(r_v*n), test the remainder.
InteractionDataset split_dataset(const std::vector<RawInteraction>& interactions,
                                 const SplitRatios& ratios, std::uint64_t seed);

PopularityGroups popularity_groups(const InteractionDataset& dataset);

/// Per-user item lists for one split; rows sorted ascending.
std::vector<std::vector<std::uint32_t>> group_by_user(
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& split,
    std::size_t num_users);

/// prepare/load of a split directory: train.txt/valid.txt/test.txt with
/// "user_index item_index" lines, user_ids.txt/item_ids.txt with one token
/// per line, and manifest.json with counts and the seed.
void write_split_dir(const InteractionDataset& dataset, const std::string& dir,
                     std::uint64_t seed, const std::string& source,
                     std::optional<double> rating_threshold);
InteractionDataset load_split_dir(const std::string& dir);

}  // namespace simgcl
