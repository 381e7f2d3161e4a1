#include "simgcl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

namespace simgcl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

/// Nodes tracked for the per-epoch uniformity value: items above the
/// interaction threshold plus a fixed-size user sample, all with at least
/// one training edge (isolated nodes have undefined normalized embeddings
/// under the skip-input forward).
std::vector<std::uint32_t> uniformity_cohort(const InteractionDataset& ds,
                                             const std::vector<std::uint32_t>& user_degree,
                                             std::uint32_t item_threshold,
                                             std::size_t user_sample, std::uint64_t seed) {
  std::vector<std::uint32_t> cohort;
  for (std::uint32_t i = 0; i < ds.num_items; ++i) {
    if (ds.item_popularity[i] > item_threshold) {
      cohort.push_back(std::uint32_t(ds.num_users) + i);
    }
  }
  std::vector<std::uint32_t> users;
  for (std::uint32_t u = 0; u < ds.num_users; ++u) {
    if (user_degree[u] > 0) users.push_back(u);
  }
  std::mt19937_64 gen(derive_seed(seed, "uniformity-cohort"));
  std::shuffle(users.begin(), users.end(), gen);
  if (users.size() > user_sample) users.resize(user_sample);
  cohort.insert(cohort.end(), users.begin(), users.end());

  if (cohort.size() < 2) {
    cohort.clear();
    for (std::uint32_t u = 0; u < ds.num_users; ++u) {
      if (user_degree[u] > 0) cohort.push_back(u);
    }
    for (std::uint32_t i = 0; i < ds.num_items; ++i) {
      if (ds.item_popularity[i] > 0) cohort.push_back(std::uint32_t(ds.num_users) + i);
    }
    std::shuffle(cohort.begin(), cohort.end(), gen);
    if (cohort.size() > user_sample) cohort.resize(user_sample);
  }
  std::sort(cohort.begin(), cohort.end());
  return cohort;
}

Matrix<float> clean_forward_for_method(const TrainConfig& cfg, const SparseAdjacency<float>& adj,
                                       const Matrix<float>& e0) {
  if (cfg.method == Method::SimGcl) return forward_simgcl_clean(adj, e0, cfg.layers);
  return forward_lightgcn(adj, e0, cfg.layers);
}

AugmentKind augment_kind_for(Method m) {
  switch (m) {
    case Method::SglNd: return AugmentKind::NodeDropout;
    case Method::SglRw: return AugmentKind::RandomWalk;
    default: return AugmentKind::EdgeDropout;  // sgl_ed and cl_only
  }
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const InteractionDataset& dataset,
                  const TrainOptions& options) {
  if (dataset.train.empty()) throw std::runtime_error("train: empty train split");
  if (cfg.layers < 1) throw std::runtime_error("train: layers must be >= 1");
  if (cfg.tau <= 0) throw std::runtime_error("train: tau must be positive");
  if (cfg.lambda < 0 || cfg.eps < 0) throw std::runtime_error("train: lambda/eps must be >= 0");

  const std::size_t n_nodes = dataset.num_nodes();
  const bool structure_views = cfg.method == Method::SglNd || cfg.method == Method::SglEd ||
                               cfg.method == Method::SglRw || cfg.method == Method::ClOnly;

  const auto t_adj0 = Clock::now();
  const SparseAdjacency<float> adj = build_adjacency<float>(dataset);
  double initial_adjacency_seconds = seconds_since(t_adj0);

  const auto train_by_user = group_by_user(dataset.train, dataset.num_users);
  const auto valid_by_user = group_by_user(dataset.validation, dataset.num_users);
  std::vector<std::uint32_t> user_degree(dataset.num_users);
  for (std::uint32_t u = 0; u < dataset.num_users; ++u) {
    user_degree[u] = std::uint32_t(train_by_user[u].size());
  }
  const auto cohort = uniformity_cohort(dataset, user_degree, options.uniformity_item_threshold,
                                        options.uniformity_user_sample, cfg.seed);

  Matrix<float> e0 = init_embeddings<float>(n_nodes, cfg.dim, cfg.seed);
  AdamState<float> adam(n_nodes, cfg.dim, float(cfg.lr));

  TrainResult result;
  result.best_e0 = e0;
  result.best_epoch = 0;

  Matrix<float> grad(n_nodes, cfg.dim);
  BatchWorkspace<float> ws;
  std::vector<std::uint32_t> order(dataset.train.size());
  std::iota(order.begin(), order.end(), 0);

  int since_improved = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t_epoch0 = Clock::now();
    PhaseTimes phases;
    phases.adjacency = initial_adjacency_seconds;  // counted once, in epoch 1
    initial_adjacency_seconds = 0;

    AugmentedGraphPair<float> aug;
    if (structure_views) {
      detail::ScopedPhase timer(&phases.adjacency);
      aug = draw_augmented_pair<float>(dataset, augment_kind_for(cfg.method), cfg.keep_rate,
                                       cfg.layers, derive_seed(cfg.seed, "aug-a", epoch),
                                       derive_seed(cfg.seed, "aug-b", epoch));
    }

    {
      std::mt19937_64 gen(derive_seed(cfg.seed, "shuffle", epoch));
      std::shuffle(order.begin(), order.end(), gen);
    }

    // One uniform negative per positive, rejected against the user's
    // training items; users interacting with every item cannot be sampled.
    TripletBatch epoch_triples;
    epoch_triples.users.reserve(order.size());
    epoch_triples.pos.reserve(order.size());
    epoch_triples.neg.reserve(order.size());
    {
      SplitMix64 neg_rng(derive_seed(cfg.seed, "negative", epoch));
      for (std::uint32_t k : order) {
        const auto [u, i] = dataset.train[k];
        const auto& seen = train_by_user[u];
        if (seen.size() >= dataset.num_items) continue;
        std::uint32_t j;
        do {
          j = std::uint32_t(neg_rng.next_below(dataset.num_items));
        } while (std::binary_search(seen.begin(), seen.end(), j));
        epoch_triples.users.push_back(u);
        epoch_triples.pos.push_back(i);
        epoch_triples.neg.push_back(j);
      }
    }

    const std::size_t n_triples = epoch_triples.size();
    const std::size_t n_batches = (n_triples + cfg.batch_size - 1) / cfg.batch_size;
    LossBreakdown epoch_loss;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t lo = b * cfg.batch_size;
      const std::size_t hi = std::min(n_triples, lo + cfg.batch_size);
      TripletBatch batch;
      batch.users.assign(epoch_triples.users.begin() + lo, epoch_triples.users.begin() + hi);
      batch.pos.assign(epoch_triples.pos.begin() + lo, epoch_triples.pos.begin() + hi);
      batch.neg.assign(epoch_triples.neg.begin() + lo, epoch_triples.neg.begin() + hi);

      const LossBreakdown bl = method_batch_objective<float>(
          cfg, adj, structure_views ? &aug : nullptr, e0, dataset.num_users, batch,
          derive_seed(cfg.seed, "noise-a", epoch, b), derive_seed(cfg.seed, "noise-b", epoch, b),
          nullptr, grad, ws, &phases);
      if (!std::isfinite(bl.joint)) {
        throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                 std::to_string(epoch) + " batch " + std::to_string(b) +
                                 " (joint=" + fmt(bl.joint) + ")");
      }
      {
        detail::ScopedPhase timer(&phases.backward);
        adam_step(adam, e0, grad);
      }
      epoch_loss.rec += bl.rec;
      epoch_loss.cl += bl.cl;
      epoch_loss.reg += bl.reg;
      epoch_loss.joint += bl.joint;
    }
    if (n_batches > 0) {
      epoch_loss.rec /= double(n_batches);
      epoch_loss.cl /= double(n_batches);
      epoch_loss.reg /= double(n_batches);
      epoch_loss.joint /= double(n_batches);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = epoch_loss;
    rec.phases = phases;

    if (options.evaluate || options.track_uniformity) {
      const Matrix<float> reps = clean_forward_for_method(cfg, adj, e0);
      if (options.evaluate) {
        const RankingResult ranking = rank_all(reps, dataset.num_users, dataset.num_items,
                                               train_by_user, valid_by_user, cfg.eval_k);
        std::tie(rec.val_recall, rec.val_ndcg) = recall_ndcg(ranking, valid_by_user, cfg.eval_k);
      }
      if (options.track_uniformity) {
        rec.uniformity = uniformity(reps, cohort, 100000, 1000000, derive_seed(cfg.seed, "unif"));
      }
    }
    rec.total_seconds = seconds_since(t_epoch0);
    result.records.push_back(rec);

    if (!options.quiet) {
      std::printf(
          "epoch %d joint=%s rec=%s cl=%s reg=%s val_recall@%d=%s val_ndcg@%d=%s unif=%s "
          "t=%.2fs\n",
          epoch, fmt(rec.loss.joint).c_str(), fmt(rec.loss.rec).c_str(), fmt(rec.loss.cl).c_str(),
          fmt(rec.loss.reg).c_str(), cfg.eval_k, fmt(rec.val_recall).c_str(), cfg.eval_k,
          fmt(rec.val_ndcg).c_str(), fmt(rec.uniformity).c_str(), rec.total_seconds);
      std::fflush(stdout);
    }

    if (options.evaluate) {
      if (result.best_epoch == 0 || rec.val_recall > result.best_recall) {
        result.best_recall = rec.val_recall;
        result.best_epoch = epoch;
        result.best_e0 = e0;
        since_improved = 0;
      } else if (++since_improved >= cfg.patience) {
        break;
      }
    } else {
      result.best_epoch = epoch;
      result.best_e0 = e0;
    }
  }

  if (!options.csv_path.empty()) {
    std::ofstream csv(options.csv_path);
    if (!csv) throw std::runtime_error("cannot write " + options.csv_path);
    csv << "epoch,rec_loss,cl_loss,reg_loss,joint_loss,val_recall,val_ndcg,uniformity\n";
    for (const auto& r : result.records) {
      csv << r.epoch << ',' << fmt(r.loss.rec) << ',' << fmt(r.loss.cl) << ',' << fmt(r.loss.reg)
          << ',' << fmt(r.loss.joint) << ',' << fmt(r.val_recall) << ',' << fmt(r.val_ndcg) << ','
          << fmt(r.uniformity) << '\n';
    }
  }
  if (!options.timings_csv_path.empty()) {
    std::ofstream csv(options.timings_csv_path);
    if (!csv) throw std::runtime_error("cannot write " + options.timings_csv_path);
    csv << "epoch,t_adjacency,t_convolution,t_loss,t_backward,t_total\n";
    for (const auto& r : result.records) {
      csv << r.epoch << ',' << fmt(r.phases.adjacency) << ',' << fmt(r.phases.convolution) << ','
          << fmt(r.phases.loss) << ',' << fmt(r.phases.backward) << ',' << fmt(r.total_seconds)
          << '\n';
    }
  }
  if (!options.checkpoint_path.empty()) {
    save_checkpoint(options.checkpoint_path, result.best_e0, dataset.num_users,
                    dataset.num_items);
  }
  return result;
}

}  // namespace simgcl
