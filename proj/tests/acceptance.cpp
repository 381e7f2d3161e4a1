// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Criteria 7 and 8 train on a generated desk-scale dataset
// and take a few minutes; everything else is fast.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "simgcl/dataset.hpp"
#include "simgcl/evalkit.hpp"
#include "simgcl/graph.hpp"
#include "simgcl/model.hpp"
#include "simgcl/objective.hpp"
#include "simgcl/synthetic.hpp"
#include "simgcl/trainer.hpp"

using namespace simgcl;

namespace {

int g_failures = 0;

void report(int id, const std::string& label, bool pass, const std::string& detail = "") {
  std::printf("%s criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", id, label.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Criterion 1: analytic gradients vs central finite differences, 64-bit.

double gradient_gate_worst() {
  std::mt19937_64 gen(12345);
  double worst = 0;

  for (Method method : {Method::LightGcn, Method::SglNd, Method::SglEd, Method::SglRw,
                        Method::SglWa, Method::ClOnly, Method::SimGcl}) {
    for (int L : {1, 2, 3}) {
      const auto edges = oracle::random_edges(5, 7, 16, gen);
      const auto ds = oracle::dataset_from_edges(edges, 5, 7);
      const auto adj = build_adjacency<double>(ds);
      AugmentKind kind = method == Method::SglNd
                             ? AugmentKind::NodeDropout
                             : (method == Method::SglRw ? AugmentKind::RandomWalk
                                                        : AugmentKind::EdgeDropout);
      const auto aug = draw_augmented_pair<double>(ds, kind, 0.8, L, gen(), gen());

      TripletBatch batch;
      for (std::size_t k = 0; k < 6 && k < ds.train.size(); ++k) {
        batch.users.push_back(ds.train[k].first);
        batch.pos.push_back(ds.train[k].second);
        batch.neg.push_back(std::uint32_t((ds.train[k].second + 1 + k) % ds.num_items));
      }

      struct Case {
        LossWeights w;
        double eps;
      };
      std::vector<Case> cases;
      cases.push_back({{1, 0, 0}, 0.1});  // BPR alone
      cases.push_back({{0, 1, 0}, 0.1});  // InfoNCE alone (the method's form)
      for (double lambda : {0.0, 0.5, 2.0}) {
        std::vector<double> eps_grid{0.1};
        if (method == Method::SimGcl) eps_grid = {0.0, 0.1};
        for (double eps : eps_grid) cases.push_back({{1, lambda, 1e-4}, eps});
      }

      for (const Case& c : cases) {
        TrainConfig cfg;
        cfg.method = method;
        cfg.layers = L;
        cfg.dim = 8;
        cfg.tau = 0.2;
        cfg.eps = c.eps;
        cfg.noise_type = NoiseType::Uniform;

        Matrix<double> e0 = init_embeddings<double>(12, 8, gen());
        Matrix<double> grad;
        BatchWorkspace<double> ws;
        NoiseReplay<double> replay;
        replay.capture = true;
        method_batch_objective<double>(cfg, adj, &aug, e0, 5, batch, gen(), gen(), &replay, grad,
                                       ws, nullptr, &c.w);
        replay.capture = false;

        const double h = 1e-6;
        double err2 = 0, norm2 = 0;
        Matrix<double> scratch;
        for (std::size_t k = 0; k < e0.data.size(); ++k) {
          const double keep = e0.data[k];
          e0.data[k] = keep + h;
          const double lp = method_batch_objective<double>(cfg, adj, &aug, e0, 5, batch, 0, 0,
                                                           &replay, scratch, ws, nullptr, &c.w)
                                .joint;
          e0.data[k] = keep - h;
          const double lm = method_batch_objective<double>(cfg, adj, &aug, e0, 5, batch, 0, 0,
                                                           &replay, scratch, ws, nullptr, &c.w)
                                .joint;
          e0.data[k] = keep;
          const double fd = (lp - lm) / (2 * h);
          err2 += (fd - grad.data[k]) * (fd - grad.data[k]);
          norm2 += grad.data[k] * grad.data[k];
        }
        const double rel = std::sqrt(err2) / std::max(std::sqrt(norm2), 1e-12);
        worst = std::max(worst, rel);
      }
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Criterion 2: sparse forward vs dense matrix-power oracle.

double propagation_gate_worst() {
  std::mt19937_64 gen(777);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t users = 2 + gen() % 7, items = 2 + gen() % 8;  // up to 16 nodes
    const std::size_t n = users + items;
    const auto edges = oracle::random_edges(users, items, 2 + gen() % (users * items), gen);
    if (edges.empty()) continue;
    const auto ds = oracle::dataset_from_edges(edges, users, items);
    const auto adj = build_adjacency<double>(ds);
    const auto dense = oracle::dense_from_sparse(adj);
    Matrix<double> e0(n, 5);
    std::uniform_real_distribution<double> unit(-1, 1);
    for (auto& v : e0.data) v = unit(gen);

    for (int L : {1, 2, 3}) {
      worst = std::max(worst, oracle::max_abs_diff(forward_lightgcn(adj, e0, L),
                                                   oracle::dense_mean_tower(dense, e0, L, true)));
      worst = std::max(worst, oracle::max_abs_diff(forward_simgcl_clean(adj, e0, L),
                                                   oracle::dense_mean_tower(dense, e0, L, false)));
      // Perturbed mode with recorded noise vs dense recursion on the same noise.
      ForwardTrace<double> trace;
      NoiseSpec<double> spec{0.1, NoiseType::Uniform, gen()};
      const auto sparse_out = forward_simgcl_perturbed(adj, e0, L, spec, &trace);
      Matrix<double> acc(n, 5);
      Matrix<double> cur = e0;
      for (int l = 1; l <= L; ++l) {
        cur = oracle::matmul(dense, cur);
        for (std::size_t k = 0; k < cur.data.size(); ++k) {
          cur.data[k] += trace.noise[l - 1].data[k];
        }
        for (std::size_t k = 0; k < acc.data.size(); ++k) acc.data[k] += cur.data[k];
      }
      for (auto& v : acc.data) v /= double(L);
      worst = std::max(worst, oracle::max_abs_diff(sparse_out, acc));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Criterion 5 helper: independent metric computation from sorted scores.

struct BruteMetrics {
  double recall = 0, ndcg = 0;
  std::array<double, 3> contrib{0, 0, 0};
  std::size_t users = 0;
};

BruteMetrics brute_metrics(const Matrix<float>& reps, std::size_t num_users,
                           std::size_t num_items,
                           const std::vector<std::vector<std::uint32_t>>& train,
                           const std::vector<std::vector<std::uint32_t>>& truth,
                           const PopularityGroups& groups, int k) {
  BruteMetrics out;
  for (std::uint32_t u = 0; u < num_users; ++u) {
    if (truth[u].empty() || train[u].empty()) continue;
    const auto top = oracle::brute_force_topk(reps, num_users, num_items, u, train[u], k);
    double hits = 0, dcg = 0;
    std::array<double, 3> ghits{0, 0, 0};
    for (std::size_t r = 0; r < top.size(); ++r) {
      if (std::find(truth[u].begin(), truth[u].end(), top[r]) == truth[u].end()) continue;
      hits += 1;
      dcg += 1.0 / std::log2(double(r) + 2.0);
      const std::uint8_t g = groups.group_of[top[r]];
      ghits[g < 3 ? g : 0] += 1;  // cold items attribute as unpopular
    }
    double idcg = 0;
    for (std::size_t r = 0; r < std::min<std::size_t>(k, truth[u].size()); ++r) {
      idcg += 1.0 / std::log2(double(r) + 2.0);
    }
    out.recall += hits / double(truth[u].size());
    out.ndcg += idcg > 0 ? dcg / idcg : 0;
    for (int g = 0; g < 3; ++g) out.contrib[g] += ghits[g] / double(truth[u].size());
    ++out.users;
  }
  if (out.users > 0) {
    out.recall /= double(out.users);
    out.ndcg /= double(out.users);
    for (auto& c : out.contrib) c /= double(out.users);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Desk-scale dataset shared by criteria 7 and 8.

InteractionDataset desk_dataset() {
  SyntheticSpec spec;
  spec.num_users = 900;
  spec.num_items = 1400;
  spec.target_interactions = 100000;
  spec.clusters = 12;
  spec.zipf_exponent = 1.05;
  spec.affinity = 0.75;
  spec.seed = 20240501;
  const auto raw = synthesize_interactions(spec);
  return split_dataset(raw, {}, 13);
}

struct DeskRun {
  TrainResult result;
  double best_uniformity = 0;
  std::array<double, 3> test_contrib{0, 0, 0};
  double test_recall = 0;
};

DeskRun desk_run(const InteractionDataset& ds, Method method, double lambda, double eps,
                 int max_epochs) {
  TrainConfig cfg;
  cfg.method = method;
  cfg.layers = 2;
  cfg.dim = 64;
  cfg.batch_size = 2048;
  cfg.lambda = lambda;
  cfg.eps = eps;
  cfg.keep_rate = 0.9;
  cfg.max_epochs = max_epochs;
  cfg.patience = 10;
  cfg.seed = 2024;

  TrainOptions opts;
  opts.quiet = true;
  opts.uniformity_item_threshold = 200;
  opts.uniformity_user_sample = 5000;

  DeskRun run;
  run.result = train(cfg, ds, opts);
  for (const auto& r : run.result.records) {
    if (r.epoch == run.result.best_epoch) run.best_uniformity = r.uniformity;
  }

  const auto adj = build_adjacency<float>(ds);
  const Matrix<float> reps =
      method == Method::SimGcl ? forward_simgcl_clean(adj, run.result.best_e0, cfg.layers)
                               : forward_lightgcn(adj, run.result.best_e0, cfg.layers);
  const auto train_by_user = group_by_user(ds.train, ds.num_users);
  const auto test_by_user = group_by_user(ds.test, ds.num_users);
  const auto ranking = rank_all(reps, ds.num_users, ds.num_items, train_by_user, test_by_user, 20);
  const auto groups = popularity_groups(ds);
  run.test_contrib = group_recall(ranking, test_by_user, groups, 20);
  run.test_recall = recall_ndcg(ranking, test_by_user, 20).first;
  return run;
}

struct BenchRun {
  double total = 0;
  double convolution = 0;
};

BenchRun bench_run(const InteractionDataset& ds, Method method, int epochs) {
  TrainConfig cfg;
  cfg.method = method;
  cfg.layers = 3;  // three-layer protocol for the timing comparison
  cfg.dim = 64;
  cfg.batch_size = 2048;
  cfg.lambda = 0.5;
  cfg.eps = 0.1;
  cfg.keep_rate = 0.9;
  cfg.max_epochs = epochs;
  cfg.seed = 99;
  TrainOptions opts;
  opts.quiet = true;
  opts.evaluate = false;
  opts.track_uniformity = false;
  const auto result = train(cfg, ds, opts);
  BenchRun out;
  for (const auto& r : result.records) {
    out.total += r.total_seconds;
    out.convolution += r.phases.convolution;
  }
  out.total /= double(result.records.size());
  out.convolution /= double(result.records.size());
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  // 1. Gradient gate.
  {
    const double worst = gradient_gate_worst();
    report(1, "analytic gradients match 64-bit central finite differences", worst < 1e-6,
           "worst relative error " + fmt(worst));
  }

  // 2. Propagation oracle.
  {
    const double worst = propagation_gate_worst();
    report(2, "sparse forwards equal the dense matrix-power oracle", worst < 1e-10,
           "max abs error " + fmt(worst));
  }

  // 3. Loss identities.
  {
    bool pass = true;
    std::string why;
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> unit(-1, 1);
    for (int trial = 0; trial < 25 && pass; ++trial) {
      const std::size_t m = 2 + gen() % 9;
      Matrix<double> rows(m, 6);
      for (auto& v : rows.data) v = unit(gen);
      const double mine = infonce_wa_loss(rows, 0.2, nullptr);
      std::vector<std::vector<double>> z(m, std::vector<double>(6));
      for (std::size_t r = 0; r < m; ++r) {
        const double n = std::sqrt(squared_norm(rows.row(r), 6));
        for (std::size_t c = 0; c < 6; ++c) z[r][c] = rows.at(r, c) / n;
      }
      const double eq4 = oracle::naive_infonce_pair_form(z, 0.2);
      const double eq6 = oracle::naive_infonce_shifted_form(z, 0.2);
      if (std::abs(mine - eq4) > 1e-10 || std::abs(mine - eq6) > 1e-10 ||
          std::abs(eq4 - eq6) > 1e-10) {
        pass = false;
        why = "forms diverge by " + fmt(std::max(std::abs(mine - eq4), std::abs(mine - eq6)));
      }
    }
    Matrix<double> one(1, 4);
    one.at(0, 2) = 0.7;
    if (infonce_wa_loss(one, 0.2, nullptr) != 0.0 ||
        infonce_loss(one, one, 0.2, nullptr, nullptr) != 0.0) {
      pass = false;
      why = "singleton batch loss is not zero";
    }
    Matrix<double> ortho(2, 2);
    ortho.at(0, 0) = 1;
    ortho.at(1, 1) = 1;
    const double want = 2.0 * std::log1p(std::exp(-1.0 / 0.2));
    const double got = infonce_wa_loss(ortho, 0.2, nullptr);
    if (std::abs(got - want) > 1e-9) {
      pass = false;
      why = "orthogonal-pair value " + fmt(got) + " != " + fmt(want);
    }
    report(3, "contrastive loss identities hold", pass, why);
  }

  // 4. Noise constraints over 1e5 rows per type.
  {
    bool pass = true;
    std::string why;
    const std::size_t d = 16, rows = 100000;
    SplitMix64 rng(404);
    std::mt19937_64 gen(405);
    std::uniform_real_distribution<double> unit(-1, 1);
    std::vector<double> e(d), delta(d);
    for (NoiseType type :
         {NoiseType::Uniform, NoiseType::Gaussian, NoiseType::PositiveUniform}) {
      double worst_norm = 0;
      std::size_t violations = 0;
      for (std::size_t r = 0; r < rows; ++r) {
        for (auto& v : e) v = unit(gen);
        sample_noise_row(e.data(), d, type, 0.1, rng, delta.data());
        double n2 = 0;
        for (std::size_t k = 0; k < d; ++k) {
          n2 += delta[k] * delta[k];
          if (type == NoiseType::PositiveUniform) {
            violations += delta[k] < 0.0;
          } else {
            violations += delta[k] * e[k] < 0.0;
          }
        }
        worst_norm = std::max(worst_norm, std::abs(std::sqrt(n2) - 0.1));
      }
      if (worst_norm > 1e-9 || violations != 0) {
        pass = false;
        why = std::string(noise_type_name(type)) + ": norm error " + fmt(worst_norm) + ", " +
              std::to_string(violations) + " violations";
      }
    }
    report(4, "noise rows meet the norm and sign constraints", pass, why);
  }

  // 5. Metric oracles on 200 random instances.
  {
    bool pass = true;
    std::string why;
    std::mt19937_64 gen(505);
    std::uniform_real_distribution<float> unit(-1, 1);
    for (int trial = 0; trial < 200 && pass; ++trial) {
      const std::size_t users = 2 + gen() % 9, items = 3 + gen() % 13;
      Matrix<float> reps(users + items, 4);
      for (auto& v : reps.data) v = unit(gen);
      std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
      std::vector<std::vector<std::uint32_t>> train(users), truth(users);
      for (std::uint32_t u = 0; u < users; ++u) {
        for (std::uint32_t i = 0; i < items; ++i) {
          const auto roll = gen() % 10;
          if (roll < 3) {
            train[u].push_back(i);
            edges.emplace_back(u, i);
          } else if (roll < 6) {
            truth[u].push_back(i);
          }
        }
      }
      if (edges.empty()) continue;
      const auto ds = oracle::dataset_from_edges(edges, users, items);
      const auto groups = popularity_groups(ds);
      const int k = std::vector<int>{1, 3, 5}[trial % 3];

      const auto ranking = rank_all(reps, users, items, train, truth, k);
      const auto [recall, ndcg] = recall_ndcg(ranking, truth, k);
      const auto contrib = group_recall(ranking, truth, groups, k);
      const auto brute = brute_metrics(reps, users, items, train, truth, groups, k);

      for (std::uint32_t u = 0; u < users; ++u) {
        if (!ranking.evaluated[u]) continue;
        const auto want = oracle::brute_force_topk(reps, users, items, u, train[u], k);
        if (ranking.items[u] != want) {
          pass = false;
          why = "top-k list mismatch";
        }
      }
      if (std::abs(recall - brute.recall) > 1e-12 || std::abs(ndcg - brute.ndcg) > 1e-12) {
        pass = false;
        why = "recall/ndcg mismatch";
      }
      for (int g = 0; g < 3; ++g) {
        if (std::abs(contrib[g] - brute.contrib[g]) > 1e-12) {
          pass = false;
          why = "group contribution mismatch";
        }
      }
      if (std::abs(contrib[0] + contrib[1] + contrib[2] - recall) > 1e-9) {
        pass = false;
        why = "contributions do not sum to recall";
      }
    }
    report(5, "ranking metrics match exhaustive brute-force oracles", pass, why);
  }

  // 6. Uniformity closed forms and Monte-Carlo agreement.
  {
    bool pass = true;
    std::string why;
    Matrix<double> same(5, 3);
    for (std::size_t r = 0; r < 5; ++r) {
      same.at(r, 0) = 0.2;
      same.at(r, 1) = -0.9;
      same.at(r, 2) = 0.4;
    }
    std::vector<std::uint32_t> ids{0, 1, 2, 3, 4};
    if (std::abs(uniformity(same, ids)) > 1e-12) {
      pass = false;
      why = "identical rows not at zero";
    }
    Matrix<double> anti(2, 3);
    anti.at(0, 0) = 3;
    anti.at(1, 0) = -5;
    std::vector<std::uint32_t> two{0, 1};
    if (std::abs(uniformity(anti, two) + 8.0) > 1e-9) {
      pass = false;
      why = "antipodal rows not at -8";
    }
    // Monte-Carlo within three standard errors of the exact value.
    std::mt19937_64 gen(606);
    std::uniform_real_distribution<double> unit(-1, 1);
    Matrix<double> reps(80, 4);
    for (auto& v : reps.data) v = unit(gen);
    std::vector<std::uint32_t> all(80);
    for (std::uint32_t k = 0; k < 80; ++k) all[k] = k;
    // exact mean and variance of the pairwise potential
    double mean = 0, m2 = 0;
    std::size_t count = 0;
    for (std::size_t a = 0; a < 80; ++a) {
      for (std::size_t b = 0; b < 80; ++b) {
        if (a == b) continue;
        double na = std::sqrt(squared_norm(reps.row(a), 4));
        double nb = std::sqrt(squared_norm(reps.row(b), 4));
        double dist2 = 0;
        for (std::size_t k = 0; k < 4; ++k) {
          const double diff = reps.at(a, k) / na - reps.at(b, k) / nb;
          dist2 += diff * diff;
        }
        const double pot = std::exp(-2 * dist2);
        ++count;
        const double delta = pot - mean;
        mean += delta / double(count);
        m2 += delta * (pot - mean);
      }
    }
    const double variance = m2 / double(count);
    const std::size_t budget = 20000;
    for (std::uint64_t seed : {1, 2, 3}) {
      const double mc = uniformity(reps, all, budget, /*all_pairs_limit=*/100, seed);
      const double se = std::sqrt(variance / double(budget));
      if (std::abs(std::exp(mc) - mean) > 3 * se) {
        pass = false;
        why = "Monte-Carlo estimate off by more than 3 standard errors (seed " +
              std::to_string(seed) + ")";
      }
    }
    report(6, "uniformity closed forms and Monte-Carlo agreement", pass, why);
  }

  // 7 + 8 share one desk-scale dataset.
  const auto ds = desk_dataset();

  // 7. Behavioral reproduction.
  {
    const auto lightgcn = desk_run(ds, Method::LightGcn, 0, 0, 150);
    const auto sgl_wa = desk_run(ds, Method::SglWa, 0.5, 0, 60);
    const auto simgcl = desk_run(ds, Method::SimGcl, 0.5, 0.1, 60);

    const bool order_recall = simgcl.result.best_recall >= sgl_wa.result.best_recall &&
                              sgl_wa.result.best_recall >= lightgcn.result.best_recall;
    const bool order_unif = simgcl.best_uniformity < sgl_wa.best_uniformity &&
                            sgl_wa.best_uniformity < lightgcn.best_uniformity;
    const bool order_unpop = simgcl.test_contrib[0] > lightgcn.test_contrib[0];
    report(7, "desk-scale behavioral orderings (recall, uniformity, debias)",
           order_recall && order_unif && order_unpop,
           "val recall " + fmt(simgcl.result.best_recall) + "/" + fmt(sgl_wa.result.best_recall) +
               "/" + fmt(lightgcn.result.best_recall) + ", uniformity " +
               fmt(simgcl.best_uniformity) + "/" + fmt(sgl_wa.best_uniformity) + "/" +
               fmt(lightgcn.best_uniformity) + ", unpopular recall " +
               fmt(simgcl.test_contrib[0]) + " vs " + fmt(lightgcn.test_contrib[0]));
  }

  // 8. Timing ordering and the convolution ratio.
  {
    const int epochs = 3;
    const auto t_lightgcn = bench_run(ds, Method::LightGcn, epochs);
    const auto t_sgl_wa = bench_run(ds, Method::SglWa, epochs);
    const auto t_sgl_ed = bench_run(ds, Method::SglEd, epochs);
    const auto t_simgcl = bench_run(ds, Method::SimGcl, epochs);
    const double ratio = t_simgcl.convolution / t_lightgcn.convolution;
    const bool order = t_lightgcn.total < t_sgl_wa.total && t_sgl_wa.total < t_simgcl.total &&
                       t_simgcl.total < t_sgl_ed.total;
    const bool ratio_ok = ratio >= 2.2 && ratio <= 4.0;
    report(8, "per-epoch time ordering and convolution ratio", order && ratio_ok,
           "totals " + fmt(t_lightgcn.total) + " < " + fmt(t_sgl_wa.total) + " < " +
               fmt(t_simgcl.total) + " < " + fmt(t_sgl_ed.total) + "s, conv ratio " + fmt(ratio));
  }

  // 9. Determinism of artifacts.
  {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "simgcl_acceptance_det";
    fs::remove_all(dir);
    fs::create_directories(dir);

    // prepare twice
    SyntheticSpec spec;
    spec.num_users = 60;
    spec.num_items = 90;
    spec.target_interactions = 2500;
    spec.seed = 5;
    const auto raw = synthesize_interactions(spec);
    const auto small = split_dataset(raw, {}, 21);
    write_split_dir(small, (dir / "a").string(), 21, "synthetic", std::nullopt);
    write_split_dir(small, (dir / "b").string(), 21, "synthetic", std::nullopt);

    bool pass = true;
    std::string why;
    for (const char* f : {"train.txt", "valid.txt", "test.txt", "manifest.json"}) {
      if (slurp((dir / "a" / f).string()) != slurp((dir / "b" / f).string())) {
        pass = false;
        why = std::string("prepare artifact differs: ") + f;
      }
    }

    TrainConfig cfg;
    cfg.method = Method::SimGcl;
    cfg.layers = 2;
    cfg.dim = 16;
    cfg.batch_size = 256;
    cfg.max_epochs = 4;
    cfg.seed = 31;
    for (const char* tag : {"r1", "r2"}) {
      TrainOptions opts;
      opts.quiet = true;
      opts.csv_path = (dir / (std::string("epochs_") + tag + ".csv")).string();
      opts.checkpoint_path = (dir / (std::string("ckpt_") + tag + ".bin")).string();
      train(cfg, small, opts);
    }
    if (slurp((dir / "epochs_r1.csv").string()) != slurp((dir / "epochs_r2.csv").string())) {
      pass = false;
      why = "epoch CSVs differ";
    }
    if (slurp((dir / "ckpt_r1.bin").string()) != slurp((dir / "ckpt_r2.bin").string())) {
      pass = false;
      why = "checkpoints differ";
    }
    report(9, "identical runs produce identical artifacts", pass, why);
  }

  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
