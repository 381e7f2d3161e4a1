#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "simgcl/dataset.hpp"
#include "simgcl/evalkit.hpp"
#include "simgcl/graph.hpp"
#include "simgcl/model.hpp"
#include "simgcl/objective.hpp"

namespace simgcl {

enum class Method { LightGcn, SglNd, SglEd, SglRw, SglWa, ClOnly, SimGcl };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::LightGcn: return "lightgcn";
    case Method::SglNd: return "sgl_nd";
    case Method::SglEd: return "sgl_ed";
    case Method::SglRw: return "sgl_rw";
    case Method::SglWa: return "sgl_wa";
    case Method::ClOnly: return "cl_only";
    case Method::SimGcl: return "simgcl";
  }
  return "?";
}

inline std::optional<Method> parse_method(const std::string& s) {
  for (Method m : {Method::LightGcn, Method::SglNd, Method::SglEd, Method::SglRw, Method::SglWa,
                   Method::ClOnly, Method::SimGcl}) {
    if (s == method_name(m)) return m;
  }
  return std::nullopt;
}

inline const char* noise_type_name(NoiseType t) {
  switch (t) {
    case NoiseType::Uniform: return "uniform";
    case NoiseType::PositiveUniform: return "positive_uniform";
    case NoiseType::Gaussian: return "gaussian";
  }
  return "?";
}

inline std::optional<NoiseType> parse_noise_type(const std::string& s) {
  for (NoiseType t : {NoiseType::Uniform, NoiseType::PositiveUniform, NoiseType::Gaussian}) {
    if (s == noise_type_name(t)) return t;
  }
  return std::nullopt;
}

struct TrainConfig {
  Method method = Method::LightGcn;
  NoiseType noise_type = NoiseType::Uniform;  // simgcl only
  int layers = 3;
  std::size_t dim = 64;
  std::size_t batch_size = 2048;
  double lr = 0.001;
  double reg = 1e-4;
  double tau = 0.2;
  double lambda = 0.5;
  double eps = 0.1;        // noise radius, simgcl only
  double keep_rate = 0.9;  // structure augmentations only
  int max_epochs = 200;
  int patience = 10;
  int eval_k = 20;
  std::uint64_t seed = 42;
};

struct PhaseTimes {
  double adjacency = 0;
  double convolution = 0;
  double loss = 0;
  double backward = 0;  // graph backward + optimizer update

  double sum() const { return adjacency + convolution + loss + backward; }
};

struct EpochRecord {
  int epoch = 0;
  LossBreakdown loss;  // mean per batch
  double val_recall = 0;
  double val_ndcg = 0;
  double uniformity = 0;
  PhaseTimes phases;
  double total_seconds = 0;
};

namespace detail {

class ScopedPhase {
 public:
  explicit ScopedPhase(double* acc) : acc_(acc) {
    if (acc_) t0_ = std::chrono::steady_clock::now();
  }
  ~ScopedPhase() {
    if (acc_) {
      *acc_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }
  }

 private:
  double* acc_;
  std::chrono::steady_clock::time_point t0_;
};

}  // namespace detail

/// How the loss components are weighted: joint = rec*w_rec + lambda*cl + reg.
/// Resolved per method; the gradient harness overrides it to isolate one
/// component at a time.
struct LossWeights {
  double rec = 1;
  double lambda = 0;
  double reg = 0;
};

inline LossWeights loss_weights_for(const TrainConfig& cfg) {
  switch (cfg.method) {
    case Method::LightGcn: return {1, 0, cfg.reg};
    case Method::ClOnly: return {0, cfg.lambda, 0};
    default: return {1, cfg.lambda, cfg.reg};
  }
}

/// Capture (fill) or replay (reuse) the per-view noise tensors of one batch
/// step, so a loss can be re-evaluated with noise held fixed.
template <class S>
struct NoiseReplay {
  bool capture = false;
  std::vector<Matrix<S>> view_a;
  std::vector<Matrix<S>> view_b;
};

template <class S>
struct BatchWorkspace {
  Matrix<S> d_main, d_view_a, d_view_b;  // dLoss/dRepresentation, |N| x d
  Matrix<S> ga_u, gb_u, ga_i, gb_i;      // gathered contrast rows
  Matrix<S> dga_u, dgb_u, dga_i, dgb_i;
};

/// One batch step of the joint objective for any method: runs the method's
/// forward passes, the loss kernels, and the graph backward, producing the
/// loss breakdown and dLoss/dE0. Shared verbatim between the float training
/// loop and the 64-bit finite-difference harness.
template <class S>
LossBreakdown method_batch_objective(const TrainConfig& cfg, const SparseAdjacency<S>& main_adj,
                                     const AugmentedGraphPair<S>* aug, const Matrix<S>& e0,
                                     std::size_t num_users, const TripletBatch& batch,
                                     std::uint64_t noise_seed_a, std::uint64_t noise_seed_b,
                                     NoiseReplay<S>* replay, Matrix<S>& grad_e0,
                                     BatchWorkspace<S>& ws, PhaseTimes* phases = nullptr,
                                     const LossWeights* override_weights = nullptr) {
  const LossWeights w = override_weights ? *override_weights : loss_weights_for(cfg);
  const bool structure_views = cfg.method == Method::SglNd || cfg.method == Method::SglEd ||
                               cfg.method == Method::SglRw || cfg.method == Method::ClOnly;
  if (structure_views && !aug) throw std::runtime_error("batch step: missing augmented pair");

  const std::size_t n_nodes = e0.rows;
  const std::size_t d = e0.cols;
  if (!grad_e0.same_shape(e0)) grad_e0.resize(n_nodes, d);
  grad_e0.set_zero();

  const bool want_rec = w.rec != 0;
  const bool want_cl = w.lambda != 0;
  const bool want_main =
      want_rec || (cfg.method == Method::SglWa && want_cl);

  // Forward passes.
  Matrix<S> main_reps, va_reps, vb_reps;
  ForwardTrace<S> trace_a, trace_b;
  {
    detail::ScopedPhase timer(phases ? &phases->convolution : nullptr);
    if (cfg.method == Method::SimGcl) {
      if (replay && !replay->capture) {
        if (want_main) main_reps = forward_simgcl_clean(main_adj, e0, cfg.layers);
        if (want_cl) {
          va_reps = forward_simgcl_with_noise(main_adj, e0, cfg.layers, replay->view_a);
          vb_reps = forward_simgcl_with_noise(main_adj, e0, cfg.layers, replay->view_b);
        }
      } else {
        NoiseSpec<S> spec_a{S(cfg.eps), cfg.noise_type, noise_seed_a};
        NoiseSpec<S> spec_b{S(cfg.eps), cfg.noise_type, noise_seed_b};
        SimgclForwards<S> fw = simgcl_batch_forwards(main_adj, e0, cfg.layers, spec_a, spec_b);
        main_reps = std::move(fw.clean);
        va_reps = std::move(fw.view_a);
        vb_reps = std::move(fw.view_b);
        if (replay && replay->capture) {
          replay->view_a = std::move(fw.trace_a.noise);
          replay->view_b = std::move(fw.trace_b.noise);
        }
      }
    } else {
      if (want_main) main_reps = forward_lightgcn(main_adj, e0, cfg.layers);
      if (structure_views && want_cl) {
        LayerAdjacencies<S> la, lb;
        for (const auto& a : aug->view_a) la.push_back(&a);
        for (const auto& b : aug->view_b) lb.push_back(&b);
        va_reps = forward_lightgcn(la, e0, cfg.layers);
        vb_reps = forward_lightgcn(lb, e0, cfg.layers);
      }
    }
  }

  const bool wa_style = cfg.method == Method::SglWa || cfg.method == Method::LightGcn;
  const Matrix<S>& cl_view_a = wa_style ? main_reps : va_reps;
  const Matrix<S>& cl_view_b = wa_style ? main_reps : vb_reps;

  double rec_loss = 0, cl_loss = 0, reg_loss = 0;
  {
    detail::ScopedPhase timer(phases ? &phases->loss : nullptr);
    if (want_rec || want_cl) {
      if (!ws.d_main.same_shape(e0)) ws.d_main.resize(n_nodes, d);
      ws.d_main.set_zero();
    }

    if (want_rec) {
      for (std::size_t t = 0; t < batch.size(); ++t) {
        const std::uint32_t u = batch.users[t];
        const std::uint32_t pi = std::uint32_t(num_users) + batch.pos[t];
        const std::uint32_t ni = std::uint32_t(num_users) + batch.neg[t];
        rec_loss += double(bpr_loss_row(main_reps.row(u), main_reps.row(pi), main_reps.row(ni), d,
                                        ws.d_main.row(u), ws.d_main.row(pi), ws.d_main.row(ni)));
      }
      if (w.rec != 1) {
        for (auto& v : ws.d_main.data) v *= S(w.rec);
      }
    }

    ContrastBatch cb;
    if (want_cl || w.reg != 0) cb = contrast_batch(batch);

    if (want_cl) {
      const auto gather = [&](const Matrix<S>& src, std::span<const std::uint32_t> ids,
                              std::uint32_t offset, Matrix<S>& dst) {
        dst.resize(ids.size(), d);
        for (std::size_t r = 0; r < ids.size(); ++r) {
          const S* s = src.row(offset + ids[r]);
          std::copy(s, s + d, dst.row(r));
        }
      };
      const auto scatter = [&](const Matrix<S>& g, std::span<const std::uint32_t> ids,
                               std::uint32_t offset, Matrix<S>& dst) {
        for (std::size_t r = 0; r < ids.size(); ++r) {
          axpy(S(w.lambda), g.row(r), dst.row(offset + ids[r]), d);
        }
      };

      if (wa_style) {
        gather(main_reps, cb.users, 0, ws.ga_u);
        gather(main_reps, cb.items, std::uint32_t(num_users), ws.ga_i);
        ws.dga_u.resize(cb.users.size(), d);
        ws.dga_u.set_zero();
        ws.dga_i.resize(cb.items.size(), d);
        ws.dga_i.set_zero();
        cl_loss += double(infonce_wa_loss(ws.ga_u, S(cfg.tau), &ws.dga_u, cb.users));
        cl_loss += double(infonce_wa_loss(ws.ga_i, S(cfg.tau), &ws.dga_i, cb.items));
        scatter(ws.dga_u, cb.users, 0, ws.d_main);
        scatter(ws.dga_i, cb.items, std::uint32_t(num_users), ws.d_main);
      } else {
        if (!ws.d_view_a.same_shape(e0)) ws.d_view_a.resize(n_nodes, d);
        if (!ws.d_view_b.same_shape(e0)) ws.d_view_b.resize(n_nodes, d);
        ws.d_view_a.set_zero();
        ws.d_view_b.set_zero();
        gather(cl_view_a, cb.users, 0, ws.ga_u);
        gather(cl_view_b, cb.users, 0, ws.gb_u);
        gather(cl_view_a, cb.items, std::uint32_t(num_users), ws.ga_i);
        gather(cl_view_b, cb.items, std::uint32_t(num_users), ws.gb_i);
        ws.dga_u.resize(cb.users.size(), d);
        ws.dga_u.set_zero();
        ws.dgb_u.resize(cb.users.size(), d);
        ws.dgb_u.set_zero();
        ws.dga_i.resize(cb.items.size(), d);
        ws.dga_i.set_zero();
        ws.dgb_i.resize(cb.items.size(), d);
        ws.dgb_i.set_zero();
        cl_loss += double(infonce_loss(ws.ga_u, ws.gb_u, S(cfg.tau), &ws.dga_u, &ws.dgb_u,
                                       cb.users));
        cl_loss += double(infonce_loss(ws.ga_i, ws.gb_i, S(cfg.tau), &ws.dga_i, &ws.dgb_i,
                                       cb.items));
        scatter(ws.dga_u, cb.users, 0, ws.d_view_a);
        scatter(ws.dgb_u, cb.users, 0, ws.d_view_b);
        scatter(ws.dga_i, cb.items, std::uint32_t(num_users), ws.d_view_a);
        scatter(ws.dgb_i, cb.items, std::uint32_t(num_users), ws.d_view_b);
      }
    }

    if (w.reg != 0) {
      std::vector<std::uint32_t> rows;
      rows.reserve(cb.users.size() + cb.items.size());
      rows.insert(rows.end(), cb.users.begin(), cb.users.end());
      for (std::uint32_t i : cb.items) rows.push_back(std::uint32_t(num_users) + i);
      reg_loss = double(l2_regularization(e0, rows, S(w.reg), batch.size(), &grad_e0));
    }
  }

  // Backward through the propagation towers into grad_e0 (reg already there).
  {
    detail::ScopedPhase timer(phases ? &phases->backward : nullptr);
    const bool simgcl = cfg.method == Method::SimGcl;
    LayerAdjacencies<S> main_layers{&main_adj};
    if (want_rec || (wa_style && want_cl)) {
      Matrix<S> g = propagate_backward(main_layers, cfg.layers, /*include_layer0=*/!simgcl,
                                       ws.d_main);
      for (std::size_t k = 0; k < grad_e0.data.size(); ++k) grad_e0.data[k] += g.data[k];
    }
    if (want_cl && !wa_style) {
      LayerAdjacencies<S> la, lb;
      if (simgcl) {
        la = main_layers;
        lb = main_layers;
      } else {
        for (const auto& a : aug->view_a) la.push_back(&a);
        for (const auto& b : aug->view_b) lb.push_back(&b);
      }
      Matrix<S> ga = propagate_backward(la, cfg.layers, !simgcl, ws.d_view_a);
      Matrix<S> gb = propagate_backward(lb, cfg.layers, !simgcl, ws.d_view_b);
      for (std::size_t k = 0; k < grad_e0.data.size(); ++k) {
        grad_e0.data[k] += ga.data[k] + gb.data[k];
      }
    }
  }

  LossBreakdown out;
  out.rec = rec_loss;
  out.cl = cl_loss;
  out.reg = reg_loss;
  out.joint = w.rec * rec_loss + w.lambda * cl_loss + reg_loss;
  return out;
}

struct TrainOptions {
  bool evaluate = true;          // validation metrics + early stopping
  bool track_uniformity = true;  // per-epoch uniformity on the tracking cohort
  std::uint32_t uniformity_item_threshold = 200;
  std::size_t uniformity_user_sample = 5000;
  std::string csv_path;          // per-epoch record CSV (deterministic fields)
  std::string timings_csv_path;  // per-epoch phase timings
  std::string checkpoint_path;   // best-validation checkpoint
  bool quiet = false;
};

struct TrainResult {
  Matrix<float> best_e0;
  int best_epoch = -1;
  double best_recall = 0;
  std::vector<EpochRecord> records;
};

TrainResult train(const TrainConfig& cfg, const InteractionDataset& dataset,
                  const TrainOptions& options);

}  // namespace simgcl
