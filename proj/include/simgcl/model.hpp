#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "simgcl/graph.hpp"
#include "simgcl/matrix.hpp"
#include "simgcl/rng.hpp"

namespace simgcl {

/// Xavier-uniform initialized node embeddings: i.i.d. uniform on
/// [-sqrt(6/(|N|+d)), +sqrt(6/(|N|+d))], deterministic per seed.
template <class S>
Matrix<S> init_embeddings(std::size_t num_nodes, std::size_t dim, std::uint64_t seed) {
  if (num_nodes < 1 || dim < 1) throw std::runtime_error("init_embeddings: empty shape");
  Matrix<S> e0(num_nodes, dim);
  const double bound = std::sqrt(6.0 / double(num_nodes + dim));
  SplitMix64 rng(derive_seed(seed, "xavier"));
  for (auto& v : e0.data) v = S((2.0 * rng.next_double() - 1.0) * bound);
  return e0;
}

/// One adjacency pointer per propagation layer. A single entry is reused for
/// every layer; the random-walk variant passes L distinct entries.
template <class S>
using LayerAdjacencies = std::vector<const SparseAdjacency<S>*>;

namespace detail {

template <class S>
const SparseAdjacency<S>& layer_adj(const LayerAdjacencies<S>& layers, int layer, int num_layers) {
  if (layers.empty()) throw std::runtime_error("forward: no adjacency given");
  if (layers.size() != 1 && int(layers.size()) != num_layers) {
    throw std::runtime_error("forward: need 1 or L adjacencies");
  }
  return layers.size() == 1 ? *layers[0] : *layers[layer - 1];
}

}  // namespace detail

/// Mean-of-layers propagation tower shared by every forward mode.
/// include_layer0: E = (E0 + H1 + ... + HL)/(1+L); otherwise (H1+...+HL)/L.
template <class S>
Matrix<S> forward_mean_tower(const LayerAdjacencies<S>& layers, const Matrix<S>& e0,
                             int num_layers, bool include_layer0) {
  if (num_layers < 1) throw std::runtime_error("forward: need at least one layer");
  Matrix<S> acc = include_layer0 ? e0 : Matrix<S>(e0.rows, e0.cols);
  Matrix<S> cur = e0;
  Matrix<S> next(e0.rows, e0.cols);
  for (int l = 1; l <= num_layers; ++l) {
    detail::layer_adj(layers, l, num_layers).multiply(cur, next);
    std::swap(cur, next);
    for (std::size_t k = 0; k < acc.data.size(); ++k) acc.data[k] += cur.data[k];
  }
  const S scale = S(1) / S(include_layer0 ? num_layers + 1 : num_layers);
  for (auto& v : acc.data) v *= scale;
  return acc;
}

template <class S>
Matrix<S> forward_lightgcn(const SparseAdjacency<S>& adj, const Matrix<S>& e0, int num_layers) {
  LayerAdjacencies<S> layers{&adj};
  return forward_mean_tower(layers, e0, num_layers, /*include_layer0=*/true);
}

template <class S>
Matrix<S> forward_lightgcn(const LayerAdjacencies<S>& layers, const Matrix<S>& e0,
                           int num_layers) {
  return forward_mean_tower(layers, e0, num_layers, /*include_layer0=*/true);
}

/// The skip-E0 clean forward used by the noise-augmented method for scoring:
/// E = (A E0 + ... + A^L E0)/L.
template <class S>
Matrix<S> forward_simgcl_clean(const SparseAdjacency<S>& adj, const Matrix<S>& e0,
                               int num_layers) {
  LayerAdjacencies<S> layers{&adj};
  return forward_mean_tower(layers, e0, num_layers, /*include_layer0=*/false);
}

enum class NoiseType { Uniform, PositiveUniform, Gaussian };

template <class S>
struct NoiseSpec {
  S epsilon = S(0);
  NoiseType type = NoiseType::Uniform;
  std::uint64_t seed = 0;
};

/// Fills `out` with a length-epsilon noise row for reference row `e`.
/// Uniform and gaussian draws are coupled to e's hyperoctant (zero components
/// of e get zero noise; the norm constraint holds on the surviving
/// coordinates); positive_uniform drops the coupling and stays componentwise
/// nonnegative. An all-zero raw draw is redrawn.
template <class S>
void sample_noise_row(const S* e, std::size_t dim, NoiseType type, S epsilon, SplitMix64& rng,
                      S* out) {
  if (epsilon == S(0)) {
    std::fill(out, out + dim, S(0));
    return;
  }
  const bool couple = type != NoiseType::PositiveUniform;
  if (couple) {
    bool any = false;
    for (std::size_t j = 0; j < dim; ++j) any |= (e[j] != S(0));
    if (!any) {  // sign(0)=0 everywhere: no direction to follow
      std::fill(out, out + dim, S(0));
      return;
    }
  }
  for (;;) {
    S norm_sq = 0;
    for (std::size_t j = 0; j < dim; ++j) {
      S raw = type == NoiseType::Gaussian ? std::abs(rng.next_gaussian<S>())
                                          : rng.next_unit<S>();
      if (couple && e[j] == S(0)) raw = S(0);
      out[j] = raw;
      norm_sq += raw * raw;
    }
    if (norm_sq > S(0)) {
      const S scale = epsilon / std::sqrt(norm_sq);
      for (std::size_t j = 0; j < dim; ++j) {
        out[j] *= scale;
        if (couple && e[j] < S(0)) out[j] = -out[j];
      }
      return;
    }
  }
}

/// Everything needed to replay a perturbed forward: the per-layer noise
/// tensors (the backward itself needs only the graph, noise is additive).
template <class S>
struct ForwardTrace {
  int num_layers = 0;
  std::vector<Matrix<S>> noise;      // L tensors, |N| x d
  std::vector<Matrix<S>> pre_noise;  // layer activations before noise, if kept
};

/// Perturbed propagation: H0 = E0, Hl = A H(l-1) + noise_l, output mean of
/// H1..HL. Noise rows reference the pre-noise activation of their own layer.
template <class S>
Matrix<S> forward_simgcl_perturbed(const SparseAdjacency<S>& adj, const Matrix<S>& e0,
                                   int num_layers, const NoiseSpec<S>& spec,
                                   std::type_identity_t<ForwardTrace<S>*> trace,
                                   bool keep_pre_noise = false) {
  if (num_layers < 1) throw std::runtime_error("forward: need at least one layer");
  if (trace) {
    trace->num_layers = num_layers;
    trace->noise.clear();
    trace->pre_noise.clear();
  }
  SplitMix64 rng(spec.seed);
  Matrix<S> acc(e0.rows, e0.cols);
  Matrix<S> cur = e0;
  Matrix<S> next(e0.rows, e0.cols);
  Matrix<S> delta(e0.rows, e0.cols);
  for (int l = 1; l <= num_layers; ++l) {
    adj.multiply(cur, next);
    for (std::size_t r = 0; r < next.rows; ++r) {
      sample_noise_row(next.row(r), next.cols, spec.type, spec.epsilon, rng, delta.row(r));
    }
    if (trace && keep_pre_noise) trace->pre_noise.push_back(next);
    for (std::size_t k = 0; k < next.data.size(); ++k) next.data[k] += delta.data[k];
    if (trace) trace->noise.push_back(delta);
    std::swap(cur, next);
    for (std::size_t k = 0; k < acc.data.size(); ++k) acc.data[k] += cur.data[k];
  }
  const S scale = S(1) / S(num_layers);
  for (auto& v : acc.data) v *= scale;
  return acc;
}

/// Replay path: same recursion with fixed noise tensors. Used by the
/// finite-difference harness, where noise is held constant.
template <class S>
Matrix<S> forward_simgcl_with_noise(const SparseAdjacency<S>& adj, const Matrix<S>& e0,
                                    int num_layers, const std::vector<Matrix<S>>& noise) {
  if (int(noise.size()) != num_layers) throw std::runtime_error("replay: wrong noise count");
  Matrix<S> acc(e0.rows, e0.cols);
  Matrix<S> cur = e0;
  Matrix<S> next(e0.rows, e0.cols);
  for (int l = 1; l <= num_layers; ++l) {
    adj.multiply(cur, next);
    for (std::size_t k = 0; k < next.data.size(); ++k) next.data[k] += noise[l - 1].data[k];
    std::swap(cur, next);
    for (std::size_t k = 0; k < acc.data.size(); ++k) acc.data[k] += cur.data[k];
  }
  const S scale = S(1) / S(num_layers);
  for (auto& v : acc.data) v *= scale;
  return acc;
}

/// Pulls an upstream gradient dLoss/dE back to dLoss/dE0 through any of the
/// forward modes. The towers are linear in E0, so only the graph and the
/// layer-0 flag matter: V_L = cG, V_{l} = A_{l+1} V_{l+1} + [l >= l0] cG,
/// answer V_0 (adjacencies are symmetric, so A^T = A).
template <class S>
Matrix<S> propagate_backward(const LayerAdjacencies<S>& layers, int num_layers,
                             bool include_layer0, const Matrix<S>& upstream) {
  if (num_layers < 1) throw std::runtime_error("backward: need at least one layer");
  const S scale = S(1) / S(include_layer0 ? num_layers + 1 : num_layers);
  Matrix<S> scaled = upstream;
  for (auto& v : scaled.data) v *= scale;

  Matrix<S> buf = scaled;  // V_L
  Matrix<S> tmp(upstream.rows, upstream.cols);
  for (int l = num_layers - 1; l >= 0; --l) {
    detail::layer_adj(layers, l + 1, num_layers).multiply(buf, tmp);
    std::swap(buf, tmp);
    if (l >= 1 || include_layer0) {
      for (std::size_t k = 0; k < buf.data.size(); ++k) buf.data[k] += scaled.data[k];
    }
  }
  return buf;
}

/// Three encoder passes of one noise-augmented batch step. The layer-1
/// product A E0 is shared by the clean tower and both perturbed views (their
/// pre-noise layer-1 activations are the same expression), so the result is
/// bit-identical to three separate forward calls with the same streams.
template <class S>
struct SimgclForwards {
  Matrix<S> clean;
  Matrix<S> view_a;
  Matrix<S> view_b;
  ForwardTrace<S> trace_a;
  ForwardTrace<S> trace_b;
};

template <class S>
SimgclForwards<S> simgcl_batch_forwards(const SparseAdjacency<S>& adj, const Matrix<S>& e0,
                                        int num_layers, const NoiseSpec<S>& spec_a,
                                        const NoiseSpec<S>& spec_b) {
  if (num_layers < 1) throw std::runtime_error("forward: need at least one layer");
  SimgclForwards<S> out;
  out.trace_a.num_layers = num_layers;
  out.trace_b.num_layers = num_layers;

  Matrix<S> first(e0.rows, e0.cols);
  adj.multiply(e0, first);  // shared A E0

  // Clean tower.
  {
    Matrix<S> acc = first;
    Matrix<S> cur = first;
    Matrix<S> next(e0.rows, e0.cols);
    for (int l = 2; l <= num_layers; ++l) {
      adj.multiply(cur, next);
      std::swap(cur, next);
      for (std::size_t k = 0; k < acc.data.size(); ++k) acc.data[k] += cur.data[k];
    }
    const S scale = S(1) / S(num_layers);
    for (auto& v : acc.data) v *= scale;
    out.clean = std::move(acc);
  }

  // One perturbed tower, starting from the shared product.
  auto perturbed = [&](const NoiseSpec<S>& spec, ForwardTrace<S>& trace) {
    SplitMix64 rng(spec.seed);
    Matrix<S> delta(e0.rows, e0.cols);
    Matrix<S> cur = first;
    for (std::size_t r = 0; r < cur.rows; ++r) {
      sample_noise_row(cur.row(r), cur.cols, spec.type, spec.epsilon, rng, delta.row(r));
    }
    for (std::size_t k = 0; k < cur.data.size(); ++k) cur.data[k] += delta.data[k];
    trace.noise.push_back(delta);
    Matrix<S> acc = cur;
    Matrix<S> next(e0.rows, e0.cols);
    for (int l = 2; l <= num_layers; ++l) {
      adj.multiply(cur, next);
      for (std::size_t r = 0; r < next.rows; ++r) {
        sample_noise_row(next.row(r), next.cols, spec.type, spec.epsilon, rng, delta.row(r));
      }
      for (std::size_t k = 0; k < next.data.size(); ++k) next.data[k] += delta.data[k];
      trace.noise.push_back(delta);
      std::swap(cur, next);
      for (std::size_t k = 0; k < acc.data.size(); ++k) acc.data[k] += cur.data[k];
    }
    const S scale = S(1) / S(num_layers);
    for (auto& v : acc.data) v *= scale;
    return acc;
  };
  out.view_a = perturbed(spec_a, out.trace_a);
  out.view_b = perturbed(spec_b, out.trace_b);
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints: "SGCLCKPT" magic, then version/num_users/num_items/dim as
// little-endian u64, then row-major little-endian f32 of E0.

inline constexpr char kCheckpointMagic[8] = {'S', 'G', 'C', 'L', 'C', 'K', 'P', 'T'};
inline constexpr std::uint64_t kCheckpointVersion = 1;

namespace detail {

inline void put_u64(std::ofstream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xff;
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64(std::ifstream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Matrix<float>& e0,
                            std::size_t num_users, std::size_t num_items) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, 8);
  detail::put_u64(out, kCheckpointVersion);
  detail::put_u64(out, num_users);
  detail::put_u64(out, num_items);
  detail::put_u64(out, e0.cols);
  static_assert(sizeof(float) == 4);
  for (std::size_t r = 0; r < e0.rows; ++r) {
    const float* row = e0.row(r);
    for (std::size_t j = 0; j < e0.cols; ++j) {
      std::uint32_t bits;
      std::memcpy(&bits, &row[j], 4);
      unsigned char b[4] = {static_cast<unsigned char>(bits & 0xff),
                            static_cast<unsigned char>((bits >> 8) & 0xff),
                            static_cast<unsigned char>((bits >> 16) & 0xff),
                            static_cast<unsigned char>((bits >> 24) & 0xff)};
      out.write(reinterpret_cast<const char*>(b), 4);
    }
  }
  if (!out) throw std::runtime_error("short write on checkpoint: " + path);
}

struct Checkpoint {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  Matrix<float> e0;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  const std::uint64_t version = detail::get_u64(in);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version in " + path);
  }
  Checkpoint ck;
  ck.num_users = detail::get_u64(in);
  ck.num_items = detail::get_u64(in);
  const std::uint64_t dim = detail::get_u64(in);
  ck.e0.resize(ck.num_users + ck.num_items, dim);
  for (auto& v : ck.e0.data) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t bits = std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 |
                         std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
    std::memcpy(&v, &bits, 4);
  }
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  return ck;
}

}  // namespace simgcl
