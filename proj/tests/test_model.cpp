#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "simgcl/model.hpp"

using namespace simgcl;

namespace {

Matrix<double> random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Matrix<double> m(rows, cols);
  for (auto& v : m.data) v = unit(gen);
  return m;
}

SparseAdjacency<double> empty_adjacency(std::size_t n) {
  SparseAdjacency<double> adj;
  adj.num_nodes = n;
  adj.row_offsets.assign(n + 1, 0);
  return adj;
}

}  // namespace

TEST_CASE("xavier init respects the bound and is deterministic") {
  const std::size_t n = 500, d = 16;
  const auto e0 = init_embeddings<double>(n, d, 3);
  const double bound = std::sqrt(6.0 / double(n + d));
  double mx = 0, sum = 0;
  for (double v : e0.data) {
    mx = std::max(mx, std::abs(v));
    sum += v;
  }
  CHECK(mx <= bound);

  const auto e1 = init_embeddings<double>(n, d, 3);
  CHECK(e0.data == e1.data);
  const auto e2 = init_embeddings<double>(n, d, 4);
  CHECK(e0.data != e2.data);
  (void)sum;
}

TEST_CASE("xavier sample mean sits within three sigma of zero") {
  const std::size_t n = 125000, d = 8;  // one million entries
  const auto e0 = init_embeddings<double>(n, d, 11);
  const double bound = std::sqrt(6.0 / double(n + d));
  double sum = 0;
  for (double v : e0.data) sum += v;
  const double mean = sum / double(e0.data.size());
  const double sigma_mean = bound / std::sqrt(3.0 * double(e0.data.size()));
  CHECK(std::abs(mean) < 3.0 * sigma_mean);
}

TEST_CASE("empty graph keeps only the layer-0 term") {
  const auto e0 = random_matrix(6, 4, 1);
  const auto adj = empty_adjacency(6);
  for (int L : {1, 2, 3}) {
    const auto out = forward_lightgcn(adj, e0, L);
    for (std::size_t k = 0; k < e0.data.size(); ++k) {
      CHECK(out.data[k] == doctest::Approx(e0.data[k] / double(1 + L)).epsilon(1e-15));
    }
    const auto skip = forward_simgcl_clean(adj, e0, L);
    for (double v : skip.data) CHECK(v == 0.0);
  }
}

TEST_CASE("one user one item, L=1, propagates by hand") {
  const auto ds = oracle::dataset_from_edges({{0, 0}}, 1, 1);
  const auto adj = build_adjacency<double>(ds);
  Matrix<double> e0(2, 2);
  e0.at(0, 0) = 1;  // e_u = (1,0)
  e0.at(1, 1) = 1;  // e_i = (0,1)
  const auto out = forward_lightgcn(adj, e0, 1);
  CHECK(out.at(0, 0) == doctest::Approx(0.5));
  CHECK(out.at(0, 1) == doctest::Approx(0.5));
  CHECK(out.at(1, 0) == doctest::Approx(0.5));
  CHECK(out.at(1, 1) == doctest::Approx(0.5));

  const auto skip = forward_simgcl_clean(adj, e0, 1);
  CHECK(skip.at(0, 0) == doctest::Approx(0.0));
  CHECK(skip.at(0, 1) == doctest::Approx(1.0));  // exactly A e0
}

TEST_CASE("sparse forwards match the dense matrix-power oracle") {
  std::mt19937_64 gen(21);
  const auto edges = oracle::random_edges(5, 7, 17, gen);
  const auto ds = oracle::dataset_from_edges(edges, 5, 7);
  const auto adj = build_adjacency<double>(ds);
  const auto dense = oracle::dense_from_sparse(adj);
  const auto e0 = random_matrix(12, 6, 5);
  for (int L : {1, 2, 3}) {
    CHECK(oracle::max_abs_diff(forward_lightgcn(adj, e0, L),
                               oracle::dense_mean_tower(dense, e0, L, true)) < 1e-10);
    CHECK(oracle::max_abs_diff(forward_simgcl_clean(adj, e0, L),
                               oracle::dense_mean_tower(dense, e0, L, false)) < 1e-10);
  }
}

TEST_CASE("clean forwards are linear in the input embeddings") {
  std::mt19937_64 gen(22);
  const auto edges = oracle::random_edges(4, 5, 12, gen);
  const auto ds = oracle::dataset_from_edges(edges, 4, 5);
  const auto adj = build_adjacency<double>(ds);
  const auto e0 = random_matrix(9, 3, 6);
  Matrix<double> scaled = e0;
  for (auto& v : scaled.data) v *= -2.5;
  for (bool include0 : {true, false}) {
    LayerAdjacencies<double> layers{&adj};
    const auto a = forward_mean_tower(layers, e0, 2, include0);
    const auto b = forward_mean_tower(layers, scaled, 2, include0);
    for (std::size_t k = 0; k < a.data.size(); ++k) {
      CHECK(b.data[k] == doctest::Approx(-2.5 * a.data[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("noise rows satisfy the norm and sign constraints") {
  SplitMix64 rng(77);
  const std::size_t d = 8;
  std::vector<double> e(d), delta(d);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    for (auto& v : e) v = unit(gen);
    for (NoiseType type : {NoiseType::Uniform, NoiseType::Gaussian}) {
      sample_noise_row(e.data(), d, type, 0.1, rng, delta.data());
      double norm = 0;
      for (std::size_t k = 0; k < d; ++k) {
        norm += delta[k] * delta[k];
        CHECK(delta[k] * e[k] >= 0.0);  // same hyperoctant
      }
      CHECK(std::sqrt(norm) == doctest::Approx(0.1).epsilon(1e-9));
    }
    sample_noise_row(e.data(), d, NoiseType::PositiveUniform, 0.1, rng, delta.data());
    double norm = 0;
    for (std::size_t k = 0; k < d; ++k) {
      norm += delta[k] * delta[k];
      CHECK(delta[k] >= 0.0);
    }
    CHECK(std::sqrt(norm) == doctest::Approx(0.1).epsilon(1e-9));
  }
}

TEST_CASE("zero radius and zero reference components") {
  SplitMix64 rng(5);
  std::vector<double> e{-2.0, 3.0}, delta(2);
  sample_noise_row(e.data(), 2, NoiseType::Uniform, 0.0, rng, delta.data());
  CHECK(delta == std::vector<double>{0.0, 0.0});

  // sign(0) = 0: zero coordinate gets no noise, norm still epsilon.
  std::vector<double> e3{0.0, 1.0, -1.0}, d3(3);
  sample_noise_row(e3.data(), 3, NoiseType::Uniform, 0.5, rng, d3.data());
  CHECK(d3[0] == 0.0);
  CHECK(d3[1] >= 0.0);
  CHECK(d3[2] <= 0.0);
  CHECK(std::sqrt(d3[1] * d3[1] + d3[2] * d3[2]) == doctest::Approx(0.5).epsilon(1e-9));

  // all-zero reference: nothing to couple to.
  std::vector<double> z{0.0, 0.0}, dz(2);
  sample_noise_row(z.data(), 2, NoiseType::Uniform, 0.5, rng, dz.data());
  CHECK(dz == std::vector<double>{0.0, 0.0});
}

TEST_CASE("noise in the first quadrant for a positive reference") {
  SplitMix64 rng(6);
  std::vector<double> e{1.0, 1.0}, delta(2);
  for (int t = 0; t < 50; ++t) {
    sample_noise_row(e.data(), 2, NoiseType::Uniform, 0.1, rng, delta.data());
    CHECK(delta[0] >= 0.0);
    CHECK(delta[1] >= 0.0);
    CHECK(std::hypot(delta[0], delta[1]) == doctest::Approx(0.1).epsilon(1e-9));
  }
}

TEST_CASE("perturbed forward at L=1 is A E0 plus the recorded noise") {
  std::mt19937_64 gen(23);
  const auto edges = oracle::random_edges(4, 4, 9, gen);
  const auto ds = oracle::dataset_from_edges(edges, 4, 4);
  const auto adj = build_adjacency<double>(ds);
  const auto e0 = random_matrix(8, 3, 7);
  ForwardTrace<double> trace;
  NoiseSpec<double> spec{0.2, NoiseType::Uniform, 99};
  const auto out = forward_simgcl_perturbed(adj, e0, 1, spec, &trace);
  REQUIRE(trace.noise.size() == 1);
  Matrix<double> want(8, 3);
  adj.multiply(e0, want);
  for (std::size_t k = 0; k < want.data.size(); ++k) {
    CHECK(out.data[k] == doctest::Approx(want.data[k] + trace.noise[0].data[k]).epsilon(1e-12));
  }
}

TEST_CASE("zero-radius perturbed forward equals the clean forward") {
  std::mt19937_64 gen(24);
  const auto edges = oracle::random_edges(5, 5, 13, gen);
  const auto ds = oracle::dataset_from_edges(edges, 5, 5);
  const auto adj = build_adjacency<double>(ds);
  const auto e0 = random_matrix(10, 4, 8);
  NoiseSpec<double> spec{0.0, NoiseType::Uniform, 1};
  const auto perturbed = forward_simgcl_perturbed(adj, e0, 3, spec, nullptr);
  const auto clean = forward_simgcl_clean(adj, e0, 3);
  CHECK(perturbed.data == clean.data);
}

TEST_CASE("L=2 perturbed forward matches the hand expansion with recorded noise") {
  std::mt19937_64 gen(25);
  const auto edges = oracle::random_edges(3, 3, 6, gen);
  const auto ds = oracle::dataset_from_edges(edges, 3, 3);
  const auto adj = build_adjacency<double>(ds);
  const auto e0 = random_matrix(6, 2, 9);
  ForwardTrace<double> trace;
  NoiseSpec<double> spec{0.1, NoiseType::Uniform, 4242};
  const auto out = forward_simgcl_perturbed(adj, e0, 2, spec, &trace);
  REQUIRE(trace.noise.size() == 2);

  // (A e0 + D1 + A (A e0 + D1) + D2) / 2
  Matrix<double> h1(6, 2), h2(6, 2);
  adj.multiply(e0, h1);
  for (std::size_t k = 0; k < h1.data.size(); ++k) h1.data[k] += trace.noise[0].data[k];
  adj.multiply(h1, h2);
  for (std::size_t k = 0; k < h2.data.size(); ++k) h2.data[k] += trace.noise[1].data[k];
  for (std::size_t k = 0; k < out.data.size(); ++k) {
    CHECK(out.data[k] == doctest::Approx((h1.data[k] + h2.data[k]) / 2.0).epsilon(1e-12));
  }

  // Replaying the trace reproduces the output bitwise.
  const auto replay = forward_simgcl_with_noise(adj, e0, 2, trace.noise);
  CHECK(replay.data == out.data);
}

TEST_CASE("identical noise seeds give identical views, distinct seeds differ") {
  std::mt19937_64 gen(26);
  const auto edges = oracle::random_edges(5, 6, 14, gen);
  const auto ds = oracle::dataset_from_edges(edges, 5, 6);
  const auto adj = build_adjacency<double>(ds);
  const auto e0 = random_matrix(11, 4, 10);
  NoiseSpec<double> spec{0.1, NoiseType::Uniform, 31337};
  const auto a = forward_simgcl_perturbed(adj, e0, 2, spec, nullptr);
  const auto b = forward_simgcl_perturbed(adj, e0, 2, spec, nullptr);
  CHECK(a.data == b.data);
  spec.seed = 31338;
  const auto c = forward_simgcl_perturbed(adj, e0, 2, spec, nullptr);
  CHECK(a.data != c.data);
}

TEST_CASE("batched three-encoder pass is bitwise the three separate calls") {
  std::mt19937_64 gen(27);
  const auto edges = oracle::random_edges(6, 6, 16, gen);
  const auto ds = oracle::dataset_from_edges(edges, 6, 6);
  const auto adj = build_adjacency<double>(ds);
  const auto e0 = random_matrix(12, 4, 11);
  NoiseSpec<double> sa{0.1, NoiseType::Uniform, 1}, sb{0.1, NoiseType::Uniform, 2};
  for (int L : {1, 2, 3}) {
    const auto fused = simgcl_batch_forwards(adj, e0, L, sa, sb);
    CHECK(fused.clean.data == forward_simgcl_clean(adj, e0, L).data);
    ForwardTrace<double> ta, tb;
    CHECK(fused.view_a.data == forward_simgcl_perturbed(adj, e0, L, sa, &ta).data);
    CHECK(fused.view_b.data == forward_simgcl_perturbed(adj, e0, L, sb, &tb).data);
    for (int l = 0; l < L; ++l) {
      CHECK(fused.trace_a.noise[l].data == ta.noise[l].data);
      CHECK(fused.trace_b.noise[l].data == tb.noise[l].data);
    }
  }
}

TEST_CASE("backward through the empty graph is the scaled identity") {
  const auto adj = empty_adjacency(5);
  const auto g = random_matrix(5, 3, 12);
  LayerAdjacencies<double> layers{&adj};
  for (int L : {1, 2, 3}) {
    const auto back = propagate_backward(layers, L, true, g);
    for (std::size_t k = 0; k < g.data.size(); ++k) {
      CHECK(back.data[k] == doctest::Approx(g.data[k] / double(1 + L)).epsilon(1e-15));
    }
  }
}

TEST_CASE("backward matches finite differences for all tower modes") {
  std::mt19937_64 gen(28);
  const auto edges = oracle::random_edges(4, 5, 11, gen);
  const auto ds = oracle::dataset_from_edges(edges, 4, 5);
  const auto adj = build_adjacency<double>(ds);
  const auto e0 = random_matrix(9, 3, 13);
  const auto weights = random_matrix(9, 3, 14);  // loss = sum(W .* forward(E0))
  const auto views = random_walk_views<double>(ds, 0.8, 2, 5);

  struct Mode {
    LayerAdjacencies<double> layers;
    int num_layers;
    bool include0;
  };
  LayerAdjacencies<double> single{&adj};
  LayerAdjacencies<double> perlayer{&views[0], &views[1]};
  for (const Mode& mode : {Mode{single, 2, true}, Mode{single, 3, false},
                           Mode{perlayer, 2, true}}) {
    const auto analytic = propagate_backward(mode.layers, mode.num_layers, mode.include0, weights);
    const double h = 1e-6;
    for (std::size_t k = 0; k < e0.data.size(); k += 5) {
      Matrix<double> plus = e0, minus = e0;
      plus.data[k] += h;
      minus.data[k] -= h;
      const auto fp = forward_mean_tower(mode.layers, plus, mode.num_layers, mode.include0);
      const auto fm = forward_mean_tower(mode.layers, minus, mode.num_layers, mode.include0);
      double lp = 0, lm = 0;
      for (std::size_t j = 0; j < fp.data.size(); ++j) {
        lp += weights.data[j] * fp.data[j];
        lm += weights.data[j] * fm.data[j];
      }
      CHECK(analytic.data[k] == doctest::Approx((lp - lm) / (2 * h)).epsilon(1e-6));
    }
  }
}

TEST_CASE("backward is independent of the noise values") {
  std::mt19937_64 gen(29);
  const auto edges = oracle::random_edges(4, 4, 8, gen);
  const auto ds = oracle::dataset_from_edges(edges, 4, 4);
  const auto adj = build_adjacency<double>(ds);
  const auto g = random_matrix(8, 3, 15);
  LayerAdjacencies<double> layers{&adj};
  // The perturbed tower is the skip-E0 tower plus constants, so its backward
  // is the skip-E0 backward whatever the noise was.
  const auto a = propagate_backward(layers, 2, false, g);
  const auto b = propagate_backward(layers, 2, false, g);
  CHECK(a.data == b.data);
}

TEST_CASE("checkpoints round-trip bitwise") {
  std::mt19937_64 gen(30);
  Matrix<float> e0(7, 5);
  std::uniform_real_distribution<float> unit(-1.f, 1.f);
  for (auto& v : e0.data) v = unit(gen);
  const auto path = (std::filesystem::temp_directory_path() / "simgcl_test.ckpt").string();
  save_checkpoint(path, e0, 3, 4);
  const auto ck = load_checkpoint(path);
  CHECK(ck.num_users == 3);
  CHECK(ck.num_items == 4);
  CHECK(ck.e0.cols == 5);
  CHECK(ck.e0.data == e0.data);
}

TEST_CASE("loading a non-checkpoint fails") {
  const auto path = (std::filesystem::temp_directory_path() / "simgcl_notckpt").string();
  std::ofstream(path) << "not a checkpoint";
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
}
