#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <type_traits>
#include <stdexcept>
#include <string>
#include <vector>

#include "simgcl/matrix.hpp"

namespace simgcl {

/// B sampled triples (user, positive item, negative item), item values are
/// item indices (not node ids).
struct TripletBatch {
  std::vector<std::uint32_t> users;
  std::vector<std::uint32_t> pos;
  std::vector<std::uint32_t> neg;

  std::size_t size() const { return users.size(); }
};

/// The in-batch node sets for the contrastive loss: distinct users and
/// distinct items appearing in a TripletBatch, each sorted ascending.
struct ContrastBatch {
  std::vector<std::uint32_t> users;
  std::vector<std::uint32_t> items;
};

inline ContrastBatch contrast_batch(const TripletBatch& batch) {
  ContrastBatch c;
  c.users = batch.users;
  std::sort(c.users.begin(), c.users.end());
  c.users.erase(std::unique(c.users.begin(), c.users.end()), c.users.end());
  c.items.reserve(batch.pos.size() + batch.neg.size());
  c.items.insert(c.items.end(), batch.pos.begin(), batch.pos.end());
  c.items.insert(c.items.end(), batch.neg.begin(), batch.neg.end());
  std::sort(c.items.begin(), c.items.end());
  c.items.erase(std::unique(c.items.begin(), c.items.end()), c.items.end());
  return c;
}

namespace detail {

template <class S>
S softplus(S x) {  // log(1 + e^x), safe for large |x|
  return x > S(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace detail

/// One BPR triple: loss = -log sigmoid(e_u.(e_i - e_j)). Gradients are
/// accumulated into the caller's rows (the learning rate stays with the
/// optimizer).
template <class S>
S bpr_loss_row(const S* e_u, const S* e_i, const S* e_j, std::size_t d, S* g_u, S* g_i,
               S* g_j) {
  S x = 0;
  for (std::size_t k = 0; k < d; ++k) x += e_u[k] * (e_i[k] - e_j[k]);
  const S loss = detail::softplus(-x);
  if (g_u || g_i || g_j) {
    // s = sigmoid(x); d/dx -log(s) = -(1-s)
    const S one_minus_s = x > S(0) ? S(std::exp(-double(x)) / (1.0 + std::exp(-double(x))))
                                   : S(1.0 / (1.0 + std::exp(double(x))));
    for (std::size_t k = 0; k < d; ++k) {
      if (g_u) g_u[k] += -one_minus_s * (e_i[k] - e_j[k]);
      if (g_i) g_i[k] += -one_minus_s * e_u[k];
      if (g_j) g_j[k] += one_minus_s * e_u[k];
    }
  }
  return loss;
}

namespace detail {

/// Rows normalized to the unit sphere, keeping the norms for the chain rule.
template <class S>
void normalize_rows(const Matrix<S>& v, Matrix<S>& z, std::vector<S>& norms,
                    std::span<const std::uint32_t> ids, const char* what) {
  z.resize(v.rows, v.cols);
  norms.resize(v.rows);
  for (std::size_t r = 0; r < v.rows; ++r) {
    const S n2 = squared_norm(v.row(r), v.cols);
    if (n2 <= S(0)) {
      const std::string which = r < ids.size() ? std::to_string(ids[r]) : std::to_string(r);
      throw std::runtime_error(std::string(what) + ": zero-norm row for node " + which);
    }
    const S n = std::sqrt(n2);
    norms[r] = n;
    const S inv = S(1) / n;
    const S* src = v.row(r);
    S* dst = z.row(r);
    for (std::size_t k = 0; k < v.cols; ++k) dst[k] = src[k] * inv;
  }
}

/// dV = (dZ - Z (Z.dZ)) / norm, applied row-wise; accumulates into grad.
template <class S>
void chain_through_normalization(const Matrix<S>& z, const std::vector<S>& norms,
                                 const Matrix<S>& dz, Matrix<S>& grad) {
  for (std::size_t r = 0; r < z.rows; ++r) {
    const S* zr = z.row(r);
    const S* gr = dz.row(r);
    S* out = grad.row(r);
    const S proj = dot(zr, gr, z.cols);
    const S inv = S(1) / norms[r];
    for (std::size_t k = 0; k < z.cols; ++k) out[k] += (gr[k] - zr[k] * proj) * inv;
  }
}

}  // namespace detail

/// InfoNCE over two views of the same node set (rows aligned). Every anchor
/// contrasts its own pair against all in-batch rows of the other view,
/// including its own index. Returns the summed loss; gradients w.r.t. the
/// pre-normalization rows are accumulated into grad_a / grad_b when given.
template <class S>
S infonce_loss(const Matrix<S>& view_a, const Matrix<S>& view_b, S tau,
               std::type_identity_t<Matrix<S>*> grad_a, std::type_identity_t<Matrix<S>*> grad_b,
               std::span<const std::uint32_t> ids = {}) {
  if (!view_a.same_shape(view_b)) throw std::runtime_error("infonce: view shape mismatch");
  if (tau <= S(0)) throw std::runtime_error("infonce: temperature must be positive");
  const std::size_t m = view_a.rows, d = view_a.cols;
  if (m == 0) return S(0);

  Matrix<S> za, zb;
  std::vector<S> na, nb;
  detail::normalize_rows(view_a, za, na, ids, "infonce");
  detail::normalize_rows(view_b, zb, nb, ids, "infonce");

  Matrix<S> dza, dzb;
  const bool want_grad = grad_a || grad_b;
  if (want_grad) {
    dza.resize(m, d);
    dzb.resize(m, d);
  }

  std::vector<S> s(m), p(m);
  const S inv_tau = S(1) / tau;
  S loss = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const S* zi = za.row(i);
    S mx = -std::numeric_limits<S>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      s[j] = dot(zi, zb.row(j), d) * inv_tau;
      mx = std::max(mx, s[j]);
    }
    S sum = 0;
    for (std::size_t j = 0; j < m; ++j) {
      p[j] = std::exp(s[j] - mx);
      sum += p[j];
    }
    loss += -s[i] + mx + std::log(sum);
    if (!want_grad) continue;
    const S inv_sum = S(1) / sum;
    S* dzi = dza.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      const S pj = p[j] * inv_sum;
      const S wa = (pj - (i == j ? S(1) : S(0))) * inv_tau;
      axpy(wa, zb.row(j), dzi, d);        // d/dz'_i
      axpy(wa, zi, dzb.row(j), d);        // d/dz''_j
    }
  }
  if (grad_a) detail::chain_through_normalization(za, na, dza, *grad_a);
  if (grad_b) detail::chain_through_normalization(zb, nb, dzb, *grad_b);
  return loss;
}

/// Augmentation-free InfoNCE: both views are the same representation, so the
/// positive term is the constant exp(1/tau) and the loss reduces to in-batch
/// repulsion. Computed as sum_i log1p(sum_{j!=i} exp((z_i.z_j - 1)/tau)),
/// which equals both the softmax form and its constant-shifted rewriting and
/// is nonnegative by construction.
template <class S>
S infonce_wa_loss(const Matrix<S>& view, S tau, std::type_identity_t<Matrix<S>*> grad,
                  std::span<const std::uint32_t> ids = {}) {
  if (tau <= S(0)) throw std::runtime_error("infonce: temperature must be positive");
  const std::size_t m = view.rows, d = view.cols;
  if (m == 0) return S(0);

  Matrix<S> z;
  std::vector<S> norms;
  detail::normalize_rows(view, z, norms, ids, "infonce_wa");

  Matrix<S> dz;
  if (grad) dz.resize(m, d);

  std::vector<S> t(m);
  const S inv_tau = S(1) / tau;
  S loss = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const S* zi = z.row(i);
    S sum = 0;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) {
        t[j] = 0;
        continue;
      }
      // z_i.z_j <= 1 on the sphere, so the exponent never overflows.
      t[j] = std::exp((dot(zi, z.row(j), d) - S(1)) * inv_tau);
      sum += t[j];
    }
    loss += std::log1p(sum);
    if (!grad) continue;
    const S denom = S(1) + sum;
    S* dzi = dz.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      const S q = t[j] / denom * inv_tau;
      axpy(q, z.row(j), dzi, d);
      axpy(q, zi, dz.row(j), d);  // S_ij depends on both endpoints
    }
  }
  if (grad) detail::chain_through_normalization(z, norms, dz, *grad);
  return loss;
}

/// weight * sum ||row||^2 / (2 * batch_size) over the given layer-0 rows.
/// Gradient per row is weight * row / batch_size, accumulated into grad_e0.
template <class S>
S l2_regularization(const Matrix<S>& e0, std::span<const std::uint32_t> node_rows, S weight,
                    std::size_t batch_size, std::type_identity_t<Matrix<S>*> grad_e0) {
  if (weight < S(0)) throw std::runtime_error("l2_regularization: negative weight");
  if (node_rows.empty() || weight == S(0) || batch_size == 0) return S(0);
  const S inv_b = S(1) / S(batch_size);
  S acc = 0;
  for (std::uint32_t r : node_rows) {
    acc += squared_norm(e0.row(r), e0.cols);
    if (grad_e0) axpy(weight * inv_b, e0.row(r), grad_e0->row(r), e0.cols);
  }
  return weight * acc * inv_b / S(2);
}

struct LossBreakdown {
  double rec = 0;
  double cl = 0;
  double reg = 0;
  double joint = 0;
};

inline LossBreakdown joint_loss(double rec, double cl, double lambda, double reg) {
  if (lambda < 0) throw std::runtime_error("joint_loss: lambda must be nonnegative");
  return {rec, cl, reg, rec + lambda * cl + reg};
}

/// Adam with a single global step counter; moments exist for every row but
/// only rows with a nonzero gradient this step are touched.
template <class S>
struct AdamState {
  Matrix<S> m;
  Matrix<S> v;
  std::uint64_t step = 0;
  S lr = S(0.001);
  S beta1 = S(0.9);
  S beta2 = S(0.999);
  S eps = S(1e-8);

  AdamState() = default;
  AdamState(std::size_t rows, std::size_t cols, S learning_rate)
      : m(rows, cols), v(rows, cols), lr(learning_rate) {}
};

template <class S>
void adam_step(AdamState<S>& state, Matrix<S>& params, const Matrix<S>& grad) {
  if (!params.same_shape(grad) || !state.m.same_shape(params)) {
    throw std::runtime_error("adam_step: shape mismatch");
  }
  ++state.step;
  const S bc1 = S(1) - S(std::pow(double(state.beta1), double(state.step)));
  const S bc2 = S(1) - S(std::pow(double(state.beta2), double(state.step)));
  const std::size_t d = params.cols;
  for (std::size_t r = 0; r < params.rows; ++r) {
    const S* g = grad.row(r);
    bool touched = false;
    for (std::size_t k = 0; k < d; ++k) {
      if (g[k] != S(0)) {
        touched = true;
        if (!std::isfinite(double(g[k]))) {
          throw std::runtime_error("adam_step: non-finite gradient at row " + std::to_string(r));
        }
      }
    }
    if (!touched) continue;
    S* mr = state.m.row(r);
    S* vr = state.v.row(r);
    S* pr = params.row(r);
    for (std::size_t k = 0; k < d; ++k) {
      mr[k] = state.beta1 * mr[k] + (S(1) - state.beta1) * g[k];
      vr[k] = state.beta2 * vr[k] + (S(1) - state.beta2) * g[k] * g[k];
      const S mhat = mr[k] / bc1;
      const S vhat = vr[k] / bc2;
      pr[k] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace simgcl
