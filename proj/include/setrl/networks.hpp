// Function classes: set-transformer value/dynamics heads, deep sets, a
// factorized softmax policy, and a flat MLP baseline.
//
// Every architecture comes in two synchronized forms:
//   * a pure Matrix forward pass (fast, allocation-light; used by rollouts,
//     evaluation, and the randomized bound-verification harnesses), and
//   * a Tape graph builder (used by the trainers; leaves are registered once
//     and minibatch subgraphs are appended after a watermark).
// Tests pin the two forms against each other so they cannot drift.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "setrl/autodiff.hpp"
#include "setrl/budget.hpp"
#include "setrl/matrix.hpp"
#include "setrl/rng.hpp"

namespace setrl {

// ---- parameter containers ------------------------------------------------------

// Set-transformer parameters.  Layer i holds:
//   w_qk[i] : d x d      merged query-key weight
//   w_v[i]  : d x d      value weight
//   a[i]    : 1 x (d*m)  rFF output coefficients, entry (k*m)+j = a_{kj}
//   b[i]    : d x (d*m)  rFF input weights, column (k*m)+j = b_{kj}
// The readout w (d x 1) and the clipping level v_max exist on the value head
// only; the dynamics head ignores them.  p is the row-projection norm order.
struct SetTransformerParams {
  int L = 0;
  int m = 0;
  int d = 0;
  std::vector<Matrix> w_qk;
  std::vector<Matrix> w_v;
  std::vector<Matrix> a;
  std::vector<Matrix> b;
  Matrix w;
  double v_max = 1.0;
  double p = 2.0;
};

inline void validate(const SetTransformerParams& th, bool with_readout) {
  if (th.L < 1 || th.m < 1 || th.d < 1)
    throw std::invalid_argument("SetTransformerParams: L, m, d must be positive");
  auto want = [&](const std::vector<Matrix>& v, int r, int c, const char* name) {
    if (static_cast<int>(v.size()) != th.L)
      throw std::invalid_argument(std::string("SetTransformerParams: ") + name +
                                  " must have L entries");
    for (const Matrix& mat : v)
      if (mat.rows != r || mat.cols != c)
        throw std::invalid_argument(std::string("SetTransformerParams: bad shape for ") + name);
  };
  want(th.w_qk, th.d, th.d, "w_qk");
  want(th.w_v, th.d, th.d, "w_v");
  want(th.a, 1, th.d * th.m, "a");
  want(th.b, th.d, th.d * th.m, "b");
  if (with_readout) {
    if (th.w.rows != th.d || th.w.cols != 1)
      throw std::invalid_argument("SetTransformerParams: readout w must be d x 1");
    if (!(th.v_max > 0.0)) throw std::invalid_argument("SetTransformerParams: v_max must be > 0");
  }
  if (th.p < 1.0) throw std::domain_error("SetTransformerParams: p < 1");
}

// Deep sets rho(sum_i phi(x_i)).  phi maps a d-row to W2 features through a
// W1-wide ReLU layer; rho maps the pooled W2-vector to a scalar through a
// W3-wide ReLU layer.
struct DeepSetsParams {
  int d = 0;
  int W1 = 0;
  int W2 = 0;
  int W3 = 0;
  Matrix phi_a;   // d x W1, column j = a_j
  Matrix phi_b;   // 1 x W1
  Matrix phi_c;   // W1 x W2, entry (j,i) = c_{ij}
  Matrix phi_d;   // 1 x W2
  Matrix rho_e;   // W2 x W3, column k = e_k
  Matrix rho_f;   // 1 x W3
  Matrix rho_g;   // W3 x 1
  double rho_h = 0.0;
  double v_max = 0.0;  // 0 disables clipping (pure regressor); > 0 clips like a value head
};

inline void validate(const DeepSetsParams& th) {
  if (th.d < 1 || th.W1 < 1 || th.W2 < 1 || th.W3 < 1)
    throw std::invalid_argument("DeepSetsParams: d, W1, W2, W3 must be positive");
  if (th.phi_a.rows != th.d || th.phi_a.cols != th.W1 || th.phi_b.cols != th.W1 ||
      th.phi_c.rows != th.W1 || th.phi_c.cols != th.W2 || th.phi_d.cols != th.W2 ||
      th.rho_e.rows != th.W2 || th.rho_e.cols != th.W3 || th.rho_f.cols != th.W3 ||
      th.rho_g.rows != th.W3 || th.rho_g.cols != 1 || th.phi_b.rows != 1 ||
      th.phi_d.rows != 1 || th.rho_f.rows != 1)
    throw std::invalid_argument("DeepSetsParams: inconsistent shapes");
}

// Shared per-agent policy: single-hidden-layer ReLU network with softmax
// output over kActionCount discrete actions.  The joint policy is the product
// of the per-agent distributions, hence permutation invariant by construction.
inline constexpr int kActionCount = 5;

struct PolicyParams {
  int d_s = 0;
  int hidden = 64;
  Matrix w1;  // d_s x hidden
  Matrix b1;  // 1 x hidden
  Matrix w2;  // hidden x kActionCount
  Matrix b2;  // 1 x kActionCount
};

inline void validate(const PolicyParams& th) {
  if (th.d_s < 1 || th.hidden < 1)
    throw std::invalid_argument("PolicyParams: d_s, hidden must be positive");
  if (th.w1.rows != th.d_s || th.w1.cols != th.hidden || th.b1.rows != 1 ||
      th.b1.cols != th.hidden || th.w2.rows != th.hidden || th.w2.cols != kActionCount ||
      th.b2.rows != 1 || th.b2.cols != kActionCount)
    throw std::invalid_argument("PolicyParams: inconsistent shapes");
}

// Flat MLP baseline: the N x d channel matrix is flattened row-major and fed
// through one ReLU hidden layer.  Deliberately not permutation invariant.
struct MlpParams {
  int input_dim = 0;
  int hidden = 64;
  Matrix w1;  // input_dim x hidden
  Matrix b1;  // 1 x hidden
  Matrix w2;  // hidden x 1
  double b2 = 0.0;
  double v_max = 1.0;
};

inline void validate(const MlpParams& th) {
  if (th.input_dim < 1 || th.hidden < 1)
    throw std::invalid_argument("MlpParams: dims must be positive");
  if (th.w1.rows != th.input_dim || th.w1.cols != th.hidden || th.b1.rows != 1 ||
      th.b1.cols != th.hidden || th.w2.rows != th.hidden || th.w2.cols != 1)
    throw std::invalid_argument("MlpParams: inconsistent shapes");
  if (!(th.v_max > 0.0)) throw std::invalid_argument("MlpParams: v_max must be > 0");
}

// ---- pure forward passes -------------------------------------------------------

// Att(Q, K, V) = SM(Q K^T) V.  General rectangular form; the self-attention
// used by the set layers always passes square d-wide blocks.
inline Matrix attention(const Matrix& q, const Matrix& k, const Matrix& v) {
  if (q.cols != k.cols) throw std::invalid_argument("attention: q.cols != k.cols");
  if (k.rows != v.rows) throw std::invalid_argument("attention: k.rows != v.rows");
  Matrix scores;
  matmul_nt_into(scores, q, k);
  Matrix probs;
  row_softmax_into(probs, scores);
  Matrix out;
  matmul_into(out, probs, v);
  ensure_finite(out, "attention");
  return out;
}

// [rFF(X)]_{i,k} = sum_j a_{kj} ReLU(b_{kj}^T X_{i,:}).  Row-wise single
// hidden layer; a is 1 x (d*m), b is d x (d*m) with column (k*m)+j = b_{kj}.
inline Matrix rff_forward(const Matrix& x, const Matrix& a, const Matrix& b, int m) {
  const int d = x.cols;
  if (b.rows != d || b.cols != d * m || a.rows != 1 || a.cols != d * m)
    throw std::invalid_argument("rff_forward: parameter shapes inconsistent with (d, m)");
  Matrix h;
  matmul_into(h, x, b);
  for (double& v : h.a) v = v > 0.0 ? v : 0.0;
  Matrix out(x.rows, d);
  for (int i = 0; i < x.rows; ++i) {
    const double* hi = h.row(i);
    double* oi = out.row(i);
    for (int k = 0; k < d; ++k) {
      double s = 0.0;
      const double* ak = a.row(0) + k * m;
      const double* hk = hi + k * m;
      for (int j = 0; j < m; ++j) s += ak[j] * hk[j];
      oi[k] = s;
    }
  }
  return out;
}

// One set layer before projection: Att(G W_QK, G, G W_V) + rFF(G, a, b).
inline Matrix set_layer_raw(const Matrix& g, const Matrix& w_qk, const Matrix& w_v,
                            const Matrix& a, const Matrix& b, int m) {
  Matrix att = attention(matmul(g, w_qk), g, matmul(g, w_v));
  Matrix r = rff_forward(g, a, b, m);
  for (int i = 0; i < att.size(); ++i) att.a[i] += r.a[i];
  return att;
}

// Full set layer: row projection of the raw layer output into the unit l_p ball.
inline Matrix set_layer(const Matrix& g, const Matrix& w_qk, const Matrix& w_v,
                        const Matrix& a, const Matrix& b, int m, double p) {
  return row_project_lp(set_layer_raw(g, w_qk, w_v, a, b, m), p);
}

// Value head: G^(0) = P_norm(X), L projected layers, then the clipped mean
// readout P_vmax((1/N) 1^T G^(L) w).
inline double value_forward(const SetTransformerParams& th, const Matrix& x) {
  if (x.cols != th.d) throw std::invalid_argument("value_forward: x.cols != d");
  Matrix g = row_project_lp(x, th.p);
  for (int i = 0; i < th.L; ++i)
    g = set_layer(g, th.w_qk[i], th.w_v[i], th.a[i], th.b[i], th.m, th.p);
  double s = 0.0;
  for (int i = 0; i < g.rows; ++i)
    for (int k = 0; k < th.d; ++k) s += g(i, k) * th.w(k, 0);
  return clip_scalar(s / g.rows, th.v_max);
}

// Dynamics head: layers 1..L-1 are projected set layers; the final layer is
// raw (no projection); the first d_s columns are the next-state prediction.
inline Matrix dynamics_forward(const SetTransformerParams& th, const Matrix& x, int d_s) {
  if (x.cols != th.d) throw std::invalid_argument("dynamics_forward: x.cols != d");
  if (d_s < 1 || d_s > th.d) throw std::invalid_argument("dynamics_forward: bad d_s");
  Matrix g = row_project_lp(x, th.p);
  for (int i = 0; i + 1 < th.L; ++i)
    g = set_layer(g, th.w_qk[i], th.w_v[i], th.a[i], th.b[i], th.m, th.p);
  const int f = th.L - 1;
  Matrix raw = set_layer_raw(g, th.w_qk[f], th.w_v[f], th.a[f], th.b[f], th.m);
  Matrix out(raw.rows, d_s);
  for (int i = 0; i < raw.rows; ++i)
    for (int j = 0; j < d_s; ++j) out(i, j) = raw(i, j);
  return out;
}

// Per-row phi features: relu(x phi_a + phi_b) phi_c + phi_d, shape N x W2.
inline Matrix deepsets_phi(const DeepSetsParams& th, const Matrix& x) {
  Matrix h;
  matmul_into(h, x, th.phi_a);
  for (int i = 0; i < h.rows; ++i)
    for (int j = 0; j < h.cols; ++j) {
      const double v = h(i, j) + th.phi_b(0, j);
      h(i, j) = v > 0.0 ? v : 0.0;
    }
  Matrix f;
  matmul_into(f, h, th.phi_c);
  for (int i = 0; i < f.rows; ++i)
    for (int j = 0; j < f.cols; ++j) f(i, j) += th.phi_d(0, j);
  return f;
}

// rho applied to an already pooled 1 x W2 vector.
inline double deepsets_rho(const DeepSetsParams& th, const Matrix& pooled) {
  double out = th.rho_h;
  for (int k = 0; k < th.W3; ++k) {
    double z = th.rho_f(0, k);
    for (int i = 0; i < th.W2; ++i) z += pooled(0, i) * th.rho_e(i, k);
    out += th.rho_g(k, 0) * (z > 0.0 ? z : 0.0);
  }
  return out;
}

// rho_ReLU(sum_i phi_ReLU(x_i)); clipped to [-v_max, v_max] when v_max > 0.
inline double deepsets_forward(const DeepSetsParams& th, const Matrix& x) {
  if (x.cols != th.d) throw std::invalid_argument("deepsets_forward: x.cols != d");
  Matrix f = deepsets_phi(th, x);
  Matrix pooled(1, th.W2);
  pooled.fill(0.0);
  for (int i = 0; i < f.rows; ++i)
    for (int j = 0; j < th.W2; ++j) pooled(0, j) += f(i, j);
  const double out = deepsets_rho(th, pooled);
  return th.v_max > 0.0 ? clip_scalar(out, th.v_max) : out;
}

// Flattened-input MLP baseline value.
inline double mlp_forward(const MlpParams& th, const Matrix& x) {
  if (x.size() != th.input_dim)
    throw std::invalid_argument("mlp_forward: flattened size != input_dim");
  double out = th.b2;
  for (int j = 0; j < th.hidden; ++j) {
    double z = th.b1(0, j);
    for (int i = 0; i < th.input_dim; ++i) z += x.a[i] * th.w1(i, j);
    out += (z > 0.0 ? z : 0.0) * th.w2(j, 0);
  }
  return clip_scalar(out, th.v_max);
}

// Per-agent action probabilities, one row per agent state.
inline Matrix policy_probs(const PolicyParams& th, const Matrix& sbar) {
  if (sbar.cols != th.d_s) throw std::invalid_argument("policy_probs: sbar.cols != d_s");
  Matrix h;
  matmul_into(h, sbar, th.w1);
  for (int i = 0; i < h.rows; ++i)
    for (int j = 0; j < h.cols; ++j) {
      const double v = h(i, j) + th.b1(0, j);
      h(i, j) = v > 0.0 ? v : 0.0;
    }
  Matrix logits;
  matmul_into(logits, h, th.w2);
  for (int i = 0; i < logits.rows; ++i)
    for (int j = 0; j < kActionCount; ++j) logits(i, j) += th.b2(0, j);
  return row_softmax(logits);
}

struct PolicySample {
  std::vector<int> actions;
  double logprob = 0.0;
};

// Draw one action per agent; the joint log-probability is the sum of the
// per-agent log-probabilities (the joint policy factorizes).
inline PolicySample policy_sample(const PolicyParams& th, const Matrix& sbar,
                                  std::mt19937_64& g) {
  const Matrix probs = policy_probs(th, sbar);
  PolicySample out;
  out.actions.resize(probs.rows);
  for (int i = 0; i < probs.rows; ++i) {
    const int a = sample_categorical(g, probs.row(i), kActionCount);
    out.actions[i] = a;
    out.logprob += std::log(probs(i, a));
  }
  return out;
}

// ---- budget projection ---------------------------------------------------------

namespace detail {

// q-norm of one column of a matrix.
inline double col_lq_norm(const Matrix& mat, int col, double q) {
  double nrm = 0.0;
  if (std::isinf(q)) {
    for (int i = 0; i < mat.rows; ++i) nrm = std::max(nrm, std::abs(mat(i, col)));
    return nrm;
  }
  if (q == 1.0) {
    for (int i = 0; i < mat.rows; ++i) nrm += std::abs(mat(i, col));
    return nrm;
  }
  for (int i = 0; i < mat.rows; ++i) nrm += std::pow(std::abs(mat(i, col)), q);
  return std::pow(nrm, 1.0 / q);
}

// Uniformly rescale a block whose measured norm exceeds its ceiling.  Blocks
// already inside the ceiling are left untouched (bitwise), and the rescale is
// shaved by 1e-12 so the recomputed norm lands strictly inside the budget.
inline void shrink_to(Matrix& block, double nrm, double ceiling) {
  if (nrm <= ceiling) return;
  const double s = ceiling / nrm * (1.0 - 1e-12);
  for (double& v : block.a) v *= s;
}

}  // namespace detail

// Project every constrained block into the budget by uniform per-block
// scaling: ||W_QK^T||_{p,q} <= B_QK, ||W_V^T||_{p,q} <= B_V, |a_{kj}| <= B_a,
// ||b_{kj}||_q <= B_b, ||w||_q <= B_w.
inline void project_params(SetTransformerParams& th, const NormBudget& budget) {
  budget.validate();
  for (int i = 0; i < th.L; ++i) {
    detail::shrink_to(th.w_qk[i], norm_pq_T(th.w_qk[i], budget.p, budget.q), budget.B_QK);
    detail::shrink_to(th.w_v[i], norm_pq_T(th.w_v[i], budget.p, budget.q), budget.B_V);
    double amax = 0.0;
    for (double v : th.a[i].a) amax = std::max(amax, std::abs(v));
    detail::shrink_to(th.a[i], amax, budget.B_a);
    double bmax = 0.0;
    for (int c = 0; c < th.b[i].cols; ++c)
      bmax = std::max(bmax, detail::col_lq_norm(th.b[i], c, budget.q));
    detail::shrink_to(th.b[i], bmax, budget.B_b);
  }
  if (th.w.size() > 0)
    detail::shrink_to(th.w, detail::col_lq_norm(th.w, 0, budget.q), budget.B_w);
}

// True when every constrained block lies inside the budget (with slack for
// norm recomputation noise).
inline bool respects_budget(const SetTransformerParams& th, const NormBudget& budget,
                            double tol = 1e-9) {
  for (int i = 0; i < th.L; ++i) {
    if (norm_pq_T(th.w_qk[i], budget.p, budget.q) > budget.B_QK + tol) return false;
    if (norm_pq_T(th.w_v[i], budget.p, budget.q) > budget.B_V + tol) return false;
    for (double v : th.a[i].a)
      if (std::abs(v) > budget.B_a + tol) return false;
    for (int c = 0; c < th.b[i].cols; ++c)
      if (detail::col_lq_norm(th.b[i], c, budget.q) > budget.B_b + tol) return false;
  }
  if (th.w.size() > 0 && detail::col_lq_norm(th.w, 0, budget.q) > budget.B_w + tol)
    return false;
  return true;
}

// ---- initialization ------------------------------------------------------------

namespace detail {

inline Matrix uniform_matrix(int rows, int cols, double half_width, std::mt19937_64& g) {
  Matrix m(rows, cols);
  for (double& v : m.a) v = uniform(g, -half_width, half_width);
  return m;
}

}  // namespace detail

// Entrywise uniform on [-1/sqrt(d), 1/sqrt(d)], then projected into the budget.
inline SetTransformerParams init_set_transformer(int L, int m, int d, double p, double v_max,
                                                 const NormBudget& budget, std::mt19937_64& g) {
  SetTransformerParams th;
  th.L = L;
  th.m = m;
  th.d = d;
  th.p = p;
  th.v_max = v_max;
  const double hw = 1.0 / std::sqrt(static_cast<double>(d));
  for (int i = 0; i < L; ++i) {
    th.w_qk.push_back(detail::uniform_matrix(d, d, hw, g));
    th.w_v.push_back(detail::uniform_matrix(d, d, hw, g));
    th.a.push_back(detail::uniform_matrix(1, d * m, hw, g));
    th.b.push_back(detail::uniform_matrix(d, d * m, hw, g));
  }
  th.w = detail::uniform_matrix(d, 1, hw, g);
  validate(th, true);
  project_params(th, budget);
  return th;
}

inline DeepSetsParams init_deepsets(int d, int W1, int W2, int W3, double v_max,
                                    std::mt19937_64& g) {
  DeepSetsParams th;
  th.d = d;
  th.W1 = W1;
  th.W2 = W2;
  th.W3 = W3;
  th.v_max = v_max;
  th.phi_a = detail::uniform_matrix(d, W1, 1.0 / std::sqrt(static_cast<double>(d)), g);
  th.phi_b = detail::uniform_matrix(1, W1, 1.0 / std::sqrt(static_cast<double>(d)), g);
  th.phi_c = detail::uniform_matrix(W1, W2, 1.0 / std::sqrt(static_cast<double>(W1)), g);
  th.phi_d = detail::uniform_matrix(1, W2, 1.0 / std::sqrt(static_cast<double>(W1)), g);
  th.rho_e = detail::uniform_matrix(W2, W3, 1.0 / std::sqrt(static_cast<double>(W2)), g);
  th.rho_f = detail::uniform_matrix(1, W3, 1.0 / std::sqrt(static_cast<double>(W2)), g);
  th.rho_g = detail::uniform_matrix(W3, 1, 1.0 / std::sqrt(static_cast<double>(W3)), g);
  th.rho_h = 0.0;
  validate(th);
  return th;
}

inline PolicyParams init_policy(int d_s, int hidden, std::mt19937_64& g) {
  PolicyParams th;
  th.d_s = d_s;
  th.hidden = hidden;
  th.w1 = detail::uniform_matrix(d_s, hidden, 1.0 / std::sqrt(static_cast<double>(d_s)), g);
  th.b1 = detail::uniform_matrix(1, hidden, 1.0 / std::sqrt(static_cast<double>(d_s)), g);
  th.w2 = detail::uniform_matrix(hidden, kActionCount,
                                 1.0 / std::sqrt(static_cast<double>(hidden)), g);
  th.b2 = detail::uniform_matrix(1, kActionCount,
                                 1.0 / std::sqrt(static_cast<double>(hidden)), g);
  validate(th);
  return th;
}

inline MlpParams init_mlp(int input_dim, int hidden, double v_max, std::mt19937_64& g) {
  MlpParams th;
  th.input_dim = input_dim;
  th.hidden = hidden;
  th.v_max = v_max;
  th.w1 = detail::uniform_matrix(input_dim, hidden,
                                 1.0 / std::sqrt(static_cast<double>(input_dim)), g);
  th.b1 = detail::uniform_matrix(1, hidden, 1.0 / std::sqrt(static_cast<double>(input_dim)), g);
  th.w2 = detail::uniform_matrix(hidden, 1, 1.0 / std::sqrt(static_cast<double>(hidden)), g);
  th.b2 = 0.0;
  validate(th);
  return th;
}

// ---- tape graph builders -------------------------------------------------------

// Leaf ids for one set-transformer parameter set registered on a tape.
struct StLeaves {
  std::vector<NodeId> w_qk, w_v, a, b;
  NodeId w = -1;
};

inline StLeaves st_register(Tape& t, const SetTransformerParams& th, bool with_readout) {
  StLeaves lv;
  for (int i = 0; i < th.L; ++i) {
    lv.w_qk.push_back(t.leaf(th.w_qk[i]));
    lv.w_v.push_back(t.leaf(th.w_v[i]));
    lv.a.push_back(t.leaf(th.a[i]));
    lv.b.push_back(t.leaf(th.b[i]));
  }
  if (with_readout) lv.w = t.leaf(th.w);
  return lv;
}

// Copy current tape leaf values back into the parameter struct.
inline void st_read_back(const Tape& t, const StLeaves& lv, SetTransformerParams& th) {
  for (int i = 0; i < th.L; ++i) {
    th.w_qk[i] = t.value(lv.w_qk[i]);
    th.w_v[i] = t.value(lv.w_v[i]);
    th.a[i] = t.value(lv.a[i]);
    th.b[i] = t.value(lv.b[i]);
  }
  if (lv.w >= 0) th.w = t.value(lv.w);
}

inline NodeId st_layer_graph(Tape& t, const StLeaves& lv, const SetTransformerParams& th,
                             NodeId g, int layer, bool project) {
  const NodeId q = t.matmul(g, lv.w_qk[layer]);
  const NodeId probs = t.row_softmax(t.matmul_nt(q, g));
  const NodeId av = t.matmul(probs, t.matmul(g, lv.w_v[layer]));
  const NodeId r = t.rff(g, lv.a[layer], lv.b[layer], th.m);
  const NodeId s = t.add(av, r);
  return project ? t.row_project_lp(s, th.p) : s;
}

// Builds the value-head graph for one input; returns the clipped scalar node.
inline NodeId st_value_graph(Tape& t, const StLeaves& lv, const SetTransformerParams& th,
                             const Matrix& x) {
  NodeId g = t.row_project_lp(t.leaf(x, /*needs_grad=*/false), th.p);
  for (int i = 0; i < th.L; ++i) g = st_layer_graph(t, lv, th, g, i, true);
  Matrix meanvec(1, x.rows);
  meanvec.fill(1.0 / x.rows);
  const NodeId pooled = t.matmul(t.leaf(meanvec, /*needs_grad=*/false), t.matmul(g, lv.w));
  return t.clip_scalar(pooled, th.v_max);
}

// Builds the dynamics-head graph for one input; returns the N x d_s node.
inline NodeId st_dynamics_graph(Tape& t, const StLeaves& lv, const SetTransformerParams& th,
                                const Matrix& x, int d_s) {
  NodeId g = t.row_project_lp(t.leaf(x, /*needs_grad=*/false), th.p);
  for (int i = 0; i + 1 < th.L; ++i) g = st_layer_graph(t, lv, th, g, i, true);
  const NodeId raw = st_layer_graph(t, lv, th, g, th.L - 1, false);
  return t.take_cols(raw, 0, d_s);
}

struct DeepSetsLeaves {
  NodeId phi_a = -1, phi_b = -1, phi_c = -1, phi_d = -1;
  NodeId rho_e = -1, rho_f = -1, rho_g = -1, rho_h = -1;
};

inline DeepSetsLeaves ds_register(Tape& t, const DeepSetsParams& th) {
  DeepSetsLeaves lv;
  lv.phi_a = t.leaf(th.phi_a);
  lv.phi_b = t.leaf(th.phi_b);
  lv.phi_c = t.leaf(th.phi_c);
  lv.phi_d = t.leaf(th.phi_d);
  lv.rho_e = t.leaf(th.rho_e);
  lv.rho_f = t.leaf(th.rho_f);
  lv.rho_g = t.leaf(th.rho_g);
  Matrix h(1, 1);
  h(0, 0) = th.rho_h;
  lv.rho_h = t.leaf(h);
  return lv;
}

inline void ds_read_back(const Tape& t, const DeepSetsLeaves& lv, DeepSetsParams& th) {
  th.phi_a = t.value(lv.phi_a);
  th.phi_b = t.value(lv.phi_b);
  th.phi_c = t.value(lv.phi_c);
  th.phi_d = t.value(lv.phi_d);
  th.rho_e = t.value(lv.rho_e);
  th.rho_f = t.value(lv.rho_f);
  th.rho_g = t.value(lv.rho_g);
  th.rho_h = t.value(lv.rho_h)(0, 0);
}

// Deep sets scalar graph.  pool_scale multiplies the pooled phi-sum before
// rho; 1.0 reproduces deepsets_forward, 1/N is the trainer's mean-pooled
// variant (an in-class reparameterization of rho_e).
inline NodeId ds_value_graph(Tape& t, const DeepSetsLeaves& lv, const DeepSetsParams& th,
                             const Matrix& x, double pool_scale = 1.0) {
  const NodeId xi = t.leaf(x, /*needs_grad=*/false);
  const NodeId h = t.relu(t.add_rowvec(t.matmul(xi, lv.phi_a), lv.phi_b));
  const NodeId f = t.add_rowvec(t.matmul(h, lv.phi_c), lv.phi_d);
  Matrix ones(1, x.rows);
  ones.fill(pool_scale);
  const NodeId pooled = t.matmul(t.leaf(ones, /*needs_grad=*/false), f);
  const NodeId z = t.relu(t.add_rowvec(t.matmul(pooled, lv.rho_e), lv.rho_f));
  const NodeId out = t.add(t.matmul(z, lv.rho_g), lv.rho_h);
  return th.v_max > 0.0 ? t.clip_scalar(out, th.v_max) : out;
}

struct PolicyLeaves {
  NodeId w1 = -1, b1 = -1, w2 = -1, b2 = -1;
};

inline PolicyLeaves pi_register(Tape& t, const PolicyParams& th) {
  PolicyLeaves lv;
  lv.w1 = t.leaf(th.w1);
  lv.b1 = t.leaf(th.b1);
  lv.w2 = t.leaf(th.w2);
  lv.b2 = t.leaf(th.b2);
  return lv;
}

inline void pi_read_back(const Tape& t, const PolicyLeaves& lv, PolicyParams& th) {
  th.w1 = t.value(lv.w1);
  th.b1 = t.value(lv.b1);
  th.w2 = t.value(lv.w2);
  th.b2 = t.value(lv.b2);
}

// Per-agent log-probability matrix node (N x kActionCount).
inline NodeId pi_logprob_graph(Tape& t, const PolicyLeaves& lv, const Matrix& sbar) {
  const NodeId s = t.leaf(sbar, /*needs_grad=*/false);
  const NodeId h = t.relu(t.add_rowvec(t.matmul(s, lv.w1), lv.b1));
  return t.row_log_softmax(t.add_rowvec(t.matmul(h, lv.w2), lv.b2));
}

// Joint log-probability node for one (states, actions) pair.
inline NodeId pi_joint_logprob_graph(Tape& t, const PolicyLeaves& lv, const Matrix& sbar,
                                     const std::vector<int>& actions) {
  const NodeId lp = pi_logprob_graph(t, lv, sbar);
  NodeId total = t.pick(lp, 0, actions[0]);
  for (int i = 1; i < static_cast<int>(actions.size()); ++i)
    total = t.add(total, t.pick(lp, i, actions[i]));
  return total;
}

struct MlpLeaves {
  NodeId w1 = -1, b1 = -1, w2 = -1, b2 = -1;
};

inline MlpLeaves mlp_register(Tape& t, const MlpParams& th) {
  MlpLeaves lv;
  lv.w1 = t.leaf(th.w1);
  lv.b1 = t.leaf(th.b1);
  lv.w2 = t.leaf(th.w2);
  Matrix b(1, 1);
  b(0, 0) = th.b2;
  lv.b2 = t.leaf(b);
  return lv;
}

inline void mlp_read_back(const Tape& t, const MlpLeaves& lv, MlpParams& th) {
  th.w1 = t.value(lv.w1);
  th.b1 = t.value(lv.b1);
  th.w2 = t.value(lv.w2);
  th.b2 = t.value(lv.b2)(0, 0);
}

inline NodeId mlp_value_graph(Tape& t, const MlpLeaves& lv, const MlpParams& th,
                              const Matrix& x) {
  Matrix flat(1, x.size());
  for (int i = 0; i < x.size(); ++i) flat(0, i) = x.a[i];
  const NodeId xi = t.leaf(flat, /*needs_grad=*/false);
  const NodeId h = t.relu(t.add_rowvec(t.matmul(xi, lv.w1), lv.b1));
  const NodeId out = t.add(t.matmul(h, lv.w2), lv.b2);
  return t.clip_scalar(out, th.v_max);
}

}  // namespace setrl
