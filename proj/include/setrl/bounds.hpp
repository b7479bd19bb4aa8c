// Closed-form evaluation of the Lipschitz / norm propositions and the
// generalization / suboptimality bound calculators, plus the parameter-space
// pseudometric used by the perturbation bound.
//
// All O(.)-form bounds are evaluated with leading constant 1 and are intended
// for scaling studies, not absolute certification; CLI output repeats this
// constant-1 normalization caveat.
#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "setrl/budget.hpp"
#include "setrl/matrix.hpp"
#include "setrl/networks.hpp"

namespace setrl {

// User-supplied quantities entering the generalization / suboptimality
// calculators.  Coverage logs, concentrability coefficients, and
// approximation constants are inputs, not estimated quantities.
struct BoundInputs {
  double n = 1e4;                    // sample count
  double delta = 0.1;                // confidence level
  double gamma = 0.95;               // discount
  double v_max = 20.0;               // value ceiling, = r_max / (1 - gamma)
  double r_max = 1.0;                // per-step reward ceiling
  int m = 4;                         // rFF width
  int L = 2;                         // layer count
  int d = 6;                         // channel dimension (d_S + d_A)
  int N = 3;                         // agent count
  double covering_number_log = 0.0;  // log N(Pi, 1/n, d_inf)
  double C_F = 1.0;                  // model-free concentrability
  double C_M = 1.0;                  // model-based concentrability
  double eps_F = 0.0;                // Bellman-closure approximation constants
  double eps_FF = 0.0;
  double sigma = 0.01;               // dynamics noise scale
  double c1 = 1.0;                   // model-based confidence radius constant

  void validate() const {
    if (std::abs(v_max - r_max / (1.0 - gamma)) > 1e-12)
      throw std::domain_error("BoundInputs: v_max must equal r_max / (1 - gamma)");
    if (!(n >= 1.0)) throw std::domain_error("BoundInputs: n must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("BoundInputs: delta in (0,1)");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::domain_error("BoundInputs: gamma in [0,1)");
    if (m < 1 || L < 1 || d < 1 || N < 1)
      throw std::domain_error("BoundInputs: m, L, d, N must be positive");
    if (!(sigma > 0.0)) throw std::domain_error("BoundInputs: sigma must be > 0");
    if (!(c1 > 0.0)) throw std::domain_error("BoundInputs: c1 must be > 0");
    if (!(C_F >= 1.0) || !(C_M >= 1.0))
      throw std::domain_error("BoundInputs: concentrability coefficients are >= 1");
    if (eps_F < 0.0 || eps_FF < 0.0)
      throw std::domain_error("BoundInputs: approximation constants are >= 0");
  }
};

// c_{p,q} = 1 if p <= q, else d^{1/q - 1/p}, for a conjugate pair.
inline double conjugate_constant(double p, double q, int d) {
  if (p < 1.0 || q < 1.0) throw std::domain_error("conjugate_constant: p, q must be >= 1");
  const double ip = std::isinf(p) ? 0.0 : 1.0 / p;
  const double iq = std::isinf(q) ? 0.0 : 1.0 / q;
  if (std::abs(ip + iq - 1.0) > 1e-12)
    throw std::domain_error("conjugate_constant: (p, q) not conjugate");
  if (p <= q) return 1.0;
  return std::pow(static_cast<double>(d), iq - ip);
}

namespace detail {

// d^{1/p}, with the p = infinity convention d^0 = 1.
inline double d_pow_inv_p(int d, double p) {
  return std::isinf(p) ? 1.0 : std::pow(static_cast<double>(d), 1.0 / p);
}

// [sum_k (sum_j |a_kj - a~_kj|)^p]^{1/p} over a 1 x (d m) coefficient row.
inline double a_block_distance(const Matrix& a, const Matrix& at, int d, int m, double p) {
  std::vector<double> inner(d, 0.0);
  for (int k = 0; k < d; ++k)
    for (int j = 0; j < m; ++j) inner[k] += std::abs(a(0, k * m + j) - at(0, k * m + j));
  return lp_norm(inner.data(), d, p);
}

// [sum_k (sum_j ||b_kj - b~_kj||_q)^p]^{1/p} over d x (d m) column stacks.
inline double b_block_distance(const Matrix& b, const Matrix& bt, int d, int m, double p,
                               double q) {
  std::vector<double> inner(d, 0.0);
  std::vector<double> col(b.rows);
  for (int k = 0; k < d; ++k)
    for (int j = 0; j < m; ++j) {
      for (int r = 0; r < b.rows; ++r) col[r] = b(r, k * m + j) - bt(r, k * m + j);
      inner[k] += lp_norm(col.data(), b.rows, q);
    }
  return lp_norm(inner.data(), d, p);
}

}  // namespace detail

// The layer-recursive perturbation pseudometric Delta(theta, theta~):
//   sum_i alpha_i (beta_i + iota_i + kappa_i + rho_i) + ||w - w~||_q,
// with alpha_i = B_w [B_V (1 + 4 c_{p,q} B_QK) + d^{1/p} m B_a B_b]^{L-i}.
// A valid upper bound on |g(X; theta) - g(X; theta~)| whenever both parameter
// sets respect the budget and X has rows in the unit l_p ball.
inline double param_distance(const SetTransformerParams& th, const SetTransformerParams& tt,
                             const NormBudget& bud) {
  bud.validate();
  if (th.L != tt.L || th.m != tt.m || th.d != tt.d)
    throw std::invalid_argument("param_distance: architecture mismatch");
  const double c = conjugate_constant(bud.p, bud.q, th.d);
  const double base =
      bud.B_V * (1.0 + 4.0 * c * bud.B_QK) + detail::d_pow_inv_p(th.d, bud.p) * th.m *
                                                 bud.B_a * bud.B_b;
  double total = 0.0;
  for (int i = 0; i < th.L; ++i) {
    const double alpha = bud.B_w * std::pow(base, static_cast<double>(th.L - 1 - i));
    const double beta = 2.0 * c * bud.B_V * norm_pq_T(sub(th.w_qk[i], tt.w_qk[i]), bud.p, bud.q);
    const double iota = norm_pq_T(sub(th.w_v[i], tt.w_v[i]), bud.p, bud.q);
    const double kappa =
        bud.B_b * detail::a_block_distance(th.a[i], tt.a[i], th.d, th.m, bud.p);
    const double rho =
        bud.B_a * detail::b_block_distance(th.b[i], tt.b[i], th.d, th.m, bud.p, bud.q);
    total += alpha * (beta + iota + kappa + rho);
  }
  if (th.w.size() > 0 || tt.w.size() > 0) {
    if (th.w.size() != tt.w.size())
      throw std::invalid_argument("param_distance: readout mismatch");
    Matrix dw = sub(th.w, tt.w);
    total += lp_norm(dw.a.data(), dw.size(), bud.q);
  }
  return total;
}

// Input-side attention Lipschitz coefficient: B_V (1 + 4 c_{p,q} B_X^2 B_QK).
// The channel dimension enters only through c_{p,q} (and only when p > q).
inline double attention_input_lipschitz(const NormBudget& bud, double B_X, int d) {
  if (B_X < 0.0) throw std::domain_error("attention_input_lipschitz: B_X < 0");
  const double c = conjugate_constant(bud.p, bud.q, d);
  return bud.B_V * (1.0 + 4.0 * c * B_X * B_X * bud.B_QK);
}

// Parameter-side attention perturbation bound:
//   2 c_{p,q} B_X^3 B_V ||dW_QK^T||_{p,q} + B_X ||dW_V^T||_{p,q}.
inline double attention_param_lipschitz(const NormBudget& bud, double B_X, int d,
                                        double dw_qk_norm, double dw_v_norm) {
  const double c = conjugate_constant(bud.p, bud.q, d);
  return 2.0 * c * B_X * B_X * B_X * bud.B_V * dw_qk_norm + B_X * dw_v_norm;
}

// Input coefficient and parameter-side evaluator for the rFF block.
struct RffLipschitz {
  double input_coeff = 0.0;  // d^{1/p} m B_a B_b
  double B_a = 0.0;
  double B_b = 0.0;

  // B_b B_X [sum_k (sum_j |da_kj|)^p]^{1/p} + B_a B_X [sum_k (sum_j ||db_kj||_q)^p]^{1/p}
  double param_side(double B_X, double a_diff, double b_diff) const {
    return B_b * B_X * a_diff + B_a * B_X * b_diff;
  }
};

inline RffLipschitz rff_lipschitz_bounds(const NormBudget& bud, int d, int m) {
  if (d < 1 || m < 1) throw std::domain_error("rff_lipschitz_bounds: d, m must be >= 1");
  RffLipschitz out;
  out.input_coeff = detail::d_pow_inv_p(d, bud.p) * m * bud.B_a * bud.B_b;
  out.B_a = bud.B_a;
  out.B_b = bud.B_b;
  return out;
}

// Row-norm ceiling of one raw (unprojected) set layer output:
//   B_X (B_V + d^{1/p} m B_a B_b).
inline double output_norm_bound(const NormBudget& bud, double B_X, int d, int m) {
  if (B_X < 0.0) throw std::domain_error("output_norm_bound: B_X < 0");
  return B_X * (bud.B_V + detail::d_pow_inv_p(d, bud.p) * m * bud.B_a * bud.B_b);
}

// Both sides of the softmax l1 Lipschitz lemma: ||SM(x) - SM(y)||_1 vs 2 ||x - y||_inf.
inline std::pair<double, double> softmax_l1_check(const std::vector<double>& x,
                                                  const std::vector<double>& y) {
  if (x.size() != y.size() || x.empty())
    throw std::invalid_argument("softmax_l1_check: length mismatch");
  Matrix mx(1, static_cast<int>(x.size())), my(1, static_cast<int>(y.size()));
  for (size_t i = 0; i < x.size(); ++i) {
    mx(0, static_cast<int>(i)) = x[i];
    my(0, static_cast<int>(i)) = y[i];
  }
  Matrix sx = row_softmax(mx), sy = row_softmax(my);
  double lhs = 0.0, rhs = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    lhs += std::abs(sx(0, static_cast<int>(i)) - sy(0, static_cast<int>(i)));
    rhs = std::max(rhs, std::abs(x[i] - y[i]));
  }
  return {lhs, 2.0 * rhs};
}

namespace detail {

inline double checked_log(double arg, const char* what) {
  if (!(arg > 0.0)) throw std::domain_error(std::string(what) + ": log argument <= 0");
  return std::log(arg);
}

}  // namespace detail

// Model-free generalization budget:
//   e = 32 V_max^2 [2 + gamma + 2(m+1) L^2 d^2 log(16 m d L B_V B_QK B_a B_b n / V_max)
//                   + 2(m+1) L d^2 log(B_w) + log(2 N(Pi,1/n,d_inf) / delta)].
inline double gen_bound_model_free(const BoundInputs& in, const NormBudget& bud) {
  in.validate();
  bud.validate();
  const double btilde = bud.B_V * bud.B_QK * bud.B_a * bud.B_b;
  const double log1 = detail::checked_log(
      16.0 * in.m * in.d * in.L * btilde * in.n / in.v_max, "gen_bound_model_free");
  const double log2 = detail::checked_log(bud.B_w, "gen_bound_model_free");
  const double log3 = std::log(2.0) + in.covering_number_log - std::log(in.delta);
  const double md = static_cast<double>(in.m), Ld = static_cast<double>(in.L),
               dd = static_cast<double>(in.d);
  return 32.0 * in.v_max * in.v_max *
         (2.0 + in.gamma + 2.0 * (md + 1.0) * Ld * Ld * dd * dd * log1 +
          2.0 * (md + 1.0) * Ld * dd * dd * log2 + log3);
}

// Model-based generalization budget (n times the mean squared-TV bound):
//   e' = m L^2 d^2 log(N L m d B_V B_QK B_a B_b n) + log(1/delta).
inline double gen_bound_model_based(const BoundInputs& in, const NormBudget& bud) {
  in.validate();
  bud.validate();
  const double btilde = bud.B_V * bud.B_QK * bud.B_a * bud.B_b;
  const double lg = detail::checked_log(
      static_cast<double>(in.N) * in.L * in.m * in.d * btilde * in.n,
      "gen_bound_model_based");
  const double md = static_cast<double>(in.m), Ld = static_cast<double>(in.L),
               dd = static_cast<double>(in.d);
  return md * Ld * Ld * dd * dd * lg - std::log(in.delta);
}

// Model-free suboptimality calculator (leading constant 1):
//   sqrt(C_F (eps_F + eps_FF)) / (1-gamma)
//     + V_max sqrt(C_F) / ((1-gamma) sqrt(n))
//       * sqrt(m L^2 d^2 log(m d L Bbar n / V_max) + log(2 N(Pi,1/n,d_inf)/delta)),
// with Bbar = B_V B_QK B_a B_b B_w.
inline double subopt_bound_model_free(const BoundInputs& in, const NormBudget& bud) {
  in.validate();
  bud.validate();
  const double bbar = bud.B_V * bud.B_QK * bud.B_a * bud.B_b * bud.B_w;
  const double lg = detail::checked_log(in.m * in.d * in.L * bbar * in.n / in.v_max,
                                        "subopt_bound_model_free");
  const double md = static_cast<double>(in.m), Ld = static_cast<double>(in.L),
               dd = static_cast<double>(in.d);
  const double inner = md * Ld * Ld * dd * dd * lg + std::log(2.0) +
                       in.covering_number_log - std::log(in.delta);
  if (inner < 0.0) throw std::domain_error("subopt_bound_model_free: negative radicand");
  const double term1 = std::sqrt(in.C_F * (in.eps_F + in.eps_FF)) / (1.0 - in.gamma);
  const double term2 =
      in.v_max * std::sqrt(in.C_F) / ((1.0 - in.gamma) * std::sqrt(in.n)) * std::sqrt(inner);
  return term1 + term2;
}

// Model-based suboptimality calculator (leading constant 1):
//   V_max / (1-gamma)^2 * sqrt(C_M ((1/n) m L^2 d^2 log(N L m d Btilde n) + (1/n) log(1/delta))).
inline double subopt_bound_model_based(const BoundInputs& in, const NormBudget& bud) {
  const double eprime = gen_bound_model_based(in, bud);
  return in.v_max / ((1.0 - in.gamma) * (1.0 - in.gamma)) * std::sqrt(in.C_M * eprime / in.n);
}

}  // namespace setrl
