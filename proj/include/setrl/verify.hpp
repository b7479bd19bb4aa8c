// Randomized falsification harness for the perturbation / Lipschitz / norm /
// softmax inequalities: each check draws random instances inside the declared
// class and counts violations of its inequality.  Shared by the verify-bounds
// CLI subcommand and the acceptance suite, which runs every check at the
// 10^4-trial scale.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "setrl/bounds.hpp"
#include "setrl/budget.hpp"
#include "setrl/networks.hpp"
#include "setrl/rng.hpp"

namespace setrl {

// A violation is lhs > rhs + kVerifySlack; the slack absorbs floating-point
// noise on mathematically tight instances.
inline constexpr double kVerifySlack = 1e-12;

struct VerifyReport {
  std::string name;
  int trials = 0;
  int violations = 0;
  // Smallest rhs - lhs seen across all inequalities checked; how close the
  // random search came to falsifying the bound.
  double worst_margin = std::numeric_limits<double>::infinity();

  void record(double lhs, double rhs) {
    if (lhs > rhs + kVerifySlack) ++violations;
    worst_margin = std::min(worst_margin, rhs - lhs);
  }
};

namespace detail {

inline Matrix verify_ball_rows(int n, int d, double p, double B_X, std::mt19937_64& g) {
  Matrix x(n, d);
  for (double& v : x.a) v = uniform(g, -1.0, 1.0);
  x = row_project_lp(x, p);
  for (double& v : x.a) v *= B_X;
  return x;
}

}  // namespace detail

// Value-head output difference vs. the parameter pseudometric.
inline VerifyReport verify_value_param_perturbation(int trials, std::uint64_t seed) {
  auto g = make_rng(seed, 31);
  NormBudget bud;
  VerifyReport rep;
  rep.name = "value_param_perturbation";
  rep.trials = trials;
  for (int trial = 0; trial < trials; ++trial) {
    SetTransformerParams a = init_set_transformer(2, 2, 4, bud.p, 50.0, bud, g);
    SetTransformerParams b = init_set_transformer(2, 2, 4, bud.p, 50.0, bud, g);
    const double delta = param_distance(a, b, bud);
    Matrix x = detail::verify_ball_rows(3, 4, bud.p, 1.0, g);
    rep.record(std::abs(value_forward(a, x) - value_forward(b, x)), delta);
  }
  return rep;
}

// Attention block, input and parameter sides in every trial.
inline VerifyReport verify_attention_lipschitz(int trials, std::uint64_t seed) {
  auto g = make_rng(seed, 32);
  NormBudget bud;
  const int d = 4, n = 3;
  const double B_X = 1.0;
  const double in_coeff = attention_input_lipschitz(bud, B_X, d);
  VerifyReport rep;
  rep.name = "attention_lipschitz";
  rep.trials = trials;
  for (int trial = 0; trial < trials; ++trial) {
    SetTransformerParams a = init_set_transformer(1, 1, d, bud.p, 1.0, bud, g);
    SetTransformerParams b = init_set_transformer(1, 1, d, bud.p, 1.0, bud, g);
    Matrix x = detail::verify_ball_rows(n, d, bud.p, B_X, g);
    Matrix xt = detail::verify_ball_rows(n, d, bud.p, B_X, g);
    // Input side: one parameter set, two inputs.
    Matrix ya = attention(matmul(x, a.w_qk[0]), x, matmul(x, a.w_v[0]));
    Matrix yx = attention(matmul(xt, a.w_qk[0]), xt, matmul(xt, a.w_v[0]));
    rep.record(norm_pinf_T(sub(ya, yx), bud.p),
               in_coeff * norm_pinf_T(sub(x, xt), bud.p));
    // Parameter side: two parameter sets, one input.
    Matrix yb = attention(matmul(x, b.w_qk[0]), x, matmul(x, b.w_v[0]));
    rep.record(norm_pinf_T(sub(ya, yb), bud.p),
               attention_param_lipschitz(
                   bud, B_X, d, norm_pq_T(sub(a.w_qk[0], b.w_qk[0]), bud.p, bud.q),
                   norm_pq_T(sub(a.w_v[0], b.w_v[0]), bud.p, bud.q)));
  }
  return rep;
}

// Row-wise feedforward block, input and parameter sides in every trial.
inline VerifyReport verify_rff_lipschitz(int trials, std::uint64_t seed) {
  auto g = make_rng(seed, 33);
  NormBudget bud;
  const int d = 3, m = 2, n = 3;
  const RffLipschitz rl = rff_lipschitz_bounds(bud, d, m);
  VerifyReport rep;
  rep.name = "rff_lipschitz";
  rep.trials = trials;
  for (int trial = 0; trial < trials; ++trial) {
    SetTransformerParams a = init_set_transformer(1, m, d, bud.p, 1.0, bud, g);
    SetTransformerParams b = init_set_transformer(1, m, d, bud.p, 1.0, bud, g);
    Matrix x = detail::verify_ball_rows(n, d, bud.p, 1.0, g);
    Matrix xt = detail::verify_ball_rows(n, d, bud.p, 1.0, g);
    rep.record(norm_pinf_T(sub(rff_forward(x, a.a[0], a.b[0], m),
                                rff_forward(xt, a.a[0], a.b[0], m)),
                           bud.p),
               rl.input_coeff * norm_pinf_T(sub(x, xt), bud.p));
    std::vector<double> ai(d, 0.0), bi(d, 0.0), col(d);
    for (int k = 0; k < d; ++k)
      for (int j = 0; j < m; ++j) {
        ai[k] += std::abs(a.a[0](0, k * m + j) - b.a[0](0, k * m + j));
        for (int r = 0; r < d; ++r) col[r] = a.b[0](r, k * m + j) - b.b[0](r, k * m + j);
        bi[k] += lp_norm(col.data(), d, bud.q);
      }
    rep.record(norm_pinf_T(sub(rff_forward(x, a.a[0], a.b[0], m),
                                rff_forward(x, b.a[0], b.b[0], m)),
                           bud.p),
               rl.param_side(1.0, lp_norm(ai.data(), d, bud.p),
                             lp_norm(bi.data(), d, bud.p)));
  }
  return rep;
}

// Raw (pre-normalization) layer output rows vs. the closed-form norm ceiling.
inline VerifyReport verify_layer_output_norm(int trials, std::uint64_t seed) {
  auto g = make_rng(seed, 34);
  NormBudget bud;
  VerifyReport rep;
  rep.name = "layer_output_norm";
  rep.trials = trials;
  for (int trial = 0; trial < trials; ++trial) {
    const int d = 3 + static_cast<int>(uniform_int(g, 0, 2));
    const int m = 1 + static_cast<int>(uniform_int(g, 0, 2));
    SetTransformerParams th = init_set_transformer(1, m, d, bud.p, 1.0, bud, g);
    Matrix x = detail::verify_ball_rows(3, d, bud.p, 1.0, g);
    Matrix raw = set_layer_raw(x, th.w_qk[0], th.w_v[0], th.a[0], th.b[0], m);
    const double bound = output_norm_bound(bud, 1.0, d, m);
    for (int rix = 0; rix < raw.rows; ++rix)
      rep.record(row_lp_norm(raw, rix, bud.p), bound);
  }
  return rep;
}

// Softmax output l1 distance vs. twice the logit l_inf distance.
inline VerifyReport verify_softmax_l1(int trials, std::uint64_t seed) {
  auto g = make_rng(seed, 35);
  VerifyReport rep;
  rep.name = "softmax_l1";
  rep.trials = trials;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<double> x(8), y(8);
    for (int i = 0; i < 8; ++i) {
      x[i] = uniform(g, -10.0, 10.0);
      y[i] = uniform(g, -10.0, 10.0);
    }
    auto [lhs, rhs] = softmax_l1_check(x, y);
    rep.record(lhs, rhs);
  }
  return rep;
}

// All five checks with shared trial count; order is stable for CSV output.
inline std::vector<VerifyReport> run_bound_verification(int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("run_bound_verification: trials must be >= 1");
  return {verify_value_param_perturbation(trials, seed),
          verify_attention_lipschitz(trials, seed),
          verify_rff_lipschitz(trials, seed),
          verify_layer_output_norm(trials, seed),
          verify_softmax_l1(trials, seed)};
}

}  // namespace setrl
