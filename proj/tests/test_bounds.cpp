// Tests for the bound calculators and the randomized falsification of the
// Lipschitz / norm propositions (the acceptance suite reruns these at the full
// 10^4-trial scale; here the counts are sized for the regular test run).
#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "setrl/bounds.hpp"
#include "setrl/budget.hpp"
#include "setrl/networks.hpp"
#include "setrl/rng.hpp"

namespace {

using namespace setrl;

Matrix random_ball_rows(int n, int d, double p, double B_X, std::mt19937_64& g) {
  Matrix x(n, d);
  for (double& v : x.a) v = uniform(g, -1.0, 1.0);
  x = row_project_lp(x, p);
  for (double& v : x.a) v *= B_X;
  return x;
}

// ---- conjugate constant -----------------------------------------------------

TEST(ConjugateConstant, KnownValues) {
  EXPECT_DOUBLE_EQ(conjugate_constant(2.0, 2.0, 7), 1.0);
  EXPECT_DOUBLE_EQ(conjugate_constant(kInf, 1.0, 4), 4.0);
  EXPECT_NEAR(conjugate_constant(4.0, 4.0 / 3.0, 16), 4.0, 1e-12);
  EXPECT_DOUBLE_EQ(conjugate_constant(1.0, kInf, 9), 1.0);
}

TEST(ConjugateConstant, RejectsNonConjugatePairs) {
  EXPECT_THROW(conjugate_constant(2.0, 3.0, 4), std::domain_error);
  EXPECT_THROW(conjugate_constant(0.5, 2.0, 4), std::domain_error);
}

// ---- parameter pseudometric ---------------------------------------------------

TEST(ParamDistance, ZeroForIdenticalParams) {
  auto g = make_rng(201, 0);
  NormBudget bud;
  SetTransformerParams th = init_set_transformer(2, 2, 4, 2.0, 5.0, bud, g);
  EXPECT_DOUBLE_EQ(param_distance(th, th, bud), 0.0);
}

TEST(ParamDistance, ReadoutOnlyDifferenceIsQNorm) {
  auto g = make_rng(202, 0);
  NormBudget bud;
  SetTransformerParams th = init_set_transformer(2, 2, 4, 2.0, 5.0, bud, g);
  SetTransformerParams tt = th;
  for (int i = 0; i < 4; ++i) tt.w(i, 0) += 0.1 * (i + 1);
  double want = 0.0;
  for (int i = 0; i < 4; ++i) want += (0.1 * (i + 1)) * (0.1 * (i + 1));
  want = std::sqrt(want);
  EXPECT_NEAR(param_distance(th, tt, bud), want, 1e-12);
}

TEST(ParamDistance, SymmetricAndTriangle) {
  auto g = make_rng(203, 0);
  NormBudget bud;
  for (int trial = 0; trial < 50; ++trial) {
    SetTransformerParams a = init_set_transformer(2, 2, 3, 2.0, 5.0, bud, g);
    SetTransformerParams b = init_set_transformer(2, 2, 3, 2.0, 5.0, bud, g);
    SetTransformerParams c = init_set_transformer(2, 2, 3, 2.0, 5.0, bud, g);
    const double ab = param_distance(a, b, bud);
    const double ba = param_distance(b, a, bud);
    const double ac = param_distance(a, c, bud);
    const double cb = param_distance(c, b, bud);
    EXPECT_NEAR(ab, ba, 1e-12);
    EXPECT_LE(ab, ac + cb + 1e-9);
  }
}

TEST(ParamDistance, BoundsValueHeadPerturbation) {
  auto g = make_rng(204, 0);
  NormBudget bud;
  for (int trial = 0; trial < 200; ++trial) {
    SetTransformerParams a = init_set_transformer(2, 2, 4, bud.p, 50.0, bud, g);
    SetTransformerParams b = init_set_transformer(2, 2, 4, bud.p, 50.0, bud, g);
    const double delta = param_distance(a, b, bud);
    Matrix x = random_ball_rows(3, 4, bud.p, 1.0, g);
    EXPECT_LE(std::abs(value_forward(a, x) - value_forward(b, x)), delta + 1e-12);
  }
}

TEST(ParamDistance, ArchitectureMismatchThrows) {
  auto g = make_rng(205, 0);
  NormBudget bud;
  SetTransformerParams a = init_set_transformer(2, 2, 3, 2.0, 5.0, bud, g);
  SetTransformerParams b = init_set_transformer(1, 2, 3, 2.0, 5.0, bud, g);
  EXPECT_THROW(param_distance(a, b, bud), std::invalid_argument);
}

// ---- attention Lipschitz --------------------------------------------------------

TEST(AttentionLipschitz, KnownCoefficients) {
  NormBudget bud;
  EXPECT_DOUBLE_EQ(attention_input_lipschitz(bud, 0.0, 4), bud.B_V);
  NormBudget b2;
  b2.B_V = 2.0;
  b2.B_QK = 2.0;
  EXPECT_DOUBLE_EQ(attention_input_lipschitz(b2, 1.0, 5), 18.0);
}

TEST(AttentionLipschitz, InputSideNeverViolatedOnRandomSearch) {
  auto g = make_rng(206, 0);
  NormBudget bud;
  const int d = 4, n = 3;
  const double B_X = 1.0;
  const double coeff = attention_input_lipschitz(bud, B_X, d);
  for (int trial = 0; trial < 500; ++trial) {
    SetTransformerParams th = init_set_transformer(1, 1, d, bud.p, 1.0, bud, g);
    Matrix x = random_ball_rows(n, d, bud.p, B_X, g);
    Matrix xt = random_ball_rows(n, d, bud.p, B_X, g);
    Matrix ya = attention(matmul(x, th.w_qk[0]), x, matmul(x, th.w_v[0]));
    Matrix yb = attention(matmul(xt, th.w_qk[0]), xt, matmul(xt, th.w_v[0]));
    const double lhs = norm_pinf_T(sub(ya, yb), bud.p);
    const double rhs = coeff * norm_pinf_T(sub(x, xt), bud.p);
    EXPECT_LE(lhs, rhs + 1e-12);
  }
}

TEST(AttentionLipschitz, ParamSideNeverViolatedOnRandomSearch) {
  auto g = make_rng(207, 0);
  NormBudget bud;
  const int d = 4, n = 3;
  for (int trial = 0; trial < 500; ++trial) {
    SetTransformerParams a = init_set_transformer(1, 1, d, bud.p, 1.0, bud, g);
    SetTransformerParams b = init_set_transformer(1, 1, d, bud.p, 1.0, bud, g);
    Matrix x = random_ball_rows(n, d, bud.p, 1.0, g);
    Matrix ya = attention(matmul(x, a.w_qk[0]), x, matmul(x, a.w_v[0]));
    Matrix yb = attention(matmul(x, b.w_qk[0]), x, matmul(x, b.w_v[0]));
    const double lhs = norm_pinf_T(sub(ya, yb), bud.p);
    const double rhs = attention_param_lipschitz(
        bud, 1.0, d, norm_pq_T(sub(a.w_qk[0], b.w_qk[0]), bud.p, bud.q),
        norm_pq_T(sub(a.w_v[0], b.w_v[0]), bud.p, bud.q));
    EXPECT_LE(lhs, rhs + 1e-12);
  }
}

// ---- rFF Lipschitz ---------------------------------------------------------------

TEST(RffLipschitz, KnownCoefficient) {
  NormBudget bud;
  bud.B_a = 1.0;  // formula evaluator does not require the class to be non-vacuous
  bud.B_b = 1.0;
  bud.p = 1.0;
  bud.q = kInf;
  EXPECT_DOUBLE_EQ(rff_lipschitz_bounds(bud, 3, 2).input_coeff, 6.0);
  NormBudget b2;
  b2.B_a = 1.5;
  b2.B_b = 2.0;
  EXPECT_DOUBLE_EQ(rff_lipschitz_bounds(b2, 4, 1).input_coeff, 2.0 * 1.5 * 2.0);
}

TEST(RffLipschitz, InputAndParamSidesNeverViolated) {
  auto g = make_rng(208, 0);
  NormBudget bud;
  const int d = 3, m = 2, n = 3;
  const RffLipschitz rl = rff_lipschitz_bounds(bud, d, m);
  for (int trial = 0; trial < 500; ++trial) {
    SetTransformerParams a = init_set_transformer(1, m, d, bud.p, 1.0, bud, g);
    SetTransformerParams b = init_set_transformer(1, m, d, bud.p, 1.0, bud, g);
    Matrix x = random_ball_rows(n, d, bud.p, 1.0, g);
    Matrix xt = random_ball_rows(n, d, bud.p, 1.0, g);
    // Input side.
    const double lhs_in = norm_pinf_T(
        sub(rff_forward(x, a.a[0], a.b[0], m), rff_forward(xt, a.a[0], a.b[0], m)), bud.p);
    EXPECT_LE(lhs_in, rl.input_coeff * norm_pinf_T(sub(x, xt), bud.p) + 1e-12);
    // Parameter side.
    const double lhs_par = norm_pinf_T(
        sub(rff_forward(x, a.a[0], a.b[0], m), rff_forward(x, b.a[0], b.b[0], m)), bud.p);
    std::vector<double> ai(d, 0.0), bi(d, 0.0), col(d);
    for (int k = 0; k < d; ++k)
      for (int j = 0; j < m; ++j) {
        ai[k] += std::abs(a.a[0](0, k * m + j) - b.a[0](0, k * m + j));
        for (int r = 0; r < d; ++r) col[r] = a.b[0](r, k * m + j) - b.b[0](r, k * m + j);
        bi[k] += lp_norm(col.data(), d, bud.q);
      }
    const double rhs_par = rl.param_side(1.0, lp_norm(ai.data(), d, bud.p),
                                         lp_norm(bi.data(), d, bud.p));
    EXPECT_LE(lhs_par, rhs_par + 1e-12);
  }
}

// ---- output norm bound -------------------------------------------------------------

TEST(OutputNormBound, KnownValues) {
  NormBudget bud;
  EXPECT_DOUBLE_EQ(output_norm_bound(bud, 0.0, 4, 2), 0.0);
  const double want = 1.0 * (bud.B_V + 3 * std::sqrt(5.0) * bud.B_a * bud.B_b);
  EXPECT_NEAR(output_norm_bound(bud, 1.0, 5, 3), want, 1e-12);
}

TEST(OutputNormBound, RawLayerRowsNeverExceedBound) {
  auto g = make_rng(209, 0);
  NormBudget bud;
  for (int trial = 0; trial < 500; ++trial) {
    const int d = 3 + static_cast<int>(uniform_int(g, 0, 2));
    const int m = 1 + static_cast<int>(uniform_int(g, 0, 2));
    SetTransformerParams th = init_set_transformer(1, m, d, bud.p, 1.0, bud, g);
    Matrix x = random_ball_rows(3, d, bud.p, 1.0, g);
    Matrix raw = set_layer_raw(x, th.w_qk[0], th.w_v[0], th.a[0], th.b[0], m);
    const double bound = output_norm_bound(bud, 1.0, d, m);
    for (int rix = 0; rix < raw.rows; ++rix)
      EXPECT_LE(row_lp_norm(raw, rix, bud.p), bound + 1e-12);
  }
}

// ---- softmax lemma -----------------------------------------------------------------

TEST(SoftmaxL1Check, KnownPairs) {
  auto [l0, r0] = softmax_l1_check({1.0, 2.0}, {1.0, 2.0});
  EXPECT_DOUBLE_EQ(l0, 0.0);
  EXPECT_DOUBLE_EQ(r0, 0.0);
  auto [l1, r1] = softmax_l1_check({0.0, 0.0}, {1.0, 1.0});
  EXPECT_NEAR(l1, 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(r1, 2.0);
  EXPECT_THROW(softmax_l1_check({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST(SoftmaxL1Check, RandomSearchFindsNoViolation) {
  auto g = make_rng(210, 0);
  for (int trial = 0; trial < 100000; ++trial) {
    std::vector<double> x(8), y(8);
    for (int i = 0; i < 8; ++i) {
      x[i] = uniform(g, -10.0, 10.0);
      y[i] = uniform(g, -10.0, 10.0);
    }
    auto [lhs, rhs] = softmax_l1_check(x, y);
    ASSERT_LE(lhs, rhs + 1e-12);
  }
}

// ---- calculators --------------------------------------------------------------------

NormBudget all_two_budget() {
  NormBudget bud;
  bud.B_a = bud.B_b = bud.B_QK = bud.B_V = bud.B_w = 2.0;
  return bud;
}

TEST(GenBoundModelFree, HandComputedValue) {
  BoundInputs in;
  in.n = 1e4;
  in.delta = 0.1;
  in.gamma = 0.95;
  in.r_max = 0.05;
  in.v_max = in.r_max / (1.0 - in.gamma);  // = 1
  in.m = 4;
  in.L = 2;
  in.d = 6;
  in.covering_number_log = 0.0;
  const NormBudget bud = all_two_budget();
  const double want =
      32.0 * (2.0 + 0.95 + 2.0 * 5.0 * 4.0 * 36.0 * std::log(16.0 * 4 * 6 * 2 * 16.0 * 1e4) +
              2.0 * 5.0 * 2.0 * 36.0 * std::log(2.0) + std::log(20.0));
  EXPECT_NEAR(gen_bound_model_free(in, bud), want, std::abs(want) * 1e-12);
}

TEST(GenBoundModelFree, MonotoneInSampleCountAndConfidence) {
  BoundInputs in;
  const NormBudget bud = all_two_budget();
  const double base = gen_bound_model_free(in, bud);
  BoundInputs in2 = in;
  in2.n = 2.0 * in.n;
  EXPECT_GT(gen_bound_model_free(in2, bud), base);
  BoundInputs in3 = in;
  in3.delta = in.delta / 10.0;
  EXPECT_GT(gen_bound_model_free(in3, bud), base);
}

TEST(GenBoundModelBased, MonotoneInArchitectureAndAgents) {
  BoundInputs in;
  const NormBudget bud = all_two_budget();
  const double base = gen_bound_model_based(in, bud);
  for (auto mutate : {+[](BoundInputs& b) { b.N *= 10; }, +[](BoundInputs& b) { b.L += 1; },
                      +[](BoundInputs& b) { b.m += 1; }, +[](BoundInputs& b) { b.d += 1; }}) {
    BoundInputs in2 = in;
    mutate(in2);
    EXPECT_GT(gen_bound_model_based(in2, bud), base);
  }
  // Spot transcription: m L^2 d^2 log(N L m d Btilde n) + log(1/delta).
  const double want = in.m * 4.0 * 36.0 * std::log(3.0 * 2 * 4 * 6 * 16.0 * 1e4) +
                      std::log(1.0 / in.delta);
  EXPECT_NEAR(gen_bound_model_based(in, bud), want, std::abs(want) * 1e-12);
}

TEST(SuboptModelFree, ZeroApproximationLeavesOnlyRootNTerm) {
  BoundInputs in;
  const NormBudget bud = all_two_budget();
  const double full = subopt_bound_model_free(in, bud);
  BoundInputs with_eps = in;
  with_eps.eps_F = 0.01;
  with_eps.eps_FF = 0.02;
  const double approx_term = std::sqrt(in.C_F * 0.03) / (1.0 - in.gamma);
  EXPECT_NEAR(subopt_bound_model_free(with_eps, bud) - full, approx_term,
              approx_term * 1e-9);
  // 1/sqrt(n) scaling within log drift.
  BoundInputs in4 = in;
  in4.n = 4.0 * in.n;
  const double ratio = full / subopt_bound_model_free(in4, bud);
  EXPECT_GT(ratio, 1.9);
  EXPECT_LT(ratio, 2.1);
}

TEST(SuboptModelBased, RootLogGrowthInAgents) {
  BoundInputs in;
  const NormBudget bud = all_two_budget();
  const double b3 = subopt_bound_model_based(in, bud);
  BoundInputs in30 = in;
  in30.N = 30;
  const double b30 = subopt_bound_model_based(in30, bud);
  EXPECT_GT(b30 / b3, 1.0);
  // With delta-dependence small, the growth is at most the sqrt-log ratio.
  const double k = in.L * in.m * in.d * 16.0 * in.n;
  EXPECT_LT(b30 / b3, std::sqrt(std::log(30.0 * k) / std::log(3.0 * k)) * 1.01);
  BoundInputs incm = in;
  incm.C_M = 4.0;
  EXPECT_GT(subopt_bound_model_based(incm, bud), b3);
}

TEST(BoundInputs, ValidationCatchesBadFields) {
  BoundInputs in;
  in.v_max = 1.0;  // breaks v_max = r_max / (1 - gamma)
  const NormBudget bud = all_two_budget();
  EXPECT_THROW(gen_bound_model_free(in, bud), std::domain_error);
  BoundInputs in2;
  in2.delta = 1.5;
  EXPECT_THROW(gen_bound_model_free(in2, bud), std::domain_error);
  NormBudget bad = bud;
  bad.B_w = 0.5;
  BoundInputs ok;
  EXPECT_THROW(gen_bound_model_free(ok, bad), std::domain_error);
}

}  // namespace
