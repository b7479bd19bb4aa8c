// Pessimistic model-free training: evaluation rollouts, policy invariance,
// smoke and reproducibility contracts for the alternating loop, the
// large-lambda tabular limit against the exact Q^pi, and the pessimism
// report's consistency with the bound calculators.
#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "setrl/model_free.hpp"
#include "setrl/tabular.hpp"

namespace {

using namespace setrl;

Matrix state_mat(int sid) {
  Matrix s(1, 1);
  s(0, 0) = static_cast<double>(sid);
  return s;
}

TEST(ModelFreeConfigCheck, RejectsBadFields) {
  ModelFreeConfig cfg;
  cfg.lambda = -0.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = ModelFreeConfig{};
  cfg.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = ModelFreeConfig{};
  cfg.gamma = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = ModelFreeConfig{};
  cfg.bank_per_step = 100;
  cfg.bank_size = 8;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = ModelFreeConfig{};
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Evaluate, DeterministicAndStrictlyNegativeForRandomPolicy) {
  EnvConfig env;
  const EvalResult a = evaluate(UniformActor{3}, env, 40, 25, 7);
  const EvalResult b = evaluate(UniformActor{3}, env, 40, 25, 7);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.stddev, b.stddev);
  EXPECT_EQ(a.episode_rewards, b.episode_rewards);
  EXPECT_LT(a.mean, 0.0);
  EXPECT_EQ(a.episode_rewards.size(), 40u);
}

TEST(Evaluate, HeuristicBeatsUniformHeadToHead) {
  EnvConfig env;
  const EvalResult uni = evaluate(UniformActor{3}, env, 100, 25, 11);
  const EvalResult heu = evaluate(HeuristicActor{0.0}, env, 100, 25, 11);
  EXPECT_GT(heu.mean, uni.mean);
}

TEST(Evaluate, NetworkActorDeterministicBySeed) {
  EnvConfig env;
  auto g = make_rng(3, 0);
  const PolicyParams pp = init_policy(env.d_s(), 16, g);
  const EvalResult a = evaluate(NetworkActor{pp}, env, 10, 25, 13);
  const EvalResult b = evaluate(NetworkActor{pp}, env, 10, 25, 13);
  EXPECT_EQ(a.episode_rewards, b.episode_rewards);
}

TEST(Evaluate, RejectsBadArguments) {
  EnvConfig env;
  EXPECT_THROW(evaluate(UniformActor{3}, env, 0, 25, 1), std::invalid_argument);
  EXPECT_THROW(evaluate(UniformActor{3}, env, 1, 0, 1), std::invalid_argument);
}

TEST(PolicyClass, JointProbabilityPermutationInvariant) {
  // pi(A|S) == pi(psi A | psi S): the shared per-agent head guarantees it.
  EnvConfig env;
  auto g = make_rng(5, 0);
  const PolicyParams pp = init_policy(env.d_s(), 32, g);
  const std::vector<int> perm = {2, 0, 1};
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix obs = observe(reset(env, 900 + trial));
    JointAction act(3);
    for (int& a : act) a = static_cast<int>(uniform_int(g, 0, kActionCount - 1));
    Matrix pobs(3, obs.cols);
    JointAction pact(3);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < obs.cols; ++j) pobs(i, j) = obs(perm[i], j);
      pact[i] = act[perm[i]];
    }
    const Matrix probs = policy_probs(pp, obs);
    const Matrix pprobs = policy_probs(pp, pobs);
    double joint = 1.0, pjoint = 1.0;
    for (int i = 0; i < 3; ++i) {
      joint *= probs(i, act[i]);
      pjoint *= pprobs(i, pact[i]);
    }
    EXPECT_NEAR(pjoint, joint, 1e-10);
  }
}

ModelFreeConfig small_config(int n_agents, int n_landmarks) {
  ModelFreeConfig cfg;
  cfg.env.n_agents = n_agents;
  cfg.env.n_landmarks = n_landmarks;
  cfg.outer_iters = 2;
  cfg.f_steps = 2;
  cfg.pi_steps = 1;
  cfg.batch_size = 8;
  cfg.bank_size = 4;
  cfg.bank_per_step = 2;
  cfg.k_samples = 2;
  cfg.inner_steps = 2;
  cfg.st_layers = 1;
  cfg.st_m = 2;
  cfg.ds_width = 8;
  cfg.mlp_hidden = 8;
  cfg.policy_hidden = 8;
  cfg.reward_scale = 10.0;
  cfg.seed = 21;
  return cfg;
}

TEST(TrainModelFree, SingleTransitionSmokeAllArchitectures) {
  // Degenerate one-transition dataset: training runs and logs finite values.
  const EnvConfig env;
  Dataset ds = collect(env, BehaviorPolicy::kUniform, 1, 31, Subsample::kAll);
  ds.transitions.resize(1);
  const ModelFreeConfig cfg = small_config(3, 3);
  for (Arch arch : {Arch::kSetTransformer, Arch::kDeepSets, Arch::kMlp}) {
    const ModelFreeResult out = train_model_free(ds, cfg, arch);
    ASSERT_EQ(out.log.size(), 2u);
    for (const IterLog& entry : out.log) {
      EXPECT_TRUE(std::isfinite(entry.value_estimate));
      EXPECT_TRUE(std::isfinite(entry.bellman_loss));
      EXPECT_GE(entry.bellman_loss, 0.0);
      EXPECT_GE(entry.penalty, 0.0);
      EXPECT_TRUE(entry.budget_ok);
    }
  }
}

TEST(TrainModelFree, BitReproducibleGivenSeed) {
  const EnvConfig env;
  const Dataset ds = collect(env, BehaviorPolicy::kUniform, 2, 41, Subsample::kAll);
  const ModelFreeConfig cfg = small_config(3, 3);
  const ModelFreeResult a = train_model_free(ds, cfg, Arch::kSetTransformer);
  const ModelFreeResult b = train_model_free(ds, cfg, Arch::kSetTransformer);
  for (int i = 0; i < a.st.L; ++i) {
    EXPECT_EQ(max_abs_diff(a.st.w_qk[i], b.st.w_qk[i]), 0.0);
    EXPECT_EQ(max_abs_diff(a.st.w_v[i], b.st.w_v[i]), 0.0);
    EXPECT_EQ(max_abs_diff(a.st.a[i], b.st.a[i]), 0.0);
    EXPECT_EQ(max_abs_diff(a.st.b[i], b.st.b[i]), 0.0);
  }
  EXPECT_EQ(max_abs_diff(a.st.w, b.st.w), 0.0);
  EXPECT_EQ(max_abs_diff(a.policy.w1, b.policy.w1), 0.0);
  EXPECT_EQ(max_abs_diff(a.policy.w2, b.policy.w2), 0.0);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].value_estimate, b.log[i].value_estimate);
    EXPECT_EQ(a.log[i].bellman_loss, b.log[i].bellman_loss);
    EXPECT_EQ(a.log[i].penalty, b.log[i].penalty);
  }
}

TEST(TrainModelFree, EveryLoggedIterationRespectsBudget) {
  const EnvConfig env;
  const Dataset ds = collect(env, BehaviorPolicy::kUniform, 2, 51, Subsample::kAll);
  ModelFreeConfig cfg = small_config(3, 3);
  cfg.outer_iters = 5;
  cfg.f_steps = 5;
  cfg.learning_rate = 1e-2;  // large steps so projection actually engages
  const ModelFreeResult out = train_model_free(ds, cfg, Arch::kSetTransformer);
  ASSERT_EQ(out.log.size(), 5u);
  for (const IterLog& entry : out.log) EXPECT_TRUE(entry.budget_ok);
  EXPECT_TRUE(respects_budget(out.st, cfg.budget, 1e-9));
}

TEST(TrainModelFree, LambdaZeroMinimizesInitialValue) {
  // Without the Bellman penalty the critic step purely descends f(S0, pi).
  const EnvConfig env;
  const Dataset ds = collect(env, BehaviorPolicy::kUniform, 2, 61, Subsample::kAll);
  ModelFreeConfig cfg = small_config(3, 3);
  cfg.lambda = 0.0;
  cfg.outer_iters = 10;
  cfg.f_steps = 10;
  cfg.pi_steps = 0;
  cfg.learning_rate = 1e-2;
  cfg.bank_size = 8;
  cfg.bank_per_step = 8;
  cfg.k_samples = 4;
  cfg.penalty_every = 0;
  const ModelFreeResult out = train_model_free(ds, cfg, Arch::kSetTransformer);
  EXPECT_LT(out.log.back().value_estimate, out.log.front().value_estimate);
}

TEST(TrainModelFree, RejectsMismatchedEnvAndBank) {
  const EnvConfig env;
  const Dataset ds = collect(env, BehaviorPolicy::kUniform, 1, 71, Subsample::kAll);
  ModelFreeConfig cfg = small_config(4, 3);  // env disagrees with dataset meta
  EXPECT_THROW(train_model_free(ds, cfg, Arch::kMlp), std::invalid_argument);
  ModelFreeConfig ok = small_config(3, 3);
  EXPECT_THROW(train_model_free(ds, ok, Arch::kMlp, {state_mat(0)}),
               std::invalid_argument);  // bank shape mismatch
}

// Deterministic 2-state, 5-action micro-MDP shared by the tabular tests.
struct MicroMdp {
  int next[2][kActionCount] = {{1, 0, 1, 0, 1}, {0, 1, 1, 0, 0}};
  double rew[2][kActionCount] = {{-0.3, -0.8, -0.1, -0.5, -0.6},
                                 {-0.7, -0.2, -0.4, -0.9, -0.35}};
};

Dataset micro_dataset(const MicroMdp& mdp, int copies) {
  Dataset ds;
  ds.meta.n_agents = 1;
  ds.meta.n_landmarks = 1;
  ds.meta.d_s = 1;
  ds.meta.gamma = 0.5;
  ds.meta.horizon = 1;
  ds.meta.episodes = copies;
  for (int c = 0; c < copies; ++c)
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < kActionCount; ++a)
        ds.transitions.push_back(
            {state_mat(s), {a}, mdp.rew[s][a], state_mat(mdp.next[s][a])});
  return ds;
}

TEST(TrainModelFree, LargeLambdaReachesBellmanFloorOnMicroMdp) {
  // Deterministic micro-MDP: the exact Q^pi has empirical Bellman loss zero,
  // so with lambda large the critic step must drive L(f, f, pi; D) to the
  // enumeration-oracle minimum (0) within 1e-3, and f itself toward Q^pi.
  const MicroMdp mdp;
  const Dataset ds = micro_dataset(mdp, 40);
  ModelFreeConfig cfg;
  cfg.lambda = 1000.0;
  cfg.learning_rate = 1e-5;  // effective MSE rate lambda * lr = 1e-2
  cfg.batch_size = static_cast<int>(ds.transitions.size());
  cfg.outer_iters = 60;
  cfg.f_steps = 100;
  cfg.pi_steps = 0;
  cfg.k_samples = 1;
  cfg.exact_expectations = true;  // one agent: exact enumeration of 5 actions
  cfg.penalty_every = 0;
  cfg.inner_steps = 0;
  cfg.bank_size = 2;
  cfg.bank_per_step = 1;
  cfg.gamma = 0.5;
  cfg.v_max = 2.0;
  cfg.mlp_hidden = 64;
  cfg.seed = 2;
  const std::vector<Matrix> bank = {state_mat(0), state_mat(1)};
  const ModelFreeResult out = train_model_free(ds, cfg, Arch::kMlp, bank);

  auto g = make_rng(99, 0);
  auto f_sa = [&](const Matrix& s, const JointAction& a) {
    return mlp_forward(out.mlp, join_state_action(s, a));
  };
  auto pi_fn = [&](const Matrix& s) { return policy_probs(out.policy, s); };
  const double final_loss =
      bellman_loss(f_sa, f_sa, pi_fn, ds.transitions, cfg.gamma, 1, g);
  EXPECT_LE(final_loss, 1e-3);

  // Cross-check against the exact Q^pi from the linear solve.
  TabularMdp tab;
  tab.S = 2;
  tab.A = kActionCount;
  tab.gamma = 0.5;
  tab.P.assign(2 * kActionCount * 2, 0.0);
  tab.r.assign(2 * kActionCount, 0.0);
  tab.mu0 = {0.5, 0.5};
  TabularPolicy pol(2 * kActionCount, 0.0);
  for (int s = 0; s < 2; ++s) {
    const Matrix probs = policy_probs(out.policy, state_mat(s));
    for (int a = 0; a < kActionCount; ++a) {
      tab.p(s, a, mdp.next[s][a]) = 1.0;
      tab.rew(s, a) = mdp.rew[s][a];
      pol[s * kActionCount + a] = probs(0, a);
    }
  }
  const std::vector<double> q = exact_q(tab, pol);
  double worst = 0.0;
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < kActionCount; ++a)
      worst = std::max(worst,
                       std::abs(f_sa(state_mat(s), {a}) - q[s * kActionCount + a]));
  EXPECT_LE(worst, 0.2);
}

TEST(PessimismReport, PureFunctionAndCalculatorConsistency) {
  const MicroMdp mdp;
  const Dataset ds = micro_dataset(mdp, 4);
  auto g = make_rng(17, 0);
  NormBudget bud;
  StValueRegressor reg;
  reg.th = init_set_transformer(1, 2, 1 + kActionCount, 2.0, 2.0, bud, g);
  reg.lr = 1e-3;
  const PolicyParams pp = init_policy(1, 8, g);
  auto pi_fn = [&](const Matrix& s) { return policy_probs(pp, s); };

  BoundInputs in;
  in.n = 1e4;
  in.gamma = 0.5;
  in.r_max = 1.0;
  in.v_max = 2.0;
  in.eps_F = 0.25;
  BellmanErrorConfig be;
  be.inner_steps = 3;
  const PessimismReport a = pessimism_report(reg, pi_fn, ds.transitions, in, bud, be);
  const PessimismReport b = pessimism_report(reg, pi_fn, ds.transitions, in, bud, be);
  EXPECT_EQ(a.empirical_bellman_error, b.empirical_bellman_error);
  EXPECT_EQ(a.prescribed_epsilon, b.prescribed_epsilon);
  EXPECT_GE(a.empirical_bellman_error, 0.0);

  // Calculator cross-checks.
  EXPECT_DOUBLE_EQ(a.generalization_term, gen_bound_model_free(in, bud));
  EXPECT_DOUBLE_EQ(a.prescribed_epsilon, 1.5 * in.eps_F + 2.0 * a.generalization_term / in.n);
  EXPECT_DOUBLE_EQ(a.subopt_bound, subopt_bound_model_free(in, bud));

  // n -> 4n shrinks the prescribed epsilon's second term by ~4 up to log drift.
  BoundInputs in4 = in;
  in4.n = 4.0 * in.n;
  const PessimismReport c = pessimism_report(reg, pi_fn, ds.transitions, in4, bud, be);
  const double term_n = a.prescribed_epsilon - 1.5 * in.eps_F;
  const double term_4n = c.prescribed_epsilon - 1.5 * in.eps_F;
  EXPECT_GT(term_n / term_4n, 3.5);
  EXPECT_LT(term_n / term_4n, 4.5);
}

}  // namespace
