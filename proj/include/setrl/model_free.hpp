// Pessimistic model-free training.  The constrained program
//   maximize over pi of the minimum of f(S0, pi) over f with small Bellman
//   error
// is relaxed to alternating gradient steps on the Lagrangian: the critic f
// DESCENDS f(S0, pi) + lambda * MSE-to-bootstrap-targets (so f is the most
// pessimistic function consistent with the data), and the policy ASCENDS
// f(S0, pi) by a score-function gradient.  Also houses evaluation rollouts
// and the pessimism report that ties a run back to the bound calculators.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "setrl/bounds.hpp"
#include "setrl/budget.hpp"
#include "setrl/dataset.hpp"
#include "setrl/env.hpp"
#include "setrl/matrix.hpp"
#include "setrl/networks.hpp"
#include "setrl/offline.hpp"
#include "setrl/rng.hpp"

namespace setrl {

enum class Arch : int {
  kSetTransformer = 0,
  kDeepSets = 1,
  kMlp = 2,
};

struct ModelFreeConfig {
  double lambda = 1.0;         // Lagrangian weight on the Bellman penalty
  double epsilon = 0.0;        // Bellman-error budget, reporting only
  double learning_rate = 1e-3;
  int batch_size = 1024;
  int outer_iters = 200;
  int f_steps = 20;            // critic steps per outer iteration
  int pi_steps = 5;            // policy steps per outer iteration
  int k_samples = 4;           // joint-action samples per policy expectation
  int inner_steps = 10;        // f~ refresh budget for the logged penalty
  int penalty_every = 1;       // log the penalty every k-th iteration (0: never)
  int bank_size = 64;          // fixed initial-state bank for f(S0, pi)
  int bank_per_step = 8;       // bank states sampled into each f-step objective
  double gamma = 0.95;
  double v_max = 2.0;          // value clip of the critic classes
  double reward_scale = 1.0;   // rewards are divided by this before training
  bool exact_expectations = false;  // enumerate joint actions when 5^N <= 125
  NormBudget budget;
  EnvConfig env;
  std::uint64_t seed = 0;
  // architecture widths
  int st_layers = 2;
  int st_m = 4;
  int ds_width = 32;
  int mlp_hidden = 64;
  int policy_hidden = 64;

  void validate() const {
    if (lambda < 0.0) throw std::invalid_argument("ModelFreeConfig: lambda must be >= 0");
    if (!(learning_rate > 0.0))
      throw std::invalid_argument("ModelFreeConfig: learning rate must be > 0");
    if (batch_size < 1 || outer_iters < 1 || f_steps < 0 || pi_steps < 0 || k_samples < 1 ||
        inner_steps < 0 || penalty_every < 0)
      throw std::invalid_argument("ModelFreeConfig: bad iteration counts");
    if (bank_size < 1 || bank_per_step < 1 || bank_per_step > bank_size)
      throw std::invalid_argument("ModelFreeConfig: bad bank sizes");
    if (!(gamma >= 0.0 && gamma < 1.0))
      throw std::invalid_argument("ModelFreeConfig: gamma must be in [0,1)");
    if (!(v_max > 0.0) || !(reward_scale > 0.0))
      throw std::invalid_argument("ModelFreeConfig: v_max and reward_scale must be > 0");
    if (st_layers < 1 || st_m < 1 || ds_width < 1 || mlp_hidden < 1 || policy_hidden < 1)
      throw std::invalid_argument("ModelFreeConfig: bad architecture widths");
    budget.validate();
    env.validate();
  }
};

struct IterLog {
  int iter = 0;
  double value_estimate = 0.0;  // pessimistic value at the S0 bank
  double bellman_loss = 0.0;    // L(f, f, pi) on the iteration batch
  double penalty = 0.0;         // approximate Bellman error E on the batch
  bool budget_ok = true;        // class-membership check at this iteration
  double wall_ms = 0.0;
};

// Thrown by the divergence guard.
struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- regressor adapters ------------------------------------------------------
// Satisfy the offline-module inner-search interface { value, fit_step }.
// fit_step is one unprojected full-batch gradient-descent step on the MSE, so
// inner candidates may leave the norm-budgeted class (which is what makes the
// reported Bellman error an upper bound on the in-class quantity).

namespace detail {

inline void sgd_axpy(const Tape& t, NodeId id, Matrix& param, double lr) {
  if (!t.grad_nonzero(id)) return;
  const Matrix& g = t.grad_ref(id);
  for (int k = 0; k < param.size(); ++k) param.a[k] -= lr * g.a[k];
}

}  // namespace detail

struct StValueRegressor {
  SetTransformerParams th;
  double lr = 1e-3;

  double value(const Matrix& s, const JointAction& a) const {
    return value_forward(th, join_state_action(s, a));
  }
  void fit_step(const std::vector<Transition>& batch, const std::vector<double>& targets) {
    Tape t;
    StLeaves lv = st_register(t, th, /*with_readout=*/true);
    NodeId total = -1;
    for (size_t i = 0; i < batch.size(); ++i) {
      const NodeId v = st_value_graph(t, lv, th, join_state_action(batch[i].s, batch[i].a));
      const NodeId sq = t.sq_frobenius(t.sub(v, t.constant(targets[i])));
      total = total < 0 ? sq : t.add(total, sq);
    }
    t.backward(t.scale(total, 1.0 / static_cast<double>(batch.size())));
    for (int i = 0; i < th.L; ++i) {
      detail::sgd_axpy(t, lv.w_qk[i], th.w_qk[i], lr);
      detail::sgd_axpy(t, lv.w_v[i], th.w_v[i], lr);
      detail::sgd_axpy(t, lv.a[i], th.a[i], lr);
      detail::sgd_axpy(t, lv.b[i], th.b[i], lr);
    }
    detail::sgd_axpy(t, lv.w, th.w, lr);
  }
};

struct DsValueRegressor {
  DeepSetsParams th;
  double lr = 1e-3;

  double value(const Matrix& s, const JointAction& a) const {
    return deepsets_forward(th, join_state_action(s, a));
  }
  void fit_step(const std::vector<Transition>& batch, const std::vector<double>& targets) {
    Tape t;
    DeepSetsLeaves lv = ds_register(t, th);
    NodeId total = -1;
    for (size_t i = 0; i < batch.size(); ++i) {
      const NodeId v = ds_value_graph(t, lv, th, join_state_action(batch[i].s, batch[i].a));
      const NodeId sq = t.sq_frobenius(t.sub(v, t.constant(targets[i])));
      total = total < 0 ? sq : t.add(total, sq);
    }
    t.backward(t.scale(total, 1.0 / static_cast<double>(batch.size())));
    detail::sgd_axpy(t, lv.phi_a, th.phi_a, lr);
    detail::sgd_axpy(t, lv.phi_b, th.phi_b, lr);
    detail::sgd_axpy(t, lv.phi_c, th.phi_c, lr);
    detail::sgd_axpy(t, lv.phi_d, th.phi_d, lr);
    detail::sgd_axpy(t, lv.rho_e, th.rho_e, lr);
    detail::sgd_axpy(t, lv.rho_f, th.rho_f, lr);
    detail::sgd_axpy(t, lv.rho_g, th.rho_g, lr);
    if (t.grad_nonzero(lv.rho_h)) th.rho_h -= lr * t.grad_ref(lv.rho_h)(0, 0);
  }
};

struct MlpValueRegressor {
  MlpParams th;
  double lr = 1e-3;

  double value(const Matrix& s, const JointAction& a) const {
    return mlp_forward(th, join_state_action(s, a));
  }
  void fit_step(const std::vector<Transition>& batch, const std::vector<double>& targets) {
    Tape t;
    MlpLeaves lv = mlp_register(t, th);
    NodeId total = -1;
    for (size_t i = 0; i < batch.size(); ++i) {
      const NodeId v = mlp_value_graph(t, lv, th, join_state_action(batch[i].s, batch[i].a));
      const NodeId sq = t.sq_frobenius(t.sub(v, t.constant(targets[i])));
      total = total < 0 ? sq : t.add(total, sq);
    }
    t.backward(t.scale(total, 1.0 / static_cast<double>(batch.size())));
    detail::sgd_axpy(t, lv.w1, th.w1, lr);
    detail::sgd_axpy(t, lv.b1, th.b1, lr);
    detail::sgd_axpy(t, lv.w2, th.w2, lr);
    if (t.grad_nonzero(lv.b2)) th.b2 -= lr * t.grad_ref(lv.b2)(0, 0);
  }
};

// ---- critic adapters for the training loop --------------------------------------
// Unlike the one-shot regressors above, these keep their leaves registered on
// a persistent tape that is truncated back to the parameter watermark each
// step.

namespace detail {

struct StCritic {
  SetTransformerParams th;
  NormBudget budget;
  StLeaves lv;

  void attach(Tape& t) { lv = st_register(t, th, /*with_readout=*/true); }
  NodeId node(Tape& t, const Matrix& x) const { return st_value_graph(t, lv, th, x); }
  double value(const Matrix& x) const { return value_forward(th, x); }
  void apply_grads(Tape& t, double lr) {
    for (int i = 0; i < th.L; ++i) {
      sgd_axpy(t, lv.w_qk[i], th.w_qk[i], lr);
      sgd_axpy(t, lv.w_v[i], th.w_v[i], lr);
      sgd_axpy(t, lv.a[i], th.a[i], lr);
      sgd_axpy(t, lv.b[i], th.b[i], lr);
    }
    sgd_axpy(t, lv.w, th.w, lr);
    project_params(th, budget);  // re-projection after every step
    for (int i = 0; i < th.L; ++i) {
      t.value_mut(lv.w_qk[i]) = th.w_qk[i];
      t.value_mut(lv.w_v[i]) = th.w_v[i];
      t.value_mut(lv.a[i]) = th.a[i];
      t.value_mut(lv.b[i]) = th.b[i];
    }
    t.value_mut(lv.w) = th.w;
  }
  bool budget_ok() const { return respects_budget(th, budget, 1e-9); }
  StValueRegressor make_regressor(double lr) const { return {th, lr}; }
};

struct DsCritic {
  DeepSetsParams th;
  DeepSetsLeaves lv;

  void attach(Tape& t) { lv = ds_register(t, th); }
  NodeId node(Tape& t, const Matrix& x) const { return ds_value_graph(t, lv, th, x); }
  double value(const Matrix& x) const { return deepsets_forward(th, x); }
  void apply_grads(Tape& t, double lr) {
    sgd_axpy(t, lv.phi_a, th.phi_a, lr);
    sgd_axpy(t, lv.phi_b, th.phi_b, lr);
    sgd_axpy(t, lv.phi_c, th.phi_c, lr);
    sgd_axpy(t, lv.phi_d, th.phi_d, lr);
    sgd_axpy(t, lv.rho_e, th.rho_e, lr);
    sgd_axpy(t, lv.rho_f, th.rho_f, lr);
    sgd_axpy(t, lv.rho_g, th.rho_g, lr);
    if (t.grad_nonzero(lv.rho_h)) th.rho_h -= lr * t.grad_ref(lv.rho_h)(0, 0);
    t.value_mut(lv.phi_a) = th.phi_a;
    t.value_mut(lv.phi_b) = th.phi_b;
    t.value_mut(lv.phi_c) = th.phi_c;
    t.value_mut(lv.phi_d) = th.phi_d;
    t.value_mut(lv.rho_e) = th.rho_e;
    t.value_mut(lv.rho_f) = th.rho_f;
    t.value_mut(lv.rho_g) = th.rho_g;
    t.value_mut(lv.rho_h)(0, 0) = th.rho_h;
  }
  bool budget_ok() const { return true; }  // baseline class carries no budget
  DsValueRegressor make_regressor(double lr) const { return {th, lr}; }
};

struct MlpCritic {
  MlpParams th;
  MlpLeaves lv;

  void attach(Tape& t) { lv = mlp_register(t, th); }
  NodeId node(Tape& t, const Matrix& x) const { return mlp_value_graph(t, lv, th, x); }
  double value(const Matrix& x) const { return mlp_forward(th, x); }
  void apply_grads(Tape& t, double lr) {
    sgd_axpy(t, lv.w1, th.w1, lr);
    sgd_axpy(t, lv.b1, th.b1, lr);
    sgd_axpy(t, lv.w2, th.w2, lr);
    if (t.grad_nonzero(lv.b2)) th.b2 -= lr * t.grad_ref(lv.b2)(0, 0);
    t.value_mut(lv.w1) = th.w1;
    t.value_mut(lv.b1) = th.b1;
    t.value_mut(lv.w2) = th.w2;
    t.value_mut(lv.b2)(0, 0) = th.b2;
  }
  bool budget_ok() const { return true; }
  MlpValueRegressor make_regressor(double lr) const { return {th, lr}; }
};

// Uniform-with-replacement minibatch with rewards scaled into critic units.
inline std::vector<Transition> sample_batch(const Dataset& ds, int batch_size,
                                            double reward_scale, std::mt19937_64& g) {
  std::vector<Transition> batch;
  batch.reserve(static_cast<size_t>(batch_size));
  const int n = static_cast<int>(ds.transitions.size());
  for (int i = 0; i < batch_size; ++i) {
    Transition tr = ds.transitions[static_cast<size_t>(uniform_int(g, 0, n - 1))];
    tr.r /= reward_scale;
    batch.push_back(std::move(tr));
  }
  return batch;
}

// The alternating optimization.  critic.th and pp are trained in place.
template <typename Critic>
std::vector<IterLog> run_training(Critic& critic, PolicyParams& pp, const Dataset& ds,
                                  const ModelFreeConfig& cfg, const std::vector<Matrix>& bank) {
  using clock = std::chrono::steady_clock;
  auto g = make_rng(cfg.seed, 2);
  const bool force_mc = !cfg.exact_expectations;
  const int nb = static_cast<int>(bank.size());

  Tape tf;
  critic.attach(tf);
  const int wm_f = tf.size();
  Tape tp;
  PolicyLeaves plv = pi_register(tp, pp);
  const int wm_p = tp.size();

  auto pi_fn = [&](const Matrix& s) { return policy_probs(pp, s); };
  auto f_sa = [&](const Matrix& s, const JointAction& a) {
    return critic.value(join_state_action(s, a));
  };

  std::vector<IterLog> log;
  log.reserve(static_cast<size_t>(cfg.outer_iters));
  for (int iter = 0; iter < cfg.outer_iters; ++iter) {
    const auto t0 = clock::now();
    IterLog entry;
    entry.iter = iter;

    // ---- diagnostics on a fresh batch ----
    const std::vector<Transition> batch =
        sample_batch(ds, cfg.batch_size, cfg.reward_scale, g);
    double value_est = 0.0;
    for (const Matrix& s0 : bank)
      value_est += expected_f(f_sa, s0, pi_fn, cfg.k_samples, g, force_mc);
    value_est /= nb;
    entry.value_estimate = value_est;
    entry.bellman_loss = bellman_loss(f_sa, f_sa, pi_fn, batch, cfg.gamma, cfg.k_samples, g,
                                      force_mc);
    if (cfg.penalty_every > 0 && iter % cfg.penalty_every == 0) {
      BellmanErrorConfig be;
      be.inner_steps = cfg.inner_steps;
      be.k_samples = cfg.k_samples;
      be.force_mc = force_mc;
      auto reg = critic.make_regressor(cfg.learning_rate);
      entry.penalty = bellman_error(reg, pi_fn, batch, cfg.gamma, be, g);
    }
    entry.budget_ok = critic.budget_ok();
    if (std::abs(value_est) > 10.0 * cfg.v_max)
      throw TrainingDiverged("model_free: value estimate " + std::to_string(value_est) +
                             " exceeds 10*v_max at iteration " + std::to_string(iter));

    // ---- critic steps: descend f(S0, pi) + lambda * bootstrap MSE ----
    for (int fs = 0; fs < cfg.f_steps; ++fs) {
      const std::vector<Transition> fb =
          sample_batch(ds, cfg.batch_size, cfg.reward_scale, g);
      std::vector<double> targets(fb.size());
      for (size_t i = 0; i < fb.size(); ++i)
        targets[i] = fb[i].r + cfg.gamma * expected_f(f_sa, fb[i].s2, pi_fn, cfg.k_samples, g,
                                                      force_mc);
      // Joint actions for the pessimism term, sampled from the frozen policy.
      std::vector<Matrix> bank_inputs;
      for (int k = 0; k < cfg.bank_per_step; ++k) {
        const Matrix& s0 = bank[static_cast<size_t>(uniform_int(g, 0, nb - 1))];
        const Matrix probs = policy_probs(pp, s0);
        for (int j = 0; j < cfg.k_samples; ++j) {
          JointAction a(static_cast<size_t>(s0.rows));
          for (int i = 0; i < s0.rows; ++i)
            a[i] = sample_categorical(g, probs.row(i), kActionCount);
          bank_inputs.push_back(join_state_action(s0, a));
        }
      }
      tf.truncate(wm_f);
      NodeId mse = -1;
      for (size_t i = 0; i < fb.size(); ++i) {
        const NodeId v = critic.node(tf, join_state_action(fb[i].s, fb[i].a));
        const NodeId sq = tf.sq_frobenius(tf.sub(v, tf.constant(targets[i])));
        mse = mse < 0 ? sq : tf.add(mse, sq);
      }
      mse = tf.scale(mse, 1.0 / static_cast<double>(fb.size()));
      NodeId bank_term = -1;
      for (const Matrix& x : bank_inputs) {
        const NodeId v = critic.node(tf, x);
        bank_term = bank_term < 0 ? v : tf.add(bank_term, v);
      }
      bank_term = tf.scale(bank_term, 1.0 / static_cast<double>(bank_inputs.size()));
      tf.backward(tf.add(bank_term, tf.scale(mse, cfg.lambda)));
      critic.apply_grads(tf, cfg.learning_rate);
    }

    // ---- policy steps: ascend f(S0, pi) by the score-function gradient ----
    for (int ps = 0; ps < cfg.pi_steps; ++ps) {
      tp.truncate(wm_p);
      NodeId surrogate = -1;
      int terms = 0;
      for (int k = 0; k < nb; ++k) {
        const Matrix& s0 = bank[k];
        const Matrix probs = policy_probs(pp, s0);
        std::vector<JointAction> acts(static_cast<size_t>(cfg.k_samples));
        std::vector<double> w(static_cast<size_t>(cfg.k_samples));
        double baseline = 0.0;
        for (int j = 0; j < cfg.k_samples; ++j) {
          JointAction a(static_cast<size_t>(s0.rows));
          for (int i = 0; i < s0.rows; ++i)
            a[i] = sample_categorical(g, probs.row(i), kActionCount);
          w[j] = critic.value(join_state_action(s0, a));
          baseline += w[j];
          acts[j] = std::move(a);
        }
        baseline /= cfg.k_samples;
        for (int j = 0; j < cfg.k_samples; ++j) {
          const NodeId lp = pi_joint_logprob_graph(tp, plv, s0, acts[j]);
          const NodeId term = tp.scale(lp, w[j] - baseline);
          surrogate = surrogate < 0 ? term : tp.add(surrogate, term);
          ++terms;
        }
      }
      tp.backward(tp.scale(surrogate, 1.0 / terms));
      // Ascent: negative learning rate flips the SGD update direction.
      sgd_axpy(tp, plv.w1, pp.w1, -cfg.learning_rate);
      sgd_axpy(tp, plv.b1, pp.b1, -cfg.learning_rate);
      sgd_axpy(tp, plv.w2, pp.w2, -cfg.learning_rate);
      sgd_axpy(tp, plv.b2, pp.b2, -cfg.learning_rate);
      tp.value_mut(plv.w1) = pp.w1;
      tp.value_mut(plv.b1) = pp.b1;
      tp.value_mut(plv.w2) = pp.w2;
      tp.value_mut(plv.b2) = pp.b2;
    }

    entry.wall_ms =
        std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    log.push_back(entry);
  }
  return log;
}

}  // namespace detail

struct ModelFreeResult {
  Arch arch = Arch::kSetTransformer;
  SetTransformerParams st;  // populated when arch == kSetTransformer
  DeepSetsParams ds;        // populated when arch == kDeepSets
  MlpParams mlp;            // populated when arch == kMlp
  PolicyParams policy;
  std::vector<IterLog> log;
};

// Fixed bank of seeded initial states for the f(S0, pi) objective.
inline std::vector<Matrix> make_initial_bank(const EnvConfig& env, int bank_size,
                                             std::uint64_t seed) {
  std::vector<Matrix> bank;
  bank.reserve(static_cast<size_t>(bank_size));
  for (int k = 0; k < bank_size; ++k)
    bank.push_back(observe(reset(env, derive_seed(seed, 10000 + static_cast<std::uint64_t>(k)))));
  return bank;
}

// Trains a pessimistic critic of the chosen architecture and its policy.
// `bank` overrides the initial-state bank (used by tests whose datasets do
// not come from the particle environment); empty means "generate from env".
inline ModelFreeResult train_model_free(const Dataset& ds, const ModelFreeConfig& cfg, Arch arch,
                                        std::vector<Matrix> bank = {}) {
  cfg.validate();
  ds.validate();
  if (bank.empty()) {
    if (cfg.env.n_agents != ds.meta.n_agents || cfg.env.n_landmarks != ds.meta.n_landmarks)
      throw std::invalid_argument("train_model_free: env config does not match dataset meta");
    bank = make_initial_bank(cfg.env, cfg.bank_size, cfg.seed);
  }
  const int d_s = ds.meta.d_s;
  const int n = ds.meta.n_agents;
  const int d = d_s + kActionCount;
  for (const Matrix& s0 : bank)
    if (s0.rows != n || s0.cols != d_s)
      throw std::invalid_argument("train_model_free: bank state shape mismatch");

  auto g = make_rng(cfg.seed, 1);
  ModelFreeResult out;
  out.arch = arch;
  out.policy = init_policy(d_s, cfg.policy_hidden, g);
  switch (arch) {
    case Arch::kSetTransformer: {
      detail::StCritic critic;
      critic.th =
          init_set_transformer(cfg.st_layers, cfg.st_m, d, cfg.budget.p, cfg.v_max, cfg.budget, g);
      critic.budget = cfg.budget;
      out.log = detail::run_training(critic, out.policy, ds, cfg, bank);
      out.st = critic.th;
      break;
    }
    case Arch::kDeepSets: {
      detail::DsCritic critic;
      critic.th = init_deepsets(d, cfg.ds_width, cfg.ds_width, cfg.ds_width, cfg.v_max, g);
      out.log = detail::run_training(critic, out.policy, ds, cfg, bank);
      out.ds = critic.th;
      break;
    }
    case Arch::kMlp: {
      detail::MlpCritic critic;
      critic.th = init_mlp(n * d, cfg.mlp_hidden, cfg.v_max, g);
      out.log = detail::run_training(critic, out.policy, ds, cfg, bank);
      out.mlp = critic.th;
      break;
    }
  }
  return out;
}

// ---- evaluation -----------------------------------------------------------------

struct EvalResult {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation across episodes
  std::vector<double> episode_rewards;
};

// Rolls out a policy functor (WorldState, observation, rng) -> JointAction;
// per-episode reward is the undiscounted sum over the horizon.
template <typename Pol>
EvalResult evaluate(Pol&& pol, const EnvConfig& env, int episodes, int horizon,
                    std::uint64_t seed) {
  env.validate();
  if (episodes < 1 || horizon < 1)
    throw std::invalid_argument("evaluate: episodes and horizon must be >= 1");
  EvalResult res;
  res.episode_rewards.reserve(static_cast<size_t>(episodes));
  for (int e = 0; e < episodes; ++e) {
    auto g = make_rng(seed, static_cast<std::uint64_t>(e) + 1);
    WorldState st = reset(env, derive_seed(seed, static_cast<std::uint64_t>(e)));
    double total = 0.0;
    for (int t = 0; t < horizon; ++t) {
      const JointAction a = pol(st, observe(st), g);
      StepResult sr = step(st, a, env);
      total += sr.reward;
      st = sr.state;
    }
    res.episode_rewards.push_back(total);
  }
  for (double r : res.episode_rewards) res.mean += r;
  res.mean /= episodes;
  if (episodes > 1) {
    double ss = 0.0;
    for (double r : res.episode_rewards) ss += (r - res.mean) * (r - res.mean);
    res.stddev = std::sqrt(ss / (episodes - 1));
  }
  return res;
}

// Policy functors for evaluate().
struct NetworkActor {
  PolicyParams th;
  JointAction operator()(const WorldState&, const Matrix& obs, std::mt19937_64& g) const {
    return policy_sample(th, obs, g).actions;
  }
};

struct UniformActor {
  int n_agents = 1;
  JointAction operator()(const WorldState&, const Matrix&, std::mt19937_64& g) const {
    return uniform_behavior(n_agents, g);
  }
};

struct HeuristicActor {
  double epsilon = 0.0;
  JointAction operator()(const WorldState& st, const Matrix&, std::mt19937_64& g) const {
    return eps_greedy_nearest_behavior(st, epsilon, g);
  }
};

// ---- pessimism report ------------------------------------------------------------

struct PessimismReport {
  double empirical_bellman_error = 0.0;  // achieved E(f, pi; D)
  double generalization_term = 0.0;      // e(F, Pi, delta, n) from the calculator
  double prescribed_epsilon = 0.0;       // 3 eps_F / 2 + 2 e / n
  double subopt_bound = 0.0;             // model-free suboptimality value
};

// Pure function of its inputs: the Bellman-error refresh runs on a fixed
// internal stream, so identical (f, pi, data, inputs) give identical reports.
template <typename Reg, typename Pi>
PessimismReport pessimism_report(const Reg& f, Pi&& pi, const std::vector<Transition>& data,
                                 const BoundInputs& in, const NormBudget& bud,
                                 const BellmanErrorConfig& be = {}) {
  in.validate();
  auto g = make_rng(0xB0D5u, 0);
  PessimismReport rep;
  rep.empirical_bellman_error = bellman_error(f, pi, data, in.gamma, be, g);
  rep.generalization_term = gen_bound_model_free(in, bud);
  rep.prescribed_epsilon = 1.5 * in.eps_F + 2.0 * rep.generalization_term / in.n;
  rep.subopt_bound = subopt_bound_model_free(in, bud);
  return rep;
}

}  // namespace setrl
