// Pessimistic model-based offline RL: MLE dynamics fitting under the norm
// budget, the closed-form Gaussian total-variation confidence region, and
// policy ascent against the worst surviving ensemble member.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "setrl/autodiff.hpp"
#include "setrl/bounds.hpp"
#include "setrl/budget.hpp"
#include "setrl/dataset.hpp"
#include "setrl/env.hpp"
#include "setrl/matrix.hpp"
#include "setrl/model_free.hpp"
#include "setrl/networks.hpp"
#include "setrl/rng.hpp"

namespace setrl {

// ---- domain types ----------------------------------------------------------------

// Gaussian transition model: next-state mean from the equivariant dynamics
// head (readout w unused), isotropic noise sigma per state entry.  The class
// is the Frobenius specialization, so the budget must use p = q = 2.
struct DynamicsModel {
  SetTransformerParams params;
  double sigma = 0.01;
  NormBudget budget;

  void validate() const {
    setrl::validate(params, /*with_readout=*/false);
    budget.validate();
    if (!(sigma > 0.0)) throw std::domain_error("DynamicsModel: sigma must be > 0");
    if (budget.p != 2.0 || budget.q != 2.0 || params.p != 2.0)
      throw std::domain_error("DynamicsModel: dynamics class requires p = q = 2");
  }
};

// Independently initialized MLE fits on the same data; mle_index designates
// the member with the lowest training loss.
struct Ensemble {
  std::vector<DynamicsModel> models;
  int mle_index = 0;

  void validate() const {
    if (models.empty()) throw std::invalid_argument("Ensemble: no members");
    if (mle_index < 0 || mle_index >= static_cast<int>(models.size()))
      throw std::invalid_argument("Ensemble: mle_index out of range");
    for (const DynamicsModel& m : models) {
      m.validate();
      if (m.params.d != models.front().params.d)
        throw std::invalid_argument("Ensemble: members disagree on channel dimension");
      if (m.sigma != models.front().sigma)
        throw std::invalid_argument("Ensemble: members disagree on sigma");
    }
  }
};

// ---- MLE fitting -----------------------------------------------------------------

struct MleConfig {
  int st_layers = 2;
  int st_m = 4;
  double sigma = 0.01;       // noise scale attached to the fitted model
  bool fit_sigma = false;    // replace sigma by the residual estimate after fitting
  double learning_rate = 0.05;
  int epochs = 60;           // logged full-dataset loss evaluations
  int batch_size = 0;        // 0 = full batch with safeguarded (monotone) steps
  double divergence_factor = 50.0;  // guard: loss > factor * (initial + 1) diverged
  NormBudget budget;
  std::uint64_t seed = 0;

  void validate() const {
    if (st_layers < 1 || st_m < 1) throw std::invalid_argument("MleConfig: bad architecture");
    if (!(sigma > 0.0)) throw std::invalid_argument("MleConfig: sigma must be > 0");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("MleConfig: bad learning rate");
    if (epochs < 1) throw std::invalid_argument("MleConfig: epochs must be >= 1");
    if (batch_size < 0) throw std::invalid_argument("MleConfig: batch_size must be >= 0");
    if (!(divergence_factor > 1.0))
      throw std::invalid_argument("MleConfig: divergence_factor must be > 1");
    budget.validate();
    if (budget.p != 2.0 || budget.q != 2.0)
      throw std::invalid_argument("MleConfig: dynamics class requires p = q = 2");
  }
};

struct FitResult {
  DynamicsModel model;
  double final_loss = 0.0;            // mean squared Frobenius loss on the dataset
  std::vector<double> epoch_losses;   // full-dataset loss after each epoch
};

// Mean squared Frobenius prediction loss of a model over a dataset.
inline double mle_loss(const DynamicsModel& m, const Dataset& ds) {
  ds.validate();
  const int d_s = ds.transitions.front().s.cols;
  double acc = 0.0;
  for (const Transition& tr : ds.transitions) {
    const Matrix mu = dynamics_forward(m.params, join_state_action(tr.s, tr.a), d_s);
    for (std::size_t k = 0; k < mu.a.size(); ++k) {
      const double e = mu.a[k] - tr.s2.a[k];
      acc += e * e;
    }
  }
  return acc / static_cast<double>(ds.transitions.size());
}

namespace detail {

inline void sync_dyn_leaves(Tape& t, const StLeaves& lv, const SetTransformerParams& th) {
  for (int i = 0; i < th.L; ++i) {
    t.value_mut(lv.w_qk[i]) = th.w_qk[i];
    t.value_mut(lv.w_v[i]) = th.w_v[i];
    t.value_mut(lv.a[i]) = th.a[i];
    t.value_mut(lv.b[i]) = th.b[i];
  }
}

}  // namespace detail

// Gradient descent on the mean squared Frobenius loss with per-step budget
// projection.  Full-batch mode (batch_size = 0) halves the step until the
// loss does not increase, so the logged epoch losses are nonincreasing;
// minibatch mode is plain SGD with a divergence guard.
inline FitResult fit_mle(const Dataset& ds, const MleConfig& cfg) {
  ds.validate();
  cfg.validate();
  const int n = static_cast<int>(ds.transitions.size());
  const int d_s = ds.transitions.front().s.cols;
  const int d = d_s + kActionCount;

  auto g = make_rng(cfg.seed, 3);
  FitResult out;
  out.model.sigma = cfg.sigma;
  out.model.budget = cfg.budget;
  out.model.params = init_set_transformer(cfg.st_layers, cfg.st_m, d, cfg.budget.p,
                                          /*v_max=*/1.0, cfg.budget, g);
  SetTransformerParams& th = out.model.params;

  std::vector<Matrix> xs;
  xs.reserve(ds.transitions.size());
  for (const Transition& tr : ds.transitions) xs.push_back(join_state_action(tr.s, tr.a));

  auto data_loss = [&](const SetTransformerParams& p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const Matrix mu = dynamics_forward(p, xs[i], d_s);
      const Matrix& s2 = ds.transitions[i].s2;
      for (std::size_t k = 0; k < mu.a.size(); ++k) {
        const double e = mu.a[k] - s2.a[k];
        acc += e * e;
      }
    }
    return acc / static_cast<double>(n);
  };

  Tape t;
  const StLeaves lv = st_register(t, th, /*with_readout=*/false);
  const std::size_t wm = t.size();

  // Builds the mean loss graph over an index set, then backpropagates.
  auto backward_on = [&](const std::vector<int>& idx) {
    t.truncate(wm);
    NodeId total = -1;
    for (int i : idx) {
      const NodeId pred = st_dynamics_graph(t, lv, th, xs[i], d_s);
      const NodeId target = t.leaf(ds.transitions[i].s2, /*needs_grad=*/false);
      const NodeId err = t.sq_frobenius(t.sub(pred, target));
      total = total < 0 ? err : t.add(total, err);
    }
    const NodeId mean = t.scale(total, 1.0 / static_cast<double>(idx.size()));
    t.backward(mean);
    return t.value(mean)(0, 0);
  };

  double cur = data_loss(th);
  const double guard = cfg.divergence_factor * (cur + 1.0);

  if (cfg.batch_size == 0) {
    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    constexpr int kMaxHalvings = 40;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      backward_on(all);
      double lr = cfg.learning_rate;
      for (int h = 0; h < kMaxHalvings; ++h, lr *= 0.5) {
        SetTransformerParams cand = th;
        for (int i = 0; i < th.L; ++i) {
          detail::sgd_axpy(t, lv.w_qk[i], cand.w_qk[i], lr);
          detail::sgd_axpy(t, lv.w_v[i], cand.w_v[i], lr);
          detail::sgd_axpy(t, lv.a[i], cand.a[i], lr);
          detail::sgd_axpy(t, lv.b[i], cand.b[i], lr);
        }
        project_params(cand, cfg.budget);
        const double next = data_loss(cand);
        if (next <= cur) {
          th = cand;
          cur = next;
          detail::sync_dyn_leaves(t, lv, th);
          break;
        }
      }
      out.epoch_losses.push_back(cur);
    }
  } else {
    const int steps = std::max(1, n / cfg.batch_size);
    std::vector<int> idx(static_cast<std::size_t>(cfg.batch_size));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      for (int s = 0; s < steps; ++s) {
        for (int& i : idx) i = uniform_int(g, 0, n - 1);
        const double bl = backward_on(idx);
        if (!std::isfinite(bl) || bl > guard)
          throw TrainingDiverged("fit_mle: minibatch loss diverged");
        for (int i = 0; i < th.L; ++i) {
          detail::sgd_axpy(t, lv.w_qk[i], th.w_qk[i], cfg.learning_rate);
          detail::sgd_axpy(t, lv.w_v[i], th.w_v[i], cfg.learning_rate);
          detail::sgd_axpy(t, lv.a[i], th.a[i], cfg.learning_rate);
          detail::sgd_axpy(t, lv.b[i], th.b[i], cfg.learning_rate);
        }
        project_params(th, cfg.budget);
        detail::sync_dyn_leaves(t, lv, th);
      }
      cur = data_loss(th);
      if (!std::isfinite(cur) || cur > guard) throw TrainingDiverged("fit_mle: loss diverged");
      out.epoch_losses.push_back(cur);
    }
  }

  out.final_loss = cur;
  if (cfg.fit_sigma) {
    // Maximum-likelihood noise scale under the Gaussian model: residual
    // standard deviation per state entry, floored to keep sigma positive.
    const double entries = static_cast<double>(ds.transitions.front().s2.a.size());
    out.model.sigma = std::sqrt(std::max(cur / entries, 1e-16));
  }
  return out;
}

struct EnsembleFit {
  Ensemble ensemble;
  std::vector<double> final_losses;  // per member, ensemble order
};

// Independent fits from distinct derived seeds on identical data; the member
// with the lowest final loss becomes the designated MLE.
inline EnsembleFit fit_ensemble(const Dataset& ds, const MleConfig& cfg, int n_members = 5) {
  if (n_members < 1) throw std::invalid_argument("fit_ensemble: n_members must be >= 1");
  EnsembleFit out;
  int best = 0;
  for (int k = 0; k < n_members; ++k) {
    MleConfig c = cfg;
    c.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(k) + 1);
    FitResult fr = fit_mle(ds, c);
    out.final_losses.push_back(fr.final_loss);
    out.ensemble.models.push_back(std::move(fr.model));
    if (fr.final_loss < out.final_losses[static_cast<std::size_t>(best)]) best = k;
  }
  out.ensemble.mle_index = best;
  out.ensemble.validate();
  return out;
}

// ---- confidence region -----------------------------------------------------------

// Exact total-variation distance between the two Gaussian transition laws at
// one state-action pair.  For equal isotropic covariances this is
// 2 Phi(||mu1 - mu2||_F / (2 sigma)) - 1 = erf(||mu1 - mu2||_F / (2 sqrt(2) sigma)).
inline double tv_point(const DynamicsModel& f1, const DynamicsModel& f2, const Matrix& s,
                       const JointAction& a) {
  if (!(f1.sigma > 0.0) || !(f2.sigma > 0.0))
    throw std::domain_error("tv_point: sigma must be > 0");
  if (f1.sigma != f2.sigma) throw std::invalid_argument("tv_point: models must share sigma");
  const Matrix x = join_state_action(s, a);
  const Matrix p1 = dynamics_forward(f1.params, x, s.cols);
  const Matrix p2 = dynamics_forward(f2.params, x, s.cols);
  double sq = 0.0;
  for (std::size_t k = 0; k < p1.a.size(); ++k) {
    const double dd = p1.a[k] - p2.a[k];
    sq += dd * dd;
  }
  const double tv = std::erf(std::sqrt(sq) / (2.0 * std::sqrt(2.0) * f1.sigma));
  // erf saturates to 1.0 in doubles for large arguments; clamp below one so
  // the half-open range [0, 1) holds for every input.
  return std::min(tv, std::nextafter(1.0, 0.0));
}

struct RegionCheck {
  bool inside = false;
  double mean_sq_tv = 0.0;
};

// Membership test for the confidence region: mean squared TV to the MLE over
// the dataset's state-action pairs, compared against zeta.
inline RegionCheck in_confidence_region(const DynamicsModel& f, const DynamicsModel& mle,
                                        const Dataset& ds, double zeta) {
  if (!(zeta >= 0.0)) throw std::invalid_argument("in_confidence_region: zeta must be >= 0");
  ds.validate();
  double acc = 0.0;
  for (const Transition& tr : ds.transitions) {
    const double tv = tv_point(f, mle, tr.s, tr.a);
    acc += tv * tv;
  }
  RegionCheck rc;
  rc.mean_sq_tv = acc / static_cast<double>(ds.transitions.size());
  rc.inside = rc.mean_sq_tv <= zeta;
  return rc;
}

// Prescribed confidence radius zeta = c1 * e'(class, n) / n.
inline double prescribed_zeta(const BoundInputs& in, const NormBudget& bud) {
  return in.c1 * gen_bound_model_based(in, bud) / in.n;
}

// ---- synthetic data and rollouts ---------------------------------------------------

// Uniform (s, a) draws pushed through the model mean, plus optional Gaussian
// noise; rewards are zero (dynamics-only data).
inline Dataset synth_dataset(const DynamicsModel& truth, int n_agents, int n, double state_range,
                             double noise, std::uint64_t seed) {
  truth.validate();
  if (n_agents < 1 || n < 1) throw std::invalid_argument("synth_dataset: bad sizes");
  if (!(state_range > 0.0) || noise < 0.0)
    throw std::invalid_argument("synth_dataset: bad state_range or noise");
  const int d_s = truth.params.d - kActionCount;
  if (d_s < 1) throw std::invalid_argument("synth_dataset: model has too few channels");
  auto g = make_rng(seed, 5);
  Dataset out;
  out.meta.n_agents = n_agents;
  out.meta.n_landmarks = 0;
  out.meta.d_s = d_s;
  out.meta.d_a = kActionCount;
  out.meta.seed = seed;
  out.meta.behavior = BehaviorPolicy::kUniform;
  out.meta.episodes = n;
  out.meta.horizon = 1;
  out.meta.subsample = Subsample::kAll;
  out.transitions.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Transition tr;
    tr.s = Matrix(n_agents, d_s);
    for (double& v : tr.s.a) v = uniform(g, -state_range, state_range);
    tr.a.resize(static_cast<std::size_t>(n_agents));
    for (int& x : tr.a) x = uniform_int(g, 0, kActionCount - 1);
    tr.s2 = dynamics_forward(truth.params, join_state_action(tr.s, tr.a), d_s);
    if (noise > 0.0)
      for (double& v : tr.s2.a) v += noise * gauss(g);
    tr.r = 0.0;
    out.transitions.push_back(std::move(tr));
  }
  return out;
}

struct RolloutConfig {
  int horizon = 10;
  int n_rollouts = 256;
  double gamma = 0.95;
  double noise_scale = -1.0;  // < 0: use the model's sigma; 0 is deterministic

  void validate() const {
    if (horizon < 1 || n_rollouts < 1) throw std::invalid_argument("RolloutConfig: bad sizes");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("RolloutConfig: bad gamma");
  }
};

namespace detail {

struct MbTraj {
  std::vector<Matrix> states;        // state before each action
  std::vector<JointAction> actions;
  std::vector<double> rewards;       // reward on the predicted next state
  double ret0 = 0.0;                 // discounted return from t = 0
};

template <typename RewardFn>
MbTraj rollout_model(const DynamicsModel& m, const PolicyParams& pi, const Matrix& s0,
                     int horizon, double gamma, double noise, RewardFn&& reward,
                     std::mt19937_64& g) {
  MbTraj tr;
  tr.states.reserve(static_cast<std::size_t>(horizon));
  Matrix s = s0;
  double disc = 1.0;
  for (int t = 0; t < horizon; ++t) {
    const PolicySample ps = policy_sample(pi, s, g);
    Matrix s2 = dynamics_forward(m.params, join_state_action(s, ps.actions), s0.cols);
    if (noise > 0.0)
      for (double& v : s2.a) v += noise * gauss(g);
    const double r = reward(s2);
    tr.states.push_back(std::move(s));
    tr.actions.push_back(ps.actions);
    tr.rewards.push_back(r);
    tr.ret0 += disc * r;
    disc *= gamma;
    s = std::move(s2);
  }
  return tr;
}

}  // namespace detail

// Monte-Carlo policy value under one dynamics model: rollouts start from the
// bank states in round-robin order.
template <typename RewardFn>
double model_value(const DynamicsModel& m, const PolicyParams& pi, const std::vector<Matrix>& bank,
                   const RolloutConfig& rc, RewardFn&& reward, std::mt19937_64& g) {
  m.validate();
  rc.validate();
  if (bank.empty()) throw std::invalid_argument("model_value: empty state bank");
  const double noise = rc.noise_scale < 0.0 ? m.sigma : rc.noise_scale;
  double acc = 0.0;
  for (int r = 0; r < rc.n_rollouts; ++r)
    acc += detail::rollout_model(m, pi, bank[static_cast<std::size_t>(r) % bank.size()],
                                 rc.horizon, rc.gamma, noise, reward, g)
               .ret0;
  return acc / static_cast<double>(rc.n_rollouts);
}

// ---- pessimistic policy learning ---------------------------------------------------

struct PessimisticConfig {
  int policy_iters = 60;
  double learning_rate = 0.05;
  int policy_hidden = 32;
  RolloutConfig rollout;
  std::uint64_t seed = 0;

  void validate() const {
    if (policy_iters < 1) throw std::invalid_argument("PessimisticConfig: bad policy_iters");
    if (!(learning_rate > 0.0))
      throw std::invalid_argument("PessimisticConfig: bad learning rate");
    if (policy_hidden < 1) throw std::invalid_argument("PessimisticConfig: bad policy_hidden");
    rollout.validate();
  }
};

struct MbIterLog {
  int iter = 0;
  std::vector<double> member_values;  // surviving members, ensemble order
  double pessimistic_value = 0.0;     // min of member_values
  int argmin_member = 0;              // index into the original ensemble
};

struct PessimisticResult {
  PolicyParams policy;
  std::vector<int> survivors;  // ensemble indices that passed the region test
  std::vector<MbIterLog> log;
};

// Drops members outside the confidence region around the MLE member, then
// runs score-function ascent on the minimum surviving member's Monte-Carlo
// value at the start-state bank.
template <typename RewardFn>
PessimisticResult pessimistic_policy(const Ensemble& ens, const Dataset& ds, double zeta,
                                     const PessimisticConfig& cfg,
                                     const std::vector<Matrix>& bank, RewardFn&& reward) {
  ens.validate();
  ds.validate();
  cfg.validate();
  if (bank.empty()) throw std::invalid_argument("pessimistic_policy: empty state bank");
  const int d_s = bank.front().cols;
  for (const Matrix& s : bank)
    if (s.cols != d_s || s.rows != bank.front().rows)
      throw std::invalid_argument("pessimistic_policy: inhomogeneous state bank");
  if (d_s + kActionCount != ens.models.front().params.d)
    throw std::invalid_argument("pessimistic_policy: bank width does not match the models");

  PessimisticResult out;
  const DynamicsModel& mle = ens.models[static_cast<std::size_t>(ens.mle_index)];
  for (std::size_t i = 0; i < ens.models.size(); ++i) {
    const RegionCheck rc = in_confidence_region(ens.models[i], mle, ds, std::max(zeta, 0.0));
    if (rc.mean_sq_tv <= zeta) out.survivors.push_back(static_cast<int>(i));
  }
  if (out.survivors.empty())
    throw std::runtime_error(
        "pessimistic_policy: every ensemble member lies outside the confidence region (zeta = " +
        std::to_string(zeta) + ")");

  auto g = make_rng(cfg.seed, 4);
  out.policy = init_policy(d_s, cfg.policy_hidden, g);
  Tape t;
  const PolicyLeaves plv = pi_register(t, out.policy);
  const std::size_t wm = t.size();

  const int horizon = cfg.rollout.horizon;
  std::vector<double> gpow(static_cast<std::size_t>(horizon), 1.0);
  for (int u = 1; u < horizon; ++u)
    gpow[static_cast<std::size_t>(u)] = gpow[static_cast<std::size_t>(u) - 1] * cfg.rollout.gamma;

  for (int iter = 0; iter < cfg.policy_iters; ++iter) {
    MbIterLog lg;
    lg.iter = iter;
    std::vector<detail::MbTraj> worst;
    int argmin = -1;
    for (std::size_t k = 0; k < out.survivors.size(); ++k) {
      const DynamicsModel& m = ens.models[static_cast<std::size_t>(out.survivors[k])];
      const double noise = cfg.rollout.noise_scale < 0.0 ? m.sigma : cfg.rollout.noise_scale;
      std::vector<detail::MbTraj> trajs;
      trajs.reserve(static_cast<std::size_t>(cfg.rollout.n_rollouts));
      double acc = 0.0;
      for (int r = 0; r < cfg.rollout.n_rollouts; ++r) {
        trajs.push_back(detail::rollout_model(m, out.policy,
                                              bank[static_cast<std::size_t>(r) % bank.size()],
                                              horizon, cfg.rollout.gamma, noise, reward, g));
        acc += trajs.back().ret0;
      }
      const double v = acc / static_cast<double>(cfg.rollout.n_rollouts);
      if (!std::isfinite(v)) throw TrainingDiverged("pessimistic_policy: member value diverged");
      lg.member_values.push_back(v);
      if (argmin < 0 || v < lg.member_values[static_cast<std::size_t>(argmin)]) {
        argmin = static_cast<int>(k);
        worst = std::move(trajs);
      }
    }
    lg.argmin_member = out.survivors[static_cast<std::size_t>(argmin)];
    lg.pessimistic_value = lg.member_values[static_cast<std::size_t>(argmin)];
    out.log.push_back(lg);

    // Returns-to-go with per-step mean baselines over the worst member's
    // rollouts, then one ascent step on the score-function surrogate.
    std::vector<double> base(static_cast<std::size_t>(horizon), 0.0);
    std::vector<std::vector<double>> rtg(worst.size(),
                                         std::vector<double>(static_cast<std::size_t>(horizon)));
    for (std::size_t r = 0; r < worst.size(); ++r) {
      double acc = 0.0;
      for (int u = horizon - 1; u >= 0; --u) {
        acc = worst[r].rewards[static_cast<std::size_t>(u)] + cfg.rollout.gamma * acc;
        rtg[r][static_cast<std::size_t>(u)] = acc;
      }
      for (int u = 0; u < horizon; ++u) base[static_cast<std::size_t>(u)] += rtg[r][static_cast<std::size_t>(u)];
    }
    for (double& b : base) b /= static_cast<double>(worst.size());

    t.truncate(wm);
    NodeId surrogate = -1;
    for (std::size_t r = 0; r < worst.size(); ++r)
      for (int u = 0; u < horizon; ++u) {
        const double c = gpow[static_cast<std::size_t>(u)] *
                         (rtg[r][static_cast<std::size_t>(u)] - base[static_cast<std::size_t>(u)]);
        if (c == 0.0) continue;
        const NodeId lp = pi_joint_logprob_graph(t, plv, worst[r].states[static_cast<std::size_t>(u)],
                                                 worst[r].actions[static_cast<std::size_t>(u)]);
        const NodeId term = t.scale(lp, c);
        surrogate = surrogate < 0 ? term : t.add(surrogate, term);
      }
    if (surrogate >= 0) {
      t.backward(t.scale(surrogate, 1.0 / static_cast<double>(worst.size())));
      detail::sgd_axpy(t, plv.w1, out.policy.w1, -cfg.learning_rate);
      detail::sgd_axpy(t, plv.b1, out.policy.b1, -cfg.learning_rate);
      detail::sgd_axpy(t, plv.w2, out.policy.w2, -cfg.learning_rate);
      detail::sgd_axpy(t, plv.b2, out.policy.b2, -cfg.learning_rate);
      t.value_mut(plv.w1) = out.policy.w1;
      t.value_mut(plv.b1) = out.policy.b1;
      t.value_mut(plv.w2) = out.policy.w2;
      t.value_mut(plv.b2) = out.policy.b2;
    }
  }
  return out;
}

// ---- consistency probe -------------------------------------------------------------

struct ProbeRow {
  int n = 0;
  double median_tv2 = 0.0;
  std::vector<double> per_seed;
};

struct ProbeConfig {
  int n_agents = 2;
  int eval_points = 400;
  double state_range = 1.0;
  MleConfig mle;  // per-fit settings; seed and sigma are overridden per fit
  std::uint64_t seed = 0;

  void validate() const {
    if (n_agents < 1) throw std::invalid_argument("ProbeConfig: n_agents must be >= 1");
    if (eval_points < 1) throw std::invalid_argument("ProbeConfig: eval_points must be >= 1");
    if (!(state_range > 0.0)) throw std::invalid_argument("ProbeConfig: bad state_range");
    mle.validate();
  }
};

// For each sample size: fit on fresh noisy data from the true model and
// report the mean squared TV to the truth on a shared held-out evaluation
// set, per seed and as the median across seeds.
inline std::vector<ProbeRow> mle_consistency_probe(const DynamicsModel& truth,
                                                   const std::vector<int>& sizes, int n_seeds,
                                                   const ProbeConfig& cfg) {
  truth.validate();
  cfg.validate();
  if (sizes.empty()) throw std::invalid_argument("mle_consistency_probe: no sizes");
  if (n_seeds < 1) throw std::invalid_argument("mle_consistency_probe: n_seeds must be >= 1");
  const int d_s = truth.params.d - kActionCount;
  if (d_s < 1) throw std::invalid_argument("mle_consistency_probe: model has too few channels");

  auto ge = make_rng(cfg.seed, 6);
  std::vector<Matrix> eval_s;
  std::vector<JointAction> eval_a;
  for (int i = 0; i < cfg.eval_points; ++i) {
    Matrix s(cfg.n_agents, d_s);
    for (double& v : s.a) v = uniform(ge, -cfg.state_range, cfg.state_range);
    JointAction a(static_cast<std::size_t>(cfg.n_agents));
    for (int& x : a) x = uniform_int(ge, 0, kActionCount - 1);
    eval_s.push_back(std::move(s));
    eval_a.push_back(std::move(a));
  }

  std::vector<ProbeRow> rows;
  for (std::size_t si = 0; si < sizes.size(); ++si) {
    if (sizes[si] < 1) throw std::invalid_argument("mle_consistency_probe: bad size entry");
    ProbeRow row;
    row.n = sizes[si];
    for (int k = 0; k < n_seeds; ++k) {
      const std::uint64_t sk =
          derive_seed(cfg.seed, 100 * (static_cast<std::uint64_t>(si) + 1) +
                                    static_cast<std::uint64_t>(k));
      const Dataset data =
          synth_dataset(truth, cfg.n_agents, sizes[si], cfg.state_range, truth.sigma, sk);
      MleConfig c = cfg.mle;
      c.seed = sk;
      c.sigma = truth.sigma;
      c.fit_sigma = false;
      const FitResult fr = fit_mle(data, c);
      double acc = 0.0;
      for (int i = 0; i < cfg.eval_points; ++i) {
        const double tv = tv_point(fr.model, truth, eval_s[static_cast<std::size_t>(i)],
                                   eval_a[static_cast<std::size_t>(i)]);
        acc += tv * tv;
      }
      row.per_seed.push_back(acc / static_cast<double>(cfg.eval_points));
    }
    std::vector<double> sorted = row.per_seed;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    row.median_tv2 =
        sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---- environment reward from observations -------------------------------------------

// Cooperative-navigation reward recomputed from one observation matrix: row
// 0's position plus its sorted offsets reconstruct the landmark set; each
// row's leading two entries give that agent's position.
inline double reward_from_observation(const Matrix& obs, int n_landmarks) {
  if (n_landmarks < 1)
    throw std::invalid_argument("reward_from_observation: n_landmarks must be >= 1");
  if (obs.rows < 1 || obs.cols != 4 + 2 * n_landmarks)
    throw std::invalid_argument("reward_from_observation: observation shape mismatch");
  double total = 0.0;
  for (int j = 0; j < n_landmarks; ++j) {
    const double lx = obs(0, 0) + obs(0, 4 + 2 * j);
    const double ly = obs(0, 1) + obs(0, 5 + 2 * j);
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < obs.rows; ++i)
      best = std::min(best, std::hypot(obs(i, 0) - lx, obs(i, 1) - ly));
    total -= best;
  }
  return total;
}

}  // namespace setrl
