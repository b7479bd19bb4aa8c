// Declarative run configuration for the CLI: a JSON document with sections
// env, dataset, network, train_mf, train_mb, bounds, approx_gap.  Every field
// has a printed default, unknown keys are rejected, and the effective config
// is echoed to the run directory before execution.  Precedence: struct
// defaults < config file < environment overrides (threads, run root) < flags.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "setrl/approx_gap.hpp"
#include "setrl/bounds.hpp"
#include "setrl/budget.hpp"
#include "setrl/dataset.hpp"
#include "setrl/env.hpp"
#include "setrl/model_based.hpp"
#include "setrl/model_free.hpp"

namespace setrl {

using ConfigJson = nlohmann::ordered_json;

// Violations of the config schema: unknown keys, wrong types, bad enum
// strings, missing mandatory seed.  The CLI maps this to its own exit code.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- enum <-> string ------------------------------------------------------------

inline std::string to_string(BehaviorPolicy b) {
  return b == BehaviorPolicy::kUniform ? "uniform" : "eps_greedy_nearest";
}

inline BehaviorPolicy behavior_from_string(const std::string& s) {
  if (s == "uniform") return BehaviorPolicy::kUniform;
  if (s == "eps_greedy_nearest") return BehaviorPolicy::kEpsGreedyNearest;
  throw SchemaError("config: unknown behavior '" + s +
                    "' (expected uniform | eps_greedy_nearest)");
}

inline std::string to_string(Subsample s) {
  return s == Subsample::kAll ? "all" : "stationary_tail";
}

inline Subsample subsample_from_string(const std::string& s) {
  if (s == "all") return Subsample::kAll;
  if (s == "stationary_tail") return Subsample::kStationaryTail;
  throw SchemaError("config: unknown subsample '" + s + "' (expected all | stationary_tail)");
}

inline std::string to_string(Arch a) {
  switch (a) {
    case Arch::kSetTransformer: return "set_transformer";
    case Arch::kDeepSets: return "deep_sets";
    default: return "mlp";
  }
}

inline Arch arch_from_string(const std::string& s) {
  if (s == "set_transformer") return Arch::kSetTransformer;
  if (s == "deep_sets") return Arch::kDeepSets;
  if (s == "mlp") return Arch::kMlp;
  throw SchemaError("config: unknown arch '" + s +
                    "' (expected set_transformer | deep_sets | mlp)");
}

// ---- config sections ------------------------------------------------------------

struct DatasetSection {
  int episodes = 2000;
  BehaviorPolicy behavior = BehaviorPolicy::kUniform;
  Subsample subsample = Subsample::kAll;
  double gamma = 0.95;
  std::string path;  // input for train-*, output override for collect; empty = run dir
};

struct NetworkSection {
  Arch arch = Arch::kSetTransformer;
  int st_layers = 2;
  int st_m = 4;
  int ds_width = 32;
  int mlp_hidden = 64;
  int policy_hidden = 64;
  double v_max = 2.0;
  NormBudget budget;
};

struct TrainMfSection {
  double lambda = 1.0;
  double epsilon = 0.0;
  double learning_rate = 1e-3;
  int batch_size = 1024;
  int outer_iters = 200;
  int f_steps = 20;
  int pi_steps = 5;
  int k_samples = 4;
  int inner_steps = 10;
  int penalty_every = 1;
  int bank_size = 64;
  int bank_per_step = 8;
  double gamma = 0.95;
  double reward_scale = 1.0;
  bool exact_expectations = false;
};

struct TrainMbSection {
  int st_layers = 2;
  int st_m = 4;
  double sigma = 0.01;
  bool fit_sigma = false;
  double learning_rate = 0.05;
  int epochs = 60;
  int batch_size = 0;
  double divergence_factor = 50.0;
  int n_members = 5;
  double zeta = -1.0;  // < 0: prescribe from the bounds section at the dataset size
  int policy_iters = 60;
  double policy_learning_rate = 0.05;
  int policy_hidden = 32;
  int bank_size = 64;
  int rollout_horizon = 10;
  int n_rollouts = 256;
  double rollout_gamma = 0.95;
  double noise_scale = -1.0;
  // mle-probe settings (consistency study on synthetic data)
  std::vector<int> probe_sizes = {500, 1000, 2000, 4000};
  int probe_seeds = 3;
  int probe_agents = 2;
  int probe_d_s = 2;
  int probe_eval_points = 400;
  double probe_state_range = 1.0;
  double probe_truth_sigma = 0.05;
  int probe_layers = 1;
  int probe_m = 2;
  double probe_learning_rate = 0.08;
  int probe_epochs = 25;
  int probe_batch = 64;
};

struct GapSection {
  GapTask task;
  GapFitBudget budget;
  std::vector<int> widths = {1, 2, 4, 16};
  int seeds = 3;  // sweep repetitions; row seeds are base seed + 0..seeds-1
};

struct RunConfig {
  std::uint64_t seed = 0;
  bool has_seed = false;  // seed is mandatory; tracked so flags can supply it
  int threads = 1;
  EnvConfig env;
  DatasetSection dataset;
  NetworkSection network;
  TrainMfSection train_mf;
  TrainMbSection train_mb;
  BoundInputs bounds;
  GapSection approx_gap;
};

// ---- typed getters ----------------------------------------------------------------

namespace detail {

inline void require_object(const ConfigJson& v, const std::string& path) {
  if (!v.is_object()) throw SchemaError("config: " + path + " must be an object");
}

inline int get_int(const ConfigJson& v, const std::string& path) {
  if (!v.is_number_integer()) throw SchemaError("config: " + path + " must be an integer");
  return v.get<int>();
}

inline std::uint64_t get_u64(const ConfigJson& v, const std::string& path) {
  if (!v.is_number_unsigned())
    throw SchemaError("config: " + path + " must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

inline double get_num(const ConfigJson& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError("config: " + path + " must be a number");
  return v.get<double>();
}

inline bool get_bool(const ConfigJson& v, const std::string& path) {
  if (!v.is_boolean()) throw SchemaError("config: " + path + " must be a boolean");
  return v.get<bool>();
}

inline std::string get_str(const ConfigJson& v, const std::string& path) {
  if (!v.is_string()) throw SchemaError("config: " + path + " must be a string");
  return v.get<std::string>();
}

inline std::vector<int> get_int_list(const ConfigJson& v, const std::string& path) {
  if (!v.is_array()) throw SchemaError("config: " + path + " must be an array of integers");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer())
      throw SchemaError("config: " + path + " must be an array of integers");
    out.push_back(e.get<int>());
  }
  return out;
}

}  // namespace detail

// ---- per-section parsing ------------------------------------------------------------

namespace detail {

inline void parse_env(const ConfigJson& j, EnvConfig& c) {
  require_object(j, "env");
  for (const auto& [k, v] : j.items()) {
    if (k == "n_agents") c.n_agents = get_int(v, "env.n_agents");
    else if (k == "n_landmarks") c.n_landmarks = get_int(v, "env.n_landmarks");
    else if (k == "force") c.force = get_num(v, "env.force");
    else if (k == "dt") c.dt = get_num(v, "env.dt");
    else if (k == "damping") c.damping = get_num(v, "env.damping");
    else if (k == "horizon") c.horizon = get_int(v, "env.horizon");
    else throw SchemaError("config: unknown key env." + k);
  }
}

inline void parse_dataset(const ConfigJson& j, DatasetSection& c) {
  require_object(j, "dataset");
  for (const auto& [k, v] : j.items()) {
    if (k == "episodes") c.episodes = get_int(v, "dataset.episodes");
    else if (k == "behavior") c.behavior = behavior_from_string(get_str(v, "dataset.behavior"));
    else if (k == "subsample")
      c.subsample = subsample_from_string(get_str(v, "dataset.subsample"));
    else if (k == "gamma") c.gamma = get_num(v, "dataset.gamma");
    else if (k == "path") c.path = get_str(v, "dataset.path");
    else throw SchemaError("config: unknown key dataset." + k);
  }
}

inline void parse_budget(const ConfigJson& j, NormBudget& c) {
  require_object(j, "network.budget");
  for (const auto& [k, v] : j.items()) {
    if (k == "B_a") c.B_a = get_num(v, "network.budget.B_a");
    else if (k == "B_b") c.B_b = get_num(v, "network.budget.B_b");
    else if (k == "B_QK") c.B_QK = get_num(v, "network.budget.B_QK");
    else if (k == "B_V") c.B_V = get_num(v, "network.budget.B_V");
    else if (k == "B_w") c.B_w = get_num(v, "network.budget.B_w");
    else if (k == "p") c.p = get_num(v, "network.budget.p");
    else if (k == "q") c.q = get_num(v, "network.budget.q");
    else throw SchemaError("config: unknown key network.budget." + k);
  }
}

inline void parse_network(const ConfigJson& j, NetworkSection& c) {
  require_object(j, "network");
  for (const auto& [k, v] : j.items()) {
    if (k == "arch") c.arch = arch_from_string(get_str(v, "network.arch"));
    else if (k == "st_layers") c.st_layers = get_int(v, "network.st_layers");
    else if (k == "st_m") c.st_m = get_int(v, "network.st_m");
    else if (k == "ds_width") c.ds_width = get_int(v, "network.ds_width");
    else if (k == "mlp_hidden") c.mlp_hidden = get_int(v, "network.mlp_hidden");
    else if (k == "policy_hidden") c.policy_hidden = get_int(v, "network.policy_hidden");
    else if (k == "v_max") c.v_max = get_num(v, "network.v_max");
    else if (k == "budget") parse_budget(v, c.budget);
    else throw SchemaError("config: unknown key network." + k);
  }
}

inline void parse_train_mf(const ConfigJson& j, TrainMfSection& c) {
  require_object(j, "train_mf");
  for (const auto& [k, v] : j.items()) {
    if (k == "lambda") c.lambda = get_num(v, "train_mf.lambda");
    else if (k == "epsilon") c.epsilon = get_num(v, "train_mf.epsilon");
    else if (k == "learning_rate") c.learning_rate = get_num(v, "train_mf.learning_rate");
    else if (k == "batch_size") c.batch_size = get_int(v, "train_mf.batch_size");
    else if (k == "outer_iters") c.outer_iters = get_int(v, "train_mf.outer_iters");
    else if (k == "f_steps") c.f_steps = get_int(v, "train_mf.f_steps");
    else if (k == "pi_steps") c.pi_steps = get_int(v, "train_mf.pi_steps");
    else if (k == "k_samples") c.k_samples = get_int(v, "train_mf.k_samples");
    else if (k == "inner_steps") c.inner_steps = get_int(v, "train_mf.inner_steps");
    else if (k == "penalty_every") c.penalty_every = get_int(v, "train_mf.penalty_every");
    else if (k == "bank_size") c.bank_size = get_int(v, "train_mf.bank_size");
    else if (k == "bank_per_step") c.bank_per_step = get_int(v, "train_mf.bank_per_step");
    else if (k == "gamma") c.gamma = get_num(v, "train_mf.gamma");
    else if (k == "reward_scale") c.reward_scale = get_num(v, "train_mf.reward_scale");
    else if (k == "exact_expectations")
      c.exact_expectations = get_bool(v, "train_mf.exact_expectations");
    else throw SchemaError("config: unknown key train_mf." + k);
  }
}

inline void parse_train_mb(const ConfigJson& j, TrainMbSection& c) {
  require_object(j, "train_mb");
  for (const auto& [k, v] : j.items()) {
    if (k == "st_layers") c.st_layers = get_int(v, "train_mb.st_layers");
    else if (k == "st_m") c.st_m = get_int(v, "train_mb.st_m");
    else if (k == "sigma") c.sigma = get_num(v, "train_mb.sigma");
    else if (k == "fit_sigma") c.fit_sigma = get_bool(v, "train_mb.fit_sigma");
    else if (k == "learning_rate") c.learning_rate = get_num(v, "train_mb.learning_rate");
    else if (k == "epochs") c.epochs = get_int(v, "train_mb.epochs");
    else if (k == "batch_size") c.batch_size = get_int(v, "train_mb.batch_size");
    else if (k == "divergence_factor")
      c.divergence_factor = get_num(v, "train_mb.divergence_factor");
    else if (k == "n_members") c.n_members = get_int(v, "train_mb.n_members");
    else if (k == "zeta") c.zeta = get_num(v, "train_mb.zeta");
    else if (k == "policy_iters") c.policy_iters = get_int(v, "train_mb.policy_iters");
    else if (k == "policy_learning_rate")
      c.policy_learning_rate = get_num(v, "train_mb.policy_learning_rate");
    else if (k == "policy_hidden") c.policy_hidden = get_int(v, "train_mb.policy_hidden");
    else if (k == "bank_size") c.bank_size = get_int(v, "train_mb.bank_size");
    else if (k == "rollout_horizon") c.rollout_horizon = get_int(v, "train_mb.rollout_horizon");
    else if (k == "n_rollouts") c.n_rollouts = get_int(v, "train_mb.n_rollouts");
    else if (k == "rollout_gamma") c.rollout_gamma = get_num(v, "train_mb.rollout_gamma");
    else if (k == "noise_scale") c.noise_scale = get_num(v, "train_mb.noise_scale");
    else if (k == "probe_sizes") c.probe_sizes = get_int_list(v, "train_mb.probe_sizes");
    else if (k == "probe_seeds") c.probe_seeds = get_int(v, "train_mb.probe_seeds");
    else if (k == "probe_agents") c.probe_agents = get_int(v, "train_mb.probe_agents");
    else if (k == "probe_d_s") c.probe_d_s = get_int(v, "train_mb.probe_d_s");
    else if (k == "probe_eval_points")
      c.probe_eval_points = get_int(v, "train_mb.probe_eval_points");
    else if (k == "probe_state_range")
      c.probe_state_range = get_num(v, "train_mb.probe_state_range");
    else if (k == "probe_truth_sigma")
      c.probe_truth_sigma = get_num(v, "train_mb.probe_truth_sigma");
    else if (k == "probe_layers") c.probe_layers = get_int(v, "train_mb.probe_layers");
    else if (k == "probe_m") c.probe_m = get_int(v, "train_mb.probe_m");
    else if (k == "probe_learning_rate")
      c.probe_learning_rate = get_num(v, "train_mb.probe_learning_rate");
    else if (k == "probe_epochs") c.probe_epochs = get_int(v, "train_mb.probe_epochs");
    else if (k == "probe_batch") c.probe_batch = get_int(v, "train_mb.probe_batch");
    else throw SchemaError("config: unknown key train_mb." + k);
  }
}

inline void parse_bounds(const ConfigJson& j, BoundInputs& c) {
  require_object(j, "bounds");
  for (const auto& [k, v] : j.items()) {
    if (k == "n") c.n = get_num(v, "bounds.n");
    else if (k == "delta") c.delta = get_num(v, "bounds.delta");
    else if (k == "gamma") c.gamma = get_num(v, "bounds.gamma");
    else if (k == "v_max") c.v_max = get_num(v, "bounds.v_max");
    else if (k == "r_max") c.r_max = get_num(v, "bounds.r_max");
    else if (k == "m") c.m = get_int(v, "bounds.m");
    else if (k == "L") c.L = get_int(v, "bounds.L");
    else if (k == "d") c.d = get_int(v, "bounds.d");
    else if (k == "N") c.N = get_int(v, "bounds.N");
    else if (k == "covering_number_log")
      c.covering_number_log = get_num(v, "bounds.covering_number_log");
    else if (k == "C_F") c.C_F = get_num(v, "bounds.C_F");
    else if (k == "C_M") c.C_M = get_num(v, "bounds.C_M");
    else if (k == "eps_F") c.eps_F = get_num(v, "bounds.eps_F");
    else if (k == "eps_FF") c.eps_FF = get_num(v, "bounds.eps_FF");
    else if (k == "sigma") c.sigma = get_num(v, "bounds.sigma");
    else if (k == "c1") c.c1 = get_num(v, "bounds.c1");
    else throw SchemaError("config: unknown key bounds." + k);
  }
}

inline void parse_approx_gap(const ConfigJson& j, GapSection& c) {
  require_object(j, "approx_gap");
  for (const auto& [k, v] : j.items()) {
    if (k == "d") c.task.d = get_int(v, "approx_gap.d");
    else if (k == "N") c.task.N = get_int(v, "approx_gap.N");
    else if (k == "k") c.task.k = get_num(v, "approx_gap.k");
    else if (k == "train_points") c.task.train_points = get_int(v, "approx_gap.train_points");
    else if (k == "eval_points") c.task.eval_points = get_int(v, "approx_gap.eval_points");
    else if (k == "steps") c.budget.steps = get_int(v, "approx_gap.steps");
    else if (k == "learning_rate")
      c.budget.learning_rate = get_num(v, "approx_gap.learning_rate");
    else if (k == "momentum") c.budget.momentum = get_num(v, "approx_gap.momentum");
    else if (k == "warmup_frac") c.budget.warmup_frac = get_num(v, "approx_gap.warmup_frac");
    else if (k == "decay1_frac") c.budget.decay1_frac = get_num(v, "approx_gap.decay1_frac");
    else if (k == "decay2_frac") c.budget.decay2_frac = get_num(v, "approx_gap.decay2_frac");
    else if (k == "snapshot_frac")
      c.budget.snapshot_frac = get_num(v, "approx_gap.snapshot_frac");
    else if (k == "grad_clip") c.budget.grad_clip = get_num(v, "approx_gap.grad_clip");
    else if (k == "restarts") c.budget.restarts = get_int(v, "approx_gap.restarts");
    else if (k == "occam_band") c.budget.occam_band = get_num(v, "approx_gap.occam_band");
    else if (k == "divergence_factor")
      c.budget.divergence_factor = get_num(v, "approx_gap.divergence_factor");
    else if (k == "widths") c.widths = get_int_list(v, "approx_gap.widths");
    else if (k == "seeds") c.seeds = get_int(v, "approx_gap.seeds");
    else throw SchemaError("config: unknown key approx_gap." + k);
  }
}

}  // namespace detail

// ---- whole-document parsing -----------------------------------------------------

inline RunConfig parse_run_config(const ConfigJson& j) {
  detail::require_object(j, "top level");
  RunConfig rc;
  for (const auto& [k, v] : j.items()) {
    if (k == "seed") {
      rc.seed = detail::get_u64(v, "seed");
      rc.has_seed = true;
    } else if (k == "threads") {
      rc.threads = detail::get_int(v, "threads");
    } else if (k == "env") detail::parse_env(v, rc.env);
    else if (k == "dataset") detail::parse_dataset(v, rc.dataset);
    else if (k == "network") detail::parse_network(v, rc.network);
    else if (k == "train_mf") detail::parse_train_mf(v, rc.train_mf);
    else if (k == "train_mb") detail::parse_train_mb(v, rc.train_mb);
    else if (k == "bounds") detail::parse_bounds(v, rc.bounds);
    else if (k == "approx_gap") detail::parse_approx_gap(v, rc.approx_gap);
    else throw SchemaError("config: unknown key " + k);
  }
  if (rc.threads < 1) throw SchemaError("config: threads must be >= 1");
  return rc;
}

// Called after flag merging; the CLI cannot proceed without a seed.
inline void require_seed(const RunConfig& rc) {
  if (!rc.has_seed)
    throw SchemaError("config: seed is mandatory (set \"seed\" in the config or pass --seed)");
}

// ---- emission (defaults and effective-config echo) --------------------------------

inline ConfigJson to_config_json(const RunConfig& rc) {
  ConfigJson j;
  j["seed"] = rc.seed;
  j["threads"] = rc.threads;
  j["env"] = {{"n_agents", rc.env.n_agents},   {"n_landmarks", rc.env.n_landmarks},
              {"force", rc.env.force},         {"dt", rc.env.dt},
              {"damping", rc.env.damping},     {"horizon", rc.env.horizon}};
  j["dataset"] = {{"episodes", rc.dataset.episodes},
                  {"behavior", to_string(rc.dataset.behavior)},
                  {"subsample", to_string(rc.dataset.subsample)},
                  {"gamma", rc.dataset.gamma},
                  {"path", rc.dataset.path}};
  j["network"] = {{"arch", to_string(rc.network.arch)},
                  {"st_layers", rc.network.st_layers},
                  {"st_m", rc.network.st_m},
                  {"ds_width", rc.network.ds_width},
                  {"mlp_hidden", rc.network.mlp_hidden},
                  {"policy_hidden", rc.network.policy_hidden},
                  {"v_max", rc.network.v_max},
                  {"budget",
                   {{"B_a", rc.network.budget.B_a},
                    {"B_b", rc.network.budget.B_b},
                    {"B_QK", rc.network.budget.B_QK},
                    {"B_V", rc.network.budget.B_V},
                    {"B_w", rc.network.budget.B_w},
                    {"p", rc.network.budget.p},
                    {"q", rc.network.budget.q}}}};
  j["train_mf"] = {{"lambda", rc.train_mf.lambda},
                   {"epsilon", rc.train_mf.epsilon},
                   {"learning_rate", rc.train_mf.learning_rate},
                   {"batch_size", rc.train_mf.batch_size},
                   {"outer_iters", rc.train_mf.outer_iters},
                   {"f_steps", rc.train_mf.f_steps},
                   {"pi_steps", rc.train_mf.pi_steps},
                   {"k_samples", rc.train_mf.k_samples},
                   {"inner_steps", rc.train_mf.inner_steps},
                   {"penalty_every", rc.train_mf.penalty_every},
                   {"bank_size", rc.train_mf.bank_size},
                   {"bank_per_step", rc.train_mf.bank_per_step},
                   {"gamma", rc.train_mf.gamma},
                   {"reward_scale", rc.train_mf.reward_scale},
                   {"exact_expectations", rc.train_mf.exact_expectations}};
  j["train_mb"] = {{"st_layers", rc.train_mb.st_layers},
                   {"st_m", rc.train_mb.st_m},
                   {"sigma", rc.train_mb.sigma},
                   {"fit_sigma", rc.train_mb.fit_sigma},
                   {"learning_rate", rc.train_mb.learning_rate},
                   {"epochs", rc.train_mb.epochs},
                   {"batch_size", rc.train_mb.batch_size},
                   {"divergence_factor", rc.train_mb.divergence_factor},
                   {"n_members", rc.train_mb.n_members},
                   {"zeta", rc.train_mb.zeta},
                   {"policy_iters", rc.train_mb.policy_iters},
                   {"policy_learning_rate", rc.train_mb.policy_learning_rate},
                   {"policy_hidden", rc.train_mb.policy_hidden},
                   {"bank_size", rc.train_mb.bank_size},
                   {"rollout_horizon", rc.train_mb.rollout_horizon},
                   {"n_rollouts", rc.train_mb.n_rollouts},
                   {"rollout_gamma", rc.train_mb.rollout_gamma},
                   {"noise_scale", rc.train_mb.noise_scale},
                   {"probe_sizes", rc.train_mb.probe_sizes},
                   {"probe_seeds", rc.train_mb.probe_seeds},
                   {"probe_agents", rc.train_mb.probe_agents},
                   {"probe_d_s", rc.train_mb.probe_d_s},
                   {"probe_eval_points", rc.train_mb.probe_eval_points},
                   {"probe_state_range", rc.train_mb.probe_state_range},
                   {"probe_truth_sigma", rc.train_mb.probe_truth_sigma},
                   {"probe_layers", rc.train_mb.probe_layers},
                   {"probe_m", rc.train_mb.probe_m},
                   {"probe_learning_rate", rc.train_mb.probe_learning_rate},
                   {"probe_epochs", rc.train_mb.probe_epochs},
                   {"probe_batch", rc.train_mb.probe_batch}};
  j["bounds"] = {{"n", rc.bounds.n},
                 {"delta", rc.bounds.delta},
                 {"gamma", rc.bounds.gamma},
                 {"v_max", rc.bounds.v_max},
                 {"r_max", rc.bounds.r_max},
                 {"m", rc.bounds.m},
                 {"L", rc.bounds.L},
                 {"d", rc.bounds.d},
                 {"N", rc.bounds.N},
                 {"covering_number_log", rc.bounds.covering_number_log},
                 {"C_F", rc.bounds.C_F},
                 {"C_M", rc.bounds.C_M},
                 {"eps_F", rc.bounds.eps_F},
                 {"eps_FF", rc.bounds.eps_FF},
                 {"sigma", rc.bounds.sigma},
                 {"c1", rc.bounds.c1}};
  j["approx_gap"] = {{"d", rc.approx_gap.task.d},
                     {"N", rc.approx_gap.task.N},
                     {"k", rc.approx_gap.task.k},
                     {"train_points", rc.approx_gap.task.train_points},
                     {"eval_points", rc.approx_gap.task.eval_points},
                     {"steps", rc.approx_gap.budget.steps},
                     {"learning_rate", rc.approx_gap.budget.learning_rate},
                     {"momentum", rc.approx_gap.budget.momentum},
                     {"warmup_frac", rc.approx_gap.budget.warmup_frac},
                     {"decay1_frac", rc.approx_gap.budget.decay1_frac},
                     {"decay2_frac", rc.approx_gap.budget.decay2_frac},
                     {"snapshot_frac", rc.approx_gap.budget.snapshot_frac},
                     {"grad_clip", rc.approx_gap.budget.grad_clip},
                     {"restarts", rc.approx_gap.budget.restarts},
                     {"occam_band", rc.approx_gap.budget.occam_band},
                     {"divergence_factor", rc.approx_gap.budget.divergence_factor},
                     {"widths", rc.approx_gap.widths},
                     {"seeds", rc.approx_gap.seeds}};
  return j;
}

// Round-trip sanity: the default document parses back to itself.
inline ConfigJson default_config_json() { return to_config_json(RunConfig{}); }

// ---- assembled module configs ------------------------------------------------------

inline ModelFreeConfig model_free_config(const RunConfig& rc) {
  ModelFreeConfig c;
  c.lambda = rc.train_mf.lambda;
  c.epsilon = rc.train_mf.epsilon;
  c.learning_rate = rc.train_mf.learning_rate;
  c.batch_size = rc.train_mf.batch_size;
  c.outer_iters = rc.train_mf.outer_iters;
  c.f_steps = rc.train_mf.f_steps;
  c.pi_steps = rc.train_mf.pi_steps;
  c.k_samples = rc.train_mf.k_samples;
  c.inner_steps = rc.train_mf.inner_steps;
  c.penalty_every = rc.train_mf.penalty_every;
  c.bank_size = rc.train_mf.bank_size;
  c.bank_per_step = rc.train_mf.bank_per_step;
  c.gamma = rc.train_mf.gamma;
  c.v_max = rc.network.v_max;
  c.reward_scale = rc.train_mf.reward_scale;
  c.exact_expectations = rc.train_mf.exact_expectations;
  c.budget = rc.network.budget;
  c.env = rc.env;
  c.seed = rc.seed;
  c.st_layers = rc.network.st_layers;
  c.st_m = rc.network.st_m;
  c.ds_width = rc.network.ds_width;
  c.mlp_hidden = rc.network.mlp_hidden;
  c.policy_hidden = rc.network.policy_hidden;
  return c;
}

// The dynamics class is Frobenius-budgeted: p and q are pinned to 2 and the
// remaining ceilings are taken from the shared network budget.
inline MleConfig mle_config(const RunConfig& rc) {
  MleConfig c;
  c.st_layers = rc.train_mb.st_layers;
  c.st_m = rc.train_mb.st_m;
  c.sigma = rc.train_mb.sigma;
  c.fit_sigma = rc.train_mb.fit_sigma;
  c.learning_rate = rc.train_mb.learning_rate;
  c.epochs = rc.train_mb.epochs;
  c.batch_size = rc.train_mb.batch_size;
  c.divergence_factor = rc.train_mb.divergence_factor;
  c.budget = rc.network.budget;
  c.budget.p = 2.0;
  c.budget.q = 2.0;
  c.seed = rc.seed;
  return c;
}

inline PessimisticConfig pessimistic_config(const RunConfig& rc) {
  PessimisticConfig c;
  c.policy_iters = rc.train_mb.policy_iters;
  c.learning_rate = rc.train_mb.policy_learning_rate;
  c.policy_hidden = rc.train_mb.policy_hidden;
  c.rollout.horizon = rc.train_mb.rollout_horizon;
  c.rollout.n_rollouts = rc.train_mb.n_rollouts;
  c.rollout.gamma = rc.train_mb.rollout_gamma;
  c.rollout.noise_scale = rc.train_mb.noise_scale;
  c.seed = rc.seed;
  return c;
}

inline ProbeConfig probe_config(const RunConfig& rc) {
  ProbeConfig c;
  c.n_agents = rc.train_mb.probe_agents;
  c.eval_points = rc.train_mb.probe_eval_points;
  c.state_range = rc.train_mb.probe_state_range;
  c.mle = mle_config(rc);
  c.mle.st_layers = rc.train_mb.probe_layers;
  c.mle.st_m = rc.train_mb.probe_m;
  c.mle.learning_rate = rc.train_mb.probe_learning_rate;
  c.mle.epochs = rc.train_mb.probe_epochs;
  c.mle.batch_size = rc.train_mb.probe_batch;
  c.seed = rc.seed;
  return c;
}

}  // namespace setrl
