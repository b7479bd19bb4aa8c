// setrl: single binary exposing the toolkit workflows.  Every run loads the
// declarative JSON config (defaults < config file < env overrides < flags),
// echoes the effective config into a fresh timestamped run directory, then
// writes CSV logs, checkpoints, and a summary report there.  Exit codes:
// 0 success, 2 config schema violation (including bad values), 3 missing
// input file, 4 training divergence abort, 1 anything else.
#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "setrl/approx_gap.hpp"
#include "setrl/bounds.hpp"
#include "setrl/checkpoint.hpp"
#include "setrl/config.hpp"
#include "setrl/dataset.hpp"
#include "setrl/env.hpp"
#include "setrl/model_based.hpp"
#include "setrl/model_free.hpp"
#include "setrl/verify.hpp"

namespace {

using namespace setrl;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitSchema = 2;
constexpr int kExitMissingFile = 3;
constexpr int kExitDiverged = 4;

// Stable CSV headers (covered by golden-file tests).
constexpr const char* kTrainMfCsvHeader =
    "iter,value_estimate,bellman_loss,penalty,budget_ok,wall_ms";
constexpr const char* kTrainMbCsvHeader = "iter,pessimistic_value,argmin_member,member_values";
constexpr const char* kEvalCsvHeader = "episode,reward";
constexpr const char* kVerifyCsvHeader = "check,trials,violations,worst_margin";
constexpr const char* kGapCsvHeader = "d,width,seed,train_mse,sup_error,piece_count";
constexpr const char* kProbeCsvHeader = "n,median_tv2,per_seed";

// Distinct error class for the missing-input exit code.
struct MissingFile : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- shared plumbing ------------------------------------------------------------

struct CliArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  bool threads_set = false;
  std::string run_root;
  // subcommand extras
  std::string dataset_path;
  std::string policy_path;
  std::string arch;
  std::string behavior;
  std::string subsample;
  std::string out_path;
  int agents = 0;
  bool agents_set = false;
  int landmarks = 0;
  bool landmarks_set = false;
  int episodes = 0;
  bool episodes_set = false;
  int horizon = 0;
  bool horizon_set = false;
  int trials = 10000;
  int eval_episodes = 100;
};

std::string resolve_run_root(const CliArgs& a) {
  if (!a.run_root.empty()) return a.run_root;
  if (const char* env = std::getenv("SETRL_RUN_ROOT"); env != nullptr && *env != '\0')
    return env;
  return "runs";
}

RunConfig resolve_config(const CliArgs& a) {
  RunConfig rc;
  if (!a.config_path.empty()) {
    if (!fs::exists(a.config_path)) throw MissingFile("config file not found: " + a.config_path);
    std::ifstream is(a.config_path);
    ConfigJson j;
    try {
      j = ConfigJson::parse(is);
    } catch (const ConfigJson::parse_error& e) {
      throw SchemaError(std::string("config: not valid JSON: ") + e.what());
    }
    rc = parse_run_config(j);
  }
  if (const char* env = std::getenv("SETRL_THREADS");
      env != nullptr && *env != '\0' && !a.threads_set) {
    rc.threads = std::atoi(env);
    if (rc.threads < 1) throw SchemaError("config: SETRL_THREADS must be >= 1");
  }
  if (a.threads_set) {
    if (a.threads < 1) throw SchemaError("config: --threads must be >= 1");
    rc.threads = a.threads;
  }
  if (a.seed_set) {
    rc.seed = a.seed;
    rc.has_seed = true;
  }
  require_seed(rc);
  return rc;
}

std::string timestamp_utc() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
  return buf;
}

fs::path make_run_dir(const CliArgs& a, const std::string& name) {
  const fs::path base = fs::path(resolve_run_root(a)) / (name + "-" + timestamp_utc());
  fs::path dir = base;
  for (int i = 2; fs::exists(dir); ++i)
    dir = fs::path(base.string() + "-" + std::to_string(i));
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& body) {
  std::ofstream os(p);
  os << body;
  if (!os) throw std::runtime_error("write failed: " + p.string());
}

// Effective config echo; happens before any execution so failed runs are
// reconstructible too.
fs::path open_run(const CliArgs& a, const RunConfig& rc, const std::string& name) {
  const fs::path dir = make_run_dir(a, name);
  write_text(dir / "config.json", to_config_json(rc).dump(2) + "\n");
  std::printf("run_dir: %s\n", dir.string().c_str());
  return dir;
}

fs::path require_file(const std::string& p, const char* what) {
  if (p.empty())
    throw SchemaError(std::string("config: a ") + what +
                      " path is required (flag or config)");
  if (!fs::exists(p)) throw MissingFile(std::string(what) + " not found: " + p);
  return p;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---- subcommands ----------------------------------------------------------------

int cmd_collect(const CliArgs& a) {
  RunConfig rc = resolve_config(a);
  if (a.agents_set) rc.env.n_agents = a.agents;
  if (a.landmarks_set) rc.env.n_landmarks = a.landmarks;
  if (a.horizon_set) rc.env.horizon = a.horizon;
  if (a.episodes_set) rc.dataset.episodes = a.episodes;
  if (!a.behavior.empty()) rc.dataset.behavior = behavior_from_string(a.behavior);
  if (!a.subsample.empty()) rc.dataset.subsample = subsample_from_string(a.subsample);
  if (!a.out_path.empty()) rc.dataset.path = a.out_path;
  const fs::path dir = open_run(a, rc, "collect");

  const Dataset ds = collect(rc.env, rc.dataset.behavior, rc.dataset.episodes, rc.seed,
                             rc.dataset.subsample, rc.dataset.gamma);
  const fs::path out = rc.dataset.path.empty() ? dir / "dataset.bin" : fs::path(rc.dataset.path);
  save_dataset(out.string(), ds);
  const std::uint64_t sum = dataset_checksum(ds);

  char line[256];
  std::snprintf(line, sizeof line,
                "dataset: %s\ntransitions: %zu\nchecksum: %016llx\n", out.string().c_str(),
                ds.transitions.size(), static_cast<unsigned long long>(sum));
  std::fputs(line, stdout);
  write_text(dir / "summary.txt", line);
  return kExitOk;
}

int cmd_train_mf(const CliArgs& a) {
  RunConfig rc = resolve_config(a);
  if (!a.dataset_path.empty()) rc.dataset.path = a.dataset_path;
  if (!a.arch.empty()) rc.network.arch = arch_from_string(a.arch);
  const fs::path dspath = require_file(rc.dataset.path, "dataset");
  const fs::path dir = open_run(a, rc, "train-mf");

  const Dataset ds = load_dataset(dspath.string());
  const ModelFreeConfig cfg = model_free_config(rc);
  const ModelFreeResult res = train_model_free(ds, cfg, rc.network.arch);

  std::ostringstream csv;
  csv << kTrainMfCsvHeader << "\n";
  for (const IterLog& l : res.log) {
    char row[192];
    std::snprintf(row, sizeof row, "%d,%.9e,%.9e,%.9e,%d,%.3f\n", l.iter, l.value_estimate,
                  l.bellman_loss, l.penalty, l.budget_ok ? 1 : 0, l.wall_ms);
    csv << row;
  }
  write_text(dir / "train_mf_log.csv", csv.str());

  switch (res.arch) {
    case Arch::kSetTransformer:
      save_checkpoint((dir / "critic.ckpt").string(), res.st, /*value_head=*/true,
                      &cfg.budget);
      break;
    case Arch::kDeepSets:
      save_checkpoint((dir / "critic.ckpt").string(), res.ds, &cfg.budget);
      break;
    default: save_checkpoint((dir / "critic.ckpt").string(), res.mlp); break;
  }
  save_checkpoint((dir / "policy.ckpt").string(), res.policy);

  const double final_value = res.log.empty() ? 0.0 : res.log.back().value_estimate;
  std::ostringstream sum;
  sum << "arch: " << to_string(res.arch) << "\ndataset: " << dspath.string()
      << "\nchecksum: " << std::hex << dataset_checksum(ds) << std::dec
      << "\nouter_iters: " << res.log.size() << "\nfinal_value_estimate: " << final_value
      << "\n";
  write_text(dir / "summary.txt", sum.str());
  std::printf("final_value_estimate: %.6f\n", final_value);
  return kExitOk;
}

int cmd_train_mb(const CliArgs& a) {
  RunConfig rc = resolve_config(a);
  if (!a.dataset_path.empty()) rc.dataset.path = a.dataset_path;
  const fs::path dspath = require_file(rc.dataset.path, "dataset");
  const fs::path dir = open_run(a, rc, "train-mb");

  const Dataset ds = load_dataset(dspath.string());
  if (ds.meta.n_agents != rc.env.n_agents || ds.meta.n_landmarks != rc.env.n_landmarks)
    throw SchemaError("config: env section does not match the dataset (agents " +
                      std::to_string(rc.env.n_agents) + " vs " +
                      std::to_string(ds.meta.n_agents) + ", landmarks " +
                      std::to_string(rc.env.n_landmarks) + " vs " +
                      std::to_string(ds.meta.n_landmarks) + ")");

  const MleConfig cfg = mle_config(rc);
  const EnsembleFit ef = fit_ensemble(ds, cfg, rc.train_mb.n_members);

  double zeta = rc.train_mb.zeta;
  if (zeta < 0.0) {
    // Prescribed radius at the actual sample size and architecture.
    BoundInputs bin = rc.bounds;
    bin.n = static_cast<double>(ds.transitions.size());
    bin.N = ds.meta.n_agents;
    bin.d = ds.meta.d_s + kActionCount;
    bin.m = cfg.st_m;
    bin.L = cfg.st_layers;
    bin.sigma = cfg.sigma;
    zeta = prescribed_zeta(bin, cfg.budget);
  }

  const PessimisticConfig pc = pessimistic_config(rc);
  const std::vector<Matrix> bank = make_initial_bank(rc.env, rc.train_mb.bank_size, rc.seed);
  const int n_landmarks = ds.meta.n_landmarks;
  const PessimisticResult pr =
      pessimistic_policy(ef.ensemble, ds, zeta, pc, bank,
                         [n_landmarks](const Matrix& obs) {
                           return reward_from_observation(obs, n_landmarks);
                         });

  for (std::size_t k = 0; k < ef.ensemble.models.size(); ++k)
    save_checkpoint((dir / ("member_" + std::to_string(k) + ".ckpt")).string(),
                    ef.ensemble.models[k].params, /*value_head=*/false, &cfg.budget);
  save_checkpoint((dir / "policy.ckpt").string(), pr.policy);

  std::ostringstream csv;
  csv << kTrainMbCsvHeader << "\n";
  for (const MbIterLog& l : pr.log) {
    csv << l.iter << "," << l.pessimistic_value << "," << l.argmin_member << ",";
    for (std::size_t i = 0; i < l.member_values.size(); ++i)
      csv << (i ? ";" : "") << l.member_values[i];
    csv << "\n";
  }
  write_text(dir / "train_mb_log.csv", csv.str());

  std::ostringstream ens;
  ens << "members: " << ef.ensemble.models.size() << "\nmle_index: " << ef.ensemble.mle_index
      << "\nzeta: " << zeta << "\nsigma:";
  for (const DynamicsModel& m : ef.ensemble.models) ens << " " << m.sigma;
  ens << "\nfinal_losses:";
  for (double l : ef.final_losses) ens << " " << l;
  ens << "\nsurvivors:";
  for (int s : pr.survivors) ens << " " << s;
  ens << "\n";
  write_text(dir / "ensemble.txt", ens.str());

  const double final_value = pr.log.empty() ? 0.0 : pr.log.back().pessimistic_value;
  std::ostringstream sum;
  sum << "dataset: " << dspath.string() << "\nzeta: " << zeta
      << "\nsurvivors: " << pr.survivors.size() << "/" << ef.ensemble.models.size()
      << "\nfinal_pessimistic_value: " << final_value << "\n";
  write_text(dir / "summary.txt", sum.str());
  std::printf("final_pessimistic_value: %.6f\n", final_value);
  return kExitOk;
}

int cmd_eval(const CliArgs& a) {
  RunConfig rc = resolve_config(a);
  const fs::path polpath = require_file(a.policy_path, "policy checkpoint");
  const fs::path dir = open_run(a, rc, "eval");

  const PolicyParams pol = load_policy(polpath.string());
  if (pol.d_s != rc.env.d_s())
    throw SchemaError("config: env section does not match the policy checkpoint (d_s " +
                      std::to_string(rc.env.d_s()) + " vs " + std::to_string(pol.d_s) + ")");
  const int horizon = a.horizon_set ? a.horizon : rc.env.horizon;
  const EvalResult r =
      evaluate(NetworkActor{pol}, rc.env, a.eval_episodes, horizon, rc.seed);

  std::ostringstream csv;
  csv << kEvalCsvHeader << "\n";
  for (std::size_t e = 0; e < r.episode_rewards.size(); ++e)
    csv << e << "," << r.episode_rewards[e] << "\n";
  write_text(dir / "eval.csv", csv.str());

  char line[160];
  std::snprintf(line, sizeof line, "episodes: %zu\nmean_reward: %.6f\nstddev: %.6f\n",
                r.episode_rewards.size(), r.mean, r.stddev);
  write_text(dir / "summary.txt", line);
  std::fputs(line, stdout);
  return kExitOk;
}

int cmd_verify_bounds(const CliArgs& a) {
  RunConfig rc = resolve_config(a);
  if (a.trials < 1) throw SchemaError("config: --trials must be >= 1");
  const fs::path dir = open_run(a, rc, "verify-bounds");

  const std::vector<VerifyReport> reps = run_bound_verification(a.trials, rc.seed);
  std::ostringstream csv, out;
  csv << kVerifyCsvHeader << "\n";
  int total_violations = 0;
  for (const VerifyReport& r : reps) {
    char row[160];
    std::snprintf(row, sizeof row, "%s,%d,%d,%.6e\n", r.name.c_str(), r.trials, r.violations,
                  r.worst_margin);
    csv << row;
    char line[160];
    std::snprintf(line, sizeof line, "%-26s trials=%d violations=%d worst_margin=%.3e\n",
                  r.name.c_str(), r.trials, r.violations, r.worst_margin);
    out << line;
    total_violations += r.violations;
  }
  write_text(dir / "verify_bounds.csv", csv.str());
  write_text(dir / "summary.txt", out.str());
  std::fputs(out.str().c_str(), stdout);
  if (total_violations > 0) {
    std::fprintf(stderr, "verify-bounds: %d violation(s) found\n", total_violations);
    return kExitFailure;
  }
  std::puts("all checks passed: zero violations");
  return kExitOk;
}

int cmd_bounds_calc(const CliArgs& a) {
  RunConfig rc = resolve_config(a);
  const fs::path dir = open_run(a, rc, "bounds-calc");
  const BoundInputs& in = rc.bounds;
  const NormBudget& bud = rc.network.budget;

  std::ostringstream out;
  const auto emit = [&out](const char* name, const char* formula, double value) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s\n  formula: %s\n  value:   %.9e\n", name, formula,
                  value);
    out << buf;
  };
  emit("gen_bound_model_free",
       "32 V_max^2 [2 + gamma + 2(m+1) L^2 d^2 log(16 m d L B_V B_QK B_a B_b n / V_max)"
       " + 2(m+1) L d^2 log(B_w) + log(2 N(Pi,1/n,d_inf)/delta)]",
       gen_bound_model_free(in, bud));
  emit("gen_bound_model_based",
       "m L^2 d^2 log(N L m d B_V B_QK B_a B_b n) + log(1/delta)",
       gen_bound_model_based(in, bud));
  emit("subopt_bound_model_free",
       "sqrt(C_F (eps_F + eps_FF))/(1-gamma) + V_max sqrt(C_F)/((1-gamma) sqrt(n)) *"
       " sqrt(m L^2 d^2 log(m d L B_V B_QK B_a B_b B_w n / V_max)"
       " + log(2 N(Pi,1/n,d_inf)/delta))",
       subopt_bound_model_free(in, bud));
  emit("subopt_bound_model_based",
       "V_max/(1-gamma)^2 * sqrt(C_M (m L^2 d^2 log(N L m d B_V B_QK B_a B_b n)"
       " + log(1/delta)) / n)",
       subopt_bound_model_based(in, bud));

  write_text(dir / "bounds.txt", out.str());
  write_text(dir / "summary.txt", out.str());
  std::fputs(out.str().c_str(), stdout);
  return kExitOk;
}

int cmd_approx_gap(const CliArgs& a) {
  RunConfig rc = resolve_config(a);
  if (rc.approx_gap.seeds < 1) throw SchemaError("config: approx_gap.seeds must be >= 1");
  const fs::path dir = open_run(a, rc, "approx-gap");

  std::ostringstream csv;
  csv << kGapCsvHeader << "\n";
  std::vector<std::vector<double>> sups(rc.approx_gap.widths.size());
  for (int s = 0; s < rc.approx_gap.seeds; ++s) {
    const std::uint64_t seed = rc.seed + static_cast<std::uint64_t>(s);
    const std::vector<GapFitRow> rows = fit_deepsets_sweep(
        rc.approx_gap.task, rc.approx_gap.widths, rc.approx_gap.budget, seed);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      char row[192];
      std::snprintf(row, sizeof row, "%d,%d,%llu,%.12e,%.12e,%d\n", rc.approx_gap.task.d,
                    rows[i].width, static_cast<unsigned long long>(seed), rows[i].train_mse,
                    rows[i].sup_error, rows[i].piece_count);
      csv << row;
      sups[i].push_back(rows[i].sup_error);
    }
  }
  write_text(dir / "approx_gap.csv", csv.str());

  std::ostringstream sum;
  sum << "d: " << rc.approx_gap.task.d << "\nper-width median sup error over "
      << rc.approx_gap.seeds << " seed(s):\n";
  for (std::size_t i = 0; i < rc.approx_gap.widths.size(); ++i) {
    char line[96];
    std::snprintf(line, sizeof line, "  width %4d: %.6e\n", rc.approx_gap.widths[i],
                  median_of(sups[i]));
    sum << line;
  }
  write_text(dir / "summary.txt", sum.str());
  std::fputs(sum.str().c_str(), stdout);
  return kExitOk;
}

int cmd_mle_probe(const CliArgs& a) {
  RunConfig rc = resolve_config(a);
  const fs::path dir = open_run(a, rc, "mle-probe");

  DynamicsModel truth;
  auto g = make_rng(rc.seed, 77);
  truth.params =
      init_set_transformer(rc.train_mb.probe_layers, rc.train_mb.probe_m,
                           rc.train_mb.probe_d_s + kActionCount, 2.0, 1.0, truth.budget, g);
  truth.sigma = rc.train_mb.probe_truth_sigma;

  const ProbeConfig pc = probe_config(rc);
  const std::vector<ProbeRow> rows =
      mle_consistency_probe(truth, rc.train_mb.probe_sizes, rc.train_mb.probe_seeds, pc);

  std::ostringstream csv, sum;
  csv << kProbeCsvHeader << "\n";
  sum << "mean squared empirical TV to the true dynamics:\n";
  for (const ProbeRow& r : rows) {
    csv << r.n << "," << r.median_tv2 << ",";
    for (std::size_t i = 0; i < r.per_seed.size(); ++i)
      csv << (i ? ";" : "") << r.per_seed[i];
    csv << "\n";
    char line[96];
    std::snprintf(line, sizeof line, "  n %6d: median %.6e\n", r.n, r.median_tv2);
    sum << line;
  }
  write_text(dir / "probe.csv", csv.str());
  write_text(dir / "summary.txt", sum.str());
  std::fputs(sum.str().c_str(), stdout);
  return kExitOk;
}

template <typename Fn>
int run_guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const SchemaError& e) {
    std::fprintf(stderr, "error (schema): %s\n", e.what());
    return kExitSchema;
  } catch (const MissingFile& e) {
    std::fprintf(stderr, "error (missing file): %s\n", e.what());
    return kExitMissingFile;
  } catch (const TrainingDiverged& e) {
    std::fprintf(stderr, "error (diverged): %s\n", e.what());
    return kExitDiverged;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error (schema): %s\n", e.what());
    return kExitSchema;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error (schema): %s\n", e.what());
    return kExitSchema;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"offline multi-agent RL toolkit (set transformers, pessimistic training,"
               " bound calculators)"};
  app.require_subcommand(0, 1);

  CliArgs a;
  bool print_default = false;
  app.add_flag("--print-default-config", print_default,
               "print the default config as JSON and exit");
  app.add_option("--config", a.config_path, "path to a JSON run config");
  auto* seed_opt =
      app.add_option("--seed", a.seed, "run seed (mandatory here or in the config)");
  auto* thr_opt = app.add_option(
      "--threads", a.threads,
      "upper bound on worker threads (modules shard work deterministically)");
  app.add_option("--run-root", a.run_root,
                 "root for timestamped run directories (default runs/, or SETRL_RUN_ROOT)");

  CLI::App* collect = app.add_subcommand("collect", "roll out a behavior policy into a dataset");
  auto* agents_opt = collect->add_option("--agents", a.agents, "number of agents");
  auto* landmarks_opt = collect->add_option("--landmarks", a.landmarks, "number of landmarks");
  auto* episodes_opt = collect->add_option("--episodes", a.episodes, "episodes to roll out");
  auto* horizon_opt = collect->add_option("--horizon", a.horizon, "steps per episode");
  collect->add_option("--behavior", a.behavior, "uniform | eps_greedy_nearest");
  collect->add_option("--subsample", a.subsample, "all | stationary_tail");
  collect->add_option("--out", a.out_path, "dataset output path (default <run_dir>/dataset.bin)");

  CLI::App* train_mf = app.add_subcommand("train-mf", "pessimistic model-free training");
  train_mf->add_option("--dataset", a.dataset_path, "dataset file from collect");
  train_mf->add_option("--arch", a.arch, "set_transformer | deep_sets | mlp");

  CLI::App* train_mb =
      app.add_subcommand("train-mb", "MLE ensemble + pessimistic model-based training");
  train_mb->add_option("--dataset", a.dataset_path, "dataset file from collect");

  CLI::App* eval_cmd = app.add_subcommand("eval", "roll out a trained policy in the environment");
  eval_cmd->add_option("--policy", a.policy_path, "policy checkpoint")->required();
  eval_cmd->add_option("--episodes", a.eval_episodes, "evaluation episodes");
  auto* eval_horizon_opt = eval_cmd->add_option("--horizon", a.horizon, "steps per episode");

  CLI::App* verify =
      app.add_subcommand("verify-bounds", "randomized falsification of the bound inequalities");
  verify->add_option("--trials", a.trials, "trials per check");

  CLI::App* calc =
      app.add_subcommand("bounds-calc", "evaluate the generalization/suboptimality calculators");

  CLI::App* gap = app.add_subcommand("approx-gap", "deep-sets width sweep on the attention target");

  CLI::App* probe = app.add_subcommand("mle-probe", "MLE consistency study on synthetic data");

  for (CLI::App* sub : {collect, train_mf, train_mb, eval_cmd, verify, calc, gap, probe})
    sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  a.seed_set = seed_opt->count() > 0;
  a.threads_set = thr_opt->count() > 0;
  a.agents_set = agents_opt->count() > 0;
  a.landmarks_set = landmarks_opt->count() > 0;
  a.episodes_set = episodes_opt->count() > 0;
  a.horizon_set = horizon_opt->count() > 0 || eval_horizon_opt->count() > 0;

  if (print_default) {
    std::cout << default_config_json().dump(2) << "\n";
    return kExitOk;
  }
  if (collect->parsed()) return run_guarded([&] { return cmd_collect(a); });
  if (train_mf->parsed()) return run_guarded([&] { return cmd_train_mf(a); });
  if (train_mb->parsed()) return run_guarded([&] { return cmd_train_mb(a); });
  if (eval_cmd->parsed()) return run_guarded([&] { return cmd_eval(a); });
  if (verify->parsed()) return run_guarded([&] { return cmd_verify_bounds(a); });
  if (calc->parsed()) return run_guarded([&] { return cmd_bounds_calc(a); });
  if (gap->parsed()) return run_guarded([&] { return cmd_approx_gap(a); });
  if (probe->parsed()) return run_guarded([&] { return cmd_mle_probe(a); });

  std::cout << app.help();
  return kExitFailure;
}
