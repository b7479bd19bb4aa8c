// Offline dataset collection and storage.  Transitions are (s, a, r, s')
// tuples of per-agent observation rows; files are a versioned binary
// container with an FNV-1a payload checksum and a CSV export for inspection.
#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "setrl/env.hpp"
#include "setrl/matrix.hpp"
#include "setrl/rng.hpp"

namespace setrl {

struct Transition {
  Matrix s;       // N x d_S
  JointAction a;  // N discrete actions
  double r = 0.0;
  Matrix s2;  // N x d_S
};

enum class BehaviorPolicy : std::int32_t {
  kUniform = 0,
  kEpsGreedyNearest = 1,
};

enum class Subsample : std::int32_t {
  kAll = 0,
  kStationaryTail = 1,  // keeps steps with t >= horizon / 2
};

struct DatasetMeta {
  std::int32_t n_agents = 0;
  std::int32_t n_landmarks = 0;
  std::int32_t d_s = 0;
  std::int32_t d_a = kActionCount;
  double gamma = 0.95;
  std::uint64_t seed = 0;
  BehaviorPolicy behavior = BehaviorPolicy::kUniform;
  std::int32_t episodes = 0;
  std::int32_t horizon = 0;
  Subsample subsample = Subsample::kAll;
};

struct Dataset {
  DatasetMeta meta;
  std::vector<Transition> transitions;

  void validate() const {
    if (transitions.empty()) throw std::invalid_argument("Dataset: empty");
    for (const Transition& tr : transitions)
      if (tr.s.rows != meta.n_agents || tr.s.cols != meta.d_s || tr.s2.rows != meta.n_agents ||
          tr.s2.cols != meta.d_s || static_cast<int>(tr.a.size()) != meta.n_agents)
        throw std::invalid_argument("Dataset: inhomogeneous transition shapes");
  }
};

// ---- behavior policies --------------------------------------------------------

// Uniform-random joint action.
inline JointAction uniform_behavior(int n_agents, std::mt19937_64& g) {
  JointAction a(n_agents);
  for (int& v : a) v = static_cast<int>(uniform_int(g, 0, kActionCount - 1));
  return a;
}

// epsilon-greedy heuristic: each agent (in index order) claims its nearest
// still-unclaimed landmark and steps along the axis with the largest offset
// toward it; with probability epsilon it acts uniformly at random instead.
inline JointAction eps_greedy_nearest_behavior(const WorldState& st, double epsilon,
                                               std::mt19937_64& g) {
  const int n = static_cast<int>(st.agent_pos.size()) / 2;
  const int l = static_cast<int>(st.landmark_pos.size()) / 2;
  std::vector<bool> claimed(l, false);
  JointAction act(n, 0);
  for (int i = 0; i < n; ++i) {
    if (uniform(g, 0.0, 1.0) < epsilon) {
      act[i] = static_cast<int>(uniform_int(g, 0, kActionCount - 1));
      continue;
    }
    int best = -1;
    double best_d = kInf;
    for (int j = 0; j < l; ++j) {
      if (claimed[j]) continue;
      const double dx = st.landmark_pos[2 * j] - st.agent_pos[2 * i];
      const double dy = st.landmark_pos[2 * j + 1] - st.agent_pos[2 * i + 1];
      const double dist = std::hypot(dx, dy);
      if (dist < best_d) {
        best_d = dist;
        best = j;
      }
    }
    if (best < 0) {
      act[i] = 0;
      continue;
    }
    claimed[best] = true;
    const double dx = st.landmark_pos[2 * best] - st.agent_pos[2 * i];
    const double dy = st.landmark_pos[2 * best + 1] - st.agent_pos[2 * i + 1];
    if (std::abs(dx) < 1e-9 && std::abs(dy) < 1e-9) {
      act[i] = 0;
    } else if (std::abs(dx) >= std::abs(dy)) {
      act[i] = dx > 0.0 ? 4 : 3;
    } else {
      act[i] = dy > 0.0 ? 1 : 2;
    }
  }
  return act;
}

inline constexpr double kEpsGreedyEpsilon = 0.3;

// ---- collection -----------------------------------------------------------------

// Roll out `episodes` episodes under the chosen behavior policy.  Episode e
// derives its own RNG and reset seed from (seed, e), so collection is
// deterministic and parallelizable across episodes.
inline Dataset collect(const EnvConfig& cfg, BehaviorPolicy behavior, int episodes,
                       std::uint64_t seed, Subsample subsample, double gamma = 0.95) {
  cfg.validate();
  if (episodes < 1) throw std::invalid_argument("collect: episodes must be >= 1");
  Dataset ds;
  ds.meta.n_agents = cfg.n_agents;
  ds.meta.n_landmarks = cfg.n_landmarks;
  ds.meta.d_s = cfg.d_s();
  ds.meta.gamma = gamma;
  ds.meta.seed = seed;
  ds.meta.behavior = behavior;
  ds.meta.episodes = episodes;
  ds.meta.horizon = cfg.horizon;
  ds.meta.subsample = subsample;
  const int keep_from = subsample == Subsample::kStationaryTail ? cfg.horizon / 2 : 0;
  for (int e = 0; e < episodes; ++e) {
    auto g = make_rng(seed, static_cast<std::uint64_t>(e) + 1);
    WorldState st = reset(cfg, derive_seed(seed, static_cast<std::uint64_t>(e)));
    Matrix obs = observe(st);
    for (int t = 0; t < cfg.horizon; ++t) {
      const JointAction a = behavior == BehaviorPolicy::kUniform
                                ? uniform_behavior(cfg.n_agents, g)
                                : eps_greedy_nearest_behavior(st, kEpsGreedyEpsilon, g);
      StepResult sr = step(st, a, cfg);
      Matrix obs2 = observe(sr.state);
      if (t >= keep_from) ds.transitions.push_back({obs, a, sr.reward, obs2});
      st = sr.state;
      obs = obs2;
    }
  }
  ds.validate();
  return ds;
}

// ---- serialization ---------------------------------------------------------------

inline constexpr std::uint32_t kDatasetMagic = 0x53445453;  // "STDS"
inline constexpr std::uint32_t kDatasetVersion = 1;

namespace detail {

inline std::uint64_t fnv1a(const unsigned char* p, std::size_t n,
                           std::uint64_t h = 1469598103934665603ull) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace detail

// Serializes the transition payload (per transition: s, a-as-doubles, r, s2)
// and returns its FNV-1a checksum; used both by save and by integrity tests.
inline std::uint64_t dataset_checksum(const Dataset& ds) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const double* p, std::size_t n) {
    h = detail::fnv1a(reinterpret_cast<const unsigned char*>(p), n * sizeof(double), h);
  };
  for (const Transition& tr : ds.transitions) {
    mix(tr.s.a.data(), tr.s.a.size());
    for (int a : tr.a) {
      const double da = static_cast<double>(a);
      mix(&da, 1);
    }
    mix(&tr.r, 1);
    mix(tr.s2.a.data(), tr.s2.a.size());
  }
  return h;
}

inline void save_dataset(const std::string& path, const Dataset& ds) {
  ds.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("save_dataset: cannot open " + path);
  const std::uint32_t magic = kDatasetMagic, version = kDatasetVersion;
  const std::uint64_t count = ds.transitions.size();
  const std::uint64_t checksum = dataset_checksum(ds);
  os.write(reinterpret_cast<const char*>(&magic), sizeof(magic));
  os.write(reinterpret_cast<const char*>(&version), sizeof(version));
  os.write(reinterpret_cast<const char*>(&ds.meta), sizeof(ds.meta));
  os.write(reinterpret_cast<const char*>(&count), sizeof(count));
  os.write(reinterpret_cast<const char*>(&checksum), sizeof(checksum));
  for (const Transition& tr : ds.transitions) {
    os.write(reinterpret_cast<const char*>(tr.s.a.data()),
             static_cast<std::streamsize>(tr.s.a.size() * sizeof(double)));
    for (int a : tr.a) {
      const double da = static_cast<double>(a);
      os.write(reinterpret_cast<const char*>(&da), sizeof(da));
    }
    os.write(reinterpret_cast<const char*>(&tr.r), sizeof(tr.r));
    os.write(reinterpret_cast<const char*>(tr.s2.a.data()),
             static_cast<std::streamsize>(tr.s2.a.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("save_dataset: write failed: " + path);
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_dataset: cannot open " + path);
  std::uint32_t magic = 0, version = 0;
  std::uint64_t count = 0, checksum = 0;
  Dataset ds;
  is.read(reinterpret_cast<char*>(&magic), sizeof(magic));
  is.read(reinterpret_cast<char*>(&version), sizeof(version));
  is.read(reinterpret_cast<char*>(&ds.meta), sizeof(ds.meta));
  is.read(reinterpret_cast<char*>(&count), sizeof(count));
  is.read(reinterpret_cast<char*>(&checksum), sizeof(checksum));
  if (!is) throw std::runtime_error("load_dataset: truncated header");
  if (magic != kDatasetMagic) throw std::runtime_error("load_dataset: bad magic");
  if (version != kDatasetVersion) throw std::runtime_error("load_dataset: unknown version");
  ds.transitions.resize(count);
  for (Transition& tr : ds.transitions) {
    tr.s.resize(ds.meta.n_agents, ds.meta.d_s);
    tr.s2.resize(ds.meta.n_agents, ds.meta.d_s);
    tr.a.resize(ds.meta.n_agents);
    is.read(reinterpret_cast<char*>(tr.s.a.data()),
            static_cast<std::streamsize>(tr.s.a.size() * sizeof(double)));
    for (int& a : tr.a) {
      double da = 0.0;
      is.read(reinterpret_cast<char*>(&da), sizeof(da));
      a = static_cast<int>(da);
    }
    is.read(reinterpret_cast<char*>(&tr.r), sizeof(tr.r));
    is.read(reinterpret_cast<char*>(tr.s2.a.data()),
            static_cast<std::streamsize>(tr.s2.a.size() * sizeof(double)));
  }
  if (!is) throw std::runtime_error("load_dataset: truncated payload");
  if (dataset_checksum(ds) != checksum)
    throw std::runtime_error("load_dataset: checksum mismatch");
  ds.validate();
  return ds;
}

// CSV export for inspection: one row per transition, states flattened row-major.
inline void export_csv(const std::string& path, const Dataset& ds) {
  ds.validate();
  std::ofstream os(path);
  if (!os) throw std::runtime_error("export_csv: cannot open " + path);
  os << "index,reward";
  for (int i = 0; i < ds.meta.n_agents; ++i) os << ",a" << i;
  for (int i = 0; i < ds.meta.n_agents * ds.meta.d_s; ++i) os << ",s" << i;
  for (int i = 0; i < ds.meta.n_agents * ds.meta.d_s; ++i) os << ",s2_" << i;
  os << "\n";
  os.precision(17);
  for (std::size_t idx = 0; idx < ds.transitions.size(); ++idx) {
    const Transition& tr = ds.transitions[idx];
    os << idx << "," << tr.r;
    for (int a : tr.a) os << "," << a;
    for (double v : tr.s.a) os << "," << v;
    for (double v : tr.s2.a) os << "," << v;
    os << "\n";
  }
  if (!os) throw std::runtime_error("export_csv: write failed: " + path);
}

}  // namespace setrl
