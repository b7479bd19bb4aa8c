// Cooperative-navigation particle environment: N homogeneous agents cover L
// landmarks in the arena [-1,1]^2 under the shared coverage reward
//   r = -sum_j min_i ||y_j - x_i||_2.
// Double-integrator physics with discrete 5-action control; every transition
// is a pure function of (state, action), so trajectories are reproducible
// bit-exactly from (seed, action sequence).
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "setrl/matrix.hpp"
#include "setrl/networks.hpp"  // kActionCount
#include "setrl/rng.hpp"

namespace setrl {

struct EnvConfig {
  int n_agents = 3;
  int n_landmarks = 3;
  double force = 1.0;
  double dt = 0.1;
  double damping = 0.5;
  int horizon = 25;

  int d_s() const { return 4 + 2 * n_landmarks; }
  int d() const { return d_s() + kActionCount; }

  void validate() const {
    if (n_agents < 1 || n_landmarks < 1)
      throw std::invalid_argument("EnvConfig: agent and landmark counts must be >= 1");
    if (!(force > 0.0) || !(dt > 0.0) || !(damping >= 0.0 && damping <= 1.0) || horizon < 1)
      throw std::invalid_argument("EnvConfig: bad physics constants");
  }
};

struct WorldState {
  std::vector<double> agent_pos;     // 2 N, (x, y) pairs
  std::vector<double> agent_vel;     // 2 N
  std::vector<double> landmark_pos;  // 2 L
  int t = 0;
};

// One discrete action per agent: 0 noop, 1 up, 2 down, 3 left, 4 right.
using JointAction = std::vector<int>;

inline constexpr double kActionDir[kActionCount][2] = {
    {0.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}, {-1.0, 0.0}, {1.0, 0.0}};

inline WorldState reset(const EnvConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  auto g = make_rng(seed, 0);
  WorldState st;
  st.agent_pos.resize(2 * static_cast<size_t>(cfg.n_agents));
  st.agent_vel.assign(2 * static_cast<size_t>(cfg.n_agents), 0.0);
  st.landmark_pos.resize(2 * static_cast<size_t>(cfg.n_landmarks));
  for (double& v : st.agent_pos) v = uniform(g, -1.0, 1.0);
  for (double& v : st.landmark_pos) v = uniform(g, -1.0, 1.0);
  st.t = 0;
  return st;
}

// Shared coverage reward; <= 0, and 0 only when every landmark is covered.
inline double reward(const WorldState& st) {
  const int n = static_cast<int>(st.agent_pos.size()) / 2;
  const int l = static_cast<int>(st.landmark_pos.size()) / 2;
  double total = 0.0;
  for (int j = 0; j < l; ++j) {
    double best = kInf;
    for (int i = 0; i < n; ++i) {
      const double dx = st.landmark_pos[2 * j] - st.agent_pos[2 * i];
      const double dy = st.landmark_pos[2 * j + 1] - st.agent_pos[2 * i + 1];
      best = std::min(best, std::hypot(dx, dy));
    }
    total -= best;
  }
  return total;
}

struct StepResult {
  WorldState state;
  double reward = 0.0;
};

inline StepResult step(const WorldState& st, const JointAction& action, const EnvConfig& cfg) {
  const int n = cfg.n_agents;
  if (static_cast<int>(action.size()) != n)
    throw std::invalid_argument("step: action length != n_agents");
  StepResult out;
  out.state = st;
  for (int i = 0; i < n; ++i) {
    const int a = action[i];
    if (a < 0 || a >= kActionCount) throw std::invalid_argument("step: action out of range");
    for (int c = 0; c < 2; ++c) {
      double& vel = out.state.agent_vel[2 * i + c];
      double& pos = out.state.agent_pos[2 * i + c];
      vel = cfg.damping * vel + cfg.force * cfg.dt * kActionDir[a][c];
      pos = std::clamp(pos + vel * cfg.dt, -1.0, 1.0);
    }
  }
  out.state.t = st.t + 1;
  out.reward = reward(out.state);
  return out;
}

// Per-agent observation rows: [own pos (2), own vel (2), landmark offsets
// relative to the agent, sorted by distance (2 L)].  Sorting the offsets by
// (distance, dx, dy) makes each row invariant to landmark relabeling.
inline Matrix observe(const WorldState& st) {
  const int n = static_cast<int>(st.agent_pos.size()) / 2;
  const int l = static_cast<int>(st.landmark_pos.size()) / 2;
  Matrix obs(n, 4 + 2 * l);
  std::vector<std::array<double, 3>> off(l);  // (dist, dx, dy)
  for (int i = 0; i < n; ++i) {
    obs(i, 0) = st.agent_pos[2 * i];
    obs(i, 1) = st.agent_pos[2 * i + 1];
    obs(i, 2) = st.agent_vel[2 * i];
    obs(i, 3) = st.agent_vel[2 * i + 1];
    for (int j = 0; j < l; ++j) {
      const double dx = st.landmark_pos[2 * j] - st.agent_pos[2 * i];
      const double dy = st.landmark_pos[2 * j + 1] - st.agent_pos[2 * i + 1];
      off[j] = {std::hypot(dx, dy), dx, dy};
    }
    std::sort(off.begin(), off.end());
    for (int j = 0; j < l; ++j) {
      obs(i, 4 + 2 * j) = off[j][1];
      obs(i, 5 + 2 * j) = off[j][2];
    }
  }
  return obs;
}

// Appends each agent's one-hot action to its observation row, producing the
// N x (d_S + d_A) channel matrix the value networks consume.
inline Matrix join_state_action(const Matrix& s, const JointAction& action) {
  if (static_cast<int>(action.size()) != s.rows)
    throw std::invalid_argument("join_state_action: action length != rows");
  Matrix x(s.rows, s.cols + kActionCount);
  x.fill(0.0);
  for (int i = 0; i < s.rows; ++i) {
    for (int j = 0; j < s.cols; ++j) x(i, j) = s(i, j);
    const int a = action[i];
    if (a < 0 || a >= kActionCount)
      throw std::invalid_argument("join_state_action: action out of range");
    x(i, s.cols + a) = 1.0;
  }
  return x;
}

}  // namespace setrl
