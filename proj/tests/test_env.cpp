// Cooperative-navigation environment: reset determinism, the coverage
// reward, double-integrator stepping with clamping, permutation homogeneity,
// and the sorted-offset observation layout.
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "setrl/env.hpp"
#include "setrl/rng.hpp"

namespace {

using namespace setrl;

EnvConfig make_cfg(int n, int l) {
  EnvConfig cfg;
  cfg.n_agents = n;
  cfg.n_landmarks = l;
  return cfg;
}

WorldState random_state(int n, int l, std::uint64_t seed) {
  auto g = make_rng(seed, 77);
  WorldState st;
  st.agent_pos.resize(2 * static_cast<size_t>(n));
  st.agent_vel.resize(2 * static_cast<size_t>(n));
  st.landmark_pos.resize(2 * static_cast<size_t>(l));
  for (double& v : st.agent_pos) v = uniform(g, -1.0, 1.0);
  for (double& v : st.agent_vel) v = uniform(g, -0.5, 0.5);
  for (double& v : st.landmark_pos) v = uniform(g, -1.0, 1.0);
  return st;
}

// Applies an agent permutation: entry i of the result is entry perm[i] of the
// input, for the (x, y) pairs of pos/vel and for the action list.
WorldState permute_agents(const WorldState& st, const std::vector<int>& perm) {
  WorldState out = st;
  for (size_t i = 0; i < perm.size(); ++i) {
    out.agent_pos[2 * i] = st.agent_pos[2 * perm[i]];
    out.agent_pos[2 * i + 1] = st.agent_pos[2 * perm[i] + 1];
    out.agent_vel[2 * i] = st.agent_vel[2 * perm[i]];
    out.agent_vel[2 * i + 1] = st.agent_vel[2 * perm[i] + 1];
  }
  return out;
}

TEST(EnvReset, SameSeedBitIdentical) {
  const EnvConfig cfg = make_cfg(3, 3);
  const WorldState a = reset(cfg, 42);
  const WorldState b = reset(cfg, 42);
  EXPECT_EQ(a.agent_pos, b.agent_pos);
  EXPECT_EQ(a.agent_vel, b.agent_vel);
  EXPECT_EQ(a.landmark_pos, b.landmark_pos);
  EXPECT_EQ(a.t, 0);
  const WorldState c = reset(cfg, 43);
  EXPECT_NE(a.agent_pos, c.agent_pos);
}

TEST(EnvReset, ShapesVelocitiesAndArena) {
  const EnvConfig cfg = make_cfg(3, 3);
  const WorldState st = reset(cfg, 7);
  ASSERT_EQ(st.agent_pos.size(), 6u);
  ASSERT_EQ(st.agent_vel.size(), 6u);
  ASSERT_EQ(st.landmark_pos.size(), 6u);
  for (double v : st.agent_vel) EXPECT_EQ(v, 0.0);
  for (double v : st.agent_pos) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
  for (double v : st.landmark_pos) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(EnvReset, RejectsBadConfig) {
  EXPECT_THROW(reset(make_cfg(0, 3), 1), std::invalid_argument);
  EXPECT_THROW(reset(make_cfg(3, 0), 1), std::invalid_argument);
  EnvConfig cfg = make_cfg(2, 2);
  cfg.dt = 0.0;
  EXPECT_THROW(reset(cfg, 1), std::invalid_argument);
  cfg = make_cfg(2, 2);
  cfg.damping = 1.5;
  EXPECT_THROW(reset(cfg, 1), std::invalid_argument);
}

TEST(EnvReward, ZeroWhenEveryLandmarkCovered) {
  WorldState st;
  st.agent_pos = {0.3, -0.2, -0.5, 0.8};
  st.agent_vel = {0.0, 0.0, 0.0, 0.0};
  st.landmark_pos = {-0.5, 0.8, 0.3, -0.2};  // each coincides with an agent
  EXPECT_EQ(reward(st), 0.0);
}

TEST(EnvReward, ThreeFourFiveTriangle) {
  // Pre-clamp fixture: a single agent at the origin, one landmark at (3, 4).
  WorldState st;
  st.agent_pos = {0.0, 0.0};
  st.agent_vel = {0.0, 0.0};
  st.landmark_pos = {3.0, 4.0};
  EXPECT_DOUBLE_EQ(reward(st), -5.0);
}

TEST(EnvReward, NonPositiveAndAgentPermutationInvariant) {
  const int n = 5, l = 4;
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  auto g = make_rng(11, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const WorldState st = random_state(n, l, 100 + trial);
    const double r = reward(st);
    EXPECT_LE(r, 0.0);
    std::shuffle(perm.begin(), perm.end(), g);
    EXPECT_EQ(reward(permute_agents(st, perm)), r);
  }
}

TEST(EnvStep, NoopFromRestLeavesPositionUnchanged) {
  const EnvConfig cfg = make_cfg(3, 3);
  WorldState st = reset(cfg, 5);
  const StepResult out = step(st, JointAction(3, 0), cfg);
  EXPECT_EQ(out.state.agent_pos, st.agent_pos);
  EXPECT_EQ(out.state.agent_vel, st.agent_vel);
  EXPECT_EQ(out.reward, reward(st));
  EXPECT_EQ(out.state.t, st.t + 1);
}

TEST(EnvStep, VelocityHalvesUnderDampingWithoutForce) {
  // noop applies zero force, so with damping 0.5 the velocity halves exactly.
  const EnvConfig cfg = make_cfg(2, 2);
  WorldState st = random_state(2, 2, 9);
  std::vector<double> expect_vel = st.agent_vel;
  for (int k = 0; k < 4; ++k) {
    const StepResult out = step(st, JointAction(2, 0), cfg);
    for (double& v : expect_vel) v *= 0.5;
    EXPECT_EQ(out.state.agent_vel, expect_vel);
    st = out.state;
  }
}

TEST(EnvStep, MatchesClosedFormUpdate) {
  const EnvConfig cfg = make_cfg(1, 1);
  WorldState st;
  st.agent_pos = {0.1, -0.2};
  st.agent_vel = {0.3, 0.4};
  st.landmark_pos = {0.0, 0.0};
  const StepResult out = step(st, JointAction{4}, cfg);  // right: dir (+1, 0)
  const double vx = 0.5 * 0.3 + 1.0 * 0.1 * 1.0;
  const double vy = 0.5 * 0.4;
  EXPECT_DOUBLE_EQ(out.state.agent_vel[0], vx);
  EXPECT_DOUBLE_EQ(out.state.agent_vel[1], vy);
  EXPECT_DOUBLE_EQ(out.state.agent_pos[0], 0.1 + vx * 0.1);
  EXPECT_DOUBLE_EQ(out.state.agent_pos[1], -0.2 + vy * 0.1);
}

TEST(EnvStep, ClampsPositionsToArena) {
  const EnvConfig cfg = make_cfg(1, 1);
  WorldState st;
  st.agent_pos = {1.0, -1.0};
  st.agent_vel = {50.0, -50.0};
  st.landmark_pos = {0.0, 0.0};
  const StepResult out = step(st, JointAction{0}, cfg);
  EXPECT_EQ(out.state.agent_pos[0], 1.0);
  EXPECT_EQ(out.state.agent_pos[1], -1.0);
}

TEST(EnvStep, CommutesWithAgentPermutation) {
  const int n = 5;
  EnvConfig cfg = make_cfg(n, 3);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  auto g = make_rng(21, 0);
  for (int trial = 0; trial < 25; ++trial) {
    const WorldState st = random_state(n, 3, 300 + trial);
    JointAction act(n);
    for (int& a : act) a = static_cast<int>(uniform_int(g, 0, kActionCount - 1));
    std::shuffle(perm.begin(), perm.end(), g);
    JointAction pact(n);
    for (int i = 0; i < n; ++i) pact[i] = act[perm[i]];
    const StepResult direct = step(st, act, cfg);
    const StepResult permuted = step(permute_agents(st, perm), pact, cfg);
    const WorldState expect = permute_agents(direct.state, perm);
    EXPECT_EQ(permuted.state.agent_pos, expect.agent_pos);
    EXPECT_EQ(permuted.state.agent_vel, expect.agent_vel);
    EXPECT_EQ(permuted.reward, direct.reward);
  }
}

TEST(EnvStep, RejectsMalformedActions) {
  const EnvConfig cfg = make_cfg(3, 3);
  const WorldState st = reset(cfg, 1);
  EXPECT_THROW(step(st, JointAction(2, 0), cfg), std::invalid_argument);
  EXPECT_THROW(step(st, JointAction{0, 0, 5}, cfg), std::invalid_argument);
  EXPECT_THROW(step(st, JointAction{0, 0, -1}, cfg), std::invalid_argument);
}

TEST(EnvObserve, RowLayoutAndZeroOffsets) {
  WorldState st;
  st.agent_pos = {0.0, 0.0};
  st.agent_vel = {0.25, -0.75};
  st.landmark_pos = {0.0, 0.0, 0.0, 0.0};  // both landmarks on the agent
  const Matrix obs = observe(st);
  ASSERT_EQ(obs.rows, 1);
  ASSERT_EQ(obs.cols, 4 + 2 * 2);
  EXPECT_EQ(obs(0, 0), 0.0);
  EXPECT_EQ(obs(0, 1), 0.0);
  EXPECT_EQ(obs(0, 2), 0.25);
  EXPECT_EQ(obs(0, 3), -0.75);
  for (int j = 4; j < obs.cols; ++j) EXPECT_EQ(obs(0, j), 0.0);
}

TEST(EnvObserve, OffsetsSortedByDistance) {
  auto g = make_rng(31, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const WorldState st = random_state(4, 6, 500 + trial);
    const Matrix obs = observe(st);
    for (int i = 0; i < obs.rows; ++i) {
      double prev = -1.0;
      for (int j = 0; j < 6; ++j) {
        const double d = std::hypot(obs(i, 4 + 2 * j), obs(i, 5 + 2 * j));
        EXPECT_GE(d, prev);
        prev = d;
      }
    }
  }
  (void)g;
}

TEST(EnvObserve, PermutingAgentsPermutesRows) {
  const int n = 5;
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  auto g = make_rng(41, 0);
  for (int trial = 0; trial < 25; ++trial) {
    const WorldState st = random_state(n, 3, 700 + trial);
    std::shuffle(perm.begin(), perm.end(), g);
    const Matrix obs = observe(st);
    const Matrix pobs = observe(permute_agents(st, perm));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < obs.cols; ++j) EXPECT_EQ(pobs(i, j), obs(perm[i], j));
  }
}

TEST(EnvObserve, InvariantToLandmarkRelabeling) {
  // Exhaustive over all 3! relabelings of the landmarks.
  const WorldState st = random_state(4, 3, 900);
  const Matrix base = observe(st);
  std::vector<int> perm = {0, 1, 2};
  do {
    WorldState rel = st;
    for (int j = 0; j < 3; ++j) {
      rel.landmark_pos[2 * j] = st.landmark_pos[2 * perm[j]];
      rel.landmark_pos[2 * j + 1] = st.landmark_pos[2 * perm[j] + 1];
    }
    const Matrix obs = observe(rel);
    for (int i = 0; i < base.rows; ++i)
      for (int j = 0; j < base.cols; ++j) EXPECT_EQ(obs(i, j), base(i, j));
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST(EnvObserve, JoinAppendsOneHotActions) {
  const WorldState st = random_state(3, 2, 1100);
  const Matrix obs = observe(st);
  const JointAction act = {4, 0, 2};
  const Matrix x = join_state_action(obs, act);
  ASSERT_EQ(x.rows, 3);
  ASSERT_EQ(x.cols, obs.cols + kActionCount);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < obs.cols; ++j) EXPECT_EQ(x(i, j), obs(i, j));
    for (int a = 0; a < kActionCount; ++a)
      EXPECT_EQ(x(i, obs.cols + a), a == act[i] ? 1.0 : 0.0);
  }
  EXPECT_THROW(join_state_action(obs, JointAction{0}), std::invalid_argument);
  EXPECT_THROW(join_state_action(obs, JointAction{0, 1, 9}), std::invalid_argument);
}

TEST(EnvTrajectory, ReproducibleFromSeedAndActions) {
  const EnvConfig cfg = make_cfg(3, 3);
  std::vector<JointAction> script;
  auto g = make_rng(51, 0);
  for (int t = 0; t < cfg.horizon; ++t) {
    JointAction a(3);
    for (int& v : a) v = static_cast<int>(uniform_int(g, 0, kActionCount - 1));
    script.push_back(a);
  }
  auto run = [&]() {
    WorldState st = reset(cfg, 99);
    double total = 0.0;
    for (const JointAction& a : script) {
      const StepResult out = step(st, a, cfg);
      total += out.reward;
      st = out.state;
    }
    return std::make_pair(st, total);
  };
  const auto [s1, r1] = run();
  const auto [s2, r2] = run();
  EXPECT_EQ(s1.agent_pos, s2.agent_pos);
  EXPECT_EQ(s1.agent_vel, s2.agent_vel);
  EXPECT_EQ(r1, r2);
  EXPECT_EQ(s1.t, cfg.horizon);
}

}  // namespace
