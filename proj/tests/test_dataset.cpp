// Dataset collection, behavior policies, the versioned binary container with
// its checksum, and the CSV export.
#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "setrl/dataset.hpp"

namespace {

using namespace setrl;

std::string temp_path(const char* name) {
  return std::string(::testing::TempDir()) + name;
}

std::vector<char> slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  EXPECT_TRUE(static_cast<bool>(is)) << path;
  return std::vector<char>(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

EnvConfig make_cfg(int n, int l) {
  EnvConfig cfg;
  cfg.n_agents = n;
  cfg.n_landmarks = l;
  return cfg;
}

TEST(DatasetCollect, OneEpisodeAllModeYieldsHorizonTransitions) {
  const EnvConfig cfg = make_cfg(3, 3);
  const Dataset ds = collect(cfg, BehaviorPolicy::kUniform, 1, 17, Subsample::kAll);
  ASSERT_EQ(ds.transitions.size(), 25u);
  EXPECT_EQ(ds.meta.n_agents, 3);
  EXPECT_EQ(ds.meta.n_landmarks, 3);
  EXPECT_EQ(ds.meta.d_s, 10);
  EXPECT_EQ(ds.meta.d_a, kActionCount);
  EXPECT_EQ(ds.meta.seed, 17u);
  EXPECT_EQ(ds.meta.behavior, BehaviorPolicy::kUniform);
  EXPECT_EQ(ds.meta.episodes, 1);
  EXPECT_EQ(ds.meta.horizon, 25);
  EXPECT_EQ(ds.meta.subsample, Subsample::kAll);
  for (const Transition& tr : ds.transitions) {
    EXPECT_EQ(tr.s.rows, 3);
    EXPECT_EQ(tr.s.cols, 10);
    EXPECT_EQ(tr.s2.rows, 3);
    EXPECT_EQ(tr.s2.cols, 10);
    EXPECT_EQ(tr.a.size(), 3u);
    EXPECT_LE(tr.r, 0.0);
  }
}

TEST(DatasetCollect, TransitionsChainWithinEpisode) {
  // In all-steps mode, s' of step t is s of step t+1 within an episode.
  const EnvConfig cfg = make_cfg(2, 2);
  const Dataset ds = collect(cfg, BehaviorPolicy::kUniform, 1, 3, Subsample::kAll);
  for (size_t i = 0; i + 1 < ds.transitions.size(); ++i)
    EXPECT_EQ(max_abs_diff(ds.transitions[i].s2, ds.transitions[i + 1].s), 0.0);
}

TEST(DatasetCollect, StationaryTailKeepsSecondHalf) {
  const EnvConfig cfg = make_cfg(3, 3);
  // horizon 25: keeps t = 12..24, i.e. 13 transitions per episode.
  const Dataset ds = collect(cfg, BehaviorPolicy::kUniform, 2, 5, Subsample::kStationaryTail);
  EXPECT_EQ(ds.transitions.size(), 26u);
  const Dataset full = collect(cfg, BehaviorPolicy::kUniform, 2, 5, Subsample::kAll);
  // The tail of each episode matches the corresponding slice of the full run.
  for (int e = 0; e < 2; ++e)
    for (int k = 0; k < 13; ++k) {
      const Transition& tail = ds.transitions[13 * e + k];
      const Transition& ref = full.transitions[25 * e + 12 + k];
      EXPECT_EQ(max_abs_diff(tail.s, ref.s), 0.0);
      EXPECT_EQ(tail.a, ref.a);
      EXPECT_EQ(tail.r, ref.r);
    }
}

TEST(DatasetCollect, DeterministicChecksum) {
  const EnvConfig cfg = make_cfg(3, 3);
  const Dataset a = collect(cfg, BehaviorPolicy::kEpsGreedyNearest, 4, 23, Subsample::kAll);
  const Dataset b = collect(cfg, BehaviorPolicy::kEpsGreedyNearest, 4, 23, Subsample::kAll);
  EXPECT_EQ(dataset_checksum(a), dataset_checksum(b));
  const Dataset c = collect(cfg, BehaviorPolicy::kEpsGreedyNearest, 4, 24, Subsample::kAll);
  EXPECT_NE(dataset_checksum(a), dataset_checksum(c));
}

TEST(DatasetCollect, RejectsBadArguments) {
  EXPECT_THROW(collect(make_cfg(2, 2), BehaviorPolicy::kUniform, 0, 1, Subsample::kAll),
               std::invalid_argument);
  EXPECT_THROW(collect(make_cfg(0, 2), BehaviorPolicy::kUniform, 1, 1, Subsample::kAll),
               std::invalid_argument);
}

TEST(BehaviorPolicies, UniformCoversActionRange) {
  auto g = make_rng(1, 0);
  std::vector<int> counts(kActionCount, 0);
  for (int k = 0; k < 5000; ++k) {
    const JointAction a = uniform_behavior(4, g);
    ASSERT_EQ(a.size(), 4u);
    for (int v : a) {
      ASSERT_GE(v, 0);
      ASSERT_LT(v, kActionCount);
      counts[v]++;
    }
  }
  for (int c : counts) EXPECT_GT(c, 3000);  // ~4000 expected per action
}

TEST(BehaviorPolicies, GreedyMovesAlongDominantAxis) {
  auto g = make_rng(2, 0);
  WorldState st;
  st.agent_vel = {0.0, 0.0};
  st.agent_pos = {0.0, 0.0};
  st.landmark_pos = {0.5, 0.1};
  EXPECT_EQ(eps_greedy_nearest_behavior(st, 0.0, g), (JointAction{4}));  // right
  st.landmark_pos = {-0.5, 0.1};
  EXPECT_EQ(eps_greedy_nearest_behavior(st, 0.0, g), (JointAction{3}));  // left
  st.landmark_pos = {0.1, 0.5};
  EXPECT_EQ(eps_greedy_nearest_behavior(st, 0.0, g), (JointAction{1}));  // up
  st.landmark_pos = {0.1, -0.5};
  EXPECT_EQ(eps_greedy_nearest_behavior(st, 0.0, g), (JointAction{2}));  // down
  st.landmark_pos = {0.0, 0.0};  // already covered
  EXPECT_EQ(eps_greedy_nearest_behavior(st, 0.0, g), (JointAction{0}));
}

TEST(BehaviorPolicies, GreedyClaimsLandmarksInAgentOrder) {
  // Both agents are nearest to the same landmark; the first claims it and the
  // second is routed to the remaining one.
  auto g = make_rng(3, 0);
  WorldState st;
  st.agent_pos = {0.0, 0.0, 0.05, 0.0};
  st.agent_vel = {0.0, 0.0, 0.0, 0.0};
  st.landmark_pos = {0.2, 0.0, -0.9, 0.0};
  const JointAction a = eps_greedy_nearest_behavior(st, 0.0, g);
  EXPECT_EQ(a[0], 4);  // toward (0.2, 0)
  EXPECT_EQ(a[1], 3);  // toward (-0.9, 0)
}

TEST(DatasetIo, RoundTripByteIdentical) {
  const Dataset ds = collect(make_cfg(3, 3), BehaviorPolicy::kUniform, 3, 31, Subsample::kAll);
  const std::string p1 = temp_path("ds_round1.bin");
  const std::string p2 = temp_path("ds_round2.bin");
  save_dataset(p1, ds);
  const Dataset back = load_dataset(p1);
  EXPECT_EQ(back.meta.n_agents, ds.meta.n_agents);
  EXPECT_EQ(back.meta.gamma, ds.meta.gamma);
  EXPECT_EQ(back.meta.seed, ds.meta.seed);
  EXPECT_EQ(back.meta.behavior, ds.meta.behavior);
  ASSERT_EQ(back.transitions.size(), ds.transitions.size());
  for (size_t i = 0; i < ds.transitions.size(); ++i) {
    EXPECT_EQ(max_abs_diff(back.transitions[i].s, ds.transitions[i].s), 0.0);
    EXPECT_EQ(max_abs_diff(back.transitions[i].s2, ds.transitions[i].s2), 0.0);
    EXPECT_EQ(back.transitions[i].a, ds.transitions[i].a);
    EXPECT_EQ(back.transitions[i].r, ds.transitions[i].r);
  }
  save_dataset(p2, back);
  EXPECT_EQ(slurp(p1), slurp(p2));
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST(DatasetIo, RejectsCorruptionAndMissingFiles) {
  EXPECT_THROW(load_dataset(temp_path("ds_missing.bin")), std::runtime_error);

  const Dataset ds = collect(make_cfg(2, 2), BehaviorPolicy::kUniform, 1, 41, Subsample::kAll);
  const std::string path = temp_path("ds_corrupt.bin");
  save_dataset(path, ds);

  // Flip one byte deep in the payload: the checksum must catch it.
  std::vector<char> bytes = slurp(path);
  bytes[bytes.size() - 9] ^= 0x40;
  std::ofstream(path, std::ios::binary).write(bytes.data(), static_cast<long>(bytes.size()));
  EXPECT_THROW(load_dataset(path), std::runtime_error);

  // Bad magic.
  bytes = slurp(path);
  bytes[bytes.size() - 9] ^= 0x40;  // restore payload
  bytes[0] ^= 0x01;
  std::ofstream(path, std::ios::binary).write(bytes.data(), static_cast<long>(bytes.size()));
  EXPECT_THROW(load_dataset(path), std::runtime_error);

  // Truncation.
  bytes[0] ^= 0x01;
  std::ofstream(path, std::ios::binary).write(bytes.data(), static_cast<long>(bytes.size() / 2));
  EXPECT_THROW(load_dataset(path), std::runtime_error);
  std::remove(path.c_str());
}

TEST(DatasetIo, CsvHeaderAndRowCount) {
  const Dataset ds = collect(make_cfg(2, 2), BehaviorPolicy::kUniform, 1, 51, Subsample::kAll);
  const std::string path = temp_path("ds_export.csv");
  export_csv(path, ds);
  std::ifstream is(path);
  ASSERT_TRUE(static_cast<bool>(is));
  std::string header;
  std::getline(is, header);
  // d_S = 4 + 2*2 = 8, so 2 agents flatten to 16 state columns per side.
  std::string expect = "index,reward,a0,a1";
  for (int i = 0; i < 16; ++i) expect += ",s" + std::to_string(i);
  for (int i = 0; i < 16; ++i) expect += ",s2_" + std::to_string(i);
  EXPECT_EQ(header, expect);
  int rows = 0;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  EXPECT_EQ(rows, 25);
  std::remove(path.c_str());
}

TEST(DatasetValidate, RejectsInhomogeneousShapes) {
  Dataset ds = collect(make_cfg(2, 2), BehaviorPolicy::kUniform, 1, 61, Subsample::kAll);
  ds.transitions[3].a.push_back(0);
  EXPECT_THROW(ds.validate(), std::invalid_argument);
  Dataset empty;
  empty.meta = ds.meta;
  EXPECT_THROW(empty.validate(), std::invalid_argument);
}

}  // namespace
