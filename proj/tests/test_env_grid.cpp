#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "ibrl/env_grid.hpp"

using namespace ibrl;
using namespace ibrl::env;

TEST_CASE("generate_maze is deterministic and solvable") {
  MazeLayout a = generate_maze(0);
  MazeLayout b = generate_maze(0);
  CHECK(a == b);
  CHECK(a.start == b.start);
  CHECK(a.goal == b.goal);
  for (uint64_t seed = 0; seed < 50; ++seed)
    CHECK(maze_solvable(generate_maze(seed)));
}

TEST_CASE("generated mazes have solid borders and distinct start/goal") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    MazeLayout m = generate_maze(seed);
    for (int i = 0; i < kGridSize; ++i) {
      CHECK(m.wall(0, i));
      CHECK(m.wall(kGridSize - 1, i));
      CHECK(m.wall(i, 0));
      CHECK(m.wall(i, kGridSize - 1));
    }
    CHECK(!(m.start == m.goal));
    CHECK(!m.wall(m.start.row, m.start.col));
    CHECK(!m.wall(m.goal.row, m.goal.col));
  }
}

TEST_CASE("100 seeds give at least 95 distinct wall patterns") {
  std::set<std::string> patterns;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    MazeLayout m = generate_maze(seed);
    std::string key;
    for (int r = 0; r < kGridSize; ++r)
      for (int c = 0; c < kGridSize; ++c) key += m.wall(r, c) ? '#' : '.';
    patterns.insert(key);
  }
  CHECK(patterns.size() >= 95);
}

TEST_CASE("reset places the agent at start with consistent channels") {
  GridEnv env(generate_maze(4));
  nn::Tensor obs = env.reset();
  CHECK(obs.shape == std::vector<int>{1, 12, 12, 3});
  double goal_sum = 0.0, agent_sum = 0.0;
  for (int r = 0; r < kGridSize; ++r)
    for (int c = 0; c < kGridSize; ++c) {
      goal_sum += obs.data[(r * kGridSize + c) * 3 + 1];
      agent_sum += obs.data[(r * kGridSize + c) * 3 + 2];
      CHECK(obs.data[(r * kGridSize + c) * 3 + 0] ==
            (env.layout().wall(r, c) ? 1.0 : 0.0));
    }
  CHECK(goal_sum == 1.0);
  CHECK(agent_sum == 1.0);
  const Cell s = env.layout().start;
  CHECK(obs.data[(s.row * kGridSize + s.col) * 3 + 2] == 1.0);
  nn::Tensor again = env.reset();
  CHECK(again.data == obs.data);
}

TEST_CASE("stepping into a wall keeps position, zero reward") {
  MazeLayout m = generate_maze(1);
  GridEnv env(m);
  env.reset();
  // probe all four actions from start; any wall-bound one must not move us
  for (int action = 0; action < 4; ++action) {
    GridEnv e2(m);
    e2.reset();
    const Cell before = e2.agent();
    const int dr[] = {-1, 1, 0, 0};
    const int dc[] = {0, 0, -1, 1};
    const bool into_wall =
        m.wall(before.row + dr[action], before.col + dc[action]);
    auto res = e2.step(action);
    if (into_wall) {
      CHECK(e2.agent() == before);
      CHECK(res.reward == 0.0);
    }
  }
}

TEST_CASE("reaching the goal yields reward 1 and terminates") {
  // hand-built corridor layout
  std::string text;
  for (int r = 0; r < 12; ++r) {
    for (int c = 0; c < 12; ++c) {
      if (r == 0 || r == 11 || c == 0 || c == 11)
        text += '#';
      else if (r == 1 && c == 1)
        text += 'S';
      else if (r == 1 && c == 10)
        text += 'G';
      else
        text += r == 1 ? '.' : '#';
    }
    text += '\n';
  }
  GridEnv env(layout_from_text(text));
  env.reset();
  double total = 0.0;
  GridEnv::StepResult res;
  for (int i = 0; i < 9; ++i) {
    res = env.step(3);  // right
    total += res.reward;
  }
  CHECK(res.done);
  CHECK(total == 1.0);
  CHECK_THROWS_AS(env.step(3), ArtifactError);
}

TEST_CASE("horizon 100 without goal terminates with zero return") {
  // closed box: start and goal in separate chambers is unsolvable, so
  // instead park the goal far away and take a wall-bumping action forever
  MazeLayout m = generate_maze(2);
  GridEnv env(m);
  env.reset();
  double total = 0.0;
  int steps = 0;
  // bounce against the nearest wall without moving: find such an action
  int bump = -1;
  const int dr[] = {-1, 1, 0, 0};
  const int dc[] = {0, 0, -1, 1};
  for (int a = 0; a < 4; ++a)
    if (m.wall(m.start.row + dr[a], m.start.col + dc[a])) bump = a;
  if (bump < 0) return;  // open start; covered by other seeds
  while (!env.done()) {
    auto res = env.step(bump);
    total += res.reward;
    ++steps;
  }
  CHECK(steps == kGridHorizon);
  CHECK(total == 0.0);
}

TEST_CASE("layout text round-trips") {
  MazeLayout m = generate_maze(13);
  MazeLayout back = layout_from_text(layout_to_text(m));
  CHECK(back == m);
  CHECK(back.start == m.start);
  CHECK(back.goal == m.goal);
}

TEST_CASE("layout_from_text rejects malformed input") {
  CHECK_THROWS_AS(layout_from_text("####\n"), ArtifactError);
  MazeLayout m = generate_maze(13);
  std::string text = layout_to_text(m);
  // drop the start marker
  for (auto& ch : text)
    if (ch == 'S') ch = '.';
  CHECK_THROWS_AS(layout_from_text(text), ArtifactError);
}

TEST_CASE("transfer split: 4 distinct solvable layouts, deterministic") {
  std::mt19937_64 rng1(21), rng2(21);
  TransferSplit s1 = sample_transfer_split(rng1);
  TransferSplit s2 = sample_transfer_split(rng2);
  CHECK(s1.test == s2.test);
  REQUIRE(s1.train.size() == 3);
  for (const auto& t : s1.train) {
    CHECK(maze_solvable(t));
    CHECK(!(t == s1.test));
  }
  CHECK(maze_solvable(s1.test));
  CHECK(!(s1.train[0] == s1.train[1]));
  CHECK(!(s1.train[1] == s1.train[2]));
  CHECK(!(s1.train[0] == s1.train[2]));
}

TEST_CASE("random policy succeeds on under half of episodes") {
  std::mt19937_64 rng(5);
  int successes = 0;
  const int episodes = 200;
  for (int ep = 0; ep < episodes; ++ep) {
    GridEnv env(generate_maze(1000 + ep % 20));
    env.reset();
    double total = 0.0;
    while (!env.done()) total += env.step(static_cast<int>(rng() % 4)).reward;
    if (total > 0.0) ++successes;
  }
  CHECK(successes < episodes / 2);
}

TEST_CASE("observation is a pure function of layout and position") {
  MazeLayout m = generate_maze(8);
  GridEnv env(m);
  env.reset();
  nn::Tensor a = env.observation();
  nn::Tensor b = env.observation();
  CHECK(a.data == b.data);
  nn::Tensor at = env.observation_at({2, 2});
  nn::Tensor at2 = env.observation_at({2, 2});
  CHECK(at.data == at2.data);
}
