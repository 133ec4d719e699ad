#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ibrl/tensor.hpp"

namespace ibrl::env {

constexpr int kGridSize = 12;
constexpr int kGridChannels = 3;  // walls, goal, agent
constexpr int kGridActions = 4;   // up, down, left, right
constexpr int kGridHorizon = 100;

struct Cell {
  int row = 0;
  int col = 0;
  bool operator==(const Cell&) const = default;
};

struct MazeLayout {
  std::array<std::array<bool, kGridSize>, kGridSize> walls{};
  Cell start;
  Cell goal;
  uint64_t seed = 0;

  bool wall(int r, int c) const { return walls[r][c]; }
  bool operator==(const MazeLayout& o) const { return walls == o.walls; }
};

// Randomized-DFS maze on the interior lattice with 40% of the remaining
// interior walls knocked out (open rooms, sparse irregular walls),
// start/goal at Manhattan distance >= 6.
// Always solvable; deterministic in seed.
MazeLayout generate_maze(uint64_t seed);

bool maze_solvable(const MazeLayout& layout);

// Text form: rows of '#', '.', 'S', 'G'.
std::string layout_to_text(const MazeLayout& layout);
MazeLayout layout_from_text(const std::string& text);

class GridEnv {
 public:
  explicit GridEnv(MazeLayout layout);

  // (12,12,3) observation with a leading batch axis of 1.
  nn::Tensor reset();

  struct StepResult {
    nn::Tensor observation;
    double reward = 0.0;
    bool done = false;
  };
  StepResult step(int action);  // 0 up, 1 down, 2 left, 3 right

  bool done() const { return done_; }
  int step_count() const { return steps_; }
  const MazeLayout& layout() const { return layout_; }
  Cell agent() const { return agent_; }

  nn::Tensor observation() const;
  // Observation for an arbitrary agent position (embedding export).
  nn::Tensor observation_at(Cell agent_pos) const;

 private:
  MazeLayout layout_;
  Cell agent_;
  int steps_ = 0;
  bool done_ = false;
  bool started_ = false;
};

struct TransferSplit {
  std::vector<MazeLayout> train;  // 3 layouts
  MazeLayout test;
};

TransferSplit sample_transfer_split(std::mt19937_64& rng);

}  // namespace ibrl::env
