#include "ibrl/env_grid.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace ibrl::env {

namespace {

constexpr int kMinStartGoalDistance = 6;

int manhattan(Cell a, Cell b) {
  return std::abs(a.row - b.row) + std::abs(a.col - b.col);
}

std::vector<Cell> free_cells(const MazeLayout& m) {
  std::vector<Cell> cells;
  for (int r = 1; r < kGridSize - 1; ++r)
    for (int c = 1; c < kGridSize - 1; ++c)
      if (!m.walls[r][c]) cells.push_back({r, c});
  return cells;
}

bool path_exists(const MazeLayout& m, Cell from, Cell to) {
  std::array<std::array<bool, kGridSize>, kGridSize> seen{};
  std::deque<Cell> queue{from};
  seen[from.row][from.col] = true;
  while (!queue.empty()) {
    Cell cur = queue.front();
    queue.pop_front();
    if (cur == to) return true;
    const int dr[] = {-1, 1, 0, 0};
    const int dc[] = {0, 0, -1, 1};
    for (int k = 0; k < 4; ++k) {
      const int r = cur.row + dr[k], c = cur.col + dc[k];
      if (r < 0 || r >= kGridSize || c < 0 || c >= kGridSize) continue;
      if (m.walls[r][c] || seen[r][c]) continue;
      seen[r][c] = true;
      queue.push_back({r, c});
    }
  }
  return false;
}

}  // namespace

bool maze_solvable(const MazeLayout& layout) {
  return !layout.wall(layout.start.row, layout.start.col) &&
         !layout.wall(layout.goal.row, layout.goal.col) &&
         path_exists(layout, layout.start, layout.goal);
}

MazeLayout generate_maze(uint64_t seed) {
  std::mt19937_64 rng(seed);
  MazeLayout m;
  m.seed = seed;
  for (int r = 0; r < kGridSize; ++r)
    for (int c = 0; c < kGridSize; ++c) m.walls[r][c] = true;

  // Carve a spanning tree over the odd-coordinate lattice (5x5 nodes on a
  // 12x12 grid with a solid border) by randomized depth-first search.
  std::vector<Cell> stack;
  std::array<std::array<bool, kGridSize>, kGridSize> visited{};
  Cell startNode{1, 1};
  m.walls[1][1] = false;
  visited[1][1] = true;
  stack.push_back(startNode);
  while (!stack.empty()) {
    Cell cur = stack.back();
    std::array<int, 4> order{0, 1, 2, 3};
    std::shuffle(order.begin(), order.end(), rng);
    const int dr[] = {-2, 2, 0, 0};
    const int dc[] = {0, 0, -2, 2};
    bool advanced = false;
    for (int k : order) {
      const int r = cur.row + dr[k], c = cur.col + dc[k];
      if (r < 1 || r >= kGridSize - 1 || c < 1 || c >= kGridSize - 1) continue;
      if (visited[r][c]) continue;
      visited[r][c] = true;
      m.walls[r][c] = false;
      m.walls[(cur.row + r) / 2][(cur.col + c) / 2] = false;
      stack.push_back({r, c});
      advanced = true;
      break;
    }
    if (!advanced) stack.pop_back();
  }

  // Knock out 60% of the remaining interior walls: the layouts in the
  // source figures are open rooms with sparse irregular walls, and an
  // on-policy agent has to be able to stumble onto the sparse goal reward
  // within the 100-step horizon for learning to start at all.
  std::vector<Cell> interior_walls;
  for (int r = 1; r < kGridSize - 1; ++r)
    for (int c = 1; c < kGridSize - 1; ++c)
      if (m.walls[r][c]) interior_walls.push_back({r, c});
  std::shuffle(interior_walls.begin(), interior_walls.end(), rng);
  const size_t remove = interior_walls.size() * 4 / 10;
  for (size_t i = 0; i < remove; ++i)
    m.walls[interior_walls[i].row][interior_walls[i].col] = false;

  // Start/goal among free cells, far apart. The carved grid is connected,
  // but verify anyway before accepting a pair.
  auto cells = free_cells(m);
  std::uniform_int_distribution<size_t> pick(0, cells.size() - 1);
  for (;;) {
    Cell s = cells[pick(rng)];
    Cell g = cells[pick(rng)];
    if (s == g || manhattan(s, g) < kMinStartGoalDistance) continue;
    m.start = s;
    m.goal = g;
    if (maze_solvable(m)) break;
  }
  return m;
}

std::string layout_to_text(const MazeLayout& layout) {
  std::string out;
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      Cell cell{r, c};
      if (cell == layout.start)
        out += 'S';
      else if (cell == layout.goal)
        out += 'G';
      else
        out += layout.walls[r][c] ? '#' : '.';
    }
    out += '\n';
  }
  return out;
}

MazeLayout layout_from_text(const std::string& text) {
  MazeLayout m;
  std::istringstream in(text);
  std::string line;
  int r = 0;
  bool have_start = false, have_goal = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (r >= kGridSize || line.size() != kGridSize)
      throw ArtifactError("maze text: expected 12 rows of 12 characters");
    for (int c = 0; c < kGridSize; ++c) {
      switch (line[c]) {
        case '#': m.walls[r][c] = true; break;
        case '.': m.walls[r][c] = false; break;
        case 'S':
          m.walls[r][c] = false;
          m.start = {r, c};
          have_start = true;
          break;
        case 'G':
          m.walls[r][c] = false;
          m.goal = {r, c};
          have_goal = true;
          break;
        default:
          throw ArtifactError(std::string("maze text: bad character '") +
                              line[c] + "'");
      }
    }
    ++r;
  }
  if (r != kGridSize) throw ArtifactError("maze text: expected 12 rows");
  if (!have_start || !have_goal)
    throw ArtifactError("maze text: missing S or G");
  if (!maze_solvable(m)) throw ArtifactError("maze text: unsolvable layout");
  return m;
}

GridEnv::GridEnv(MazeLayout layout) : layout_(std::move(layout)) {
  if (!maze_solvable(layout_))
    throw ArtifactError("GridEnv: layout is not solvable");
  agent_ = layout_.start;
}

nn::Tensor GridEnv::observation_at(Cell agent_pos) const {
  nn::Tensor obs({1, kGridSize, kGridSize, kGridChannels});
  for (int r = 0; r < kGridSize; ++r)
    for (int c = 0; c < kGridSize; ++c)
      obs.data[(r * kGridSize + c) * kGridChannels + 0] =
          layout_.walls[r][c] ? 1.0 : 0.0;
  obs.data[(layout_.goal.row * kGridSize + layout_.goal.col) * kGridChannels +
           1] = 1.0;
  obs.data[(agent_pos.row * kGridSize + agent_pos.col) * kGridChannels + 2] =
      1.0;
  return obs;
}

nn::Tensor GridEnv::observation() const { return observation_at(agent_); }

nn::Tensor GridEnv::reset() {
  agent_ = layout_.start;
  steps_ = 0;
  done_ = false;
  started_ = true;
  return observation();
}

GridEnv::StepResult GridEnv::step(int action) {
  if (!started_) throw ArtifactError("GridEnv: step before reset");
  if (done_) throw ArtifactError("GridEnv: step after episode end");
  if (action < 0 || action >= kGridActions)
    throw ArtifactError("GridEnv: invalid action " + std::to_string(action));
  const int dr[] = {-1, 1, 0, 0};
  const int dc[] = {0, 0, -1, 1};
  const int r = agent_.row + dr[action];
  const int c = agent_.col + dc[action];
  if (!layout_.walls[r][c]) agent_ = {r, c};
  ++steps_;
  StepResult out;
  if (agent_ == layout_.goal) {
    out.reward = 1.0;
    done_ = true;
  } else if (steps_ >= kGridHorizon) {
    done_ = true;
  }
  out.done = done_;
  out.observation = observation();
  return out;
}

TransferSplit sample_transfer_split(std::mt19937_64& rng) {
  TransferSplit split;
  std::vector<MazeLayout> mazes;
  while (mazes.size() < 4) {
    MazeLayout m = generate_maze(rng());
    bool dup = false;
    for (const auto& other : mazes) dup = dup || (m == other);
    if (!dup) mazes.push_back(std::move(m));
  }
  split.train = {mazes[0], mazes[1], mazes[2]};
  split.test = mazes[3];
  return split;
}

}  // namespace ibrl::env
