// Copyright 2026 The sfcraft Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SFCRAFT_GRIDWORLD_H_
#define SFCRAFT_GRIDWORLD_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sfcraft/tasks.h"

namespace sfcraft {

// Object channels of the observation, in feature order.
inline constexpr int kNumChannels = 5;

enum class Cell : std::uint8_t {
  kEmpty = 0,
  kWood,
  kIron,
  kCoal,
  kTable,
  kTrap,
};

// Feature index of an object cell; nullopt for kEmpty.
std::optional<int> CellFeature(Cell cell);
Cell FeatureCell(int feature);

enum class Move : int { kNorth = 0, kSouth = 1, kEast = 2, kWest = 3 };

std::string_view MoveName(Move move);

struct Position {
  int row = 0;
  int col = 0;
  friend bool operator==(const Position&, const Position&) = default;
};

struct EnvConfig {
  int height = 12;
  int width = 12;
  int n_wood = 4;
  int n_iron = 4;
  int n_coal = 4;
  int n_tables = 1;
  int n_traps = 6;
  int max_steps = 300;

  // Smaller board used for desk-scale experiments.
  static EnvConfig Desk8x8();

  int ObjectCount() const {
    return n_wood + n_iron + n_coal + n_tables + n_traps;
  }
  int CountFor(Cell cell) const;
  // Throws ConfigError when counts are negative or do not fit the board.
  void Validate() const;

  friend bool operator==(const EnvConfig&, const EnvConfig&) = default;
};

// Full simulator state. Copyable; copies evolve independently, which the
// exhaustive-search oracle relies on.
struct GridState {
  int height = 0;
  int width = 0;
  std::vector<Cell> cells;  // row-major
  Position agent;
  Inventory inventory{};
  int step_count = 0;
  bool done = false;
  Rng rng;

  Cell at(int row, int col) const { return cells[row * width + col]; }
  Cell& at(int row, int col) { return cells[row * width + col]; }
  int CountCells(Cell cell) const;

  friend bool operator==(const GridState&, const GridState&) = default;
};

// Agent-centred view. grid is height x width x kNumChannels, channel-last,
// with the agent's cell at (height / 2, width / 2).
struct Observation {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> grid;
  Inventory inventory{};
  std::optional<std::array<double, kNumFeatures>> task_input;

  std::uint8_t at(int row, int col, int channel) const {
    return grid[(row * width + col) * kNumChannels + channel];
  }
  friend bool operator==(const Observation&, const Observation&) = default;
};

enum class StepEvent { kNone, kPickup, kTable, kTrap, kTimeout };

std::string_view StepEventName(StepEvent event);

struct StepOutcome {
  Observation observation;
  FeatureVector features{};
  double reward = 0.0;
  bool done = false;
  StepEvent info = StepEvent::kNone;
};

// The crafting grid game. Toroidal, egocentric, one agent. A freshly
// constructed environment is in reward-free (pre-training) mode until a
// TaskBinding is set.
class GridWorld {
 public:
  explicit GridWorld(EnvConfig config);

  const EnvConfig& config() const { return config_; }
  const GridState& state() const { return state_; }
  void set_state(GridState state) { state_ = std::move(state); }

  // nullopt selects reward-free mode: rewards are 0 and no reward function
  // is ever evaluated.
  void BindTask(std::optional<TaskBinding> binding) { binding_ = binding; }
  const std::optional<TaskBinding>& binding() const { return binding_; }

  // Appends the given vector to every observation (goal-conditioned mode).
  void set_task_input(std::optional<std::array<double, kNumFeatures>> input) {
    task_input_ = input;
  }

  Observation Reset(std::uint64_t seed);
  // Throws UsageError when the episode is already done.
  StepOutcome Step(Move move);
  // Step without building the observation (left empty).
  StepOutcome Advance(Move move);

  Observation Observe() const;

  // Number of reward evaluations performed; stays 0 in reward-free mode.
  std::int64_t reward_evaluations() const { return reward_evaluations_; }

 private:
  Position RandomEmptyCell();

  EnvConfig config_;
  GridState state_;
  std::optional<TaskBinding> binding_;
  std::optional<std::array<double, kNumFeatures>> task_input_;
  std::int64_t reward_evaluations_ = 0;
};

// Legend: '.' empty, 'w' wood, 'i' iron, 'c' coal, 'T' table, '~' trap,
// 'A' agent. One line per row, each terminated by '\n'.
std::string RenderAscii(const GridState& state);

// Absolute-grid view rebuilt from an observation and the agent position.
std::vector<Cell> DecentreObservation(const Observation& obs, Position agent);

}  // namespace sfcraft

#endif  // SFCRAFT_GRIDWORLD_H_
