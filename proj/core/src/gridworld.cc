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

#include "sfcraft/gridworld.h"

#include <algorithm>
#include <string>

#include "sfcraft/errors.h"

namespace sfcraft {
namespace {

int Wrap(int value, int size) {
  int r = value % size;
  return r < 0 ? r + size : r;
}

char Glyph(Cell cell) {
  switch (cell) {
    case Cell::kEmpty:
      return '.';
    case Cell::kWood:
      return 'w';
    case Cell::kIron:
      return 'i';
    case Cell::kCoal:
      return 'c';
    case Cell::kTable:
      return 'T';
    case Cell::kTrap:
      return '~';
  }
  return '?';
}

}  // namespace

std::optional<int> CellFeature(Cell cell) {
  if (cell == Cell::kEmpty) return std::nullopt;
  return static_cast<int>(cell) - 1;
}

Cell FeatureCell(int feature) {
  if (feature < 0 || feature >= kNumFeatures) {
    throw UsageError("feature index out of range: " + std::to_string(feature));
  }
  return static_cast<Cell>(feature + 1);
}

std::string_view MoveName(Move move) {
  switch (move) {
    case Move::kNorth:
      return "N";
    case Move::kSouth:
      return "S";
    case Move::kEast:
      return "E";
    case Move::kWest:
      return "W";
  }
  return "?";
}

std::string_view StepEventName(StepEvent event) {
  switch (event) {
    case StepEvent::kNone:
      return "none";
    case StepEvent::kPickup:
      return "pickup";
    case StepEvent::kTable:
      return "table";
    case StepEvent::kTrap:
      return "trap";
    case StepEvent::kTimeout:
      return "timeout";
  }
  return "unknown";
}

EnvConfig EnvConfig::Desk8x8() {
  EnvConfig config;
  config.height = 8;
  config.width = 8;
  config.n_wood = 2;
  config.n_iron = 2;
  config.n_coal = 2;
  config.n_tables = 1;
  config.n_traps = 3;
  return config;
}

int EnvConfig::CountFor(Cell cell) const {
  switch (cell) {
    case Cell::kWood:
      return n_wood;
    case Cell::kIron:
      return n_iron;
    case Cell::kCoal:
      return n_coal;
    case Cell::kTable:
      return n_tables;
    case Cell::kTrap:
      return n_traps;
    case Cell::kEmpty:
      break;
  }
  return 0;
}

void EnvConfig::Validate() const {
  if (height < 1 || width < 1) {
    throw ConfigError("grid must be at least 1x1, got " +
                      std::to_string(height) + "x" + std::to_string(width));
  }
  if (max_steps < 1) throw ConfigError("max_steps must be positive");
  for (int count : {n_wood, n_iron, n_coal, n_tables, n_traps}) {
    if (count < 0) throw ConfigError("object counts must be non-negative");
  }
  const int free_cells = height * width - 1;  // one cell for the agent
  if (ObjectCount() > free_cells) {
    throw ConfigError("configuration places " + std::to_string(ObjectCount()) +
                      " objects but only " + std::to_string(free_cells) +
                      " cells are free on a " + std::to_string(height) + "x" +
                      std::to_string(width) + " grid");
  }
}

int GridState::CountCells(Cell cell) const {
  return static_cast<int>(std::count(cells.begin(), cells.end(), cell));
}

GridWorld::GridWorld(EnvConfig config) : config_(config) {
  config_.Validate();
}

Position GridWorld::RandomEmptyCell() {
  std::uniform_int_distribution<int> pick(0, state_.height * state_.width - 1);
  // Rejection sampling; Validate() guarantees at least one free cell.
  while (true) {
    const int index = pick(state_.rng);
    const Position p{index / state_.width, index % state_.width};
    if (state_.cells[index] == Cell::kEmpty && !(p == state_.agent)) return p;
  }
}

Observation GridWorld::Reset(std::uint64_t seed) {
  state_ = GridState{};
  state_.height = config_.height;
  state_.width = config_.width;
  state_.cells.assign(config_.height * config_.width, Cell::kEmpty);
  state_.rng.seed(seed);

  std::uniform_int_distribution<int> pick(0, state_.height * state_.width - 1);
  const int agent_index = pick(state_.rng);
  state_.agent = {agent_index / state_.width, agent_index % state_.width};
  for (Cell cell : {Cell::kWood, Cell::kIron, Cell::kCoal, Cell::kTable,
                    Cell::kTrap}) {
    for (int i = 0; i < config_.CountFor(cell); ++i) {
      const Position p = RandomEmptyCell();
      state_.at(p.row, p.col) = cell;
    }
  }
  return Observe();
}

StepOutcome GridWorld::Step(Move move) {
  StepOutcome out = Advance(move);
  out.observation = Observe();
  return out;
}

StepOutcome GridWorld::Advance(Move move) {
  if (state_.done) throw UsageError("step called on a finished episode");
  if (state_.cells.empty()) throw UsageError("step called before reset");

  Position& agent = state_.agent;
  switch (move) {
    case Move::kNorth:
      agent.row = Wrap(agent.row - 1, state_.height);
      break;
    case Move::kSouth:
      agent.row = Wrap(agent.row + 1, state_.height);
      break;
    case Move::kEast:
      agent.col = Wrap(agent.col + 1, state_.width);
      break;
    case Move::kWest:
      agent.col = Wrap(agent.col - 1, state_.width);
      break;
  }

  StepOutcome out;
  const Inventory inventory_before = state_.inventory;
  Cell& cell = state_.at(agent.row, agent.col);
  const Cell entered = cell;
  if (const auto feature = CellFeature(entered)) {
    out.features = OneHotFeature(*feature);
    cell = Cell::kEmpty;
    if (entered == Cell::kTrap) {
      state_.done = true;
      out.info = StepEvent::kTrap;
    } else {
      if (*feature < kNumResources) {
        ++state_.inventory[*feature];
        out.info = StepEvent::kPickup;
      } else {
        out.info = StepEvent::kTable;
      }
      const Position respawn = RandomEmptyCell();
      state_.at(respawn.row, respawn.col) = entered;
    }
  }

  if (binding_) {
    ++reward_evaluations_;
    const RewardOutcome reward =
        SuiteReward(*binding_, out.features, inventory_before);
    out.reward = reward.reward;
    for (int r = 0; r < kNumResources; ++r) {
      state_.inventory[r] -= reward.consumed[r];
    }
  }

  ++state_.step_count;
  if (state_.step_count >= config_.max_steps && !state_.done) {
    state_.done = true;
    if (out.info == StepEvent::kNone) out.info = StepEvent::kTimeout;
  }
  out.done = state_.done;
  return out;
}

Observation GridWorld::Observe() const {
  Observation obs;
  obs.height = state_.height;
  obs.width = state_.width;
  obs.grid.assign(state_.height * state_.width * kNumChannels, 0);
  obs.inventory = state_.inventory;
  obs.task_input = task_input_;
  const int centre_row = state_.height / 2;
  const int centre_col = state_.width / 2;
  for (int r = 0; r < state_.height; ++r) {
    const int world_row = Wrap(state_.agent.row + r - centre_row, state_.height);
    for (int c = 0; c < state_.width; ++c) {
      const int world_col =
          Wrap(state_.agent.col + c - centre_col, state_.width);
      if (const auto feature = CellFeature(state_.at(world_row, world_col))) {
        obs.grid[(r * state_.width + c) * kNumChannels + *feature] = 1;
      }
    }
  }
  return obs;
}

std::string RenderAscii(const GridState& state) {
  std::string out;
  out.reserve((state.width + 1) * state.height);
  for (int r = 0; r < state.height; ++r) {
    for (int c = 0; c < state.width; ++c) {
      out += (state.agent == Position{r, c}) ? 'A' : Glyph(state.at(r, c));
    }
    out += '\n';
  }
  return out;
}

std::vector<Cell> DecentreObservation(const Observation& obs, Position agent) {
  std::vector<Cell> cells(obs.height * obs.width, Cell::kEmpty);
  const int centre_row = obs.height / 2;
  const int centre_col = obs.width / 2;
  for (int r = 0; r < obs.height; ++r) {
    for (int c = 0; c < obs.width; ++c) {
      for (int ch = 0; ch < kNumChannels; ++ch) {
        if (obs.at(r, c, ch) == 0) continue;
        const int world_row = Wrap(agent.row + r - centre_row, obs.height);
        const int world_col = Wrap(agent.col + c - centre_col, obs.width);
        cells[world_row * obs.width + world_col] = FeatureCell(ch);
      }
    }
  }
  return cells;
}

}  // namespace sfcraft
