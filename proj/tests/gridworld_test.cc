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

#include <gtest/gtest.h>

#include <set>

#include "sfcraft/errors.h"
#include "sfcraft/gridworld.h"

namespace sfcraft {
namespace {

// A hand-placed board: agent at (0, 0), one object of each kind.
GridState Fixture(int size = 4) {
  GridState s;
  s.height = size;
  s.width = size;
  s.cells.assign(size * size, Cell::kEmpty);
  s.agent = {0, 0};
  s.at(0, 1) = Cell::kWood;
  s.at(1, 0) = Cell::kTable;
  s.at(0, size - 1) = Cell::kTrap;
  s.at(size - 1, 0) = Cell::kIron;
  s.rng.seed(7);
  return s;
}

EnvConfig SmallConfig(int size = 4) {
  EnvConfig c;
  c.height = size;
  c.width = size;
  c.n_wood = 1;
  c.n_iron = 1;
  c.n_coal = 0;
  c.n_tables = 1;
  c.n_traps = 1;
  return c;
}

TEST(EnvConfigTest, Desk8x8Counts) {
  const EnvConfig c = EnvConfig::Desk8x8();
  EXPECT_EQ(c.height, 8);
  EXPECT_EQ(c.width, 8);
  EXPECT_EQ(c.ObjectCount(), 10);
  EXPECT_NO_THROW(c.Validate());
}

TEST(EnvConfigTest, RejectsOvercrowdedBoard) {
  EnvConfig c = SmallConfig(2);
  c.n_wood = 3;
  try {
    c.Validate();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("2x2"), std::string::npos);
  }
  EXPECT_THROW(GridWorld{c}, ConfigError);
  c = SmallConfig();
  c.n_traps = -1;
  EXPECT_THROW(c.Validate(), ConfigError);
}

TEST(GridWorldTest, ResetPlacesEveryObject) {
  GridWorld env(EnvConfig::Desk8x8());
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    env.Reset(seed);
    const GridState& s = env.state();
    EXPECT_EQ(s.CountCells(Cell::kWood), 2);
    EXPECT_EQ(s.CountCells(Cell::kIron), 2);
    EXPECT_EQ(s.CountCells(Cell::kCoal), 2);
    EXPECT_EQ(s.CountCells(Cell::kTable), 1);
    EXPECT_EQ(s.CountCells(Cell::kTrap), 3);
    EXPECT_EQ(s.at(s.agent.row, s.agent.col), Cell::kEmpty);
  }
}

TEST(GridWorldTest, ResetIsDeterministic) {
  GridWorld a(EnvConfig::Desk8x8()), b(EnvConfig::Desk8x8());
  EXPECT_EQ(a.Reset(11), b.Reset(11));
  EXPECT_EQ(a.state(), b.state());
  GridWorld c(EnvConfig::Desk8x8());
  c.Reset(12);
  EXPECT_NE(a.state().cells, c.state().cells);
}

TEST(GridWorldTest, MovementWrapsAround) {
  GridWorld env(SmallConfig());
  env.Reset(0);
  GridState s = Fixture();
  s.cells.assign(16, Cell::kEmpty);
  env.set_state(s);
  env.Step(Move::kNorth);
  EXPECT_EQ(env.state().agent, (Position{3, 0}));
  env.Step(Move::kWest);
  EXPECT_EQ(env.state().agent, (Position{3, 3}));
  env.Step(Move::kSouth);
  EXPECT_EQ(env.state().agent, (Position{0, 3}));
  env.Step(Move::kEast);
  EXPECT_EQ(env.state().agent, (Position{0, 0}));
}

TEST(GridWorldTest, PickupEmitsFeatureAndRespawns) {
  GridWorld env(SmallConfig());
  env.Reset(0);
  env.set_state(Fixture());
  const StepOutcome out = env.Step(Move::kEast);
  EXPECT_EQ(out.features, OneHotFeature(kWood));
  EXPECT_EQ(out.info, StepEvent::kPickup);
  EXPECT_FALSE(out.done);
  EXPECT_EQ(out.reward, 0.0);
  const GridState& s = env.state();
  EXPECT_EQ(s.inventory, (Inventory{1, 0, 0}));
  EXPECT_EQ(s.CountCells(Cell::kWood), 1);
  EXPECT_NE(s.at(0, 1), Cell::kWood);  // never respawns under the agent
}

TEST(GridWorldTest, TableKeepsInventoryInRewardFreeMode) {
  GridWorld env(SmallConfig());
  env.Reset(0);
  GridState s = Fixture();
  s.inventory = {1, 0, 0};
  env.set_state(s);
  const StepOutcome out = env.Step(Move::kSouth);
  EXPECT_EQ(out.info, StepEvent::kTable);
  EXPECT_EQ(out.features, OneHotFeature(kTable));
  EXPECT_EQ(env.state().inventory, (Inventory{1, 0, 0}));
  EXPECT_EQ(env.state().CountCells(Cell::kTable), 1);
  EXPECT_EQ(env.reward_evaluations(), 0);
}

TEST(GridWorldTest, CraftingConsumesRecipe) {
  GridWorld env(SmallConfig());
  env.Reset(0);
  env.BindTask(TaskBinding{Suite::kCraftStaff, std::nullopt});
  GridState s = Fixture();
  s.inventory = {2, 1, 0};
  env.set_state(s);
  const StepOutcome out = env.Step(Move::kSouth);
  EXPECT_DOUBLE_EQ(out.reward, 1.0);
  EXPECT_EQ(env.state().inventory, (Inventory{1, 1, 0}));
  EXPECT_EQ(env.reward_evaluations(), 1);
}

TEST(GridWorldTest, TrapEndsEpisodeAndIsCleared) {
  GridWorld env(SmallConfig());
  env.Reset(0);
  env.BindTask(TaskBinding{Suite::kOneItem, std::nullopt});
  env.set_state(Fixture());
  const StepOutcome out = env.Step(Move::kWest);
  EXPECT_TRUE(out.done);
  EXPECT_EQ(out.info, StepEvent::kTrap);
  EXPECT_DOUBLE_EQ(out.reward, -1.0);
  EXPECT_EQ(env.state().CountCells(Cell::kTrap), 0);
  EXPECT_THROW(env.Step(Move::kEast), UsageError);
}

TEST(GridWorldTest, TimeoutAtMaxSteps) {
  EnvConfig c = SmallConfig();
  c.max_steps = 3;
  c.n_traps = 0;
  c.n_wood = c.n_iron = c.n_tables = 0;
  GridWorld env(c);
  env.Reset(1);
  EXPECT_FALSE(env.Step(Move::kNorth).done);
  EXPECT_FALSE(env.Step(Move::kNorth).done);
  const StepOutcome out = env.Step(Move::kNorth);
  EXPECT_TRUE(out.done);
  EXPECT_EQ(out.info, StepEvent::kTimeout);
}

TEST(GridWorldTest, StepBeforeResetThrows) {
  GridWorld env(SmallConfig());
  EXPECT_THROW(env.Step(Move::kNorth), UsageError);
}

TEST(GridWorldTest, ObservationIsAgentCentred) {
  GridWorld env(SmallConfig());
  env.Reset(0);
  env.set_state(Fixture());
  const Observation obs = env.Observe();
  // Centre is (2, 2); wood one step east, table one south, trap one west
  // (wrapping), iron one north (wrapping).
  EXPECT_EQ(obs.at(2, 3, kWood), 1);
  EXPECT_EQ(obs.at(3, 2, kTable), 1);
  EXPECT_EQ(obs.at(2, 1, kTrap), 1);
  EXPECT_EQ(obs.at(1, 2, kIron), 1);
  int total = 0;
  for (auto v : obs.grid) total += v;
  EXPECT_EQ(total, 4);
  EXPECT_FALSE(obs.task_input.has_value());
}

TEST(GridWorldTest, DecentreInvertsObservation) {
  GridWorld env(EnvConfig::Desk8x8());
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Observation obs = env.Reset(seed);
    EXPECT_EQ(DecentreObservation(obs, env.state().agent), env.state().cells);
  }
}

TEST(GridWorldTest, TaskInputIsAppended) {
  GridWorld env(SmallConfig());
  env.set_task_input(std::array<double, kNumFeatures>{0, 1, 0, 0, 0});
  const Observation obs = env.Reset(0);
  ASSERT_TRUE(obs.task_input.has_value());
  EXPECT_EQ((*obs.task_input)[1], 1.0);
}

TEST(GridWorldTest, AdvanceMatchesStep) {
  GridWorld a(EnvConfig::Desk8x8()), b(EnvConfig::Desk8x8());
  a.Reset(3);
  b.Reset(3);
  Rng rng(1);
  for (int t = 0; t < 300 && !a.state().done; ++t) {
    const Move m = static_cast<Move>(rng() % kNumActions);
    const StepOutcome x = a.Step(m);
    const StepOutcome y = b.Advance(m);
    EXPECT_EQ(x.features, y.features);
    EXPECT_EQ(x.done, y.done);
    EXPECT_TRUE(y.observation.grid.empty());
  }
  EXPECT_EQ(a.state(), b.state());
}

TEST(GridWorldTest, ObjectCountsConservedOverRandomPlay) {
  GridWorld env(EnvConfig::Desk8x8());
  Rng rng(2);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    env.Reset(seed);
    int traps = 3;
    while (!env.state().done) {
      const StepOutcome out = env.Step(static_cast<Move>(rng() % kNumActions));
      if (out.info == StepEvent::kTrap) --traps;
      const GridState& s = env.state();
      EXPECT_EQ(s.CountCells(Cell::kWood), 2);
      EXPECT_EQ(s.CountCells(Cell::kTable), 1);
      EXPECT_EQ(s.CountCells(Cell::kTrap), traps);
      EXPECT_LE(s.step_count, 300);
    }
  }
}

TEST(RenderTest, LegendAndShape) {
  const std::string art = RenderAscii(Fixture());
  EXPECT_EQ(art, "Aw.~\nT...\n....\ni...\n");
}

TEST(CellFeatureTest, RoundTrip) {
  EXPECT_FALSE(CellFeature(Cell::kEmpty).has_value());
  for (int k = 0; k < kNumFeatures; ++k) EXPECT_EQ(CellFeature(FeatureCell(k)), k);
  EXPECT_THROW(FeatureCell(5), UsageError);
}

}  // namespace
}  // namespace sfcraft
