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

#include <cmath>

#include "sfcraft/agents.h"
#include "sfcraft/errors.h"
#include "sfcraft/oracle.h"

namespace sfcraft {
namespace {

// One non-terminal state looping on itself and emitting feature 0.
TabularMdp SelfLoop(double gamma) {
  TabularMdp mdp;
  mdp.num_states = 1;
  mdp.num_actions = 1;
  mdp.num_features = 1;
  mdp.gamma = gamma;
  mdp.phi = Eigen::MatrixXd::Ones(1, 1);
  mdp.terminal = {false};
  mdp.transitions = {{{0, 1.0}}};
  return mdp;
}

TEST(AnalyticSfTest, GeometricSeries) {
  for (double gamma : {0.0, 0.5, 0.9, 0.99}) {
    const TabularMdp mdp = SelfLoop(gamma);
    const Eigen::MatrixXd psi = AnalyticSf(mdp, DeterministicPolicy({0}, 1));
    EXPECT_NEAR(psi(0, 0), 1.0 / (1.0 - gamma), 1e-9) << gamma;
  }
}

TEST(AnalyticSfTest, SingularSystemThrows) {
  EXPECT_THROW(AnalyticSf(SelfLoop(1.0), DeterministicPolicy({0}, 1)),
               NumericalError);
}

TEST(AnalyticSfTest, ZeroDiscountIsNextFeatures) {
  const TabularMdp mdp = FourByFourGrid(0.0);
  const Eigen::MatrixXd policy =
      Eigen::MatrixXd::Constant(mdp.num_states, mdp.num_actions, 0.25);
  const Eigen::MatrixXd psi = AnalyticSf(mdp, policy);
  for (int s = 0; s < mdp.num_states; ++s) {
    for (int a = 0; a < mdp.num_actions; ++a) {
      const int next = mdp.Next(s, a)[0].next_state;
      EXPECT_EQ(psi.row(s * mdp.num_actions + a), mdp.phi.row(next));
    }
  }
}

TEST(AnalyticSfTest, ChainClosedForm) {
  // Always move right: from state 0 reach 1 then 2 (terminal).
  const TabularMdp mdp = ThreeStateChain(0.9);
  const Eigen::MatrixXd psi = AnalyticSf(mdp, DeterministicPolicy({1, 1, 1}, 2));
  EXPECT_NEAR(psi(0 * 2 + 1, 1), 0.9, 1e-12);
  EXPECT_NEAR(psi(1 * 2 + 1, 1), 1.0, 1e-12);
  // Left from 0 arrives in 0 (feature 0), then right twice.
  EXPECT_NEAR(psi(0 * 2 + 0, 0), 1.0, 1e-12);
  EXPECT_NEAR(psi(0 * 2 + 0, 1), 0.81, 1e-12);
}

// Monte Carlo estimate of psi under a stochastic policy.
TEST(AnalyticSfTest, MatchesMonteCarloUnderStochasticPolicy) {
  const TabularMdp mdp = FourByFourGrid(0.9);
  Eigen::MatrixXd policy(mdp.num_states, mdp.num_actions);
  for (int s = 0; s < mdp.num_states; ++s) policy.row(s) << 0.1, 0.4, 0.4, 0.1;
  const Eigen::MatrixXd psi = AnalyticSf(mdp, policy);

  Rng rng(17);
  std::discrete_distribution<int> act({0.1, 0.4, 0.4, 0.1});
  constexpr int kRollouts = 100000;
  for (const auto [s0, a0] : {std::pair{0, 1}, std::pair{5, 2}, std::pair{10, 3}}) {
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(2);
    for (int n = 0; n < kRollouts; ++n) {
      int s = s0;
      int a = a0;
      double discount = 1.0;
      for (int t = 0; t < 300 && discount > 1e-10; ++t) {
        const int next = mdp.Next(s, a)[0].next_state;
        sum += discount * mdp.phi.row(next);
        if (mdp.terminal[next]) break;
        discount *= mdp.gamma;
        s = next;
        a = act(rng);
      }
    }
    const Eigen::RowVectorXd mc = sum / kRollouts;
    for (int k = 0; k < 2; ++k) {
      EXPECT_NEAR(mc(k), psi(s0 * 4 + a0, k), 0.02)
          << "s=" << s0 << " a=" << a0 << " k=" << k;
    }
  }
}

TEST(ValueIterationTest, ChainOptimalValues) {
  const TabularMdp mdp = ThreeStateChain(0.9);
  Eigen::VectorXd w(2);
  w << 0.0, 1.0;
  const Eigen::MatrixXd q = ValueIteration(mdp, LinearStateReward(mdp, w));
  EXPECT_NEAR(q(1, 1), 1.0, 1e-7);
  EXPECT_NEAR(q(0, 1), 0.9, 1e-7);
  EXPECT_NEAR(q(1, 0), 0.81, 1e-7);
  EXPECT_NEAR(q(0, 0), 0.81, 1e-7);
  EXPECT_EQ(GreedyActions(q.topRows(2)), (std::vector<int>{1, 1}));
}

TEST(ValueIterationTest, AgreesWithSfOfGreedyPolicy) {
  for (double w0 : {-1.0, 0.0, 0.3, 2.0}) {
    const TabularMdp mdp = FourByFourGrid(0.9);
    Eigen::VectorXd w(2);
    w << 1.0, w0;
    const Eigen::MatrixXd q = ValueIteration(mdp, LinearStateReward(mdp, w));
    const Eigen::MatrixXd psi =
        AnalyticSf(mdp, DeterministicPolicy(GreedyActions(q), 4));
    EXPECT_LT((SfToQ(psi, w, 4) - q).cwiseAbs().maxCoeff(), 1e-6) << w0;
  }
}

TEST(ValueIterationTest, RequiresDiscount) {
  EXPECT_THROW(ValueIteration(ThreeStateChain(1.0), Eigen::VectorXd::Zero(3)),
               UsageError);
}

TEST(TabularMdpTest, ValidateRejectsBadRows) {
  TabularMdp mdp = ThreeStateChain(0.9);
  EXPECT_NO_THROW(mdp.Validate());
  mdp.transitions[0] = {{1, 0.5}};
  EXPECT_THROW(mdp.Validate(), UsageError);
  mdp = ThreeStateChain(0.9);
  mdp.transitions[0] = {{7, 1.0}};
  EXPECT_THROW(mdp.Validate(), UsageError);
}

TEST(GreedyActionsTest, TiesToLowest) {
  Eigen::MatrixXd q(2, 3);
  q << 1, 1, 0, 0, 2, 2;
  EXPECT_EQ(GreedyActions(q), (std::vector<int>{0, 1}));
}

TEST(TabularSfTest, FullBatchTdConvergesToAnalytic) {
  const TabularMdp mdp = FourByFourGrid(0.9);
  std::vector<int> policy(mdp.num_states);
  for (int s = 0; s < mdp.num_states; ++s) policy[s] = (s % 4 == 3) ? 1 : 2;
  const Eigen::MatrixXd psi =
      AnalyticSf(mdp, DeterministicPolicy(policy, mdp.num_actions));
  std::vector<TabularTransition> all;
  for (int s = 0; s < mdp.num_states; ++s) {
    for (int a = 0; a < mdp.num_actions; ++a) {
      TabularTransition t;
      t.state = s;
      t.action = a;
      t.next_state = mdp.Next(s, a)[0].next_state;
      t.done = mdp.terminal[t.next_state];
      t.phi = {mdp.phi(t.next_state, 0), mdp.phi(t.next_state, 1)};
      all.push_back(t);
    }
  }
  TabularSf table(mdp.num_states, 4, 2, 0.9);
  const auto rule = TabularSf::FollowPolicy(policy);
  // Per-entry step of 0.5 on the mean loss.
  const double lr = 0.5 * all.size() * 2 / 2.0;
  for (int it = 0; it < 3000; ++it) table.TrainStep(all, rule, lr);
  double error = 0.0;
  for (int s = 0; s < mdp.num_states; ++s) {
    for (int a = 0; a < 4; ++a) {
      for (int k = 0; k < 2; ++k) {
        error = std::max(error, std::abs(table.Value(s, a, k) - psi(s * 4 + a, k)));
      }
    }
  }
  EXPECT_LT(error, 1e-3);
}

GridState Board(int size) {
  GridState s;
  s.height = s.width = size;
  s.cells.assign(size * size, Cell::kEmpty);
  s.agent = {1, 1};
  s.rng.seed(3);
  return s;
}

EnvConfig BoardConfig(int size) {
  EnvConfig c;
  c.height = c.width = size;
  c.n_wood = c.n_iron = c.n_coal = c.n_tables = c.n_traps = 0;
  return c;
}

TEST(ExhaustiveSearchTest, CraftingNeedsOrderedVisits) {
  GridState s = Board(5);
  s.at(1, 2) = Cell::kWood;
  s.at(1, 3) = Cell::kTable;
  EnvConfig c = BoardConfig(5);
  c.n_wood = c.n_tables = 1;
  const TaskBinding staff{Suite::kCraftStaff, std::nullopt};
  EXPECT_DOUBLE_EQ(ExhaustiveBestReturn(c, s, staff, 0), 0.0);
  EXPECT_DOUBLE_EQ(ExhaustiveBestReturn(c, s, staff, 1), 0.0);
  EXPECT_DOUBLE_EQ(ExhaustiveBestReturn(c, s, staff, 2), 1.0);
  EXPECT_DOUBLE_EQ(ExhaustiveBestReturn(c, s, std::nullopt, 4), 0.0);
}

TEST(ExhaustiveSearchTest, AvoidsPenalties) {
  GridState s = Board(3);
  s.at(1, 2) = Cell::kIron;
  s.at(0, 1) = Cell::kTrap;
  EnvConfig c = BoardConfig(3);
  c.n_iron = c.n_traps = 1;
  EXPECT_DOUBLE_EQ(
      ExhaustiveBestReturn(c, s, TaskBinding{Suite::kOneItem, std::nullopt}, 3),
      0.0);
  EXPECT_DOUBLE_EQ(
      ExhaustiveBestReturn(c, s, TaskBinding{Suite::kRandomPen, kIron}, 1), 1.0);
}

TEST(ExhaustiveSearchTest, BoundsRandomPlay) {
  const EnvConfig c = EnvConfig::Desk8x8();
  GridWorld env(c);
  const TaskBinding b{Suite::kOneItem, std::nullopt};
  Rng rng(8);
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    env.Reset(seed);
    const GridState start = env.state();
    const double best = ExhaustiveBestReturn(c, start, b, 6);
    env.BindTask(b);
    for (int trial = 0; trial < 200; ++trial) {
      env.set_state(start);
      double total = 0.0;
      for (int t = 0; t < 6 && !env.state().done; ++t) {
        total += env.Advance(static_cast<Move>(rng() % kNumActions)).reward;
      }
      EXPECT_LE(total, best);
    }
  }
}

TEST(ExhaustiveSearchTest, RejectsLongHorizon) {
  EXPECT_THROW(ExhaustiveBestReturn(BoardConfig(3), Board(3), std::nullopt,
                                    kMaxExhaustiveHorizon + 1),
               UsageError);
}

}  // namespace
}  // namespace sfcraft
