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

#ifndef SFCRAFT_ORACLE_H_
#define SFCRAFT_ORACLE_H_

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "sfcraft/gridworld.h"
#include "sfcraft/tasks.h"

namespace sfcraft {

// A finite MDP whose features are emitted on arrival in a state. Entering a
// terminal state ends the episode, so nothing is bootstrapped past it.
struct TabularMdp {
  struct Outcome {
    int next_state = 0;
    double probability = 1.0;
  };

  int num_states = 0;
  int num_actions = 0;
  int num_features = 0;
  double gamma = 0.9;
  std::vector<std::vector<Outcome>> transitions;  // index s * A + a
  Eigen::MatrixXd phi;                            // num_states x num_features
  std::vector<bool> terminal;

  const std::vector<Outcome>& Next(int state, int action) const {
    return transitions[state * num_actions + action];
  }
  // Throws UsageError on malformed tables (rows not summing to 1, sizes).
  void Validate() const;
};

// Row s holds pi(a | s).
using TabularPolicy = Eigen::MatrixXd;

TabularPolicy DeterministicPolicy(const std::vector<int>& actions,
                                  int num_actions);
// argmax_a of each row; ties go to the lowest action.
std::vector<int> GreedyActions(const Eigen::MatrixXd& q);

// psi(s, a) for every feature: rows s * A + a, columns features. Solves
//   psi = Phi_next + gamma * P_pi psi
// directly. Throws NumericalError when the system is singular.
Eigen::MatrixXd AnalyticSf(const TabularMdp& mdp, const TabularPolicy& policy);

// Optimal Q (num_states x num_actions) for the arrival reward table,
// iterated until the sup-norm error bound is below 1e-8. Requires gamma < 1.
Eigen::MatrixXd ValueIteration(const TabularMdp& mdp,
                               const Eigen::VectorXd& state_reward);

// r(s) = phi(s)^T w.
Eigen::VectorXd LinearStateReward(const TabularMdp& mdp,
                                  const Eigen::VectorXd& w);

// Q(s, a) = psi(s, a)^T w for a psi table from AnalyticSf.
Eigen::MatrixXd SfToQ(const Eigen::MatrixXd& psi, const Eigen::VectorXd& w,
                      int num_actions);

// Deterministic 4x4 grid with walls. Cell (3, 3) emits feature 0 and is
// terminal; cell (1, 1) emits feature 1. Actions N, S, E, W.
TabularMdp FourByFourGrid(double gamma);

// States 0 - 1 - 2 with actions left/right. Arriving in 0 emits feature 0,
// arriving in 2 emits feature 1 and ends the episode.
TabularMdp ThreeStateChain(double gamma);

inline constexpr int kMaxExhaustiveHorizon = 12;

// Exact best undiscounted return over every action sequence of length
// `horizon` from `start` (episodes may end earlier). With no binding the
// world is reward-free and the result is 0. Throws UsageError for horizons
// outside [0, kMaxExhaustiveHorizon].
double ExhaustiveBestReturn(const EnvConfig& config, const GridState& start,
                            std::optional<TaskBinding> binding, int horizon);

}  // namespace sfcraft

#endif  // SFCRAFT_ORACLE_H_
