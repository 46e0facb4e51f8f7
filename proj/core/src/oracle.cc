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

#include "sfcraft/oracle.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sfcraft/errors.h"

namespace sfcraft {
namespace {

// Bootstrap operator M with M(sa, s'a') = gamma P(s'|s,a) pi(a'|s') over
// non-terminal s'.
Eigen::MatrixXd BootstrapOperator(const TabularMdp& mdp,
                                  const TabularPolicy& policy) {
  const int n = mdp.num_states * mdp.num_actions;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < mdp.num_states; ++s) {
    for (int a = 0; a < mdp.num_actions; ++a) {
      for (const auto& o : mdp.Next(s, a)) {
        if (mdp.terminal[o.next_state]) continue;
        for (int b = 0; b < mdp.num_actions; ++b) {
          m(s * mdp.num_actions + a, o.next_state * mdp.num_actions + b) +=
              mdp.gamma * o.probability * policy(o.next_state, b);
        }
      }
    }
  }
  return m;
}

double Search(GridWorld& world, int depth) {
  if (depth == 0 || world.state().done) return 0.0;
  const GridState saved = world.state();
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < kNumActions; ++a) {
    if (a > 0) world.set_state(saved);
    const StepOutcome out = world.Advance(static_cast<Move>(a));
    best = std::max(best, out.reward + Search(world, depth - 1));
  }
  return best;
}

}  // namespace

void TabularMdp::Validate() const {
  if (num_states < 1 || num_actions < 1 || num_features < 1) {
    throw UsageError("MDP needs at least one state, action and feature");
  }
  if (num_states > 10000) throw UsageError("MDP too large for the oracle");
  if (static_cast<int>(transitions.size()) != num_states * num_actions ||
      static_cast<int>(terminal.size()) != num_states ||
      phi.rows() != num_states || phi.cols() != num_features) {
    throw UsageError("MDP tables do not match the declared sizes");
  }
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    double total = 0.0;
    for (const auto& o : transitions[i]) {
      if (o.next_state < 0 || o.next_state >= num_states || o.probability < 0) {
        throw UsageError("bad transition entry in row " + std::to_string(i));
      }
      total += o.probability;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw UsageError("transition row " + std::to_string(i) +
                       " does not sum to 1");
    }
  }
  if (gamma < 0.0 || gamma > 1.0) throw UsageError("gamma must be in [0, 1]");
}

TabularPolicy DeterministicPolicy(const std::vector<int>& actions,
                                  int num_actions) {
  TabularPolicy pi =
      TabularPolicy::Zero(static_cast<Eigen::Index>(actions.size()),
                          num_actions);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    if (actions[s] < 0 || actions[s] >= num_actions) {
      throw UsageError("policy action out of range in state " +
                       std::to_string(s));
    }
    pi(static_cast<Eigen::Index>(s), actions[s]) = 1.0;
  }
  return pi;
}

std::vector<int> GreedyActions(const Eigen::MatrixXd& q) {
  std::vector<int> actions(q.rows(), 0);
  for (Eigen::Index s = 0; s < q.rows(); ++s) {
    for (Eigen::Index a = 1; a < q.cols(); ++a) {
      if (q(s, a) > q(s, actions[s])) actions[s] = static_cast<int>(a);
    }
  }
  return actions;
}

Eigen::MatrixXd AnalyticSf(const TabularMdp& mdp, const TabularPolicy& policy) {
  mdp.Validate();
  if (policy.rows() != mdp.num_states || policy.cols() != mdp.num_actions) {
    throw UsageError("policy must be defined on every state");
  }
  const int n = mdp.num_states * mdp.num_actions;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, mdp.num_features);
  for (int s = 0; s < mdp.num_states; ++s) {
    for (int a = 0; a < mdp.num_actions; ++a) {
      for (const auto& o : mdp.Next(s, a)) {
        rhs.row(s * mdp.num_actions + a) +=
            o.probability * mdp.phi.row(o.next_state);
      }
    }
  }
  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(n, n) - BootstrapOperator(mdp, policy);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) {
    throw NumericalError(
        "successor-feature system is singular (gamma = 1 with a recurrent "
        "class?)");
  }
  Eigen::MatrixXd psi = lu.solve(rhs);
  if (!psi.allFinite()) throw NumericalError("non-finite successor features");
  return psi;
}

Eigen::MatrixXd ValueIteration(const TabularMdp& mdp,
                               const Eigen::VectorXd& state_reward) {
  mdp.Validate();
  if (mdp.gamma >= 1.0) throw UsageError("value iteration requires gamma < 1");
  if (state_reward.size() != mdp.num_states) {
    throw UsageError("reward table must have one entry per state");
  }
  // ||Q_k - Q*|| <= gamma / (1 - gamma) * ||Q_k - Q_{k-1}||.
  const double stop =
      mdp.gamma > 0.0 ? 1e-8 * (1.0 - mdp.gamma) / mdp.gamma : 1.0;
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(mdp.num_states, mdp.num_actions);
  for (int iteration = 0; iteration < 1000000; ++iteration) {
    const Eigen::VectorXd v = q.rowwise().maxCoeff();
    Eigen::MatrixXd next(mdp.num_states, mdp.num_actions);
    for (int s = 0; s < mdp.num_states; ++s) {
      for (int a = 0; a < mdp.num_actions; ++a) {
        double total = 0.0;
        for (const auto& o : mdp.Next(s, a)) {
          const double bootstrap =
              mdp.terminal[o.next_state] ? 0.0 : mdp.gamma * v(o.next_state);
          total += o.probability * (state_reward(o.next_state) + bootstrap);
        }
        next(s, a) = total;
      }
    }
    const double delta = (next - q).cwiseAbs().maxCoeff();
    q = std::move(next);
    if (delta <= stop) return q;
  }
  throw NumericalError("value iteration did not converge");
}

Eigen::VectorXd LinearStateReward(const TabularMdp& mdp,
                                  const Eigen::VectorXd& w) {
  if (w.size() != mdp.num_features) {
    throw UsageError("task vector size does not match the feature count");
  }
  return mdp.phi * w;
}

Eigen::MatrixXd SfToQ(const Eigen::MatrixXd& psi, const Eigen::VectorXd& w,
                      int num_actions) {
  const Eigen::VectorXd flat = psi * w;
  Eigen::MatrixXd q(flat.size() / num_actions, num_actions);
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    q(i / num_actions, i % num_actions) = flat(i);
  }
  return q;
}

TabularMdp FourByFourGrid(double gamma) {
  constexpr int kSide = 4;
  TabularMdp mdp;
  mdp.num_states = kSide * kSide;
  mdp.num_actions = 4;
  mdp.num_features = 2;
  mdp.gamma = gamma;
  mdp.phi = Eigen::MatrixXd::Zero(mdp.num_states, 2);
  mdp.phi(3 * kSide + 3, 0) = 1.0;
  mdp.phi(1 * kSide + 1, 1) = 1.0;
  mdp.terminal.assign(mdp.num_states, false);
  mdp.terminal[3 * kSide + 3] = true;
  mdp.transitions.resize(mdp.num_states * mdp.num_actions);
  const int dr[] = {-1, 1, 0, 0};
  const int dc[] = {0, 0, 1, -1};
  for (int r = 0; r < kSide; ++r) {
    for (int c = 0; c < kSide; ++c) {
      for (int a = 0; a < 4; ++a) {
        const int nr = std::clamp(r + dr[a], 0, kSide - 1);
        const int nc = std::clamp(c + dc[a], 0, kSide - 1);
        mdp.transitions[(r * kSide + c) * 4 + a] = {{nr * kSide + nc, 1.0}};
      }
    }
  }
  return mdp;
}

TabularMdp ThreeStateChain(double gamma) {
  TabularMdp mdp;
  mdp.num_states = 3;
  mdp.num_actions = 2;
  mdp.num_features = 2;
  mdp.gamma = gamma;
  mdp.phi = Eigen::MatrixXd::Zero(3, 2);
  mdp.phi(0, 0) = 1.0;
  mdp.phi(2, 1) = 1.0;
  mdp.terminal = {false, false, true};
  mdp.transitions.resize(6);
  for (int s = 0; s < 3; ++s) {
    mdp.transitions[s * 2 + 0] = {{std::max(s - 1, 0), 1.0}};
    mdp.transitions[s * 2 + 1] = {{std::min(s + 1, 2), 1.0}};
  }
  return mdp;
}

double ExhaustiveBestReturn(const EnvConfig& config, const GridState& start,
                            std::optional<TaskBinding> binding, int horizon) {
  if (horizon < 0 || horizon > kMaxExhaustiveHorizon) {
    throw UsageError("exhaustive search horizon must be in [0, " +
                     std::to_string(kMaxExhaustiveHorizon) + "], got " +
                     std::to_string(horizon));
  }
  if (start.height != config.height || start.width != config.width ||
      static_cast<int>(start.cells.size()) != config.height * config.width) {
    throw UsageError("start state does not match the environment config");
  }
  GridWorld world(config);
  world.BindTask(binding);
  world.set_state(start);
  return Search(world, horizon);
}

}  // namespace sfcraft
