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

#ifndef SFCRAFT_SUCCESSOR_H_
#define SFCRAFT_SUCCESSOR_H_

#include <span>
#include <utility>
#include <vector>

#include "sfcraft/tasks.h"

namespace sfcraft {

// Successor features of one state for every (policy, feature, action).
struct SfTensor {
  int n_policies = 0;
  int num_features = kNumFeatures;
  int num_actions = kNumActions;
  std::vector<double> values;  // (policy * num_features + feature) * A + a

  SfTensor() = default;
  SfTensor(int n, int features, int actions)
      : n_policies(n),
        num_features(features),
        num_actions(actions),
        values(static_cast<std::size_t>(n) * features * actions, 0.0) {}

  static SfTensor FromOutput(std::span<const float> column, int n,
                             int features, int actions);

  static int Index(int policy, int feature, int action, int features,
                   int actions) {
    return (policy * features + feature) * actions + action;
  }
  double operator()(int policy, int feature, int action) const {
    return values[Index(policy, feature, action, num_features, num_actions)];
  }
  double& operator()(int policy, int feature, int action) {
    return values[Index(policy, feature, action, num_features, num_actions)];
  }
};

// Q values per (policy, action).
struct QValues {
  int n_policies = 0;
  int num_actions = 0;
  std::vector<double> values;  // policy * num_actions + action

  double operator()(int policy, int action) const {
    return values[policy * num_actions + action];
  }
};

// Generalised policy evaluation: Q[i][a] = sum_k psi[i][k][a] * w[k].
QValues Gpe(const SfTensor& psi, const TaskVector& w);

struct GpiDecision {
  int action = 0;
  int policy = 0;  // policy attaining the max at the chosen action
  double value = 0.0;
};

// Generalised policy improvement: argmax_a max_i Q[i][a]. Ties go to the
// lowest action index, then the lowest policy index.
GpiDecision GpiChoice(const SfTensor& psi, const TaskVector& w);
int GpiAction(const SfTensor& psi, const TaskVector& w);

// argmax_a psi[policy](s, a)^T w with the same tie rule.
int PolicyGreedyAction(const SfTensor& psi, int policy, const TaskVector& w);

// TD regression target for one policy's successor features:
//   target = phi + gamma * psi_next      (psi_next ignored when done)
// psi_next holds the bootstrap action's features. Throws TrainingError if
// the result is not finite.
void SfTdTarget(const FeatureVector& phi, std::span<const double> psi_next,
                double gamma, bool done, std::span<double> target);

}  // namespace sfcraft

#endif  // SFCRAFT_SUCCESSOR_H_
