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

#include "sfcraft/successor.h"

#include <cmath>
#include <string>

#include "sfcraft/errors.h"

namespace sfcraft {

SfTensor SfTensor::FromOutput(std::span<const float> column, int n,
                              int features, int actions) {
  SfTensor psi(n, features, actions);
  if (column.size() != psi.values.size()) {
    throw UsageError("network output has " + std::to_string(column.size()) +
                     " values, expected " + std::to_string(psi.values.size()));
  }
  for (std::size_t i = 0; i < column.size(); ++i) psi.values[i] = column[i];
  return psi;
}

QValues Gpe(const SfTensor& psi, const TaskVector& w) {
  QValues q{psi.n_policies, psi.num_actions,
            std::vector<double>(
                static_cast<std::size_t>(psi.n_policies) * psi.num_actions,
                0.0)};
  for (int i = 0; i < psi.n_policies; ++i) {
    for (int a = 0; a < psi.num_actions; ++a) {
      double sum = 0.0;
      for (int k = 0; k < psi.num_features; ++k) sum += psi(i, k, a) * w[k];
      q.values[i * psi.num_actions + a] = sum;
    }
  }
  return q;
}

GpiDecision GpiChoice(const SfTensor& psi, const TaskVector& w) {
  if (psi.n_policies < 1) throw UsageError("GPI needs at least one policy");
  const QValues q = Gpe(psi, w);
  GpiDecision best{0, 0, q(0, 0)};
  for (int a = 0; a < q.num_actions; ++a) {
    for (int i = 0; i < q.n_policies; ++i) {
      if (q(i, a) > best.value) best = {a, i, q(i, a)};
    }
  }
  return best;
}

int GpiAction(const SfTensor& psi, const TaskVector& w) {
  return GpiChoice(psi, w).action;
}

int PolicyGreedyAction(const SfTensor& psi, int policy, const TaskVector& w) {
  if (policy < 0 || policy >= psi.n_policies) {
    throw UsageError("policy index " + std::to_string(policy) +
                     " out of range");
  }
  int best_action = 0;
  double best = -INFINITY;
  for (int a = 0; a < psi.num_actions; ++a) {
    double q = 0.0;
    for (int k = 0; k < psi.num_features; ++k) q += psi(policy, k, a) * w[k];
    if (q > best) {
      best = q;
      best_action = a;
    }
  }
  return best_action;
}

void SfTdTarget(const FeatureVector& phi, std::span<const double> psi_next,
                double gamma, bool done, std::span<double> target) {
  for (std::size_t k = 0; k < target.size(); ++k) {
    target[k] = phi[k] + (done ? 0.0 : gamma * psi_next[k]);
    if (!std::isfinite(target[k])) {
      throw TrainingError("non-finite successor-feature TD target");
    }
  }
}

}  // namespace sfcraft
