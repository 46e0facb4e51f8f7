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

#include <algorithm>
#include <array>
#include <cmath>

#include "sfcraft/agents.h"
#include "sfcraft/errors.h"

namespace sfcraft {

std::string_view WFitStatusName(WFitStatus status) {
  switch (status) {
    case WFitStatus::kConverged:
      return "converged";
    case WFitStatus::kBudgetReached:
      return "budget_reached";
    case WFitStatus::kDegenerateStream:
      return "degenerate_stream";
  }
  return "unknown";
}

WFitter::WFitter(WFitOptions options)
    : options_(options),
      w_(TaskVector::FromWeights({}, TaskSource::kLearned)) {
  if (options_.learning_rate <= 0.0 || options_.learning_rate > 1.0) {
    throw UsageError("w fit learning rate must be in (0, 1]");
  }
  if (options_.max_episodes < 1) throw UsageError("max_episodes must be >= 1");
}

// Full-batch gradient descent on mean (r - phi^T w)^2, run on the sufficient
// statistics G = Phi^T Phi / N and b = Phi^T r / N (gradient 2 (G w - b)).
// The step is scaled by the trace of the Hessian, which bounds its largest
// eigenvalue, so any learning_rate in (0, 1] is stable however rare events
// are.
void WFitter::Fit() {
  if (samples_.empty()) return;
  std::array<std::array<double, kNumFeatures>, kNumFeatures> gram{};
  std::array<double, kNumFeatures> moment{};
  for (const auto& s : samples_) {
    for (int i = 0; i < kNumFeatures; ++i) {
      if (s.phi[i] == 0.0) continue;
      moment[i] += s.phi[i] * s.reward;
      for (int j = 0; j < kNumFeatures; ++j) gram[i][j] += s.phi[i] * s.phi[j];
    }
  }
  const double n = static_cast<double>(samples_.size());
  double trace = 0.0;
  for (int i = 0; i < kNumFeatures; ++i) {
    moment[i] /= n;
    for (int j = 0; j < kNumFeatures; ++j) gram[i][j] /= n;
    trace += 2.0 * gram[i][i];
  }
  if (trace == 0.0) return;
  const double step = options_.learning_rate / trace;
  for (int it = 0; it < options_.max_iterations; ++it) {
    std::array<double, kNumFeatures> grad{};
    double max_grad = 0.0;
    for (int i = 0; i < kNumFeatures; ++i) {
      double gw = 0.0;
      for (int j = 0; j < kNumFeatures; ++j) gw += gram[i][j] * w_[j];
      grad[i] = 2.0 * (gw - moment[i]);
      max_grad = std::max(max_grad, std::abs(grad[i]));
    }
    for (int k = 0; k < kNumFeatures; ++k) w_.weights[k] -= step * grad[k];
    if (max_grad < options_.gradient_tolerance) break;
  }
}

bool WFitter::AddEpisode(std::span<const RewardSample> episode) {
  if (done_) return true;
  samples_.insert(samples_.end(), episode.begin(), episode.end());
  ++episodes_;
  const TaskVector before = w_;
  Fit();
  double moved = 0.0;
  for (int k = 0; k < kNumFeatures; ++k) {
    moved = std::max(moved, std::abs(w_[k] - before[k]));
  }
  const bool seen_event =
      std::any_of(samples_.begin(), samples_.end(),
                  [](const RewardSample& s) { return !IsZero(s.phi); });
  stable_episodes_ =
      (seen_event && moved < options_.plateau_tolerance) ? stable_episodes_ + 1
                                                         : 0;
  if (stable_episodes_ >= options_.plateau_episodes) {
    converged_ = true;
    done_ = true;
  }
  if (episodes_ >= options_.max_episodes) done_ = true;
  return done_;
}

WFitResult WFitter::Result() const {
  WFitResult result;
  result.w = w_;
  result.episodes = episodes_;
  const bool seen_event =
      std::any_of(samples_.begin(), samples_.end(),
                  [](const RewardSample& s) { return !IsZero(s.phi); });
  if (!seen_event) {
    result.w = TaskVector::FromWeights({}, TaskSource::kLearned);
    result.status = WFitStatus::kDegenerateStream;
  } else {
    result.status =
        converged_ ? WFitStatus::kConverged : WFitStatus::kBudgetReached;
  }
  std::vector<FeatureVector> phis;
  std::vector<double> rewards;
  for (const auto& s : samples_) {
    phis.push_back(s.phi);
    rewards.push_back(s.reward);
  }
  result.loss = ComputeRewardLoss(phis, rewards, result.w).loss;
  return result;
}

WFitResult FitWFewShot(std::span<const std::vector<RewardSample>> episodes,
                       WFitOptions options) {
  WFitter fitter(options);
  for (const auto& episode : episodes) {
    if (fitter.AddEpisode(episode)) break;
  }
  return fitter.Result();
}

}  // namespace sfcraft
