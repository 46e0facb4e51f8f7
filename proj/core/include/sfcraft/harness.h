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

#ifndef SFCRAFT_HARNESS_H_
#define SFCRAFT_HARNESS_H_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "sfcraft/agents.h"
#include "sfcraft/checkpoint.h"
#include "sfcraft/config.h"
#include "sfcraft/gridworld.h"
#include "sfcraft/metrics.h"
#include "sfcraft/tasks.h"

namespace sfcraft {

// Deterministic seed derivation (splitmix64 of both inputs).
std::uint64_t MixSeed(std::uint64_t a, std::uint64_t b);

// Goal resource of the episode with this level seed (random suites), or
// nullopt for stationary suites.
std::optional<int> EpisodeGoal(Suite suite, std::uint64_t level_seed);

// Greedy acting function: observation and task vector to an action.
using GreedyPolicy = std::function<int(const Observation&, const TaskVector&)>;

// GPI for multi-policy agents, the single policy otherwise.
GreedyPolicy SfGreedyPolicy(const SfAgent& agent);
GreedyPolicy DqnGreedyPolicy(const DqnAgent& agent);

struct EpisodeResult {
  double total_return = 0.0;
  std::array<int, kNumFeatures> counts{};
  int length = 0;
};

struct EvalRequest {
  EnvConfig env;
  // Scores episodes with the suite reward; without a suite the return is
  // the sum of phi^T w and the environment stays reward-free.
  std::optional<Suite> suite;
  // Task vector handed to the policy. Unset: the suite's true vector of the
  // episode (required for random suites, where it changes per episode).
  std::optional<TaskVector> w;
  int episodes = 100;
  std::uint64_t seed = 0;
  // Append the episode's one-hot goal to observations (goal-conditioned
  // networks on random suites).
  bool goal_input = false;
};

struct EvalSummary {
  std::vector<EpisodeResult> episodes;
  double mean = 0.0;
  double std_error = 0.0;
  std::array<double, kNumFeatures> mean_counts{};
  std::int64_t reward_evaluations = 0;
};

// Runs greedy episodes; episode e uses level seed MixSeed(seed, e). Shared by
// transfer evaluation, training checks and the service.
EvalSummary EvaluatePolicy(const GreedyPolicy& policy,
                           const EvalRequest& request);

struct TrainResult {
  Checkpoint checkpoint;
  std::int64_t env_steps = 0;
  std::int64_t episodes = 0;
  // Environment steps spent under each one-hot pre-training task.
  std::array<std::int64_t, kNumFeatures> task_steps{};
  std::int64_t reward_evaluations = 0;
  std::int64_t train_updates = 0;
  std::vector<MetricsRecord> records;
};

// Reward-free pre-training of an SF variant on one-hot tasks. Throws
// UsageError for DQN.
TrainResult Pretrain(const ExperimentConfig& config, std::uint64_t seed,
                     MetricsSink* sink = nullptr);

// Training on one of the seven target suites.
TrainResult TargetTrain(const ExperimentConfig& config, Suite suite,
                        std::uint64_t seed, MetricsSink* sink = nullptr);

struct TransferOptions {
  WSource w_source = WSource::kTrue;
  int episodes = 100;
  std::uint64_t seed = 0;
  WFitOptions fit;
  // Task vector to evaluate with; takes precedence over w_source.
  std::optional<TaskVector> w;
};

struct TransferResult {
  MetricsRecord summary;
  std::vector<MetricsRecord> episodes;
  EvalSummary eval;
  // Unset for random suites, where the true vector changes per episode.
  std::optional<TaskVector> w;
  std::optional<WFitResult> fit;
  // Training updates performed during the evaluation (always 0).
  std::int64_t train_updates = 0;
};

// Zero-shot (or few-shot fitted w) evaluation of an SF checkpoint with
// frozen parameters. Throws UsageError for a true w on crafting suites, a
// hand-crafted w on non-crafting suites, or a fitted w on random suites.
TransferResult TransferEval(const Checkpoint& checkpoint, Suite suite,
                            const EnvConfig& env,
                            const TransferOptions& options);

}  // namespace sfcraft

#endif  // SFCRAFT_HARNESS_H_
