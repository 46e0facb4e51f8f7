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

#ifndef SFCRAFT_AGENTS_H_
#define SFCRAFT_AGENTS_H_

#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sfcraft/checkpoint.h"
#include "sfcraft/network.h"
#include "sfcraft/optimizer.h"
#include "sfcraft/replay.h"
#include "sfcraft/successor.h"

namespace sfcraft {

enum class AgentVariant { kSf1, kSfN, kSfHtr1, kSfHtrN, kSfTrN, kDqn };

std::string_view VariantName(AgentVariant variant);
// Accepts the labels SF-1, SF-n, SF-HTR-1, SF-HTR-n, SF-TR-n, DQN.
AgentVariant ParseVariant(std::string_view name);
bool IsSuccessorVariant(AgentVariant variant);
int PoliciesFor(AgentVariant variant);
RelabelMode RelabelFor(AgentVariant variant);

struct AgentConfig {
  double gamma = 0.95;
  double learning_rate = 1e-4;
  // Step size of the task-vector optimiser (reward regression).
  double w_learning_rate = 1e-3;
  int batch_size = 64;
  std::size_t replay_capacity = ReplayMemory::kDefaultCapacity;
  int target_sync_interval = 1000;
  bool use_target_network = true;
  int train_every = 4;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.1;

  // Linear decay over the first epsilon_decay_fraction of total_steps.
  double Epsilon(std::int64_t step, std::int64_t total_steps) const;
  void Validate() const;

  nlohmann::json ToJson() const;
  // Missing keys keep their defaults.
  static AgentConfig FromJson(const nlohmann::json& j);
};

// Where the task driving the TD bootstrap comes from during training.
enum class TrainPhase {
  // Reward-free one-hot episode tasks; no reward regression.
  kPretrain,
  // Stationary target suite: w is learned jointly with theta.
  kTargetLearnedW,
  // Goal-conditioned target suite: w is the episode's true task, given.
  kTargetGivenW,
};

struct TrainMetrics {
  double sf_loss = 0.0;
  double reward_loss = 0.0;
  int pairs = 0;
};

// Bootstrap successor features of one training pair.
struct TdExample {
  int sample = 0;  // index into the sampled batch
  int policy = 0;
  TaskVector task;
};

// Builds the (sample, policy, task) list trained by one SF update.
//   TR agents: every policy on its own one-hot objective.
//   otherwise: one-hot effective tasks train the matching policy (policy 0
//   for single-policy agents); any other task trains every policy.
std::vector<TdExample> BuildTdExamples(AgentVariant variant, int n_policies,
                                       std::span<const SampledTransition> batch);

// Successor-feature agent with 1 or |phi| policies sharing one network.
class SfAgent {
 public:
  SfAgent(AgentVariant variant, NetworkSpec spec, AgentConfig config,
          std::uint64_t seed);

  // Throws FormatError when the checkpoint is not an SF checkpoint.
  static SfAgent FromCheckpoint(const Checkpoint& checkpoint,
                                AgentConfig config = {});
  Checkpoint ToCheckpoint(nlohmann::json provenance) const;

  AgentVariant variant() const { return variant_; }
  int n_policies() const { return spec_.n_policies; }
  const NetworkSpec& spec() const { return spec_; }
  const AgentConfig& config() const { return config_; }
  const ParameterSet& params() const { return params_; }
  const ParameterSet& target_params() const { return target_params_; }
  void set_params(ParameterSet params);

  const TaskVector& learned_w() const { return learned_w_; }
  void set_learned_w(const TaskVector& w) { learned_w_ = w; }

  SfTensor Successors(const Observation& obs) const;
  std::vector<SfTensor> Successors(
      std::span<const Observation* const> observations,
      bool use_target = false) const;

  // With probability epsilon a uniform action; otherwise greedy: the given
  // policy if set, else GPI over all policies.
  int Act(const Observation& obs, const TaskVector& w, double epsilon,
          std::optional<int> policy, Rng& rng) const;

  // One gradient step of the SF TD loss (plus the reward loss in
  // kTargetLearnedW). Throws UsageError when memory holds fewer than
  // batch_size transitions.
  TrainMetrics TrainStep(const ReplayMemory& memory, TrainPhase phase,
                         Rng& rng);
  // Same update on an explicit batch.
  TrainMetrics TrainOnBatch(std::span<const SampledTransition> batch,
                            TrainPhase phase);

  std::int64_t updates() const { return updates_; }

 private:
  void SyncTarget();

  AgentVariant variant_;
  NetworkSpec spec_;
  AgentConfig config_;
  Network network_;
  ParameterSet params_;
  ParameterSet target_params_;
  Adam optimizer_;
  TaskVector learned_w_;
  VectorAdam w_optimizer_;
  ParameterSet grads_;
  std::int64_t updates_ = 0;
};

// Mean squared reward-regression loss (r - phi^T w)^2 and its gradient
// with respect to w.
struct RewardLoss {
  double loss = 0.0;
  std::array<double, kNumFeatures> grad{};
};
RewardLoss ComputeRewardLoss(std::span<const FeatureVector> phis,
                             std::span<const double> rewards,
                             const TaskVector& w);

// Q-learning baseline with the same trunk and a |A|-output head.
class DqnAgent {
 public:
  DqnAgent(NetworkSpec spec, AgentConfig config, std::uint64_t seed);
  static DqnAgent FromCheckpoint(const Checkpoint& checkpoint,
                                 AgentConfig config = {});
  Checkpoint ToCheckpoint(nlohmann::json provenance) const;

  const NetworkSpec& spec() const { return spec_; }
  const AgentConfig& config() const { return config_; }
  const ParameterSet& params() const { return params_; }
  void set_params(ParameterSet params);

  std::vector<double> QValues(const Observation& obs) const;
  int Act(const Observation& obs, double epsilon, Rng& rng) const;

  TrainMetrics TrainStep(const ReplayMemory& memory, Rng& rng);
  TrainMetrics TrainOnBatch(std::span<const SampledTransition> batch);

  std::int64_t updates() const { return updates_; }

 private:
  NetworkSpec spec_;
  AgentConfig config_;
  Network network_;
  ParameterSet params_;
  ParameterSet target_params_;
  Adam optimizer_;
  ParameterSet grads_;
  std::int64_t updates_ = 0;
};

// Reward-regression fit of w alone, with theta frozen. Episodes are fed as
// they are collected; Fit() runs gradient descent on everything seen so far.
struct WFitOptions {
  // Fraction of the largest provably stable gradient step, in (0, 1].
  double learning_rate = 1.0;
  int max_iterations = 20000;  // per Fit() call
  double gradient_tolerance = 1e-9;
  // Converged once w moved less than this between consecutive episodes...
  double plateau_tolerance = 1e-4;
  // ...for this many episodes in a row.
  int plateau_episodes = 3;
  int max_episodes = 50;
};

enum class WFitStatus { kConverged, kBudgetReached, kDegenerateStream };

std::string_view WFitStatusName(WFitStatus status);

struct RewardSample {
  FeatureVector phi{};
  double reward = 0.0;
};

struct WFitResult {
  TaskVector w;
  WFitStatus status = WFitStatus::kBudgetReached;
  int episodes = 0;
  double loss = 0.0;
};

class WFitter {
 public:
  explicit WFitter(WFitOptions options = {});

  // Adds one episode of (phi, r) pairs and refits. Returns true once the
  // fit has plateaued or the episode budget is exhausted.
  bool AddEpisode(std::span<const RewardSample> episode);

  const TaskVector& w() const { return w_; }
  WFitResult Result() const;

 private:
  void Fit();

  WFitOptions options_;
  std::vector<RewardSample> samples_;
  TaskVector w_;
  int episodes_ = 0;
  int stable_episodes_ = 0;
  bool done_ = false;
  bool converged_ = false;
};

// Fits w over a whole stream of episodes (stops early on plateau). A stream
// without any non-zero feature yields the zero vector and kDegenerateStream.
WFitResult FitWFewShot(std::span<const std::vector<RewardSample>> episodes,
                       WFitOptions options = {});

// Successor features over an enumerable state space, one table entry per
// (state, action), trained with the same TD target as the network agent.
struct TabularTransition {
  int state = 0;
  int action = 0;
  FeatureVector phi{};
  int next_state = 0;
  bool done = false;
};

class TabularSf {
 public:
  // Chooses the bootstrap action a' in next_state from its SF slice.
  using BootstrapRule = std::function<int(int next_state, const SfTensor&)>;

  TabularSf(int num_states, int num_actions, int num_features, double gamma);

  // a' = argmax_a psi(s', a)^T w.
  static BootstrapRule GreedyUnder(const TaskVector& w);
  // a' = policy[s'].
  static BootstrapRule FollowPolicy(std::vector<int> policy);

  // psi(s, .) as a single-policy tensor.
  SfTensor At(int state) const;
  double Value(int state, int action, int feature) const;

  // One SGD step on the mean squared TD error of the batch. Returns the
  // loss before the step.
  double TrainStep(std::span<const TabularTransition> batch,
                   const BootstrapRule& rule, double learning_rate);

 private:
  int num_states_;
  int num_actions_;
  int num_features_;
  double gamma_;
  BasicParameterSet<double> table_;
  BasicParameterSet<double> grads_;
};

}  // namespace sfcraft

#endif  // SFCRAFT_AGENTS_H_
