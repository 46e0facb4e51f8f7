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

#include "sfcraft/agents.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "sfcraft/errors.h"

namespace sfcraft {
namespace {

struct VariantEntry {
  AgentVariant variant;
  std::string_view name;
};

constexpr std::array<VariantEntry, 6> kVariants = {{
    {AgentVariant::kSf1, "SF-1"},
    {AgentVariant::kSfN, "SF-n"},
    {AgentVariant::kSfHtr1, "SF-HTR-1"},
    {AgentVariant::kSfHtrN, "SF-HTR-n"},
    {AgentVariant::kSfTrN, "SF-TR-n"},
    {AgentVariant::kDqn, "DQN"},
}};

std::vector<const Observation*> Observations(
    std::span<const SampledTransition> batch, bool next) {
  std::vector<const Observation*> out;
  out.reserve(batch.size());
  for (const auto& s : batch) {
    out.push_back(next ? &s.transition->next_obs : &s.transition->obs);
  }
  return out;
}

nlohmann::json TaskJson(const TaskVector& w) { return w.weights; }

TaskVector TaskFromJson(const nlohmann::json& j, TaskSource source) {
  try {
    return TaskVector::FromWeights(j.get<std::array<double, kNumFeatures>>(),
                                   source);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad task vector: ") + e.what());
  }
}

AgentVariant VariantFromProvenance(const nlohmann::json& provenance) {
  if (!provenance.contains("agent_variant") ||
      !provenance.at("agent_variant").is_string()) {
    throw FormatError("checkpoint provenance lacks agent_variant");
  }
  try {
    return ParseVariant(provenance.at("agent_variant").get<std::string>());
  } catch (const UsageError& e) {
    throw FormatError(e.what());
  }
}

}  // namespace

std::string_view VariantName(AgentVariant variant) {
  for (const auto& entry : kVariants) {
    if (entry.variant == variant) return entry.name;
  }
  return "unknown";
}

AgentVariant ParseVariant(std::string_view name) {
  for (const auto& entry : kVariants) {
    if (entry.name == name) return entry.variant;
  }
  throw UsageError("unknown agent variant '" + std::string(name) +
                   "' (expected SF-1, SF-n, SF-HTR-1, SF-HTR-n, SF-TR-n or "
                   "DQN)");
}

bool IsSuccessorVariant(AgentVariant variant) {
  return variant != AgentVariant::kDqn;
}

int PoliciesFor(AgentVariant variant) {
  switch (variant) {
    case AgentVariant::kSfN:
    case AgentVariant::kSfHtrN:
    case AgentVariant::kSfTrN:
      return kNumFeatures;
    default:
      return 1;
  }
}

RelabelMode RelabelFor(AgentVariant variant) {
  return variant == AgentVariant::kSfHtr1 || variant == AgentVariant::kSfHtrN
             ? RelabelMode::kHindsight
             : RelabelMode::kNone;
}

double AgentConfig::Epsilon(std::int64_t step, std::int64_t total_steps) const {
  const double decay_steps =
      epsilon_decay_fraction * static_cast<double>(total_steps);
  if (decay_steps <= 0.0 || static_cast<double>(step) >= decay_steps) {
    return epsilon_end;
  }
  return epsilon_start +
         (epsilon_end - epsilon_start) * static_cast<double>(step) / decay_steps;
}

void AgentConfig::Validate() const {
  if (gamma < 0.0 || gamma > 1.0) throw ConfigError("gamma must be in [0, 1]");
  if (learning_rate <= 0.0 || w_learning_rate <= 0.0) {
    throw ConfigError("learning rates must be positive");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (replay_capacity < static_cast<std::size_t>(batch_size)) {
    throw ConfigError("replay capacity smaller than a batch");
  }
  if (target_sync_interval < 1) {
    throw ConfigError("target_sync_interval must be positive");
  }
  if (train_every < 1) throw ConfigError("train_every must be positive");
  for (double e : {epsilon_start, epsilon_end}) {
    if (e < 0.0 || e > 1.0) throw ConfigError("epsilon must be in [0, 1]");
  }
}

nlohmann::json AgentConfig::ToJson() const {
  return {
      {"gamma", gamma},
      {"learning_rate", learning_rate},
      {"w_learning_rate", w_learning_rate},
      {"batch_size", batch_size},
      {"replay_capacity", replay_capacity},
      {"target_sync_interval", target_sync_interval},
      {"use_target_network", use_target_network},
      {"train_every", train_every},
      {"epsilon_start", epsilon_start},
      {"epsilon_end", epsilon_end},
      {"epsilon_decay_fraction", epsilon_decay_fraction},
  };
}

AgentConfig AgentConfig::FromJson(const nlohmann::json& j) {
  AgentConfig c;
  try {
    c.gamma = j.value("gamma", c.gamma);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.w_learning_rate = j.value("w_learning_rate", c.w_learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.replay_capacity = j.value("replay_capacity", c.replay_capacity);
    c.target_sync_interval =
        j.value("target_sync_interval", c.target_sync_interval);
    c.use_target_network = j.value("use_target_network", c.use_target_network);
    c.train_every = j.value("train_every", c.train_every);
    c.epsilon_start = j.value("epsilon_start", c.epsilon_start);
    c.epsilon_end = j.value("epsilon_end", c.epsilon_end);
    c.epsilon_decay_fraction =
        j.value("epsilon_decay_fraction", c.epsilon_decay_fraction);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad agent config: ") + e.what());
  }
  c.Validate();
  return c;
}

std::vector<TdExample> BuildTdExamples(
    AgentVariant variant, int n_policies,
    std::span<const SampledTransition> batch) {
  std::vector<TdExample> examples;
  const int size = static_cast<int>(batch.size());
  if (variant == AgentVariant::kSfTrN) {
    const std::vector<TrainingPair> pairs = ExpandForTr(batch, n_policies);
    examples.reserve(pairs.size());
    for (int p = 0; p < static_cast<int>(pairs.size()); ++p) {
      examples.push_back({p % size, pairs[p].policy, pairs[p].task});
    }
    return examples;
  }
  for (int b = 0; b < size; ++b) {
    const TaskVector& task = batch[b].effective_task;
    if (n_policies == 1) {
      examples.push_back({b, 0, task});
    } else if (task.IsOneHot()) {
      examples.push_back({b, task.ArgMax(), task});
    } else {
      for (int i = 0; i < n_policies; ++i) examples.push_back({b, i, task});
    }
  }
  return examples;
}

RewardLoss ComputeRewardLoss(std::span<const FeatureVector> phis,
                             std::span<const double> rewards,
                             const TaskVector& w) {
  if (phis.size() != rewards.size()) {
    throw UsageError("feature and reward batches differ in length");
  }
  RewardLoss out;
  if (phis.empty()) return out;
  const double n = static_cast<double>(phis.size());
  for (std::size_t i = 0; i < phis.size(); ++i) {
    const double residual = rewards[i] - LinearReward(phis[i], w);
    out.loss += residual * residual / n;
    for (int k = 0; k < kNumFeatures; ++k) {
      out.grad[k] -= 2.0 * residual * phis[i][k] / n;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SfAgent

SfAgent::SfAgent(AgentVariant variant, NetworkSpec spec, AgentConfig config,
                 std::uint64_t seed)
    : variant_(variant),
      spec_(spec),
      config_(config),
      network_(spec),
      optimizer_(AdamOptions{config.learning_rate}),
      learned_w_(TaskVector::FromWeights({}, TaskSource::kLearned)),
      w_optimizer_(kNumFeatures, AdamOptions{config.w_learning_rate}) {
  if (!IsSuccessorVariant(variant)) {
    throw UsageError("SfAgent cannot host the DQN variant");
  }
  if (spec_.head != HeadKind::kSuccessorFeatures) {
    throw UsageError("SfAgent needs a successor-feature head");
  }
  if (spec_.n_policies != PoliciesFor(variant)) {
    throw UsageError(std::string(VariantName(variant)) + " needs " +
                     std::to_string(PoliciesFor(variant)) +
                     " policies, spec has " +
                     std::to_string(spec_.n_policies));
  }
  config_.Validate();
  params_ = network_.Init(seed);
  target_params_ = params_;
}

SfAgent SfAgent::FromCheckpoint(const Checkpoint& checkpoint,
                                AgentConfig config) {
  const AgentVariant variant = VariantFromProvenance(checkpoint.provenance);
  if (!IsSuccessorVariant(variant) ||
      checkpoint.spec.head != HeadKind::kSuccessorFeatures) {
    throw FormatError("checkpoint does not hold a successor-feature agent");
  }
  SfAgent agent(variant, checkpoint.spec, config, 0);
  agent.set_params(checkpoint.params);
  if (checkpoint.provenance.contains("learned_w")) {
    agent.learned_w_ =
        TaskFromJson(checkpoint.provenance.at("learned_w"), TaskSource::kLearned);
  }
  return agent;
}

Checkpoint SfAgent::ToCheckpoint(nlohmann::json provenance) const {
  provenance["agent_variant"] = VariantName(variant_);
  provenance["learned_w"] = TaskJson(learned_w_);
  provenance["n_policies"] = spec_.n_policies;
  provenance["updates"] = updates_;
  return {spec_, std::move(provenance), params_};
}

void SfAgent::set_params(ParameterSet params) {
  network_.CheckShapes(params);
  params_ = std::move(params);
  target_params_ = params_;
}

void SfAgent::SyncTarget() { target_params_ = params_; }

SfTensor SfAgent::Successors(const Observation& obs) const {
  const Matrix<float> out = network_.Forward(params_, MakeInput(spec_, obs));
  return SfTensor::FromOutput({out.data(), static_cast<std::size_t>(out.size())},
                              spec_.n_policies, spec_.num_features,
                              spec_.num_actions);
}

std::vector<SfTensor> SfAgent::Successors(
    std::span<const Observation* const> observations, bool use_target) const {
  const Matrix<float> out = network_.Forward(
      use_target ? target_params_ : params_, MakeInput(spec_, observations));
  std::vector<SfTensor> result;
  result.reserve(out.cols());
  for (Eigen::Index b = 0; b < out.cols(); ++b) {
    result.push_back(SfTensor::FromOutput(
        {out.col(b).data(), static_cast<std::size_t>(out.rows())},
        spec_.n_policies, spec_.num_features, spec_.num_actions));
  }
  return result;
}

int SfAgent::Act(const Observation& obs, const TaskVector& w, double epsilon,
                 std::optional<int> policy, Rng& rng) const {
  if (epsilon > 0.0) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < epsilon) {
      std::uniform_int_distribution<int> any(0, spec_.num_actions - 1);
      return any(rng);
    }
  }
  const SfTensor psi = Successors(obs);
  return policy ? PolicyGreedyAction(psi, *policy, w) : GpiAction(psi, w);
}

TrainMetrics SfAgent::TrainStep(const ReplayMemory& memory, TrainPhase phase,
                                Rng& rng) {
  if (memory.size() < static_cast<std::size_t>(config_.batch_size)) {
    throw UsageError("replay memory holds " + std::to_string(memory.size()) +
                     " transitions, a batch needs " +
                     std::to_string(config_.batch_size));
  }
  const std::vector<SampledTransition> batch =
      memory.Sample(config_.batch_size, RelabelFor(variant_), rng);
  return TrainOnBatch(batch, phase);
}

TrainMetrics SfAgent::TrainOnBatch(std::span<const SampledTransition> batch,
                                   TrainPhase phase) {
  if (batch.empty()) throw UsageError("empty training batch");
  std::vector<SampledTransition> effective(batch.begin(), batch.end());
  if (phase == TrainPhase::kTargetLearnedW) {
    for (auto& s : effective) {
      if (!s.relabelled) s.effective_task = learned_w_;
    }
  }
  const std::vector<TdExample> examples =
      BuildTdExamples(variant_, spec_.n_policies, effective);

  const NetworkInput now = MakeInput(spec_, Observations(effective, false));
  const NetworkInput next = MakeInput(spec_, Observations(effective, true));
  Network::Activations cache;
  const Matrix<float> out = network_.Forward(params_, now, &cache);
  const Matrix<float> next_online = network_.Forward(params_, next);
  const Matrix<float> next_target =
      config_.use_target_network ? network_.Forward(target_params_, next)
                                 : next_online;

  const int features = spec_.num_features;
  const int actions = spec_.num_actions;
  const double scale = 1.0 / (static_cast<double>(examples.size()) * features);
  Matrix<float> d_out = Matrix<float>::Zero(out.rows(), out.cols());
  std::vector<double> psi_next(features);
  std::vector<double> target(features);
  TrainMetrics metrics;
  metrics.pairs = static_cast<int>(examples.size());

  for (const TdExample& ex : examples) {
    const Transition& t = *effective[ex.sample].transition;
    // a' = argmax_a psi_online(s', a)^T w under the example's task.
    int bootstrap = 0;
    double best = -INFINITY;
    for (int a = 0; a < actions; ++a) {
      double q = 0.0;
      for (int k = 0; k < features; ++k) {
        q += next_online(SfTensor::Index(ex.policy, k, a, features, actions),
                         ex.sample) *
             ex.task[k];
      }
      if (q > best) {
        best = q;
        bootstrap = a;
      }
    }
    for (int k = 0; k < features; ++k) {
      psi_next[k] = next_target(
          SfTensor::Index(ex.policy, k, bootstrap, features, actions),
          ex.sample);
    }
    SfTdTarget(t.features, psi_next, config_.gamma, t.done, target);
    const int action = static_cast<int>(t.action);
    for (int k = 0; k < features; ++k) {
      const int row = SfTensor::Index(ex.policy, k, action, features, actions);
      const double diff = out(row, ex.sample) - target[k];
      metrics.sf_loss += diff * diff * scale;
      d_out(row, ex.sample) += static_cast<float>(2.0 * diff * scale);
    }
  }

  network_.Backward(params_, now, cache, d_out, &grads_);
  optimizer_.Step(&params_, grads_);

  if (phase == TrainPhase::kTargetLearnedW) {
    std::vector<FeatureVector> phis;
    std::vector<double> rewards;
    phis.reserve(effective.size());
    rewards.reserve(effective.size());
    for (const auto& s : effective) {
      phis.push_back(s.transition->features);
      rewards.push_back(s.transition->reward);
    }
    const RewardLoss rl = ComputeRewardLoss(phis, rewards, learned_w_);
    metrics.reward_loss = rl.loss;
    w_optimizer_.Step(learned_w_.weights, rl.grad);
  }

  ++updates_;
  if (config_.use_target_network &&
      updates_ % config_.target_sync_interval == 0) {
    SyncTarget();
  }
  return metrics;
}

// ---------------------------------------------------------------------------
// DqnAgent

DqnAgent::DqnAgent(NetworkSpec spec, AgentConfig config, std::uint64_t seed)
    : spec_(spec),
      config_(config),
      network_(spec),
      optimizer_(AdamOptions{config.learning_rate}) {
  if (spec_.head != HeadKind::kQValues) {
    throw UsageError("DqnAgent needs a Q-value head");
  }
  config_.Validate();
  params_ = network_.Init(seed);
  target_params_ = params_;
}

DqnAgent DqnAgent::FromCheckpoint(const Checkpoint& checkpoint,
                                  AgentConfig config) {
  if (VariantFromProvenance(checkpoint.provenance) != AgentVariant::kDqn ||
      checkpoint.spec.head != HeadKind::kQValues) {
    throw FormatError("checkpoint does not hold a DQN agent");
  }
  DqnAgent agent(checkpoint.spec, config, 0);
  agent.set_params(checkpoint.params);
  return agent;
}

Checkpoint DqnAgent::ToCheckpoint(nlohmann::json provenance) const {
  provenance["agent_variant"] = VariantName(AgentVariant::kDqn);
  provenance["n_policies"] = 1;
  provenance["updates"] = updates_;
  return {spec_, std::move(provenance), params_};
}

void DqnAgent::set_params(ParameterSet params) {
  network_.CheckShapes(params);
  params_ = std::move(params);
  target_params_ = params_;
}

std::vector<double> DqnAgent::QValues(const Observation& obs) const {
  const Matrix<float> out = network_.Forward(params_, MakeInput(spec_, obs));
  return {out.data(), out.data() + out.size()};
}

int DqnAgent::Act(const Observation& obs, double epsilon, Rng& rng) const {
  if (epsilon > 0.0) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < epsilon) {
      std::uniform_int_distribution<int> any(0, spec_.num_actions - 1);
      return any(rng);
    }
  }
  const std::vector<double> q = QValues(obs);
  return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
}

TrainMetrics DqnAgent::TrainStep(const ReplayMemory& memory, Rng& rng) {
  if (memory.size() < static_cast<std::size_t>(config_.batch_size)) {
    throw UsageError("replay memory holds " + std::to_string(memory.size()) +
                     " transitions, a batch needs " +
                     std::to_string(config_.batch_size));
  }
  const std::vector<SampledTransition> batch =
      memory.Sample(config_.batch_size, RelabelMode::kNone, rng);
  return TrainOnBatch(batch);
}

TrainMetrics DqnAgent::TrainOnBatch(std::span<const SampledTransition> batch) {
  if (batch.empty()) throw UsageError("empty training batch");
  const NetworkInput now = MakeInput(spec_, Observations(batch, false));
  const NetworkInput next = MakeInput(spec_, Observations(batch, true));
  Network::Activations cache;
  const Matrix<float> out = network_.Forward(params_, now, &cache);
  const Matrix<float> next_q = network_.Forward(
      config_.use_target_network ? target_params_ : params_, next);

  const double scale = 1.0 / static_cast<double>(batch.size());
  Matrix<float> d_out = Matrix<float>::Zero(out.rows(), out.cols());
  TrainMetrics metrics;
  metrics.pairs = static_cast<int>(batch.size());
  for (int b = 0; b < static_cast<int>(batch.size()); ++b) {
    const Transition& t = *batch[b].transition;
    const double bootstrap =
        t.done ? 0.0 : config_.gamma * static_cast<double>(next_q.col(b).maxCoeff());
    const double target = t.reward + bootstrap;
    if (!std::isfinite(target)) throw TrainingError("non-finite Q target");
    const int action = static_cast<int>(t.action);
    const double diff = out(action, b) - target;
    metrics.sf_loss += diff * diff * scale;
    d_out(action, b) = static_cast<float>(2.0 * diff * scale);
  }
  network_.Backward(params_, now, cache, d_out, &grads_);
  optimizer_.Step(&params_, grads_);
  ++updates_;
  if (config_.use_target_network &&
      updates_ % config_.target_sync_interval == 0) {
    target_params_ = params_;
  }
  return metrics;
}

// ---------------------------------------------------------------------------
// TabularSf

TabularSf::TabularSf(int num_states, int num_actions, int num_features,
                     double gamma)
    : num_states_(num_states),
      num_actions_(num_actions),
      num_features_(num_features),
      gamma_(gamma) {
  if (num_states < 1 || num_actions < 1 || num_features < 1) {
    throw UsageError("tabular SF sizes must be positive");
  }
  const int entries = num_states * num_features * num_actions;
  table_.tensors.push_back(
      {"psi", entries, 1, AlignedVector<double>(entries, 0.0)});
  grads_ = table_.ZerosLike();
}

TabularSf::BootstrapRule TabularSf::GreedyUnder(const TaskVector& w) {
  return [w](int, const SfTensor& psi) { return PolicyGreedyAction(psi, 0, w); };
}

TabularSf::BootstrapRule TabularSf::FollowPolicy(std::vector<int> policy) {
  return [policy = std::move(policy)](int state, const SfTensor&) {
    return policy.at(state);
  };
}

SfTensor TabularSf::At(int state) const {
  SfTensor psi(1, num_features_, num_actions_);
  const std::size_t base =
      static_cast<std::size_t>(state) * num_features_ * num_actions_;
  std::copy_n(table_.tensors[0].values.begin() + base, psi.values.size(),
              psi.values.begin());
  return psi;
}

double TabularSf::Value(int state, int action, int feature) const {
  return table_.tensors[0].values[(static_cast<std::size_t>(state) *
                                       num_features_ +
                                   feature) *
                                      num_actions_ +
                                  action];
}

double TabularSf::TrainStep(std::span<const TabularTransition> batch,
                            const BootstrapRule& rule, double learning_rate) {
  if (batch.empty()) throw UsageError("empty tabular batch");
  grads_.SetZero();
  auto& grad = grads_.tensors[0].values;
  const double scale = 1.0 / (static_cast<double>(batch.size()) * num_features_);
  std::vector<double> psi_next(num_features_);
  std::vector<double> target(num_features_);
  double loss = 0.0;
  for (const auto& t : batch) {
    const SfTensor next = At(t.next_state);
    const int bootstrap = rule(t.next_state, next);
    for (int k = 0; k < num_features_; ++k) psi_next[k] = next(0, k, bootstrap);
    SfTdTarget(t.phi, psi_next, gamma_, t.done, target);
    for (int k = 0; k < num_features_; ++k) {
      const std::size_t idx =
          (static_cast<std::size_t>(t.state) * num_features_ + k) *
              num_actions_ +
          t.action;
      const double diff = table_.tensors[0].values[idx] - target[k];
      loss += diff * diff * scale;
      grad[idx] += 2.0 * diff * scale;
    }
  }
  SgdStep(learning_rate, grads_, &table_);
  return loss;
}

}  // namespace sfcraft
