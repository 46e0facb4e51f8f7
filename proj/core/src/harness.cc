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

#include "sfcraft/harness.h"

#include <string>
#include <utility>

#include "sfcraft/errors.h"

namespace sfcraft {
namespace {

enum SeedStream : std::uint64_t {
  kInitStream = 1,
  kTrainStream = 2,
  kLevelStream = 3,
  kTaskStream = 4,
  kEvalStream = 5,
  kFitStream = 6,
  kGoalStream = 7,
};

std::uint64_t SplitMix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct LossWindow {
  double sf = 0.0;
  double reward = 0.0;
  int count = 0;

  void Add(const TrainMetrics& m) {
    sf += m.sf_loss;
    reward += m.reward_loss;
    ++count;
  }
  double MeanSf() const { return count ? sf / count : 0.0; }
  double MeanReward() const { return count ? reward / count : 0.0; }
  void Clear() { *this = LossWindow{}; }
};

std::string RunTag(const ExperimentConfig& config, std::string_view suite,
                   std::uint64_t seed) {
  return config.name + "_" + std::string(VariantName(config.variant)) + "_" +
         std::string(suite) + "_seed" + std::to_string(seed);
}

void MaybeSaveCheckpoint(const ExperimentConfig& config, const std::string& tag,
                         const std::string& point, const Checkpoint& checkpoint,
                         MetricsSink* sink) {
  if (config.output_dir.empty()) return;
  std::filesystem::create_directories(config.output_dir);
  const std::filesystem::path path =
      config.output_dir / (tag + "_" + point + ".sfc");
  SaveCheckpoint(path, checkpoint);
  if (sink) {
    sink->Event("checkpoint", {{"file", path.filename().string()},
                               {"point", point}});
  }
}

nlohmann::json Provenance(const ExperimentConfig& config, std::string_view kind,
                          std::string_view suite, std::uint64_t seed,
                          std::int64_t step) {
  return {{"kind", std::string(kind)},
          {"suite", std::string(suite)},
          {"seed", seed},
          {"step", step},
          {"experiment", config.name},
          {"env", EnvConfigToJson(config.env)},
          {"agent_config", config.agent.ToJson()}};
}

void Emit(const MetricsRecord& record, TrainResult& result, MetricsSink* sink) {
  result.records.push_back(record);
  if (!sink) return;
  sink->Record(record);
  sink->Event("eval", {{"step", record.step},
                       {"seed", record.seed},
                       {"suite", record.suite},
                       {"variant", record.variant},
                       {"mean_return", record.mean_return},
                       {"sf_loss", record.sf_loss},
                       {"reward_loss", record.reward_loss}});
}

Transition MakeTransition(const Observation& obs, int action,
                          const StepOutcome& out, std::int64_t episode,
                          int step_index, const TaskVector& task) {
  Transition t;
  t.obs = obs;
  t.action = static_cast<Move>(action);
  t.features = out.features;
  t.reward = out.reward;
  t.next_obs = out.observation;
  // Time-limit truncation is not a true termination; bootstrap through it.
  t.done = out.done && out.info != StepEvent::kTimeout;
  t.episode_id = episode;
  t.step_index = step_index;
  t.episode_task = task;
  return t;
}

}  // namespace

std::uint64_t MixSeed(std::uint64_t a, std::uint64_t b) {
  return SplitMix(a ^ SplitMix(b + 0x632be59bd9b4e019ULL));
}

std::optional<int> EpisodeGoal(Suite suite, std::uint64_t level_seed) {
  if (!IsNonStationary(suite)) return std::nullopt;
  Rng goal_rng(MixSeed(level_seed, kGoalStream));
  return SampleEpisodeTask(suite, goal_rng).ArgMax();
}

GreedyPolicy SfGreedyPolicy(const SfAgent& agent) {
  return [&agent](const Observation& obs, const TaskVector& w) {
    Rng unused(0);
    return agent.Act(obs, w, 0.0, std::nullopt, unused);
  };
}

GreedyPolicy DqnGreedyPolicy(const DqnAgent& agent) {
  return [&agent](const Observation& obs, const TaskVector&) {
    Rng unused(0);
    return agent.Act(obs, 0.0, unused);
  };
}

EvalSummary EvaluatePolicy(const GreedyPolicy& policy,
                           const EvalRequest& request) {
  if (request.episodes < 1) throw UsageError("episodes must be >= 1");
  if (!request.w && !request.suite) {
    throw UsageError("evaluation needs a task vector or a suite");
  }
  if (request.w && !request.w->IsFinite()) {
    throw UsageError("task vector must be finite");
  }
  GridWorld world(request.env);
  EvalSummary summary;
  std::vector<double> returns;
  for (int e = 0; e < request.episodes; ++e) {
    const std::uint64_t level = MixSeed(request.seed, e);
    const std::optional<int> goal =
        request.suite ? EpisodeGoal(*request.suite, level) : std::nullopt;
    const TaskVector w =
        request.w ? *request.w : TrueTaskVector(*request.suite, goal);
    if (request.suite) {
      world.BindTask(TaskBinding{*request.suite, goal});
    } else {
      world.BindTask(std::nullopt);
    }
    if (request.goal_input) {
      world.set_task_input(goal ? OneHotFeature(*goal) : w.weights);
    } else {
      world.set_task_input(std::nullopt);
    }
    Observation obs = world.Reset(level);
    EpisodeResult episode;
    while (true) {
      const int action = policy(obs, w);
      StepOutcome out = world.Step(static_cast<Move>(action));
      episode.total_return +=
          request.suite ? out.reward : LinearReward(out.features, w);
      if (const auto f = ActiveFeature(out.features)) ++episode.counts[*f];
      ++episode.length;
      if (out.done) break;
      obs = std::move(out.observation);
    }
    returns.push_back(episode.total_return);
    for (int k = 0; k < kNumFeatures; ++k) {
      summary.mean_counts[k] += episode.counts[k];
    }
    summary.episodes.push_back(episode);
  }
  for (double& c : summary.mean_counts) c /= request.episodes;
  const MeanStdError stats = Summarize(returns);
  summary.mean = stats.mean;
  summary.std_error = stats.std_error;
  summary.reward_evaluations = world.reward_evaluations();
  return summary;
}

TrainResult Pretrain(const ExperimentConfig& config, std::uint64_t seed,
                     MetricsSink* sink) {
  if (!IsSuccessorVariant(config.variant)) {
    throw UsageError(std::string(VariantName(config.variant)) +
                     " cannot be pre-trained: pre-training is reward-free and "
                     "needs a successor-feature agent");
  }
  config.Validate();
  const std::string variant(VariantName(config.variant));
  const int n = PoliciesFor(config.variant);
  const NetworkSpec spec = NetworkSpec::ForEnv(
      config.env, HeadKind::kSuccessorFeatures, n, /*goal_conditioned=*/false);
  SfAgent agent(config.variant, spec, config.agent, MixSeed(seed, kInitStream));
  ReplayMemory memory(config.agent.replay_capacity);
  GridWorld world(config.env);
  world.BindTask(std::nullopt);
  Rng train_rng(MixSeed(seed, kTrainStream));
  Rng task_rng(MixSeed(seed, kTaskStream));
  const std::string tag = RunTag(config, "pretrain", seed);
  const std::int64_t budget = config.budget;
  const std::int64_t share = budget / kNumFeatures;

  TrainResult result;
  LossWindow window;
  std::int64_t step = 0;
  std::int64_t next_eval = config.eval_interval;
  std::int64_t episode = 0;

  auto evaluate = [&]() {
    MetricsRecord record;
    record.step = step;
    record.seed = seed;
    record.suite = "pretrain";
    record.variant = variant;
    std::vector<double> returns;
    for (int k = 0; k < kNumFeatures; ++k) {
      EvalRequest request;
      request.env = config.env;
      request.w = TaskVector::OneHot(k);
      request.episodes = config.train_eval_episodes;
      request.seed = MixSeed(MixSeed(seed, kEvalStream), k);
      const EvalSummary s = EvaluatePolicy(SfGreedyPolicy(agent), request);
      record.completion[k] = s.mean_counts[k];
      result.reward_evaluations += s.reward_evaluations;
      for (const auto& ep : s.episodes) returns.push_back(ep.total_return);
    }
    const MeanStdError stats = Summarize(returns);
    record.mean_return = stats.mean;
    record.std_error = stats.std_error;
    record.sf_loss = window.MeanSf();
    window.Clear();
    Emit(record, result, sink);
  };

  while (step < budget) {
    std::vector<int> open;
    for (int k = 0; k < kNumFeatures; ++k) {
      if (result.task_steps[k] < share) open.push_back(k);
    }
    if (open.empty()) {
      for (int k = 0; k < kNumFeatures; ++k) open.push_back(k);
    }
    std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
    const int task_index = open[pick(task_rng)];
    const TaskVector task = TaskVector::OneHot(task_index);
    // Multi-policy agents act with the policy owning this objective.
    const std::optional<int> acting = n > 1 ? task_index : 0;

    Observation obs = world.Reset(MixSeed(MixSeed(seed, kLevelStream), episode));
    int t = 0;
    while (step < budget) {
      const double epsilon = config.agent.Epsilon(step, budget);
      const int action = agent.Act(obs, task, epsilon, acting, train_rng);
      StepOutcome out = world.Step(static_cast<Move>(action));
      memory.Push(MakeTransition(obs, action, out, episode, t, task));
      ++step;
      ++t;
      ++result.task_steps[task_index];
      if (step % config.agent.train_every == 0 &&
          memory.size() >= static_cast<std::size_t>(config.agent.batch_size)) {
        window.Add(agent.TrainStep(memory, TrainPhase::kPretrain, train_rng));
      }
      if (step == next_eval || step == budget) {
        evaluate();
        const std::string point =
            step == budget ? "final" : "step" + std::to_string(step);
        MaybeSaveCheckpoint(
            config, tag, point,
            agent.ToCheckpoint(
                Provenance(config, "pretrain", "pretrain", seed, step)),
            sink);
        if (step == next_eval) next_eval += config.eval_interval;
      }
      if (out.done) break;
      obs = std::move(out.observation);
    }
    ++episode;
  }

  result.env_steps = step;
  result.episodes = episode;
  result.reward_evaluations += world.reward_evaluations();
  result.train_updates = agent.updates();
  result.checkpoint = agent.ToCheckpoint(
      Provenance(config, "pretrain", "pretrain", seed, step));
  return result;
}

TrainResult TargetTrain(const ExperimentConfig& config, Suite suite,
                        std::uint64_t seed, MetricsSink* sink) {
  if (suite == Suite::kPretrain) {
    throw UsageError("'pretrain' is not a target suite");
  }
  config.Validate();
  const std::string variant(VariantName(config.variant));
  const std::string suite_name(SuiteName(suite));
  const bool goal_conditioned = IsNonStationary(suite);
  const bool successor = IsSuccessorVariant(config.variant);
  const int n = PoliciesFor(config.variant);

  std::optional<SfAgent> sf;
  std::optional<DqnAgent> dqn;
  if (successor) {
    const NetworkSpec spec = NetworkSpec::ForEnv(
        config.env, HeadKind::kSuccessorFeatures, n, goal_conditioned);
    if (config.init_checkpoint) {
      sf.emplace(SfAgent::FromCheckpoint(
          LoadCheckpoint(*config.init_checkpoint, &spec), config.agent));
    } else {
      sf.emplace(config.variant, spec, config.agent, MixSeed(seed, kInitStream));
    }
  } else {
    const NetworkSpec spec =
        NetworkSpec::ForEnv(config.env, HeadKind::kQValues, 1, goal_conditioned);
    if (config.init_checkpoint) {
      dqn.emplace(DqnAgent::FromCheckpoint(
          LoadCheckpoint(*config.init_checkpoint, &spec), config.agent));
    } else {
      dqn.emplace(spec, config.agent, MixSeed(seed, kInitStream));
    }
  }
  const TrainPhase phase =
      goal_conditioned ? TrainPhase::kTargetGivenW : TrainPhase::kTargetLearnedW;

  ReplayMemory memory(config.agent.replay_capacity);
  GridWorld world(config.env);
  Rng train_rng(MixSeed(seed, kTrainStream));
  Rng task_rng(MixSeed(seed, kTaskStream));
  const std::string tag = RunTag(config, suite_name, seed);
  const std::int64_t budget = config.budget;

  TrainResult result;
  LossWindow window;
  std::int64_t step = 0;
  std::int64_t next_eval = config.eval_interval;
  std::int64_t episode = 0;

  auto checkpoint = [&]() {
    const nlohmann::json provenance =
        Provenance(config, "target", suite_name, seed, step);
    return sf ? sf->ToCheckpoint(provenance) : dqn->ToCheckpoint(provenance);
  };

  auto evaluate = [&]() {
    EvalRequest request;
    request.env = config.env;
    request.suite = suite;
    if (sf && !goal_conditioned) request.w = sf->learned_w();
    request.episodes = config.train_eval_episodes;
    request.seed = MixSeed(seed, kEvalStream);
    request.goal_input = goal_conditioned;
    const EvalSummary s = EvaluatePolicy(
        sf ? SfGreedyPolicy(*sf) : DqnGreedyPolicy(*dqn), request);
    result.reward_evaluations += s.reward_evaluations;
    MetricsRecord record;
    record.step = step;
    record.seed = seed;
    record.suite = suite_name;
    record.variant = variant;
    record.mean_return = s.mean;
    record.std_error = s.std_error;
    record.completion = s.mean_counts;
    record.sf_loss = window.MeanSf();
    record.reward_loss = window.MeanReward();
    if (sf) record.w = sf->learned_w().weights;
    window.Clear();
    Emit(record, result, sink);
  };

  while (step < budget) {
    std::optional<int> goal;
    if (goal_conditioned) goal = SampleEpisodeTask(suite, task_rng).ArgMax();
    world.BindTask(TaskBinding{suite, goal});
    world.set_task_input(goal ? std::optional(OneHotFeature(*goal))
                              : std::nullopt);
    Observation obs = world.Reset(MixSeed(MixSeed(seed, kLevelStream), episode));
    int t = 0;
    while (step < budget) {
      const double epsilon = config.agent.Epsilon(step, budget);
      TaskVector w;
      int action = 0;
      if (sf) {
        w = goal ? TrueTaskVector(suite, goal) : sf->learned_w();
        action = sf->Act(obs, w, epsilon, std::nullopt, train_rng);
      } else {
        if (goal) w = TrueTaskVector(suite, goal);
        action = dqn->Act(obs, epsilon, train_rng);
      }
      StepOutcome out = world.Step(static_cast<Move>(action));
      memory.Push(MakeTransition(obs, action, out, episode, t, w));
      ++step;
      ++t;
      if (step % config.agent.train_every == 0 &&
          memory.size() >= static_cast<std::size_t>(config.agent.batch_size)) {
        window.Add(sf ? sf->TrainStep(memory, phase, train_rng)
                      : dqn->TrainStep(memory, train_rng));
      }
      if (step == next_eval || step == budget) {
        evaluate();
        const std::string point =
            step == budget ? "final" : "step" + std::to_string(step);
        MaybeSaveCheckpoint(config, tag, point, checkpoint(), sink);
        if (step == next_eval) next_eval += config.eval_interval;
      }
      if (out.done) break;
      obs = std::move(out.observation);
    }
    ++episode;
  }

  result.env_steps = step;
  result.episodes = episode;
  result.reward_evaluations += world.reward_evaluations();
  result.train_updates = sf ? sf->updates() : dqn->updates();
  result.checkpoint = checkpoint();
  return result;
}

TransferResult TransferEval(const Checkpoint& checkpoint, Suite suite,
                            const EnvConfig& env,
                            const TransferOptions& options) {
  if (suite == Suite::kPretrain) {
    throw UsageError("'pretrain' is not a transfer target");
  }
  SfAgent agent = SfAgent::FromCheckpoint(checkpoint);
  if (agent.spec().grid_height != env.height ||
      agent.spec().grid_width != env.width) {
    throw UsageError("checkpoint was trained on a " +
                     std::to_string(agent.spec().grid_height) + "x" +
                     std::to_string(agent.spec().grid_width) +
                     " grid, evaluation uses " + std::to_string(env.height) +
                     "x" + std::to_string(env.width));
  }
  const std::int64_t updates_before = agent.updates();
  const std::string suite_name(SuiteName(suite));

  TransferResult result;
  EvalRequest request;
  request.env = env;
  request.suite = suite;
  request.episodes = options.episodes;
  request.seed = options.seed;
  request.goal_input = agent.spec().goal_conditioned();

  if (options.w) {
    // An explicit vector overrides the source.
    request.w = *options.w;
  } else {
    switch (options.w_source) {
      case WSource::kTrue:
        if (IsCrafting(suite)) {
          throw UsageError("no true task vector exists for " + suite_name +
                           ": its reward is not linear in the features");
        }
        if (!IsNonStationary(suite)) request.w = TrueTaskVector(suite);
        break;
      case WSource::kHandCrafted:
        request.w = HandcraftedVector(suite);
        break;
      case WSource::kFitted: {
        if (IsNonStationary(suite)) {
          throw UsageError("a fitted task vector is undefined for " + suite_name +
                           ": its goal changes every episode");
        }
        // Behaviour is uniformly random; theta is never touched.
        GridWorld world(env);
        world.BindTask(TaskBinding{suite, std::nullopt});
        Rng behaviour(MixSeed(options.seed, kFitStream));
        std::uniform_int_distribution<int> any(0, kNumActions - 1);
        WFitter fitter(options.fit);
        for (std::int64_t e = 0;; ++e) {
          world.Reset(MixSeed(MixSeed(options.seed, kFitStream), e));
          std::vector<RewardSample> samples;
          while (!world.state().done) {
            const StepOutcome out =
                world.Advance(static_cast<Move>(any(behaviour)));
            samples.push_back({out.features, out.reward});
          }
          if (fitter.AddEpisode(samples)) break;
        }
        result.fit = fitter.Result();
        request.w = result.fit->w;
        break;
      }
    }
  }

  result.eval = EvaluatePolicy(SfGreedyPolicy(agent), request);
  result.w = request.w;
  result.train_updates = agent.updates() - updates_before;

  const std::string variant(VariantName(agent.variant()));
  result.summary.kind = "summary";
  result.summary.seed = options.seed;
  result.summary.suite = suite_name;
  result.summary.variant = variant;
  result.summary.mean_return = result.eval.mean;
  result.summary.std_error = result.eval.std_error;
  result.summary.completion = result.eval.mean_counts;
  if (request.w) result.summary.w = request.w->weights;
  for (std::size_t e = 0; e < result.eval.episodes.size(); ++e) {
    const EpisodeResult& ep = result.eval.episodes[e];
    MetricsRecord row = result.summary;
    row.kind = "episode";
    row.episode = static_cast<int>(e);
    row.mean_return = ep.total_return;
    row.std_error = 0.0;
    for (int k = 0; k < kNumFeatures; ++k) row.completion[k] = ep.counts[k];
    result.episodes.push_back(row);
  }
  return result;
}

}  // namespace sfcraft
