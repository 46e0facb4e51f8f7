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

SfTensor RandomTensor(int n, Rng& rng) {
  std::normal_distribution<double> n01;
  SfTensor psi(n, kNumFeatures, kNumActions);
  for (double& v : psi.values) v = n01(rng);
  return psi;
}

TaskVector RandomTask(Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::array<double, kNumFeatures> w;
  for (double& v : w) v = u(rng);
  return TaskVector::FromWeights(w);
}

TEST(GpiTest, DominatesEveryPolicy) {
  Rng rng(1);
  for (int trial = 0; trial < 2000; ++trial) {
    const SfTensor psi = RandomTensor(1 + trial % 5, rng);
    const TaskVector w = RandomTask(rng);
    const GpiDecision d = GpiChoice(psi, w);
    const QValues q = Gpe(psi, w);
    for (int i = 0; i < psi.n_policies; ++i) {
      double best = -INFINITY;
      for (int a = 0; a < kNumActions; ++a) best = std::max(best, q(i, a));
      EXPECT_GE(d.value, best);
    }
    EXPECT_EQ(q(d.policy, d.action), d.value);
  }
}

TEST(GpiTest, SinglePolicyEqualsGreedy) {
  Rng rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    const SfTensor psi = RandomTensor(1, rng);
    const TaskVector w = RandomTask(rng);
    EXPECT_EQ(GpiAction(psi, w), PolicyGreedyAction(psi, 0, w));
  }
}

TEST(GpiTest, ZeroTaskBreaksTiesToLowestAction) {
  Rng rng(3);
  const SfTensor psi = RandomTensor(3, rng);
  const GpiDecision d = GpiChoice(psi, TaskVector{});
  EXPECT_EQ(d.action, 0);
  EXPECT_EQ(d.policy, 0);
  EXPECT_EQ(PolicyGreedyAction(psi, 2, TaskVector{}), 0);
  EXPECT_THROW(PolicyGreedyAction(psi, 3, TaskVector{}), UsageError);
}

TEST(GpeTest, MatchesHandComputation) {
  SfTensor psi(1, kNumFeatures, kNumActions);
  psi(0, kWood, 2) = 2.0;
  psi(0, kTrap, 2) = 1.0;
  const QValues q =
      Gpe(psi, TaskVector::FromWeights({0.5, 0, 0, 1, -1}));
  EXPECT_DOUBLE_EQ(q(0, 2), 0.0);
  psi(0, kTable, 1) = 3.0;
  EXPECT_DOUBLE_EQ(Gpe(psi, TaskVector::FromWeights({0.5, 0, 0, 1, -1}))(0, 1),
                   3.0);
}

TEST(SfTdTargetTest, TerminalIgnoresBootstrap) {
  const FeatureVector phi = OneHotFeature(kIron);
  const std::vector<double> next = {1, 2, 3, 4, 5};
  std::vector<double> target(kNumFeatures);
  SfTdTarget(phi, next, 0.9, true, target);
  EXPECT_EQ(target, (std::vector<double>{0, 1, 0, 0, 0}));
  SfTdTarget(phi, next, 0.5, false, target);
  EXPECT_EQ(target, (std::vector<double>{0.5, 2, 1.5, 2, 2.5}));
  const std::vector<double> bad = {NAN, 0, 0, 0, 0};
  EXPECT_THROW(SfTdTarget(phi, bad, 0.5, false, target), TrainingError);
}

TEST(RewardLossTest, ValueAndGradient) {
  const std::vector<FeatureVector> phis = {OneHotFeature(kWood), {}};
  const std::vector<double> rewards = {1.0, 0.5};
  const TaskVector w = TaskVector::FromWeights({0.5, 0, 0, 0, 0});
  const RewardLoss rl = ComputeRewardLoss(phis, rewards, w);
  EXPECT_DOUBLE_EQ(rl.loss, (0.25 + 0.25) / 2);
  EXPECT_DOUBLE_EQ(rl.grad[kWood], -2 * 0.5 / 2);
  EXPECT_DOUBLE_EQ(rl.grad[kIron], 0.0);
  EXPECT_THROW(ComputeRewardLoss(phis, std::vector<double>{1.0}, w), UsageError);
}

TEST(VariantTest, NamesAndPolicies) {
  for (auto v : {AgentVariant::kSf1, AgentVariant::kSfN, AgentVariant::kSfHtr1,
                 AgentVariant::kSfHtrN, AgentVariant::kSfTrN,
                 AgentVariant::kDqn}) {
    EXPECT_EQ(ParseVariant(VariantName(v)), v);
  }
  EXPECT_EQ(PoliciesFor(AgentVariant::kSf1), 1);
  EXPECT_EQ(PoliciesFor(AgentVariant::kSfHtrN), kNumFeatures);
  EXPECT_EQ(RelabelFor(AgentVariant::kSfHtr1), RelabelMode::kHindsight);
  EXPECT_EQ(RelabelFor(AgentVariant::kSfTrN), RelabelMode::kNone);
  EXPECT_FALSE(IsSuccessorVariant(AgentVariant::kDqn));
  EXPECT_THROW(ParseVariant("SF-2"), UsageError);
}

TEST(AgentConfigTest, EpsilonSchedule) {
  AgentConfig c;
  EXPECT_DOUBLE_EQ(c.Epsilon(0, 1000), 1.0);
  EXPECT_DOUBLE_EQ(c.Epsilon(50, 1000), 0.525);
  EXPECT_DOUBLE_EQ(c.Epsilon(100, 1000), 0.05);
  EXPECT_DOUBLE_EQ(c.Epsilon(900, 1000), 0.05);
  c.batch_size = 0;
  EXPECT_THROW(c.Validate(), ConfigError);
  AgentConfig d = AgentConfig::FromJson({{"gamma", 0.5}});
  EXPECT_EQ(d.gamma, 0.5);
  EXPECT_EQ(d.batch_size, 64);
  EXPECT_EQ(AgentConfig::FromJson(d.ToJson()).ToJson(), d.ToJson());
}

std::vector<SampledTransition> Samples(const std::vector<Transition>& ts,
                                       const std::vector<TaskVector>& tasks) {
  std::vector<SampledTransition> out;
  for (std::size_t i = 0; i < ts.size(); ++i) out.push_back({&ts[i], tasks[i], false});
  return out;
}

TEST(BuildTdExamplesTest, RoutingPerVariant) {
  std::vector<Transition> ts(3);
  const std::vector<TaskVector> tasks = {
      TaskVector::OneHot(kCoal), TaskVector::OneHot(kTrap),
      TaskVector::FromWeights({0.5, 0, 0, 1, -1})};
  const auto batch = Samples(ts, tasks);

  const auto tr = BuildTdExamples(AgentVariant::kSfTrN, 5, batch);
  ASSERT_EQ(tr.size(), 15u);
  for (std::size_t p = 0; p < tr.size(); ++p) {
    EXPECT_EQ(tr[p].sample, static_cast<int>(p % 3));
    EXPECT_EQ(tr[p].policy, static_cast<int>(p / 3));
    EXPECT_EQ(tr[p].task, TaskVector::OneHot(tr[p].policy));
  }

  const auto n = BuildTdExamples(AgentVariant::kSfN, 5, batch);
  ASSERT_EQ(n.size(), 2u + 5u);
  EXPECT_EQ(n[0].policy, kCoal);
  EXPECT_EQ(n[1].policy, kTrap);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(n[2 + i].policy, i);

  const auto one = BuildTdExamples(AgentVariant::kSf1, 1, batch);
  ASSERT_EQ(one.size(), 3u);
  for (const auto& ex : one) EXPECT_EQ(ex.policy, 0);
  EXPECT_EQ(one[2].task, tasks[2]);
}

NetworkSpec SmallSpec(int n_policies) {
  EnvConfig env;
  env.height = env.width = 5;
  NetworkSpec s = NetworkSpec::ForEnv(env, HeadKind::kSuccessorFeatures,
                                      n_policies, false);
  s.conv_filters = 2;
  s.side_units = s.trunk_units = s.head_units = 8;
  return s;
}

std::vector<Transition> TerminalWoodBatch(int size, unsigned seed) {
  EnvConfig env;
  env.height = env.width = 5;
  env.n_wood = env.n_iron = env.n_coal = 1;
  env.n_traps = 1;
  GridWorld world(env);
  std::vector<Transition> ts;
  for (int i = 0; i < size; ++i) {
    Transition t;
    t.obs = world.Reset(seed + i);
    t.next_obs = t.obs;
    t.action = static_cast<Move>(i % kNumActions);
    t.features = OneHotFeature(kWood);
    t.reward = 1.0;
    t.done = true;
    t.episode_task = TaskVector::OneHot(kWood);
    ts.push_back(t);
  }
  return ts;
}

TEST(SfAgentTest, TerminalTargetsAreTheFeatures) {
  AgentConfig config;
  config.learning_rate = 3e-3;
  SfAgent agent(AgentVariant::kSfTrN, SmallSpec(5), config, 4);
  const auto ts = TerminalWoodBatch(8, 10);
  const auto batch = Samples(ts, std::vector<TaskVector>(8, TaskVector::OneHot(kWood)));
  const double first = agent.TrainOnBatch(batch, TrainPhase::kPretrain).sf_loss;
  double last = first;
  for (int it = 0; it < 1500; ++it) {
    last = agent.TrainOnBatch(batch, TrainPhase::kPretrain).sf_loss;
  }
  EXPECT_LT(last, 1e-3);
  EXPECT_LT(last, first);
  const SfTensor psi = agent.Successors(ts[0].obs);
  const int a = static_cast<int>(ts[0].action);
  for (int i = 0; i < 5; ++i) {
    EXPECT_NEAR(psi(i, kWood, a), 1.0, 0.1);
    EXPECT_NEAR(psi(i, kIron, a), 0.0, 0.1);
  }
  EXPECT_EQ(agent.updates(), 1501);
}

TEST(SfAgentTest, PretrainLeavesLearnedWUntouched) {
  SfAgent agent(AgentVariant::kSfTrN, SmallSpec(5), AgentConfig{}, 4);
  const auto ts = TerminalWoodBatch(4, 0);
  const auto batch = Samples(ts, std::vector<TaskVector>(4, TaskVector::OneHot(kWood)));
  for (int it = 0; it < 20; ++it) {
    EXPECT_EQ(agent.TrainOnBatch(batch, TrainPhase::kPretrain).reward_loss, 0.0);
  }
  EXPECT_EQ(agent.learned_w(), TaskVector{});
  agent.TrainOnBatch(batch, TrainPhase::kTargetLearnedW);
  EXPECT_GT(agent.learned_w()[kWood], 0.0);
  EXPECT_EQ(agent.learned_w()[kIron], 0.0);
}

TEST(SfAgentTest, TrainingIsDeterministic) {
  const auto ts = TerminalWoodBatch(6, 3);
  const auto batch = Samples(ts, std::vector<TaskVector>(6, TaskVector::OneHot(kWood)));
  SfAgent a(AgentVariant::kSfN, SmallSpec(5), AgentConfig{}, 9);
  SfAgent b(AgentVariant::kSfN, SmallSpec(5), AgentConfig{}, 9);
  for (int it = 0; it < 10; ++it) {
    a.TrainOnBatch(batch, TrainPhase::kTargetLearnedW);
    b.TrainOnBatch(batch, TrainPhase::kTargetLearnedW);
  }
  EXPECT_EQ(a.params(), b.params());
  EXPECT_EQ(a.learned_w(), b.learned_w());
}

TEST(SfAgentTest, TrainStepNeedsFullBatch) {
  AgentConfig config;
  config.batch_size = 4;
  SfAgent agent(AgentVariant::kSf1, SmallSpec(1), config, 0);
  ReplayMemory memory(10);
  Rng rng(0);
  EXPECT_THROW(agent.TrainStep(memory, TrainPhase::kPretrain, rng), UsageError);
}

TEST(SfAgentTest, ConstructorChecksPolicyCount) {
  EXPECT_THROW(SfAgent(AgentVariant::kSf1, SmallSpec(5), {}, 0), UsageError);
  EXPECT_THROW(SfAgent(AgentVariant::kDqn, SmallSpec(1), {}, 0), UsageError);
}

TEST(SfAgentTest, CheckpointRoundTrip) {
  SfAgent agent(AgentVariant::kSfHtrN, SmallSpec(5), AgentConfig{}, 2);
  agent.set_learned_w(TaskVector::FromWeights({0.25, 0, 0, 0, -1}));
  const Checkpoint c = agent.ToCheckpoint({{"suite", "one_item"}});
  const SfAgent back = SfAgent::FromCheckpoint(DecodeCheckpoint(EncodeCheckpoint(c)));
  EXPECT_EQ(back.variant(), AgentVariant::kSfHtrN);
  EXPECT_EQ(back.params(), agent.params());
  EXPECT_EQ(back.learned_w(), agent.learned_w());
  Rng rng(0);
  GridWorld world([] {
    EnvConfig e;
    e.height = e.width = 5;
    e.n_wood = 1;
    e.n_iron = e.n_coal = e.n_traps = 0;
    return e;
  }());
  const Observation obs = world.Reset(1);
  EXPECT_EQ(back.Successors(obs).values, agent.Successors(obs).values);
  EXPECT_EQ(back.Act(obs, TaskVector::OneHot(kWood), 0.0, std::nullopt, rng),
            agent.Act(obs, TaskVector::OneHot(kWood), 0.0, std::nullopt, rng));

  DqnAgent dqn([] {
    NetworkSpec s = SmallSpec(1);
    s.head = HeadKind::kQValues;
    return s;
  }(), AgentConfig{}, 0);
  EXPECT_THROW(SfAgent::FromCheckpoint(dqn.ToCheckpoint({})), FormatError);
}

// Q-learning on the three-state chain, with the state one-hot in the
// inventory input and an empty grid.
TEST(DqnAgentTest, LearnsChainQValues) {
  const TabularMdp mdp = ThreeStateChain(0.9);
  Eigen::VectorXd w(2);
  w << 0.0, 1.0;
  const Eigen::MatrixXd q_star = ValueIteration(mdp, LinearStateReward(mdp, w));

  NetworkSpec spec;
  spec.grid_height = spec.grid_width = 3;
  spec.conv_filters = 1;
  spec.side_units = spec.trunk_units = 16;
  spec.head = HeadKind::kQValues;
  spec.num_actions = mdp.num_actions;
  AgentConfig config;
  config.gamma = mdp.gamma;
  config.learning_rate = 3e-3;
  config.use_target_network = false;
  DqnAgent agent(spec, config, 1);

  auto observe = [&](int s) {
    Observation o;
    o.height = o.width = 3;
    o.grid.assign(3 * 3 * kNumChannels, 0);
    if (s < 3) o.inventory[s] = 1;
    return o;
  };
  std::vector<Transition> ts;
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < mdp.num_actions; ++a) {
      const int next = mdp.Next(s, a)[0].next_state;
      Transition t;
      t.obs = observe(s);
      t.next_obs = observe(next);
      t.action = static_cast<Move>(a);
      t.reward = LinearStateReward(mdp, w)(next);
      t.done = mdp.terminal[next];
      ts.push_back(t);
    }
  }
  std::vector<SampledTransition> batch;
  for (const auto& t : ts) batch.push_back({&t, {}, false});
  for (int it = 0; it < 4000; ++it) agent.TrainOnBatch(batch);
  for (int s = 0; s < 2; ++s) {
    const auto q = agent.QValues(observe(s));
    for (int a = 0; a < mdp.num_actions; ++a) {
      EXPECT_NEAR(q[a], q_star(s, a), 0.02) << "s=" << s << " a=" << a;
    }
  }
}

TEST(WFitTest, RecoversLeastSquaresSolution) {
  // Rewards follow a known w exactly on the features that occur.
  const std::array<double, kNumFeatures> truth = {1, -1, -1, 0, -1};
  Rng rng(4);
  std::vector<std::vector<RewardSample>> episodes;
  for (int e = 0; e < 30; ++e) {
    std::vector<RewardSample> ep;
    for (int t = 0; t < 40; ++t) {
      RewardSample s;
      if (rng() % 4 == 0) s.phi = OneHotFeature(static_cast<int>(rng() % kNumFeatures));
      for (int k = 0; k < kNumFeatures; ++k) s.reward += s.phi[k] * truth[k];
      ep.push_back(s);
    }
    episodes.push_back(ep);
  }
  const WFitResult r = FitWFewShot(episodes);
  EXPECT_EQ(r.status, WFitStatus::kConverged);
  EXPECT_LE(r.episodes, 30);
  for (int k = 0; k < kNumFeatures; ++k) EXPECT_NEAR(r.w[k], truth[k], 1e-6);
  EXPECT_LT(r.loss, 1e-12);
}

TEST(WFitTest, DegenerateStream) {
  const std::vector<std::vector<RewardSample>> episodes(5,
                                                        std::vector<RewardSample>(10));
  const WFitResult r = FitWFewShot(episodes);
  EXPECT_EQ(r.status, WFitStatus::kDegenerateStream);
  EXPECT_EQ(r.w, TaskVector{});
  EXPECT_EQ(r.episodes, 5);
}

TEST(WFitTest, RejectsBadLearningRate) {
  WFitOptions o;
  o.learning_rate = 1.5;
  EXPECT_THROW(WFitter{o}, UsageError);
}

}  // namespace
}  // namespace sfcraft
