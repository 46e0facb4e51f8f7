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

// sfcraft: command line front end for training, transfer evaluation, the
// oracle checks, the evaluation service and level rendering.

#include <algorithm>
#include <csignal>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sfcraft/agents.h"
#include "sfcraft/config.h"
#include "sfcraft/errors.h"
#include "sfcraft/gridworld.h"
#include "sfcraft/harness.h"
#include "sfcraft/metrics.h"
#include "sfcraft/oracle.h"
#include "sfcraft/service.h"

namespace {

using namespace sfcraft;

struct RunFlags {
  std::string config;
  std::string variant;
  std::vector<std::uint64_t> seeds;
  std::int64_t budget = 0;
  std::int64_t eval_interval = 0;
  std::string output_dir;
  std::vector<std::string> suites;
  std::string init_checkpoint;
};

void AddRunFlags(CLI::App* cmd, RunFlags& f, bool with_suite) {
  cmd->add_option("-c,--config", f.config, "Experiment config (JSON)")
      ->required();
  cmd->add_option("--variant", f.variant, "Agent variant label");
  cmd->add_option("--seeds", f.seeds, "Seeds to run")->delimiter(',');
  cmd->add_option("--budget", f.budget, "Environment steps per run");
  cmd->add_option("--eval-interval", f.eval_interval, "Steps between evaluations");
  cmd->add_option("-o,--output-dir", f.output_dir, "Output directory");
  if (with_suite) {
    cmd->add_option("--suite", f.suites, "Target suite(s)")->delimiter(',');
    cmd->add_option("--init-checkpoint", f.init_checkpoint,
                    "Checkpoint to start from");
  }
}

ExperimentConfig ResolveConfig(const RunFlags& f) {
  ExperimentConfig c = ExperimentConfig::Load(f.config);
  if (!f.variant.empty()) c.variant = ParseVariant(f.variant);
  if (!f.seeds.empty()) c.seeds = f.seeds;
  if (f.budget > 0) c.budget = f.budget;
  if (f.eval_interval > 0) c.eval_interval = f.eval_interval;
  if (!f.output_dir.empty()) c.output_dir = f.output_dir;
  if (!f.suites.empty()) {
    c.suites.clear();
    for (const auto& s : f.suites) c.suites.push_back(ParseSuite(s));
  }
  if (!f.init_checkpoint.empty()) c.init_checkpoint = f.init_checkpoint;
  c.Validate();
  return c;
}

MetricsSink OpenSink(const ExperimentConfig& c) {
  if (c.output_dir.empty()) return MetricsSink();
  std::filesystem::create_directories(c.output_dir);
  return MetricsSink(c.output_dir / "metrics.csv", c.output_dir / "events.jsonl");
}

void PrintRecord(const MetricsRecord& r) {
  std::cout << r.suite << " " << r.variant << " seed " << r.seed << " step "
            << r.step << ": return " << r.mean_return << " (" << r.std_error
            << ")\n";
}

int RunPretrain(const RunFlags& flags) {
  const ExperimentConfig c = ResolveConfig(flags);
  MetricsSink sink = OpenSink(c);
  sink.Event("start", {{"command", "pretrain"}, {"config", c.ToJson()}});
  for (std::uint64_t seed : c.seeds) {
    const TrainResult r = Pretrain(c, seed, &sink);
    PrintRecord(r.records.back());
  }
  return 0;
}

int RunTrain(const RunFlags& flags) {
  const ExperimentConfig c = ResolveConfig(flags);
  if (c.suites.empty()) throw UsageError("train needs at least one --suite");
  MetricsSink sink = OpenSink(c);
  sink.Event("start", {{"command", "train"}, {"config", c.ToJson()}});
  for (Suite suite : c.suites) {
    for (std::uint64_t seed : c.seeds) {
      const TrainResult r = TargetTrain(c, suite, seed, &sink);
      PrintRecord(r.records.back());
    }
  }
  return 0;
}

struct TransferFlags {
  std::string checkpoint;
  std::string suite;
  std::string w_source = "true";
  std::vector<double> w;
  int episodes = 100;
  std::uint64_t seed = 0;
  std::string output;
};

int RunTransfer(const TransferFlags& f) {
  const Checkpoint checkpoint = LoadCheckpoint(f.checkpoint);
  const Suite suite = ParseSuite(f.suite);
  TransferOptions options;
  options.w_source = ParseWSource(f.w_source);
  options.episodes = f.episodes;
  options.seed = f.seed;
  if (!f.w.empty()) {
    if (f.w.size() != kNumFeatures) {
      throw UsageError("--w needs exactly 5 comma-separated values");
    }
    std::array<double, kNumFeatures> w{};
    std::copy(f.w.begin(), f.w.end(), w.begin());
    options.w = TaskVector::FromWeights(w, TaskSource::kHandCrafted);
  }
  const TransferResult r =
      TransferEval(checkpoint, suite, EnvForCheckpoint(checkpoint), options);
  std::ostringstream csv;
  csv << MetricsCsvHeader() << "\n" << MetricsCsvRow(r.summary) << "\n";
  for (const auto& row : r.episodes) csv << MetricsCsvRow(row) << "\n";
  if (f.output.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream out(f.output);
    if (!out) throw Error("cannot write " + f.output);
    out << csv.str();
    PrintRecord(r.summary);
  }
  return 0;
}

struct CheckLine {
  std::string name;
  bool passed;
  std::string detail;
};

int RunOracleCheck() {
  std::vector<CheckLine> lines;
  {
    // Tabular TD on the 4x4 grid against the direct solve.
    const TabularMdp mdp = FourByFourGrid(0.9);
    std::vector<int> policy(mdp.num_states);
    for (int s = 0; s < mdp.num_states; ++s) policy[s] = (s % 4 == 3) ? 1 : 2;
    const Eigen::MatrixXd psi =
        AnalyticSf(mdp, DeterministicPolicy(policy, mdp.num_actions));
    std::vector<TabularTransition> all;
    for (int s = 0; s < mdp.num_states; ++s) {
      for (int a = 0; a < mdp.num_actions; ++a) {
        TabularTransition t;
        t.state = s;
        t.action = a;
        t.next_state = mdp.Next(s, a)[0].next_state;
        t.done = mdp.terminal[t.next_state];
        t.phi = {mdp.phi(t.next_state, 0), mdp.phi(t.next_state, 1)};
        all.push_back(t);
      }
    }
    TabularSf table(mdp.num_states, mdp.num_actions, mdp.num_features,
                    mdp.gamma);
    const auto rule = TabularSf::FollowPolicy(policy);
    double error = 0.0;
    for (int update = 0; update < 5000; ++update) {
      table.TrainStep(all, rule, 0.5 * all.size() * mdp.num_features / 2.0);
    }
    for (int s = 0; s < mdp.num_states; ++s) {
      for (int a = 0; a < mdp.num_actions; ++a) {
        for (int k = 0; k < mdp.num_features; ++k) {
          error = std::max(error, std::abs(table.Value(s, a, k) -
                                           psi(s * mdp.num_actions + a, k)));
        }
      }
    }
    lines.push_back({"tabular_td_vs_analytic_sf", error < 1e-3,
                     "Linf " + std::to_string(error)});
  }
  {
    const TabularMdp chain = ThreeStateChain(0.9);
    Eigen::VectorXd w(2);
    w << 0.1, 1.0;
    const Eigen::MatrixXd q = ValueIteration(chain, LinearStateReward(chain, w));
    const Eigen::MatrixXd psi =
        AnalyticSf(chain, DeterministicPolicy(GreedyActions(q), 2));
    const double error = (SfToQ(psi, w, 2) - q).cwiseAbs().maxCoeff();
    lines.push_back({"value_iteration_vs_sf_q", error < 1e-6,
                     "Linf " + std::to_string(error)});
  }
  bool ok = true;
  for (const auto& l : lines) {
    std::cout << (l.passed ? "PASS " : "FAIL ") << l.name << " (" << l.detail
              << ")\n";
    ok = ok && l.passed;
  }
  return ok ? 0 : 1;
}

ServiceServer* g_server = nullptr;

void HandleSignal(int) {
  if (g_server) g_server->Stop();
}

int RunServe(const std::string& host, int port, const std::string& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw UsageError("checkpoint directory does not exist: " + dir);
  }
  EvaluationService service(dir);
  ServiceServer server(service);
  const int bound = server.Bind(host, port);
  g_server = &server;
  std::signal(SIGINT, HandleSignal);
  std::signal(SIGTERM, HandleSignal);
  std::cout << "serving " << dir << " on http://" << host << ":" << bound
            << std::endl;
  server.Listen();
  g_server = nullptr;
  return 0;
}

int RunRender(std::uint64_t seed, const std::string& config_path,
              const std::string& preset) {
  EnvConfig env;
  if (!config_path.empty()) {
    env = ExperimentConfig::Load(config_path).env;
  } else if (preset == "desk8x8") {
    env = EnvConfig::Desk8x8();
  } else if (preset != "default") {
    throw UsageError("unknown preset '" + preset + "'");
  }
  GridWorld world(env);
  world.Reset(seed);
  std::cout << RenderAscii(world.state());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Successor-feature agents on a crafting grid world"};
  app.require_subcommand(1);

  RunFlags pretrain_flags;
  auto* pretrain = app.add_subcommand("pretrain", "Reward-free pre-training");
  AddRunFlags(pretrain, pretrain_flags, false);

  RunFlags train_flags;
  auto* train = app.add_subcommand("train", "Training on target suites");
  AddRunFlags(train, train_flags, true);

  TransferFlags transfer_flags;
  auto* transfer =
      app.add_subcommand("transfer", "Zero-shot evaluation of a checkpoint");
  transfer->add_option("--checkpoint", transfer_flags.checkpoint)->required();
  transfer->add_option("--suite", transfer_flags.suite)->required();
  transfer->add_option("--w-source", transfer_flags.w_source,
                       "true, hand_crafted or fitted");
  transfer->add_option("--w", transfer_flags.w, "Explicit task vector")
      ->delimiter(',');
  transfer->add_option("--episodes", transfer_flags.episodes);
  transfer->add_option("--seed", transfer_flags.seed);
  transfer->add_option("-o,--output", transfer_flags.output,
                       "CSV file (default: stdout)");

  auto* oracle = app.add_subcommand("oracle-check", "Run the oracle checks");

  std::string host = "127.0.0.1";
  int port = 8080;
  std::string checkpoint_dir;
  auto* serve = app.add_subcommand("serve", "Start the evaluation service");
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--checkpoint-dir", checkpoint_dir)->required();

  std::uint64_t render_seed = 0;
  std::string render_config;
  std::string render_preset = "default";
  auto* render = app.add_subcommand("render", "Print a generated level");
  render->add_option("--seed", render_seed);
  render->add_option("-c,--config", render_config);
  render->add_option("--preset", render_preset, "default or desk8x8");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*pretrain) return RunPretrain(pretrain_flags);
    if (*train) return RunTrain(train_flags);
    if (*transfer) return RunTransfer(transfer_flags);
    if (*oracle) return RunOracleCheck();
    if (*serve) return RunServe(host, port, checkpoint_dir);
    if (*render) return RunRender(render_seed, render_config, render_preset);
  } catch (const sfcraft::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
