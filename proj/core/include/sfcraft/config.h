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

#ifndef SFCRAFT_CONFIG_H_
#define SFCRAFT_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "sfcraft/agents.h"
#include "sfcraft/gridworld.h"
#include "sfcraft/tasks.h"

namespace sfcraft {

// Where the transfer task vector comes from.
enum class WSource { kTrue, kHandCrafted, kFitted };

std::string_view WSourceName(WSource source);
// Accepts true, hand_crafted, fitted.
WSource ParseWSource(std::string_view name);

nlohmann::json EnvConfigToJson(const EnvConfig& env);
// Accepts {"preset": "desk8x8" | "default"} plus per-field overrides.
EnvConfig EnvConfigFromJson(const nlohmann::json& j);

struct ExperimentConfig {
  std::string name = "experiment";
  std::vector<Suite> suites;
  AgentVariant variant = AgentVariant::kSfTrN;
  std::vector<std::uint64_t> seeds = {0};
  std::int64_t budget = 150000;
  std::int64_t eval_interval = 20000;
  int eval_episodes = 100;       // transfer evaluation
  int train_eval_episodes = 10;  // checks during training
  EnvConfig env = EnvConfig::Desk8x8();
  AgentConfig agent;
  std::filesystem::path output_dir;
  // Checkpoint to start target training from (optional).
  std::optional<std::filesystem::path> init_checkpoint;
  WSource w_source = WSource::kTrue;
  WFitOptions fit;

  // Throws ConfigError on violated invariants.
  void Validate() const;

  nlohmann::json ToJson() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static ExperimentConfig FromJson(const nlohmann::json& j);
  // Throws ConfigError naming the path when it cannot be read or parsed.
  static ExperimentConfig Load(const std::filesystem::path& path);
};

}  // namespace sfcraft

#endif  // SFCRAFT_CONFIG_H_
