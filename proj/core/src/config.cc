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

#include "sfcraft/config.h"

#include <fstream>
#include <set>
#include <sstream>

#include "sfcraft/errors.h"

namespace sfcraft {
namespace {

void RejectUnknownKeys(const nlohmann::json& j, const std::set<std::string>& allowed,
                       const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& item : j.items()) {
    if (!allowed.contains(item.key())) {
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

}  // namespace

std::string_view WSourceName(WSource source) {
  switch (source) {
    case WSource::kTrue:
      return "true";
    case WSource::kHandCrafted:
      return "hand_crafted";
    case WSource::kFitted:
      return "fitted";
  }
  return "unknown";
}

WSource ParseWSource(std::string_view name) {
  for (WSource s : {WSource::kTrue, WSource::kHandCrafted, WSource::kFitted}) {
    if (WSourceName(s) == name) return s;
  }
  throw UsageError("unknown task-vector source '" + std::string(name) +
                   "' (expected true, hand_crafted or fitted)");
}

nlohmann::json EnvConfigToJson(const EnvConfig& env) {
  return {{"height", env.height},     {"width", env.width},
          {"n_wood", env.n_wood},     {"n_iron", env.n_iron},
          {"n_coal", env.n_coal},     {"n_tables", env.n_tables},
          {"n_traps", env.n_traps},   {"max_steps", env.max_steps}};
}

EnvConfig EnvConfigFromJson(const nlohmann::json& j) {
  RejectUnknownKeys(j,
                    {"preset", "height", "width", "n_wood", "n_iron", "n_coal",
                     "n_tables", "n_traps", "max_steps"},
                    "env");
  EnvConfig env;
  try {
    const std::string preset = j.value("preset", std::string("default"));
    if (preset == "desk8x8") {
      env = EnvConfig::Desk8x8();
    } else if (preset != "default") {
      throw ConfigError("unknown env preset '" + preset + "'");
    }
    env.height = j.value("height", env.height);
    env.width = j.value("width", env.width);
    env.n_wood = j.value("n_wood", env.n_wood);
    env.n_iron = j.value("n_iron", env.n_iron);
    env.n_coal = j.value("n_coal", env.n_coal);
    env.n_tables = j.value("n_tables", env.n_tables);
    env.n_traps = j.value("n_traps", env.n_traps);
    env.max_steps = j.value("max_steps", env.max_steps);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad env config: ") + e.what());
  }
  env.Validate();
  return env;
}

void ExperimentConfig::Validate() const {
  if (budget <= 0) throw ConfigError("budget must be positive");
  if (eval_interval <= 0 || eval_interval > budget) {
    throw ConfigError("eval_interval must be in [1, budget]");
  }
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (eval_episodes < 1 || train_eval_episodes < 1) {
    throw ConfigError("evaluation episode counts must be positive");
  }
  env.Validate();
  agent.Validate();
}

nlohmann::json ExperimentConfig::ToJson() const {
  nlohmann::json j;
  j["name"] = name;
  j["suites"] = nlohmann::json::array();
  for (Suite s : suites) j["suites"].push_back(std::string(SuiteName(s)));
  j["variant"] = std::string(VariantName(variant));
  j["seeds"] = seeds;
  j["budget"] = budget;
  j["eval_interval"] = eval_interval;
  j["eval_episodes"] = eval_episodes;
  j["train_eval_episodes"] = train_eval_episodes;
  j["env"] = EnvConfigToJson(env);
  j["agent"] = agent.ToJson();
  j["output_dir"] = output_dir.string();
  if (init_checkpoint) j["init_checkpoint"] = init_checkpoint->string();
  j["w_source"] = std::string(WSourceName(w_source));
  j["fit"] = {{"learning_rate", fit.learning_rate},
              {"max_iterations", fit.max_iterations},
              {"plateau_tolerance", fit.plateau_tolerance},
              {"plateau_episodes", fit.plateau_episodes},
              {"max_episodes", fit.max_episodes}};
  return j;
}

ExperimentConfig ExperimentConfig::FromJson(const nlohmann::json& j) {
  RejectUnknownKeys(
      j,
      {"name", "suites", "variant", "seeds", "budget", "eval_interval",
       "eval_episodes", "train_eval_episodes", "env", "agent", "output_dir",
       "init_checkpoint", "w_source", "fit"},
      "experiment config");
  ExperimentConfig c;
  try {
    c.name = j.value("name", c.name);
    if (j.contains("suites")) {
      for (const auto& s : j.at("suites")) {
        c.suites.push_back(ParseSuite(s.get<std::string>()));
      }
    }
    if (j.contains("variant")) {
      c.variant = ParseVariant(j.at("variant").get<std::string>());
    }
    if (j.contains("seeds")) {
      c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    }
    c.budget = j.value("budget", c.budget);
    c.eval_interval = j.value("eval_interval", c.eval_interval);
    c.eval_episodes = j.value("eval_episodes", c.eval_episodes);
    c.train_eval_episodes = j.value("train_eval_episodes", c.train_eval_episodes);
    if (j.contains("env")) c.env = EnvConfigFromJson(j.at("env"));
    if (j.contains("agent")) c.agent = AgentConfig::FromJson(j.at("agent"));
    c.output_dir = j.value("output_dir", std::string());
    if (j.contains("init_checkpoint")) {
      c.init_checkpoint = j.at("init_checkpoint").get<std::string>();
    }
    if (j.contains("w_source")) {
      c.w_source = ParseWSource(j.at("w_source").get<std::string>());
    }
    if (j.contains("fit")) {
      const auto& f = j.at("fit");
      RejectUnknownKeys(f,
                        {"learning_rate", "max_iterations", "plateau_tolerance",
                         "plateau_episodes", "max_episodes"},
                        "fit");
      c.fit.learning_rate = f.value("learning_rate", c.fit.learning_rate);
      c.fit.max_iterations = f.value("max_iterations", c.fit.max_iterations);
      c.fit.plateau_tolerance =
          f.value("plateau_tolerance", c.fit.plateau_tolerance);
      c.fit.plateau_episodes = f.value("plateau_episodes", c.fit.plateau_episodes);
      c.fit.max_episodes = f.value("max_episodes", c.fit.max_episodes);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad experiment config: ") + e.what());
  } catch (const UsageError& e) {
    throw ConfigError(e.what());
  }
  c.Validate();
  return c;
}

ExperimentConfig ExperimentConfig::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse config file " + path.string() + ": " +
                      e.what());
  }
  try {
    return FromJson(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace sfcraft
