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

#include "sfcraft/service.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <utility>

#include "httplib.h"
#include "sfcraft/errors.h"
#include "sfcraft/harness.h"
#include "sfcraft/successor.h"

namespace sfcraft {
namespace {

struct HttpError {
  int status;
  std::string message;
};

nlohmann::json ErrorBody(const std::string& message) {
  return {{"error", message}};
}

template <typename F>
HttpResponse Handle(F&& body) {
  try {
    return {200, body().dump()};
  } catch (const HttpError& e) {
    return {e.status, ErrorBody(e.message).dump()};
  } catch (const UsageError& e) {
    return {400, ErrorBody(e.what()).dump()};
  } catch (const std::exception& e) {
    return {500, ErrorBody(e.what()).dump()};
  }
}

nlohmann::json ParseRequest(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw HttpError{400, "request body is not valid JSON"};
  }
  if (!j.is_object()) throw HttpError{400, "request body must be an object"};
  return j;
}

std::string RequireString(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw HttpError{400, "'" + key + "' must be a string"};
  }
  return j[key].get<std::string>();
}

TaskVector RequireTask(const nlohmann::json& j) {
  if (!j.contains("task_vector") || !j["task_vector"].is_array() ||
      j["task_vector"].size() != kNumFeatures) {
    throw HttpError{400, "'task_vector' must be an array of " +
                             std::to_string(kNumFeatures) + " numbers"};
  }
  std::array<double, kNumFeatures> w{};
  for (int k = 0; k < kNumFeatures; ++k) {
    const auto& v = j["task_vector"][k];
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      throw HttpError{400, "'task_vector' entries must be finite numbers"};
    }
    w[k] = v.get<double>();
  }
  return TaskVector::FromWeights(w, TaskSource::kHandCrafted);
}

std::int64_t OptionalInt(const nlohmann::json& j, const std::string& key,
                         std::int64_t fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) {
    throw HttpError{400, "'" + key + "' must be an integer"};
  }
  return j[key].get<std::int64_t>();
}

std::optional<Suite> OptionalSuite(const nlohmann::json& j) {
  if (!j.contains("suite")) return std::nullopt;
  const Suite suite = ParseSuite(RequireString(j, "suite"));
  if (suite == Suite::kPretrain) {
    throw HttpError{400, "'pretrain' has no reward; omit 'suite' instead"};
  }
  return suite;
}

nlohmann::json FeatureCounts(const std::array<double, kNumFeatures>& counts) {
  nlohmann::json out = nlohmann::json::object();
  for (int k = 0; k < kNumFeatures; ++k) {
    out[std::string(FeatureName(k))] = counts[k];
  }
  return out;
}

nlohmann::json GridLines(const GridState& state) {
  nlohmann::json lines = nlohmann::json::array();
  std::istringstream text(RenderAscii(state));
  for (std::string line; std::getline(text, line);) lines.push_back(line);
  return lines;
}

nlohmann::json Snapshot(const GridState& state) {
  return {{"grid", GridLines(state)},
          {"agent", {state.agent.row, state.agent.col}},
          {"inventory", state.inventory}};
}

}  // namespace

EnvConfig EnvForCheckpoint(const Checkpoint& checkpoint) {
  if (checkpoint.provenance.contains("env")) {
    try {
      return EnvConfigFromJson(checkpoint.provenance.at("env"));
    } catch (const ConfigError&) {
      // fall through to the size-based default
    }
  }
  EnvConfig env = checkpoint.spec.grid_height == 8 &&
                          checkpoint.spec.grid_width == 8
                      ? EnvConfig::Desk8x8()
                      : EnvConfig{};
  env.height = checkpoint.spec.grid_height;
  env.width = checkpoint.spec.grid_width;
  return env;
}

EvaluationService::EvaluationService(std::filesystem::path checkpoint_dir)
    : dir_(std::move(checkpoint_dir)) {}

nlohmann::json EvaluationService::Scan() const {
  std::error_code ec;
  std::vector<std::filesystem::path> files;
  for (std::filesystem::directory_iterator it(dir_, ec), end; !ec && it != end;
       it.increment(ec)) {
    if (it->is_regular_file() && it->path().extension() == ".sfc") {
      files.push_back(it->path());
    }
  }
  if (ec) {
    throw Error("cannot read checkpoint directory " + dir_.string() + ": " +
                ec.message());
  }
  std::sort(files.begin(), files.end());

  nlohmann::json listing = {{"checkpoints", nlohmann::json::array()},
                            {"warnings", nlohmann::json::array()}};
  for (const auto& path : files) {
    try {
      const std::vector<std::uint8_t> bytes = ReadFileBytes(path);
      const std::string id = ContentId(bytes);
      std::shared_ptr<const Entry> entry;
      {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = cache_.find(id);
        if (it != cache_.end()) entry = it->second;
      }
      if (!entry) {
        auto fresh = std::make_shared<Entry>();
        fresh->id = id;
        fresh->path = path;
        fresh->checkpoint = DecodeCheckpoint(bytes);
        fresh->env = EnvForCheckpoint(fresh->checkpoint);
        if (fresh->checkpoint.spec.head == HeadKind::kSuccessorFeatures) {
          fresh->agent = std::make_shared<const SfAgent>(
              SfAgent::FromCheckpoint(fresh->checkpoint));
        }
        entry = fresh;
        std::lock_guard<std::mutex> lock(mu_);
        cache_.emplace(id, entry);
      }
      const nlohmann::json& prov = entry->checkpoint.provenance;
      listing["checkpoints"].push_back(
          {{"id", entry->id},
           {"file", path.filename().string()},
           {"agent_variant", prov.value("agent_variant", std::string("unknown"))},
           {"n_policies", entry->checkpoint.spec.n_policies},
           {"grid", {entry->checkpoint.spec.grid_height,
                     entry->checkpoint.spec.grid_width}},
           {"provenance", prov}});
    } catch (const std::exception& e) {
      listing["warnings"].push_back(
          {{"file", path.filename().string()}, {"error", e.what()}});
    }
  }
  return listing;
}

std::shared_ptr<const EvaluationService::Entry> EvaluationService::Find(
    const std::string& id) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(id);
    if (it != cache_.end()) return it->second;
  }
  Scan();
  std::lock_guard<std::mutex> lock(mu_);
  auto it = cache_.find(id);
  return it == cache_.end() ? nullptr : it->second;
}

HttpResponse EvaluationService::ListCheckpoints() const {
  return Handle([&] { return Scan(); });
}

HttpResponse EvaluationService::Rollout(const std::string& body) const {
  return Handle([&]() -> nlohmann::json {
    const nlohmann::json req = ParseRequest(body);
    const std::string id = RequireString(req, "checkpoint");
    const TaskVector w = RequireTask(req);
    const std::int64_t seed = OptionalInt(req, "seed", 0);
    if (seed < 0) throw HttpError{400, "'seed' must be non-negative"};
    const std::int64_t max_steps = OptionalInt(req, "max_steps", kServiceMaxSteps);
    if (max_steps < 1) throw HttpError{400, "'max_steps' must be >= 1"};
    bool greedy = true;
    if (req.contains("greedy")) {
      if (!req["greedy"].is_boolean()) {
        throw HttpError{400, "'greedy' must be a boolean"};
      }
      greedy = req["greedy"].get<bool>();
    }
    double epsilon = 0.0;
    if (!greedy) {
      epsilon = 0.05;
      if (req.contains("epsilon")) {
        if (!req["epsilon"].is_number()) {
          throw HttpError{400, "'epsilon' must be a number"};
        }
        epsilon = req["epsilon"].get<double>();
      }
      if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw HttpError{400, "'epsilon' must be in [0, 1]"};
      }
    }
    const std::string mode =
        req.contains("policy_mode") ? RequireString(req, "policy_mode") : "gpi";
    const std::optional<Suite> suite = OptionalSuite(req);

    const auto entry = Find(id);
    if (!entry) throw HttpError{404, "unknown checkpoint '" + id + "'"};
    if (!entry->agent) {
      throw HttpError{400, "checkpoint '" + id +
                               "' is not a successor-feature agent"};
    }
    const SfAgent& agent = *entry->agent;
    std::optional<int> single;
    if (mode != "gpi") {
      int index = -1;
      if (mode.rfind("single:", 0) == 0) {
        try {
          std::size_t used = 0;
          index = std::stoi(mode.substr(7), &used);
          if (used != mode.size() - 7) index = -1;
        } catch (const std::exception&) {
          index = -1;
        }
      }
      if (index < 0 || index >= agent.n_policies()) {
        throw HttpError{400, "'policy_mode' must be 'gpi' or 'single:i' with "
                             "i < " + std::to_string(agent.n_policies())};
      }
      single = index;
    }

    EnvConfig env = entry->env;
    env.max_steps = static_cast<int>(std::min<std::int64_t>(
        {max_steps, kServiceMaxSteps, env.max_steps}));
    GridWorld world(env);
    const std::uint64_t level = MixSeed(static_cast<std::uint64_t>(seed), 0);
    const std::optional<int> goal =
        suite ? EpisodeGoal(*suite, level) : std::nullopt;
    if (suite) world.BindTask(TaskBinding{*suite, goal});
    if (agent.spec().goal_conditioned()) {
      world.set_task_input(goal ? OneHotFeature(*goal) : w.weights);
    }
    Rng explore(MixSeed(static_cast<std::uint64_t>(seed), 1));
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<int> any(0, kNumActions - 1);

    Observation obs = world.Reset(level);
    nlohmann::json frames = nlohmann::json::array();
    std::array<double, kNumFeatures> events{};
    double total = 0.0;
    std::string end_reason = "timeout";
    for (int t = 0;; ++t) {
      const GridState before = world.state();
      const SfTensor psi = agent.Successors(obs);
      const QValues q = Gpe(psi, w);
      int action = 0;
      std::optional<int> policy;
      bool explored = false;
      if (epsilon > 0.0 && coin(explore) < epsilon) {
        action = any(explore);
        explored = true;
      } else if (single) {
        action = PolicyGreedyAction(psi, *single, w);
        policy = single;
      } else {
        const GpiDecision d = GpiChoice(psi, w);
        action = d.action;
        policy = d.policy;
      }
      StepOutcome out = world.Step(static_cast<Move>(action));
      const double reward = suite ? out.reward : LinearReward(out.features, w);
      total += reward;
      if (const auto f = ActiveFeature(out.features)) events[*f] += 1.0;

      nlohmann::json qs = nlohmann::json::array();
      for (int i = 0; i < q.n_policies; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int a = 0; a < q.num_actions; ++a) row.push_back(q(i, a));
        qs.push_back(row);
      }
      nlohmann::json frame = Snapshot(before);
      frame["step"] = t;
      frame["action"] = std::string(MoveName(static_cast<Move>(action)));
      frame["phi"] = out.features;
      frame["reward"] = reward;
      frame["q"] = qs;
      frame["policy"] = policy ? nlohmann::json(*policy) : nlohmann::json();
      frame["explored"] = explored;
      frames.push_back(std::move(frame));
      if (out.done) {
        if (out.info == StepEvent::kTrap) end_reason = "trap";
        break;
      }
      obs = std::move(out.observation);
    }
    return {{"checkpoint", id},
            {"seed", seed},
            {"task_vector", w.weights},
            {"policy_mode", mode},
            {"frames", std::move(frames)},
            {"final", Snapshot(world.state())},
            {"length", world.state().step_count},
            {"end_reason", end_reason},
            {"total_return", total},
            {"events", FeatureCounts(events)}};
  });
}

HttpResponse EvaluationService::Evaluate(const std::string& body) const {
  return Handle([&]() -> nlohmann::json {
    const nlohmann::json req = ParseRequest(body);
    const std::string id = RequireString(req, "checkpoint");
    const TaskVector w = RequireTask(req);
    const std::int64_t seed = OptionalInt(req, "seed", 0);
    if (seed < 0) throw HttpError{400, "'seed' must be non-negative"};
    const std::int64_t episodes = OptionalInt(req, "episodes", 20);
    if (episodes < 1 || episodes > kServiceMaxEpisodes) {
      throw HttpError{400, "'episodes' must be in [1, " +
                               std::to_string(kServiceMaxEpisodes) + "]"};
    }
    const std::optional<Suite> suite = OptionalSuite(req);
    const auto entry = Find(id);
    if (!entry) throw HttpError{404, "unknown checkpoint '" + id + "'"};
    if (!entry->agent) {
      throw HttpError{400, "checkpoint '" + id +
                               "' is not a successor-feature agent"};
    }
    EvalRequest request;
    request.env = entry->env;
    request.env.max_steps = std::min(request.env.max_steps, kServiceMaxSteps);
    request.suite = suite;
    request.w = w;
    request.episodes = static_cast<int>(episodes);
    request.seed = static_cast<std::uint64_t>(seed);
    request.goal_input = entry->agent->spec().goal_conditioned();
    const EvalSummary s = EvaluatePolicy(SfGreedyPolicy(*entry->agent), request);
    std::array<double, kNumFeatures> totals{};
    nlohmann::json returns = nlohmann::json::array();
    for (const auto& ep : s.episodes) {
      returns.push_back(ep.total_return);
      for (int k = 0; k < kNumFeatures; ++k) totals[k] += ep.counts[k];
    }
    return {{"checkpoint", id},
            {"seed", seed},
            {"episodes", episodes},
            {"task_vector", w.weights},
            {"mean", s.mean},
            {"std_error", s.std_error},
            {"per_feature_counts", FeatureCounts(totals)},
            {"returns", std::move(returns)}};
  });
}

struct ServiceServer::Impl {
  explicit Impl(const EvaluationService& s) : service(s) {}
  const EvaluationService& service;
  httplib::Server server;
};

ServiceServer::ServiceServer(const EvaluationService& service)
    : impl_(std::make_unique<Impl>(service)) {
  auto reply = [](httplib::Response& res, const HttpResponse& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  impl_->server.set_default_headers(
      {{"Access-Control-Allow-Origin", "*"},
       {"Access-Control-Allow-Headers", "Content-Type"}});
  impl_->server.Get("/checkpoints",
                    [this, reply](const httplib::Request&, httplib::Response& res) {
                      reply(res, impl_->service.ListCheckpoints());
                    });
  impl_->server.Post("/rollout", [this, reply](const httplib::Request& req,
                                               httplib::Response& res) {
    reply(res, impl_->service.Rollout(req.body));
  });
  impl_->server.Post("/evaluate", [this, reply](const httplib::Request& req,
                                                httplib::Response& res) {
    reply(res, impl_->service.Evaluate(req.body));
  });
  impl_->server.Options(R"(/.*)",
                        [](const httplib::Request&, httplib::Response& res) {
                          res.status = 204;
                        });
}

ServiceServer::~ServiceServer() { Stop(); }

int ServiceServer::Bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound <= 0) throw Error("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void ServiceServer::Listen() { impl_->server.listen_after_bind(); }

void ServiceServer::Stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace sfcraft
