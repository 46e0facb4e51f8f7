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

#ifndef SFCRAFT_SERVICE_H_
#define SFCRAFT_SERVICE_H_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "sfcraft/agents.h"
#include "sfcraft/checkpoint.h"
#include "sfcraft/gridworld.h"

namespace sfcraft {

inline constexpr int kServiceMaxSteps = 300;
inline constexpr int kServiceMaxEpisodes = 1000;

struct HttpResponse {
  int status = 200;
  std::string body;  // JSON
};

// Request handlers of the evaluation service. Checkpoints are identified by
// the content hash of their file; parsed checkpoints are cached by id and
// never mutated, so handlers may run concurrently.
class EvaluationService {
 public:
  explicit EvaluationService(std::filesystem::path checkpoint_dir);

  // GET /checkpoints
  HttpResponse ListCheckpoints() const;
  // POST /rollout
  HttpResponse Rollout(const std::string& body) const;
  // POST /evaluate
  HttpResponse Evaluate(const std::string& body) const;

 private:
  struct Entry {
    std::string id;
    std::filesystem::path path;
    Checkpoint checkpoint;
    EnvConfig env;
    std::shared_ptr<const SfAgent> agent;  // null for non-SF checkpoints
  };

  // Scans the directory, caching every decodable checkpoint. Returns the
  // listing body; throws Error when the directory cannot be read.
  nlohmann::json Scan() const;

  // Scans the directory; throws Error when it cannot be read.
  std::shared_ptr<const Entry> Find(const std::string& id) const;

  std::filesystem::path dir_;
  mutable std::mutex mu_;
  mutable std::map<std::string, std::shared_ptr<const Entry>> cache_;
};

// Environment a checkpoint was trained on, from its provenance, falling back
// to the default board of the checkpoint's grid size.
EnvConfig EnvForCheckpoint(const Checkpoint& checkpoint);

// HTTP front end for an EvaluationService.
class ServiceServer {
 public:
  explicit ServiceServer(const EvaluationService& service);
  ~ServiceServer();
  ServiceServer(const ServiceServer&) = delete;
  ServiceServer& operator=(const ServiceServer&) = delete;

  // Binds to `port` (0 picks a free one) and returns the bound port.
  // Throws Error when binding fails.
  int Bind(const std::string& host, int port);
  // Serves until Stop() is called.
  void Listen();
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace sfcraft

#endif  // SFCRAFT_SERVICE_H_
