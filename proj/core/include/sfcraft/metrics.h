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

#ifndef SFCRAFT_METRICS_H_
#define SFCRAFT_METRICS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "sfcraft/tasks.h"

namespace sfcraft {

struct MeanStdError {
  double mean = 0.0;
  double std_error = 0.0;  // sample std / sqrt(n); 0 for n < 2
};

MeanStdError Summarize(std::span<const double> values);

struct MetricsRecord {
  // "eval" rows during training, "summary" and "episode" rows in transfer.
  std::string kind = "eval";
  std::int64_t step = 0;
  std::uint64_t seed = 0;
  std::string suite;
  std::string variant;
  int episode = -1;
  double mean_return = 0.0;
  double std_error = 0.0;
  // Mean event count per evaluation episode, per feature.
  std::array<double, kNumFeatures> completion{};
  double sf_loss = 0.0;
  double reward_loss = 0.0;
  std::array<double, kNumFeatures> w{};
};

// Fixed header of the metrics CSV.
const std::string& MetricsCsvHeader();
std::string MetricsCsvRow(const MetricsRecord& record);

// Writes records to a CSV file and events to a JSON-lines log. Either path
// may be empty, in which case that output is skipped.
class MetricsSink {
 public:
  MetricsSink() = default;
  MetricsSink(const std::filesystem::path& csv_path,
              const std::filesystem::path& events_path);

  void Record(const MetricsRecord& record);
  void Event(const std::string& type, nlohmann::json fields);

  const std::vector<MetricsRecord>& records() const { return records_; }

 private:
  std::ofstream csv_;
  std::ofstream events_;
  std::vector<MetricsRecord> records_;
};

}  // namespace sfcraft

#endif  // SFCRAFT_METRICS_H_
