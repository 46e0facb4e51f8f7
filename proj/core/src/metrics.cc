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

#include "sfcraft/metrics.h"

#include <cmath>
#include <cstdio>

#include "sfcraft/errors.h"

namespace sfcraft {
namespace {

std::string Fixed(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.6f", value);
  return buffer;
}

}  // namespace

MeanStdError Summarize(std::span<const double> values) {
  MeanStdError out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  for (double v : values) out.mean += v;
  out.mean /= n;
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return out;
}

const std::string& MetricsCsvHeader() {
  static const std::string header =
      "kind,step,seed,suite,variant,episode,mean_return,std_error,"
      "completion_wood,completion_iron,completion_coal,completion_table,"
      "completion_trap,sf_loss,reward_loss,w_wood,w_iron,w_coal,w_table,"
      "w_trap";
  return header;
}

std::string MetricsCsvRow(const MetricsRecord& r) {
  std::string row = r.kind + "," + std::to_string(r.step) + "," +
                    std::to_string(r.seed) + "," + r.suite + "," + r.variant +
                    "," + std::to_string(r.episode) + "," +
                    Fixed(r.mean_return) + "," + Fixed(r.std_error);
  for (double c : r.completion) row += "," + Fixed(c);
  row += "," + Fixed(r.sf_loss) + "," + Fixed(r.reward_loss);
  for (double w : r.w) row += "," + Fixed(w);
  return row;
}

MetricsSink::MetricsSink(const std::filesystem::path& csv_path,
                         const std::filesystem::path& events_path) {
  if (!csv_path.empty()) {
    csv_.open(csv_path);
    if (!csv_) throw Error("cannot write metrics file " + csv_path.string());
    csv_ << MetricsCsvHeader() << "\n";
  }
  if (!events_path.empty()) {
    events_.open(events_path);
    if (!events_) throw Error("cannot write event log " + events_path.string());
  }
}

void MetricsSink::Record(const MetricsRecord& record) {
  records_.push_back(record);
  if (csv_.is_open()) csv_ << MetricsCsvRow(record) << "\n" << std::flush;
}

void MetricsSink::Event(const std::string& type, nlohmann::json fields) {
  if (!events_.is_open()) return;
  fields["event"] = type;
  events_ << fields.dump() << "\n" << std::flush;
}

}  // namespace sfcraft
