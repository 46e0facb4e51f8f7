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

#include "relabel_cases.h"

#include <sstream>

#include "sfcraft/errors.h"

namespace sfcraft::testing {
namespace {

std::string Describe(const SampledTransition& v) {
  std::ostringstream out;
  out << "task argmax " << v.effective_task.ArgMax() << " relabelled "
      << v.relabelled;
  return out.str();
}

bool IsTask(const SampledTransition& v, int feature, bool relabelled) {
  return v.effective_task == TaskVector::OneHot(feature) &&
         v.relabelled == relabelled;
}

// Episode 1: none, none, iron, none, wood, none.  Episode 2: none, coal.
ReplayMemory TwoEpisodes(std::size_t capacity) {
  ReplayMemory memory(capacity);
  const int e1[] = {-1, -1, kIron, -1, kWood, -1};
  for (int t = 0; t < 6; ++t) memory.Push(MakeTransition(1, t, e1[t]));
  memory.Push(MakeTransition(2, 0, -1, kTrap));
  memory.Push(MakeTransition(2, 1, kCoal, kTrap));
  return memory;
}

}  // namespace

Transition MakeTransition(std::int64_t episode, int step, int feature,
                          int task_feature) {
  Transition t;
  t.episode_id = episode;
  t.step_index = step;
  if (feature >= 0) t.features = OneHotFeature(feature);
  t.episode_task = TaskVector::OneHot(task_feature);
  t.action = static_cast<Move>(step % kNumActions);
  return t;
}

std::vector<CaseResult> RunRelabelCases() {
  std::vector<CaseResult> results;
  auto check = [&](std::string name, bool ok, std::string detail) {
    results.push_back({std::move(name), ok, std::move(detail)});
  };

  {
    const ReplayMemory m = TwoEpisodes(100);
    const SampledTransition v = m.View(2, RelabelMode::kHindsight);
    check("event_at_self", IsTask(v, kIron, true), Describe(v));
  }
  {
    const ReplayMemory m = TwoEpisodes(100);
    const SampledTransition a = m.View(0, RelabelMode::kHindsight);
    const SampledTransition b = m.View(3, RelabelMode::kHindsight);
    check("event_later", IsTask(a, kIron, true) && IsTask(b, kWood, true),
          Describe(a) + "; " + Describe(b));
  }
  {
    // The last step of episode 1 has no later event in its own episode and
    // must not see episode 2's coal.
    const ReplayMemory m = TwoEpisodes(100);
    const SampledTransition v = m.View(5, RelabelMode::kHindsight);
    check("no_event_fallback",
          v.effective_task == TaskVector::OneHot(kTable) && !v.relabelled,
          Describe(v));
  }
  {
    const ReplayMemory m = TwoEpisodes(100);
    const SampledTransition v = m.View(6, RelabelMode::kHindsight);
    const SampledTransition plain = m.View(6, RelabelMode::kNone);
    check("episode_boundary",
          IsTask(v, kCoal, true) && plain.effective_task == TaskVector::OneHot(kTrap) &&
              !plain.relabelled,
          Describe(v));
  }
  {
    // A 3-slot buffer holding episode 3 = [none, wood, none] then episode 4's
    // first step evicts episode 3's first step, and its next two steps the
    // wood event: the remaining tail of episode 3 falls back.
    ReplayMemory m(3);
    m.Push(MakeTransition(3, 0, -1));
    m.Push(MakeTransition(3, 1, kWood));
    m.Push(MakeTransition(3, 2, -1));
    m.Push(MakeTransition(4, 0, -1, kIron));
    bool ok = m.StoredLength(3) == 2 && m.at(0).step_index == 1;
    SampledTransition v = m.View(0, RelabelMode::kHindsight);
    ok = ok && IsTask(v, kWood, true);
    m.Push(MakeTransition(4, 1, -1, kIron));
    v = m.View(0, RelabelMode::kHindsight);
    ok = ok && m.StoredLength(3) == 1 && m.at(0).step_index == 2 &&
         v.effective_task == TaskVector::OneHot(kTable) && !v.relabelled;
    m.Push(MakeTransition(4, 2, kCoal, kIron));
    ok = ok && !m.HasEpisode(3) && m.StoredLength(4) == 3;
    v = m.View(0, RelabelMode::kHindsight);
    ok = ok && IsTask(v, kCoal, true);
    check("eviction_truncation", ok, Describe(v));
  }
  {
    // Relabelling never mutates the stored transition.
    const ReplayMemory m = TwoEpisodes(100);
    m.View(0, RelabelMode::kHindsight);
    check("storage_untouched",
          m.at(0).episode_task == TaskVector::OneHot(kTable), "");
  }
  {
    const ReplayMemory m = TwoEpisodes(100);
    std::vector<SampledTransition> batch;
    for (std::size_t i = 0; i < m.size(); ++i) {
      batch.push_back(m.View(i, RelabelMode::kHindsight));
    }
    const auto pairs = ExpandForTr(batch, kNumFeatures);
    bool ok = pairs.size() == batch.size() * kNumFeatures;
    for (std::size_t p = 0; ok && p < pairs.size(); ++p) {
      const int policy = static_cast<int>(p / batch.size());
      ok = pairs[p].policy == policy &&
           pairs[p].task == TaskVector::OneHot(policy) &&
           pairs[p].transition == batch[p % batch.size()].transition;
    }
    check("tr_arity_and_assignment", ok,
          std::to_string(pairs.size()) + " pairs");
  }
  {
    std::vector<SampledTransition> batch(64);
    bool ok = ExpandForTr(batch, kNumFeatures).size() == 320;
    try {
      ExpandForTr(batch, 1);
      ok = false;
    } catch (const UsageError&) {
    }
    check("tr_batch_of_64", ok, "");
  }
  return results;
}

}  // namespace sfcraft::testing
