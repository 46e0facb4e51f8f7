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

#include "sfcraft/replay.h"

#include <string>

#include "sfcraft/errors.h"

namespace sfcraft {

ReplayMemory::ReplayMemory(std::size_t capacity) {
  if (capacity == 0) throw ConfigError("replay capacity must be positive");
  buffer_.resize(capacity);
}

void ReplayMemory::Push(Transition transition) {
  const std::int64_t id = transition.episode_id;
  auto it = episodes_.find(id);
  if (it != episodes_.end()) {
    if (id != last_episode_) {
      throw UsageError("episode " + std::to_string(id) +
                       " interleaves with another episode");
    }
    const std::size_t last_slot =
        (it->second.first_slot + it->second.count - 1) % capacity();
    if (buffer_[last_slot].step_index >= transition.step_index) {
      throw UsageError("step index must increase within episode " +
                       std::to_string(id));
    }
  }

  if (size_ == capacity()) {
    const Transition& oldest = buffer_[head_];
    auto evicted = episodes_.find(oldest.episode_id);
    evicted->second.first_slot = (evicted->second.first_slot + 1) % capacity();
    if (--evicted->second.count == 0) episodes_.erase(evicted);
  } else {
    ++size_;
  }

  const std::size_t slot = head_;
  buffer_[slot] = std::move(transition);
  head_ = (head_ + 1) % capacity();
  auto [span, inserted] = episodes_.try_emplace(id, EpisodeSpan{slot, 0});
  ++span->second.count;
  last_episode_ = id;
}

std::size_t ReplayMemory::SlotOf(std::size_t i) const {
  if (i >= size_) {
    throw UsageError("replay index " + std::to_string(i) + " out of range");
  }
  const std::size_t oldest = size_ == capacity() ? head_ : 0;
  return (oldest + i) % capacity();
}

const Transition& ReplayMemory::at(std::size_t i) const {
  return buffer_[SlotOf(i)];
}

bool ReplayMemory::HasEpisode(std::int64_t episode_id) const {
  return episodes_.contains(episode_id);
}

std::size_t ReplayMemory::StoredLength(std::int64_t episode_id) const {
  auto it = episodes_.find(episode_id);
  return it == episodes_.end() ? 0 : it->second.count;
}

SampledTransition ReplayMemory::ViewSlot(std::size_t slot,
                                         RelabelMode mode) const {
  const Transition& t = buffer_[slot];
  SampledTransition view{&t, t.episode_task, false};
  if (mode == RelabelMode::kNone) return view;

  const EpisodeSpan& span = episodes_.at(t.episode_id);
  const std::size_t offset =
      (slot + capacity() - span.first_slot) % capacity();
  for (std::size_t k = offset; k < span.count; ++k) {
    const Transition& later = buffer_[(span.first_slot + k) % capacity()];
    if (const auto feature = ActiveFeature(later.features)) {
      view.effective_task = TaskVector::OneHot(*feature, TaskSource::kRelabelled);
      view.relabelled = true;
      break;
    }
  }
  return view;
}

SampledTransition ReplayMemory::View(std::size_t i, RelabelMode mode) const {
  return ViewSlot(SlotOf(i), mode);
}

std::vector<SampledTransition> ReplayMemory::Sample(int batch,
                                                    RelabelMode mode,
                                                    Rng& rng) const {
  if (batch < 0 || static_cast<std::size_t>(batch) > size_) {
    throw UsageError("cannot sample " + std::to_string(batch) +
                     " transitions from a memory holding " +
                     std::to_string(size_));
  }
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<SampledTransition> out;
  out.reserve(batch);
  for (int b = 0; b < batch; ++b) out.push_back(ViewSlot(SlotOf(pick(rng)), mode));
  return out;
}

std::vector<TrainingPair> ExpandForTr(std::span<const SampledTransition> batch,
                                      int n_policies) {
  if (n_policies < 2) {
    throw UsageError("task replacement needs one policy per feature, got " +
                     std::to_string(n_policies));
  }
  if (n_policies > kNumFeatures) {
    throw UsageError("more policies than features");
  }
  std::vector<TrainingPair> pairs;
  pairs.reserve(batch.size() * n_policies);
  for (int i = 0; i < n_policies; ++i) {
    const TaskVector objective = TaskVector::OneHot(i, TaskSource::kRelabelled);
    for (const auto& sample : batch) {
      pairs.push_back({sample.transition, i, objective});
    }
  }
  return pairs;
}

}  // namespace sfcraft
