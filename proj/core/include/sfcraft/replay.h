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

#ifndef SFCRAFT_REPLAY_H_
#define SFCRAFT_REPLAY_H_

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "sfcraft/gridworld.h"
#include "sfcraft/tasks.h"

namespace sfcraft {

struct Transition {
  Observation obs;
  Move action = Move::kNorth;
  FeatureVector features{};
  double reward = 0.0;
  Observation next_obs;
  bool done = false;
  std::int64_t episode_id = 0;
  int step_index = 0;
  // Task the behaviour policy was pursuing when this was collected.
  TaskVector episode_task;
};

// A stored transition plus the task it should be trained on. Relabelling
// never touches the stored transition.
struct SampledTransition {
  const Transition* transition = nullptr;
  TaskVector effective_task;
  bool relabelled = false;
};

// One (transition, policy, task) training example.
struct TrainingPair {
  const Transition* transition = nullptr;
  int policy = 0;
  TaskVector task;
};

enum class RelabelMode { kNone, kHindsight };

// Fixed-capacity ring buffer with an index of the stored span of every
// episode. Transitions of one episode must be pushed contiguously.
class ReplayMemory {
 public:
  static constexpr std::size_t kDefaultCapacity = 100000;

  explicit ReplayMemory(std::size_t capacity = kDefaultCapacity);

  // Evicts the oldest transition when full. Throws UsageError when the
  // transition interleaves with another episode or its step index does not
  // increase.
  void Push(Transition transition);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return buffer_.size(); }
  bool empty() const { return size_ == 0; }

  // i-th stored transition, oldest first.
  const Transition& at(std::size_t i) const;

  std::size_t num_episodes() const { return episodes_.size(); }
  bool HasEpisode(std::int64_t episode_id) const;
  // Stored (not evicted) transitions of the episode; 0 if unknown.
  std::size_t StoredLength(std::int64_t episode_id) const;

  // Uniform sampling with replacement. kHindsight replaces the task of each
  // sampled transition with the one-hot of the first non-zero feature at or
  // after it within the stored part of its episode, falling back to the
  // episode task. Throws UsageError when batch exceeds size().
  std::vector<SampledTransition> Sample(int batch, RelabelMode mode,
                                        Rng& rng) const;

  // The view Sample would produce for the i-th stored transition.
  SampledTransition View(std::size_t i, RelabelMode mode) const;

 private:
  struct EpisodeSpan {
    std::size_t first_slot = 0;
    std::size_t count = 0;
  };

  std::size_t SlotOf(std::size_t i) const;
  SampledTransition ViewSlot(std::size_t slot, RelabelMode mode) const;

  std::vector<Transition> buffer_;
  std::size_t head_ = 0;  // next slot to write
  std::size_t size_ = 0;
  std::unordered_map<std::int64_t, EpisodeSpan> episodes_;
  std::int64_t last_episode_ = -1;
};

// Task replacement: copy i of the batch is tagged with policy i and task
// e_i, for i < n_policies. Copies are laid out copy-major. Throws UsageError
// for fewer than two policies.
std::vector<TrainingPair> ExpandForTr(std::span<const SampledTransition> batch,
                                      int n_policies);

}  // namespace sfcraft

#endif  // SFCRAFT_REPLAY_H_
