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

#ifndef SFCRAFT_TASKS_H_
#define SFCRAFT_TASKS_H_

#include <array>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace sfcraft {

inline constexpr int kNumFeatures = 5;
inline constexpr int kNumResources = 3;
inline constexpr int kNumActions = 4;

// Component order of every feature and task vector.
enum Feature : int {
  kWood = 0,
  kIron = 1,
  kCoal = 2,
  kTable = 3,
  kTrap = 4,
};

std::string_view FeatureName(int feature);

using Rng = std::mt19937_64;

// Per-step event vector. The environment only emits all-zero or one-hot.
using FeatureVector = std::array<double, kNumFeatures>;

// Counts of wood, iron and coal held by the agent.
using Inventory = std::array<int, kNumResources>;

FeatureVector OneHotFeature(int feature);
// Index of the set component, or nullopt for the all-zero vector.
std::optional<int> ActiveFeature(const FeatureVector& phi);
bool IsZero(const FeatureVector& phi);

enum class TaskSource { kTrueTask, kLearned, kHandCrafted, kRelabelled };

std::string_view TaskSourceName(TaskSource source);

struct TaskVector {
  std::array<double, kNumFeatures> weights{};
  TaskSource source = TaskSource::kTrueTask;

  static TaskVector OneHot(int feature,
                           TaskSource source = TaskSource::kTrueTask);
  static TaskVector FromWeights(const std::array<double, kNumFeatures>& w,
                                TaskSource source = TaskSource::kTrueTask);

  double operator[](int k) const { return weights[k]; }
  bool IsOneHot() const;
  bool IsFinite() const;
  // Index of the largest component (first on ties).
  int ArgMax() const;

  friend bool operator==(const TaskVector& a, const TaskVector& b) {
    return a.weights == b.weights;
  }
};

// Reward suites. kPretrain is the reward-free one-hot pre-training regime.
enum class Suite {
  kOneItem,
  kTwoItem,
  kRandom,
  kRandomPen,
  kCraftStaff,
  kCraftSword,
  kCraftBow,
  kPretrain,
};

std::string_view SuiteName(Suite suite);
// Throws UsageError for unknown names.
Suite ParseSuite(std::string_view name);
const std::vector<Suite>& TargetSuites();

bool IsCrafting(Suite suite);
// random and random_pen: the goal resource changes every episode.
bool IsNonStationary(Suite suite);
// Suites whose reward is exactly phi^T w for some (per-episode) w.
bool IsLinear(Suite suite);

// Resources consumed when crafting at the table; all zero for other suites.
Inventory RecipeFor(Suite suite);

// A suite plus the per-episode goal resource of the non-stationary suites.
struct TaskBinding {
  Suite suite = Suite::kPretrain;
  std::optional<int> goal;
};

struct RewardOutcome {
  double reward = 0.0;
  // Amount to remove from the inventory (crafting only).
  Inventory consumed{};
};

// phi^T w.
double LinearReward(const FeatureVector& phi, const TaskVector& w);

// Reward of the event emitted by one environment step. inventory_before is
// the inventory before the step's own pickup was added.
RewardOutcome SuiteReward(const TaskBinding& binding,
                          const FeatureVector& event,
                          const Inventory& inventory_before);

// One-hot episode task: a resource for random/random_pen, any feature for
// pretrain. Throws UsageError for stationary suites.
TaskVector SampleEpisodeTask(Suite suite, Rng& rng);

// The w with SuiteReward == LinearReward for a linear suite (goal required
// for the non-stationary ones). Throws UsageError for crafting suites.
TaskVector TrueTaskVector(Suite suite, std::optional<int> goal = std::nullopt);

// Hand-designed transfer vector for the crafting suites.
TaskVector HandcraftedVector(Suite suite);

}  // namespace sfcraft

#endif  // SFCRAFT_TASKS_H_
