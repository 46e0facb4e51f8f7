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

#include "sfcraft/tasks.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "sfcraft/errors.h"

namespace sfcraft {
namespace {

constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "wood", "iron", "coal", "table", "trap"};

struct SuiteEntry {
  Suite suite;
  std::string_view name;
};

constexpr std::array<SuiteEntry, 8> kSuites = {{
    {Suite::kOneItem, "one_item"},
    {Suite::kTwoItem, "two_item"},
    {Suite::kRandom, "random"},
    {Suite::kRandomPen, "random_pen"},
    {Suite::kCraftStaff, "craft_staff"},
    {Suite::kCraftSword, "craft_sword"},
    {Suite::kCraftBow, "craft_bow"},
    {Suite::kPretrain, "pretrain"},
}};

int RequireGoal(const TaskBinding& binding) {
  if (!binding.goal.has_value()) {
    throw UsageError(std::string(SuiteName(binding.suite)) +
                     " needs an episode goal to compute rewards");
  }
  int goal = *binding.goal;
  if (goal < 0 || goal >= kNumResources) {
    throw UsageError("episode goal must be a resource index, got " +
                     std::to_string(goal));
  }
  return goal;
}

bool HasRecipe(const Inventory& inventory, const Inventory& recipe) {
  for (int r = 0; r < kNumResources; ++r) {
    if (inventory[r] < recipe[r]) return false;
  }
  return true;
}

}  // namespace

std::string_view FeatureName(int feature) {
  if (feature < 0 || feature >= kNumFeatures) {
    throw UsageError("feature index out of range: " + std::to_string(feature));
  }
  return kFeatureNames[feature];
}

FeatureVector OneHotFeature(int feature) {
  FeatureVector phi{};
  phi.at(feature) = 1.0;
  return phi;
}

std::optional<int> ActiveFeature(const FeatureVector& phi) {
  for (int k = 0; k < kNumFeatures; ++k) {
    if (phi[k] != 0.0) return k;
  }
  return std::nullopt;
}

bool IsZero(const FeatureVector& phi) { return !ActiveFeature(phi); }

std::string_view TaskSourceName(TaskSource source) {
  switch (source) {
    case TaskSource::kTrueTask:
      return "true_task";
    case TaskSource::kLearned:
      return "learned";
    case TaskSource::kHandCrafted:
      return "hand_crafted";
    case TaskSource::kRelabelled:
      return "relabelled";
  }
  return "unknown";
}

TaskVector TaskVector::OneHot(int feature, TaskSource source) {
  if (feature < 0 || feature >= kNumFeatures) {
    throw UsageError("one-hot task index out of range: " +
                     std::to_string(feature));
  }
  TaskVector w;
  w.weights[feature] = 1.0;
  w.source = source;
  return w;
}

TaskVector TaskVector::FromWeights(const std::array<double, kNumFeatures>& w,
                                   TaskSource source) {
  TaskVector task;
  task.weights = w;
  task.source = source;
  return task;
}

bool TaskVector::IsOneHot() const {
  int ones = 0;
  for (double v : weights) {
    if (v == 1.0) {
      ++ones;
    } else if (v != 0.0) {
      return false;
    }
  }
  return ones == 1;
}

bool TaskVector::IsFinite() const {
  return std::all_of(weights.begin(), weights.end(),
                     [](double v) { return std::isfinite(v); });
}

int TaskVector::ArgMax() const {
  return static_cast<int>(std::max_element(weights.begin(), weights.end()) -
                          weights.begin());
}

std::string_view SuiteName(Suite suite) {
  for (const auto& entry : kSuites) {
    if (entry.suite == suite) return entry.name;
  }
  return "unknown";
}

Suite ParseSuite(std::string_view name) {
  for (const auto& entry : kSuites) {
    if (entry.name == name) return entry.suite;
  }
  throw UsageError("unknown suite '" + std::string(name) +
                   "' (expected one_item, two_item, random, random_pen, "
                   "craft_staff, craft_sword, craft_bow or pretrain)");
}

const std::vector<Suite>& TargetSuites() {
  static const std::vector<Suite> kTargets = {
      Suite::kOneItem,    Suite::kTwoItem,    Suite::kRandom,
      Suite::kRandomPen,  Suite::kCraftStaff, Suite::kCraftSword,
      Suite::kCraftBow};
  return kTargets;
}

bool IsCrafting(Suite suite) {
  return suite == Suite::kCraftStaff || suite == Suite::kCraftSword ||
         suite == Suite::kCraftBow;
}

bool IsNonStationary(Suite suite) {
  return suite == Suite::kRandom || suite == Suite::kRandomPen;
}

bool IsLinear(Suite suite) {
  return suite == Suite::kOneItem || suite == Suite::kTwoItem ||
         IsNonStationary(suite);
}

Inventory RecipeFor(Suite suite) {
  switch (suite) {
    case Suite::kCraftStaff:
      return {1, 0, 0};
    case Suite::kCraftSword:
      return {1, 1, 0};
    case Suite::kCraftBow:
      return {1, 1, 1};
    default:
      return {0, 0, 0};
  }
}

double LinearReward(const FeatureVector& phi, const TaskVector& w) {
  double r = 0.0;
  for (int k = 0; k < kNumFeatures; ++k) r += phi[k] * w.weights[k];
  return r;
}

RewardOutcome SuiteReward(const TaskBinding& binding,
                          const FeatureVector& event,
                          const Inventory& inventory_before) {
  RewardOutcome out;
  const std::optional<int> active = ActiveFeature(event);
  switch (binding.suite) {
    case Suite::kPretrain:
      return out;
    case Suite::kOneItem:
    case Suite::kTwoItem:
      if (!active) return out;
      out.reward = TrueTaskVector(binding.suite)[*active];
      return out;
    case Suite::kRandom:
    case Suite::kRandomPen: {
      const int goal = RequireGoal(binding);
      if (!active) return out;
      out.reward = TrueTaskVector(binding.suite, goal)[*active];
      return out;
    }
    case Suite::kCraftStaff:
    case Suite::kCraftSword:
    case Suite::kCraftBow: {
      if (!active) return out;
      if (*active == kTrap) {
        out.reward = -1.0;
      } else if (*active == kTable) {
        const Inventory recipe = RecipeFor(binding.suite);
        if (HasRecipe(inventory_before, recipe)) {
          out.reward = 1.0;
          out.consumed = recipe;
        }
      }
      return out;
    }
  }
  return out;
}

TaskVector SampleEpisodeTask(Suite suite, Rng& rng) {
  if (IsNonStationary(suite)) {
    std::uniform_int_distribution<int> pick(0, kNumResources - 1);
    return TaskVector::OneHot(pick(rng));
  }
  if (suite == Suite::kPretrain) {
    std::uniform_int_distribution<int> pick(0, kNumFeatures - 1);
    return TaskVector::OneHot(pick(rng));
  }
  throw UsageError("suite " + std::string(SuiteName(suite)) +
                   " has a fixed task; nothing to sample");
}

TaskVector TrueTaskVector(Suite suite, std::optional<int> goal) {
  switch (suite) {
    case Suite::kOneItem:
      return TaskVector::FromWeights({1, -1, -1, 0, -1});
    case Suite::kTwoItem:
      return TaskVector::FromWeights({1, 1, -1, 0, -1});
    case Suite::kRandom:
    case Suite::kRandomPen: {
      const int g = RequireGoal({suite, goal});
      const double wrong = suite == Suite::kRandomPen ? -1.0 : 0.0;
      TaskVector w = TaskVector::FromWeights({wrong, wrong, wrong, 0, -1});
      w.weights[g] = 1.0;
      return w;
    }
    default:
      throw UsageError("suite " + std::string(SuiteName(suite)) +
                       " has no linear task vector");
  }
}

TaskVector HandcraftedVector(Suite suite) {
  switch (suite) {
    case Suite::kCraftStaff:
      return TaskVector::FromWeights({0.5, 0, 0, 1, -1},
                                     TaskSource::kHandCrafted);
    case Suite::kCraftSword:
      return TaskVector::FromWeights({0.5, 0.5, 0, 1, -1},
                                     TaskSource::kHandCrafted);
    case Suite::kCraftBow:
      return TaskVector::FromWeights({0.5, 0.5, 0.5, 1, -1},
                                     TaskSource::kHandCrafted);
    default:
      throw UsageError("no hand-crafted vector for non-crafting suite " +
                       std::string(SuiteName(suite)));
  }
}

}  // namespace sfcraft
