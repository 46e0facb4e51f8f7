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

#include <gtest/gtest.h>

#include <map>

#include "relabel_cases.h"
#include "sfcraft/errors.h"
#include "sfcraft/replay.h"

namespace sfcraft {
namespace {

using ::sfcraft::testing::MakeTransition;

TEST(RelabelCasesTest, AllPass) {
  for (const auto& c : ::sfcraft::testing::RunRelabelCases()) {
    EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
  }
}

TEST(ReplayMemoryTest, RingBufferOrder) {
  ReplayMemory m(4);
  for (int t = 0; t < 10; ++t) m.Push(MakeTransition(0, t, -1));
  EXPECT_EQ(m.size(), 4u);
  EXPECT_EQ(m.capacity(), 4u);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(m.at(i).step_index, 6 + i);
  EXPECT_EQ(m.StoredLength(0), 4u);
  EXPECT_THROW(m.at(4), UsageError);
}

TEST(ReplayMemoryTest, RejectsInterleavingAndNonIncreasingSteps) {
  ReplayMemory m(10);
  m.Push(MakeTransition(1, 0, -1));
  m.Push(MakeTransition(2, 0, -1));
  EXPECT_THROW(m.Push(MakeTransition(1, 1, -1)), UsageError);
  EXPECT_THROW(m.Push(MakeTransition(2, 0, -1)), UsageError);
  EXPECT_NO_THROW(m.Push(MakeTransition(2, 3, -1)));
  EXPECT_THROW(ReplayMemory(0), ConfigError);
}

TEST(ReplayMemoryTest, SampleIsUniform) {
  ReplayMemory m(10);
  for (int t = 0; t < 10; ++t) m.Push(MakeTransition(0, t, -1));
  Rng rng(3);
  std::map<int, int> counts;
  constexpr int kBatches = 2000;
  for (int b = 0; b < kBatches; ++b) {
    for (const auto& s : m.Sample(10, RelabelMode::kNone, rng)) {
      ++counts[s.transition->step_index];
    }
  }
  double chi2 = 0.0;
  const double expected = kBatches;  // 20000 draws over 10 slots
  for (int t = 0; t < 10; ++t) {
    chi2 += (counts[t] - expected) * (counts[t] - expected) / expected;
  }
  EXPECT_LT(chi2, 27.88);  // 99.9% quantile, 9 dof
}

TEST(ReplayMemoryTest, SampleIsSeeded) {
  ReplayMemory m(50);
  for (int t = 0; t < 50; ++t) m.Push(MakeTransition(t / 10, t % 10, t % 7 - 2));
  Rng a(9), b(9);
  const auto x = m.Sample(32, RelabelMode::kHindsight, a);
  const auto y = m.Sample(32, RelabelMode::kHindsight, b);
  for (int i = 0; i < 32; ++i) {
    EXPECT_EQ(x[i].transition, y[i].transition);
    EXPECT_EQ(x[i].effective_task, y[i].effective_task);
  }
  EXPECT_THROW(m.Sample(51, RelabelMode::kNone, a), UsageError);
}

TEST(ReplayMemoryTest, HindsightMatchesBruteForceScan) {
  // Random episodes through a small ring; compare against a direct scan of
  // the stored sequence.
  Rng rng(11);
  ReplayMemory m(37);
  std::int64_t episode = 0;
  int step = 0;
  for (int n = 0; n < 400; ++n) {
    const int event = static_cast<int>(rng() % 9) - 4;  // ~half empty
    m.Push(MakeTransition(episode, step++, event, kTrap));
    if (rng() % 8 == 0) {
      ++episode;
      step = 0;
    }
    for (std::size_t i = 0; i < m.size(); ++i) {
      const Transition& t = m.at(i);
      TaskVector expected = t.episode_task;
      for (std::size_t j = i; j < m.size() && m.at(j).episode_id == t.episode_id;
           ++j) {
        if (const auto f = ActiveFeature(m.at(j).features)) {
          expected = TaskVector::OneHot(*f);
          break;
        }
      }
      ASSERT_EQ(m.View(i, RelabelMode::kHindsight).effective_task, expected)
          << "push " << n << " index " << i;
    }
  }
}

TEST(ExpandForTrTest, RejectsTooManyPolicies) {
  std::vector<SampledTransition> batch(2);
  EXPECT_THROW(ExpandForTr(batch, kNumFeatures + 1), UsageError);
}

}  // namespace
}  // namespace sfcraft
