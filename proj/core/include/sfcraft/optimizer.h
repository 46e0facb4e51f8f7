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

#ifndef SFCRAFT_OPTIMIZER_H_
#define SFCRAFT_OPTIMIZER_H_

#include <cstdint>
#include <span>

#include "sfcraft/network.h"

namespace sfcraft {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adaptive moment estimation over a parameter set. The moment buffers are
// sized on the first step.
template <typename T>
class BasicAdam {
 public:
  explicit BasicAdam(AdamOptions options = {}) : options_(options) {}

  // Throws TrainingError when grads hold a non-finite value and UsageError
  // when grads and params differ in shape. params is untouched on error.
  void Step(BasicParameterSet<T>* params, const BasicParameterSet<T>& grads);

  std::int64_t steps() const { return steps_; }
  const AdamOptions& options() const { return options_; }
  void set_learning_rate(double lr) { options_.learning_rate = lr; }

 private:
  AdamOptions options_;
  BasicParameterSet<T> m_;
  BasicParameterSet<T> v_;
  std::int64_t steps_ = 0;
};

using Adam = BasicAdam<float>;

// Adam over a flat vector of doubles (used for the task vector w).
class VectorAdam {
 public:
  explicit VectorAdam(std::size_t size, AdamOptions options = {});
  void Step(std::span<double> values, std::span<const double> grads);
  std::int64_t steps() const { return steps_; }

 private:
  AdamOptions options_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::int64_t steps_ = 0;
};

// Plain gradient descent: params -= learning_rate * grads.
template <typename T>
void SgdStep(double learning_rate, const BasicParameterSet<T>& grads,
             BasicParameterSet<T>* params);

extern template class BasicAdam<float>;
extern template class BasicAdam<double>;

}  // namespace sfcraft

#endif  // SFCRAFT_OPTIMIZER_H_
