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

#include "sfcraft/optimizer.h"

#include <cmath>
#include <string>

#include "sfcraft/errors.h"

namespace sfcraft {
namespace {

template <typename T>
void CheckGradients(const BasicParameterSet<T>& params,
                    const BasicParameterSet<T>& grads) {
  if (!params.SameShape(grads)) {
    throw UsageError("gradient shapes do not match the parameter set");
  }
  if (!grads.AllFinite()) {
    throw TrainingError("non-finite gradient in tensor " +
                        grads.FirstNonFinite());
  }
}

}  // namespace

template <typename T>
void BasicAdam<T>::Step(BasicParameterSet<T>* params,
                        const BasicParameterSet<T>& grads) {
  CheckGradients(*params, grads);
  if (!m_.SameShape(*params)) {
    m_ = params->ZerosLike();
    v_ = params->ZerosLike();
    steps_ = 0;
  }
  ++steps_;
  const T b1 = static_cast<T>(options_.beta1);
  const T b2 = static_cast<T>(options_.beta2);
  const T correction1 = T(1) - static_cast<T>(std::pow(options_.beta1, steps_));
  const T correction2 = T(1) - static_cast<T>(std::pow(options_.beta2, steps_));
  const T step_size =
      static_cast<T>(options_.learning_rate) / correction1;
  const T eps = static_cast<T>(options_.epsilon);
  const T inv_sqrt_c2 = T(1) / std::sqrt(correction2);
  for (std::size_t i = 0; i < params->tensors.size(); ++i) {
    auto p = params->tensors[i].map().array();
    const auto g = grads.tensors[i].map().array();
    auto m = m_.tensors[i].map().array();
    auto v = v_.tensors[i].map().array();
    m = b1 * m + (T(1) - b1) * g;
    v = b2 * v + (T(1) - b2) * g.square();
    p -= step_size * m / (v.sqrt() * inv_sqrt_c2 + eps);
  }
}

VectorAdam::VectorAdam(std::size_t size, AdamOptions options)
    : options_(options), m_(size, 0.0), v_(size, 0.0) {}

void VectorAdam::Step(std::span<double> values, std::span<const double> grads) {
  if (values.size() != m_.size() || grads.size() != m_.size()) {
    throw UsageError("vector optimiser size mismatch");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) throw TrainingError("non-finite task gradient");
  }
  ++steps_;
  const double c1 = 1.0 - std::pow(options_.beta1, steps_);
  const double c2 = 1.0 - std::pow(options_.beta2, steps_);
  for (std::size_t i = 0; i < values.size(); ++i) {
    m_[i] = options_.beta1 * m_[i] + (1.0 - options_.beta1) * grads[i];
    v_[i] = options_.beta2 * v_[i] + (1.0 - options_.beta2) * grads[i] * grads[i];
    values[i] -= options_.learning_rate * (m_[i] / c1) /
                 (std::sqrt(v_[i] / c2) + options_.epsilon);
  }
}

template <typename T>
void SgdStep(double learning_rate, const BasicParameterSet<T>& grads,
             BasicParameterSet<T>* params) {
  CheckGradients(*params, grads);
  const T lr = static_cast<T>(learning_rate);
  for (std::size_t i = 0; i < params->tensors.size(); ++i) {
    params->tensors[i].map() -= lr * grads.tensors[i].map();
  }
}

template class BasicAdam<float>;
template class BasicAdam<double>;
template void SgdStep<float>(double, const BasicParameterSet<float>&,
                             BasicParameterSet<float>*);
template void SgdStep<double>(double, const BasicParameterSet<double>&,
                              BasicParameterSet<double>*);

}  // namespace sfcraft
