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

#ifndef SFCRAFT_NETWORK_H_
#define SFCRAFT_NETWORK_H_

#include <Eigen/Core>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "sfcraft/gridworld.h"

namespace sfcraft {

enum class HeadKind { kSuccessorFeatures, kQValues };

std::string_view HeadKindName(HeadKind head);
HeadKind ParseHeadKind(std::string_view name);

// Fixed architecture shared by every agent:
//
//   grid  -> conv(filters, kernel x kernel, stride 1, valid) -> relu -> flat
//   inventory [+ task input] -> dense(side_units) -> relu -> side
//   [flat, side] -> dense(trunk_units) -> relu -> trunk
//   SF head: trunk -> dense(head_units) -> relu -> dense(n * |phi| * |A|)
//   Q head:  trunk -> dense(|A|)
struct NetworkSpec {
  int grid_height = 12;
  int grid_width = 12;
  int channels = kNumChannels;
  int conv_filters = 8;
  int kernel = 3;
  int inventory_dim = kNumResources;
  int task_input_dim = 0;  // kNumFeatures in goal-conditioned mode
  int side_units = 64;
  int trunk_units = 64;
  int head_units = 64;  // SF head only
  HeadKind head = HeadKind::kSuccessorFeatures;
  int n_policies = 1;
  int num_features = kNumFeatures;
  int num_actions = kNumActions;

  static NetworkSpec ForEnv(const EnvConfig& env, HeadKind head,
                            int n_policies, bool goal_conditioned);

  int ConvOutHeight() const { return grid_height - kernel + 1; }
  int ConvOutWidth() const { return grid_width - kernel + 1; }
  int ConvPixels() const { return ConvOutHeight() * ConvOutWidth(); }
  int PatchSize() const { return kernel * kernel * channels; }
  int ConvFlatSize() const { return conv_filters * ConvPixels(); }
  int GridInputSize() const { return grid_height * grid_width * channels; }
  int SideInputSize() const { return inventory_dim + task_input_dim; }
  int OutputSize() const;
  bool goal_conditioned() const { return task_input_dim > 0; }

  // Throws ConfigError on non-positive sizes or a kernel larger than the grid.
  void Validate() const;

  nlohmann::json ToJson() const;
  // Throws FormatError naming the offending field.
  static NetworkSpec FromJson(const nlohmann::json& j);

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

// Heap storage aligned like Eigen's own matrices. Vectorised kernels then
// take the same code path for every buffer, which keeps float results
// independent of where the allocator happened to place the data.
template <typename T>
using AlignedVector = std::vector<T, Eigen::aligned_allocator<T>>;

template <typename T>
struct NamedTensor {
  std::string name;
  int rows = 0;
  int cols = 0;
  AlignedVector<T> values;  // column-major

  Eigen::Map<Matrix<T>> map() { return {values.data(), rows, cols}; }
  Eigen::Map<const Matrix<T>> map() const { return {values.data(), rows, cols}; }
  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

// Ordered named arrays; the order is part of the checkpoint format.
template <typename T>
struct BasicParameterSet {
  std::vector<NamedTensor<T>> tensors;
  std::uint32_t version = 1;

  std::size_t NumValues() const;
  bool AllFinite() const;
  // Name of the first tensor holding a non-finite value, or empty.
  std::string FirstNonFinite() const;
  BasicParameterSet ZerosLike() const;
  void SetZero();
  bool SameShape(const BasicParameterSet& other) const;

  template <typename U>
  BasicParameterSet<U> Cast() const {
    BasicParameterSet<U> out;
    out.version = version;
    for (const auto& t : tensors) {
      NamedTensor<U> u{t.name, t.rows, t.cols, {}};
      u.values.assign(t.values.begin(), t.values.end());
      out.tensors.push_back(std::move(u));
    }
    return out;
  }

  friend bool operator==(const BasicParameterSet&,
                         const BasicParameterSet&) = default;
};

using ParameterSet = BasicParameterSet<float>;

// Batched network input, one column per sample.
template <typename T>
struct BasicNetworkInput {
  Matrix<T> grid;  // GridInputSize() x batch
  Matrix<T> side;  // SideInputSize() x batch

  int batch() const { return static_cast<int>(grid.cols()); }
};

using NetworkInput = BasicNetworkInput<float>;

// Throws UsageError when an observation does not match the spec (shape, or
// task input present iff the spec is goal-conditioned).
NetworkInput MakeInput(const NetworkSpec& spec,
                       std::span<const Observation* const> observations);
NetworkInput MakeInput(const NetworkSpec& spec, const Observation& obs);

template <typename T>
class BasicNetwork {
 public:
  // Intermediate activations kept for the backward pass.
  struct Activations {
    Matrix<T> patches;  // PatchSize() x (batch * ConvPixels())
    Matrix<T> conv;     // conv_filters x (batch * ConvPixels()), post-relu
    Matrix<T> side;
    Matrix<T> trunk;
    Matrix<T> head;  // SF head hidden layer
  };

  explicit BasicNetwork(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }

  // Fan-in scaled uniform initialisation.
  BasicParameterSet<T> Init(std::uint64_t seed) const;
  BasicParameterSet<T> Zeros() const;

  // Returns OutputSize() x batch. SF outputs index as
  // (policy * num_features + feature) * num_actions + action.
  // Throws UsageError on shape mismatch, CorruptionError on non-finite
  // parameters.
  Matrix<T> Forward(const BasicParameterSet<T>& params,
                    const BasicNetworkInput<T>& input,
                    Activations* cache = nullptr) const;

  // Gradient of sum(d_output .* output) with respect to every parameter,
  // written into grads (same shape as params).
  void Backward(const BasicParameterSet<T>& params,
                const BasicNetworkInput<T>& input, const Activations& cache,
                const Matrix<T>& d_output, BasicParameterSet<T>* grads) const;

  // Throws UsageError when params do not match the spec's shapes.
  void CheckShapes(const BasicParameterSet<T>& params) const;

 private:
  void BuildPatches(const Matrix<T>& grid, Matrix<T>* patches) const;

  NetworkSpec spec_;
  std::vector<int> gather_;  // ConvPixels() x PatchSize() input indices
};

using Network = BasicNetwork<float>;

extern template struct BasicParameterSet<float>;
extern template struct BasicParameterSet<double>;
extern template class BasicNetwork<float>;
extern template class BasicNetwork<double>;

}  // namespace sfcraft

#endif  // SFCRAFT_NETWORK_H_
