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

#include "sfcraft/network.h"

#include <cmath>
#include <random>
#include <string>

#include "sfcraft/errors.h"

namespace sfcraft {
namespace {

// Tensor slots in parameter order.
enum Slot : int {
  kConvW = 0,
  kConvB,
  kSideW,
  kSideB,
  kTrunkW,
  kTrunkB,
};

std::string ShapeString(long long rows, long long cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

struct TensorShape {
  const char* name;
  int rows;
  int cols;
  int fan_in;
};

std::vector<TensorShape> Shapes(const NetworkSpec& s) {
  std::vector<TensorShape> shapes = {
      {"conv.weight", s.conv_filters, s.PatchSize(), s.PatchSize()},
      {"conv.bias", s.conv_filters, 1, s.PatchSize()},
      {"side.weight", s.side_units, s.SideInputSize(), s.SideInputSize()},
      {"side.bias", s.side_units, 1, s.SideInputSize()},
      {"trunk.weight", s.trunk_units, s.ConvFlatSize() + s.side_units,
       s.ConvFlatSize() + s.side_units},
      {"trunk.bias", s.trunk_units, 1, s.ConvFlatSize() + s.side_units},
  };
  if (s.head == HeadKind::kSuccessorFeatures) {
    shapes.push_back({"head.weight", s.head_units, s.trunk_units,
                      s.trunk_units});
    shapes.push_back({"head.bias", s.head_units, 1, s.trunk_units});
    shapes.push_back({"out.weight", s.OutputSize(), s.head_units,
                      s.head_units});
    shapes.push_back({"out.bias", s.OutputSize(), 1, s.head_units});
  } else {
    shapes.push_back({"out.weight", s.OutputSize(), s.trunk_units,
                      s.trunk_units});
    shapes.push_back({"out.bias", s.OutputSize(), 1, s.trunk_units});
  }
  return shapes;
}

template <typename T>
void Relu(Matrix<T>* m) {
  *m = m->cwiseMax(T(0));
}

template <typename T>
void ReluMask(const Matrix<T>& activation, Matrix<T>* grad) {
  *grad = (activation.array() > T(0)).select(grad->array(), T(0));
}

int RequireInt(const nlohmann::json& j, const char* field) {
  if (!j.contains(field) || !j.at(field).is_number_integer()) {
    throw FormatError(std::string("network spec field '") + field +
                      "' missing or not an integer");
  }
  return j.at(field).get<int>();
}

}  // namespace

std::string_view HeadKindName(HeadKind head) {
  return head == HeadKind::kSuccessorFeatures ? "sf" : "q";
}

HeadKind ParseHeadKind(std::string_view name) {
  if (name == "sf") return HeadKind::kSuccessorFeatures;
  if (name == "q") return HeadKind::kQValues;
  throw FormatError("unknown head kind '" + std::string(name) + "'");
}

NetworkSpec NetworkSpec::ForEnv(const EnvConfig& env, HeadKind head,
                                int n_policies, bool goal_conditioned) {
  NetworkSpec spec;
  spec.grid_height = env.height;
  spec.grid_width = env.width;
  spec.head = head;
  spec.n_policies = head == HeadKind::kQValues ? 1 : n_policies;
  spec.task_input_dim = goal_conditioned ? kNumFeatures : 0;
  spec.Validate();
  return spec;
}

int NetworkSpec::OutputSize() const {
  return head == HeadKind::kSuccessorFeatures
             ? n_policies * num_features * num_actions
             : num_actions;
}

void NetworkSpec::Validate() const {
  for (int v : {grid_height, grid_width, channels, conv_filters, kernel,
                side_units, trunk_units, head_units, n_policies, num_features,
                num_actions}) {
    if (v <= 0) throw ConfigError("network sizes must be positive");
  }
  if (inventory_dim < 0 || task_input_dim < 0 || SideInputSize() == 0) {
    throw ConfigError("side input must have at least one component");
  }
  if (kernel > grid_height || kernel > grid_width) {
    throw ConfigError("kernel larger than the grid");
  }
}

nlohmann::json NetworkSpec::ToJson() const {
  return {
      {"grid_height", grid_height},   {"grid_width", grid_width},
      {"channels", channels},         {"conv_filters", conv_filters},
      {"kernel", kernel},             {"inventory_dim", inventory_dim},
      {"task_input_dim", task_input_dim},
      {"side_units", side_units},     {"trunk_units", trunk_units},
      {"head_units", head_units},     {"head", HeadKindName(head)},
      {"n_policies", n_policies},     {"num_features", num_features},
      {"num_actions", num_actions},
  };
}

NetworkSpec NetworkSpec::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("network spec must be an object");
  NetworkSpec s;
  s.grid_height = RequireInt(j, "grid_height");
  s.grid_width = RequireInt(j, "grid_width");
  s.channels = RequireInt(j, "channels");
  s.conv_filters = RequireInt(j, "conv_filters");
  s.kernel = RequireInt(j, "kernel");
  s.inventory_dim = RequireInt(j, "inventory_dim");
  s.task_input_dim = RequireInt(j, "task_input_dim");
  s.side_units = RequireInt(j, "side_units");
  s.trunk_units = RequireInt(j, "trunk_units");
  s.head_units = RequireInt(j, "head_units");
  if (!j.contains("head") || !j.at("head").is_string()) {
    throw FormatError("network spec field 'head' missing or not a string");
  }
  s.head = ParseHeadKind(j.at("head").get<std::string>());
  s.n_policies = RequireInt(j, "n_policies");
  s.num_features = RequireInt(j, "num_features");
  s.num_actions = RequireInt(j, "num_actions");
  try {
    s.Validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid network spec: ") + e.what());
  }
  return s;
}

template <typename T>
std::size_t BasicParameterSet<T>::NumValues() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.values.size();
  return n;
}

template <typename T>
std::string BasicParameterSet<T>::FirstNonFinite() const {
  for (const auto& t : tensors) {
    for (T v : t.values) {
      if (!std::isfinite(v)) return t.name;
    }
  }
  return {};
}

template <typename T>
bool BasicParameterSet<T>::AllFinite() const {
  for (const auto& t : tensors) {
    if (!t.map().allFinite()) return false;
  }
  return true;
}

template <typename T>
BasicParameterSet<T> BasicParameterSet<T>::ZerosLike() const {
  BasicParameterSet out = *this;
  out.SetZero();
  return out;
}

template <typename T>
void BasicParameterSet<T>::SetZero() {
  for (auto& t : tensors) std::fill(t.values.begin(), t.values.end(), T(0));
}

template <typename T>
bool BasicParameterSet<T>::SameShape(const BasicParameterSet& other) const {
  if (tensors.size() != other.tensors.size()) return false;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i].rows != other.tensors[i].rows ||
        tensors[i].cols != other.tensors[i].cols) {
      return false;
    }
  }
  return true;
}

NetworkInput MakeInput(const NetworkSpec& spec,
                       std::span<const Observation* const> observations) {
  const int batch = static_cast<int>(observations.size());
  NetworkInput input;
  input.grid.resize(spec.GridInputSize(), batch);
  input.side.resize(spec.SideInputSize(), batch);
  for (int b = 0; b < batch; ++b) {
    const Observation& obs = *observations[b];
    if (obs.height != spec.grid_height || obs.width != spec.grid_width ||
        spec.channels != kNumChannels ||
        static_cast<int>(obs.grid.size()) != spec.GridInputSize()) {
      throw UsageError("observation is " + ShapeString(obs.height, obs.width) +
                       " but the network expects " +
                       ShapeString(spec.grid_height, spec.grid_width));
    }
    if (obs.task_input.has_value() != spec.goal_conditioned()) {
      throw UsageError(spec.goal_conditioned()
                           ? "goal-conditioned network needs a task input"
                           : "network takes no task input");
    }
    float* grid = input.grid.col(b).data();
    for (int i = 0; i < spec.GridInputSize(); ++i) grid[i] = obs.grid[i];
    int row = 0;
    for (int r = 0; r < spec.inventory_dim; ++r) {
      input.side(row++, b) = static_cast<float>(obs.inventory[r]);
    }
    if (obs.task_input) {
      for (int k = 0; k < spec.task_input_dim; ++k) {
        input.side(row++, b) = static_cast<float>((*obs.task_input)[k]);
      }
    }
  }
  return input;
}

NetworkInput MakeInput(const NetworkSpec& spec, const Observation& obs) {
  const Observation* one[] = {&obs};
  return MakeInput(spec, one);
}

template <typename T>
BasicNetwork<T>::BasicNetwork(NetworkSpec spec) : spec_(spec) {
  spec_.Validate();
  const int out_w = spec_.ConvOutWidth();
  const int patch = spec_.PatchSize();
  gather_.resize(static_cast<std::size_t>(spec_.ConvPixels()) * patch);
  for (int p = 0; p < spec_.ConvPixels(); ++p) {
    const int pr = p / out_w;
    const int pc = p % out_w;
    int j = 0;
    for (int dr = 0; dr < spec_.kernel; ++dr) {
      for (int dc = 0; dc < spec_.kernel; ++dc) {
        for (int ch = 0; ch < spec_.channels; ++ch) {
          gather_[p * patch + j++] =
              ((pr + dr) * spec_.grid_width + (pc + dc)) * spec_.channels + ch;
        }
      }
    }
  }
}

template <typename T>
BasicParameterSet<T> BasicNetwork<T>::Zeros() const {
  BasicParameterSet<T> params;
  for (const auto& s : Shapes(spec_)) {
    params.tensors.push_back(
        {s.name, s.rows, s.cols,
         AlignedVector<T>(static_cast<std::size_t>(s.rows) * s.cols, T(0))});
  }
  return params;
}

template <typename T>
BasicParameterSet<T> BasicNetwork<T>::Init(std::uint64_t seed) const {
  BasicParameterSet<T> params = Zeros();
  Rng rng(seed);
  const auto shapes = Shapes(spec_);
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const T bound = T(1) / std::sqrt(static_cast<T>(shapes[i].fan_in));
    std::uniform_real_distribution<T> dist(-bound, bound);
    for (T& v : params.tensors[i].values) v = dist(rng);
  }
  return params;
}

template <typename T>
void BasicNetwork<T>::CheckShapes(const BasicParameterSet<T>& params) const {
  const auto shapes = Shapes(spec_);
  if (params.tensors.size() != shapes.size()) {
    throw UsageError("parameter set has " +
                     std::to_string(params.tensors.size()) +
                     " tensors, network expects " +
                     std::to_string(shapes.size()));
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto& t = params.tensors[i];
    if (t.rows != shapes[i].rows || t.cols != shapes[i].cols ||
        t.values.size() != static_cast<std::size_t>(t.rows) * t.cols) {
      throw UsageError("tensor " + std::string(shapes[i].name) + " is " +
                       ShapeString(t.rows, t.cols) + ", expected " +
                       ShapeString(shapes[i].rows, shapes[i].cols));
    }
  }
}

template <typename T>
void BasicNetwork<T>::BuildPatches(const Matrix<T>& grid,
                                   Matrix<T>* patches) const {
  const int batch = static_cast<int>(grid.cols());
  const int pixels = spec_.ConvPixels();
  const int patch = spec_.PatchSize();
  patches->resize(patch, static_cast<Eigen::Index>(batch) * pixels);
  for (int b = 0; b < batch; ++b) {
    const T* src = grid.col(b).data();
    for (int p = 0; p < pixels; ++p) {
      T* dst = patches->col(static_cast<Eigen::Index>(b) * pixels + p).data();
      const int* idx = gather_.data() + static_cast<std::size_t>(p) * patch;
      for (int j = 0; j < patch; ++j) dst[j] = src[idx[j]];
    }
  }
}

template <typename T>
Matrix<T> BasicNetwork<T>::Forward(const BasicParameterSet<T>& params,
                                   const BasicNetworkInput<T>& input,
                                   Activations* cache) const {
  CheckShapes(params);
  if (input.grid.rows() != spec_.GridInputSize() ||
      input.side.rows() != spec_.SideInputSize() ||
      input.grid.cols() != input.side.cols()) {
    throw UsageError("network input shape mismatch: grid " +
                     ShapeString(input.grid.rows(), input.grid.cols()) +
                     ", side " +
                     ShapeString(input.side.rows(), input.side.cols()));
  }
  if (!params.AllFinite()) {
    throw CorruptionError("non-finite value in parameter tensor " +
                          params.FirstNonFinite());
  }

  Activations local;
  Activations& a = cache != nullptr ? *cache : local;
  const auto& t = params.tensors;
  const int batch = input.batch();
  const int flat = spec_.ConvFlatSize();

  BuildPatches(input.grid, &a.patches);
  a.conv.noalias() = t[kConvW].map() * a.patches;
  a.conv.colwise() += t[kConvW + 1].map().col(0);
  Relu(&a.conv);
  // Column b of the flattened conv output holds pixel-major filters.
  Eigen::Map<const Matrix<T>> conv_flat(a.conv.data(), flat, batch);

  a.side.noalias() = t[kSideW].map() * input.side;
  a.side.colwise() += t[kSideB].map().col(0);
  Relu(&a.side);

  const auto trunk_w = t[kTrunkW].map();
  a.trunk.noalias() = trunk_w.leftCols(flat) * conv_flat;
  a.trunk.noalias() += trunk_w.rightCols(spec_.side_units) * a.side;
  a.trunk.colwise() += t[kTrunkB].map().col(0);
  Relu(&a.trunk);

  Matrix<T> out;
  if (spec_.head == HeadKind::kSuccessorFeatures) {
    a.head.noalias() = t[6].map() * a.trunk;
    a.head.colwise() += t[7].map().col(0);
    Relu(&a.head);
    out.noalias() = t[8].map() * a.head;
    out.colwise() += t[9].map().col(0);
  } else {
    out.noalias() = t[6].map() * a.trunk;
    out.colwise() += t[7].map().col(0);
  }
  return out;
}

template <typename T>
void BasicNetwork<T>::Backward(const BasicParameterSet<T>& params,
                               const BasicNetworkInput<T>& input,
                               const Activations& a, const Matrix<T>& d_output,
                               BasicParameterSet<T>* grads) const {
  CheckShapes(params);
  if (!grads->SameShape(params)) *grads = params.ZerosLike();
  const auto& t = params.tensors;
  auto& g = grads->tensors;
  const int batch = input.batch();
  const int flat = spec_.ConvFlatSize();

  Matrix<T> d_trunk;
  if (spec_.head == HeadKind::kSuccessorFeatures) {
    g[8].map().noalias() = d_output * a.head.transpose();
    g[9].map() = d_output.rowwise().sum();
    Matrix<T> d_head = t[8].map().transpose() * d_output;
    ReluMask(a.head, &d_head);
    g[6].map().noalias() = d_head * a.trunk.transpose();
    g[7].map() = d_head.rowwise().sum();
    d_trunk.noalias() = t[6].map().transpose() * d_head;
  } else {
    g[6].map().noalias() = d_output * a.trunk.transpose();
    g[7].map() = d_output.rowwise().sum();
    d_trunk.noalias() = t[6].map().transpose() * d_output;
  }
  ReluMask(a.trunk, &d_trunk);

  Eigen::Map<const Matrix<T>> conv_flat(a.conv.data(), flat, batch);
  const auto trunk_w = t[kTrunkW].map();
  auto d_trunk_w = g[kTrunkW].map();
  d_trunk_w.leftCols(flat).noalias() = d_trunk * conv_flat.transpose();
  d_trunk_w.rightCols(spec_.side_units).noalias() =
      d_trunk * a.side.transpose();
  g[kTrunkB].map() = d_trunk.rowwise().sum();

  Matrix<T> d_side = trunk_w.rightCols(spec_.side_units).transpose() * d_trunk;
  ReluMask(a.side, &d_side);
  g[kSideW].map().noalias() = d_side * input.side.transpose();
  g[kSideB].map() = d_side.rowwise().sum();

  Matrix<T> d_flat = trunk_w.leftCols(flat).transpose() * d_trunk;
  Eigen::Map<Matrix<T>> d_conv(d_flat.data(), spec_.conv_filters,
                               static_cast<Eigen::Index>(batch) *
                                   spec_.ConvPixels());
  d_conv = (a.conv.array() > T(0)).select(d_conv.array(), T(0));
  g[kConvW].map().noalias() = d_conv * a.patches.transpose();
  g[kConvB].map() = d_conv.rowwise().sum();
}

template struct BasicParameterSet<float>;
template struct BasicParameterSet<double>;
template class BasicNetwork<float>;
template class BasicNetwork<double>;

}  // namespace sfcraft
