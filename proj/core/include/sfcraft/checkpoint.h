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

#ifndef SFCRAFT_CHECKPOINT_H_
#define SFCRAFT_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "sfcraft/network.h"

namespace sfcraft {

// On-disk layout (all integers little-endian):
//
//   bytes 0-3   magic "SFCR"
//   bytes 4-7   uint32 format version (kCheckpointVersion)
//   bytes 8-11  uint32 length N of the JSON header
//   N bytes     UTF-8 JSON: {"spec": {...}, "provenance": {...},
//               "param_version": u32, "tensors": [{"name","rows","cols"}]}
//   rest        float32 arrays in tensor order, each column-major
//
// The file size must match the header exactly.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  NetworkSpec spec;
  // Free-form training provenance: agent variant, suite, seed, steps,
  // environment config, learned task vector.
  nlohmann::json provenance = nlohmann::json::object();
  ParameterSet params;
};

std::vector<std::uint8_t> EncodeCheckpoint(const Checkpoint& checkpoint);

// Throws FormatError on bad magic, version, truncation, trailing bytes or a
// header/tensor mismatch. When expected_spec is given, a different spec is a
// FormatError naming the first mismatched field.
Checkpoint DecodeCheckpoint(const std::vector<std::uint8_t>& bytes,
                            const NetworkSpec* expected_spec = nullptr);

void SaveCheckpoint(const std::filesystem::path& path,
                    const Checkpoint& checkpoint);
Checkpoint LoadCheckpoint(const std::filesystem::path& path,
                          const NetworkSpec* expected_spec = nullptr);

std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path);

// Stable identifier: 16 hex digits of the FNV-1a hash of the file content.
std::string ContentId(const std::vector<std::uint8_t>& bytes);

}  // namespace sfcraft

#endif  // SFCRAFT_CHECKPOINT_H_
