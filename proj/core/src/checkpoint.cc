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

#include "sfcraft/checkpoint.h"

#include <bit>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "sfcraft/errors.h"

namespace sfcraft {
namespace {

constexpr char kMagic[4] = {'S', 'F', 'C', 'R'};

void PutU32(std::uint32_t v, std::vector<std::uint8_t>* out) {
  for (int i = 0; i < 4; ++i) out->push_back((v >> (8 * i)) & 0xff);
}

std::uint32_t GetU32(const std::vector<std::uint8_t>& bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes[at + i]} << (8 * i);
  return v;
}

void CompareSpecs(const NetworkSpec& expected, const NetworkSpec& found) {
  const nlohmann::json e = expected.ToJson();
  const nlohmann::json f = found.ToJson();
  for (const auto& [key, value] : e.items()) {
    if (f.at(key) != value) {
      throw FormatError("checkpoint network spec mismatch in field '" + key +
                        "': expected " + value.dump() + ", found " +
                        f.at(key).dump());
    }
  }
}

}  // namespace

std::vector<std::uint8_t> EncodeCheckpoint(const Checkpoint& checkpoint) {
  Network(checkpoint.spec).CheckShapes(checkpoint.params);
  nlohmann::json header;
  header["spec"] = checkpoint.spec.ToJson();
  header["provenance"] = checkpoint.provenance;
  header["param_version"] = checkpoint.params.version;
  header["tensors"] = nlohmann::json::array();
  for (const auto& t : checkpoint.params.tensors) {
    header["tensors"].push_back(
        {{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
  }
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  PutU32(kCheckpointVersion, &out);
  PutU32(static_cast<std::uint32_t>(text.size()), &out);
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + checkpoint.params.NumValues() * 4);
  for (const auto& t : checkpoint.params.tensors) {
    for (float v : t.values) PutU32(std::bit_cast<std::uint32_t>(v), &out);
  }
  return out;
}

Checkpoint DecodeCheckpoint(const std::vector<std::uint8_t>& bytes,
                            const NetworkSpec* expected_spec) {
  if (bytes.size() < 12) throw FormatError("checkpoint truncated in preamble");
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw FormatError("not a checkpoint: bad magic");
  }
  const std::uint32_t version = GetU32(bytes, 4);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " +
                      std::to_string(version));
  }
  const std::size_t header_len = GetU32(bytes, 8);
  if (bytes.size() < 12 + header_len) {
    throw FormatError("checkpoint truncated in header");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 12,
                                   bytes.begin() + 12 + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header is not JSON: ") +
                      e.what());
  }
  if (!header.is_object() || !header.contains("spec") ||
      !header.contains("tensors") || !header.at("tensors").is_array()) {
    throw FormatError("checkpoint header lacks spec or tensors");
  }

  Checkpoint checkpoint;
  checkpoint.spec = NetworkSpec::FromJson(header.at("spec"));
  if (expected_spec != nullptr) CompareSpecs(*expected_spec, checkpoint.spec);
  if (header.contains("provenance")) {
    checkpoint.provenance = header.at("provenance");
  }
  checkpoint.params.version = header.value("param_version", 1u);

  std::size_t at = 12 + header_len;
  for (const auto& entry : header.at("tensors")) {
    NamedTensor<float> t;
    try {
      t.name = entry.at("name").get<std::string>();
      t.rows = entry.at("rows").get<int>();
      t.cols = entry.at("cols").get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("bad tensor entry: ") + e.what());
    }
    if (t.rows < 0 || t.cols < 0) throw FormatError("negative tensor shape");
    const std::size_t count = static_cast<std::size_t>(t.rows) * t.cols;
    if (bytes.size() < at + count * 4) {
      throw FormatError("checkpoint truncated in tensor " + t.name);
    }
    t.values.resize(count);
    for (std::size_t i = 0; i < count; ++i, at += 4) {
      t.values[i] = std::bit_cast<float>(GetU32(bytes, at));
    }
    checkpoint.params.tensors.push_back(std::move(t));
  }
  if (at != bytes.size()) {
    throw FormatError("checkpoint has " + std::to_string(bytes.size() - at) +
                      " trailing bytes");
  }
  try {
    Network(checkpoint.spec).CheckShapes(checkpoint.params);
  } catch (const UsageError& e) {
    throw FormatError(std::string("checkpoint tensors do not match spec: ") +
                      e.what());
  }
  return checkpoint;
}

std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void SaveCheckpoint(const std::filesystem::path& path,
                    const Checkpoint& checkpoint) {
  const std::vector<std::uint8_t> bytes = EncodeCheckpoint(checkpoint);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path,
                          const NetworkSpec* expected_spec) {
  return DecodeCheckpoint(ReadFileBytes(path), expected_spec);
}

std::string ContentId(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    hash ^= b;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace sfcraft
