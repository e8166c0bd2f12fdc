// Copyright 2026 The DPFL Bench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "absl/strings/str_format.h"
#include "dpfl/models.h"

namespace dpfl::models {
namespace {

constexpr char kMagic[8] = {'D', 'P', 'F', 'L', 'M', 'D', 'L', '1'};
constexpr uint32_t kVersion = 1;
constexpr size_t kHeaderSize = 8 + 4 + 4 + 8 * 4;

template <typename T>
void PutLe(std::string& out, T value) {
  for (size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
  }
}

template <typename T>
T GetLe(absl::string_view in, size_t offset) {
  T value = 0;
  for (size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<unsigned char>(in[offset + i]))
             << (8 * i);
  }
  return value;
}

}  // namespace

std::string SerializeModel(const Model& model) {
  std::string out(kMagic, sizeof(kMagic));
  PutLe<uint32_t>(out, kVersion);
  PutLe<uint32_t>(out, model.spec.kind == ModelKind::kLinear ? 0 : 1);
  PutLe<uint64_t>(out, static_cast<uint64_t>(model.spec.input_dim));
  PutLe<uint64_t>(out, static_cast<uint64_t>(model.spec.hidden_dim));
  PutLe<uint64_t>(out, static_cast<uint64_t>(model.spec.num_categories));
  PutLe<uint64_t>(out, model.params.size());
  for (double p : model.params) PutLe<uint64_t>(out, std::bit_cast<uint64_t>(p));
  return out;
}

absl::StatusOr<Model> DeserializeModel(absl::string_view bytes) {
  if (bytes.size() < kHeaderSize ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    return absl::InvalidArgumentError("not a model checkpoint");
  }
  if (GetLe<uint32_t>(bytes, 8) != kVersion) {
    return absl::InvalidArgumentError("unsupported checkpoint version");
  }
  const uint32_t kind = GetLe<uint32_t>(bytes, 12);
  if (kind > 1) return absl::InvalidArgumentError("unknown model kind code");
  Model m;
  m.spec.kind = kind == 0 ? ModelKind::kLinear : ModelKind::kMlp;
  m.spec.input_dim = static_cast<int>(GetLe<uint64_t>(bytes, 16));
  m.spec.hidden_dim = static_cast<int>(GetLe<uint64_t>(bytes, 24));
  m.spec.num_categories = static_cast<int>(GetLe<uint64_t>(bytes, 32));
  if (absl::Status s = ValidateSpec(m.spec); !s.ok()) return s;
  const uint64_t count = GetLe<uint64_t>(bytes, 40);
  if (count != ParamCount(m.spec) ||
      bytes.size() != kHeaderSize + 8 * count) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "checkpoint parameter count %d inconsistent with header", count));
  }
  m.params.resize(count);
  for (size_t i = 0; i < count; ++i) {
    m.params[i] =
        std::bit_cast<double>(GetLe<uint64_t>(bytes, kHeaderSize + 8 * i));
  }
  return m;
}

absl::Status SaveModel(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return absl::UnavailableError("cannot open " + path);
  const std::string bytes = SerializeModel(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) return absl::UnavailableError("write failed: " + path);
  return absl::OkStatus();
}

absl::StatusOr<Model> LoadModel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return DeserializeModel(buf.str());
}

}  // namespace dpfl::models
