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

#ifndef DPFL_MODELS_H_
#define DPFL_MODELS_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "dpfl/random.h"

namespace dpfl::models {

enum class ModelKind { kLinear, kMlp };

absl::string_view ModelKindName(ModelKind kind);
absl::StatusOr<ModelKind> ParseModelKind(absl::string_view name);

struct ModelSpec {
  ModelKind kind = ModelKind::kLinear;
  int input_dim = 1;
  int hidden_dim = 0;  // mlp only
  int num_categories = 2;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

absl::Status ValidateSpec(const ModelSpec& spec);

// input_dim*K + K (linear) or input_dim*H + H + H*K + K (mlp).
size_t ParamCount(const ModelSpec& spec);

// Parameters are stored flat. Linear: W (K x D, row-major) then b (K).
// MLP: W1 (H x D), b1 (H), W2 (K x H), b2 (K). Hidden activation is tanh.
struct Model {
  ModelSpec spec;
  std::vector<double> params;
};

using Gradient = std::vector<double>;

// Dense row-major feature matrix with one label per row.
struct Batch {
  size_t rows = 0;
  int dim = 0;
  int num_categories = 2;
  std::vector<double> features;
  std::vector<int> labels;

  std::span<const double> Row(size_t i) const {
    return std::span<const double>(features).subspan(i * dim, dim);
  }
};

absl::Status ValidateBatch(const Batch& batch, const ModelSpec& spec);

// Copies the given rows, in order, into a new batch.
Batch Gather(const Batch& batch, std::span<const size_t> indices);

// Glorot-uniform weights, zero biases.
Model InitModel(const ModelSpec& spec, uint64_t seed);

// Raw class scores.
std::vector<double> Logits(const Model& model, std::span<const double> x);

// Softmax probabilities. Fails on non-finite input.
absl::StatusOr<std::vector<double>> Forward(const Model& model,
                                            std::span<const double> x);

// Mean cross-entropy, computed with log-sum-exp.
double Loss(const Model& model, const Batch& batch);

std::vector<Gradient> PerExampleGrads(const Model& model, const Batch& batch);

// Mean gradient over the batch; equal to the mean of PerExampleGrads.
Gradient Grad(const Model& model, const Batch& batch);

// params - lr * g. Fails when the result is not finite.
absl::StatusOr<Model> SgdStep(const Model& model, std::span<const double> g,
                              double lr);

// Index of the largest logit, lowest index on ties.
int Predict(const Model& model, std::span<const double> x);

// Fraction of correct argmax predictions. Fails on an empty batch.
absl::StatusOr<double> Evaluate(const Model& model, const Batch& test);

struct SgdOptions {
  double lr = 0.1;
  int epochs = 1;
  int batch_size = 32;
};

// Plain mini-batch SGD: every epoch draws a fresh permutation from `stream`
// and walks it in consecutive batches (the last one may be short).
absl::StatusOr<Model> TrainSgd(const Model& model, const Batch& train,
                               const SgdOptions& options,
                               RandomStream& stream);

// Checkpoint layout (all integers and reals little-endian):
//   bytes 0-7   magic "DPFLMDL1"
//   u32         format version (1)
//   u32         kind (0 = linear, 1 = mlp)
//   u64 x 3     input_dim, hidden_dim, num_categories
//   u64         parameter count P
//   f64 x P     parameters, IEEE-754 binary64
std::string SerializeModel(const Model& model);
absl::StatusOr<Model> DeserializeModel(absl::string_view bytes);
absl::Status SaveModel(const Model& model, const std::string& path);
absl::StatusOr<Model> LoadModel(const std::string& path);

}  // namespace dpfl::models

#endif  // DPFL_MODELS_H_
