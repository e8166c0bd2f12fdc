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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "absl/strings/str_format.h"
#include "dpfl/models.h"

namespace dpfl::models {
namespace {

// Offsets into the flat parameter vector.
struct Layout {
  size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;
};

Layout MakeLayout(const ModelSpec& spec) {
  const size_t d = spec.input_dim;
  const size_t k = spec.num_categories;
  Layout l;
  if (spec.kind == ModelKind::kLinear) {
    l.w1 = 0;
    l.b1 = d * k;
    return l;
  }
  const size_t h = spec.hidden_dim;
  l.w1 = 0;
  l.b1 = d * h;
  l.w2 = l.b1 + h;
  l.b2 = l.w2 + h * k;
  return l;
}

void Softmax(std::vector<double>& logits) {
  const double max = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& z : logits) {
    z = std::exp(z - max);
    sum += z;
  }
  for (double& z : logits) z /= sum;
}

// Forward pass that keeps the hidden activations for backprop.
struct Activations {
  std::vector<double> hidden;  // mlp only
  std::vector<double> logits;
};

Activations Run(const Model& model, std::span<const double> x) {
  const ModelSpec& s = model.spec;
  const Layout l = MakeLayout(s);
  const size_t d = s.input_dim;
  const size_t k = s.num_categories;
  const double* p = model.params.data();
  Activations a;
  if (s.kind == ModelKind::kLinear) {
    a.logits.resize(k);
    for (size_t c = 0; c < k; ++c) {
      double z = p[l.b1 + c];
      const double* w = p + l.w1 + c * d;
      for (size_t j = 0; j < d; ++j) z += w[j] * x[j];
      a.logits[c] = z;
    }
    return a;
  }
  const size_t h = s.hidden_dim;
  a.hidden.resize(h);
  for (size_t u = 0; u < h; ++u) {
    double z = p[l.b1 + u];
    const double* w = p + l.w1 + u * d;
    for (size_t j = 0; j < d; ++j) z += w[j] * x[j];
    a.hidden[u] = std::tanh(z);
  }
  a.logits.resize(k);
  for (size_t c = 0; c < k; ++c) {
    double z = p[l.b2 + c];
    const double* w = p + l.w2 + c * h;
    for (size_t u = 0; u < h; ++u) z += w[u] * a.hidden[u];
    a.logits[c] = z;
  }
  return a;
}

// Writes the gradient of the cross-entropy at (x, y) into `out`.
void ExampleGrad(const Model& model, std::span<const double> x, int y,
                 std::span<double> out) {
  const ModelSpec& s = model.spec;
  const Layout l = MakeLayout(s);
  const size_t d = s.input_dim;
  const size_t k = s.num_categories;
  Activations a = Run(model, x);
  std::vector<double> delta = a.logits;
  Softmax(delta);
  delta[y] -= 1.0;  // p - onehot(y)

  if (s.kind == ModelKind::kLinear) {
    for (size_t c = 0; c < k; ++c) {
      double* gw = out.data() + l.w1 + c * d;
      for (size_t j = 0; j < d; ++j) gw[j] = delta[c] * x[j];
      out[l.b1 + c] = delta[c];
    }
    return;
  }
  const size_t h = s.hidden_dim;
  const double* p = model.params.data();
  for (size_t c = 0; c < k; ++c) {
    double* gw = out.data() + l.w2 + c * h;
    for (size_t u = 0; u < h; ++u) gw[u] = delta[c] * a.hidden[u];
    out[l.b2 + c] = delta[c];
  }
  for (size_t u = 0; u < h; ++u) {
    double back = 0.0;
    for (size_t c = 0; c < k; ++c) back += p[l.w2 + c * h + u] * delta[c];
    const double dz = back * (1.0 - a.hidden[u] * a.hidden[u]);
    double* gw = out.data() + l.w1 + u * d;
    for (size_t j = 0; j < d; ++j) gw[j] = dz * x[j];
    out[l.b1 + u] = dz;
  }
}

bool AllFinite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

}  // namespace

absl::string_view ModelKindName(ModelKind kind) {
  return kind == ModelKind::kLinear ? "linear" : "mlp";
}

absl::StatusOr<ModelKind> ParseModelKind(absl::string_view name) {
  if (name == "linear") return ModelKind::kLinear;
  if (name == "mlp") return ModelKind::kMlp;
  return absl::InvalidArgumentError(
      absl::StrFormat("unknown model kind '%s' (expected linear or mlp)", name));
}

absl::Status ValidateSpec(const ModelSpec& spec) {
  if (spec.input_dim < 1) {
    return absl::InvalidArgumentError("model input_dim must be >= 1");
  }
  if (spec.num_categories < 2) {
    return absl::InvalidArgumentError("model num_categories must be >= 2");
  }
  if (spec.kind == ModelKind::kMlp && spec.hidden_dim < 1) {
    return absl::InvalidArgumentError("mlp hidden_dim must be >= 1");
  }
  return absl::OkStatus();
}

size_t ParamCount(const ModelSpec& spec) {
  const size_t d = spec.input_dim;
  const size_t k = spec.num_categories;
  if (spec.kind == ModelKind::kLinear) return d * k + k;
  const size_t h = spec.hidden_dim;
  return d * h + h + h * k + k;
}

absl::Status ValidateBatch(const Batch& batch, const ModelSpec& spec) {
  if (batch.rows == 0) return absl::InvalidArgumentError("empty batch");
  if (batch.dim != spec.input_dim) {
    return absl::InvalidArgumentError(
        absl::StrFormat("batch dim %d does not match model input_dim %d",
                        batch.dim, spec.input_dim));
  }
  if (batch.features.size() != batch.rows * batch.dim ||
      batch.labels.size() != batch.rows) {
    return absl::InvalidArgumentError("batch storage size mismatch");
  }
  for (int y : batch.labels) {
    if (y < 0 || y >= spec.num_categories) {
      return absl::InvalidArgumentError(
          absl::StrFormat("label %d out of range [0, %d)", y,
                          spec.num_categories));
    }
  }
  if (!AllFinite(batch.features)) {
    return absl::InvalidArgumentError("batch has non-finite features");
  }
  return absl::OkStatus();
}

Batch Gather(const Batch& batch, std::span<const size_t> indices) {
  Batch out;
  out.rows = indices.size();
  out.dim = batch.dim;
  out.num_categories = batch.num_categories;
  out.features.reserve(out.rows * out.dim);
  out.labels.reserve(out.rows);
  for (size_t i : indices) {
    auto row = batch.Row(i);
    out.features.insert(out.features.end(), row.begin(), row.end());
    out.labels.push_back(batch.labels[i]);
  }
  return out;
}

Model InitModel(const ModelSpec& spec, uint64_t seed) {
  Model m{spec, std::vector<double>(ParamCount(spec), 0.0)};
  const Layout l = MakeLayout(spec);
  RandomStream rng(seed);
  auto fill = [&](size_t offset, size_t fan_in, size_t fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (size_t i = 0; i < fan_in * fan_out; ++i) {
      m.params[offset + i] = (2.0 * rng.Uniform() - 1.0) * a;
    }
  };
  if (spec.kind == ModelKind::kLinear) {
    fill(l.w1, spec.input_dim, spec.num_categories);
  } else {
    fill(l.w1, spec.input_dim, spec.hidden_dim);
    fill(l.w2, spec.hidden_dim, spec.num_categories);
  }
  return m;
}

std::vector<double> Logits(const Model& model, std::span<const double> x) {
  return Run(model, x).logits;
}

absl::StatusOr<std::vector<double>> Forward(const Model& model,
                                            std::span<const double> x) {
  if (x.size() != static_cast<size_t>(model.spec.input_dim)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("feature length %d does not match input_dim %d",
                        x.size(), model.spec.input_dim));
  }
  if (!AllFinite(x)) {
    return absl::InternalError("numeric error: non-finite model input");
  }
  std::vector<double> p = Run(model, x).logits;
  Softmax(p);
  return p;
}

double Loss(const Model& model, const Batch& batch) {
  double total = 0.0;
  for (size_t i = 0; i < batch.rows; ++i) {
    const std::vector<double> z = Run(model, batch.Row(i)).logits;
    const double max = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - max);
    total += max + std::log(sum) - z[batch.labels[i]];
  }
  return total / static_cast<double>(batch.rows);
}

std::vector<Gradient> PerExampleGrads(const Model& model, const Batch& batch) {
  std::vector<Gradient> grads(batch.rows, Gradient(model.params.size()));
  for (size_t i = 0; i < batch.rows; ++i) {
    ExampleGrad(model, batch.Row(i), batch.labels[i], grads[i]);
  }
  return grads;
}

Gradient Grad(const Model& model, const Batch& batch) {
  Gradient sum(model.params.size(), 0.0);
  Gradient scratch(model.params.size());
  for (size_t i = 0; i < batch.rows; ++i) {
    ExampleGrad(model, batch.Row(i), batch.labels[i], scratch);
    for (size_t j = 0; j < sum.size(); ++j) sum[j] += scratch[j];
  }
  const double n = static_cast<double>(batch.rows);
  for (double& v : sum) v /= n;
  return sum;
}

absl::StatusOr<Model> SgdStep(const Model& model, std::span<const double> g,
                              double lr) {
  if (g.size() != model.params.size()) {
    return absl::InvalidArgumentError("gradient length does not match model");
  }
  Model next = model;
  for (size_t j = 0; j < g.size(); ++j) next.params[j] -= lr * g[j];
  if (!AllFinite(next.params)) {
    return absl::InternalError("numeric error: SGD step produced non-finite "
                               "parameters");
  }
  return next;
}

int Predict(const Model& model, std::span<const double> x) {
  const std::vector<double> z = Logits(model, x);
  int best = 0;
  for (int c = 1; c < static_cast<int>(z.size()); ++c) {
    if (z[c] > z[best]) best = c;
  }
  return best;
}

absl::StatusOr<double> Evaluate(const Model& model, const Batch& test) {
  if (test.rows == 0) {
    return absl::InvalidArgumentError("cannot evaluate on an empty test set");
  }
  size_t correct = 0;
  for (size_t i = 0; i < test.rows; ++i) {
    if (Predict(model, test.Row(i)) == test.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.rows);
}

absl::StatusOr<Model> TrainSgd(const Model& model, const Batch& train,
                               const SgdOptions& options,
                               RandomStream& stream) {
  if (options.batch_size < 1 || options.epochs < 0 || !(options.lr > 0)) {
    return absl::InvalidArgumentError(
        "SGD needs batch_size >= 1, epochs >= 0 and lr > 0");
  }
  Model current = model;
  const size_t b = options.batch_size;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const std::vector<size_t> order = stream.Permutation(train.rows);
    for (size_t start = 0; start < order.size(); start += b) {
      const size_t end = std::min(order.size(), start + b);
      const Batch mb = Gather(
          train, std::span<const size_t>(order).subspan(start, end - start));
      absl::StatusOr<Model> next =
          SgdStep(current, Grad(current, mb), options.lr);
      if (!next.ok()) return next.status();
      current = *std::move(next);
    }
  }
  return current;
}

}  // namespace dpfl::models
