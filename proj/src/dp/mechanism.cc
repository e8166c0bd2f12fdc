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

#include "absl/strings/str_format.h"
#include "dpfl/dp.h"

namespace dpfl::dp {
namespace {

double L2Norm(std::span<const double> g) {
  double s = 0.0;
  for (double v : g) s += v * v;
  return std::sqrt(s);
}

double ScaledNorm(std::span<const double> g, double factor) {
  double s = 0.0;
  for (double v : g) s += (v * factor) * (v * factor);
  return std::sqrt(s);
}

// min(1, C / ||g||), nudged down until the rounded scaled vector has norm
// <= C. This makes clipping idempotent in floating point.
double ClipFactor(std::span<const double> g, double norm, double clip_norm) {
  if (!(norm > clip_norm)) return 1.0;
  double factor = clip_norm / norm;
  while (ScaledNorm(g, factor) > clip_norm) {
    factor = std::nextafter(factor, 0.0);
  }
  return factor;
}

}  // namespace

absl::StatusOr<models::Gradient> ClipGradient(std::span<const double> g,
                                              double clip_norm) {
  if (!(clip_norm > 0.0)) {
    return absl::InvalidArgumentError("clip norm must be > 0");
  }
  const double norm = L2Norm(g);
  if (!std::isfinite(norm)) {
    return absl::InternalError("numeric error: non-finite gradient");
  }
  models::Gradient out(g.begin(), g.end());
  const double factor = ClipFactor(g, norm, clip_norm);
  if (factor < 1.0) {
    for (double& v : out) v *= factor;
  }
  return out;
}

models::Gradient NoisyBatchGradient(std::span<const models::Gradient> per_example,
                                    size_t dim, double clip_norm, double sigma,
                                    int64_t expected_batch,
                                    RandomStream& stream) {
  models::Gradient sum(dim, 0.0);
  for (const models::Gradient& g : per_example) {
    const double factor = ClipFactor(g, L2Norm(g), clip_norm);
    for (size_t j = 0; j < dim; ++j) sum[j] += g[j] * factor;
  }
  if (sigma > 0.0) {
    const double scale = sigma * clip_norm;
    for (double& v : sum) v += scale * stream.Normal();
  }
  const double denom = static_cast<double>(expected_batch);
  for (double& v : sum) v /= denom;
  return sum;
}

absl::StatusOr<std::pair<models::Model, PrivacySpent>> DpSgdTrain(
    const models::Model& model, const models::Batch& train,
    const DpConfig& cfg, double lr, int epochs, RandomStream& stream) {
  if (absl::Status s = ValidateDpConfig(cfg); !s.ok()) return s;
  if (absl::Status s = models::ValidateBatch(train, model.spec); !s.ok()) {
    return s;
  }
  if (epochs < 0 || !(lr > 0.0)) {
    return absl::InvalidArgumentError("DP-SGD needs epochs >= 0 and lr > 0");
  }
  const int64_t expected_steps =
      static_cast<int64_t>(epochs) * StepsPerEpoch(cfg.sampling_rate);
  if (cfg.steps != expected_steps) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "DpConfig.steps (%d) inconsistent with %d epochs at q=%g (%d steps)",
        cfg.steps, epochs, cfg.sampling_rate, expected_steps));
  }
  const int64_t batch_size = std::max<int64_t>(
      1, std::llround(cfg.sampling_rate * static_cast<double>(train.rows)));

  absl::StatusOr<PrivacySpent> spent = EpsilonSpent(cfg);
  if (!spent.ok()) return spent.status();

  if (cfg.noise_multiplier == 0.0) {
    models::SgdOptions sgd{lr, epochs, static_cast<int>(batch_size)};
    absl::StatusOr<models::Model> out =
        models::TrainSgd(model, train, sgd, stream);
    if (!out.ok()) return out.status();
    return std::make_pair(*std::move(out), *spent);
  }

  models::Model current = model;
  std::vector<size_t> sampled;
  for (int64_t step = 0; step < cfg.steps; ++step) {
    sampled.clear();
    for (size_t i = 0; i < train.rows; ++i) {
      if (stream.Bernoulli(cfg.sampling_rate)) sampled.push_back(i);
    }
    std::vector<models::Gradient> grads;
    if (!sampled.empty()) {
      grads = models::PerExampleGrads(current, models::Gather(train, sampled));
    }
    const models::Gradient noisy = NoisyBatchGradient(
        grads, current.params.size(), cfg.clip_norm, cfg.noise_multiplier,
        batch_size, stream);
    absl::StatusOr<models::Model> next = models::SgdStep(current, noisy, lr);
    if (!next.ok()) return next.status();
    current = *std::move(next);
  }
  return std::make_pair(std::move(current), *spent);
}

}  // namespace dpfl::dp
