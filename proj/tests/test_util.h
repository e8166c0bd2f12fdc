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

#ifndef DPFL_TESTS_TEST_UTIL_H_
#define DPFL_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "dpfl/models.h"
#include "dpfl/random.h"

namespace dpfl::testutil {

// Random model (dims, parameters) and batch for gradient checks.
inline std::pair<models::Model, models::Batch> RandomCase(models::ModelKind kind,
                                                          RandomStream& rng,
                                                          size_t rows = 0) {
  models::ModelSpec spec;
  spec.kind = kind;
  spec.input_dim = 1 + static_cast<int>(rng.UniformInt(8));
  spec.hidden_dim = kind == models::ModelKind::kMlp ? 1 + static_cast<int>(rng.UniformInt(6)) : 0;
  spec.num_categories = 2 + static_cast<int>(rng.UniformInt(4));
  models::Model model = models::InitModel(spec, rng.NextU64());
  for (double& v : model.params) v = rng.Normal();
  models::Batch batch;
  batch.rows = rows > 0 ? rows : 1 + rng.UniformInt(5);
  batch.dim = spec.input_dim;
  batch.num_categories = spec.num_categories;
  batch.features.resize(batch.rows * batch.dim);
  for (double& v : batch.features) v = rng.Normal();
  for (size_t i = 0; i < batch.rows; ++i) {
    batch.labels.push_back(static_cast<int>(rng.UniformInt(spec.num_categories)));
  }
  return {model, batch};
}

// Largest norm-wise relative error ||fd - g|| / max(||fd||, ||g||) over the
// examples of `batch`, with central differences of the single-example loss.
inline double FiniteDifferenceCheck(const models::Model& model,
                                    const models::Batch& batch,
                                    double h = 1e-5) {
  const std::vector<models::Gradient> analytic = models::PerExampleGrads(model, batch);
  double worst = 0.0;
  for (size_t i = 0; i < batch.rows; ++i) {
    const std::vector<size_t> one = {i};
    const models::Batch row = models::Gather(batch, one);
    models::Model probe = model;
    double diff_sq = 0.0, fd_sq = 0.0, an_sq = 0.0;
    for (size_t j = 0; j < model.params.size(); ++j) {
      probe.params[j] = model.params[j] + h;
      const double up = models::Loss(probe, row);
      probe.params[j] = model.params[j] - h;
      const double down = models::Loss(probe, row);
      probe.params[j] = model.params[j];
      const double fd = (up - down) / (2.0 * h);
      diff_sq += (fd - analytic[i][j]) * (fd - analytic[i][j]);
      fd_sq += fd * fd;
      an_sq += analytic[i][j] * analytic[i][j];
    }
    const double scale = std::sqrt(std::max(fd_sq, an_sq));
    if (scale > 0.0) worst = std::max(worst, std::sqrt(diff_sq) / scale);
  }
  return worst;
}

// Direct evaluation of the subsampled-Gaussian Renyi bound at order alpha:
//   log E_{z ~ N(0, sigma^2)} [(1 - q + q exp((2z - 1) / (2 sigma^2)))^alpha] / (alpha - 1)
// by Simpson quadrature in the log domain (long double), without the
// binomial expansion.
inline double RdpQuadrature(double sigma, double q, double alpha) {
  using LD = long double;
  const LD s = sigma;
  const LD lo = -40.0L * s;
  const LD hi = static_cast<LD>(alpha) + 40.0L * s;
  const LD h = s / 64.0L;
  long n = static_cast<long>(std::ceil((hi - lo) / h));
  if (n % 2) ++n;
  const LD step = (hi - lo) / n;
  const LD log_norm = -std::log(s * std::sqrt(2.0L * 3.14159265358979323846L));
  const LD log_keep = std::log1p(-static_cast<LD>(q));
  const LD log_q = std::log(static_cast<LD>(q));
  std::vector<LD> terms(static_cast<size_t>(n) + 1);
  LD peak = -INFINITY;
  for (long i = 0; i <= n; ++i) {
    const LD z = lo + step * i;
    const LD a = log_keep;
    const LD b = log_q + (2.0L * z - 1.0L) / (2.0L * s * s);
    const LD m = std::max(a, b);
    const LD mix = q >= 1.0 ? b : m + std::log(std::exp(a - m) + std::exp(b - m));
    const LD weight = (i == 0 || i == n) ? 1.0L : (i % 2 ? 4.0L : 2.0L);
    terms[i] = std::log(weight) + log_norm - z * z / (2.0L * s * s) + alpha * mix;
    peak = std::max(peak, terms[i]);
  }
  LD sum = 0.0L;
  for (LD t : terms) sum += std::exp(t - peak);
  const LD log_a = peak + std::log(sum) + std::log(step / 3.0L);
  return static_cast<double>(std::max(0.0L, log_a / (alpha - 1.0L)));
}

// min over integer orders of [T * rdp(alpha) + log(1/delta) / (alpha - 1)].
inline double EpsilonQuadrature(double sigma, double q, int64_t steps,
                                double delta, const std::vector<double>& orders) {
  double best = INFINITY;
  for (double a : orders) {
    if (a != std::floor(a) || a < 2) continue;
    const double eps = steps * RdpQuadrature(sigma, q, a) + std::log(1.0 / delta) / (a - 1.0);
    best = std::min(best, eps);
  }
  return best;
}

}  // namespace dpfl::testutil

#endif  // DPFL_TESTS_TEST_UTIL_H_
