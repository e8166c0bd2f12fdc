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

absl::Status ValidateAccounting(double sigma, double q, int64_t steps,
                                double delta) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    return absl::InvalidArgumentError("noise multiplier must be finite and >= 0");
  }
  if (!(q > 0.0 && q <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("sampling rate must lie in (0, 1], got %g", q));
  }
  if (steps < 0) return absl::InvalidArgumentError("steps must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("delta must lie in (0, 1), got %g", delta));
  }
  return absl::OkStatus();
}

double LogAdd(double a, double b) {
  if (a == -kInfinity) return b;
  if (b == -kInfinity) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

double LogBinomial(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// Per-step RDP of the subsampled Gaussian at integer order `alpha`:
//   log( sum_k C(a,k) (1-q)^(a-k) q^k exp((k^2 - k) / (2 sigma^2)) ) / (a-1)
double SubsampledGaussianRdpInt(double sigma, double q, int64_t alpha) {
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  double log_a = -kInfinity;
  for (int64_t k = 0; k <= alpha; ++k) {
    const double kd = static_cast<double>(k);
    const double term = LogBinomial(static_cast<double>(alpha), kd) +
                        static_cast<double>(alpha - k) * log_1mq + kd * log_q +
                        (kd * kd - kd) * inv_two_var;
    log_a = LogAdd(log_a, term);
  }
  return log_a / static_cast<double>(alpha - 1);
}

}  // namespace

absl::Status ValidateDpConfig(const DpConfig& cfg) {
  if (!(cfg.clip_norm > 0.0) || !std::isfinite(cfg.clip_norm)) {
    return absl::InvalidArgumentError("clip norm must be finite and > 0");
  }
  if (absl::Status s = ValidateAccounting(cfg.noise_multiplier,
                                          cfg.sampling_rate, cfg.steps,
                                          cfg.delta);
      !s.ok()) {
    return s;
  }
  if (!(cfg.target_epsilon > 0.0)) {
    return absl::InvalidArgumentError(
        "target epsilon must be > 0 or infinite");
  }
  if (std::isinf(cfg.target_epsilon) != (cfg.noise_multiplier == 0.0)) {
    return absl::InvalidArgumentError(
        "an infinite target epsilon requires noise multiplier 0 and vice "
        "versa");
  }
  return absl::OkStatus();
}

int64_t StepsPerEpoch(double sampling_rate) {
  return static_cast<int64_t>(std::ceil(1.0 / sampling_rate - 1e-9));
}

DpConfig MakeDpConfig(size_t n, int batch_size, int epochs, double clip_norm,
                      double noise_multiplier, double delta,
                      double target_epsilon) {
  DpConfig cfg;
  cfg.clip_norm = clip_norm;
  cfg.noise_multiplier = noise_multiplier;
  cfg.sampling_rate = std::min(
      1.0, static_cast<double>(batch_size) / static_cast<double>(n));
  cfg.steps = static_cast<int64_t>(epochs) * StepsPerEpoch(cfg.sampling_rate);
  cfg.delta = delta;
  cfg.target_epsilon = target_epsilon;
  return cfg;
}

const std::vector<double>& DefaultOrders() {
  static const std::vector<double>* orders = [] {
    auto* v = new std::vector<double>{1.25, 1.5, 1.75};
    for (int a = 2; a <= 64; ++a) v->push_back(a);
    v->push_back(128);
    v->push_back(256);
    return v;
  }();
  return *orders;
}

absl::StatusOr<RdpCurve> RdpSubsampledGaussian(double sigma,
                                               double sampling_rate,
                                               int64_t steps,
                                               std::span<const double> orders) {
  if (!(sigma > 0.0)) {
    return absl::InvalidArgumentError("RDP accounting needs sigma > 0");
  }
  if (absl::Status s = ValidateAccounting(sigma, sampling_rate, steps, 0.5);
      !s.ok()) {
    return s;
  }
  std::vector<double> sorted(orders.begin(), orders.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  RdpCurve curve;
  const double t = static_cast<double>(steps);
  for (double alpha : sorted) {
    if (!(alpha > 1.0) || !std::isfinite(alpha)) continue;
    double value;
    if (sampling_rate == 1.0) {
      value = t * alpha / (2.0 * sigma * sigma);
    } else {
      if (alpha != std::floor(alpha)) continue;
      const double per_step = SubsampledGaussianRdpInt(
          sigma, sampling_rate, static_cast<int64_t>(alpha));
      value = t * std::max(0.0, per_step);
    }
    if (!std::isfinite(value)) continue;
    curve.orders.push_back(alpha);
    curve.values.push_back(value);
  }
  if (curve.orders.empty()) {
    return absl::FailedPreconditionError(
        "accounting error: no usable RDP order (q < 1 needs integer orders)");
  }
  return curve;
}

PrivacySpent RdpToDp(const RdpCurve& curve, double delta) {
  PrivacySpent spent{kInfinity, delta, std::nullopt};
  const double log_inv_delta = -std::log(delta);
  for (size_t i = 0; i < curve.orders.size(); ++i) {
    const double eps =
        curve.values[i] + log_inv_delta / (curve.orders[i] - 1.0);
    if (eps < spent.epsilon) {
      spent.epsilon = eps;
      spent.optimal_order = curve.orders[i];
    }
  }
  return spent;
}

absl::StatusOr<PrivacySpent> EpsilonSpent(const DpConfig& cfg) {
  if (absl::Status s = ValidateAccounting(
          cfg.noise_multiplier, cfg.sampling_rate, cfg.steps, cfg.delta);
      !s.ok()) {
    return s;
  }
  if (cfg.steps == 0) return PrivacySpent{0.0, cfg.delta, std::nullopt};
  if (cfg.noise_multiplier == 0.0) {
    return PrivacySpent{kInfinity, cfg.delta, std::nullopt};
  }
  absl::StatusOr<RdpCurve> curve =
      RdpSubsampledGaussian(cfg.noise_multiplier, cfg.sampling_rate, cfg.steps,
                            DefaultOrders());
  if (!curve.ok()) return curve.status();
  return RdpToDp(*curve, cfg.delta);
}

// Geometric bisection on sigma; the spend is strictly decreasing in sigma.
absl::StatusOr<double> CalibrateSigma(double target_epsilon, double delta,
                                      double sampling_rate, int64_t steps) {
  if (std::isinf(target_epsilon) && target_epsilon > 0) return 0.0;
  if (!(target_epsilon > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("target epsilon must be > 0, got %g", target_epsilon));
  }
  if (steps < 1) {
    return absl::InvalidArgumentError("calibration needs steps >= 1");
  }
  auto spend = [&](double sigma) -> absl::StatusOr<double> {
    DpConfig cfg;
    cfg.noise_multiplier = sigma;
    cfg.sampling_rate = sampling_rate;
    cfg.steps = steps;
    cfg.delta = delta;
    absl::StatusOr<PrivacySpent> s = EpsilonSpent(cfg);
    if (!s.ok()) return s.status();
    return s->epsilon;
  };

  double lo = kSigmaLowerBracket;
  double hi = kSigmaUpperBracket;
  absl::StatusOr<double> eps_hi = spend(hi);
  if (!eps_hi.ok()) return eps_hi.status();
  if (*eps_hi > target_epsilon) {
    return absl::OutOfRangeError(absl::StrFormat(
        "calibration error: epsilon %g unreachable for sigma in [%g, %g] "
        "(spend at sigma=%g is %g)",
        target_epsilon, lo, hi, hi, *eps_hi));
  }
  absl::StatusOr<double> eps_lo = spend(lo);
  if (!eps_lo.ok()) return eps_lo.status();
  if (*eps_lo <= target_epsilon) {
    return absl::OutOfRangeError(absl::StrFormat(
        "calibration error: epsilon %g is not binding for sigma in [%g, %g] "
        "(spend at sigma=%g is already %g)",
        target_epsilon, lo, hi, lo, *eps_lo));
  }
  while (hi * (1.0 - kCalibrationSlack) > lo) {
    const double mid = std::sqrt(lo * hi);
    absl::StatusOr<double> eps_mid = spend(mid);
    if (!eps_mid.ok()) return eps_mid.status();
    if (*eps_mid <= target_epsilon) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace dpfl::dp
