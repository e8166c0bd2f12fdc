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

#ifndef DPFL_DP_H_
#define DPFL_DP_H_

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpfl/models.h"
#include "dpfl/random.h"

namespace dpfl::dp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Parameters of one DP-SGD run. A target of +inf means the no-noise baseline:
// noise_multiplier is 0 and clipping is disabled.
struct DpConfig {
  double clip_norm = 1.0;
  double noise_multiplier = 0.0;
  double sampling_rate = 1.0;
  int64_t steps = 0;
  double delta = 1e-5;
  double target_epsilon = kInfinity;
};

absl::Status ValidateDpConfig(const DpConfig& cfg);

// Sampling rate batch_size / n (capped at 1) and steps
// epochs * ceil(1 / q) for a dataset of n examples.
DpConfig MakeDpConfig(size_t n, int batch_size, int epochs, double clip_norm,
                      double noise_multiplier, double delta,
                      double target_epsilon);

// ceil(1 / q), robust to q being a rounded ratio of integers.
int64_t StepsPerEpoch(double sampling_rate);

struct RdpCurve {
  std::vector<double> orders;
  std::vector<double> values;
};

struct PrivacySpent {
  double epsilon = 0.0;
  double delta = 1e-5;
  // Order at which the (epsilon, delta) conversion was minimized; unset when
  // epsilon is 0 or infinite.
  std::optional<double> optimal_order;
};

// {1.25, 1.5, 1.75, 2, 3, ..., 64, 128, 256}.
const std::vector<double>& DefaultOrders();

// g * min(1, C / ||g||_2).
absl::StatusOr<models::Gradient> ClipGradient(std::span<const double> g,
                                              double clip_norm);

// (sum_i clip(g_i, C) + N(0, sigma^2 C^2 I)) / expected_batch. `dim` is the
// gradient length, needed when the sampled batch is empty. With sigma == 0 no
// random numbers are drawn.
models::Gradient NoisyBatchGradient(std::span<const models::Gradient> per_example,
                                    size_t dim, double clip_norm, double sigma,
                                    int64_t expected_batch,
                                    RandomStream& stream);

// Renyi DP of `steps` compositions of the Poisson-subsampled Gaussian
// mechanism. For q == 1 the value at order a is steps * a / (2 sigma^2); for
// q < 1 the integer-order binomial expansion is used and fractional or
// non-finite orders are dropped.
absl::StatusOr<RdpCurve> RdpSubsampledGaussian(double sigma,
                                               double sampling_rate,
                                               int64_t steps,
                                               std::span<const double> orders);

// eps = min_a [rdp(a) + log(1/delta) / (a - 1)].
PrivacySpent RdpToDp(const RdpCurve& curve, double delta);

// Spend of cfg.steps DP-SGD steps under the default orders. T == 0 gives 0;
// sigma == 0 with T > 0 gives +inf.
absl::StatusOr<PrivacySpent> EpsilonSpent(const DpConfig& cfg);

inline constexpr double kSigmaLowerBracket = 1e-2;
inline constexpr double kSigmaUpperBracket = 1e4;
inline constexpr double kCalibrationSlack = 1e-3;

// Smallest noise multiplier (to within 0.1%) whose spend does not exceed the
// target: EpsilonSpent(sigma) <= target <= EpsilonSpent(sigma * (1 - 1e-3)).
// An infinite target returns 0.
absl::StatusOr<double> CalibrateSigma(double target_epsilon, double delta,
                                      double sampling_rate, int64_t steps);

// Abadi-style DP-SGD. Every step Poisson-samples each example with
// probability q, clips per-example gradients, adds Gaussian noise and takes
// an SGD step; runs epochs * ceil(1/q) steps, which must equal cfg.steps.
// With noise_multiplier == 0 (infinite target) this is exactly TrainSgd with
// batch size round(q * n).
absl::StatusOr<std::pair<models::Model, PrivacySpent>> DpSgdTrain(
    const models::Model& model, const models::Batch& train,
    const DpConfig& cfg, double lr, int epochs, RandomStream& stream);

// A mechanism with finitely many outcomes, given as one outcome distribution
// per dataset, plus the adjacency relation between datasets.
struct DiscreteMechanism {
  std::vector<std::string> datasets;
  std::vector<std::pair<int, int>> adjacency;
  std::vector<std::vector<double>> outcome_dist;  // [dataset][outcome]
};

absl::Status ValidateMechanism(const DiscreteMechanism& m);

inline constexpr int kMaxEnumeratedOutcomes = 20;
// Absolute slack for rounding in probabilities.
inline constexpr double kVerifyTolerance = 1e-12;

struct DpVerification {
  bool holds = false;
  // Worst case over ordered adjacent pairs (from, to) and outcome sets S of
  // Pr[M(from) in S] - e^eps Pr[M(to) in S].
  int from = -1;
  int to = -1;
  std::vector<int> outcome_set;
  double violation = 0.0;  // the maximized quantity; holds iff <= delta
  double closed_form_violation = 0.0;
};

// Checks Pr[M(D) in S] <= e^eps Pr[M(D') in S] + delta for every ordered
// adjacent pair and every subset S of outcomes by explicit enumeration, and
// cross-checks the result against the closed-form maximizer
// S* = {o : p_D(o) > e^eps p_D'(o)}.
absl::StatusOr<DpVerification> VerifyDpEnumeration(const DiscreteMechanism& m,
                                                   double epsilon,
                                                   double delta);

// Closed-form hockey-stick divergence sum_o max(0, p(o) - e^eps q(o)).
double HockeyStick(std::span<const double> p, std::span<const double> q,
                   double epsilon);

}  // namespace dpfl::dp

#endif  // DPFL_DP_H_
