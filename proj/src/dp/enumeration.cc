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
#include <bit>
#include <cmath>
#include <vector>

#include "absl/strings/str_format.h"
#include "dpfl/dp.h"

namespace dpfl::dp {

absl::Status ValidateMechanism(const DiscreteMechanism& m) {
  if (m.datasets.empty() || m.outcome_dist.size() != m.datasets.size()) {
    return absl::InvalidArgumentError(
        "mechanism needs one outcome distribution per dataset");
  }
  const size_t outcomes = m.outcome_dist.front().size();
  if (outcomes == 0) {
    return absl::InvalidArgumentError("mechanism has no outcomes");
  }
  if (outcomes > static_cast<size_t>(kMaxEnumeratedOutcomes)) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "validation error: %d outcomes is too many to enumerate (max %d)",
        outcomes, kMaxEnumeratedOutcomes));
  }
  for (size_t d = 0; d < m.outcome_dist.size(); ++d) {
    const auto& p = m.outcome_dist[d];
    if (p.size() != outcomes) {
      return absl::InvalidArgumentError(
          "all datasets must share the same outcome set");
    }
    double total = 0.0;
    for (double v : p) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        return absl::InvalidArgumentError(absl::StrFormat(
            "dataset '%s' has an invalid probability", m.datasets[d]));
      }
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "dataset '%s' probabilities sum to %.12g", m.datasets[d], total));
    }
  }
  const int n = static_cast<int>(m.datasets.size());
  for (auto [a, b] : m.adjacency) {
    if (a < 0 || a >= n || b < 0 || b >= n) {
      return absl::InvalidArgumentError("adjacency references unknown dataset");
    }
  }
  return absl::OkStatus();
}

double HockeyStick(std::span<const double> p, std::span<const double> q,
                   double epsilon) {
  const double scale = std::exp(epsilon);
  double total = 0.0;
  for (size_t o = 0; o < p.size(); ++o) {
    total += std::max(0.0, p[o] - scale * q[o]);
  }
  return total;
}

absl::StatusOr<DpVerification> VerifyDpEnumeration(const DiscreteMechanism& m,
                                                   double epsilon,
                                                   double delta) {
  if (absl::Status s = ValidateMechanism(m); !s.ok()) return s;
  if (!(epsilon >= 0.0) || !(delta >= 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError("need epsilon >= 0 and delta in [0, 1)");
  }
  const size_t outcomes = m.outcome_dist.front().size();
  const double scale = std::exp(epsilon);
  const uint32_t subsets = uint32_t{1} << outcomes;

  DpVerification result;
  result.violation = -kInfinity;
  result.closed_form_violation = -kInfinity;
  // Every listed pair is checked in both directions.
  for (auto [a, b] : m.adjacency) {
    for (auto [from, to] : {std::pair{a, b}, std::pair{b, a}}) {
      const auto& p = m.outcome_dist[from];
      const auto& q = m.outcome_dist[to];
      // Subset probabilities are built from the subset without its lowest
      // outcome, so each S costs one addition per distribution.
      std::vector<double> pr_from(subsets, 0.0), pr_to(subsets, 0.0);
      double best = 0.0;  // the empty set
      uint32_t best_mask = 0;
      for (uint32_t mask = 1; mask < subsets; ++mask) {
        const int low = std::countr_zero(mask);
        const uint32_t rest = mask & (mask - 1);
        pr_from[mask] = pr_from[rest] + p[low];
        pr_to[mask] = pr_to[rest] + q[low];
        const double v = pr_from[mask] - scale * pr_to[mask];
        if (v > best) {
          best = v;
          best_mask = mask;
        }
      }
      const double closed = HockeyStick(p, q, epsilon);
      if (std::abs(best - closed) > 1e-9) {
        return absl::InternalError(absl::StrFormat(
            "subset sweep (%.17g) disagrees with closed form (%.17g)", best,
            closed));
      }
      if (best > result.violation) {
        result.violation = best;
        result.closed_form_violation = closed;
        result.from = from;
        result.to = to;
        result.outcome_set.clear();
        for (size_t o = 0; o < outcomes; ++o) {
          if (best_mask & (uint32_t{1} << o)) {
            result.outcome_set.push_back(static_cast<int>(o));
          }
        }
      }
    }
  }
  if (m.adjacency.empty()) {
    result.violation = 0.0;
    result.closed_form_violation = 0.0;
  }
  result.holds = result.violation <= delta + kVerifyTolerance;
  return result;
}

}  // namespace dpfl::dp
