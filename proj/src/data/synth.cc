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

#include <cmath>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dpfl/data.h"

namespace dpfl::data {

absl::StatusOr<LabeledCorpus> SynthCorpus(int num_examples, int num_categories,
                                          int latent_dim, double separation,
                                          uint64_t seed) {
  if (num_categories < 2) {
    return absl::InvalidArgumentError("synthetic corpus needs >= 2 categories");
  }
  if (num_examples < num_categories) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "validation error: %d examples cannot cover %d categories",
        num_examples, num_categories));
  }
  if (latent_dim < num_categories) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "latent_dim (%d) must be >= num_categories (%d)", latent_dim,
        num_categories));
  }
  if (!(separation >= 0.0) || !std::isfinite(separation)) {
    return absl::InvalidArgumentError("separation must be finite and >= 0");
  }

  RandomStream rng(seed);
  // Balanced labels in a shuffled order.
  std::vector<int> labels(num_examples);
  for (int i = 0; i < num_examples; ++i) labels[i] = i % num_categories;
  rng.Shuffle(std::span<int>(labels));

  LabeledCorpus corpus;
  corpus.num_categories = num_categories;
  for (int c = 0; c < num_categories; ++c) {
    corpus.label_names.push_back(absl::StrCat("c", c));
  }
  corpus.examples.reserve(num_examples);
  for (int i = 0; i < num_examples; ++i) {
    const int y = labels[i];
    std::string text;
    for (int j = 0; j < latent_dim; ++j) {
      const double z = rng.Normal() + (j == y ? separation : 0.0);
      const long count = std::lround(2.0 * z);
      const char* tag = count > 0 ? "p" : "n";
      for (long r = 0; r < std::labs(count); ++r) {
        if (!text.empty()) text.push_back(' ');
        absl::StrAppend(&text, tag, j);
      }
    }
    corpus.examples.push_back({std::move(text), y});
  }
  return corpus;
}

}  // namespace dpfl::data
