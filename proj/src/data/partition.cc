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
#include "dpfl/data.h"

namespace dpfl::data {

absl::StatusOr<TrainTestSplit> SplitTrainTest(const LabeledCorpus& corpus,
                                              double train_fraction,
                                              uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "train_fraction must lie in (0, 1), got %g", train_fraction));
  }
  if (absl::Status s = ValidateCorpus(corpus); !s.ok()) return s;
  const size_t n = corpus.size();
  // The small bias keeps exact products such as 10 * 0.8 from flooring down.
  const size_t n_train = static_cast<size_t>(
      std::floor(static_cast<double>(n) * train_fraction + 1e-9));
  if (n_train == 0 || n_train == n) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "validation error: splitting %d examples at %g leaves an empty side",
        n, train_fraction));
  }
  RandomStream rng(seed);
  const std::vector<size_t> order = rng.Permutation(n);
  TrainTestSplit split;
  for (LabeledCorpus* side : {&split.train, &split.test}) {
    side->num_categories = corpus.num_categories;
    side->label_names = corpus.label_names;
  }
  split.train.examples.reserve(n_train);
  split.test.examples.reserve(n - n_train);
  for (size_t i = 0; i < n; ++i) {
    (i < n_train ? split.train : split.test)
        .examples.push_back(corpus.examples[order[i]]);
  }
  return split;
}

absl::StatusOr<std::vector<ClientShard>> PartitionIid(
    const LabeledCorpus& train, int num_clients, uint64_t seed) {
  if (num_clients < 1) {
    return absl::InvalidArgumentError("num_clients must be >= 1");
  }
  const size_t n = train.size();
  if (static_cast<size_t>(num_clients) > n) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "validation error: %d clients but only %d training examples",
        num_clients, n));
  }
  RandomStream rng(seed);
  const std::vector<size_t> order = rng.Permutation(n);
  std::vector<ClientShard> shards(num_clients);
  for (int c = 0; c < num_clients; ++c) {
    shards[c].client_id = c;
    shards[c].indices.reserve(n / num_clients + 1);
  }
  for (size_t i = 0; i < n; ++i) {
    shards[i % num_clients].indices.push_back(order[i]);
  }
  return shards;
}

absl::StatusOr<std::vector<ClientShard>> PartitionNonIid(
    const LabeledCorpus& train, const PartitionSpec& spec) {
  if (spec.num_clients < 1 || spec.num_shards < 1 || spec.shard_size < 1 ||
      spec.shards_per_client < 1) {
    return absl::InvalidArgumentError(
        "non-IID partition needs positive num_clients, num_shards, shard_size "
        "and shards_per_client");
  }
  if (static_cast<int64_t>(spec.num_shards) !=
      static_cast<int64_t>(spec.num_clients) * spec.shards_per_client) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "num_shards (%d) must equal num_clients (%d) x shards_per_client (%d)",
        spec.num_shards, spec.num_clients, spec.shards_per_client));
  }
  const size_t n = train.size();
  const size_t covered =
      static_cast<size_t>(spec.num_shards) * static_cast<size_t>(spec.shard_size);
  if (covered > n) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "validation error: %d shards of %d need %d examples, have %d",
        spec.num_shards, spec.shard_size, covered, n));
  }

  std::vector<size_t> sorted(n);
  std::iota(sorted.begin(), sorted.end(), size_t{0});
  std::stable_sort(sorted.begin(), sorted.end(), [&](size_t a, size_t b) {
    return train.examples[a].label < train.examples[b].label;
  });

  std::vector<std::vector<size_t>> shards(spec.num_shards);
  for (size_t s = 0; s < shards.size(); ++s) {
    auto begin = sorted.begin() + s * spec.shard_size;
    shards[s].assign(begin, begin + spec.shard_size);
  }
  for (size_t i = covered; i < n; ++i) {
    shards[(i - covered) % shards.size()].push_back(sorted[i]);
  }

  RandomStream rng(spec.seed);
  const std::vector<size_t> deal = rng.Permutation(shards.size());
  std::vector<ClientShard> clients(spec.num_clients);
  for (int c = 0; c < spec.num_clients; ++c) {
    clients[c].client_id = c;
    for (int k = 0; k < spec.shards_per_client; ++k) {
      const auto& shard = shards[deal[c * spec.shards_per_client + k]];
      clients[c].indices.insert(clients[c].indices.end(), shard.begin(),
                                shard.end());
    }
  }
  return clients;
}

absl::StatusOr<std::vector<ClientShard>> Partition(const LabeledCorpus& train,
                                                   const PartitionSpec& spec) {
  if (spec.mode == PartitionMode::kIid) {
    return PartitionIid(train, spec.num_clients, spec.seed);
  }
  return PartitionNonIid(train, spec);
}

std::vector<std::vector<int>> LabelHistogram(
    const LabeledCorpus& corpus, const std::vector<ClientShard>& shards) {
  std::vector<std::vector<int>> hist(
      shards.size(), std::vector<int>(corpus.num_categories, 0));
  for (size_t c = 0; c < shards.size(); ++c) {
    for (size_t i : shards[c].indices) ++hist[c][corpus.examples[i].label];
  }
  return hist;
}

}  // namespace dpfl::data
