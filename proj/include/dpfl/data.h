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

#ifndef DPFL_DATA_H_
#define DPFL_DATA_H_

#include <cstdint>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "dpfl/models.h"

namespace dpfl::data {

struct LabeledExample {
  std::string text;
  int label = 0;
};

// Texts with 0-based category labels. `label_names[i]` is the original label
// string of category i; example order is significant.
struct LabeledCorpus {
  std::vector<LabeledExample> examples;
  int num_categories = 0;
  std::vector<std::string> label_names;

  size_t size() const { return examples.size(); }
};

// Checks the corpus invariants: non-empty, num_categories >= 2, every label in
// range.
absl::Status ValidateCorpus(const LabeledCorpus& corpus);

struct CsvOptions {
  std::string text_column = "text";
  std::string label_column = "label";
  char delimiter = ',';
};

// Reads a delimiter-separated UTF-8 file with a header row. Fields may be
// double-quoted; quotes inside quoted fields are doubled. Labels are mapped to
// category indices in order of first appearance.
absl::StatusOr<LabeledCorpus> LoadCorpus(const std::string& path,
                                         const CsvOptions& options = {});
absl::StatusOr<LabeledCorpus> ParseCorpus(absl::string_view contents,
                                          const CsvOptions& options = {});

// One "index<TAB>label" pair per line.
std::string FormatLabelMapping(const LabeledCorpus& corpus);
absl::Status WriteLabelMapping(const LabeledCorpus& corpus,
                               const std::string& path);

// Lowercases ASCII, strips '#', @-mentions and URLs, collapses whitespace.
// Idempotent.
std::string CleanText(absl::string_view raw);

// Hashing-trick feature vector over word n-grams (n <= ngram_max). Each n-gram
// is hashed with FNV-1a-64 followed by the SplitMix64 finalizer; the index is
// hash mod feature_dim and bit 63 chooses the sign. The signed counts are
// L2-normalized when nonzero.
std::vector<double> Featurize(absl::string_view text, int feature_dim,
                              int ngram_max);

// The raw 64-bit hash used by Featurize for one n-gram ("a" or "a b").
uint64_t NgramHash(absl::string_view ngram);

struct FeaturizeOptions {
  int feature_dim = 256;
  int ngram_max = 1;
  bool clean = true;
};

// Cleans (optionally) and featurizes every example into a dense batch.
absl::StatusOr<models::Batch> FeaturizeCorpus(const LabeledCorpus& corpus,
                                              const FeaturizeOptions& options);

struct TrainTestSplit {
  LabeledCorpus train;
  LabeledCorpus test;
};

// Uniform shuffle under `seed`; the first floor(n * train_fraction) shuffled
// examples form the training set.
absl::StatusOr<TrainTestSplit> SplitTrainTest(const LabeledCorpus& corpus,
                                              double train_fraction,
                                              uint64_t seed);

enum class PartitionMode { kIid, kNonIid };

struct PartitionSpec {
  PartitionMode mode = PartitionMode::kIid;
  int num_clients = 10;
  int num_shards = 10;
  int shard_size = 240;
  int shards_per_client = 1;
  uint64_t seed = 0;
};

struct ClientShard {
  int client_id = 0;
  std::vector<size_t> indices;
};

// Round-robin over a seeded shuffle; shard sizes differ by at most one.
absl::StatusOr<std::vector<ClientShard>> PartitionIid(
    const LabeledCorpus& train, int num_clients, uint64_t seed);

// Label-sorted shards dealt to clients by a seeded permutation. Examples past
// num_shards * shard_size are appended one per shard starting at shard 0.
absl::StatusOr<std::vector<ClientShard>> PartitionNonIid(
    const LabeledCorpus& train, const PartitionSpec& spec);

// Dispatches on spec.mode.
absl::StatusOr<std::vector<ClientShard>> Partition(const LabeledCorpus& train,
                                                   const PartitionSpec& spec);

// Gaussian blobs rendered as pseudo-token texts. Category c is centred at
// `separation` along latent axis c; each latent coordinate is quantized to
// half-units and emitted as that many "p<j>" (positive) or "n<j>" (negative)
// tokens. Requires num_categories <= latent_dim.
absl::StatusOr<LabeledCorpus> SynthCorpus(int num_examples, int num_categories,
                                          int latent_dim, double separation,
                                          uint64_t seed);

// Per-client label histogram, histogram[client][category].
std::vector<std::vector<int>> LabelHistogram(
    const LabeledCorpus& corpus, const std::vector<ClientShard>& shards);

}  // namespace dpfl::data

#endif  // DPFL_DATA_H_
