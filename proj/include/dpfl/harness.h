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

#ifndef DPFL_HARNESS_H_
#define DPFL_HARNESS_H_

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "dpfl/data.h"
#include "dpfl/models.h"

namespace dpfl::harness {

// Experiment setups. The DP variants sweep the epsilon grid; the plain ones
// only run at epsilon = inf.
enum class Setup {
  kCentralized,
  kCentralizedDp,
  kFlIid,
  kFlNonIid,
  kDpFlIid,
  kDpFlNonIid,
};

absl::string_view SetupName(Setup setup);
absl::StatusOr<Setup> ParseSetup(absl::string_view name);
// Row-group label used in the markdown table.
absl::string_view SetupGroupLabel(Setup setup);
bool SetupUsesDp(Setup setup);
bool SetupIsFederated(Setup setup);

enum class DataSource { kSynth, kFile };

struct DataConfig {
  DataSource source = DataSource::kSynth;
  std::string path;
  std::string text_column = "text";
  std::string label_column = "label";
  char delimiter = ',';
  double train_fraction = 0.8;
  uint64_t split_seed = 1;
  int feature_dim = 1024;
  int ngram_max = 1;
  int synth_examples = 2500;
  int synth_categories = 2;
  int synth_latent_dim = 128;
  double synth_separation = 3.5;
  uint64_t synth_seed = 2024;
};

struct ModelConfig {
  std::vector<models::ModelKind> kinds = {models::ModelKind::kLinear};
  int hidden_dim = 16;
};

// Centralized training hyperparameters (not taken from any published setup).
struct TrainConfig {
  double lr = 1.0;
  int epochs = 5;
  int batch_size = 20;
};

struct DpSection {
  double clip_norm = 1.0;
  // Unset means min(1e-5, 1 / (2 * train size)).
  std::optional<double> delta;
};

struct FlSection {
  int num_clients = 10;
  double fraction = 0.5;
  int rounds = 20;
  int local_epochs = 1;
  int batch_size = 20;
  double lr = 0.5;
  int num_shards = 10;
  int shard_size = 240;
  int shards_per_client = 1;
};

struct ExperimentConfig {
  DataConfig data;
  ModelConfig model;
  TrainConfig train;
  DpSection dp;
  FlSection fl;
  std::vector<Setup> setups = {Setup::kCentralized};
  std::vector<double> epsilons = {std::numeric_limits<double>::infinity()};
  std::vector<uint64_t> seeds = {1, 2, 3};
  std::string output_dir = "results";
  int threads = 1;
};

// INI-style grammar, see docs/config.md. Errors name the offending line.
absl::StatusOr<ExperimentConfig> ParseConfigText(absl::string_view text);
absl::StatusOr<ExperimentConfig> ParseConfig(const std::string& path);

// The bundled demo experiment ("run --config demo").
absl::string_view DemoConfigText();

// Canonical text with every key spelled out; parses back to the same config.
std::string ResolvedConfigText(const ExperimentConfig& cfg);
// 16 hex digits of FNV-1a-64 over ResolvedConfigText.
std::string ConfigDigest(const ExperimentConfig& cfg);

double ResolveDelta(const ExperimentConfig& cfg, size_t train_size);

// Shortest round-trip decimal, "inf" for infinity.
std::string FormatEpsilon(double epsilon);

// Loaded, split and featurized data shared by all cells.
struct PreparedData {
  data::LabeledCorpus train_corpus;
  data::LabeledCorpus test_corpus;
  models::Batch train;
  models::Batch test;
};

absl::StatusOr<PreparedData> PrepareData(const DataConfig& cfg);

// Streams derived from one run seed.
struct RunSeeds {
  uint64_t init = 0;
  uint64_t train = 0;
  uint64_t partition = 0;
  uint64_t federated = 0;
};
RunSeeds DeriveRunSeeds(uint64_t seed);

struct CellKey {
  Setup setup = Setup::kCentralized;
  double epsilon = 0.0;
  models::ModelKind model = models::ModelKind::kLinear;
};

struct SeedAccuracy {
  CellKey cell;
  uint64_t seed = 0;
  double accuracy = 0.0;  // fraction in [0, 1]
  double delta = 0.0;
};

struct ResultRow {
  Setup setup = Setup::kCentralized;
  double epsilon = 0.0;
  models::ModelKind model = models::ModelKind::kLinear;
  double mean_accuracy = 0.0;  // percent
  double std_accuracy = 0.0;   // percent, population
  int n_seeds = 0;
  double delta = 0.0;
  double wall_time_s = 0.0;
};

struct CellRun {
  double accuracy = 0.0;
  std::string round_history;  // federated setups only
};

// One (setup, epsilon, model) cell for one seed.
absl::StatusOr<CellRun> RunCell(const ExperimentConfig& cfg,
                                const PreparedData& data, const CellKey& cell,
                                uint64_t seed);

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<SeedAccuracy> raw;
  std::string round_history;
  std::string label_mapping;  // "index<TAB>label" lines
  std::string config_digest;
  // First cell failure, if any; `rows` then holds the completed cells.
  absl::Status status;
};

// Runs setups x epsilons x models once per seed and aggregates per cell.
absl::StatusOr<ExperimentResult> RunExperiment(const ExperimentConfig& cfg);
absl::StatusOr<ExperimentResult> RunExperiment(const ExperimentConfig& cfg,
                                               const PreparedData& data);

// Mean and population standard deviation of accuracies in percent, ordered
// by (setup, epsilon with inf last, model).
std::vector<ResultRow> AggregateRows(const std::vector<SeedAccuracy>& raw);

enum class TableFormat { kMarkdown, kCsv };

std::string FormatTable(const std::vector<ResultRow>& rows, TableFormat format,
                        absl::string_view digest);
std::string FormatPlotData(const std::vector<ResultRow>& rows,
                           absl::string_view digest);
std::string FormatRawAccuracies(const std::vector<SeedAccuracy>& raw,
                                absl::string_view digest);

struct RawLog {
  std::string digest;
  std::vector<SeedAccuracy> entries;
};
absl::StatusOr<RawLog> ParseRawAccuracies(absl::string_view text);

absl::Status EmitTable(const std::vector<ResultRow>& rows, TableFormat format,
                       absl::string_view digest, const std::string& path);

// Writes results.md, results.csv, plot.csv, raw_accuracies.csv,
// round_history.csv, label_mapping.tsv and resolved_config into `dir`,
// creating it if needed.
absl::Status WriteOutputs(const ExperimentConfig& cfg,
                          const ExperimentResult& result,
                          const std::string& dir);

}  // namespace dpfl::harness

#endif  // DPFL_HARNESS_H_
