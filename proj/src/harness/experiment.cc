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
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>

#include "absl/strings/match.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "dpfl/dp.h"
#include "dpfl/federated.h"
#include "dpfl/harness.h"
#include "dpfl/parallel.h"

namespace dpfl::harness {
namespace {

constexpr uint64_t kInitLabel = 0x696e6974;       // "init"
constexpr uint64_t kTrainLabel = 0x747261696e;    // "train"
constexpr uint64_t kPartitionLabel = 0x70617274;  // "part"
constexpr uint64_t kFederatedLabel = 0x666564;    // "fed"

bool CellLess(const CellKey& a, const CellKey& b) {
  if (a.setup != b.setup) return a.setup < b.setup;
  if (a.epsilon != b.epsilon) return a.epsilon < b.epsilon;
  return a.model < b.model;
}

bool SameCell(const CellKey& a, const CellKey& b) {
  return a.setup == b.setup && a.epsilon == b.epsilon && a.model == b.model;
}

std::string CellName(const CellKey& c) {
  return absl::StrFormat("setup=%s epsilon=%s model=%s", SetupName(c.setup),
                         FormatEpsilon(c.epsilon), models::ModelKindName(c.model));
}

absl::StatusOr<double> TrainCentralized(const ExperimentConfig& cfg,
                                        const PreparedData& data,
                                        const CellKey& cell,
                                        const models::ModelSpec& spec,
                                        const RunSeeds& seeds, double delta) {
  const models::Model init = models::InitModel(spec, seeds.init);
  RandomStream stream(seeds.train);
  absl::StatusOr<models::Model> trained;
  if (cell.setup == Setup::kCentralized) {
    trained = models::TrainSgd(
        init, data.train,
        {cfg.train.lr, cfg.train.epochs, cfg.train.batch_size}, stream);
  } else {
    dp::DpConfig dpc = dp::MakeDpConfig(
        data.train.rows, cfg.train.batch_size, cfg.train.epochs,
        cfg.dp.clip_norm, 0.0, delta, cell.epsilon);
    absl::StatusOr<double> sigma = dp::CalibrateSigma(
        cell.epsilon, delta, dpc.sampling_rate, dpc.steps);
    if (!sigma.ok()) return sigma.status();
    dpc.noise_multiplier = *sigma;
    auto out = dp::DpSgdTrain(init, data.train, dpc, cfg.train.lr,
                              cfg.train.epochs, stream);
    if (!out.ok()) return out.status();
    trained = std::move(out->first);
  }
  if (!trained.ok()) return trained.status();
  return models::Evaluate(*trained, data.test);
}

}  // namespace

absl::string_view DemoConfigText() {
  return R"ini(# Demo benchmark on a bundled synthetic corpus: centralized DP, DP-FL with
# IID shards and DP-FL with label-sorted shards over the epsilon grid
# 0.5, 5, 15, inf. Optimizer settings are desk-scale choices.

[experiment]
setups = centralized-dp, dpfl-iid, dpfl-noniid
epsilons = 0.5, 5, 15, inf
seeds = 1, 2, 3
output_dir = results/demo
threads = 1

[data]
source = synth
train_fraction = 0.8
split_seed = 7
feature_dim = 1024
ngram_max = 1
synth_examples = 2500
synth_categories = 2
synth_latent_dim = 128
synth_separation = 3.5
synth_seed = 2024

[model]
kinds = linear, mlp
hidden_dim = 16

[train]
lr = 1.0
epochs = 5
batch_size = 20

[dp]
clip_norm = 1.0
delta = auto

[fl]
num_clients = 10
fraction = 0.5
rounds = 20
local_epochs = 1
batch_size = 20
lr = 0.5
num_shards = 10
shard_size = 200
shards_per_client = 1
)ini";
}

RunSeeds DeriveRunSeeds(uint64_t seed) {
  return RunSeeds{DeriveSeed(seed, {kInitLabel}),
                  DeriveSeed(seed, {kTrainLabel}),
                  DeriveSeed(seed, {kPartitionLabel}),
                  DeriveSeed(seed, {kFederatedLabel})};
}

absl::StatusOr<PreparedData> PrepareData(const DataConfig& cfg) {
  absl::StatusOr<data::LabeledCorpus> corpus =
      cfg.source == DataSource::kSynth
          ? data::SynthCorpus(cfg.synth_examples, cfg.synth_categories,
                              cfg.synth_latent_dim, cfg.synth_separation,
                              cfg.synth_seed)
          : data::LoadCorpus(cfg.path, {cfg.text_column, cfg.label_column,
                                        cfg.delimiter});
  if (!corpus.ok()) return corpus.status();
  absl::StatusOr<data::TrainTestSplit> split =
      data::SplitTrainTest(*corpus, cfg.train_fraction, cfg.split_seed);
  if (!split.ok()) return split.status();

  PreparedData out;
  const data::FeaturizeOptions fo{cfg.feature_dim, cfg.ngram_max, true};
  absl::StatusOr<models::Batch> train = data::FeaturizeCorpus(split->train, fo);
  if (!train.ok()) return train.status();
  absl::StatusOr<models::Batch> test = data::FeaturizeCorpus(split->test, fo);
  if (!test.ok()) return test.status();
  out.train_corpus = std::move(split->train);
  out.test_corpus = std::move(split->test);
  out.train = *std::move(train);
  out.test = *std::move(test);
  return out;
}

absl::StatusOr<CellRun> RunCell(const ExperimentConfig& cfg,
                                const PreparedData& data, const CellKey& cell,
                                uint64_t seed) {
  models::ModelSpec spec;
  spec.kind = cell.model;
  spec.input_dim = data.train.dim;
  spec.hidden_dim = cell.model == models::ModelKind::kMlp ? cfg.model.hidden_dim : 0;
  spec.num_categories = data.train.num_categories;
  const RunSeeds seeds = DeriveRunSeeds(seed);
  const double delta = ResolveDelta(cfg, data.train.rows);

  if (!SetupUsesDp(cell.setup) && std::isfinite(cell.epsilon)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "setup '", SetupName(cell.setup), "' only runs at epsilon = inf"));
  }

  CellRun run;
  if (!SetupIsFederated(cell.setup)) {
    absl::StatusOr<double> acc =
        TrainCentralized(cfg, data, cell, spec, seeds, delta);
    if (!acc.ok()) return acc.status();
    run.accuracy = *acc;
    return run;
  }

  data::PartitionSpec ps;
  ps.mode = (cell.setup == Setup::kFlIid || cell.setup == Setup::kDpFlIid)
                ? data::PartitionMode::kIid
                : data::PartitionMode::kNonIid;
  ps.num_clients = cfg.fl.num_clients;
  ps.num_shards = cfg.fl.num_shards;
  ps.shard_size = cfg.fl.shard_size;
  ps.shards_per_client = cfg.fl.shards_per_client;
  ps.seed = seeds.partition;
  absl::StatusOr<std::vector<data::ClientShard>> shards =
      data::Partition(data.train_corpus, ps);
  if (!shards.ok()) return shards.status();

  fl::FlConfig fc;
  fc.num_clients = cfg.fl.num_clients;
  fc.fraction = cfg.fl.fraction;
  fc.rounds = cfg.fl.rounds;
  fc.local_epochs = cfg.fl.local_epochs;
  fc.batch_size = cfg.fl.batch_size;
  fc.lr = cfg.fl.lr;
  if (SetupUsesDp(cell.setup)) {
    fc.dp = fl::ClientDpOptions{cfg.dp.clip_norm, delta, cell.epsilon};
  }
  absl::StatusOr<fl::FederatedResult> result = fl::RunFederated(
      data.train, *shards, data.test, spec, fc, seeds.federated);
  if (!result.ok()) return result.status();
  run.accuracy = result->history.back().accuracy;
  run.round_history = fl::FormatRoundHistory(result->history);
  return run;
}

std::vector<ResultRow> AggregateRows(const std::vector<SeedAccuracy>& raw) {
  std::vector<SeedAccuracy> sorted = raw;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const SeedAccuracy& a, const SeedAccuracy& b) {
                     return CellLess(a.cell, b.cell);
                   });
  std::vector<ResultRow> rows;
  for (size_t i = 0; i < sorted.size();) {
    size_t j = i;
    while (j < sorted.size() && SameCell(sorted[i].cell, sorted[j].cell)) ++j;
    // Deviations from the first value keep identical runs at exactly zero
    // spread and the mean exactly equal to the shared value.
    const double base = 100.0 * sorted[i].accuracy;
    const double n = static_cast<double>(j - i);
    double sum = 0.0, sum_sq = 0.0;
    for (size_t k = i; k < j; ++k) {
      const double d = 100.0 * sorted[k].accuracy - base;
      sum += d;
      sum_sq += d * d;
    }
    const double mean_dev = sum / n;
    ResultRow row;
    row.setup = sorted[i].cell.setup;
    row.epsilon = sorted[i].cell.epsilon;
    row.model = sorted[i].cell.model;
    row.mean_accuracy = base + mean_dev;
    row.std_accuracy = std::sqrt(std::max(0.0, sum_sq / n - mean_dev * mean_dev));
    row.n_seeds = static_cast<int>(j - i);
    row.delta = sorted[i].delta;
    rows.push_back(row);
    i = j;
  }
  return rows;
}

absl::StatusOr<ExperimentResult> RunExperiment(const ExperimentConfig& cfg) {
  absl::StatusOr<PreparedData> data = PrepareData(cfg.data);
  if (!data.ok()) return data.status();
  return RunExperiment(cfg, *data);
}

absl::StatusOr<ExperimentResult> RunExperiment(const ExperimentConfig& cfg,
                                               const PreparedData& data) {
  std::vector<CellKey> cells;
  for (Setup s : cfg.setups) {
    for (double e : cfg.epsilons) {
      for (models::ModelKind k : cfg.model.kinds) cells.push_back({s, e, k});
    }
  }
  std::sort(cells.begin(), cells.end(), CellLess);
  const size_t num_seeds = cfg.seeds.size();
  const size_t jobs = cells.size() * num_seeds;
  const double delta = ResolveDelta(cfg, data.train.rows);

  struct JobResult {
    absl::StatusOr<CellRun> run = absl::UnknownError("not run");
    double seconds = 0.0;
    bool skipped = true;
  };
  std::vector<JobResult> results(jobs);
  std::atomic<bool> failed{false};
  ParallelFor(jobs, cfg.threads, [&](size_t job) {
    if (failed.load()) return;
    const CellKey& cell = cells[job / num_seeds];
    const uint64_t seed = cfg.seeds[job % num_seeds];
    const auto start = std::chrono::steady_clock::now();
    results[job].run = RunCell(cfg, data, cell, seed);
    results[job].seconds = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - start)
                               .count();
    results[job].skipped = false;
    if (!results[job].run.ok()) failed.store(true);
  });

  ExperimentResult out;
  out.config_digest = ConfigDigest(cfg);
  out.label_mapping = data::FormatLabelMapping(data.train_corpus);
  std::vector<double> cell_seconds;
  for (size_t c = 0; c < cells.size(); ++c) {
    bool complete = true;
    double seconds = 0.0;
    for (size_t s = 0; s < num_seeds; ++s) {
      const JobResult& r = results[c * num_seeds + s];
      if (r.skipped || !r.run.ok()) {
        complete = false;
        if (!r.skipped && out.status.ok()) {
          out.status = absl::Status(
              r.run.status().code(),
              absl::StrFormat("cell (%s seed=%d) failed: %s", CellName(cells[c]),
                              cfg.seeds[s], r.run.status().message()));
        }
      }
    }
    if (!complete) continue;
    for (size_t s = 0; s < num_seeds; ++s) {
      const JobResult& r = results[c * num_seeds + s];
      seconds += r.seconds;
      out.raw.push_back({cells[c], cfg.seeds[s], r.run->accuracy, delta});
      for (absl::string_view line : absl::StrSplit(r.run->round_history, '\n')) {
        if (line.empty() || absl::StartsWith(line, "round,")) continue;
        absl::StrAppend(&out.round_history, SetupName(cells[c].setup), ",",
                        FormatEpsilon(cells[c].epsilon), ",",
                        models::ModelKindName(cells[c].model), ",",
                        cfg.seeds[s], ",", line, "\n");
      }
    }
    cell_seconds.push_back(seconds);
  }
  out.rows = AggregateRows(out.raw);
  for (size_t i = 0; i < out.rows.size(); ++i) {
    out.rows[i].wall_time_s = cell_seconds[i];
  }
  return out;
}

}  // namespace dpfl::harness
