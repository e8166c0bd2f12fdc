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

#include "dpfl/cli.h"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "dpfl/data.h"
#include "dpfl/dp.h"
#include "dpfl/harness.h"
#include "json.hpp"

namespace dpfl {
namespace {

using harness::FormatEpsilon;

absl::StatusOr<double> ParseReal(const std::string& text) {
  if (text == "inf" || text == "infinity" || text == "∞") return dp::kInfinity;
  try {
    size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  return absl::InvalidArgumentError("not a number: '" + text + "'");
}

absl::Status CmdRun(const std::string& config_path,
                    const std::string& output_dir, int threads,
                    std::ostream& out, std::ostream& err) {
  absl::StatusOr<harness::ExperimentConfig> cfg = harness::ParseConfig(config_path);
  if (!cfg.ok()) return cfg.status();
  if (!output_dir.empty()) cfg->output_dir = output_dir;
  if (threads > 0) cfg->threads = threads;
  absl::StatusOr<harness::ExperimentResult> result = harness::RunExperiment(*cfg);
  if (!result.ok()) return result.status();
  // Completed cells are written even when a later cell failed.
  absl::Status written = harness::WriteOutputs(*cfg, *result, cfg->output_dir);
  if (!written.ok()) return written;
  for (const harness::ResultRow& row : result->rows) {
    err << absl::StrFormat("cell %s epsilon=%s model=%s: %.2f%% in %.1f s\n",
                           harness::SetupName(row.setup),
                           FormatEpsilon(row.epsilon),
                           models::ModelKindName(row.model), row.mean_accuracy,
                           row.wall_time_s);
  }
  out << harness::FormatTable(result->rows, harness::TableFormat::kMarkdown,
                              result->config_digest);
  out << "wrote " << cfg->output_dir << "\n";
  return result->status;
}

absl::Status CmdTable(const std::string& raw_path, const std::string& format,
                      const std::string& output, std::ostream& out) {
  std::ifstream in(raw_path, std::ios::binary);
  if (!in) return absl::NotFoundError("cannot open " + raw_path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  absl::StatusOr<harness::RawLog> log = harness::ParseRawAccuracies(buffer.str());
  if (!log.ok()) return log.status();
  const harness::TableFormat fmt = format == "csv" ? harness::TableFormat::kCsv
                                                   : harness::TableFormat::kMarkdown;
  const std::vector<harness::ResultRow> rows = harness::AggregateRows(log->entries);
  if (!output.empty()) return harness::EmitTable(rows, fmt, log->digest, output);
  out << harness::FormatTable(rows, fmt, log->digest);
  return absl::OkStatus();
}

absl::Status CmdCalibrate(const std::string& epsilon_text, double delta,
                          double q, int64_t steps, std::ostream& out) {
  absl::StatusOr<double> epsilon = ParseReal(epsilon_text);
  if (!epsilon.ok()) return epsilon.status();
  absl::StatusOr<double> sigma = dp::CalibrateSigma(*epsilon, delta, q, steps);
  if (!sigma.ok()) return sigma.status();
  std::string order = "none";
  if (*sigma > 0.0) {
    dp::DpConfig cfg;
    cfg.noise_multiplier = *sigma;
    cfg.sampling_rate = q;
    cfg.steps = steps;
    cfg.delta = delta;
    cfg.target_epsilon = *epsilon;
    absl::StatusOr<dp::PrivacySpent> spent = dp::EpsilonSpent(cfg);
    if (!spent.ok()) return spent.status();
    if (spent->optimal_order) order = FormatEpsilon(*spent->optimal_order);
  }
  out << "sigma,optimal_order\n" << absl::StrFormat("%.17g", *sigma) << ","
      << order << "\n";
  return absl::OkStatus();
}

struct PartitionArgs {
  std::string corpus;
  std::string text_column = "text";
  std::string label_column = "label";
  int synth_examples = 2500;
  int synth_categories = 2;
  uint64_t synth_seed = 1;
  std::string mode = "iid";
  int clients = 10;
  int num_shards = 10;
  int shard_size = 240;
  int shards_per_client = 1;
  uint64_t seed = 1;
  double train_fraction = 1.0;
  uint64_t split_seed = 1;
};

absl::Status CmdPartitionStats(const PartitionArgs& a, std::ostream& out) {
  absl::StatusOr<data::LabeledCorpus> corpus =
      a.corpus.empty()
          ? data::SynthCorpus(a.synth_examples, a.synth_categories,
                              std::max(16, a.synth_categories), 5.0,
                              a.synth_seed)
          : data::LoadCorpus(a.corpus, {a.text_column, a.label_column, ','});
  if (!corpus.ok()) return corpus.status();
  if (a.train_fraction < 1.0) {
    absl::StatusOr<data::TrainTestSplit> split =
        data::SplitTrainTest(*corpus, a.train_fraction, a.split_seed);
    if (!split.ok()) return split.status();
    corpus = std::move(split->train);
  }
  data::PartitionSpec spec;
  if (a.mode == "iid") {
    spec.mode = data::PartitionMode::kIid;
  } else if (a.mode == "noniid") {
    spec.mode = data::PartitionMode::kNonIid;
  } else {
    return absl::InvalidArgumentError("unknown mode '" + a.mode + "'");
  }
  spec.num_clients = a.clients;
  spec.num_shards = a.num_shards;
  spec.shard_size = a.shard_size;
  spec.shards_per_client = a.shards_per_client;
  spec.seed = a.seed;
  absl::StatusOr<std::vector<data::ClientShard>> shards =
      data::Partition(*corpus, spec);
  if (!shards.ok()) return shards.status();
  const std::vector<std::vector<int>> hist = data::LabelHistogram(*corpus, *shards);

  out << "# examples: " << corpus->size()
      << "; label order: " << absl::StrJoin(corpus->label_names, ";") << "\n";
  out << "client,size,label_histogram\n";
  std::map<size_t, int, std::greater<>> size_counts;
  for (size_t c = 0; c < shards->size(); ++c) {
    const size_t n = (*shards)[c].indices.size();
    ++size_counts[n];
    out << (*shards)[c].client_id << "," << n << ","
        << absl::StrJoin(hist[c], ";") << "\n";
  }
  std::vector<std::string> summary;
  for (const auto& [n, count] : size_counts) {
    summary.push_back(absl::StrCat(n, "x", count));
  }
  out << "# sizes: " << absl::StrJoin(summary, " ") << "\n";
  return absl::OkStatus();
}

absl::Status CmdVerifyDp(const std::string& path, std::ostream& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError("cannot open " + path);
  dp::DiscreteMechanism m;
  double epsilon = 0.0, delta = 0.0;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    const nlohmann::json& e = j.at("epsilon");
    epsilon = e.is_string() ? ParseReal(e.get<std::string>()).value_or(-1.0)
                            : e.get<double>();
    delta = j.value("delta", 0.0);
    m.datasets = j.at("datasets").get<std::vector<std::string>>();
    m.adjacency = j.at("adjacency").get<std::vector<std::pair<int, int>>>();
    m.outcome_dist = j.at("outcome_dist").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& ex) {
    return absl::InvalidArgumentError(absl::StrCat("fixture ", path, ": ", ex.what()));
  }
  absl::StatusOr<dp::DpVerification> v = dp::VerifyDpEnumeration(m, epsilon, delta);
  if (!v.ok()) return v.status();
  out << "holds,violation,from,to,outcome_set\n"
      << (v->holds ? "true" : "false") << ","
      << absl::StrFormat("%.17g", v->violation) << ","
      << (v->from >= 0 ? m.datasets[v->from] : "-") << ","
      << (v->to >= 0 ? m.datasets[v->to] : "-") << ","
      << absl::StrJoin(v->outcome_set, ";") << "\n";
  return absl::OkStatus();
}

}  // namespace

int ExitCodeFor(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kOk:
      return 0;
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kOutOfRange:
    case absl::StatusCode::kNotFound:
    case absl::StatusCode::kFailedPrecondition:
      return 1;
    default:
      return 2;
  }
}

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Benchmark of differentially private and federated text "
               "classification"};
  app.require_subcommand(1);

  std::string config_path, output_dir;
  int threads = 0;
  CLI::App* run = app.add_subcommand("run", "Run an experiment grid");
  run->add_option("--config", config_path, "Config file, or 'demo'")->required();
  run->add_option("--output-dir", output_dir, "Overrides experiment.output_dir");
  run->add_option("--threads", threads, "Overrides experiment.threads");

  std::string raw_path, format = "markdown", table_output;
  CLI::App* table = app.add_subcommand("table", "Re-aggregate a raw accuracy log");
  table->add_option("--raw", raw_path, "raw_accuracies.csv")->required();
  table->add_option("--format", format)->check(CLI::IsMember({"markdown", "csv"}));
  table->add_option("--output", table_output, "Write to file instead of stdout");

  std::string epsilon_text;
  double delta = 1e-5, q = 1.0;
  int64_t steps = 0;
  CLI::App* calibrate = app.add_subcommand("calibrate", "Noise multiplier for a target epsilon");
  calibrate->add_option("--epsilon", epsilon_text, "Target epsilon or 'inf'")->required();
  calibrate->add_option("--delta", delta);
  calibrate->add_option("--sampling-rate", q)->required();
  calibrate->add_option("--steps", steps)->required();

  PartitionArgs pa;
  CLI::App* stats = app.add_subcommand("partition-stats", "Client shard sizes and label histograms");
  stats->add_option("--corpus", pa.corpus, "CSV corpus; synthetic data when omitted");
  stats->add_option("--text-column", pa.text_column);
  stats->add_option("--label-column", pa.label_column);
  stats->add_option("--synth-examples", pa.synth_examples);
  stats->add_option("--synth-categories", pa.synth_categories);
  stats->add_option("--synth-seed", pa.synth_seed);
  stats->add_option("--mode", pa.mode)->check(CLI::IsMember({"iid", "noniid"}));
  stats->add_option("--clients", pa.clients);
  stats->add_option("--num-shards", pa.num_shards);
  stats->add_option("--shard-size", pa.shard_size);
  stats->add_option("--shards-per-client", pa.shards_per_client);
  stats->add_option("--seed", pa.seed);
  stats->add_option("--train-fraction", pa.train_fraction, "Partition only the training split");
  stats->add_option("--split-seed", pa.split_seed);

  std::string fixture;
  CLI::App* verify = app.add_subcommand("verify-dp", "Exhaustive DP check of a discrete mechanism");
  verify->add_option("--fixture", fixture, "JSON mechanism description")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 1;
  }

  absl::Status status;
  if (run->parsed()) {
    status = CmdRun(config_path, output_dir, threads, out, err);
  } else if (table->parsed()) {
    status = CmdTable(raw_path, format, table_output, out);
  } else if (calibrate->parsed()) {
    status = CmdCalibrate(epsilon_text, delta, q, steps, out);
  } else if (stats->parsed()) {
    status = CmdPartitionStats(pa, out);
  } else if (verify->parsed()) {
    status = CmdVerifyDp(fixture, out);
  }
  if (!status.ok()) err << "error: " << status.message() << "\n";
  return ExitCodeFor(status);
}

}  // namespace dpfl
