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
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "absl/strings/numbers.h"
#include "absl/strings/match.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "dpfl/harness.h"

namespace dpfl::harness {
namespace {

constexpr absl::string_view kRawHeader = "setup,epsilon,model,seed,accuracy,delta";

std::string DigestLine(absl::string_view digest) {
  return absl::StrCat("# config_digest: ", digest, "\n");
}

std::string Fixed2(double v) { return absl::StrFormat("%.2f", v); }

std::string MarkdownEpsilon(double epsilon) {
  return std::isinf(epsilon) ? "∞ (No noise)" : FormatEpsilon(epsilon);
}

std::string FormatMarkdown(const std::vector<ResultRow>& rows,
                           absl::string_view digest) {
  std::set<models::ModelKind> kinds;
  for (const ResultRow& r : rows) kinds.insert(r.model);
  // (setup, epsilon) -> model -> row, in row order.
  std::vector<std::pair<Setup, double>> keys;
  std::map<std::pair<std::pair<Setup, double>, models::ModelKind>,
           const ResultRow*>
      cells;
  for (const ResultRow& r : rows) {
    const std::pair<Setup, double> key{r.setup, r.epsilon};
    if (keys.empty() || keys.back() != key) keys.push_back(key);
    cells[{key, r.model}] = &r;
  }

  std::string out = absl::StrCat("<!-- config_digest: ", digest, " -->\n");
  if (!rows.empty()) {
    absl::StrAppend(
        &out, "Test accuracy (%), mean ± population std over ",
        rows.front().n_seeds, " seeds; delta = ",
        FormatEpsilon(rows.front().delta), ".\n\n");
  }
  std::vector<std::string> header = {"Setup", "Epsilon"};
  std::vector<std::string> rule = {"---", "---:"};
  for (models::ModelKind k : kinds) {
    header.emplace_back(models::ModelKindName(k));
    rule.emplace_back("---:");
  }
  absl::StrAppend(&out, "| ", absl::StrJoin(header, " | "), " |\n");
  absl::StrAppend(&out, "|", absl::StrJoin(rule, "|"), "|\n");
  for (size_t i = 0; i < keys.size(); ++i) {
    const bool first = i == 0 || keys[i - 1].first != keys[i].first;
    std::vector<std::string> line = {
        first ? std::string(SetupGroupLabel(keys[i].first)) : "",
        MarkdownEpsilon(keys[i].second)};
    for (models::ModelKind k : kinds) {
      auto it = cells.find({keys[i], k});
      line.push_back(it == cells.end()
                         ? "n/a"
                         : absl::StrCat(Fixed2(it->second->mean_accuracy),
                                        " ± ", Fixed2(it->second->std_accuracy)));
    }
    absl::StrAppend(&out, "| ", absl::StrJoin(line, " | "), " |\n");
  }
  return out;
}

std::string FormatCsv(const std::vector<ResultRow>& rows,
                      absl::string_view digest) {
  std::string out = DigestLine(digest);
  absl::StrAppend(&out,
                  "# accuracy in percent; std is the population standard "
                  "deviation over seeds\n");
  absl::StrAppend(&out,
                  "setup,epsilon,model,mean_accuracy,std_accuracy,n_seeds,"
                  "delta\n");
  for (const ResultRow& r : rows) {
    absl::StrAppend(&out, SetupName(r.setup), ",", FormatEpsilon(r.epsilon),
                    ",", models::ModelKindName(r.model), ",",
                    Fixed2(r.mean_accuracy), ",", Fixed2(r.std_accuracy), ",",
                    r.n_seeds, ",", FormatEpsilon(r.delta), "\n");
  }
  return out;
}

absl::Status WriteFile(const std::filesystem::path& path,
                       absl::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return absl::UnavailableError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.close();
  if (!out) return absl::UnavailableError("write failed: " + path.string());
  return absl::OkStatus();
}

}  // namespace

std::string FormatTable(const std::vector<ResultRow>& rows, TableFormat format,
                        absl::string_view digest) {
  return format == TableFormat::kMarkdown ? FormatMarkdown(rows, digest)
                                          : FormatCsv(rows, digest);
}

std::string FormatPlotData(const std::vector<ResultRow>& rows,
                           absl::string_view digest) {
  std::vector<const ResultRow*> order;
  for (const ResultRow& r : rows) order.push_back(&r);
  // One contiguous epsilon series per (setup, model).
  std::stable_sort(order.begin(), order.end(),
                   [](const ResultRow* a, const ResultRow* b) {
                     if (a->setup != b->setup) return a->setup < b->setup;
                     return a->model < b->model;
                   });
  std::string out = DigestLine(digest);
  absl::StrAppend(&out, "setup,model,epsilon,mean,std\n");
  for (const ResultRow* r : order) {
    absl::StrAppend(&out, SetupName(r->setup), ",",
                    models::ModelKindName(r->model), ",",
                    FormatEpsilon(r->epsilon), ",", Fixed2(r->mean_accuracy),
                    ",", Fixed2(r->std_accuracy), "\n");
  }
  return out;
}

std::string FormatRawAccuracies(const std::vector<SeedAccuracy>& raw,
                                absl::string_view digest) {
  std::string out = DigestLine(digest);
  absl::StrAppend(&out, kRawHeader, "\n");
  for (const SeedAccuracy& a : raw) {
    absl::StrAppend(&out, SetupName(a.cell.setup), ",",
                    FormatEpsilon(a.cell.epsilon), ",",
                    models::ModelKindName(a.cell.model), ",", a.seed, ",",
                    absl::StrFormat("%.17g", a.accuracy), ",",
                    absl::StrFormat("%.17g", a.delta), "\n");
  }
  return out;
}

absl::StatusOr<RawLog> ParseRawAccuracies(absl::string_view text) {
  RawLog log;
  bool header_seen = false;
  int line_no = 0;
  for (absl::string_view line : absl::StrSplit(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (absl::StartsWith(line, "#")) {
      constexpr absl::string_view kTag = "# config_digest: ";
      if (absl::StartsWith(line, kTag)) log.digest = std::string(line.substr(kTag.size()));
      continue;
    }
    if (!header_seen) {
      if (line != kRawHeader) {
        return absl::InvalidArgumentError(
            absl::StrCat("line ", line_no, ": expected header '", kRawHeader, "'"));
      }
      header_seen = true;
      continue;
    }
    std::vector<absl::string_view> f = absl::StrSplit(line, ',');
    if (f.size() != 6) {
      return absl::InvalidArgumentError(absl::StrCat(
          "line ", line_no, ": expected 6 fields, found ", f.size()));
    }
    SeedAccuracy a;
    absl::StatusOr<Setup> setup = ParseSetup(f[0]);
    absl::StatusOr<models::ModelKind> kind = models::ParseModelKind(f[2]);
    if (!setup.ok() || !kind.ok() || !absl::SimpleAtod(f[1], &a.cell.epsilon) ||
        !absl::SimpleAtoi(f[3], &a.seed) || !absl::SimpleAtod(f[4], &a.accuracy) ||
        !absl::SimpleAtod(f[5], &a.delta)) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": malformed record"));
    }
    a.cell.setup = *setup;
    a.cell.model = *kind;
    log.entries.push_back(a);
  }
  if (!header_seen) return absl::InvalidArgumentError("missing header line");
  return log;
}

absl::Status EmitTable(const std::vector<ResultRow>& rows, TableFormat format,
                       absl::string_view digest, const std::string& path) {
  return WriteFile(path, FormatTable(rows, format, digest));
}

absl::Status WriteOutputs(const ExperimentConfig& cfg,
                          const ExperimentResult& result,
                          const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    return absl::UnavailableError(
        absl::StrCat("cannot create ", dir, ": ", ec.message()));
  }
  const std::filesystem::path base(dir);
  const std::string& d = result.config_digest;
  const std::pair<const char*, std::string> files[] = {
      {"results.md", FormatTable(result.rows, TableFormat::kMarkdown, d)},
      {"results.csv", FormatTable(result.rows, TableFormat::kCsv, d)},
      {"plot.csv", FormatPlotData(result.rows, d)},
      {"raw_accuracies.csv", FormatRawAccuracies(result.raw, d)},
      {"round_history.csv",
       absl::StrCat(DigestLine(d),
                    "setup,epsilon,model,seed,round,clients,accuracy,"
                    "client_epsilons\n",
                    result.round_history)},
      {"label_mapping.tsv", absl::StrCat(DigestLine(d), result.label_mapping)},
      {"resolved_config", absl::StrCat(DigestLine(d), ResolvedConfigText(cfg))},
  };
  for (const auto& [name, contents] : files) {
    absl::Status s = WriteFile(base / name, contents);
    if (!s.ok()) return s;
  }
  return absl::OkStatus();
}

}  // namespace dpfl::harness
