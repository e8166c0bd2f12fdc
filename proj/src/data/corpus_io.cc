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

#include <fstream>
#include <sstream>
#include <unordered_map>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dpfl/data.h"

namespace dpfl::data {
namespace {

struct Record {
  std::vector<std::string> fields;
  int line = 0;  // 1-based line on which the record starts
};

// Splits delimiter-separated text into records. Quoted fields may contain the
// delimiter, doubled quotes and newlines. Blank lines are skipped.
absl::StatusOr<std::vector<Record>> SplitRecords(absl::string_view text,
                                                 char delimiter) {
  std::vector<Record> records;
  Record current;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  int line = 1;
  current.line = 1;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = current.fields.size() == 1 &&
                       current.fields[0].empty();
    if (!blank) records.push_back(std::move(current));
    current = Record{};
    current.line = line;
  };

  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      if (!field.empty() || field_was_quoted) {
        return absl::InvalidArgumentError(absl::StrFormat(
            "line %d: stray quote inside unquoted field", line));
      }
      in_quotes = true;
      field_was_quoted = true;
    } else if (c == delimiter) {
      end_field();
    } else if (c == '\n') {
      ++line;
      end_record();
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      // CRLF: the '\n' ends the record.
    } else {
      if (field_was_quoted) {
        return absl::InvalidArgumentError(absl::StrFormat(
            "line %d: unexpected character after closing quote", line));
      }
      field.push_back(c);
    }
  }
  if (in_quotes) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "line %d: unterminated quoted field", current.line));
  }
  if (!field.empty() || field_was_quoted || !current.fields.empty()) {
    end_record();
  }
  return records;
}

}  // namespace

absl::Status ValidateCorpus(const LabeledCorpus& corpus) {
  if (corpus.examples.empty()) {
    return absl::InvalidArgumentError("corpus has no examples");
  }
  if (corpus.num_categories < 2) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "corpus needs at least 2 categories, has %d", corpus.num_categories));
  }
  for (size_t i = 0; i < corpus.examples.size(); ++i) {
    const int y = corpus.examples[i].label;
    if (y < 0 || y >= corpus.num_categories) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "example %d has label %d outside [0, %d)", i, y,
          corpus.num_categories));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<LabeledCorpus> ParseCorpus(absl::string_view contents,
                                          const CsvOptions& options) {
  absl::StatusOr<std::vector<Record>> records =
      SplitRecords(contents, options.delimiter);
  if (!records.ok()) return records.status();
  if (records->empty()) {
    return absl::InvalidArgumentError("corpus file has no header row");
  }
  const std::vector<std::string>& header = records->front().fields;
  auto find_column = [&](const std::string& name) -> int {
    for (size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  };
  const int text_col = find_column(options.text_column);
  const int label_col = find_column(options.label_column);
  for (auto [col, name] : {std::pair{text_col, options.text_column},
                           std::pair{label_col, options.label_column}}) {
    if (col < 0) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "configuration error: column '%s' not found in header", name));
    }
  }

  LabeledCorpus corpus;
  std::unordered_map<std::string, int> label_index;
  for (size_t r = 1; r < records->size(); ++r) {
    const Record& rec = (*records)[r];
    if (rec.fields.size() != header.size()) {
      return absl::InvalidArgumentError(
          absl::StrFormat("line %d: expected %d fields, found %d", rec.line,
                          header.size(), rec.fields.size()));
    }
    const std::string& label = rec.fields[label_col];
    auto [it, inserted] =
        label_index.try_emplace(label, static_cast<int>(label_index.size()));
    if (inserted) corpus.label_names.push_back(label);
    corpus.examples.push_back({rec.fields[text_col], it->second});
  }
  corpus.num_categories = static_cast<int>(corpus.label_names.size());
  if (corpus.examples.empty()) {
    return absl::InvalidArgumentError("corpus file has no data rows");
  }
  if (corpus.num_categories < 2) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "validation error: label column '%s' has %d distinct value(s), need "
        "at least 2",
        options.label_column, corpus.num_categories));
  }
  return corpus;
}

absl::StatusOr<LabeledCorpus> LoadCorpus(const std::string& path,
                                         const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError("cannot open corpus file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  absl::StatusOr<LabeledCorpus> corpus = ParseCorpus(buf.str(), options);
  if (!corpus.ok()) {
    return absl::Status(corpus.status().code(),
                        absl::StrCat(path, ": ", corpus.status().message()));
  }
  return corpus;
}

std::string FormatLabelMapping(const LabeledCorpus& corpus) {
  std::string out;
  for (size_t i = 0; i < corpus.label_names.size(); ++i) {
    absl::StrAppend(&out, i, "\t", corpus.label_names[i], "\n");
  }
  return out;
}

absl::Status WriteLabelMapping(const LabeledCorpus& corpus,
                               const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return absl::UnavailableError("cannot write " + path);
  out << FormatLabelMapping(corpus);
  return out ? absl::OkStatus() : absl::UnavailableError("write failed: " + path);
}

}  // namespace dpfl::data
