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

#include "absl/strings/str_format.h"
#include "dpfl/data.h"

namespace dpfl::data {
namespace {

bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool IsWordChar(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

// Position of the earliest URL start at or after `from`, or npos.
size_t FindUrl(const std::string& s, size_t from) {
  size_t best = std::string::npos;
  for (const char* prefix : {"http://", "https://", "www."}) {
    best = std::min(best, s.find(prefix, from));
  }
  return best;
}

std::vector<absl::string_view> Tokens(absl::string_view text) {
  std::vector<absl::string_view> out;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && IsSpace(text[i])) ++i;
    size_t j = i;
    while (j < text.size() && !IsSpace(text[j])) ++j;
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

// The order of the passes matters for idempotence: '#' goes before mentions
// ("@#x" must not leave a fresh "@x"), and URL removal runs to the next
// whitespace so it cannot join text into a new pattern.
std::string CleanText(absl::string_view raw) {
  std::string s;
  s.reserve(raw.size());
  for (char c : raw) {
    if (c == '#') continue;
    s.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
  }

  std::string no_mentions;
  no_mentions.reserve(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '@' && i + 1 < s.size() && IsWordChar(s[i + 1])) {
      ++i;
      while (i + 1 < s.size() && IsWordChar(s[i + 1])) ++i;
      continue;
    }
    no_mentions.push_back(s[i]);
  }

  std::string no_urls;
  no_urls.reserve(no_mentions.size());
  size_t pos = 0;
  while (pos < no_mentions.size()) {
    const size_t url = FindUrl(no_mentions, pos);
    if (url == std::string::npos) {
      no_urls.append(no_mentions, pos, std::string::npos);
      break;
    }
    no_urls.append(no_mentions, pos, url - pos);
    pos = url;
    while (pos < no_mentions.size() && !IsSpace(no_mentions[pos])) ++pos;
  }

  std::string out;
  out.reserve(no_urls.size());
  for (absl::string_view tok : Tokens(no_urls)) {
    if (!out.empty()) out.push_back(' ');
    out.append(tok.data(), tok.size());
  }
  return out;
}

uint64_t NgramHash(absl::string_view ngram) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : ngram) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return SplitMix64(h);
}

std::vector<double> Featurize(absl::string_view text, int feature_dim,
                              int ngram_max) {
  std::vector<double> v(static_cast<size_t>(feature_dim), 0.0);
  const std::vector<absl::string_view> tokens = Tokens(text);
  const uint64_t dim = static_cast<uint64_t>(feature_dim);
  std::string ngram;
  for (size_t i = 0; i < tokens.size(); ++i) {
    ngram.clear();
    for (int n = 1; n <= ngram_max && i + n <= tokens.size(); ++n) {
      if (n > 1) ngram.push_back(' ');
      ngram.append(tokens[i + n - 1].data(), tokens[i + n - 1].size());
      const uint64_t h = NgramHash(ngram);
      v[h % dim] += (h >> 63) ? -1.0 : 1.0;
    }
  }
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  if (norm2 > 0.0) {
    const double norm = std::sqrt(norm2);
    for (double& x : v) x /= norm;
  }
  return v;
}

absl::StatusOr<models::Batch> FeaturizeCorpus(const LabeledCorpus& corpus,
                                              const FeaturizeOptions& options) {
  if (options.feature_dim < 2) {
    return absl::InvalidArgumentError("feature_dim must be >= 2");
  }
  if (options.ngram_max != 1 && options.ngram_max != 2) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "ngram_max must be 1 or 2, got %d", options.ngram_max));
  }
  if (absl::Status s = ValidateCorpus(corpus); !s.ok()) return s;
  models::Batch batch;
  batch.rows = corpus.size();
  batch.dim = options.feature_dim;
  batch.num_categories = corpus.num_categories;
  batch.features.reserve(batch.rows * batch.dim);
  batch.labels.reserve(batch.rows);
  for (const LabeledExample& ex : corpus.examples) {
    const std::vector<double> v =
        options.clean
            ? Featurize(CleanText(ex.text), options.feature_dim,
                        options.ngram_max)
            : Featurize(ex.text, options.feature_dim, options.ngram_max);
    batch.features.insert(batch.features.end(), v.begin(), v.end());
    batch.labels.push_back(ex.label);
  }
  return batch;
}

}  // namespace dpfl::data
