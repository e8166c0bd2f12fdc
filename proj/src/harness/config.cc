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
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "dpfl/harness.h"

namespace dpfl::harness {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SetupInfo {
  Setup setup;
  absl::string_view name;
  absl::string_view group;
};

constexpr SetupInfo kSetups[] = {
    {Setup::kCentralized, "centralized", "Centralized"},
    {Setup::kCentralizedDp, "centralized-dp", "Centralized DP"},
    {Setup::kFlIid, "fl-iid", "FL-IID"},
    {Setup::kFlNonIid, "fl-noniid", "FL-Non IID"},
    {Setup::kDpFlIid, "dpfl-iid", "FL-IID"},
    {Setup::kDpFlNonIid, "dpfl-noniid", "FL-Non IID"},
};

std::string Unquote(absl::string_view s) {
  s = absl::StripAsciiWhitespace(s);
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\''))) {
    s = s.substr(1, s.size() - 2);
  }
  return std::string(s);
}

std::vector<std::string> SplitList(absl::string_view value) {
  value = absl::StripAsciiWhitespace(value);
  if (value.size() >= 2 && value.front() == '[' && value.back() == ']') {
    value = value.substr(1, value.size() - 2);
  }
  std::vector<std::string> out;
  for (absl::string_view item : absl::StrSplit(value, ',')) {
    std::string s = Unquote(item);
    if (!s.empty()) out.push_back(std::move(s));
  }
  return out;
}

bool ParseDouble(absl::string_view s, double* out) {
  std::string lower = absl::AsciiStrToLower(Unquote(s));
  if (lower == "inf" || lower == "+inf" || lower == "infinity" ||
      lower == "\xe2\x88\x9e") {
    *out = kInf;
    return true;
  }
  const char* end = lower.data() + lower.size();
  auto [ptr, ec] = std::from_chars(lower.data(), end, *out);
  return ec == std::errc() && ptr == end && !lower.empty();
}

template <typename Int>
bool ParseInt(absl::string_view s, Int* out) {
  std::string v = Unquote(s);
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, *out);
  return ec == std::errc() && ptr == end && !v.empty();
}

struct Entry {
  std::string value;
  int line = 0;
};

class ConfigBuilder {
 public:
  ConfigBuilder() { Register(); }

  absl::Status Apply(const std::string& key, const Entry& e) {
    auto it = handlers_.find(key);
    if (it == handlers_.end()) {
      return absl::InvalidArgumentError(
          absl::StrFormat("configuration error: line %d: unknown key '%s'",
                          e.line, key));
    }
    absl::Status s = it->second(e.value);
    if (!s.ok()) {
      return absl::InvalidArgumentError(
          absl::StrFormat("configuration error: line %d: %s: %s", e.line, key,
                          s.message()));
    }
    return absl::OkStatus();
  }

  ExperimentConfig& config() { return cfg_; }

 private:
  using Handler = std::function<absl::Status(absl::string_view)>;

  void Double(const std::string& key, double* field) {
    handlers_[key] = [field](absl::string_view v) {
      if (!ParseDouble(v, field)) {
        return absl::InvalidArgumentError(
            absl::StrFormat("expected a number, got '%s'", v));
      }
      return absl::OkStatus();
    };
  }

  template <typename Int>
  void Integer(const std::string& key, Int* field) {
    handlers_[key] = [field](absl::string_view v) {
      if (!ParseInt(v, field)) {
        return absl::InvalidArgumentError(
            absl::StrFormat("expected an integer, got '%s'", v));
      }
      return absl::OkStatus();
    };
  }

  void String(const std::string& key, std::string* field) {
    handlers_[key] = [field](absl::string_view v) {
      *field = Unquote(v);
      return absl::OkStatus();
    };
  }

  void Register() {
    ExperimentConfig& c = cfg_;
    handlers_["experiment.setups"] = [&c](absl::string_view v) {
      c.setups.clear();
      for (const std::string& item : SplitList(v)) {
        absl::StatusOr<Setup> s = ParseSetup(item);
        if (!s.ok()) return s.status();
        c.setups.push_back(*s);
      }
      return absl::OkStatus();
    };
    handlers_["experiment.epsilons"] = [&c](absl::string_view v) {
      c.epsilons.clear();
      for (const std::string& item : SplitList(v)) {
        double eps;
        if (!ParseDouble(item, &eps)) {
          return absl::InvalidArgumentError(
              absl::StrFormat("expected a number or inf, got '%s'", item));
        }
        c.epsilons.push_back(eps);
      }
      return absl::OkStatus();
    };
    handlers_["experiment.seeds"] = [&c](absl::string_view v) {
      c.seeds.clear();
      for (const std::string& item : SplitList(v)) {
        uint64_t seed;
        if (!ParseInt(item, &seed)) {
          return absl::InvalidArgumentError(absl::StrFormat(
              "expected a non-negative 64-bit integer, got '%s'", item));
        }
        c.seeds.push_back(seed);
      }
      return absl::OkStatus();
    };
    String("experiment.output_dir", &c.output_dir);
    Integer("experiment.threads", &c.threads);

    handlers_["data.source"] = [&c](absl::string_view v) {
      const std::string s = Unquote(v);
      if (s == "synth") {
        c.data.source = DataSource::kSynth;
      } else if (s == "file") {
        c.data.source = DataSource::kFile;
      } else {
        return absl::InvalidArgumentError(
            absl::StrFormat("expected synth or file, got '%s'", s));
      }
      return absl::OkStatus();
    };
    String("data.path", &c.data.path);
    String("data.text_column", &c.data.text_column);
    String("data.label_column", &c.data.label_column);
    handlers_["data.delimiter"] = [&c](absl::string_view v) {
      const std::string s = Unquote(v);
      if (s == "tab" || s == "\\t") {
        c.data.delimiter = '\t';
      } else if (s.size() == 1) {
        c.data.delimiter = s[0];
      } else {
        return absl::InvalidArgumentError(
            absl::StrFormat("expected one character or 'tab', got '%s'", s));
      }
      return absl::OkStatus();
    };
    Double("data.train_fraction", &c.data.train_fraction);
    Integer("data.split_seed", &c.data.split_seed);
    Integer("data.feature_dim", &c.data.feature_dim);
    Integer("data.ngram_max", &c.data.ngram_max);
    Integer("data.synth_examples", &c.data.synth_examples);
    Integer("data.synth_categories", &c.data.synth_categories);
    Integer("data.synth_latent_dim", &c.data.synth_latent_dim);
    Double("data.synth_separation", &c.data.synth_separation);
    Integer("data.synth_seed", &c.data.synth_seed);

    handlers_["model.kinds"] = [&c](absl::string_view v) {
      c.model.kinds.clear();
      for (const std::string& item : SplitList(v)) {
        absl::StatusOr<models::ModelKind> k = models::ParseModelKind(item);
        if (!k.ok()) return k.status();
        c.model.kinds.push_back(*k);
      }
      return absl::OkStatus();
    };
    Integer("model.hidden_dim", &c.model.hidden_dim);

    Double("train.lr", &c.train.lr);
    Integer("train.epochs", &c.train.epochs);
    Integer("train.batch_size", &c.train.batch_size);

    Double("dp.clip_norm", &c.dp.clip_norm);
    handlers_["dp.delta"] = [&c](absl::string_view v) {
      if (Unquote(v) == "auto") {
        c.dp.delta.reset();
        return absl::OkStatus();
      }
      double d;
      if (!ParseDouble(v, &d)) {
        return absl::InvalidArgumentError(
            absl::StrFormat("expected a number or auto, got '%s'", v));
      }
      c.dp.delta = d;
      return absl::OkStatus();
    };

    Integer("fl.num_clients", &c.fl.num_clients);
    Double("fl.fraction", &c.fl.fraction);
    Integer("fl.rounds", &c.fl.rounds);
    Integer("fl.local_epochs", &c.fl.local_epochs);
    Integer("fl.batch_size", &c.fl.batch_size);
    Double("fl.lr", &c.fl.lr);
    Integer("fl.num_shards", &c.fl.num_shards);
    Integer("fl.shard_size", &c.fl.shard_size);
    Integer("fl.shards_per_client", &c.fl.shards_per_client);
  }

  ExperimentConfig cfg_;
  std::map<std::string, Handler> handlers_;
};

// Cross-field invariants. `lines` maps "section.key" to its line (0 when the
// key took its default).
absl::Status Validate(const ExperimentConfig& c,
                      const std::map<std::string, int>& lines) {
  auto fail = [&](const std::string& key, const std::string& msg) {
    auto it = lines.find(key);
    const int line = it == lines.end() ? 0 : it->second;
    if (line == 0) {
      return absl::InvalidArgumentError(
          absl::StrFormat("configuration error: %s: %s", key, msg));
    }
    return absl::InvalidArgumentError(absl::StrFormat(
        "configuration error: line %d: %s: %s", line, key, msg));
  };

  if (c.setups.empty()) return fail("experiment.setups", "must not be empty");
  if (c.epsilons.empty()) {
    return fail("experiment.epsilons", "must not be empty");
  }
  if (c.seeds.empty()) return fail("experiment.seeds", "must not be empty");
  if (c.model.kinds.empty()) return fail("model.kinds", "must not be empty");
  for (double eps : c.epsilons) {
    if (!(eps > 0.0)) {
      return fail("experiment.epsilons",
                  absl::StrFormat("epsilon must be > 0 or inf, got %g", eps));
    }
  }
  const bool finite_eps = std::any_of(c.epsilons.begin(), c.epsilons.end(),
                                      [](double e) { return std::isfinite(e); });
  std::set<Setup> seen_setups;
  for (Setup s : c.setups) {
    if (!seen_setups.insert(s).second) {
      return fail("experiment.setups",
                  absl::StrCat("duplicate setup '", SetupName(s), "'"));
    }
    if (!SetupUsesDp(s) && finite_eps) {
      return fail("experiment.setups",
                  absl::StrCat("setup '", SetupName(s),
                               "' has no privacy mechanism and only runs at "
                               "epsilon = inf; use its DP variant to sweep "
                               "finite epsilons"));
    }
  }
  if (std::set<double>(c.epsilons.begin(), c.epsilons.end()).size() !=
      c.epsilons.size()) {
    return fail("experiment.epsilons", "duplicate epsilon");
  }
  if (std::set<models::ModelKind>(c.model.kinds.begin(), c.model.kinds.end())
          .size() != c.model.kinds.size()) {
    return fail("model.kinds", "duplicate model kind");
  }
  if (c.threads < 1) return fail("experiment.threads", "must be >= 1");
  if (c.output_dir.empty()) {
    return fail("experiment.output_dir", "must not be empty");
  }

  const DataConfig& d = c.data;
  if (d.source == DataSource::kFile && d.path.empty()) {
    return fail("data.path", "required when source = file");
  }
  if (!(d.train_fraction > 0.0 && d.train_fraction < 1.0)) {
    return fail("data.train_fraction", "must lie in (0, 1)");
  }
  if (d.feature_dim < 2) return fail("data.feature_dim", "must be >= 2");
  if (d.ngram_max != 1 && d.ngram_max != 2) {
    return fail("data.ngram_max", "must be 1 or 2");
  }
  if (d.source == DataSource::kSynth) {
    if (d.synth_categories < 2) {
      return fail("data.synth_categories", "must be >= 2");
    }
    if (d.synth_examples < d.synth_categories) {
      return fail("data.synth_examples", "must be >= synth_categories");
    }
    if (d.synth_latent_dim < d.synth_categories) {
      return fail("data.synth_latent_dim", "must be >= synth_categories");
    }
    if (!(d.synth_separation >= 0.0) || !std::isfinite(d.synth_separation)) {
      return fail("data.synth_separation", "must be finite and >= 0");
    }
  }
  const bool has_mlp =
      std::find(c.model.kinds.begin(), c.model.kinds.end(),
                models::ModelKind::kMlp) != c.model.kinds.end();
  if (has_mlp && c.model.hidden_dim < 1) {
    return fail("model.hidden_dim", "must be >= 1");
  }
  if (!(c.train.lr > 0.0) || !std::isfinite(c.train.lr)) {
    return fail("train.lr", "must be > 0");
  }
  if (c.train.epochs < 1) return fail("train.epochs", "must be >= 1");
  if (c.train.batch_size < 1) return fail("train.batch_size", "must be >= 1");
  if (!(c.dp.clip_norm > 0.0) || !std::isfinite(c.dp.clip_norm)) {
    return fail("dp.clip_norm", "must be > 0");
  }
  if (c.dp.delta && !(*c.dp.delta > 0.0 && *c.dp.delta < 1.0)) {
    return fail("dp.delta", "must lie in (0, 1)");
  }
  const FlSection& f = c.fl;
  if (f.num_clients < 1) return fail("fl.num_clients", "must be >= 1");
  if (!(f.fraction > 0.0 && f.fraction <= 1.0)) {
    return fail("fl.fraction", "must lie in (0, 1]");
  }
  if (f.rounds < 1) return fail("fl.rounds", "must be >= 1");
  if (f.local_epochs < 1) return fail("fl.local_epochs", "must be >= 1");
  if (f.batch_size < 1) return fail("fl.batch_size", "must be >= 1");
  if (!(f.lr > 0.0) || !std::isfinite(f.lr)) return fail("fl.lr", "must be > 0");
  if (f.num_shards < 1 || f.shard_size < 1 || f.shards_per_client < 1) {
    return fail("fl.num_shards",
                "num_shards, shard_size and shards_per_client must be >= 1");
  }
  const bool noniid = seen_setups.count(Setup::kFlNonIid) ||
                      seen_setups.count(Setup::kDpFlNonIid);
  if (noniid && static_cast<int64_t>(f.num_shards) !=
                    static_cast<int64_t>(f.num_clients) * f.shards_per_client) {
    return fail("fl.num_shards",
                "must equal num_clients x shards_per_client");
  }
  return absl::OkStatus();
}

std::string FormatDouble(double v) { return FormatEpsilon(v); }

}  // namespace

absl::string_view SetupName(Setup setup) {
  for (const SetupInfo& info : kSetups) {
    if (info.setup == setup) return info.name;
  }
  return "unknown";
}

absl::StatusOr<Setup> ParseSetup(absl::string_view name) {
  for (const SetupInfo& info : kSetups) {
    if (info.name == name) return info.setup;
  }
  return absl::InvalidArgumentError(absl::StrFormat(
      "unknown setup '%s' (expected centralized, centralized-dp, fl-iid, "
      "fl-noniid, dpfl-iid or dpfl-noniid)",
      name));
}

absl::string_view SetupGroupLabel(Setup setup) {
  for (const SetupInfo& info : kSetups) {
    if (info.setup == setup) return info.group;
  }
  return "unknown";
}

bool SetupUsesDp(Setup setup) {
  return setup == Setup::kCentralizedDp || setup == Setup::kDpFlIid ||
         setup == Setup::kDpFlNonIid;
}

bool SetupIsFederated(Setup setup) {
  return setup != Setup::kCentralized && setup != Setup::kCentralizedDp;
}

std::string FormatEpsilon(double epsilon) {
  if (std::isinf(epsilon)) return epsilon > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), epsilon);
  return std::string(buf, ptr);
}

absl::StatusOr<ExperimentConfig> ParseConfigText(absl::string_view text) {
  ConfigBuilder builder;
  std::map<std::string, int> lines;
  std::string section;
  int line_no = 0;
  for (absl::string_view raw : absl::StrSplit(text, '\n')) {
    ++line_no;
    absl::string_view line = absl::StripAsciiWhitespace(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        return absl::InvalidArgumentError(absl::StrFormat(
            "configuration error: line %d: malformed section header", line_no));
      }
      section = std::string(
          absl::StripAsciiWhitespace(line.substr(1, line.size() - 2)));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == absl::string_view::npos) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "configuration error: line %d: expected 'key = value'", line_no));
    }
    if (section.empty()) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "configuration error: line %d: key outside of any [section]",
          line_no));
    }
    const std::string key = absl::StrCat(
        section, ".", absl::StripAsciiWhitespace(line.substr(0, eq)));
    if (lines.count(key)) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "configuration error: line %d: duplicate key '%s'", line_no, key));
    }
    lines[key] = line_no;
    Entry e{std::string(absl::StripAsciiWhitespace(line.substr(eq + 1))),
            line_no};
    if (absl::Status s = builder.Apply(key, e); !s.ok()) return s;
  }
  if (absl::Status s = Validate(builder.config(), lines); !s.ok()) return s;
  return builder.config();
}

absl::StatusOr<ExperimentConfig> ParseConfig(const std::string& path) {
  if (path == "demo") return ParseConfigText(DemoConfigText());
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  absl::StatusOr<ExperimentConfig> cfg = ParseConfigText(buf.str());
  if (!cfg.ok()) {
    return absl::Status(cfg.status().code(),
                        absl::StrCat(path, ": ", cfg.status().message()));
  }
  return cfg;
}

std::string ResolvedConfigText(const ExperimentConfig& c) {
  std::vector<std::string> setups, eps, seeds, kinds;
  for (Setup s : c.setups) setups.emplace_back(SetupName(s));
  for (double e : c.epsilons) eps.push_back(FormatEpsilon(e));
  for (uint64_t s : c.seeds) seeds.push_back(absl::StrCat(s));
  for (models::ModelKind k : c.model.kinds) {
    kinds.emplace_back(models::ModelKindName(k));
  }
  const std::string delimiter =
      c.data.delimiter == '\t' ? "tab" : std::string(1, c.data.delimiter);

  std::string out;
  absl::StrAppend(&out, "[experiment]\n");
  absl::StrAppend(&out, "setups = ", absl::StrJoin(setups, ", "), "\n");
  absl::StrAppend(&out, "epsilons = ", absl::StrJoin(eps, ", "), "\n");
  absl::StrAppend(&out, "seeds = ", absl::StrJoin(seeds, ", "), "\n");
  absl::StrAppend(&out, "output_dir = ", c.output_dir, "\n");
  absl::StrAppend(&out, "threads = ", c.threads, "\n");
  absl::StrAppend(&out, "\n[data]\n");
  absl::StrAppend(&out, "source = ",
                  c.data.source == DataSource::kSynth ? "synth" : "file", "\n");
  absl::StrAppend(&out, "path = ", c.data.path, "\n");
  absl::StrAppend(&out, "text_column = ", c.data.text_column, "\n");
  absl::StrAppend(&out, "label_column = ", c.data.label_column, "\n");
  absl::StrAppend(&out, "delimiter = \"", delimiter, "\"\n");
  absl::StrAppend(&out, "train_fraction = ", FormatDouble(c.data.train_fraction),
                  "\n");
  absl::StrAppend(&out, "split_seed = ", c.data.split_seed, "\n");
  absl::StrAppend(&out, "feature_dim = ", c.data.feature_dim, "\n");
  absl::StrAppend(&out, "ngram_max = ", c.data.ngram_max, "\n");
  absl::StrAppend(&out, "synth_examples = ", c.data.synth_examples, "\n");
  absl::StrAppend(&out, "synth_categories = ", c.data.synth_categories, "\n");
  absl::StrAppend(&out, "synth_latent_dim = ", c.data.synth_latent_dim, "\n");
  absl::StrAppend(&out, "synth_separation = ",
                  FormatDouble(c.data.synth_separation), "\n");
  absl::StrAppend(&out, "synth_seed = ", c.data.synth_seed, "\n");
  absl::StrAppend(&out, "\n[model]\n");
  absl::StrAppend(&out, "kinds = ", absl::StrJoin(kinds, ", "), "\n");
  absl::StrAppend(&out, "hidden_dim = ", c.model.hidden_dim, "\n");
  absl::StrAppend(&out, "\n[train]\n");
  absl::StrAppend(&out, "lr = ", FormatDouble(c.train.lr), "\n");
  absl::StrAppend(&out, "epochs = ", c.train.epochs, "\n");
  absl::StrAppend(&out, "batch_size = ", c.train.batch_size, "\n");
  absl::StrAppend(&out, "\n[dp]\n");
  absl::StrAppend(&out, "clip_norm = ", FormatDouble(c.dp.clip_norm), "\n");
  absl::StrAppend(&out, "delta = ",
                  c.dp.delta ? FormatDouble(*c.dp.delta) : "auto", "\n");
  absl::StrAppend(&out, "\n[fl]\n");
  absl::StrAppend(&out, "num_clients = ", c.fl.num_clients, "\n");
  absl::StrAppend(&out, "fraction = ", FormatDouble(c.fl.fraction), "\n");
  absl::StrAppend(&out, "rounds = ", c.fl.rounds, "\n");
  absl::StrAppend(&out, "local_epochs = ", c.fl.local_epochs, "\n");
  absl::StrAppend(&out, "batch_size = ", c.fl.batch_size, "\n");
  absl::StrAppend(&out, "lr = ", FormatDouble(c.fl.lr), "\n");
  absl::StrAppend(&out, "num_shards = ", c.fl.num_shards, "\n");
  absl::StrAppend(&out, "shard_size = ", c.fl.shard_size, "\n");
  absl::StrAppend(&out, "shards_per_client = ", c.fl.shards_per_client, "\n");
  return out;
}

// Output location and thread count do not influence results and are left out.
std::string ConfigDigest(const ExperimentConfig& cfg) {
  ExperimentConfig canonical = cfg;
  canonical.output_dir = ExperimentConfig{}.output_dir;
  canonical.threads = ExperimentConfig{}.threads;
  const std::string text = ResolvedConfigText(canonical);
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return absl::StrFormat("%016x", h);
}

double ResolveDelta(const ExperimentConfig& cfg, size_t train_size) {
  if (cfg.dp.delta) return *cfg.dp.delta;
  return std::min(1e-5, 1.0 / (2.0 * static_cast<double>(train_size)));
}

}  // namespace dpfl::harness
