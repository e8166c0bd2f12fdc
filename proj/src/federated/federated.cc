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

#include "dpfl/federated.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "dpfl/parallel.h"

namespace dpfl::fl {
namespace {

constexpr uint64_t kSelectionLabel = uint64_t{1} << 63;
constexpr uint64_t kInitLabel = (uint64_t{1} << 63) | 1;

// Per-client DP schedule: sampling rate and steps for one round of local
// training, and the calibrated noise multiplier.
struct ClientSchedule {
  double sampling_rate = 1.0;
  int64_t steps_per_round = 0;
  double sigma = 0.0;
};

std::string FormatEpsilon(double eps) {
  return std::isinf(eps) ? std::string("inf") : absl::StrFormat("%.6f", eps);
}

}  // namespace

absl::Status ValidateFlConfig(const FlConfig& cfg) {
  if (cfg.num_clients < 1) {
    return absl::InvalidArgumentError("num_clients must be >= 1");
  }
  if (!(cfg.fraction > 0.0 && cfg.fraction <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("fraction must lie in (0, 1], got %g", cfg.fraction));
  }
  if (cfg.rounds < 1 || cfg.local_epochs < 1 || cfg.batch_size < 1) {
    return absl::InvalidArgumentError(
        "rounds, local_epochs and batch_size must be >= 1");
  }
  if (!(cfg.lr > 0.0)) return absl::InvalidArgumentError("lr must be > 0");
  if (cfg.dp) {
    if (!(cfg.dp->clip_norm > 0.0) || !(cfg.dp->target_epsilon > 0.0) ||
        !(cfg.dp->delta > 0.0 && cfg.dp->delta < 1.0)) {
      return absl::InvalidArgumentError(
          "client DP needs clip_norm > 0, target epsilon > 0 and delta in "
          "(0, 1)");
    }
  }
  return absl::OkStatus();
}

int ClientsPerRound(int num_clients, double fraction) {
  const int m = static_cast<int>(
      std::ceil(fraction * static_cast<double>(num_clients) - 1e-9));
  return std::clamp(m, 1, num_clients);
}

uint64_t ClientStreamSeed(uint64_t master_seed, int client_id, int round) {
  return DeriveSeed(master_seed, {static_cast<uint64_t>(client_id),
                                  static_cast<uint64_t>(round)});
}

uint64_t SelectionStreamSeed(uint64_t master_seed, int round) {
  return DeriveSeed(master_seed,
                    {kSelectionLabel, static_cast<uint64_t>(round)});
}

uint64_t GlobalInitSeed(uint64_t master_seed) {
  return DeriveSeed(master_seed, {kInitLabel});
}

std::vector<int> SelectClients(int num_clients, double fraction,
                               RandomStream& stream) {
  const int m = ClientsPerRound(num_clients, fraction);
  std::vector<int> ids(num_clients);
  std::iota(ids.begin(), ids.end(), 0);
  for (int i = 0; i < m; ++i) {
    const int j = i + static_cast<int>(stream.UniformInt(num_clients - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(m);
  std::sort(ids.begin(), ids.end());
  return ids;
}

absl::StatusOr<ClientUpdate> LocalUpdate(const models::Model& global,
                                         const models::Batch& train,
                                         const ClientState& client,
                                         const FlConfig& cfg) {
  if (client.shard.indices.empty()) {
    return absl::InvalidArgumentError(
        absl::StrFormat("client %d has an empty shard", client.client_id));
  }
  const models::Batch local = models::Gather(train, client.shard.indices);
  RandomStream stream(client.stream_seed);
  ClientUpdate update;
  update.client_id = client.client_id;
  update.num_examples = static_cast<int64_t>(local.rows);
  if (client.dp) {
    auto trained = dp::DpSgdTrain(global, local, *client.dp, cfg.lr,
                                  cfg.local_epochs, stream);
    if (!trained.ok()) return trained.status();
    update.params = std::move(trained->first.params);
    update.privacy = trained->second;
  } else {
    models::SgdOptions sgd{cfg.lr, cfg.local_epochs, cfg.batch_size};
    absl::StatusOr<models::Model> trained =
        models::TrainSgd(global, local, sgd, stream);
    if (!trained.ok()) return trained.status();
    update.params = std::move(trained->params);
  }
  return update;
}

absl::StatusOr<std::vector<double>> FedAvg(
    const std::vector<ClientUpdate>& updates) {
  if (updates.empty()) {
    return absl::InvalidArgumentError("aggregation error: no client updates");
  }
  const size_t dim = updates.front().params.size();
  int64_t g = 0;
  for (const ClientUpdate& u : updates) {
    if (u.params.size() != dim) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "aggregation error: client %d sent %d parameters, expected %d",
          u.client_id, u.params.size(), dim));
    }
    if (u.num_examples < 1) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "aggregation error: client %d reports %d examples", u.client_id,
          u.num_examples));
    }
    g = std::gcd(g, u.num_examples);
  }
  double total_weight = 0.0;
  std::vector<double> acc(dim, 0.0);
  std::vector<double> lo = updates.front().params;
  std::vector<double> hi = updates.front().params;
  for (const ClientUpdate& u : updates) {
    const double w = static_cast<double>(u.num_examples / g);
    total_weight += w;
    for (size_t j = 0; j < dim; ++j) {
      acc[j] += w * u.params[j];
      lo[j] = std::min(lo[j], u.params[j]);
      hi[j] = std::max(hi[j], u.params[j]);
    }
  }
  for (size_t j = 0; j < dim; ++j) {
    acc[j] = std::clamp(acc[j] / total_weight, lo[j], hi[j]);
  }
  return acc;
}

absl::StatusOr<FederatedResult> RunFederated(
    const models::Batch& train, const std::vector<data::ClientShard>& shards,
    const models::Batch& test, const models::ModelSpec& spec,
    const FlConfig& cfg, uint64_t master_seed) {
  if (absl::Status s = ValidateFlConfig(cfg); !s.ok()) return s;
  if (absl::Status s = models::ValidateSpec(spec); !s.ok()) return s;
  if (shards.size() != static_cast<size_t>(cfg.num_clients)) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "%d shards for %d clients", shards.size(), cfg.num_clients));
  }
  if (test.rows == 0) {
    return absl::InvalidArgumentError("federated run needs a non-empty test set");
  }
  for (size_t c = 0; c < shards.size(); ++c) {
    if (shards[c].indices.empty()) {
      return absl::InvalidArgumentError(
          absl::StrFormat("client %d has an empty shard", c));
    }
  }

  FederatedResult result;
  result.model = models::InitModel(spec, GlobalInitSeed(master_seed));

  std::vector<ClientSchedule> schedule(cfg.num_clients);
  if (cfg.dp) {
    std::map<size_t, ClientSchedule> by_size;
    for (int c = 0; c < cfg.num_clients; ++c) {
      const size_t n = shards[c].indices.size();
      auto it = by_size.find(n);
      if (it == by_size.end()) {
        ClientSchedule s;
        const dp::DpConfig probe =
            dp::MakeDpConfig(n, cfg.batch_size, cfg.local_epochs,
                             cfg.dp->clip_norm, 0.0, cfg.dp->delta,
                             cfg.dp->target_epsilon);
        s.sampling_rate = probe.sampling_rate;
        s.steps_per_round = probe.steps;
        absl::StatusOr<double> sigma = dp::CalibrateSigma(
            cfg.dp->target_epsilon, cfg.dp->delta, s.sampling_rate,
            s.steps_per_round * cfg.rounds);
        if (!sigma.ok()) return sigma.status();
        s.sigma = *sigma;
        it = by_size.emplace(n, s).first;
      }
      schedule[c] = it->second;
      result.client_sigma.push_back(it->second.sigma);
    }
  }
  std::vector<int64_t> steps_done(cfg.num_clients, 0);

  for (int round = 0; round < cfg.rounds; ++round) {
    RandomStream selection(SelectionStreamSeed(master_seed, round));
    RoundRecord record;
    record.round = round;
    record.selected = SelectClients(cfg.num_clients, cfg.fraction, selection);

    const size_t m = record.selected.size();
    std::vector<absl::StatusOr<ClientUpdate>> updates(
        m, absl::UnknownError("not run"));
    ParallelFor(m, cfg.num_threads, [&](size_t i) {
      const int id = record.selected[i];
      ClientState client;
      client.client_id = id;
      client.shard = shards[id];
      client.stream_seed = ClientStreamSeed(master_seed, id, round);
      if (cfg.dp) {
        dp::DpConfig dpc;
        dpc.clip_norm = cfg.dp->clip_norm;
        dpc.noise_multiplier = schedule[id].sigma;
        dpc.sampling_rate = schedule[id].sampling_rate;
        dpc.steps = schedule[id].steps_per_round;
        dpc.delta = cfg.dp->delta;
        dpc.target_epsilon = cfg.dp->target_epsilon;
        client.dp = dpc;
      }
      updates[i] = LocalUpdate(result.model, train, client, cfg);
    });

    std::vector<ClientUpdate> ready;
    ready.reserve(m);
    for (auto& u : updates) {
      if (!u.ok()) return u.status();
      ready.push_back(*std::move(u));
    }
    absl::StatusOr<std::vector<double>> averaged = FedAvg(ready);
    if (!averaged.ok()) return averaged.status();
    result.model.params = *std::move(averaged);

    absl::StatusOr<double> acc = models::Evaluate(result.model, test);
    if (!acc.ok()) return acc.status();
    record.accuracy = *acc;

    if (cfg.dp) {
      for (int id : record.selected) {
        steps_done[id] += schedule[id].steps_per_round;
        dp::DpConfig spent_cfg;
        spent_cfg.noise_multiplier = schedule[id].sigma;
        spent_cfg.sampling_rate = schedule[id].sampling_rate;
        spent_cfg.steps = steps_done[id];
        spent_cfg.delta = cfg.dp->delta;
        absl::StatusOr<dp::PrivacySpent> spent = dp::EpsilonSpent(spent_cfg);
        if (!spent.ok()) return spent.status();
        record.client_privacy.push_back(*spent);
      }
    }
    result.history.push_back(std::move(record));
  }
  return result;
}

std::string FormatRoundHistory(const std::vector<RoundRecord>& history) {
  std::string out = "round,clients,accuracy,client_epsilons\n";
  for (const RoundRecord& r : history) {
    std::vector<std::string> eps;
    for (const dp::PrivacySpent& p : r.client_privacy) {
      eps.push_back(FormatEpsilon(p.epsilon));
    }
    absl::StrAppend(&out, r.round, ",", absl::StrJoin(r.selected, ";"), ",",
                    absl::StrFormat("%.6f", r.accuracy), ",",
                    absl::StrJoin(eps, ";"), "\n");
  }
  return out;
}

}  // namespace dpfl::fl
