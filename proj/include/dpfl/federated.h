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

#ifndef DPFL_FEDERATED_H_
#define DPFL_FEDERATED_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpfl/data.h"
#include "dpfl/dp.h"
#include "dpfl/models.h"
#include "dpfl/random.h"

namespace dpfl::fl {

// Client-level DP settings. Each client gets its own noise multiplier,
// calibrated so that participating in every round stays within the target.
struct ClientDpOptions {
  double clip_norm = 1.0;
  double delta = 1e-5;
  double target_epsilon = dp::kInfinity;
};

struct FlConfig {
  int num_clients = 10;
  double fraction = 0.5;
  int rounds = 10;
  int local_epochs = 1;
  int batch_size = 32;
  double lr = 0.1;
  std::optional<ClientDpOptions> dp;
  // Local updates within a round may run concurrently; results do not depend
  // on this value.
  int num_threads = 1;
};

absl::Status ValidateFlConfig(const FlConfig& cfg);

// ceil(fraction * N), at least 1.
int ClientsPerRound(int num_clients, double fraction);

struct ClientState {
  int client_id = 0;
  data::ClientShard shard;
  // Derived from (master seed, client id, round).
  uint64_t stream_seed = 0;
  // Resolved DP-SGD settings for one round of local training; the noise
  // multiplier is the client's calibrated value.
  std::optional<dp::DpConfig> dp;
};

struct ClientUpdate {
  int client_id = 0;
  std::vector<double> params;
  int64_t num_examples = 0;
  std::optional<dp::PrivacySpent> privacy;  // spend of this round only
};

struct RoundRecord {
  int round = 0;
  std::vector<int> selected;  // ascending
  double accuracy = 0.0;
  // Cumulative per-client spend after this round, aligned with `selected`.
  std::vector<dp::PrivacySpent> client_privacy;
};

struct FederatedResult {
  models::Model model;
  std::vector<RoundRecord> history;
  // Noise multiplier per client id (empty without DP).
  std::vector<double> client_sigma;
};

// Stream seeds. Client streams use the client id as label; selection uses a
// reserved label outside the client id range.
uint64_t ClientStreamSeed(uint64_t master_seed, int client_id, int round);
uint64_t SelectionStreamSeed(uint64_t master_seed, int round);
uint64_t GlobalInitSeed(uint64_t master_seed);

// Uniform sample without replacement of ceil(fraction * N) ids, ascending.
std::vector<int> SelectClients(int num_clients, double fraction,
                               RandomStream& stream);

// Trains a copy of the global model on the client's shard: DP-SGD when
// client.dp is set, plain mini-batch SGD otherwise.
absl::StatusOr<ClientUpdate> LocalUpdate(const models::Model& global,
                                         const models::Batch& train,
                                         const ClientState& client,
                                         const FlConfig& cfg);

// Example-weighted coordinate mean. Weights are the example counts divided by
// their gcd, so equal counts reduce to the plain mean. Each coordinate is
// clamped to the range spanned by the updates.
absl::StatusOr<std::vector<double>> FedAvg(
    const std::vector<ClientUpdate>& updates);

// Full simulation: each round selects clients, trains them from the current
// global model, averages and evaluates. A pure function of its inputs and
// master_seed.
absl::StatusOr<FederatedResult> RunFederated(
    const models::Batch& train, const std::vector<data::ClientShard>& shards,
    const models::Batch& test, const models::ModelSpec& spec,
    const FlConfig& cfg, uint64_t master_seed);

// "round,clients,accuracy,client_epsilons" lines; ids and epsilons are
// ';'-separated and infinite epsilons are written as "inf".
std::string FormatRoundHistory(const std::vector<RoundRecord>& history);

}  // namespace dpfl::fl

#endif  // DPFL_FEDERATED_H_
