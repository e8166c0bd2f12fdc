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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Tolerances and time limits are pinned
// below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "absl/strings/str_format.h"
#include "dpfl/cli.h"
#include "dpfl/data.h"
#include "dpfl/dp.h"
#include "dpfl/federated.h"
#include "dpfl/harness.h"
#include "dpfl/models.h"
#include "dpfl/random.h"
#include "test_util.h"

namespace dpfl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Pinned tolerances.
constexpr double kAnchorRelTol = 1e-12;          // 1
constexpr double kOracleRelTol = 0.01;           // 2
constexpr double kCalibrationLow = 0.995;        // 3
constexpr double kGradRelTol = 1e-5;             // 4
constexpr int kGradCasesPerKind = 100;           // 4
constexpr double kNoiseStdRelTol = 0.03;         // 7
constexpr int kNoiseDraws = 100000;              // 7
constexpr double kTrendMinNoNoise = 95.0;        // 8, percent
constexpr double kTrendMinGap = 5.0;             // 8, percentage points
constexpr double kNonIidSlack = 2.0;             // 9, percentage points
constexpr int kTrendSeeds = 5;                   // 8, 9

// Pinned time limits in seconds.
constexpr double kLimit[12] = {0, 1, 10, 30, 30, 5, 10, 20, 180, 180, 1, 360};

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void Report(int id, const char* name, const std::function<Outcome()>& check,
            double extra_seconds = 0.0) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o = check();
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() +
      extra_seconds;
  const bool in_time = secs < kLimit[id];
  const bool pass = o.pass && in_time;
  failures += !pass;
  std::printf("[%s] criterion %d, %s: %s; %.2f s (limit %.0f s)%s\n", pass ? "PASS" : "FAIL", id,
              name, o.detail.c_str(), secs, kLimit[id], in_time ? "" : " TIME LIMIT EXCEEDED");
  std::fflush(stdout);
}

harness::ExperimentConfig DemoConfig() {
  return *harness::ParseConfigText(harness::DemoConfigText());
}

std::string ReadFile(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 1
Outcome AccountantAnchor() {
  RandomStream rng(1);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int64_t steps = 1 + static_cast<int64_t>(rng.UniformInt(10000));
    const double alpha = 1.0 + 255.0 * rng.Uniform();
    const double sigma = 0.3 + 20.0 * rng.Uniform();
    const std::vector<double> orders = {alpha};
    auto curve = dp::RdpSubsampledGaussian(sigma, 1.0, steps, orders);
    if (!curve.ok() || curve->values.size() != 1) return {false, "accountant error"};
    const double expected = static_cast<double>(steps) * alpha / (2.0 * sigma * sigma);
    worst = std::max(worst, std::abs(curve->values[0] - expected) / expected);
  }
  return {worst <= kAnchorRelTol,
          absl::StrFormat("20 triples, max relative error %.3g (tol %g)", worst, kAnchorRelTol)};
}

// 2
Outcome AccountantOracle() {
  dp::DpConfig cfg;
  cfg.noise_multiplier = 1.0;
  cfg.sampling_rate = 0.01;
  cfg.steps = 1000;
  cfg.delta = 1e-5;
  auto spent = dp::EpsilonSpent(cfg);
  if (!spent.ok()) return {false, std::string(spent.status().message())};
  const double oracle = testutil::EpsilonQuadrature(1.0, 0.01, 1000, 1e-5, dp::DefaultOrders());
  const double rel = std::abs(spent->epsilon - oracle) / oracle;
  return {rel <= kOracleRelTol,
          absl::StrFormat("epsilon %.6f vs oracle %.6f, relative difference %.3g (tol %g)",
                          spent->epsilon, oracle, rel, kOracleRelTol)};
}

// 3
Outcome CalibrationRoundTrip() {
  // The centralized DP-SGD schedule of the demo: q = 20 / 2000, 5 epochs.
  const dp::DpConfig base = dp::MakeDpConfig(2000, 20, 5, 1.0, 0.0, 1e-5, kInf);
  bool ok = true;
  std::string detail = absl::StrFormat("q=%g T=%d:", base.sampling_rate, base.steps);
  for (double target : {0.5, 5.0, 15.0}) {
    auto sigma = dp::CalibrateSigma(target, base.delta, base.sampling_rate, base.steps);
    if (!sigma.ok()) return {false, std::string(sigma.status().message())};
    dp::DpConfig cfg = base;
    cfg.noise_multiplier = *sigma;
    const double eps = dp::EpsilonSpent(cfg)->epsilon;
    ok = ok && eps >= kCalibrationLow * target && eps <= target;
    absl::StrAppendFormat(&detail, " eps %g -> sigma %.4f -> %.5f;", target, *sigma, eps);
  }
  absl::StrAppendFormat(&detail, " window [%g*eps, eps]", kCalibrationLow);
  return {ok, detail};
}

// 4
Outcome GradientCheck() {
  RandomStream rng(4);
  double worst[2] = {0.0, 0.0};
  for (int k = 0; k < 2; ++k) {
    const auto kind = k == 0 ? models::ModelKind::kLinear : models::ModelKind::kMlp;
    for (int t = 0; t < kGradCasesPerKind; ++t) {
      auto [model, batch] = testutil::RandomCase(kind, rng);
      worst[k] = std::max(worst[k], testutil::FiniteDifferenceCheck(model, batch));
    }
  }
  return {worst[0] < kGradRelTol && worst[1] < kGradRelTol,
          absl::StrFormat("%d cases per kind, max relative error linear %.3g, mlp %.3g (tol %g)",
                          kGradCasesPerKind, worst[0], worst[1], kGradRelTol)};
}

// 5
Outcome Verifier() {
  bool ok = true;
  std::string detail = "randomized response";
  for (double eps : {0.1, 0.5, 1.0, 2.0}) {
    const double keep = std::exp(eps) / (1.0 + std::exp(eps));
    dp::DiscreteMechanism m{{"D", "D'"}, {{0, 1}}, {{keep, 1 - keep}, {1 - keep, keep}}};
    auto v = dp::VerifyDpEnumeration(m, eps, 0.0);
    ok = ok && v.ok() && v->holds;
    absl::StrAppendFormat(&detail, " eps=%g %s", eps, v.ok() && v->holds ? "holds" : "FAILS");
  }
  dp::DiscreteMechanism det{{"D", "D'"}, {{0, 1}}, {{1.0, 0.0}, {0.0, 1.0}}};
  auto v = dp::VerifyDpEnumeration(det, 10.0, 0.0);
  const bool rejected = v.ok() && !v->holds;
  ok = ok && rejected;
  absl::StrAppendFormat(&detail, "; deterministic at eps=10 %s",
                        rejected ? "rejected" : "ACCEPTED");
  return {ok, detail};
}

// 6
Outcome FedAvgDegenerate(const harness::PreparedData& data) {
  bool ok = true;
  std::string detail;
  for (auto kind : {models::ModelKind::kLinear, models::ModelKind::kMlp}) {
    const models::ModelSpec spec{kind, data.train.dim, kind == models::ModelKind::kMlp ? 16 : 0,
                                 data.train.num_categories};
    std::vector<data::ClientShard> one(1);
    one[0].indices.resize(data.train.rows);
    std::iota(one[0].indices.begin(), one[0].indices.end(), size_t{0});
    fl::FlConfig cfg;
    cfg.num_clients = 1;
    cfg.fraction = 1.0;
    cfg.rounds = 1;
    cfg.local_epochs = 2;
    cfg.batch_size = 20;
    cfg.lr = 0.5;
    const uint64_t master = 20240601;
    auto fed = fl::RunFederated(data.train, one, data.test, spec, cfg, master);
    RandomStream stream(fl::ClientStreamSeed(master, 0, 0));
    auto central = models::TrainSgd(models::InitModel(spec, fl::GlobalInitSeed(master)),
                                    data.train, {cfg.lr, cfg.local_epochs, cfg.batch_size},
                                    stream);
    const bool same = fed.ok() && central.ok() && fed->model.params == central->params;
    ok = ok && same;
    absl::StrAppendFormat(&detail, "%s%s %s", detail.empty() ? "" : ", ",
                          models::ModelKindName(kind), same ? "bitwise equal" : "DIFFERS");
  }
  return {ok, detail};
}

// 7
Outcome NoiseStatistics() {
  const double sigma = 1.1, clip = 1.0;
  const int64_t expected_batch = 20;
  const size_t dim = 8;
  RandomStream rng(7);
  std::vector<models::Gradient> per(expected_batch, models::Gradient(dim));
  for (auto& g : per) {
    for (double& v : g) v = 3.0 * rng.Normal();
  }
  std::vector<double> sum(dim, 0.0), sum_sq(dim, 0.0);
  for (int i = 0; i < kNoiseDraws; ++i) {
    const models::Gradient g = dp::NoisyBatchGradient(per, dim, clip, sigma, expected_batch, rng);
    for (size_t j = 0; j < dim; ++j) {
      sum[j] += g[j];
      sum_sq[j] += g[j] * g[j];
    }
  }
  const double expected = sigma * clip / static_cast<double>(expected_batch);
  double worst = 0.0;
  for (size_t j = 0; j < dim; ++j) {
    const double m = sum[j] / kNoiseDraws;
    const double sd = std::sqrt(sum_sq[j] / kNoiseDraws - m * m);
    worst = std::max(worst, std::abs(sd / expected - 1.0));
  }
  return {worst <= kNoiseStdRelTol,
          absl::StrFormat("%d draws, %zu coordinates, max |std / (sigma C / B) - 1| = %.4f (tol %g)",
                          kNoiseDraws, dim, worst, kNoiseStdRelTol)};
}

const harness::ResultRow* FindRow(const std::vector<harness::ResultRow>& rows,
                                  harness::Setup setup, double eps) {
  for (const auto& r : rows) {
    if (r.setup == setup && r.epsilon == eps) return &r;
  }
  return nullptr;
}

std::vector<uint64_t> TrendSeeds() {
  std::vector<uint64_t> seeds(kTrendSeeds);
  std::iota(seeds.begin(), seeds.end(), uint64_t{1});
  return seeds;
}

// 8
Outcome EndToEndTrend() {
  harness::ExperimentConfig cfg = DemoConfig();
  cfg.setups = {harness::Setup::kCentralizedDp};
  cfg.epsilons = {0.5, kInf};
  cfg.model.kinds = {models::ModelKind::kLinear};
  cfg.seeds = TrendSeeds();
  auto data = harness::PrepareData(cfg.data);
  if (!data.ok()) return {false, std::string(data.status().message())};
  auto result = harness::RunExperiment(cfg, *data);
  if (!result.ok() || !result->status.ok()) return {false, "experiment failed"};
  const auto* clean = FindRow(result->rows, harness::Setup::kCentralizedDp, kInf);
  const auto* noisy = FindRow(result->rows, harness::Setup::kCentralizedDp, 0.5);
  if (!clean || !noisy) return {false, "missing rows"};
  const double gap = clean->mean_accuracy - noisy->mean_accuracy;
  return {clean->mean_accuracy >= kTrendMinNoNoise && gap >= kTrendMinGap,
          absl::StrFormat("%zu train / %zu test, linear, %d seeds: acc(inf) %.2f%% (min %.0f), "
                          "acc(0.5) %.2f%%, gap %.2f points (min %.0f)",
                          data->train.rows, data->test.rows, kTrendSeeds, clean->mean_accuracy,
                          kTrendMinNoNoise, noisy->mean_accuracy, gap, kTrendMinGap)};
}

// 9
Outcome NonIidTrend() {
  harness::ExperimentConfig cfg = DemoConfig();
  cfg.data.synth_categories = 4;
  cfg.setups = {harness::Setup::kFlIid, harness::Setup::kFlNonIid};
  cfg.epsilons = {kInf};
  cfg.model.kinds = {models::ModelKind::kLinear};
  cfg.seeds = TrendSeeds();
  auto result = harness::RunExperiment(cfg);
  if (!result.ok() || !result->status.ok()) return {false, "experiment failed"};
  const auto* iid = FindRow(result->rows, harness::Setup::kFlIid, kInf);
  const auto* noniid = FindRow(result->rows, harness::Setup::kFlNonIid, kInf);
  if (!iid || !noniid) return {false, "missing rows"};
  return {noniid->mean_accuracy <= iid->mean_accuracy + kNonIidSlack,
          absl::StrFormat("4 categories, linear, %d seeds: non-IID %.2f%% vs IID %.2f%% "
                          "(must be <= IID + %.0f points)",
                          kTrendSeeds, noniid->mean_accuracy, iid->mean_accuracy, kNonIidSlack)};
}

// Runs `run --config demo` into `dir`; returns the wall time.
double RunDemo(const std::filesystem::path& dir, bool* ok) {
  const auto start = std::chrono::steady_clock::now();
  const std::string out_dir = dir.string();
  const char* argv[] = {"dpfl_bench", "run", "--config", "demo", "--output-dir", out_dir.c_str()};
  std::ostringstream out, err;
  *ok = RunCli(6, argv, out, err) == 0;
  if (!*ok) std::fprintf(stderr, "%s", err.str().c_str());
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string MaskNumbers(const std::string& md) {
  static const std::regex cell(R"(\d+\.\d\d ± \d+\.\d\d)");
  static const std::regex digest(R"(config_digest: [0-9a-f]{16})");
  return std::regex_replace(std::regex_replace(md, cell, "MEAN ± STD"), digest,
                            "config_digest: DIGEST");
}

}  // namespace
}  // namespace dpfl

int main() {
  using namespace dpfl;
  std::printf("acceptance: tolerances and time limits are fixed in %s\n", __FILE__);
  Report(1, "accountant exactness anchor", AccountantAnchor);
  Report(2, "accountant oracle equivalence", AccountantOracle);
  Report(3, "calibration round-trip", CalibrationRoundTrip);
  Report(4, "gradient correctness", GradientCheck);
  Report(5, "DP inequality verifier", Verifier);
  auto demo_data = harness::PrepareData(DemoConfig().data);
  if (!demo_data.ok()) {
    std::printf("cannot prepare demo data: %s\n", std::string(demo_data.status().message()).c_str());
    return 1;
  }
  Report(6, "FedAvg degenerate equivalence", [&] { return FedAvgDegenerate(*demo_data); });
  Report(7, "noise statistics", NoiseStatistics);
  Report(8, "end-to-end trend", EndToEndTrend);
  Report(9, "non-IID degradation trend", NonIidTrend);

  const auto root = std::filesystem::temp_directory_path() / "dpfl_acceptance";
  std::filesystem::remove_all(root);
  bool ok_a = false, ok_b = false;
  const double run_a = RunDemo(root / "a", &ok_a);
  const double run_b = RunDemo(root / "b", &ok_b);
  Report(10, "report shape", [&]() -> Outcome {
    if (!ok_a) return {false, "demo run failed"};
    const std::string skeleton =
        ReadFile(std::filesystem::path(DPFL_SOURCE_DIR) / "tests/testdata/demo_results_skeleton.md");
    const std::string masked = MaskNumbers(ReadFile(root / "a" / "results.md"));
    const bool same = !skeleton.empty() && masked == skeleton;
    return {same, same ? "demo results.md matches the golden layout "
                         "(Centralized DP, FL-IID, FL-Non IID x 0.5, 5, 15, inf)"
                       : "demo results.md differs from tests/testdata/demo_results_skeleton.md:\n" +
                             masked};
  });
  Report(11, "determinism", [&]() -> Outcome {
    if (!ok_a || !ok_b) return {false, "demo run failed"};
    const std::string a = ReadFile(root / "a" / "results.csv");
    const std::string b = ReadFile(root / "b" / "results.csv");
    const bool same = !a.empty() && a == b;
    return {same, absl::StrFormat("two demo runs (%.1f s, %.1f s): results.csv %s (%zu bytes)",
                                  run_a, run_b, same ? "byte-identical" : "DIFFERS", a.size())};
  }, run_a + run_b);
  std::printf("acceptance: %d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
