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
#include <numeric>
#include <string>
#include <vector>

#include "dpfl/data.h"
#include "dpfl/models.h"
#include "dpfl/random.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace dpfl::models {
namespace {

using testutil::FiniteDifferenceCheck;
using testutil::RandomCase;

Batch OneRow(std::vector<double> x, int label, int k) {
  Batch b;
  b.rows = 1;
  b.dim = static_cast<int>(x.size());
  b.num_categories = k;
  b.features = std::move(x);
  b.labels = {label};
  return b;
}

TEST(ModelSpec, ParamCounts) {
  EXPECT_EQ(ParamCount({ModelKind::kLinear, 4, 0, 2}), 10u);
  EXPECT_EQ(ParamCount({ModelKind::kMlp, 4, 3, 2}), 23u);
  EXPECT_EQ(InitModel({ModelKind::kLinear, 4, 0, 2}, 1).params.size(), 10u);
  EXPECT_EQ(InitModel({ModelKind::kMlp, 4, 3, 2}, 1).params.size(), 23u);
  EXPECT_FALSE(ValidateSpec({ModelKind::kLinear, 0, 0, 2}).ok());
  EXPECT_FALSE(ValidateSpec({ModelKind::kLinear, 3, 0, 1}).ok());
  EXPECT_FALSE(ValidateSpec({ModelKind::kMlp, 3, 0, 2}).ok());
}

TEST(InitModel, GlorotBoundsZeroBiasesDeterministic) {
  const ModelSpec spec{ModelKind::kMlp, 30, 7, 3};
  const Model a = InitModel(spec, 42);
  EXPECT_EQ(a.params, InitModel(spec, 42).params);
  EXPECT_NE(a.params, InitModel(spec, 43).params);
  const double a1 = std::sqrt(6.0 / (30 + 7)), a2 = std::sqrt(6.0 / (7 + 3));
  size_t off = 0;
  for (int i = 0; i < 7 * 30; ++i) EXPECT_LE(std::abs(a.params[off++]), a1);
  for (int i = 0; i < 7; ++i) EXPECT_EQ(a.params[off++], 0.0);
  for (int i = 0; i < 3 * 7; ++i) EXPECT_LE(std::abs(a.params[off++]), a2);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(a.params[off++], 0.0);
}

TEST(Forward, ZeroParamsGiveUniform) {
  Model m{{ModelKind::kMlp, 3, 2, 4}, std::vector<double>(ParamCount({ModelKind::kMlp, 3, 2, 4}), 0.0)};
  auto p = Forward(m, std::vector<double>{1.0, -2.0, 3.0});
  ASSERT_TRUE(p.ok());
  for (double v : *p) EXPECT_EQ(v, 0.25);
}

TEST(Forward, NormalizedAndShiftInvariant) {
  RandomStream rng(5);
  for (ModelKind kind : {ModelKind::kLinear, ModelKind::kMlp}) {
    const ModelSpec spec{kind, 6, kind == ModelKind::kMlp ? 4 : 0, 3};
    Model m = InitModel(spec, 9);
    for (double& v : m.params) v = 3.0 * rng.Normal();
    Model shifted = m;
    // Logit-layer biases are the last K parameters.
    for (int k = 0; k < 3; ++k) shifted.params[shifted.params.size() - 1 - k] += 17.0;
    for (int t = 0; t < 100; ++t) {
      std::vector<double> x(6);
      for (double& v : x) v = rng.Normal();
      auto p = Forward(m, x);
      auto q = Forward(shifted, x);
      ASSERT_TRUE(p.ok() && q.ok());
      double sum = 0.0;
      for (int k = 0; k < 3; ++k) {
        EXPECT_GT((*p)[k], 0.0);
        EXPECT_LT((*p)[k], 1.0);
        EXPECT_NEAR((*p)[k], (*q)[k], 1e-12);
        sum += (*p)[k];
      }
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
  }
}

TEST(Forward, NonFiniteInputIsNumericError) {
  Model m = InitModel({ModelKind::kLinear, 2, 0, 2}, 1);
  auto p = Forward(m, std::vector<double>{1.0, std::nan("")});
  ASSERT_FALSE(p.ok());
  EXPECT_EQ(p.status().code(), absl::StatusCode::kInternal);
}

TEST(Loss, ValueAtZeroAndLimits) {
  for (int k : {2, 3, 7}) {
    Model m{{ModelKind::kLinear, 3, 0, k}, std::vector<double>(3 * k + k, 0.0)};
    EXPECT_NEAR(Loss(m, OneRow({0.3, -1.0, 2.0}, 1, k)), std::log(static_cast<double>(k)), 1e-12);
  }
  // Bias pushing the true class far ahead drives the loss to 0.
  Model m{{ModelKind::kLinear, 1, 0, 2}, {0.0, 0.0, 0.0, 800.0}};
  const double l = Loss(m, OneRow({1.0}, 1, 2));
  EXPECT_GE(l, 0.0);
  EXPECT_LT(l, 1e-300);
  // The opposite extreme stays finite thanks to log-sum-exp.
  EXPECT_NEAR(Loss(m, OneRow({1.0}, 0, 2)), 800.0, 1e-9);
}

TEST(Loss, EqualsMeanOfPerExampleLosses) {
  RandomStream rng(8);
  for (int t = 0; t < 20; ++t) {
    auto [model, batch] = RandomCase(t % 2 ? ModelKind::kMlp : ModelKind::kLinear, rng);
    double sum = 0.0;
    for (size_t i = 0; i < batch.rows; ++i) {
      const std::span<const double> row = batch.Row(i);
      sum += Loss(model, OneRow({row.begin(), row.end()}, batch.labels[i], batch.num_categories));
    }
    EXPECT_NEAR(Loss(model, batch), sum / batch.rows, 1e-12);
  }
}

TEST(Gradients, MeanOfPerExampleEqualsBatchGradient) {
  RandomStream rng(3);
  for (int t = 0; t < 50; ++t) {
    auto [model, batch] = RandomCase(t % 2 ? ModelKind::kMlp : ModelKind::kLinear, rng);
    const std::vector<Gradient> per = PerExampleGrads(model, batch);
    ASSERT_EQ(per.size(), batch.rows);
    const Gradient g = Grad(model, batch);
    ASSERT_EQ(g.size(), model.params.size());
    for (size_t j = 0; j < g.size(); ++j) {
      double mean = 0.0;
      for (const Gradient& pg : per) mean += pg[j];
      EXPECT_NEAR(g[j], mean / per.size(), 1e-10);
    }
  }
}

TEST(Gradients, MatchFiniteDifferences) {
  RandomStream rng(77);
  for (ModelKind kind : {ModelKind::kLinear, ModelKind::kMlp}) {
    for (int t = 0; t < 100; ++t) {
      auto [model, batch] = RandomCase(kind, rng);
      EXPECT_LT(FiniteDifferenceCheck(model, batch), 1e-5) << ModelKindName(kind) << " case " << t;
    }
  }
}

TEST(Gradients, LinearBlockIsOuterProductSummingToZero) {
  RandomStream rng(4);
  auto [model, batch] = RandomCase(ModelKind::kLinear, rng);
  const int d = model.spec.input_dim, k = model.spec.num_categories;
  const std::vector<Gradient> per = PerExampleGrads(model, batch);
  for (size_t i = 0; i < batch.rows; ++i) {
    const std::vector<double> p = *Forward(model, batch.Row(i));
    for (int f = 0; f < d; ++f) {
      double column = 0.0;
      for (int c = 0; c < k; ++c) {
        const double expected = (p[c] - (c == batch.labels[i] ? 1.0 : 0.0)) * batch.Row(i)[f];
        EXPECT_NEAR(per[i][c * d + f], expected, 1e-14);
        column += per[i][c * d + f];
      }
      EXPECT_NEAR(column, 0.0, 1e-14);
    }
  }
}

TEST(Gradients, ZeroAtSymmetricStationaryPoint) {
  // Two copies of the same input with opposite labels: at equal logits the
  // softmax residuals cancel exactly.
  for (ModelKind kind : {ModelKind::kLinear, ModelKind::kMlp}) {
    const ModelSpec spec{kind, 3, kind == ModelKind::kMlp ? 4 : 0, 2};
    Model m = InitModel(spec, 2);
    const size_t logit_layer = kind == ModelKind::kMlp ? 3 * 4 + 4 : 0;
    for (size_t j = logit_layer; j < m.params.size(); ++j) m.params[j] = 0.0;
    Batch b;
    b.rows = 2;
    b.dim = 3;
    b.features = {0.5, -1.0, 2.0, 0.5, -1.0, 2.0};
    b.labels = {0, 1};
    for (double v : Grad(m, b)) EXPECT_EQ(v, 0.0);
  }
}

TEST(SgdStep, Identities) {
  Model m = InitModel({ModelKind::kMlp, 3, 2, 2}, 6);
  auto same = SgdStep(m, Gradient(m.params.size(), 0.0), 0.7);
  ASSERT_TRUE(same.ok());
  EXPECT_EQ(same->params, m.params);

  Gradient g(m.params.size());
  for (size_t j = 0; j < g.size(); ++j) g[j] = 0.01 * (static_cast<double>(j) - 5.0);
  auto two = SgdStep(*SgdStep(m, g, 0.25), g, 0.25);
  auto one = SgdStep(m, g, 0.5);
  for (size_t j = 0; j < g.size(); ++j) EXPECT_NEAR(two->params[j], one->params[j], 1e-15);

  auto bad = SgdStep(m, Gradient(m.params.size(), 1e308), 1e10);
  ASSERT_FALSE(bad.ok());
  EXPECT_EQ(bad.status().code(), absl::StatusCode::kInternal);
}

TEST(SgdStep, DescendsOneDimensionalConvexLoss) {
  // D = 1, K = 2: the loss is a convex function of the 4 parameters and
  // along the gradient it behaves like a 1-D quadratic near the start.
  Model m{{ModelKind::kLinear, 1, 0, 2}, {0.3, -0.2, 0.1, 0.0}};
  const Batch b = OneRow({2.0}, 1, 2);
  const double before = Loss(m, b);
  auto after = SgdStep(m, Grad(m, b), 0.1);
  EXPECT_LT(Loss(*after, b), before);
}

TEST(Evaluate, ZeroModelPredictsCategoryZero) {
  RandomStream rng(2);
  auto [model, batch] = RandomCase(ModelKind::kMlp, rng);
  std::fill(model.params.begin(), model.params.end(), 0.0);
  int zeros = 0;
  for (int y : batch.labels) zeros += y == 0;
  EXPECT_DOUBLE_EQ(*Evaluate(model, batch), static_cast<double>(zeros) / batch.rows);
}

TEST(Evaluate, OwnPredictionsAndRescaling) {
  RandomStream rng(12);
  for (ModelKind kind : {ModelKind::kLinear, ModelKind::kMlp}) {
    auto [model, batch] = RandomCase(kind, rng, 40);
    for (size_t i = 0; i < batch.rows; ++i) batch.labels[i] = Predict(model, batch.Row(i));
    EXPECT_EQ(*Evaluate(model, batch), 1.0);

    // Positive rescaling of the logit layer leaves argmax unchanged.
    for (size_t i = 0; i < batch.rows; ++i) batch.labels[i] = static_cast<int>(rng.UniformInt(batch.num_categories));
    Model scaled = model;
    const size_t start = kind == ModelKind::kMlp
                             ? static_cast<size_t>(model.spec.hidden_dim) * (model.spec.input_dim + 1)
                             : 0;
    for (size_t j = start; j < scaled.params.size(); ++j) scaled.params[j] *= 3.5;
    EXPECT_EQ(*Evaluate(model, batch), *Evaluate(scaled, batch));
  }
  Batch empty;
  empty.dim = 4;
  EXPECT_FALSE(Evaluate(InitModel({ModelKind::kLinear, 4, 0, 2}, 1), empty).ok());
}

TEST(TrainSgd, FullBatchReachesHighTrainAccuracy) {
  auto corpus = data::SynthCorpus(500, 2, 128, 3.5, 4);
  auto train = data::FeaturizeCorpus(*corpus, {1024, 1, true});
  ASSERT_TRUE(train.ok());
  for (ModelKind kind : {ModelKind::kLinear, ModelKind::kMlp}) {
    const ModelSpec spec{kind, 1024, kind == ModelKind::kMlp ? 16 : 0, 2};
    RandomStream stream(1);
    // One full batch per epoch: 200 epochs = 200 gradient steps.
    auto m = TrainSgd(InitModel(spec, 1), *train, {1.0, 200, static_cast<int>(train->rows)}, stream);
    ASSERT_TRUE(m.ok());
    EXPECT_GE(*Evaluate(*m, *train), 0.95) << ModelKindName(kind);
  }
}

TEST(TrainSgd, DeterministicInStream) {
  RandomStream rng(1);
  auto [model, batch] = RandomCase(ModelKind::kMlp, rng, 30);
  RandomStream s1(5), s2(5);
  auto a = TrainSgd(model, batch, {0.3, 3, 7}, s1);
  auto b = TrainSgd(model, batch, {0.3, 3, 7}, s2);
  EXPECT_EQ(a->params, b->params);
}

TEST(Gather, CopiesRowsInOrder) {
  RandomStream rng(1);
  auto [model, batch] = RandomCase(ModelKind::kLinear, rng, 5);
  const std::vector<size_t> idx = {4, 0, 4};
  const Batch g = Gather(batch, idx);
  ASSERT_EQ(g.rows, 3u);
  for (size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(g.labels[r], batch.labels[idx[r]]);
    for (int f = 0; f < batch.dim; ++f) EXPECT_EQ(g.Row(r)[f], batch.Row(idx[r])[f]);
  }
}

TEST(Checkpoint, RoundTripIsBitwise) {
  Model m = InitModel({ModelKind::kMlp, 5, 3, 4}, 31);
  m.params[0] = -0.0;
  m.params[1] = 5e-324;
  const std::string bytes = SerializeModel(m);
  EXPECT_EQ(bytes.substr(0, 8), "DPFLMDL1");
  EXPECT_EQ(bytes.size(), 8 + 4 + 4 + 8 * 3 + 8 + 8 * m.params.size());
  // Version 1 and kind 1 (mlp), little-endian.
  EXPECT_EQ(bytes.substr(8, 8), std::string("\x01\x00\x00\x00\x01\x00\x00\x00", 8));
  auto back = DeserializeModel(bytes);
  ASSERT_TRUE(back.ok()) << back.status();
  EXPECT_EQ(back->spec, m.spec);
  ASSERT_EQ(back->params.size(), m.params.size());
  EXPECT_EQ(SerializeModel(*back), bytes);

  const std::string path = testing::TempDir() + "/model.bin";
  ASSERT_TRUE(SaveModel(m, path).ok());
  auto loaded = LoadModel(path);
  ASSERT_TRUE(loaded.ok());
  EXPECT_EQ(SerializeModel(*loaded), bytes);
}

TEST(Checkpoint, RejectsCorruptInput) {
  const std::string bytes = SerializeModel(InitModel({ModelKind::kLinear, 2, 0, 2}, 1));
  EXPECT_FALSE(DeserializeModel(bytes.substr(0, bytes.size() - 1)).ok());
  EXPECT_FALSE(DeserializeModel("NOTAMODEL" + bytes.substr(9)).ok());
  EXPECT_FALSE(DeserializeModel(bytes + "x").ok());
  EXPECT_EQ(LoadModel(testing::TempDir() + "/nope.bin").status().code(), absl::StatusCode::kNotFound);
}

}  // namespace
}  // namespace dpfl::models
