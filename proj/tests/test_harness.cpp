// Copyright 2026 The gnat-lattice Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <map>
#include <set>

#include "gnat/harness.hpp"
#include "gnat/model_io.hpp"
#include "gnat/presets.hpp"

namespace gnat {
namespace {

std::vector<Label> word(const std::string& s) {
  std::vector<Label> out;
  for (char c : s) out.push_back(c - 'a');
  return out;
}

TEST(Harness, EditDistance) {
  EXPECT_EQ(edit_distance(word("abc"), word("abc")), 0);
  EXPECT_EQ(edit_distance(word(""), word("ab")), 2);
  EXPECT_EQ(edit_distance(word("ab"), word("")), 2);
  EXPECT_EQ(edit_distance(word("kitten"), word("sitting")), 3);
  EXPECT_EQ(edit_distance(word("abcd"), word("acbd")), 2);
  EXPECT_EQ(edit_distance(word("ba"), word("ab")), 2);
  EXPECT_EQ(edit_distance(word("ab"), word("b")), 1);
  EXPECT_EQ(edit_distance(word("abc"), word("axc")), 1);
}

TEST(Harness, Median) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
}

TEST(Harness, EasyExamplesPlaceOneHotsAtLabelFrames) {
  SyntheticTask task{TaskConfig{}, 4, 6};
  task.config.sigma = 0.0;
  const auto batch = generate_batch(task, 50, 3);
  for (const Example& e : batch) {
    ASSERT_GE(e.x.rows(), 8u);
    std::vector<Label> seen;
    for (std::size_t t = 0; t < e.x.rows(); ++t)
      for (int y = 0; y < 6; ++y)
        if (e.x(t, y) == 1.0) seen.push_back(y);
    EXPECT_EQ(seen, e.y);
    EXPECT_GE(e.y.size(), 1u);
    EXPECT_LE(e.y.size(), 4u);
  }
}

TEST(Harness, LateEvidenceExamples) {
  SyntheticTask task{TaskConfig{}, 4, 8};
  task.config.variant = TaskKind::kLateEvidence;
  task.config.sigma = 0.0;
  for (const Example& e : generate_batch(task, 50, 4)) {
    const int T = static_cast<int>(e.x.rows());
    const double sign = e.x(T - 1, 7);
    EXPECT_EQ(e.y, sign > 0 ? word("ab") : word("cd"));
    EXPECT_EQ(e.x(late_evidence_start(T) - 1, 7), 0.0);
    EXPECT_EQ(e.x(late_evidence_start(T), 7), sign);
  }
  task.vocab = 3;
  EXPECT_THROW(generate_batch(task, 1, 1), ConfigError);
}

TEST(Harness, BatchesAreSeeded) {
  const SyntheticTask task{TaskConfig{}, 4, 8};
  const auto a = generate_batch(task, 5, 11), b = generate_batch(task, 5, 11), c = generate_batch(task, 5, 12);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(a[i].y, b[i].y);
    EXPECT_EQ(a[i].x.flat().size(), b[i].x.flat().size());
    EXPECT_TRUE(std::equal(a[i].x.flat().begin(), a[i].x.flat().end(), b[i].x.flat().begin()));
  }
  EXPECT_NE(batch_seed(1, 0), batch_seed(1, 1));
  EXPECT_NE(batch_seed(1, 0), batch_seed(2, 0));
  bool differs = false;
  for (int i = 0; i < 5; ++i) differs = differs || a[i].y != c[i].y;
  EXPECT_TRUE(differs);
}

RunConfig easy_config() {
  RunConfig c = load_config(std::string(GNAT_SOURCE_DIR) + "/configs/easy.json");
  return c;
}

TEST(Harness, ZeroStepsEvaluatesTheInitialModel) {
  RunConfig c = easy_config();
  c.train.steps = 0;
  c.task.eval_size = 20;
  const TrainResult r = train(c);
  EXPECT_TRUE(r.report.loss_curve.empty());
  EXPECT_EQ(r.report.examples, 20);
  EXPECT_EQ(serialize_model(r.model), serialize_model(Model::initialized(c, c.seed)));
}

TEST(Harness, TrainingIsDeterministic) {
  RunConfig c = easy_config();
  c.train.steps = 15;
  c.task.eval_size = 20;
  const TrainResult a = train(c), b = train(c);
  EXPECT_EQ(serialize_model(a.model), serialize_model(b.model));
  EXPECT_EQ(a.report.ler, b.report.ler);
  ASSERT_EQ(a.report.loss_curve.size(), b.report.loss_curve.size());
  for (std::size_t i = 0; i < a.report.loss_curve.size(); ++i)
    EXPECT_EQ(a.report.loss_curve[i].loss, b.report.loss_curve[i].loss);
  c.seed = 2;
  EXPECT_NE(serialize_model(train(c).model), serialize_model(a.model));
}

// Twenty random states spread over lattice families.
TEST(Harness, SmallGradientStepLowersTheBatchLoss) {
  const char* presets[] = {"", "ctc", "rnnt", "hat", "las_bounded"};
  for (int state = 0; state < 20; ++state) {
    RunConfig c = easy_config();
    c.preset = presets[state % 5];
    if (state % 2) c.encoder.variant = EncoderKind::kBidirRnn;
    c = apply_preset(c);
    const Model m = Model::initialized(c, 100 + state);
    const auto batch = generate_batch(SyntheticTask::from(c), 4, 200 + state);
    Model grad = m.zeros_like();
    const double before = batch_loss(m, batch, &grad);
    Model moved = m;
    auto ps = moved.parameters();
    const auto gs = grad.parameters();
    for (std::size_t i = 0; i < ps.size(); ++i)
      for (std::size_t j = 0; j < ps[i].value->size(); ++j) ps[i].value->data()[j] -= 1e-4 * gs[i].value->data()[j];
    EXPECT_LE(batch_loss(moved, batch, nullptr), before) << "state " << state << " preset '" << c.preset << "'";
  }
}

TEST(Harness, ModelGradientMatchesDifferences) {
  RunConfig c;
  c.context = {1, 2};
  c.lattice.dedup = true;
  c.weights.variant = WeightKind::kSharedRnn;
  c.weights.D = 3;
  c.weights.H = 2;
  c.encoder.variant = EncoderKind::kBidirRnn;
  c.encoder.D_in = 2;
  Model m = Model::initialized(c, 8);
  Matrix x(4, 2);
  std::mt19937_64 rng(8);
  fill_uniform(x, 1.0, rng);
  const std::vector<Label> y = {1, 1};
  Model grad = m.zeros_like();
  m.loss(x, y, &grad);
  auto ps = m.parameters();
  const auto gs = grad.parameters();
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (std::size_t j = 0; j < ps[i].value->size(); ++j) {
      double& v = ps[i].value->data()[j];
      const double keep = v;
      v = keep + 1e-5;
      const double hi = m.loss(x, y).loss;
      v = keep - 1e-5;
      const double lo = m.loss(x, y).loss;
      v = keep;
      const double fd = (hi - lo) / 2e-5, an = gs[i].value->data()[j];
      EXPECT_LE(std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-5}), 1e-4) << ps[i].name;
    }
}

double median_of(const std::vector<LossPoint>& curve, std::size_t lo, std::size_t hi) {
  std::vector<double> xs;
  for (std::size_t i = lo; i < hi; ++i) xs.push_back(curve[i].loss);
  return median(xs);
}

TEST(Harness, LossDecreasesAcrossTheGrid) {
  for (Normalization n : {Normalization::kGlobal, Normalization::kLocalSoftmax, Normalization::kLocalHat})
    for (WeightKind w : {WeightKind::kUnshared, WeightKind::kSharedEmb, WeightKind::kSharedRnn})
      for (EncoderKind e : {EncoderKind::kCausalRnn, EncoderKind::kBidirRnn}) {
        RunConfig c = easy_config();
        c.weights.normalization = n;
        c.weights.variant = w;
        c.encoder.variant = e;
        c.train.steps = 60;
        c.train.log_every = 1;
        c.task.eval_size = 0;
        const TrainResult r = train(c);
        const auto& curve = r.report.loss_curve;
        ASSERT_EQ(curve.size(), 60u);
        EXPECT_LT(median_of(curve, 54, 60), median_of(curve, 0, 6))
            << to_string(n) << " " << to_string(w) << " " << to_string(e);
      }
}

// Labels sit on one-hot frames, so every normalization must learn them
// almost perfectly.
TEST(Harness, EasyTaskIsLearnable) {
  for (Normalization n : {Normalization::kGlobal, Normalization::kLocalSoftmax, Normalization::kLocalHat}) {
    RunConfig c = easy_config();
    c.weights.normalization = n;
    const TrainResult r = train(c);
    EXPECT_LT(r.report.ler, 0.05) << to_string(n);
    EXPECT_LT(r.report.final_loss, r.report.loss_curve.front().loss) << to_string(n);
  }
}

TEST(Harness, NoiselessEasyFeaturesDetermineTheLabels) {
  SyntheticTask task{TaskConfig{}, 4, 8};
  task.config.sigma = 0.0;
  for (const Example& e : generate_batch(task, 100, 9)) {
    std::vector<Label> read;
    for (std::size_t t = 0; t < e.x.rows(); ++t)
      for (int y = 0; y < 4; ++y)
        if (e.x(t, y) > 0.5) read.push_back(y);
    EXPECT_EQ(read, e.y);
  }
}

// With the final-frame channel removed, both prefixes present identical
// early evidence.
TEST(Harness, LateEvidenceIsAmbiguousWithoutTheLastFrames) {
  SyntheticTask task{TaskConfig{}, 4, 8};
  task.config.variant = TaskKind::kLateEvidence;
  task.config.sigma = 0.0;
  task.config.min_frames = task.config.max_frames = 12;
  std::map<std::vector<double>, std::set<std::vector<Label>>> by_features;
  for (const Example& e : generate_batch(task, 200, 10)) {
    Matrix x = e.x;
    for (std::size_t t = 0; t < x.rows(); ++t) x(t, 7) = 0.0;
    by_features[std::vector<double>(x.flat().begin(), x.flat().end())].insert(e.y);
  }
  int ambiguous = 0;
  for (const auto& [x, ys] : by_features) ambiguous += ys.size() == 2;
  EXPECT_EQ(ambiguous, static_cast<int>(by_features.size()));
}

TEST(Harness, GapTableLayout) {
  RunConfig c = load_config(std::string(GNAT_SOURCE_DIR) + "/configs/gap.json");
  c.train.steps = 2;
  c.task.eval_size = 4;
  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  const GapTable t = run_gap_experiment(c, seeds);
  ASSERT_EQ(t.cells.size(), 4u);
  for (const auto& cell : t.cells) {
    EXPECT_EQ(cell.lers.size(), 3u);
    EXPECT_EQ(cell.median, median(cell.lers));
    EXPECT_GE(cell.spread, 0.0);
  }
  EXPECT_EQ(t.cell(EncoderKind::kBidirRnn, Normalization::kGlobal).encoder, EncoderKind::kBidirRnn);
}

}  // namespace
}  // namespace gnat
