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

#include <random>

#include "gnat/model.hpp"
#include "gnat/presets.hpp"

namespace gnat {
namespace {

RunConfig small_base(int order = 1, int vocab = 3) {
  RunConfig c;
  c.context = {order, vocab};
  c.weights.D = 4;
  c.weights.H = 3;
  c.encoder.D_in = 3;
  return c;
}

TEST(Presets, NamesRoundTrip) {
  for (Preset p : {Preset::kCe, Preset::kCtc, Preset::kRnnt, Preset::kHat, Preset::kLasBounded, Preset::kGnat})
    EXPECT_EQ(parse_preset(to_string(p)), p);
  EXPECT_THROW(parse_preset("transformer"), ConfigError);
}

TEST(Presets, Structure) {
  const RunConfig base = small_base(2);
  const RunConfig ce = expand(Preset::kCe, base);
  EXPECT_EQ(ce.context.order, 0);
  EXPECT_FALSE(ce.lattice.epsilon);
  EXPECT_EQ(ce.weights.normalization, Normalization::kLocalSoftmax);
  const RunConfig ctc = expand(Preset::kCtc, base);
  EXPECT_EQ(ctc.context.order, 0);
  EXPECT_TRUE(ctc.lattice.dedup);
  EXPECT_TRUE(ctc.lattice.epsilon);
  const RunConfig rnnt = expand(Preset::kRnnt, base);
  EXPECT_EQ(rnnt.lattice.variant, AlignmentKind::kLabelFrame);
  EXPECT_EQ(rnnt.context.order, 2);  // prediction context keeps the base order
  EXPECT_EQ(expand(Preset::kHat, base).weights.normalization, Normalization::kLocalHat);
  EXPECT_EQ(expand(Preset::kLasBounded, base).lattice.variant, AlignmentKind::kLabel);
  const RunConfig g = expand(Preset::kGnat, base);
  EXPECT_EQ(g.weights.normalization, Normalization::kGlobal);
  EXPECT_EQ(g.preset, "gnat");
}

TEST(Presets, GnatRejectsLocalNormalization) {
  RunConfig c = small_base();
  c.weights.normalization = Normalization::kLocalHat;
  EXPECT_THROW(expand(Preset::kGnat, c), ConfigError);
}

TEST(Presets, StateLimit) {
  EXPECT_THROW(expand(Preset::kRnnt, small_base(5, 32)), ConfigError);
  EXPECT_NO_THROW(expand(Preset::kCtc, small_base(5, 32)));  // ctc drops to order 0
}

TEST(Presets, ApplyWithoutPresetIsIdentity) {
  const RunConfig c = small_base();
  EXPECT_EQ(to_json(apply_preset(c)), to_json(c));
  RunConfig named = c;
  named.preset = "ce";
  EXPECT_EQ(apply_preset(named).context.order, 0);
}

// RNNT decoding uses the cap, training widens to |y| + 1 up to the cap.
TEST(Presets, TransducerLabelsPerFrame) {
  const RunConfig c = expand(Preset::kRnnt, small_base());
  const Model m(c);
  EXPECT_EQ(m.lattice(5, 1).k(), 2);
  EXPECT_EQ(m.lattice(5, 10).k(), c.lattice.k_cap);
  EXPECT_EQ(m.lattice(5).k(), c.lattice.k_cap);
}

struct Scored {
  Model model;
  Matrix h;
  ContextCache cache;
};

ScoreFn scores_of(const Scored& s) {
  return [&s](int t, StateId q, int col) {
    Matrix out;
    s.model.weights().raw_scores(s.cache, s.h.row(t), out);
    return out(q, col);
  };
}

Scored scored(const RunConfig& c, const Matrix& x, std::uint64_t seed) {
  Model m = Model::initialized(c, seed);
  Matrix h = m.encoder().encode(x);
  ContextCache cache = m.weights().prepare();
  return {std::move(m), std::move(h), std::move(cache)};
}

class PresetLoss : public ::testing::TestWithParam<int> {};

TEST_P(PresetLoss, MatchesTextbookRecursions) {
  std::mt19937_64 rng(GetParam());
  const int frames = 2 + GetParam() % 4;
  Matrix x(frames, 3);
  fill_uniform(x, 1.0, rng);
  std::vector<Label> y(1 + GetParam() % 2);
  for (Label& v : y) v = std::uniform_int_distribution<int>(0, 2)(rng);
  const RunConfig base = small_base(GetParam() % 3);

  for (Preset p : {Preset::kRnnt, Preset::kHat}) {
    const Scored s = scored(expand(p, base), x, GetParam());
    const double ref = rnnt_oracle_loss(scores_of(s), s.model.context(), frames, y, p == Preset::kHat);
    EXPECT_NEAR(s.model.loss(x, y).loss, ref, 1e-9 * std::max(1.0, ref)) << to_string(p);
  }
  {
    const Scored s = scored(expand(Preset::kCtc, base), x, GetParam());
    const double ref = ctc_oracle_loss(scores_of(s), 3, frames, y);
    EXPECT_NEAR(s.model.loss(x, y).loss, ref, 1e-9 * std::max(1.0, ref)) << "ctc";
  }
  {
    std::vector<Label> yce(frames);
    for (Label& v : yce) v = std::uniform_int_distribution<int>(0, 2)(rng);
    const Scored s = scored(expand(Preset::kCe, base), x, GetParam());
    const double ref = ce_oracle_loss(scores_of(s), 3, yce);
    EXPECT_NEAR(s.model.loss(x, yce).loss, ref, 1e-12 * std::max(1.0, ref)) << "ce";
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, PresetLoss, ::testing::Range(1, 13));

TEST(Presets, CtcRepeatNeedsBlank) {
  const RunConfig c = expand(Preset::kCtc, small_base());
  const Model m = Model::initialized(c, 3);
  Matrix x(2, 3);
  EXPECT_FALSE(m.loss(x, std::vector<Label>{1, 1}).target_reachable());
  Matrix x3(3, 3);
  EXPECT_TRUE(m.loss(x3, std::vector<Label>{1, 1}).target_reachable());
}

}  // namespace
}  // namespace gnat
