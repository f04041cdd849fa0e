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

#include <cmath>
#include <random>

#include "gnat/weights.hpp"

namespace gnat {
namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 2.0) {
  Matrix m(r, c);
  fill_uniform(m, scale, rng);
  return m;
}

double real_row_sum(const Matrix& y, std::size_t r) {
  double s = 0.0;
  for (double x : y.row(r)) s += std::exp(-x);
  return s;
}

TEST(Weights, GlobalNormalizationIsIdentity) {
  std::mt19937_64 rng(1);
  const Matrix x = random_matrix(4, 3, rng);
  const Matrix y = normalize_rows(x, {true, true}, Normalization::kGlobal);
  EXPECT_EQ(y.flat().size(), x.flat().size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y.data()[i], x.data()[i]);
}

TEST(Weights, SoftmaxRowsSumToOne) {
  std::mt19937_64 rng(2);
  const Matrix x = random_matrix(5, 4, rng, 30.0);
  for (ArcMask mask : {ArcMask{true, true}, ArcMask{true, false}, ArcMask{false, true}}) {
    const Matrix y = normalize_rows(x, mask, Normalization::kLocalSoftmax);
    for (std::size_t r = 0; r < 5; ++r) EXPECT_NEAR(real_row_sum(y, r), 1.0, 1e-12);
    if (!mask.epsilon) EXPECT_EQ(y(0, 3), kInfinity);
    if (!mask.labels) EXPECT_EQ(y(0, 0), kInfinity);
  }
  EXPECT_THROW(normalize_rows(x, {false, false}, Normalization::kLocalSoftmax), std::invalid_argument);
}

TEST(Weights, HatSplitsEpsilonBySigmoid) {
  std::mt19937_64 rng(3);
  const Matrix x = random_matrix(6, 4, rng, 5.0);
  const Matrix y = normalize_rows(x, {true, true}, Normalization::kLocalHat);
  for (std::size_t r = 0; r < 6; ++r) {
    const double s_eps = -x(r, 3);
    const double b = 1.0 / (1.0 + std::exp(-s_eps));
    EXPECT_NEAR(std::exp(-y(r, 3)), b, 1e-12);
    double labels = 0.0;
    for (int j = 0; j < 3; ++j) labels += std::exp(-y(r, j));
    EXPECT_NEAR(labels, 1.0 - b, 1e-12);
    EXPECT_NEAR(real_row_sum(y, r), 1.0, 1e-12);
  }
  // A single arc kind degenerates to a softmax over it.
  const Matrix z = normalize_rows(x, {false, true}, Normalization::kLocalHat);
  EXPECT_NEAR(z(0, 3), 0.0, 1e-15);
}

TEST(Weights, HatSurvivesExtremeScores) {
  Matrix x(1, 3);
  x(0, 0) = -800;
  x(0, 1) = 5;
  x(0, 2) = 900;
  const Matrix y = normalize_rows(x, {true, true}, Normalization::kLocalHat);
  for (double v : y.flat()) EXPECT_FALSE(std::isnan(v));
  EXPECT_NEAR(real_row_sum(y, 0), 1.0, 1e-12);
}

TEST(Weights, NormalizationBackwardMatchesDifferences) {
  std::mt19937_64 rng(4);
  const Matrix x = random_matrix(3, 4, rng);
  const Matrix dy = random_matrix(3, 4, rng);
  for (Normalization mode : {Normalization::kLocalSoftmax, Normalization::kLocalHat})
    for (ArcMask mask : {ArcMask{true, true}, ArcMask{true, false}, ArcMask{false, true}}) {
      auto f = [&](const Matrix& xx) {
        const Matrix y = normalize_rows(xx, mask, mode);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i)
          if (std::isfinite(y.data()[i])) s += dy.data()[i] * y.data()[i];
        return s;
      };
      Matrix masked_dy = dy;
      const Matrix y0 = normalize_rows(x, mask, mode);
      for (std::size_t i = 0; i < y0.size(); ++i)
        if (!std::isfinite(y0.data()[i])) masked_dy.data()[i] = 0.0;
      const Matrix dx = normalize_rows_backward(x, mask, mode, masked_dy);
      for (std::size_t i = 0; i < x.size(); ++i) {
        Matrix hi = x, lo = x;
        hi.data()[i] += 1e-6;
        lo.data()[i] -= 1e-6;
        EXPECT_NEAR(dx.data()[i], (f(hi) - f(lo)) / 2e-6, 1e-7) << to_string(mode) << " entry " << i;
      }
    }
}

TEST(Weights, UnsharedScoresAreAffine) {
  std::mt19937_64 rng(5);
  const ContextDependency c(1, 2);
  WeightFunction wf(WeightKind::kUnshared, c, 2, Normalization::kGlobal);
  wf.init_uniform(rng);
  const std::vector<double> h = {0.5, -1.5};
  Matrix s;
  wf.raw_scores(wf.prepare(), h, s);
  ASSERT_EQ(s.rows(), 3u);
  ASSERT_EQ(s.cols(), 3u);
  for (std::size_t q = 0; q < 3; ++q)
    for (std::size_t y = 0; y < 3; ++y) {
      const double* w = wf.w().data() + (q * 3 + y) * 2;
      EXPECT_NEAR(s(q, y), wf.b()(q, y) + w[0] * h[0] + w[1] * h[1], 1e-15);
    }
  EXPECT_THROW(wf.raw_scores(wf.prepare(), std::vector<double>{1.0}, s), std::invalid_argument);
}

// With one state and a zero initial recurrence, the RNN embedding is its
// projection bias, so it must score exactly like a shared embedding table.
TEST(Weights, SharedRnnAtOrderZeroMatchesSharedEmbedding) {
  std::mt19937_64 rng(6);
  const ContextDependency c(0, 4);
  WeightFunction rnn(WeightKind::kSharedRnn, c, 5, Normalization::kGlobal, 7);
  rnn.init_uniform(rng);
  WeightFunction emb(WeightKind::kSharedEmb, c, 5, Normalization::kGlobal);
  emb.w() = rnn.w();
  emb.b() = rnn.b();
  for (int i = 0; i < 5; ++i) emb.embedding()(0, i) = rnn.rnn_projection_bias()(i, 0);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix h = random_matrix(1, 5, rng);
    Matrix a, b;
    rnn.raw_scores(rnn.prepare(), h.row(0), a);
    emb.raw_scores(emb.prepare(), h.row(0), b);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.data()[i], b.data()[i], 1e-12);
  }
}

TEST(Weights, SharedRnnDependsOnHistoryOrder) {
  std::mt19937_64 rng(7);
  const ContextDependency c(2, 2);
  WeightFunction wf(WeightKind::kSharedRnn, c, 3, Normalization::kGlobal, 4);
  wf.init_uniform(rng);
  const ContextCache cache = wf.prepare();
  const StateId ab = c.state_index(std::vector<Label>{0, 1});
  const StateId ba = c.state_index(std::vector<Label>{1, 0});
  double diff = 0.0;
  for (int i = 0; i < 3; ++i) diff += std::abs(cache.embedding(ab, i) - cache.embedding(ba, i));
  EXPECT_GT(diff, 1e-6);
}

TEST(Weights, CausalEncoderIsPrefixInvariant) {
  std::mt19937_64 rng(8);
  Encoder enc(EncoderKind::kCausalRnn, 3, 4);
  enc.init_uniform(rng);
  EXPECT_TRUE(enc.streaming());
  const Matrix x = random_matrix(9, 3, rng);
  const Matrix full = enc.encode(x);
  for (std::size_t t = 1; t <= 9; ++t) {
    Matrix prefix(t, 3);
    for (std::size_t r = 0; r < t; ++r) std::copy(x.row(r).begin(), x.row(r).end(), prefix.row(r).begin());
    const Matrix part = enc.encode(prefix);
    for (std::size_t r = 0; r < t; ++r)
      for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(part(r, i), full(r, i));
  }
}

TEST(Weights, BidirectionalEncoderSeesTheFuture) {
  std::mt19937_64 rng(9);
  Encoder enc(EncoderKind::kBidirRnn, 3, 4);
  enc.init_uniform(rng);
  EXPECT_FALSE(enc.streaming());
  Matrix x = random_matrix(6, 3, rng);
  const Matrix before = enc.encode(x);
  x(5, 0) += 1.0;
  const Matrix after = enc.encode(x);
  EXPECT_NE(before(0, 0), after(0, 0));
}

TEST(Weights, EncoderGradientMatchesDifferences) {
  for (EncoderKind kind : {EncoderKind::kCausalRnn, EncoderKind::kBidirRnn}) {
    std::mt19937_64 rng(10);
    Encoder enc(kind, 2, 3);
    enc.init_uniform(rng);
    const Matrix x = random_matrix(4, 2, rng);
    const Matrix dh = random_matrix(4, 3, rng);
    auto f = [&](const Encoder& e) {
      const Matrix h = e.encode(x);
      double s = 0.0;
      for (std::size_t i = 0; i < h.size(); ++i) s += h.data()[i] * dh.data()[i];
      return s;
    };
    Encoder::Cache cache;
    enc.encode(x, &cache);
    Encoder grad = enc;
    grad.set_zero();
    enc.backward(x, cache, dh, grad);
    auto ps = enc.parameters();
    auto gs = grad.parameters();
    for (std::size_t k = 0; k < ps.size(); ++k)
      for (std::size_t i = 0; i < ps[k].value->size(); ++i) {
        double& v = ps[k].value->data()[i];
        const double keep = v;
        v = keep + 1e-6;
        const double hi = f(enc);
        v = keep - 1e-6;
        const double lo = f(enc);
        v = keep;
        EXPECT_NEAR(gs[k].value->data()[i], (hi - lo) / 2e-6, 1e-7) << ps[k].name << "[" << i << "]";
      }
  }
}

TEST(Weights, ScorerSkipsStatesWithoutArcs) {
  std::mt19937_64 rng(11);
  const ContextDependency c(1, 3);
  WeightFunction wf(WeightKind::kSharedEmb, c, 4, Normalization::kLocalSoftmax);
  wf.init_uniform(rng);
  const auto a = AlignmentLattice::frame(3);
  const Matrix h = random_matrix(3, 4, rng);
  const LatticeWeights w = score_lattice(wf, a, h);
  ASSERT_EQ(w.omega.size(), 4u);
  EXPECT_TRUE(w.omega[3].empty());
  EXPECT_EQ(w.omega[0].rows(), 4u);
  EXPECT_EQ(w.omega[0].cols(), 4u);
  EXPECT_THROW(score_lattice(wf, AlignmentLattice::frame(5), h), std::invalid_argument);
  EXPECT_THROW(LatticeScorer(wf, a, random_matrix(3, 2, rng)), std::invalid_argument);
}

TEST(Weights, NonFiniteActivationsAreRejected) {
  const ContextDependency c(0, 2);
  WeightFunction wf(WeightKind::kUnshared, c, 2, Normalization::kGlobal);
  Matrix s;
  EXPECT_THROW(wf.raw_scores(wf.prepare(), std::vector<double>{NAN, 0.0}, s), std::domain_error);
}

}  // namespace
}  // namespace gnat
