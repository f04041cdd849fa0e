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

#include "gnat/dedup.hpp"
#include "gnat/oracle.hpp"

namespace gnat {
namespace {

constexpr Label e = kNoLabel;

TEST(Dedup, CollapseMergesRepeatsAndDropsEpsilon) {
  EXPECT_EQ(ctc_collapse(std::vector<Label>{0, 0, e, 0, 1, 1}), (std::vector<Label>{0, 0, 1}));
  EXPECT_EQ(ctc_collapse(std::vector<Label>{e, e}), std::vector<Label>{});
  EXPECT_EQ(ctc_collapse(std::vector<Label>{2, e, e, 2, 2}), (std::vector<Label>{2, 2}));
  EXPECT_EQ(ctc_collapse(std::vector<Label>{0, 1, 0}), (std::vector<Label>{0, 1, 0}));
  EXPECT_EQ(ctc_collapse(std::vector<Label>{0, 1, 1, 2}), (std::vector<Label>{0, 1, 2}));     // abbc
  EXPECT_EQ(ctc_collapse(std::vector<Label>{0, 1, 1, e, 1}), (std::vector<Label>{0, 1, 1}));  // abb-eps-b
}

TEST(Dedup, TransducerShape) {
  const DedupTransducer d(3);
  EXPECT_EQ(d.num_states(), 4);
  EXPECT_EQ(d.initial(), 3);
  const auto arcs = d.arcs();
  EXPECT_EQ(arcs.size(), 16u);
  int silent = 0;
  for (const auto& a : arcs) {
    EXPECT_EQ(a.dst, DedupTransducer::state_of(a.in, 3));
    silent += a.out == kNoLabel;
  }
  EXPECT_EQ(silent, 4 + 3);  // every epsilon arc plus the three self repeats
}

TEST(Dedup, TransducerAgreesWithCollapse) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> x(-1, 2), len(0, 12);
  const DedupTransducer d(3);
  for (int i = 0; i < 500; ++i) {
    std::vector<Label> z(len(rng));
    for (Label& v : z) v = x(rng);
    EXPECT_EQ(d.transduce(z), ctc_collapse(z));
  }
}

TEST(Dedup, StateCountFormula) {
  for (int order : {1, 2})
    for (int vocab : {2, 3}) {
      const ContextDependency c(order, vocab);
      for (const auto& a : {AlignmentLattice::frame(5), AlignmentLattice::label_frame(3, 2)}) {
        const std::uint64_t qa = a.num_states(), qc = c.num_states();
        EXPECT_EQ(dedup_state_count(a, c), 2 * qa * qc - qa);
        EXPECT_LE(dedup_reachable_states(a, c), dedup_state_count(a, c));
      }
    }
}

// The reduced lattice against the full product with the transducer, which
// carries V + 1 copies of every state.
TEST(Dedup, ReachableStatesMatchTheTripleProduct) {
  for (int order : {0, 1, 2})
    for (const auto& a : {AlignmentLattice::frame(4), AlignmentLattice::label_frame(3, 1)}) {
      const ContextDependency c(order, 2);
      const ContextDependency topo(std::max(order, 1), 2);
      LatticeWeights zeros;
      zeros.vocab = 2;
      zeros.omega.resize(a.num_states());
      for (StateId q = 0; q < a.num_states(); ++q)
        if (!a.is_final(q)) zeros.omega[q] = Matrix(topo.num_states(), 3);
      const auto triple = build_explicit(a, topo, zeros, LatticeMode::kDedup);
      EXPECT_EQ(dedup_reachable_states(a, c), reachable_states(triple)) << "order " << order;
    }
}

struct Case {
  ContextDependency c;
  AlignmentLattice a;
  LatticeWeights w;
};

Case make_case(int order, const AlignmentLattice& a, Normalization n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ContextDependency c(order, 2);
  WeightFunction wf(WeightKind::kSharedEmb, c, 3, n);
  wf.init_uniform(rng);
  Matrix h(a.frames(), 3);
  fill_uniform(h, 1.0, rng);
  return {c, a, score_lattice(wf, a, h)};
}

TEST(Dedup, ForwardMatchesTripleProduct) {
  std::uint64_t seed = 0;
  for (int order : {1, 2})
    for (const auto& a : {AlignmentLattice::frame(4), AlignmentLattice::label_frame(2, 2)}) {
      const Case k = make_case(order, a, Normalization::kGlobal, ++seed);
      const auto lat = build_explicit(k.a, k.c, k.w, LatticeMode::kDedup);
      const std::vector<Label> y = {0, 0};
      const OracleSummary s = summarize(lat, y);
      EXPECT_NEAR(dedup_denominator(k.a, k.c, k.w), s.total, 1e-10);
      EXPECT_NEAR(dedup_denominator(k.a, k.c, k.w, SemiringTag::kTropical), s.best, 1e-10);
      EXPECT_NEAR(dedup_numerator(k.a, k.c, y, k.w), s.target, 1e-10);
    }
}

// Every input string is one path, so the plain and deduplicated totals agree.
TEST(Dedup, DenominatorEqualsPlainDenominatorAtOrderZero) {
  const Case k = make_case(0, AlignmentLattice::frame(5), Normalization::kGlobal, 3);
  EXPECT_NEAR(dedup_denominator(k.a, k.c, k.w), shortest_distance(k.a, k.c, k.w, SemiringTag::kLog),
              1e-12);
}

TEST(Dedup, LocalLatticeSumsToOne) {
  for (int order : {0, 1, 2}) {
    const Case k = make_case(order, AlignmentLattice::frame(5), Normalization::kLocalSoftmax, 4);
    EXPECT_NEAR(dedup_denominator(k.a, k.c, k.w), 0.0, 1e-12);
  }
}

// "aa" needs an epsilon between the two a's.
TEST(Dedup, RepeatedLabelNeedsASeparator) {
  const std::vector<Label> aa = {0, 0};
  const Case two = make_case(1, AlignmentLattice::frame(2), Normalization::kGlobal, 5);
  EXPECT_EQ(dedup_numerator(two.a, two.c, aa, two.w), kInfinity);
  const Case three = make_case(1, AlignmentLattice::frame(3), Normalization::kGlobal, 5);
  const StateId a = three.c.next_state(0, 0);
  const Weight only = three.w.omega[0](0, 0) + three.w.omega[1](a, 2) + three.w.omega[2](a, 0);
  EXPECT_NEAR(dedup_numerator(three.a, three.c, aa, three.w), only, 1e-12);
}

}  // namespace
}  // namespace gnat
