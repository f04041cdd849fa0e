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
#include <vector>

#include "gnat/context.hpp"

namespace gnat {
namespace {

std::vector<Label> word(const std::string& s) {
  std::vector<Label> out;
  for (char c : s) out.push_back(c - 'a');
  return out;
}

TEST(Context, StateCounts) {
  EXPECT_EQ(ContextDependency(2, 2).num_states(), 7);
  EXPECT_EQ(ContextDependency(2, 32).num_states(), 1057);
  EXPECT_EQ(ContextDependency(0, 5).num_states(), 1);
  EXPECT_EQ(ContextDependency(1, 5).num_states(), 6);
  EXPECT_EQ(count_context_states(3, 3), 40u);
}

TEST(Context, LexicographicIndexing) {
  const ContextDependency c(2, 2);
  EXPECT_EQ(c.state_index(word("")), 0);
  EXPECT_EQ(c.state_index(word("a")), 1);
  EXPECT_EQ(c.state_index(word("b")), 2);
  EXPECT_EQ(c.state_index(word("aa")), 3);
  EXPECT_EQ(c.state_index(word("ab")), 4);
  EXPECT_EQ(c.state_index(word("bb")), 6);
  for (StateId q = 0; q < c.num_states(); ++q) EXPECT_EQ(c.state_index(c.history_of(q)), q);
  EXPECT_EQ(c.state_name(4), "ab");
  EXPECT_EQ(c.state_name(0), "i");
}

TEST(Context, NextStateKeepsTheSuffix) {
  const ContextDependency c(2, 2);
  EXPECT_EQ(c.next_state(c.state_index(word("ab")), 0), c.state_index(word("ba")));
  EXPECT_EQ(c.next_state(0, 1), c.state_index(word("b")));
  EXPECT_EQ(c.next_state(c.state_index(word("bb")), 1), c.state_index(word("bb")));
  const ContextDependency c0(0, 3);
  for (Label y = 0; y < 3; ++y) EXPECT_EQ(c0.next_state(0, y), 0);
}

TEST(Context, FourteenTransitions) {
  const ContextDependency c(2, 2);
  int transitions = 0;
  for (StateId q = 0; q < c.num_states(); ++q)
    for (Label y = 0; y < c.vocab(); ++y) {
      const StateId next = c.next_state(q, y);
      EXPECT_EQ(c.incoming_label(next), y);
      ++transitions;
    }
  EXPECT_EQ(transitions, 14);
}

TEST(Context, RejectsBadLabelsAndSizes) {
  const ContextDependency c(1, 2);
  EXPECT_THROW(c.next_state(0, 2), std::out_of_range);
  EXPECT_THROW(c.next_state(9, 0), std::out_of_range);
  EXPECT_THROW(ContextDependency(40, 40), std::exception);
}

// The blockwise kernel against a plain loop over all arcs.
TEST(Context, VectorizedNextMatchesArcLoop) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int order = 0; order <= 3; ++order)
    for (int vocab : {1, 2, 3, 5}) {
      if (count_context_states(order, vocab) > 2000) continue;
      const ContextDependency c(order, vocab);
      const int n = c.num_states();
      std::vector<double> alpha(n);
      for (double& a : alpha) a = u(rng);
      Matrix omega(n, vocab + 1);
      for (double& w : omega.flat()) w = u(rng);
      for (SemiringTag tag : {SemiringTag::kLog, SemiringTag::kTropical, SemiringTag::kReal}) {
        alpha[n - 1] = zero(tag);  // one dead source
        std::vector<double> want(n, zero(tag));
        for (StateId q = 0; q < n; ++q)
          for (Label y = 0; y < vocab; ++y) {
            const StateId d = c.next_state(q, y);
            want[d] = plus(tag, want[d], times(tag, alpha[q], omega(q, y)));
          }
        const auto got = next_context_vectorized(c, alpha, omega, tag);
        for (int q = 0; q < n; ++q) {
          if (std::isinf(want[q])) {
            EXPECT_EQ(got[q], want[q]);
          } else {
            EXPECT_NEAR(got[q], want[q], 1e-12 * std::max(1.0, std::abs(want[q])));
          }
        }
      }
    }
}

TEST(Context, StringContextChain) {
  const ContextDependency c(1, 2);
  const std::vector<Label> y = word("abb");
  const StringContext s = intersect_string(y, c);
  EXPECT_EQ(s.size(), 4);
  EXPECT_EQ(s.base_states(), (std::vector<StateId>{0, 1, 2, 2}));
  EXPECT_TRUE(s.is_final(3));
  EXPECT_FALSE(s.is_final(2));
  EXPECT_EQ(s.incoming_label(0), kNoLabel);
  EXPECT_EQ(s.incoming_label(2), 1);
  EXPECT_THROW(intersect_string(word("c"), c), std::out_of_range);
}

TEST(Context, LiftedOrderZeroReadsOneState) {
  const ContextDependency c(0, 3);
  const NgramContext n = NgramContext::lifted_order0(c);
  EXPECT_EQ(n.size(), 4);
  for (StateId q = 0; q < 4; ++q) EXPECT_EQ(n.weight_state(q), 0);
  EXPECT_EQ(n.incoming_label(2), 1);
}

}  // namespace
}  // namespace gnat
