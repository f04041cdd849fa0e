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

#pragma once

// CTC-style label deduplication in the lattice.
//
// The triple product L_T x D x C only ever visits (q_a, eps,
// q_c) and (q_a, x(q_c), q_c), where x(q_c) is the unique label entering
// q_c. The inference engine keeps these as two twin vectors per alignment
// state and runs with dedup = true.

#include <cstdint>
#include <queue>
#include <span>
#include <vector>

#include "gnat/alignment.hpp"
#include "gnat/context.hpp"
#include "gnat/dedup_transducer.hpp"
#include "gnat/inference.hpp"
#include "gnat/weights.hpp"

namespace gnat {

// Size of the reduced dedup lattice: an epsilon twin for every (q_a, q_c)
// and a repeat twin for every non-initial q_c.
inline std::uint64_t dedup_state_count(const AlignmentLattice& a, const ContextDependency& c) {
  const NgramContext ctx = lattice_context(c, true);
  return static_cast<std::uint64_t>(a.num_states()) * (2 * ctx.size() - 1);
}

// Reduced states reachable from the initial state, by breadth-first search.
inline std::uint64_t dedup_reachable_states(const AlignmentLattice& a, const ContextDependency& c) {
  const NgramContext ctx = lattice_context(c, true);
  const int n = ctx.size();
  const Matrix zeros(n, c.vocab() + 1);
  std::vector<std::vector<char>> seen(a.num_states(), std::vector<char>(2 * n, 0));
  std::queue<std::pair<StateId, int>> todo;
  seen[a.initial()][ctx.initial()] = 1;
  todo.push({a.initial(), ctx.initial()});
  std::uint64_t count = 0;
  while (!todo.empty()) {
    auto [q, i] = todo.front();
    todo.pop();
    ++count;
    if (a.is_final(q)) continue;
    detail::for_each_arc(a, ctx, true, q, zeros, [&](const detail::ArcRef& r) {
      if (r.src != i || seen[r.dst_q][r.dst]) return;
      seen[r.dst_q][r.dst] = 1;
      todo.push({r.dst_q, r.dst});
    });
  }
  return count;
}

inline Weight dedup_denominator(const AlignmentLattice& a, const ContextDependency& c,
                                const LatticeWeights& w, SemiringTag tag = SemiringTag::kLog) {
  return shortest_distance(a, c, w, tag, true);
}

inline Weight dedup_numerator(const AlignmentLattice& a, const ContextDependency& c,
                              std::span<const Label> y, const LatticeWeights& w,
                              SemiringTag tag = SemiringTag::kLog) {
  return numerator(a, c, y, w, tag, true);
}

}  // namespace gnat
