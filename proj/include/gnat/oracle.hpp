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

// Explicit recognition lattices and brute-force path enumeration.
//
// Deliberately naive: every state of the product is materialized, context
// transitions are recomputed from label histories, and paths are walked one
// by one. Nothing here calls into the vectorized engine.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnat/alignment.hpp"
#include "gnat/context.hpp"
#include "gnat/dedup_transducer.hpp"
#include "gnat/semiring.hpp"
#include "gnat/weights.hpp"

namespace gnat {

enum class LatticeMode { kPlain, kDedup };

struct ExplicitState {
  StateId alignment;
  int dedup;  // dedup-transducer state (V = epsilon), -1 in plain mode
  StateId context;
};

struct ExplicitArc {
  int src;
  int dst;
  Label in;   // kNoLabel for epsilon
  Label out;  // kNoLabel for epsilon
  Weight weight;
};

struct ExplicitLattice {
  int vocab = 0;
  LatticeMode mode = LatticeMode::kPlain;
  std::vector<ExplicitState> states;
  std::vector<ExplicitArc> arcs;
  std::vector<std::vector<int>> out_arcs;  // arc indices per state, ascending
  int initial = 0;
  std::vector<char> is_final;

  int num_states() const { return static_cast<int>(states.size()); }
};

struct LatticePath {
  std::vector<int> arcs;
  std::vector<Label> inputs;  // with epsilon as kNoLabel
  std::vector<Label> labels;  // epsilon-free (dedup-mapped in dedup mode)
  Weight weight = 0.0;
};

inline constexpr std::uint64_t kOracleStateLimit = 1'000'000;

namespace oracle_detail {

inline StateId advance(const ContextDependency& c, StateId q, Label y) {
  std::vector<Label> h = c.history_of(q);
  h.push_back(y);
  const std::size_t keep = std::min<std::size_t>(h.size(), c.order());
  return c.state_index(std::span<const Label>(h).last(keep));
}

}  // namespace oracle_detail

// L_T x C (plain) or L_T x D x C (dedup), with every state of the product
// present whether reachable or not. Arc weights are read from the
// per-alignment-state tables in `w` (rows are context states).
inline ExplicitLattice build_explicit(const AlignmentLattice& a, const ContextDependency& c,
                                      const LatticeWeights& w, LatticeMode mode) {
  const int nc = c.num_states(), v = c.vocab();
  const int nd = mode == LatticeMode::kDedup ? v + 1 : 1;
  const std::uint64_t total = static_cast<std::uint64_t>(a.num_states()) * nd * nc;
  if (total > kOracleStateLimit)
    throw std::length_error("explicit lattice would have " + std::to_string(total) + " states");
  ExplicitLattice lat;
  lat.vocab = v;
  lat.mode = mode;
  auto index = [&](StateId qa, int qd, StateId qc) { return (qa * nd + qd) * nc + qc; };
  for (StateId qa = 0; qa < a.num_states(); ++qa)
    for (int qd = 0; qd < nd; ++qd)
      for (StateId qc = 0; qc < nc; ++qc)
        lat.states.push_back({qa, mode == LatticeMode::kDedup ? qd : -1, qc});
  lat.out_arcs.resize(lat.states.size());
  lat.is_final.assign(lat.states.size(), 0);
  lat.initial = index(a.initial(), mode == LatticeMode::kDedup ? v : 0, c.initial());
  const DedupTransducer d(v);
  for (int s = 0; s < lat.num_states(); ++s) {
    const ExplicitState st = lat.states[s];
    if (a.is_final(st.alignment)) {
      lat.is_final[s] = 1;
      continue;
    }
    const Matrix& om = w.omega.at(st.alignment);
    auto add = [&](int dst, Label in, Label out, Weight wt) {
      lat.out_arcs[s].push_back(static_cast<int>(lat.arcs.size()));
      lat.arcs.push_back({s, dst, in, out, wt});
    };
    auto emit = [&](StateId qa2, Label in) {
      const int col = in == kNoLabel ? v : in;
      const Weight wt = om(st.context, col);
      if (mode == LatticeMode::kPlain) {
        const StateId qc2 = in == kNoLabel ? st.context : oracle_detail::advance(c, st.context, in);
        add(index(qa2, 0, qc2), in, in, wt);
        return;
      }
      const auto arc = d.step(st.dedup, in);
      const StateId qc2 = arc.out == kNoLabel ? st.context : oracle_detail::advance(c, st.context, arc.out);
      add(index(qa2, arc.dst, qc2), in, arc.out, wt);
    };
    if (auto next = a.label_successor(st.alignment))
      for (Label y = 0; y < v; ++y) emit(*next, y);
    if (auto next = a.epsilon_successor(st.alignment)) emit(*next, kNoLabel);
  }
  return lat;
}

inline ExplicitLattice build_explicit(const AlignmentLattice& a, const ContextDependency& c,
                                      const WeightFunction& wf, const Matrix& h,
                                      LatticeMode mode) {
  return build_explicit(a, c, score_lattice(wf, a, h), mode);
}

// States reachable from the initial state.
inline std::uint64_t reachable_states(const ExplicitLattice& lat) {
  std::vector<char> seen(lat.num_states(), 0);
  std::vector<int> stack = {lat.initial};
  seen[lat.initial] = 1;
  std::uint64_t n = 0;
  while (!stack.empty()) {
    const int s = stack.back();
    stack.pop_back();
    ++n;
    for (int ai : lat.out_arcs[s]) {
      const int d = lat.arcs[ai].dst;
      if (!seen[d]) {
        seen[d] = 1;
        stack.push_back(d);
      }
    }
  }
  return n;
}

// Depth-first walk over successful paths, arcs in index order. Throws
// std::length_error once more than `cap` paths have been seen.
inline std::uint64_t visit_paths(const ExplicitLattice& lat, std::uint64_t cap,
                                 const std::function<void(const LatticePath&)>& visit) {
  LatticePath path;
  std::uint64_t count = 0;
  std::function<void(int)> walk = [&](int s) {
    if (lat.is_final[s]) {
      if (++count > cap) throw std::length_error("path enumeration cap exceeded");
      path.labels.clear();
      if (lat.mode == LatticeMode::kPlain) {
        for (Label x : path.inputs)
          if (x != kNoLabel) path.labels.push_back(x);
      } else {
        path.labels = ctc_collapse(path.inputs);
      }
      visit(path);
    }
    for (int ai : lat.out_arcs[s]) {
      const ExplicitArc& arc = lat.arcs[ai];
      const Weight saved = path.weight;
      path.arcs.push_back(ai);
      path.inputs.push_back(arc.in);
      path.weight = saved + arc.weight;
      walk(arc.dst);
      path.weight = saved;
      path.arcs.pop_back();
      path.inputs.pop_back();
    }
  };
  walk(lat.initial);
  return count;
}

inline std::vector<LatticePath> enumerate_paths(const ExplicitLattice& lat, std::uint64_t cap) {
  std::vector<LatticePath> out;
  visit_paths(lat, cap, [&](const LatticePath& p) { out.push_back(p); });
  return out;
}

// Everything the equivalence checks need from one enumeration.
struct OracleSummary {
  std::uint64_t paths = 0;
  Weight total = kInfinity;         // log-semiring sum over all paths
  Weight target = kInfinity;        // log-semiring sum over paths emitting the target
  std::uint64_t target_paths = 0;
  Weight best = kInfinity;          // tropical sum
  std::vector<Label> best_labels;
  Weight runner_up = kInfinity;     // best path emitting a different label sequence
};

inline OracleSummary summarize(const ExplicitLattice& lat, std::span<const Label> target,
                               std::uint64_t cap = std::numeric_limits<std::uint64_t>::max()) {
  OracleSummary s;
  const std::vector<Label> y(target.begin(), target.end());
  s.paths = visit_paths(lat, cap, [&](const LatticePath& p) {
    s.total = LogSemiring::plus(s.total, p.weight);
    if (p.labels == y) {
      s.target = LogSemiring::plus(s.target, p.weight);
      ++s.target_paths;
    }
    if (p.weight < s.best) {
      if (p.labels != s.best_labels) s.runner_up = s.best;
      s.best = p.weight;
      s.best_labels = p.labels;
    } else if (p.labels != s.best_labels) {
      s.runner_up = std::min(s.runner_up, p.weight);
    }
  });
  return s;
}

// Sum over all successful paths. In the real semiring path weights are
// converted with exp(-w).
inline Weight oracle_weight(const ExplicitLattice& lat, SemiringTag tag,
                            std::uint64_t cap = std::numeric_limits<std::uint64_t>::max()) {
  Weight acc = zero(tag);
  visit_paths(lat, cap, [&](const LatticePath& p) {
    const Weight w = tag == SemiringTag::kReal ? std::exp(-p.weight) : p.weight;
    acc = plus(tag, acc, w);
  });
  return acc;
}

inline Weight oracle_string_weight(const ExplicitLattice& lat, std::span<const Label> y,
                                   std::uint64_t cap = std::numeric_limits<std::uint64_t>::max()) {
  return summarize(lat, y, cap).target;
}

// One arc per line as "src dst label weight" (label "<eps>" for epsilon,
// "in:out" in dedup mode), then one "state 0" line per final state.
inline std::string dump_text(const ExplicitLattice& lat) {
  auto name = [](Label y) { return y == kNoLabel ? std::string("<eps>") : ContextDependency::label_name(y); };
  std::string out;
  char buf[64];
  for (const ExplicitArc& a : lat.arcs) {
    std::string label = name(a.in);
    if (lat.mode == LatticeMode::kDedup) label += ":" + name(a.out);
    std::snprintf(buf, sizeof buf, "%.6f", a.weight);
    out += std::to_string(a.src) + "\t" + std::to_string(a.dst) + "\t" + label + "\t" + buf + "\n";
  }
  for (int s = 0; s < lat.num_states(); ++s)
    if (lat.is_final[s]) out += std::to_string(s) + "\t0\n";
  return out;
}

}  // namespace gnat
