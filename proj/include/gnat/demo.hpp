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

// The toy model over {a, b}: bigram context, frame lattice over four frames,
// per-state linear weights. Builds everything, prints the walkthrough and
// cross-checks the vectorized lattice against explicit enumeration and the
// dense forward recurrence alpha_t = alpha_{t-1}' (Omega_sigma + Omega_eps).

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "gnat/inference.hpp"
#include "gnat/oracle.hpp"

namespace gnat {

struct ToySetup {
  ContextDependency context{2, 2};
  AlignmentLattice lattice = AlignmentLattice::frame(4);
  WeightFunction weights;
  Matrix h;
  LatticeWeights omega;
};

inline constexpr int kToyHidden = 3;

inline ToySetup toy_setup(std::uint64_t seed) {
  ToySetup s;
  s.weights = WeightFunction(WeightKind::kUnshared, s.context, kToyHidden, Normalization::kGlobal);
  std::mt19937_64 rng(seed);
  s.weights.init_uniform(rng);
  s.h = Matrix(4, kToyHidden);
  fill_uniform(s.h, 1.0, rng);
  s.omega = score_lattice(s.weights, s.lattice, s.h);
  return s;
}

struct ToyReport {
  int context_states = 0;
  int context_transitions = 0;
  int lattice_states = 0;
  std::uint64_t paths = 0;
  std::uint64_t target_paths = 0;
  Weight oracle_denominator = kInfinity;
  Weight oracle_numerator = kInfinity;
  Weight vectorized_denominator = kInfinity;
  Weight vectorized_numerator = kInfinity;
  Weight dense_denominator = kInfinity;
  Weight path_weight = kInfinity;   // epsilon a epsilon b
  Weight oracle_path_weight = kInfinity;
  bool ok = false;
  std::string failures;
};

namespace demo_detail {

inline bool rel_close(double a, double b, double tol) {
  if (a == b) return true;
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

// -log of the real-domain sum at t = T from dense (|Q_C| x |Q_C|) matrices.
inline Weight dense_forward(const ContextDependency& c, const LatticeWeights& w, int frames) {
  const int n = c.num_states(), v = c.vocab();
  std::vector<double> alpha(n, 0.0);
  alpha[0] = 1.0;
  for (int t = 0; t < frames; ++t) {
    std::vector<std::vector<double>> omega(n, std::vector<double>(n, 0.0));
    const Matrix& om = w.omega[t];
    for (StateId q = 0; q < n; ++q) {
      for (Label y = 0; y < v; ++y) omega[q][c.next_state(q, y)] += std::exp(-om(q, y));
      omega[q][q] += std::exp(-om(q, v));
    }
    std::vector<double> next(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) next[j] += alpha[i] * omega[i][j];
    alpha = std::move(next);
  }
  double total = 0.0;
  for (double a : alpha) total += a;
  return -std::log(total);
}

}  // namespace demo_detail

// `corrupt_arc` perturbs one arc weight on the vectorized side only, so a
// working self-check must then fail.
inline ToyReport run_toy(const ToySetup& s, bool corrupt_arc = false) {
  ToyReport r;
  const ContextDependency& c = s.context;
  r.context_states = c.num_states();
  for (StateId q = 0; q < c.num_states(); ++q) r.context_transitions += c.vocab();
  const ExplicitLattice lat = build_explicit(s.lattice, c, s.omega, LatticeMode::kPlain);
  r.lattice_states = lat.num_states();
  const std::vector<Label> ab = {0, 1};
  const OracleSummary sum = summarize(lat, ab);
  r.paths = sum.paths;
  r.target_paths = sum.target_paths;
  r.oracle_denominator = sum.total;
  r.oracle_numerator = sum.target;

  LatticeWeights w = s.omega;
  if (corrupt_arc) w.omega[2](1, 2) += 0.5;
  r.vectorized_denominator = shortest_distance(s.lattice, c, w, SemiringTag::kLog);
  r.vectorized_numerator = numerator(s.lattice, c, ab, w, SemiringTag::kLog);
  r.dense_denominator = demo_detail::dense_forward(c, w, s.lattice.frames());

  // epsilon a epsilon b: (0,i) -eps-> (1,i) -a-> (2,a) -eps-> (3,a) -b-> (4,ab)
  const StateId a = c.next_state(0, 0), ab_state = c.next_state(a, 1);
  r.path_weight = w.omega[0](0, 2) + w.omega[1](0, 0) + w.omega[2](a, 2) + w.omega[3](a, 1);
  visit_paths(lat, sum.paths, [&](const LatticePath& p) {
    const std::vector<Label> want = {kNoLabel, 0, kNoLabel, 1};
    if (p.inputs == want) r.oracle_path_weight = p.weight;
  });

  auto fail = [&](const std::string& what) { r.failures += (r.failures.empty() ? "" : "; ") + what; };
  if (r.context_states != 7) fail("context states " + std::to_string(r.context_states) + " != 7");
  if (r.context_transitions != 14) fail("context transitions != 14");
  if (r.lattice_states != 35) fail("lattice states " + std::to_string(r.lattice_states) + " != 35");
  if (r.paths != 81) fail("paths " + std::to_string(r.paths) + " != 81");
  if (r.target_paths != 6) fail("alignments of ab " + std::to_string(r.target_paths) + " != 6");
  if (ab_state != 4) fail("state index of ab != 4");
  if (!demo_detail::rel_close(r.vectorized_denominator, r.oracle_denominator, 1e-9))
    fail("vectorized denominator differs from enumeration");
  if (!demo_detail::rel_close(r.vectorized_numerator, r.oracle_numerator, 1e-9))
    fail("vectorized numerator differs from enumeration");
  if (!demo_detail::rel_close(r.dense_denominator, r.oracle_denominator, 1e-9))
    fail("dense forward recurrence differs from enumeration");
  if (!demo_detail::rel_close(r.path_weight, r.oracle_path_weight, 1e-12))
    fail("weight of path eps a eps b differs from enumeration");
  r.ok = r.failures.empty();
  return r;
}

inline void print_toy(std::ostream& out, const ToySetup& s, const ToyReport& r) {
  const ContextDependency& c = s.context;
  char buf[256];
  out << "Context dependency: order " << c.order() << " over {a, b}, " << r.context_states
      << " states\n  index  state\n";
  for (StateId q = 0; q < c.num_states(); ++q) {
    std::snprintf(buf, sizeof buf, "  %5d  %s\n", q, c.state_name(q).c_str());
    out << buf;
  }
  out << r.context_transitions << " transitions:\n";
  for (StateId q = 0; q < c.num_states(); ++q)
    for (Label y = 0; y < c.vocab(); ++y) {
      std::snprintf(buf, sizeof buf, "  %-3s %s -> %s\n", c.state_name(q).c_str(),
                    ContextDependency::label_name(y).c_str(), c.state_name(c.next_state(q, y)).c_str());
      out << buf;
    }
  out << "\nFrame lattice over " << s.lattice.frames() << " frames: " << s.lattice.num_states()
      << " states, " << r.paths << " alignment sequences\n";
  out << "Recognition lattice: " << s.lattice.num_states() << " x " << r.context_states << " = "
      << r.lattice_states << " states\n";
  out << "\nPath eps a eps b (LOG weight = -score, score = W_q[y,:] . h_t + b_q[y]):\n";
  const StateId a = c.next_state(0, 0);
  struct Step {
    int t;
    StateId q;
    Label y;
  };
  const Step steps[] = {{0, 0, kNoLabel}, {1, 0, 0}, {2, a, kNoLabel}, {3, a, 1}};
  StateId q_after = 0;
  for (const Step& st : steps) {
    const int col = st.y == kNoLabel ? c.vocab() : st.y;
    const std::string y = st.y == kNoLabel ? "eps" : ContextDependency::label_name(st.y);
    q_after = st.y == kNoLabel ? st.q : c.next_state(st.q, st.y);
    std::snprintf(buf, sizeof buf, "  (%d, %-2s) %-3s  -(W_%s[%s,:] . h_%d + b_%s[%s]) = %9.6f  -> (%d, %s)\n",
                  st.t, c.state_name(st.q).c_str(), y.c_str(), c.state_name(st.q).c_str(), y.c_str(),
                  st.t, c.state_name(st.q).c_str(), y.c_str(), s.omega.omega[st.t](st.q, col), st.t + 1,
                  c.state_name(q_after).c_str());
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "  path weight %.9f (enumeration %.9f)\n", r.path_weight,
                r.oracle_path_weight);
  out << buf;
  out << "\nAlignments of y = ab: " << r.target_paths << "\n";
  std::snprintf(buf, sizeof buf,
                "Denominator over %llu paths: vectorized %.12f  enumeration %.12f  dense %.12f\n",
                static_cast<unsigned long long>(r.paths), r.vectorized_denominator,
                r.oracle_denominator, r.dense_denominator);
  out << buf;
  std::snprintf(buf, sizeof buf, "Numerator of ab over %llu paths: vectorized %.12f  enumeration %.12f\n",
                static_cast<unsigned long long>(r.target_paths), r.vectorized_numerator,
                r.oracle_numerator);
  out << buf;
  std::snprintf(buf, sizeof buf, "-log P(ab | x) = %.9f\n", r.vectorized_numerator - r.vectorized_denominator);
  out << buf;
  out << (r.ok ? "all checks passed\n" : "CHECK FAILED: " + r.failures + "\n");
}

}  // namespace gnat
