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

// Lattice cost across context order x lattice x weight function x
// normalization. Times cover the lattice side only (scores, normalization,
// shortest distance, posteriors, backpropagation into the weight function)
// for fixed encoder activations; each entry is the median over repetitions.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "gnat/alignment.hpp"
#include "gnat/config.hpp"
#include "gnat/inference.hpp"
#include "gnat/weights.hpp"

namespace gnat {

struct BenchOptions {
  int vocab = 16;
  int frames = 64;
  int hidden = 16;
  int rnn_dim = 16;
  int repetitions = 21;
  std::vector<int> orders = {0, 1, 2};
  std::uint64_t seed = 1;
};

struct BenchRow {
  int order;
  AlignmentKind lattice;
  WeightKind weights;
  Normalization normalization;
  double train_ms;   // loss + gradient
  double decode_ms;  // max-path decode
  double table_mb;   // bytes held in weight, forward, backward and posterior tables
};

namespace bench_detail {

inline double table_megabytes(const AlignmentLattice& a, const ContextDependency& c,
                              Normalization norm) {
  const double states = a.num_states();
  const double ctx = c.num_states();
  const double cols = c.vocab() + 1;
  // Per alignment state: weight table, raw scores, alpha, beta, gamma, d_omega.
  double per_pass = ctx * cols * 3 + ctx * 2;
  const double passes = is_local(norm) ? 1.0 : 2.0;
  double total = states * (ctx * cols * 2 + passes * per_pass);
  return total * sizeof(double) / (1024.0 * 1024.0);
}

template <class F>
double elapsed_ms(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

inline double median_of(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

struct GridPoint {
  int order;
  AlignmentKind kind;
  WeightKind weights;
  Normalization norm;
  ContextDependency context;
  AlignmentLattice lattice;
  WeightFunction wf;
  WeightFunction grad;
};

}  // namespace bench_detail

// Repetitions are interleaved: every round times each grid point once,
// alternating direction, so phases where the whole machine runs slower hit
// all points alike. A per-point minimum is not robust to that (it records
// whichever point happened to catch a fast phase); the median is.
inline std::vector<BenchRow> run_bench(const BenchOptions& o) {
  std::mt19937_64 rng(o.seed);
  Matrix h(o.frames, o.hidden);
  fill_uniform(h, 1.0, rng);
  std::vector<Label> y;
  std::uniform_int_distribution<int> label(0, o.vocab - 1);
  for (int i = 0; i < o.frames / 4; ++i) y.push_back(label(rng));
  std::vector<bench_detail::GridPoint> grid;
  // The lattice axis is innermost so the two lattices of one configuration
  // are timed back to back: the gap between them is small next to the
  // machine's slow drift.
  for (int order : o.orders) {
    const ContextDependency c(order, o.vocab);
    for (WeightKind wk : {WeightKind::kUnshared, WeightKind::kSharedEmb, WeightKind::kSharedRnn})
      for (Normalization norm : {Normalization::kLocalSoftmax, Normalization::kGlobal}) {
        // Points that differ only in lattice or normalization get identical
        // parameters; timings are data dependent (underflow, zero skips).
        WeightFunction wf(wk, c, o.hidden, norm, o.rnn_dim);
        std::seed_seq seq{static_cast<std::uint32_t>(o.seed), static_cast<std::uint32_t>(order),
                          static_cast<std::uint32_t>(wk)};
        std::mt19937_64 wrng(seq);
        wf.init_uniform(wrng);
        for (AlignmentKind kind : {AlignmentKind::kFrame, AlignmentKind::kLabelFrame}) {
          const AlignmentLattice a = kind == AlignmentKind::kFrame ? AlignmentLattice::frame(o.frames)
                                                                   : AlignmentLattice::label_frame(o.frames, 1);
          grid.push_back({order, kind, wk, norm, c, a, wf, wf});
        }
      }
  }
  std::vector<std::vector<double>> train_ms(grid.size()), decode_ms(grid.size());
  volatile double sink = 0.0;
  for (int rep = 0; rep < o.repetitions; ++rep)
    for (std::size_t n = 0; n < grid.size(); ++n) {
      const std::size_t i = rep % 2 == 0 ? n : grid.size() - 1 - n;
      auto& g = grid[i];
      const double train = bench_detail::elapsed_ms([&] {
        g.grad.set_zero();
        const LatticeScorer scorer(g.wf, g.lattice, h);
        const LossGradient lg = loss_gradient(g.lattice, g.context, y, scorer.weights());
        scorer.backward(lg.d_omega, g.grad, nullptr);
        sink = sink + lg.loss.loss;
      });
      const double decode = bench_detail::elapsed_ms([&] {
        const Decoded d = decode_max_path(g.lattice, g.context, score_lattice(g.wf, g.lattice, h));
        sink = sink + d.score;
      });
      train_ms[i].push_back(train);
      decode_ms[i].push_back(decode);
    }
  std::vector<BenchRow> rows;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& g = grid[i];
    rows.push_back({g.order, g.kind, g.weights, g.norm, bench_detail::median_of(train_ms[i]),
                    bench_detail::median_of(decode_ms[i]),
                    bench_detail::table_megabytes(g.lattice, g.context, g.norm)});
  }
  return rows;
}

// {"vocab", "frames", "hidden", "rnn_dim", "repetitions", "orders", "seed"};
// missing keys keep their defaults, unknown keys are rejected.
inline BenchOptions parse_bench_options(const nlohmann::ordered_json& j, BenchOptions o = {}) {
  {
    config_detail::Section root(j, "bench");
    root.read("vocab", o.vocab);
    root.read("frames", o.frames);
    root.read("hidden", o.hidden);
    root.read("rnn_dim", o.rnn_dim);
    root.read("repetitions", o.repetitions);
    root.read("seed", o.seed);
    if (auto* v = root.get("orders")) {
      if (!v->is_array() || v->empty()) throw ConfigError("bench.orders: expected a non-empty array");
      o.orders.clear();
      for (const auto& x : *v) {
        if (!x.is_number_integer() || x.get<int>() < 0)
          throw ConfigError("bench.orders: expected non-negative integers");
        o.orders.push_back(x.get<int>());
      }
    }
  }
  if (o.vocab < 1 || o.frames < 1 || o.hidden < 1 || o.rnn_dim < 1 || o.repetitions < 1)
    throw ConfigError("bench: vocab, frames, hidden, rnn_dim and repetitions must be >= 1");
  return o;
}

inline std::string format_bench(const std::vector<BenchRow>& rows) {
  std::string out = "order  lattice      weights     normalization  train_ms  decode_ms  tables_mb\n";
  char line[160];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-5d  %-11s  %-10s  %-13s  %8.3f  %9.3f  %9.3f\n", r.order,
                  std::string(to_string(r.lattice)).c_str(), std::string(to_string(r.weights)).c_str(),
                  std::string(to_string(r.normalization)).c_str(), r.train_ms, r.decode_ms, r.table_mb);
    out += line;
  }
  return out;
}

struct BenchVerdict {
  bool order_monotone = true;    // order 2 slower than order 0
  bool lattice_monotone = true;  // label_frame at least as slow as frame
  bool global_monotone = true;   // global at least as slow as local at order 2
  std::vector<std::string> violations;
  bool ok() const { return order_monotone && lattice_monotone && global_monotone; }
};

// Compares train times between grid points that differ in one axis only.
inline BenchVerdict judge_bench(const std::vector<BenchRow>& rows) {
  BenchVerdict v;
  auto find = [&](int order, AlignmentKind a, WeightKind w, Normalization n) -> const BenchRow* {
    for (const auto& r : rows)
      if (r.order == order && r.lattice == a && r.weights == w && r.normalization == n) return &r;
    return nullptr;
  };
  auto name = [](const BenchRow& r) {
    return "order " + std::to_string(r.order) + " " + std::string(to_string(r.lattice)) + " " +
           std::string(to_string(r.weights)) + " " + std::string(to_string(r.normalization));
  };
  for (const auto& r : rows) {
    if (r.order == 2)
      if (const BenchRow* z = find(0, r.lattice, r.weights, r.normalization); z && !(r.train_ms > z->train_ms)) {
        v.order_monotone = false;
        v.violations.push_back(name(r) + " not slower than order 0");
      }
    if (r.lattice == AlignmentKind::kLabelFrame)
      if (const BenchRow* f = find(r.order, AlignmentKind::kFrame, r.weights, r.normalization);
          f && !(r.train_ms >= f->train_ms)) {
        v.lattice_monotone = false;
        v.violations.push_back(name(r) + " faster than frame");
      }
    if (r.order == 2 && r.normalization == Normalization::kGlobal)
      if (const BenchRow* l = find(2, r.lattice, r.weights, Normalization::kLocalSoftmax);
          l && !(r.train_ms >= l->train_ms)) {
        v.global_monotone = false;
        v.violations.push_back(name(r) + " faster than local_softmax");
      }
  }
  return v;
}

}  // namespace gnat
