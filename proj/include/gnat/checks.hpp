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

// Property suites comparing the vectorized lattice code against explicit
// enumeration, finite differences and direct reference recursions. Each
// returns one CheckResult. With `inject_failure` set, one arc weight (or one
// gradient entry) on the fast side is perturbed, which must make the suite
// fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "gnat/bench.hpp"
#include "gnat/dedup.hpp"
#include "gnat/demo.hpp"
#include "gnat/harness.hpp"
#include "gnat/oracle.hpp"
#include "gnat/presets.hpp"

namespace gnat {

struct CheckOptions {
  std::uint64_t seed = 1;
  bool inject_failure = false;
  int sweep_seeds = 100;
  int gap_seeds = 5;
  double gradient_step = 1e-5;
  int gradient_samples = 200;
  BenchOptions bench;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

// Late-evidence configuration the gap experiment trains on.
inline RunConfig gap_base_config() {
  RunConfig c;
  c.context = {1, 4};
  c.lattice.variant = AlignmentKind::kFrame;
  c.weights.variant = WeightKind::kUnshared;
  c.weights.D = 16;
  c.encoder.D_in = 8;
  c.task.variant = TaskKind::kLateEvidence;
  c.task.min_frames = 8;
  c.task.max_frames = 12;
  c.task.sigma = 0.3;
  c.task.eval_size = 200;
  c.train.steps = 600;
  c.train.batch_size = 16;
  c.train.learning_rate = 0.01;
  return c;
}

namespace check_detail {

inline bool rel_close(double a, double b, double tol) {
  if (a == b) return true;  // covers inf == inf
  if (!std::isfinite(a) || !std::isfinite(b)) return false;
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

inline std::string fmt(const char* f, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

// Collects the first few failures and counts the rest.
struct Tally {
  std::uint64_t cases = 0;
  std::uint64_t failures = 0;
  std::vector<std::string> first;
  double worst = 0.0;

  void fail(const std::string& what) {
    ++failures;
    if (first.size() < 5) first.push_back(what);
  }
  void expect(bool ok, const std::function<std::string()>& what) {
    if (!ok) fail(what());
  }
  std::string summary(const std::string& prefix) const {
    std::string s = prefix + ", " + std::to_string(cases) + " cases";
    if (failures) {
      s += ", " + std::to_string(failures) + " failures";
      for (const auto& f : first) s += "\n    " + f;
    }
    return s;
  }
};

inline void perturb(LatticeWeights& w) {
  for (Matrix& m : w.omega) {
    if (m.empty()) continue;
    for (double& x : m.flat())
      if (std::isfinite(x)) {
        x += 0.25;
        return;
      }
  }
}

inline AlignmentLattice sweep_lattice(AlignmentKind kind, int vocab, int frames) {
  switch (kind) {
    case AlignmentKind::kFrame: return AlignmentLattice::frame(frames);
    case AlignmentKind::kLabelFrame: return AlignmentLattice::label_frame(frames, vocab <= 2 ? 2 : 1);
    case AlignmentKind::kLabel: return AlignmentLattice::label(frames, frames);
  }
  throw std::logic_error("unknown lattice");
}

inline std::string case_name(AlignmentKind kind, int order, int vocab, int frames, Normalization n,
                             int seed) {
  return std::string(to_string(kind)) + " order " + std::to_string(order) + " V " +
         std::to_string(vocab) + " T " + std::to_string(frames) + " " +
         std::string(to_string(n)) + " seed " + std::to_string(seed);
}

// Random unshared weights of spread ~1 and random activations.
inline LatticeWeights random_weights(const AlignmentLattice& a, const ContextDependency& c,
                                     Normalization n, std::mt19937_64& rng) {
  WeightFunction wf(WeightKind::kUnshared, c, 3, n);
  for (auto& p : wf.parameters()) fill_uniform(*p.value, 1.0, rng);
  Matrix h(std::max(1, a.frames()), 3);
  fill_uniform(h, 1.0, rng);
  return score_lattice(wf, a, h);
}

inline std::vector<Label> random_labels(int max_len, int vocab, std::mt19937_64& rng) {
  const int n = std::uniform_int_distribution<int>(0, max_len)(rng);
  std::uniform_int_distribution<int> y(0, vocab - 1);
  std::vector<Label> out(n);
  for (Label& x : out) x = y(rng);
  return out;
}

inline std::uint64_t mix(std::uint64_t seed, std::initializer_list<int> parts) {
  std::vector<std::uint32_t> words = {static_cast<std::uint32_t>(seed),
                                      static_cast<std::uint32_t>(seed >> 32)};
  for (int p : parts) words.push_back(static_cast<std::uint32_t>(p));
  std::seed_seq seq(words.begin(), words.end());
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

template <class F>
CheckResult timed(std::string name, F&& body) {
  CheckResult r;
  r.name = std::move(name);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail += std::string(r.detail.empty() ? "" : "; ") + "exception: " + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

constexpr AlignmentKind kLattices[] = {AlignmentKind::kFrame, AlignmentKind::kLabelFrame,
                                       AlignmentKind::kLabel};

}  // namespace check_detail

// Toy bigram model over {a, b}, four frames.
inline CheckResult check_toy(const CheckOptions& o) {
  return check_detail::timed("bigram toy example", [&](CheckResult& r) {
    const ToySetup s = toy_setup(o.seed);
    const ToyReport rep = run_toy(s, o.inject_failure);
    r.passed = rep.ok;
    r.detail = std::to_string(rep.paths) + " paths, " + std::to_string(rep.target_paths) +
               " alignments of ab, " + std::to_string(rep.lattice_states) + " states; " +
               check_detail::fmt("denominator %.12f vs %.12f", rep.vectorized_denominator,
                                 rep.oracle_denominator);
    if (!rep.ok) r.detail += "; " + rep.failures;
  });
}

// Locally normalized lattices sum to one.
inline CheckResult check_z1(const CheckOptions& o) {
  using namespace check_detail;
  return timed("local normalization sums to one", [&](CheckResult& r) {
    Tally t;
    for (AlignmentKind kind : kLattices)
      for (int order = 0; order <= 2; ++order)
        for (int vocab : {2, 5})
          for (int frames = 1; frames <= 6; ++frames)
            for (Normalization n : {Normalization::kLocalSoftmax, Normalization::kLocalHat}) {
              const ContextDependency c(order, vocab);
              const AlignmentLattice a = sweep_lattice(kind, vocab, frames);
              for (int seed = 0; seed < o.sweep_seeds; ++seed) {
                std::mt19937_64 rng(mix(o.seed, {1, int(kind), order, vocab, frames, int(n), seed}));
                LatticeWeights w = random_weights(a, c, n, rng);
                if (o.inject_failure && seed == 0) perturb(w);
                const Weight z = shortest_distance(a, c, w, SemiringTag::kLog);
                ++t.cases;
                t.worst = std::max(t.worst, std::abs(z));
                t.expect(std::abs(z) <= 1e-6, [&] {
                  return case_name(kind, order, vocab, frames, n, seed) + ": log Z = " + std::to_string(z);
                });
              }
            }
    r.passed = t.failures == 0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "max |log Z| %.3g", t.worst);
    r.detail = t.summary(buf);
  });
}

// Vectorized denominator, numerator, tropical distance and decoded labels
// against enumeration of every path.
inline CheckResult check_oracle(const CheckOptions& o) {
  using namespace check_detail;
  return timed("vectorized lattice equals enumeration", [&](CheckResult& r) {
    Tally t;
    std::uint64_t label_checks = 0;
    for (AlignmentKind kind : kLattices)
      for (int order = 0; order <= 2; ++order)
        for (int vocab : {2, 5})
          for (int frames = 1; frames <= 6; ++frames)
            for (Normalization n : {Normalization::kLocalSoftmax, Normalization::kLocalHat,
                                    Normalization::kGlobal}) {
              const ContextDependency c(order, vocab);
              const AlignmentLattice a = sweep_lattice(kind, vocab, frames);
              const std::uint64_t expected_paths = count_paths(a, vocab);
              for (int seed = 0; seed < o.sweep_seeds; ++seed) {
                std::mt19937_64 rng(mix(o.seed, {2, int(kind), order, vocab, frames, int(n), seed}));
                const LatticeWeights w = random_weights(a, c, n, rng);
                const std::vector<Label> y = random_labels(std::min(a.max_emitted_labels(), 4), vocab, rng);
                const ExplicitLattice lat = build_explicit(a, c, w, LatticeMode::kPlain);
                const OracleSummary s = summarize(lat, y);
                LatticeWeights fast = w;
                if (o.inject_failure && seed == 0) perturb(fast);
                const Weight den = shortest_distance(a, c, fast, SemiringTag::kLog);
                const Weight num = numerator(a, c, y, fast, SemiringTag::kLog);
                const Weight trop = shortest_distance(a, c, fast, SemiringTag::kTropical);
                const Decoded d = decode_max_path(a, c, fast);
                ++t.cases;
                auto where = [&] { return case_name(kind, order, vocab, frames, n, seed); };
                t.expect(s.paths == expected_paths, [&] { return where() + ": path count"; });
                t.expect(rel_close(den, s.total, 1e-9),
                         [&] { return where() + fmt(": denominator %.12g vs %.12g", den, s.total); });
                t.expect(rel_close(num, s.target, 1e-9),
                         [&] { return where() + fmt(": numerator %.12g vs %.12g", num, s.target); });
                t.expect(rel_close(trop, s.best, 1e-9),
                         [&] { return where() + fmt(": tropical %.12g vs %.12g", trop, s.best); });
                t.expect(rel_close(d.score, s.best, 1e-9),
                         [&] { return where() + fmt(": decode score %.12g vs %.12g", d.score, s.best); });
                // Labels are only unique when no other label sequence ties the best path.
                if (s.runner_up - s.best > 1e-9) {
                  ++label_checks;
                  t.expect(d.labels == s.best_labels, [&] { return where() + ": decoded labels differ"; });
                }
              }
            }
    r.passed = t.failures == 0;
    r.detail = t.summary("decoded labels compared where unique (" + std::to_string(label_checks) + ")");
  });
}

// Central finite differences through encoder, weight function,
// normalization and lattice.
inline CheckResult check_gradients(const CheckOptions& o) {
  using namespace check_detail;
  return timed("analytic gradients match finite differences", [&](CheckResult& r) {
    Tally t;
    int config_index = 0;
    // Relative error with a floor: finite differences of exactly-zero
    // gradients carry ~1e-11 of rounding noise.
    constexpr double kFloor = 1e-5;
    const double h = o.gradient_step;
    for (WeightKind wk : {WeightKind::kUnshared, WeightKind::kSharedEmb, WeightKind::kSharedRnn})
      for (Normalization n : {Normalization::kGlobal, Normalization::kLocalSoftmax,
                              Normalization::kLocalHat})
        for (int variant = 0; variant < 4; ++variant) {
          // Three lattices plus the frame lattice with dedup.
          const AlignmentKind kind = variant == 3 ? AlignmentKind::kFrame : kLattices[variant];
          const bool dedup = variant == 3;
          RunConfig cfg;
          cfg.context = {config_index % 3, 3};
          cfg.lattice.variant = kind;
          cfg.lattice.k = 2;
          cfg.lattice.dedup = dedup;
          cfg.weights = {wk, n, 4, 3};
          cfg.encoder = {config_index % 2 ? EncoderKind::kBidirRnn : EncoderKind::kCausalRnn, 3};
          ++config_index;
          Model m = Model::initialized(cfg, mix(o.seed, {3, config_index}));
          std::mt19937_64 rng(mix(o.seed, {4, config_index}));
          Matrix x(4, 3);
          fill_uniform(x, 1.0, rng);
          const std::vector<Label> y = {1, 0};
          Model g = m.zeros_like();
          m.loss(x, y, &g);
          auto ps = m.parameters();
          auto gs = g.parameters();
          std::vector<std::pair<std::size_t, std::size_t>> index;
          for (std::size_t i = 0; i < ps.size(); ++i)
            for (std::size_t j = 0; j < ps[i].value->size(); ++j) index.push_back({i, j});
          std::shuffle(index.begin(), index.end(), rng);
          if (static_cast<int>(index.size()) > o.gradient_samples) index.resize(o.gradient_samples);
          if (o.inject_failure && config_index == 1) {
            auto [i, j] = index.front();
            gs[i].value->data()[j] += 1e-3 + 0.01 * std::abs(gs[i].value->data()[j]);
          }
          double worst = 0.0;
          std::string worst_name;
          for (auto [i, j] : index) {
            double& wv = ps[i].value->data()[j];
            const double keep = wv;
            wv = keep + h;
            const double lp = m.loss(x, y).loss;
            wv = keep - h;
            const double lm = m.loss(x, y).loss;
            wv = keep;
            const double fd = (lp - lm) / (2 * h);
            const double an = gs[i].value->data()[j];
            const double err = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), kFloor});
            if (err > worst) {
              worst = err;
              worst_name = ps[i].name + "[" + std::to_string(j) + "]" + fmt(" analytic %.6g, numeric %.6g", an, fd);
            }
          }
          ++t.cases;
          t.worst = std::max(t.worst, worst);
          t.expect(worst < 1e-4, [&] {
            return std::string(to_string(wk)) + " " + std::string(to_string(n)) + " " +
                   std::string(to_string(kind)) + (dedup ? " dedup" : "") + ": rel err " +
                   std::to_string(worst) + " at " + worst_name;
          });
        }
    r.passed = t.failures == 0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "max relative error %.3g", t.worst);
    r.detail = t.summary(buf);
  });
}

namespace check_detail {

// Framework loss of a preset model on (x, y), plus the raw score function
// the reference recursions read.
struct PresetCase {
  Model model;
  Matrix h;
  ContextCache cache;
  LatticeWeights weights;
  AlignmentLattice lattice;
};

inline PresetCase preset_case(const RunConfig& cfg, std::uint64_t seed, const Matrix& x,
                              int target_length) {
  Model m = Model::initialized(cfg, seed);
  Matrix h = m.encoder().encode(x);
  ContextCache cache = m.weights().prepare();
  AlignmentLattice lat = m.lattice(static_cast<int>(x.rows()), target_length);
  LatticeWeights w = score_lattice(m.weights(), lat, h);
  return {std::move(m), std::move(h), std::move(cache), std::move(w), lat};
}

inline ScoreFn score_fn(const PresetCase& pc) {
  return [&pc](int frame, StateId q, int col) {
    Matrix s;
    pc.model.weights().raw_scores(pc.cache, pc.h.row(frame), s);
    return s(q, col);
  };
}

}  // namespace check_detail

// Preset losses against textbook recursions.
inline CheckResult check_presets(const CheckOptions& o) {
  using namespace check_detail;
  return timed("presets equal reference recursions", [&](CheckResult& r) {
    Tally t;
    std::mt19937_64 rng(mix(o.seed, {5}));
    const WeightKind kinds[] = {WeightKind::kUnshared, WeightKind::kSharedEmb, WeightKind::kSharedRnn};
    bool injected = false;
    auto framework_loss = [&](PresetCase& pc, std::span<const Label> y) {
      if (o.inject_failure && !injected) {
        // Every path leaves the initial state.
        for (double& x : pc.weights.omega[0].row(0)) x += 0.25;
        injected = true;
      }
      return loss(pc.lattice, pc.model.context(), y, pc.weights, pc.model.dedup()).loss;
    };
    for (int i = 0; i < 60; ++i) {
      const int vocab = 2 + i % 2;
      const int frames = 1 + (i / 2) % 4;
      RunConfig base;
      base.context = {3, vocab};
      base.weights = {kinds[i % 3], Normalization::kGlobal, 4, 3};
      base.encoder = {i % 2 ? EncoderKind::kBidirRnn : EncoderKind::kCausalRnn, 3};
      Matrix x(frames, 3);
      fill_uniform(x, 1.0, rng);
      const std::vector<Label> y = random_labels(3, vocab, rng);
      const std::string where = "V " + std::to_string(vocab) + " T " + std::to_string(frames) +
                                " |y| " + std::to_string(y.size()) + " " +
                                std::string(to_string(kinds[i % 3]));
      for (Preset p : {Preset::kRnnt, Preset::kHat}) {
        const RunConfig cfg = expand(p, base);
        PresetCase pc = preset_case(cfg, mix(o.seed, {6, i, int(p)}), x, static_cast<int>(y.size()));
        const double ref = rnnt_oracle_loss(score_fn(pc), pc.model.context(), frames, y, p == Preset::kHat);
        const double got = framework_loss(pc, y);
        ++t.cases;
        t.expect(rel_close(got, ref, 1e-9), [&] {
          return std::string(to_string(p)) + " " + where + fmt(": %.12g vs reference %.12g", got, ref);
        });
      }
      {
        const RunConfig cfg = expand(Preset::kCtc, base);
        PresetCase pc = preset_case(cfg, mix(o.seed, {7, i}), x, static_cast<int>(y.size()));
        const double ref = ctc_oracle_loss(score_fn(pc), vocab, frames, y);
        const double got = framework_loss(pc, y);
        ++t.cases;
        t.expect(rel_close(got, ref, 1e-9),
                 [&] { return "ctc " + where + fmt(": %.12g vs reference %.12g", got, ref); });
      }
      {
        const RunConfig cfg = expand(Preset::kCe, base);
        std::vector<Label> yce(frames);
        for (Label& v : yce) v = std::uniform_int_distribution<int>(0, vocab - 1)(rng);
        PresetCase pc = preset_case(cfg, mix(o.seed, {8, i}), x, frames);
        const double ref = ce_oracle_loss(score_fn(pc), vocab, yce);
        const double got = framework_loss(pc, yce);
        ++t.cases;
        t.expect(rel_close(got, ref, 1e-12),
                 [&] { return "ce " + where + fmt(": %.15g vs reference %.15g", got, ref); });
      }
    }
    // Structure of the expansions.
    RunConfig base;
    base.context = {2, 3};
    const RunConfig ce = expand(Preset::kCe, base);
    const AlignmentLattice ce_lat = make_lattice(ce.lattice, 5);
    for (StateId q = 0; q + 1 < ce_lat.num_states(); ++q)
      t.expect(ce_lat.arc_mask(q) == ArcMask{true, false}, [] { return std::string("ce lattice has epsilon arcs"); });
    RunConfig rnnt = expand(Preset::kRnnt, base), hat = expand(Preset::kHat, base);
    t.expect(rnnt.weights.normalization != hat.weights.normalization,
             [] { return std::string("hat and rnnt share a normalization"); });
    rnnt.weights.normalization = hat.weights.normalization;
    rnnt.preset = hat.preset;
    t.expect(rnnt == hat, [] { return std::string("hat differs from rnnt beyond normalization"); });
    base.weights.normalization = Normalization::kLocalSoftmax;
    bool rejected = false;
    try {
      expand(Preset::kGnat, base);
    } catch (const ConfigError&) {
      rejected = true;
    }
    t.expect(rejected, [] { return std::string("gnat preset accepted local normalization"); });
    r.passed = t.failures == 0;
    r.detail = t.summary("rnnt, hat, ctc and ce");
  });
}

// Collapse semantics, reduced state bound and string sums of the dedup lattice.
inline CheckResult check_dedup(const CheckOptions& o) {
  using namespace check_detail;
  return timed("dedup semantics and state bound", [&](CheckResult& r) {
    Tally t;
    const Label e = kNoLabel;
    auto collapse_is = [&](std::vector<Label> z, std::vector<Label> want, const char* name) {
      ++t.cases;
      t.expect(ctc_collapse(z) == want, [&] { return std::string("ctc_collapse ") + name; });
    };
    collapse_is({0, 1, 1, 2}, {0, 1, 2}, "abbc");
    collapse_is({0, 1, 1, e, 1}, {0, 1, 1}, "abbeb");
    collapse_is({}, {}, "empty");
    std::mt19937_64 rng(mix(o.seed, {9}));
    for (int i = 0; i < 200; ++i) {
      std::vector<Label> z(std::uniform_int_distribution<int>(0, 8)(rng));
      for (Label& x : z) x = std::uniform_int_distribution<int>(-1, 2)(rng);
      ++t.cases;
      t.expect(DedupTransducer(3).transduce(z) == ctc_collapse(z), [] { return std::string("transducer vs collapse"); });
    }

    // Reachable reduced states: the vectorized twin layout against the
    // materialized triple product, and both against 2 |Q_A| |Q_C|. With
    // order 0 the lattice tracks the last label, so |Q_C| is that of the
    // lifted order-1 context.
    std::uint64_t worst_gap = 0;
    for (int order = 0; order <= 2; ++order)
      for (int vocab = 1; vocab <= 3; ++vocab)
        for (int frames = 0; frames <= 4; ++frames)
          for (int lk = 0; lk < 4; ++lk) {
            const ContextDependency c(order, vocab);
            const AlignmentLattice a = lk == 0   ? AlignmentLattice::frame(frames)
                                       : lk == 3 ? AlignmentLattice::label(frames, frames)
                                                 : AlignmentLattice::label_frame(frames, lk);
            // Order 0 runs on the lifted context; its triple product is the
            // one to match, the plain order-0 product is only bounded.
            const ContextDependency topo(std::max(order, 1), vocab);
            std::mt19937_64 wr(mix(o.seed, {10, order, vocab, frames, lk}));
            const LatticeWeights w = random_weights(a, topo, Normalization::kGlobal, wr);
            const std::uint64_t fast = dedup_reachable_states(a, c);
            const std::uint64_t slow = reachable_states(build_explicit(a, topo, w, LatticeMode::kDedup));
            if (order == 0) {
              const LatticeWeights w0 = random_weights(a, c, Normalization::kGlobal, wr);
              const std::uint64_t plain0 = reachable_states(build_explicit(a, c, w0, LatticeMode::kDedup));
              t.expect(plain0 <= fast, [&] { return std::string("order-0 triple product exceeds the lifted one"); });
            }
            const std::uint64_t nc = lattice_context(c, true).size();
            const std::uint64_t bound = 2 * static_cast<std::uint64_t>(a.num_states()) * nc;
            ++t.cases;
            const std::string where = std::string(to_string(a.kind())) + " order " + std::to_string(order) +
                                      " V " + std::to_string(vocab) + " T " + std::to_string(frames);
            t.expect(fast == slow, [&] {
              return where + ": reachable " + std::to_string(fast) + " vs triple product " + std::to_string(slow);
            });
            t.expect(slow <= bound, [&] { return where + ": " + std::to_string(slow) + " > bound " + std::to_string(bound); });
            worst_gap = std::max(worst_gap, slow);
          }

    // Dedup lattice values against enumeration of the triple product.
    for (int order = 0; order <= 2; ++order)
      for (int vocab : {2, 3})
        for (int frames = 1; frames <= 4; ++frames)
          for (Normalization n : {Normalization::kGlobal, Normalization::kLocalSoftmax,
                                  Normalization::kLocalHat})
            for (int seed = 0; seed < 5; ++seed) {
              const ContextDependency c(order, vocab);
              const AlignmentLattice a = AlignmentLattice::frame(frames);
              std::mt19937_64 wr(mix(o.seed, {11, order, vocab, frames, int(n), seed}));
              const LatticeWeights w = random_weights(a, c, n, wr);
              const std::vector<Label> y = random_labels(frames, vocab, wr);
              const OracleSummary s = summarize(build_explicit(a, c, w, LatticeMode::kDedup), y);
              LatticeWeights fast = w;
              if (o.inject_failure && seed == 0 && order == 1) perturb(fast);
              const std::string where = case_name(AlignmentKind::kFrame, order, vocab, frames, n, seed) + " dedup";
              const Weight den = dedup_denominator(a, c, fast);
              const Weight num = dedup_numerator(a, c, y, fast);
              const Decoded d = decode_max_path(a, c, fast, true);
              ++t.cases;
              t.expect(rel_close(den, s.total, 1e-9),
                       [&] { return where + fmt(": denominator %.12g vs %.12g", den, s.total); });
              t.expect(rel_close(num, s.target, 1e-9),
                       [&] { return where + fmt(": numerator %.12g vs %.12g", num, s.target); });
              t.expect(rel_close(d.score, s.best, 1e-9),
                       [&] { return where + fmt(": decode %.12g vs %.12g", d.score, s.best); });
              if (s.runner_up - s.best > 1e-9)
                t.expect(d.labels == s.best_labels, [&] { return where + ": decoded labels differ"; });
              if (is_local(n))
                t.expect(std::abs(den) <= 1e-6, [&] { return where + ": local log Z = " + std::to_string(den); });
            }

    // exp(-denominator) = sum over every output string of exp(-numerator).
    for (int order = 0; order <= 2; ++order)
      for (int vocab : {2, 3})
        for (int frames = 1; frames <= 3; ++frames) {
          const ContextDependency c(order, vocab);
          const AlignmentLattice a = AlignmentLattice::frame(frames);
          std::mt19937_64 wr(mix(o.seed, {12, order, vocab, frames}));
          LatticeWeights w = random_weights(a, c, Normalization::kGlobal, wr);
          const double z = std::exp(-dedup_denominator(a, c, w));
          if (o.inject_failure && order == 0 && vocab == 2 && frames == 1) perturb(w);
          double sum = 0.0;
          std::vector<Label> y;
          std::function<void()> all = [&] {
            sum += std::exp(-dedup_numerator(a, c, y, w));
            if (static_cast<int>(y.size()) == frames) return;
            for (Label v = 0; v < vocab; ++v) {
              y.push_back(v);
              all();
              y.pop_back();
            }
          };
          all();
          ++t.cases;
          t.expect(std::abs(sum - z) <= 1e-10 * std::max(1.0, z), [&] {
            return "order " + std::to_string(order) + " V " + std::to_string(vocab) + " T " +
                   std::to_string(frames) + fmt(": string sum %.15g vs Z %.15g", sum, z);
          });
        }

    // "aa" needs an epsilon between the labels: one path over three frames,
    // none over two.
    {
      const ContextDependency c(1, 2);
      std::mt19937_64 wr(mix(o.seed, {13}));
      const std::vector<Label> aa = {0, 0};
      const AlignmentLattice a3 = AlignmentLattice::frame(3);
      const LatticeWeights w3 = random_weights(a3, c, Normalization::kGlobal, wr);
      const OracleSummary s = summarize(build_explicit(a3, c, w3, LatticeMode::kDedup), aa);
      ++t.cases;
      t.expect(s.target_paths == 1, [&] { return "aa over 3 frames: " + std::to_string(s.target_paths) + " paths"; });
      t.expect(rel_close(dedup_numerator(a3, c, aa, w3), w3.omega[0](0, 0) + w3.omega[1](1, 2) + w3.omega[2](1, 0), 1e-12),
               [] { return std::string("aa numerator is not the a eps a path"); });
      const AlignmentLattice a2 = AlignmentLattice::frame(2);
      const LatticeWeights w2 = random_weights(a2, c, Normalization::kGlobal, wr);
      t.expect(dedup_numerator(a2, c, aa, w2) == kInfinity, [] { return std::string("aa over 2 frames is reachable"); });
    }
    r.passed = t.failures == 0;
    r.detail = t.summary("largest reachable count " + std::to_string(worst_gap));
  });
}

struct GapCheck {
  CheckResult result;
  GapTable table;
};

inline std::string format_gap(const GapTable& table) {
  std::string out = "encoder     normalization  order  median_ler  spread  lers\n";
  char buf[160];
  for (const auto& c : table.cells) {
    std::snprintf(buf, sizeof buf, "%-10s  %-13s  %5d  %10.4f  %6.4f ", std::string(to_string(c.encoder)).c_str(),
                  std::string(to_string(c.normalization)).c_str(), c.order, c.median, c.spread);
    out += buf;
    for (double l : c.lers) {
      std::snprintf(buf, sizeof buf, " %.4f", l);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

// Global normalization helps the streaming encoder on late evidence and is
// neutral for the bidirectional one.
inline GapCheck check_gap(const CheckOptions& o, const RunConfig& base = gap_base_config()) {
  GapCheck g;
  g.result = check_detail::timed("global normalization closes the streaming gap", [&](CheckResult& r) {
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < o.gap_seeds; ++i) seeds.push_back(o.seed + i);
    g.table = run_gap_experiment(base, seeds);
    const auto& cl = g.table.cell(EncoderKind::kCausalRnn, Normalization::kLocalSoftmax);
    const auto& cg = g.table.cell(EncoderKind::kCausalRnn, Normalization::kGlobal);
    const auto& bl = g.table.cell(EncoderKind::kBidirRnn, Normalization::kLocalSoftmax);
    const auto& bg = g.table.cell(EncoderKind::kBidirRnn, Normalization::kGlobal);
    double causal_global = cg.median;
    if (o.inject_failure) causal_global = cl.median + 1.0;
    const bool streaming = causal_global <= 0.9 * cl.median;
    const double spread = std::max(bl.spread, bg.spread);
    const bool parity = std::abs(bg.median - bl.median) <= spread;
    r.passed = streaming && parity;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "causal: global %.4f vs local %.4f (needs <= %.4f); bidir: |%.4f - %.4f| = %.4f vs spread %.4f",
                  causal_global, cl.median, 0.9 * cl.median, bg.median, bl.median,
                  std::abs(bg.median - bl.median), spread);
    r.detail = buf;
  });
  return g;
}

struct BenchCheck {
  CheckResult result;
  std::vector<BenchRow> rows;
};

inline BenchCheck check_bench(const CheckOptions& o) {
  BenchCheck b;
  b.result = check_detail::timed("benchmark monotonicity", [&](CheckResult& r) {
    BenchOptions bo = o.bench;
    bo.seed = o.seed;
    b.rows = run_bench(bo);
    if (o.inject_failure && !b.rows.empty()) b.rows.front().train_ms = 1e9;
    const BenchVerdict v = judge_bench(b.rows);
    r.passed = v.ok();
    r.detail = std::to_string(b.rows.size()) + " grid points";
    for (const auto& s : v.violations) r.detail += "\n    " + s;
  });
  return b;
}

inline const std::vector<std::string_view>& check_scopes() {
  static const std::vector<std::string_view> s = {"all", "toy", "z1", "oracle", "grad",
                                                  "presets", "dedup", "gap", "bench"};
  return s;
}

// "all" runs the property suites; gap and bench train or time things and
// have their own scopes.
inline std::vector<CheckResult> run_checks(std::string_view scope, const CheckOptions& o) {
  std::vector<CheckResult> out;
  const bool all = scope == "all";
  if (all || scope == "toy") out.push_back(check_toy(o));
  if (all || scope == "z1") out.push_back(check_z1(o));
  if (all || scope == "oracle") out.push_back(check_oracle(o));
  if (all || scope == "grad") out.push_back(check_gradients(o));
  if (all || scope == "presets") out.push_back(check_presets(o));
  if (all || scope == "dedup") out.push_back(check_dedup(o));
  if (scope == "gap") out.push_back(check_gap(o).result);
  if (scope == "bench") out.push_back(check_bench(o).result);
  if (std::find(check_scopes().begin(), check_scopes().end(), scope) == check_scopes().end())
    throw std::invalid_argument("unknown scope '" + std::string(scope) + "'");
  return out;
}

}  // namespace gnat
