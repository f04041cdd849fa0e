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

// Shortest distance, loss, posteriors and max-path decoding over the
// recognition lattice L_T x C, never materialized.
//
// The forward table holds, for every alignment state, one vector over
// context states (two in dedup mode: the epsilon twin then the repeat twin).
// Label flow goes through the context's blockwise kernel and epsilon flow is
// an elementwise product with the epsilon column.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnat/alignment.hpp"
#include "gnat/context.hpp"
#include "gnat/matrix.hpp"
#include "gnat/semiring.hpp"
#include "gnat/weights.hpp"

namespace gnat {

class UnreachableTarget : public std::domain_error {
 public:
  UnreachableTarget()
      : std::domain_error("target label sequence cannot be emitted by this lattice") {}
};

struct ForwardTable {
  int twins = 1;
  int context_size = 0;
  std::vector<std::vector<Weight>> alpha;  // [alignment state][twin * context_size + context state]
};

struct LossResult {
  Weight numerator = kInfinity;
  Weight denominator = 0.0;
  Weight loss = kInfinity;
  bool denominator_computed = false;
  bool target_reachable() const { return numerator < kInfinity; }
};

struct Decoded {
  std::vector<Label> labels;
  Weight score = kInfinity;
  std::vector<int> columns;  // omega column of every arc on the best path (V = epsilon)
};

// Per-arc occupation probabilities in topology coordinates: one matrix per
// alignment state with twins * context_size rows and V + 1 columns.
struct Posteriors {
  int twins = 1;
  Weight total = kInfinity;
  std::vector<Matrix> gamma;
};

namespace detail {

struct ArcRef {
  int src;         // twin * n + context state
  int col;         // omega column, V for epsilon
  Label out;       // emitted label, kNoLabel for epsilon and repeats
  StateId dst_q;   // alignment destination
  int dst;         // twin * n + context state
  Weight w;
};

template <class Ctx>
void check_dedup_context(const Ctx& ctx) {
  for (StateId c = 1; c < ctx.size(); ++c)
    if (ctx.incoming_label(c) == kNoLabel)
      throw std::invalid_argument("dedup requires a context with a unique incoming label per state");
}

inline void check_omega(const Matrix& om, int rows, int vocab) {
  if (static_cast<int>(om.rows()) != rows || static_cast<int>(om.cols()) != vocab + 1)
    throw std::invalid_argument("weight table is " + shape_string(om) + ", expected " +
                                std::to_string(rows) + "x" + std::to_string(vocab + 1));
  for (double x : om.flat())
    if (std::isnan(x) || x == -kInfinity) throw std::domain_error("non-finite arc weight");
}

// Every arc leaving alignment state q, in a fixed order.
template <class Ctx, class F>
void for_each_arc(const AlignmentLattice& a, const Ctx& ctx, bool dedup, StateId q,
                  const Matrix& om, F&& f) {
  const int n = ctx.size(), v = ctx.vocab();
  const auto s = a.label_successor(q);
  const auto e = a.epsilon_successor(q);
  if (!dedup) {
    if (s)
      ctx.for_each_label_arc([&](StateId c, Label y, StateId c2) {
        f(ArcRef{c, y, y, *s, c2, om(c, y)});
      });
    if (e)
      for (int c = 0; c < n; ++c) f(ArcRef{c, v, kNoLabel, *e, c, om(c, v)});
    return;
  }
  if (s) {
    ctx.for_each_label_arc([&](StateId c, Label y, StateId c2) {
      f(ArcRef{c, y, y, *s, n + c2, om(c, y)});
      const Label x = ctx.incoming_label(c);
      if (x != kNoLabel && y != x) f(ArcRef{n + c, y, y, *s, n + c2, om(c, y)});
    });
    for (int c = 0; c < n; ++c) {
      const Label x = ctx.incoming_label(c);
      if (x != kNoLabel) f(ArcRef{n + c, x, kNoLabel, *s, n + c, om(c, x)});
    }
  }
  if (e)
    for (int c = 0; c < n; ++c) {
      f(ArcRef{c, v, kNoLabel, *e, c, om(c, v)});
      if (ctx.incoming_label(c) != kNoLabel) f(ArcRef{n + c, v, kNoLabel, *e, c, om(c, v)});
    }
}

template <Semiring S, class Ctx>
Weight forward(const AlignmentLattice& a, const Ctx& ctx, const LatticeWeights& w, bool dedup,
               ForwardTable* table) {
  if (static_cast<int>(w.omega.size()) != a.num_states())
    throw std::invalid_argument("weights do not cover every alignment state");
  if (dedup) check_dedup_context(ctx);
  const int n = ctx.size(), v = ctx.vocab(), twins = dedup ? 2 : 1;
  ForwardTable local;
  ForwardTable& t = table ? *table : local;
  t.twins = twins;
  t.context_size = n;
  t.alpha.assign(a.num_states(), std::vector<Weight>(twins * n, S::zero()));
  t.alpha[a.initial()][ctx.initial()] = S::one();
  Matrix buffer, masked;
  for (StateId q : a.enumerate_topo()) {
    if (a.is_final(q)) continue;
    if (w.omega[q].empty()) throw std::invalid_argument("missing weights at alignment state " + a.state_name(q));
    const Matrix& om = topology_rows(ctx, w.omega[q], buffer);
    check_omega(om, n, v);
    std::span<const Weight> src(t.alpha[q]);
    const auto s = a.label_successor(q);
    const auto e = a.epsilon_successor(q);
    if (!dedup) {
      if (s) ctx.template label_flow<S>(src, om, t.alpha[*s]);
      if (e) {
        auto& dst = t.alpha[*e];
        for (int c = 0; c < n; ++c) dst[c] = S::plus(dst[c], S::times(src[c], om(c, v)));
      }
      continue;
    }
    const auto eps_twin = src.first(n);
    const auto rep_twin = src.subspan(n, n);
    if (s) {
      std::span<Weight> dst_rep = std::span<Weight>(t.alpha[*s]).subspan(n, n);
      ctx.template label_flow<S>(eps_twin, om, dst_rep);
      masked = om;
      for (int c = 0; c < n; ++c)
        if (Label x = ctx.incoming_label(c); x != kNoLabel) masked(c, x) = S::zero();
      ctx.template label_flow<S>(rep_twin, masked, dst_rep);
      for (int c = 0; c < n; ++c)
        if (Label x = ctx.incoming_label(c); x != kNoLabel)
          dst_rep[c] = S::plus(dst_rep[c], S::times(rep_twin[c], om(c, x)));
    }
    if (e) {
      auto& dst = t.alpha[*e];
      for (int c = 0; c < n; ++c)
        dst[c] = S::plus(dst[c], S::times(S::plus(eps_twin[c], rep_twin[c]), om(c, v)));
    }
  }
  Weight total = S::zero();
  const auto& fin = t.alpha[a.final_state()];
  for (int d = 0; d < twins; ++d)
    for (int c = 0; c < n; ++c)
      if (ctx.is_final(c)) total = S::plus(total, fin[d * n + c]);
  return total;
}

template <class Ctx>
std::vector<std::vector<Weight>> backward(const AlignmentLattice& a, const Ctx& ctx,
                                          const LatticeWeights& w, bool dedup) {
  const int n = ctx.size(), twins = dedup ? 2 : 1;
  std::vector<std::vector<Weight>> beta(a.num_states(),
                                        std::vector<Weight>(twins * n, LogSemiring::zero()));
  for (int d = 0; d < twins; ++d)
    for (int c = 0; c < n; ++c)
      if (ctx.is_final(c)) beta[a.final_state()][d * n + c] = LogSemiring::one();
  Matrix buffer;
  const auto order = a.enumerate_topo();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const StateId q = *it;
    if (a.is_final(q)) continue;
    const Matrix& om = topology_rows(ctx, w.omega[q], buffer);
    auto& b = beta[q];
    for_each_arc(a, ctx, dedup, q, om, [&](const ArcRef& r) {
      b[r.src] = LogSemiring::plus(b[r.src], LogSemiring::times(r.w, beta[r.dst_q][r.dst]));
    });
  }
  return beta;
}

template <class Ctx>
Posteriors posteriors(const AlignmentLattice& a, const Ctx& ctx, const LatticeWeights& w,
                      bool dedup) {
  ForwardTable f;
  Posteriors p;
  p.total = forward<LogSemiring>(a, ctx, w, dedup, &f);
  if (p.total == kInfinity) throw std::domain_error("lattice has no successful path");
  const auto beta = backward(a, ctx, w, dedup);
  p.twins = f.twins;
  p.gamma.resize(a.num_states());
  Matrix buffer;
  for (StateId q = 0; q < a.num_states(); ++q) {
    if (a.is_final(q)) continue;
    const Matrix& om = topology_rows(ctx, w.omega[q], buffer);
    Matrix& g = p.gamma[q];
    g = Matrix(f.twins * ctx.size(), ctx.vocab() + 1);
    const auto& al = f.alpha[q];
    for_each_arc(a, ctx, dedup, q, om, [&](const ArcRef& r) {
      const double lw = al[r.src] + r.w + beta[r.dst_q][r.dst];
      if (lw == kInfinity) return;
      g(r.src, r.col) += std::exp(p.total - lw);
    });
  }
  return p;
}

// Adds scale * gamma into weight-space gradient tables.
template <class Ctx>
void accumulate_weight_space(const Ctx& ctx, const Posteriors& p, double scale,
                             std::vector<Matrix>& d_omega, const LatticeWeights& w) {
  const int n = ctx.size();
  if (d_omega.size() != p.gamma.size()) d_omega.resize(p.gamma.size());
  for (std::size_t q = 0; q < p.gamma.size(); ++q) {
    const Matrix& g = p.gamma[q];
    if (g.empty()) continue;
    Matrix& d = d_omega[q];
    if (d.empty()) d = Matrix(w.omega[q].rows(), w.omega[q].cols());
    for (std::size_t r = 0; r < g.rows(); ++r) {
      const int c = static_cast<int>(r) % n;
      auto dst = d.row(ctx.weight_state(c));
      const auto src = g.row(r);
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += scale * src[j];
    }
  }
}

template <class Ctx>
Decoded decode(const AlignmentLattice& a, const Ctx& ctx, const LatticeWeights& w, bool dedup) {
  if (dedup) check_dedup_context(ctx);
  const int n = ctx.size(), twins = dedup ? 2 : 1;
  struct Back {
    StateId q = -1;
    int src = -1;
    int col = -1;
    Label out = kNoLabel;
  };
  std::vector<std::vector<Weight>> best(a.num_states(), std::vector<Weight>(twins * n, kInfinity));
  std::vector<std::vector<Back>> back(a.num_states(), std::vector<Back>(twins * n));
  best[a.initial()][ctx.initial()] = 0.0;
  // Lowest (source context state, label, source twin, source alignment state)
  // wins an exact tie.
  auto better = [n](const Back& x, const Back& y) {
    if (y.q < 0) return true;
    if (x.src % n != y.src % n) return x.src % n < y.src % n;
    if (x.col != y.col) return x.col < y.col;
    if (x.src / n != y.src / n) return x.src / n < y.src / n;
    return x.q < y.q;
  };
  Matrix buffer;
  for (StateId q : a.enumerate_topo()) {
    if (a.is_final(q)) continue;
    const Matrix& om = topology_rows(ctx, w.omega[q], buffer);
    check_omega(om, n, ctx.vocab());
    const auto& cur = best[q];
    for_each_arc(a, ctx, dedup, q, om, [&](const ArcRef& r) {
      if (cur[r.src] == kInfinity || r.w == kInfinity) return;
      const Weight cand = cur[r.src] + r.w;
      Weight& dst = best[r.dst_q][r.dst];
      Back b{q, r.src, r.col, r.out};
      Back& old = back[r.dst_q][r.dst];
      if (cand < dst || (cand == dst && better(b, old))) {
        dst = cand;
        old = b;
      }
    });
  }
  Decoded out;
  int arg = -1;
  const StateId fq = a.final_state();
  for (int c = 0; c < n; ++c)
    for (int d = 0; d < twins; ++d) {
      if (!ctx.is_final(c)) continue;
      const int i = d * n + c;
      if (best[fq][i] < out.score) {
        out.score = best[fq][i];
        arg = i;
      }
    }
  if (arg < 0) return out;
  StateId q = fq;
  int i = arg;
  while (!(q == a.initial() && i == ctx.initial())) {
    const Back& b = back[q][i];
    if (b.q < 0) throw std::logic_error("broken backpointer chain");
    out.columns.push_back(b.col);
    if (b.out != kNoLabel) out.labels.push_back(b.out);
    q = b.q;
    i = b.src;
  }
  std::reverse(out.columns.begin(), out.columns.end());
  std::reverse(out.labels.begin(), out.labels.end());
  return out;
}

}  // namespace detail

// The context graph a lattice runs over. Dedup over an order-0 context
// needs the last label, so the topology is lifted to order 1 with all
// weights still read from the single order-0 state.
inline NgramContext lattice_context(const ContextDependency& c, bool dedup) {
  if (dedup && c.order() == 0) return NgramContext::lifted_order0(c);
  return NgramContext(c);
}

inline Weight shortest_distance(const AlignmentLattice& a, const ContextDependency& c,
                                const LatticeWeights& w, SemiringTag tag, bool dedup = false,
                                ForwardTable* table = nullptr) {
  const NgramContext ctx = lattice_context(c, dedup);
  switch (tag) {
    case SemiringTag::kLog: return detail::forward<LogSemiring>(a, ctx, w, dedup, table);
    case SemiringTag::kTropical: return detail::forward<TropicalSemiring>(a, ctx, w, dedup, table);
    case SemiringTag::kReal: break;
  }
  throw std::invalid_argument("shortest_distance runs in the log or tropical semiring");
}

inline Weight numerator(const AlignmentLattice& a, const ContextDependency& c,
                        std::span<const Label> y, const LatticeWeights& w, SemiringTag tag,
                        bool dedup = false, ForwardTable* table = nullptr) {
  const StringContext ctx = intersect_string(y, c);
  switch (tag) {
    case SemiringTag::kLog: return detail::forward<LogSemiring>(a, ctx, w, dedup, table);
    case SemiringTag::kTropical: return detail::forward<TropicalSemiring>(a, ctx, w, dedup, table);
    case SemiringTag::kReal: break;
  }
  throw std::invalid_argument("numerator runs in the log or tropical semiring");
}

inline Posteriors posteriors(const AlignmentLattice& a, const ContextDependency& c,
                             const LatticeWeights& w, bool dedup = false) {
  return detail::posteriors(a, lattice_context(c, dedup), w, dedup);
}

inline Posteriors string_posteriors(const AlignmentLattice& a, const ContextDependency& c,
                                    std::span<const Label> y, const LatticeWeights& w,
                                    bool dedup = false) {
  return detail::posteriors(a, intersect_string(y, c), w, dedup);
}

// Locally normalized lattices have a denominator of exactly one, so it is
// only computed on request.
inline LossResult loss(const AlignmentLattice& a, const ContextDependency& c,
                       std::span<const Label> y, const LatticeWeights& w, bool dedup = false,
                       bool force_denominator = false) {
  LossResult r;
  r.numerator = numerator(a, c, y, w, SemiringTag::kLog, dedup);
  if (!is_local(w.normalization) || force_denominator) {
    r.denominator = shortest_distance(a, c, w, SemiringTag::kLog, dedup);
    r.denominator_computed = true;
  }
  r.loss = r.numerator == kInfinity ? kInfinity : r.numerator - r.denominator;
  return r;
}

struct LossGradient {
  LossResult loss;
  std::vector<Matrix> d_omega;  // dLoss / d(normalized LOG weight), weight space, per alignment state
};

inline LossGradient loss_gradient(const AlignmentLattice& a, const ContextDependency& c,
                                  std::span<const Label> y, const LatticeWeights& w,
                                  bool dedup = false) {
  LossGradient out;
  const StringContext sctx = intersect_string(y, c);
  Posteriors num;
  try {
    num = detail::posteriors(a, sctx, w, dedup);
  } catch (const std::domain_error&) {
    throw UnreachableTarget();
  }
  out.loss.numerator = num.total;
  detail::accumulate_weight_space(sctx, num, 1.0, out.d_omega, w);
  if (!is_local(w.normalization)) {
    const NgramContext ctx = lattice_context(c, dedup);
    Posteriors den = detail::posteriors(a, ctx, w, dedup);
    out.loss.denominator = den.total;
    out.loss.denominator_computed = true;
    detail::accumulate_weight_space(ctx, den, -1.0, out.d_omega, w);
  }
  out.loss.loss = out.loss.numerator - out.loss.denominator;
  return out;
}

inline Decoded decode_max_path(const AlignmentLattice& a, const ContextDependency& c,
                               const LatticeWeights& w, bool dedup = false) {
  return detail::decode(a, lattice_context(c, dedup), w, dedup);
}

}  // namespace gnat
