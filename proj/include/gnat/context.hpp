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

// N-gram context dependency: the deterministic, epsilon-free automaton whose
// states are label histories of length <= order.
//
// States are numbered by history length and then lexicographically, so that
// the V transitions leaving any state land on a contiguous index range:
//
//   order 2, V 2:   i=0  a=1  b=2  aa=3  ab=4  ba=5  bb=6
//
// With offset(l) = (V^l - 1) / (V - 1) the first index of length-l histories,
// a state q of length l < order moves to q*V + 1 + y, and a full-length state
// drops its oldest label: offset(order) + (value mod V^(order-1))*V + y.

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnat/matrix.hpp"
#include "gnat/semiring.hpp"

namespace gnat {

using StateId = int;
using Label = int;

inline constexpr Label kNoLabel = -1;

// Number of histories of length <= order over a vocabulary of size vocab.
// Throws std::overflow_error instead of wrapping.
inline std::uint64_t count_context_states(int order, int vocab) {
  if (order < 0) throw std::invalid_argument("context order must be >= 0");
  if (vocab < 1) throw std::invalid_argument("vocabulary size must be >= 1");
  std::uint64_t total = 0;
  std::uint64_t level = 1;
  for (int l = 0; l <= order; ++l) {
    if (__builtin_add_overflow(total, level, &total))
      throw std::overflow_error("context state count overflows 64 bits");
    if (l < order && __builtin_mul_overflow(level, static_cast<std::uint64_t>(vocab), &level))
      throw std::overflow_error("context state count overflows 64 bits");
  }
  return total;
}

class ContextDependency {
 public:
  // Largest state space we are willing to materialize vectors for.
  static constexpr std::uint64_t kMaxStates = std::uint64_t{1} << 26;

  ContextDependency(int order, int vocab) : order_(order), vocab_(vocab) {
    const std::uint64_t n = count_context_states(order, vocab);
    if (n > kMaxStates)
      throw std::length_error("context with order " + std::to_string(order) +
                              " and vocabulary " + std::to_string(vocab) + " has " +
                              std::to_string(n) + " states, above the supported maximum");
    num_states_ = static_cast<int>(n);
    power_.resize(order + 1);
    offset_.resize(order + 2);
    int p = 1;
    int off = 0;
    for (int l = 0; l <= order; ++l) {
      power_[l] = p;
      offset_[l] = off;
      off += p;
      if (l < order) p *= vocab;
    }
    offset_[order + 1] = off;
  }

  int order() const { return order_; }
  int vocab() const { return vocab_; }
  int num_states() const { return num_states_; }
  StateId initial() const { return 0; }

  // First index of histories with the given length; offset(order + 1) is num_states.
  int offset(int length) const { return offset_.at(length); }
  // V^i for 0 <= i <= order.
  int power(int i) const { return power_.at(i); }

  int history_length(StateId q) const {
    check_state(q);
    int l = 0;
    while (q >= offset_[l + 1]) ++l;
    return l;
  }

  StateId state_index(std::span<const Label> history) const {
    if (static_cast<int>(history.size()) > order_)
      throw std::invalid_argument("history of length " + std::to_string(history.size()) +
                                  " exceeds context order " + std::to_string(order_));
    int value = 0;
    for (Label y : history) {
      check_label(y);
      value = value * vocab_ + y;
    }
    return offset_[history.size()] + value;
  }

  // Oldest label first.
  std::vector<Label> history_of(StateId q) const {
    const int l = history_length(q);
    std::vector<Label> h(l);
    int value = q - offset_[l];
    for (int i = l - 1; i >= 0; --i) {
      h[i] = value % vocab_;
      value /= vocab_;
    }
    return h;
  }

  StateId next_state(StateId q, Label y) const {
    check_label(y);
    if (order_ == 0) return 0;
    const int l = history_length(q);
    const int value = q - offset_[l];
    if (l < order_) return q * vocab_ + 1 + y;
    return offset_[order_] + (value % power_[order_ - 1]) * vocab_ + y;
  }

  // Index of next_state(q, 0); the V successors of q are contiguous from here.
  StateId first_successor(StateId q) const {
    if (order_ == 0) return 0;
    if (q < offset_[order_]) return q * vocab_ + 1;
    return offset_[order_] + ((q - offset_[order_]) % power_[order_ - 1]) * vocab_;
  }

  // The label on every arc entering q, or kNoLabel for the initial state.
  // Only meaningful when order >= 1 (the single state of order 0 has
  // self-loops on every label).
  Label incoming_label(StateId q) const {
    check_state(q);
    if (q == 0) return kNoLabel;
    const int l = history_length(q);
    return (q - offset_[l]) % vocab_;
  }

  bool has_unique_incoming_labels() const { return order_ >= 1; }

  // History without its newest label.
  StateId parent(StateId q) const {
    const int l = history_length(q);
    if (l == 0) throw std::invalid_argument("initial context state has no parent");
    return offset_[l - 1] + (q - offset_[l]) / vocab_;
  }

  // Suffix of `labels` of length <= order, as a state.
  StateId state_for_suffix(std::span<const Label> labels) const {
    const std::size_t n = std::min<std::size_t>(labels.size(), order_);
    return state_index(labels.subspan(labels.size() - n));
  }

  std::string state_name(StateId q) const {
    if (q == 0) return "i";
    std::string s;
    for (Label y : history_of(q)) s += label_name(y);
    return s;
  }

  static std::string label_name(Label y) {
    if (y < 26) return std::string(1, static_cast<char>('a' + y));
    return "<" + std::to_string(y) + ">";
  }

  void check_state(StateId q) const {
    if (q < 0 || q >= num_states_)
      throw std::out_of_range("context state " + std::to_string(q) + " out of range");
  }
  void check_label(Label y) const {
    if (y < 0 || y >= vocab_)
      throw std::out_of_range("label " + std::to_string(y) + " out of range for vocabulary " +
                              std::to_string(vocab_));
  }

  bool operator==(const ContextDependency& o) const {
    return order_ == o.order_ && vocab_ == o.vocab_;
  }

 private:
  int order_;
  int vocab_;
  int num_states_ = 0;
  std::vector<int> power_;
  std::vector<int> offset_;
};

namespace detail {

// Blockwise label transition. When kAccumulate is false the output is
// overwritten (destinations without incoming arcs become zero); otherwise
// every contribution is (+)-ed onto the existing contents.
template <Semiring S, bool kAccumulate>
void next_context_blocks(const ContextDependency& c, std::span<const Weight> alpha,
                         const Matrix& omega, std::span<Weight> out) {
  const int n = c.num_states();
  const int v = c.vocab();
  if (static_cast<int>(alpha.size()) != n || static_cast<int>(out.size()) != n ||
      static_cast<int>(omega.rows()) != n || static_cast<int>(omega.cols()) < v)
    throw std::invalid_argument("next_context: dimension mismatch");
  const std::size_t stride = omega.cols();
  const double* om = omega.data();

  if (c.order() == 0) {
    Weight row = S::zero();
    for (int y = 0; y < v; ++y) row = S::plus(row, om[y]);
    const Weight w = S::times(alpha[0], row);
    out[0] = kAccumulate ? S::plus(out[0], w) : w;
    return;
  }
  if constexpr (!kAccumulate) {
    out[0] = S::zero();
  }
  // Histories shorter than order: source q writes the V entries starting at
  // q*V + 1. Blocks of consecutive lengths tile [1, num_states).
  int lo = 0;
  for (int i = 0; i < c.order(); ++i) {
    const int hi = lo + c.power(i);
    for (int q = lo; q < hi; ++q) {
      const Weight a = alpha[q];
      const double* row = om + q * stride;
      Weight* dst = out.data() + q * v + 1;
      for (int y = 0; y < v; ++y) {
        const Weight w = S::times(a, row[y]);
        dst[y] = kAccumulate ? S::plus(dst[y], w) : w;
      }
    }
    lo = hi;
  }
  // Full-length histories: V source blocks, each of V^(order-1) states, all
  // landing on the full-length destination range. Reduced in block order.
  const int block = c.power(c.order() - 1);
  for (int i = 0; i < v; ++i) {
    const int src0 = lo + i * block;
    for (int j = 0; j < block; ++j) {
      const int q = src0 + j;
      const Weight a = alpha[q];
      const double* row = om + q * stride;
      Weight* dst = out.data() + lo + j * v;
      for (int y = 0; y < v; ++y) dst[y] = S::plus(dst[y], S::times(a, row[y]));
    }
  }
}

}  // namespace detail

// result[q'] = (+) over (q, y) with next_state(q, y) = q' of alpha[q] (x) omega[q, y].
// Only the first V columns of omega are read, so a |Q|x(V+1) table with the
// epsilon column last can be passed directly.
template <Semiring S>
void next_context_vectorized(const ContextDependency& c, std::span<const Weight> alpha,
                             const Matrix& omega, std::span<Weight> out) {
  detail::next_context_blocks<S, false>(c, alpha, omega, out);
}

inline std::vector<Weight> next_context_vectorized(const ContextDependency& c,
                                                   std::span<const Weight> alpha,
                                                   const Matrix& omega, SemiringTag tag) {
  std::vector<Weight> out(c.num_states());
  dispatch_semiring(tag, [&](auto s) {
    next_context_vectorized<decltype(s)>(c, alpha, omega, out);
  });
  return out;
}

// The label context used by the lattice algorithms over the full n-gram
// space. A weight map lets the topology carry more history than the weight
// function reads; dedup over an order-0 context uses this to track the last
// label while all weights come from the single order-0 state.
class NgramContext {
 public:
  explicit NgramContext(ContextDependency c) : topo_(std::move(c)) {}
  NgramContext(ContextDependency topology, std::vector<StateId> weight_map)
      : topo_(std::move(topology)), weight_map_(std::move(weight_map)) {
    if (static_cast<int>(weight_map_.size()) != topo_.num_states())
      throw std::invalid_argument("weight map size does not match context states");
  }

  // Order-1 topology over c's vocabulary with every weight read from the
  // order-0 state.
  static NgramContext lifted_order0(const ContextDependency& c) {
    if (c.order() != 0) throw std::invalid_argument("lifted_order0 expects an order-0 context");
    ContextDependency topo(1, c.vocab());
    return NgramContext(topo, std::vector<StateId>(topo.num_states(), 0));
  }

  const ContextDependency& topology() const { return topo_; }
  int size() const { return topo_.num_states(); }
  int vocab() const { return topo_.vocab(); }
  StateId initial() const { return 0; }
  bool is_final(StateId) const { return true; }
  bool identity_weights() const { return weight_map_.empty(); }
  StateId weight_state(StateId q) const { return weight_map_.empty() ? q : weight_map_[q]; }
  Label incoming_label(StateId q) const {
    return topo_.has_unique_incoming_labels() ? topo_.incoming_label(q) : kNoLabel;
  }

  // acc (+)= next(alpha (x) omega) over label arcs; omega rows are topology states.
  template <Semiring S>
  void label_flow(std::span<const Weight> alpha, const Matrix& omega,
                  std::span<Weight> acc) const {
    detail::next_context_blocks<S, true>(topo_, alpha, omega, acc);
  }

  // acc[q] (+)= (+)_y omega[q, y] (x) beta[next_state(q, y)].
  template <Semiring S>
  void label_gather(std::span<const Weight> beta, const Matrix& omega,
                    std::span<Weight> acc) const {
    const int v = topo_.vocab();
    const std::size_t stride = omega.cols();
    for (int q = 0; q < size(); ++q) {
      const double* row = omega.data() + q * stride;
      const Weight* dst = beta.data() + topo_.first_successor(q);
      Weight s = acc[q];
      if (topo_.order() == 0) {
        for (int y = 0; y < v; ++y) s = S::plus(s, S::times(row[y], dst[0]));
      } else {
        for (int y = 0; y < v; ++y) s = S::plus(s, S::times(row[y], dst[y]));
      }
      acc[q] = s;
    }
  }

  // Visits (q, y, q') in source index order, labels ascending.
  template <class F>
  void for_each_label_arc(F&& f) const {
    const int v = topo_.vocab();
    for (int q = 0; q < size(); ++q) {
      const StateId first = topo_.first_successor(q);
      for (int y = 0; y < v; ++y) f(q, y, topo_.order() == 0 ? 0 : first + y);
    }
  }

 private:
  ContextDependency topo_;
  std::vector<StateId> weight_map_;
};

// C intersected with a single label string y: a chain 0 -> 1 -> ... -> U.
// State u has consumed y_1..y_u and reads weights from the n-gram state of
// that prefix truncated to the context order.
class StringContext {
 public:
  StringContext(ContextDependency base, std::vector<Label> labels)
      : base_(std::move(base)), labels_(std::move(labels)) {
    base_states_.reserve(labels_.size() + 1);
    for (Label y : labels_) base_.check_label(y);
    for (std::size_t u = 0; u <= labels_.size(); ++u)
      base_states_.push_back(base_.state_for_suffix(std::span<const Label>(labels_).first(u)));
  }

  const ContextDependency& base() const { return base_; }
  const std::vector<Label>& labels() const { return labels_; }
  const std::vector<StateId>& base_states() const { return base_states_; }
  int size() const { return static_cast<int>(labels_.size()) + 1; }
  int vocab() const { return base_.vocab(); }
  StateId initial() const { return 0; }
  StateId final_state() const { return static_cast<StateId>(labels_.size()); }
  bool is_final(StateId u) const { return u == final_state(); }
  bool identity_weights() const { return false; }
  StateId weight_state(StateId u) const { return base_states_[u]; }
  Label incoming_label(StateId u) const { return u == 0 ? kNoLabel : labels_[u - 1]; }

  template <Semiring S>
  void label_flow(std::span<const Weight> alpha, const Matrix& omega,
                  std::span<Weight> acc) const {
    for (std::size_t u = 0; u < labels_.size(); ++u)
      acc[u + 1] = S::plus(acc[u + 1], S::times(alpha[u], omega(u, labels_[u])));
  }

  template <Semiring S>
  void label_gather(std::span<const Weight> beta, const Matrix& omega,
                    std::span<Weight> acc) const {
    for (std::size_t u = 0; u < labels_.size(); ++u)
      acc[u] = S::plus(acc[u], S::times(omega(u, labels_[u]), beta[u + 1]));
  }

  template <class F>
  void for_each_label_arc(F&& f) const {
    for (std::size_t u = 0; u < labels_.size(); ++u)
      f(static_cast<StateId>(u), labels_[u], static_cast<StateId>(u + 1));
  }

 private:
  ContextDependency base_;
  std::vector<Label> labels_;
  std::vector<StateId> base_states_;
};

inline StringContext intersect_string(std::span<const Label> y, const ContextDependency& c) {
  return StringContext(c, std::vector<Label>(y.begin(), y.end()));
}

// Rows of a weight-space table (one row per weight state) rearranged into
// topology rows. Returns `omega` itself when the map is the identity.
template <class Ctx>
const Matrix& topology_rows(const Ctx& ctx, const Matrix& omega, Matrix& buffer) {
  if (ctx.identity_weights()) return omega;
  buffer = Matrix(ctx.size(), omega.cols());
  for (StateId q = 0; q < ctx.size(); ++q) {
    const auto src = omega.row(ctx.weight_state(q));
    std::copy(src.begin(), src.end(), buffer.row(q).begin());
  }
  return buffer;
}

}  // namespace gnat
