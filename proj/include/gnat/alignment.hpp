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

// Implicit alignment lattices. States are numbered in topological order and
// successors are computed, never stored.
//
//   frame        states 0..T; t -> t+1 on every label and on epsilon.
//   label_frame  states (t, n), 0 <= t < T, 0 <= n <= k, plus (T, 0);
//                labels (t, n-1) -> (t, n), epsilon (t, n) -> (t+1, 0)
//                from every n. Numbered t*(k+1) + n.
//   label        states 0..l; labels u-1 -> u, epsilon u -> l for u < l.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gnat/context.hpp"

namespace gnat {

enum class AlignmentKind { kFrame, kLabelFrame, kLabel };

constexpr std::string_view to_string(AlignmentKind k) {
  switch (k) {
    case AlignmentKind::kFrame: return "frame";
    case AlignmentKind::kLabelFrame: return "label_frame";
    case AlignmentKind::kLabel: return "label";
  }
  return "?";
}

// Which arc kinds leave an alignment state.
struct ArcMask {
  bool labels = false;
  bool epsilon = false;
  bool any() const { return labels || epsilon; }
  bool operator==(const ArcMask&) const = default;
};

class AlignmentLattice {
 public:
  static AlignmentLattice frame(int frames, bool epsilon_arcs = true) {
    if (frames < 0) throw std::invalid_argument("frame count must be >= 0");
    AlignmentLattice a(AlignmentKind::kFrame, frames);
    a.epsilon_arcs_ = epsilon_arcs;
    a.num_states_ = frames + 1;
    return a;
  }

  static AlignmentLattice label_frame(int frames, int k) {
    if (frames < 0) throw std::invalid_argument("frame count must be >= 0");
    if (k < 1) throw std::invalid_argument("labels per frame k must be >= 1");
    AlignmentLattice a(AlignmentKind::kLabelFrame, frames);
    a.k_ = k;
    a.num_states_ = frames * (k + 1) + 1;
    return a;
  }

  // `frames` is the feature sequence length; label states read the pooled
  // summary of the whole sequence (the last encoder row).
  static AlignmentLattice label(int max_labels, int frames) {
    if (max_labels < 0) throw std::invalid_argument("label bound must be >= 0");
    if (frames < 0) throw std::invalid_argument("frame count must be >= 0");
    AlignmentLattice a(AlignmentKind::kLabel, frames);
    a.max_labels_ = max_labels;
    a.num_states_ = max_labels + 1;
    return a;
  }

  AlignmentKind kind() const { return kind_; }
  int frames() const { return frames_; }
  int k() const { return k_; }
  int max_labels() const { return max_labels_; }
  bool epsilon_arcs() const { return epsilon_arcs_; }
  int num_states() const { return num_states_; }
  StateId initial() const { return 0; }
  StateId final_state() const { return num_states_ - 1; }
  bool is_final(StateId q) const { return q == final_state(); }

  // Topological enumeration; states are already numbered that way.
  std::vector<StateId> enumerate_topo() const {
    std::vector<StateId> order(num_states_);
    for (int i = 0; i < num_states_; ++i) order[i] = i;
    return order;
  }

  std::optional<StateId> label_successor(StateId q) const {
    check(q);
    switch (kind_) {
      case AlignmentKind::kFrame:
        if (q < frames_) return q + 1;
        return std::nullopt;
      case AlignmentKind::kLabelFrame: {
        if (is_final(q)) return std::nullopt;
        const int n = q % (k_ + 1);
        if (n < k_) return q + 1;
        return std::nullopt;
      }
      case AlignmentKind::kLabel:
        if (q < max_labels_) return q + 1;
        return std::nullopt;
    }
    return std::nullopt;
  }

  // Every alignment state has at most one epsilon successor.
  std::optional<StateId> epsilon_successor(StateId q) const {
    check(q);
    switch (kind_) {
      case AlignmentKind::kFrame:
        if (epsilon_arcs_ && q < frames_) return q + 1;
        return std::nullopt;
      case AlignmentKind::kLabelFrame: {
        if (is_final(q)) return std::nullopt;
        const int t = q / (k_ + 1);
        return (t + 1) * (k_ + 1);
      }
      case AlignmentKind::kLabel:
        if (q < max_labels_) return max_labels_;
        return std::nullopt;
    }
    return std::nullopt;
  }

  std::vector<StateId> epsilon_successors(StateId q) const {
    if (auto e = epsilon_successor(q)) return {*e};
    return {};
  }

  ArcMask arc_mask(StateId q) const {
    return {label_successor(q).has_value(), epsilon_successor(q).has_value()};
  }

  // Encoder row whose activations weight the arcs leaving q, or -1 when no
  // row is available (final states, or label lattices over empty input).
  int feature_row(StateId q) const {
    check(q);
    switch (kind_) {
      case AlignmentKind::kFrame:
        return q < frames_ ? q : -1;
      case AlignmentKind::kLabelFrame:
        return is_final(q) ? -1 : q / (k_ + 1);
      case AlignmentKind::kLabel:
        return frames_ > 0 ? frames_ - 1 : -1;
    }
    return -1;
  }

  // (t, n) coordinates of a label_frame state.
  std::pair<int, int> label_frame_coords(StateId q) const {
    check(q);
    if (kind_ != AlignmentKind::kLabelFrame)
      throw std::logic_error("label_frame_coords on a non label_frame lattice");
    return {q / (k_ + 1), q % (k_ + 1)};
  }

  std::string state_name(StateId q) const {
    if (kind_ == AlignmentKind::kLabelFrame) {
      auto [t, n] = label_frame_coords(q);
      return "(" + std::to_string(t) + "," + std::to_string(n) + ")";
    }
    return std::to_string(q);
  }

  // Longest epsilon-free label sequence any successful path emits.
  int max_emitted_labels() const {
    switch (kind_) {
      case AlignmentKind::kFrame: return frames_;
      case AlignmentKind::kLabelFrame: return frames_ * k_;
      case AlignmentKind::kLabel: return max_labels_;
    }
    return 0;
  }

  void check(StateId q) const {
    if (q < 0 || q >= num_states_)
      throw std::out_of_range("alignment state " + std::to_string(q) + " out of range");
  }

 private:
  AlignmentLattice(AlignmentKind kind, int frames) : kind_(kind), frames_(frames) {}

  AlignmentKind kind_;
  int frames_ = 0;
  int k_ = 1;
  int max_labels_ = 0;
  bool epsilon_arcs_ = true;
  int num_states_ = 1;
};

// Number of successful paths when every label arc is expanded over a
// vocabulary of size `vocab`. Throws std::overflow_error instead of wrapping.
inline std::uint64_t count_paths(const AlignmentLattice& a, int vocab) {
  if (vocab < 1) throw std::invalid_argument("vocabulary size must be >= 1");
  std::vector<std::uint64_t> paths(a.num_states(), 0);
  paths[a.initial()] = 1;
  auto add = [](std::uint64_t& dst, std::uint64_t x) {
    if (__builtin_add_overflow(dst, x, &dst))
      throw std::overflow_error("path count overflows 64 bits");
  };
  for (StateId q : a.enumerate_topo()) {
    if (paths[q] == 0) continue;
    if (auto s = a.label_successor(q)) {
      std::uint64_t x = 0;
      if (__builtin_mul_overflow(paths[q], static_cast<std::uint64_t>(vocab), &x))
        throw std::overflow_error("path count overflows 64 bits");
      add(paths[*s], x);
    }
    if (auto e = a.epsilon_successor(q)) add(paths[*e], paths[q]);
  }
  return paths[a.final_state()];
}

}  // namespace gnat
