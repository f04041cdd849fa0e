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

// CTC-style label deduplication transducer D. It has one state per label
// plus epsilon and remembers the last input symbol. Reading x from state p
// outputs x unless p == x, in which case it outputs epsilon; either way it
// moves to state x.

#include <span>
#include <stdexcept>
#include <vector>

#include "gnat/context.hpp"

namespace gnat {

// Merges runs of repeated labels, then drops epsilon (kNoLabel).
inline std::vector<Label> ctc_collapse(std::span<const Label> z) {
  std::vector<Label> out;
  Label prev = kNoLabel;
  for (Label x : z) {
    if (x != kNoLabel && x != prev) out.push_back(x);
    prev = x;
  }
  return out;
}

class DedupTransducer {
 public:
  struct Arc {
    int src;
    Label in;   // kNoLabel for epsilon
    Label out;  // kNoLabel for epsilon
    int dst;
  };

  explicit DedupTransducer(int vocab) : vocab_(vocab) {
    if (vocab < 1) throw std::invalid_argument("vocabulary size must be >= 1");
  }

  int vocab() const { return vocab_; }
  int num_states() const { return vocab_ + 1; }
  // State V stands for epsilon and is the start state.
  int epsilon_state() const { return vocab_; }
  int initial() const { return vocab_; }
  static int state_of(Label x, int vocab) { return x == kNoLabel ? vocab : x; }

  Arc step(int p, Label x) const {
    const int dst = state_of(x, vocab_);
    const Label out = (x != kNoLabel && p == x) ? kNoLabel : x;
    return {p, x, out, dst};
  }

  std::vector<Arc> arcs() const {
    std::vector<Arc> out;
    for (int p = 0; p < num_states(); ++p) {
      for (Label x = 0; x < vocab_; ++x) out.push_back(step(p, x));
      out.push_back(step(p, kNoLabel));
    }
    return out;
  }

  std::vector<Label> transduce(std::span<const Label> z) const {
    std::vector<Label> out;
    int p = initial();
    for (Label x : z) {
      const Arc a = step(p, x);
      if (a.out != kNoLabel) out.push_back(a.out);
      p = a.dst;
    }
    return out;
  }

 private:
  int vocab_;
};

}  // namespace gnat
