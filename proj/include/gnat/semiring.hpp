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

/**
 * Semirings over 64-bit weights.
 *
 * |  Semiring  |      Set      |   (+)   | (x) | zero | one |
 * |    real    |     R_+       |    +    |  *  |  0   |  1  |
 * |    log     |  R u {+inf}   | log-add |  +  | +inf |  0  |
 * |  tropical  |  R u {+inf}   |   min   |  +  | +inf |  0  |
 *
 * Log and tropical weights are negative-log scores; +inf is the zero.
 * Negative values are legal in both.
 */

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <span>
#include <string_view>
#include <utility>

namespace gnat {

using Weight = double;

inline constexpr Weight kInfinity = std::numeric_limits<double>::infinity();

enum class SemiringTag { kReal, kLog, kTropical };

constexpr std::string_view to_string(SemiringTag tag) {
  switch (tag) {
    case SemiringTag::kReal: return "real";
    case SemiringTag::kLog: return "log";
    case SemiringTag::kTropical: return "tropical";
  }
  return "?";
}

struct RealSemiring {
  static constexpr SemiringTag kTag = SemiringTag::kReal;
  static constexpr Weight zero() { return 0.0; }
  static constexpr Weight one() { return 1.0; }
  static Weight plus(Weight a, Weight b) { return a + b; }
  static Weight times(Weight a, Weight b) { return a * b; }
};

struct LogSemiring {
  static constexpr SemiringTag kTag = SemiringTag::kLog;
  static constexpr Weight zero() { return kInfinity; }
  static constexpr Weight one() { return 0.0; }
  static Weight plus(Weight a, Weight b) {
    if (a == kInfinity) return b;
    if (b == kInfinity) return a;
    const Weight m = std::min(a, b);
    return m - std::log1p(std::exp(-std::abs(a - b)));
  }
  static Weight times(Weight a, Weight b) {
    if (a == kInfinity || b == kInfinity) return kInfinity;
    return a + b;
  }
};

struct TropicalSemiring {
  static constexpr SemiringTag kTag = SemiringTag::kTropical;
  static constexpr Weight zero() { return kInfinity; }
  static constexpr Weight one() { return 0.0; }
  static Weight plus(Weight a, Weight b) { return std::min(a, b); }
  static Weight times(Weight a, Weight b) {
    if (a == kInfinity || b == kInfinity) return kInfinity;
    return a + b;
  }
};

template <class S>
concept Semiring = requires(Weight a, Weight b) {
  { S::zero() } -> std::convertible_to<Weight>;
  { S::one() } -> std::convertible_to<Weight>;
  { S::plus(a, b) } -> std::convertible_to<Weight>;
  { S::times(a, b) } -> std::convertible_to<Weight>;
};

// Invokes f with an instance of the semiring selected by tag.
template <class F>
decltype(auto) dispatch_semiring(SemiringTag tag, F&& f) {
  switch (tag) {
    case SemiringTag::kReal: return std::forward<F>(f)(RealSemiring{});
    case SemiringTag::kLog: return std::forward<F>(f)(LogSemiring{});
    case SemiringTag::kTropical: break;
  }
  return std::forward<F>(f)(TropicalSemiring{});
}

inline Weight plus(SemiringTag tag, Weight a, Weight b) {
  return dispatch_semiring(tag, [&](auto s) { return decltype(s)::plus(a, b); });
}
inline Weight times(SemiringTag tag, Weight a, Weight b) {
  return dispatch_semiring(tag, [&](auto s) { return decltype(s)::times(a, b); });
}
inline Weight zero(SemiringTag tag) {
  return dispatch_semiring(tag, [](auto s) { return decltype(s)::zero(); });
}
inline Weight one(SemiringTag tag) {
  return dispatch_semiring(tag, [](auto s) { return decltype(s)::one(); });
}

// Fixed left-to-right reduction.
template <Semiring S>
Weight sum(std::span<const Weight> xs) {
  Weight acc = S::zero();
  for (Weight x : xs) acc = S::plus(acc, x);
  return acc;
}

// Stable log-sum-exp in the log semiring's convention: -log sum exp(-x).
inline Weight log_sum(std::span<const Weight> xs) {
  Weight m = kInfinity;
  for (Weight x : xs) m = std::min(m, x);
  if (m == kInfinity) return kInfinity;
  double s = 0.0;
  for (Weight x : xs) s += std::exp(m - x);
  return m - std::log(s);
}

}  // namespace gnat
