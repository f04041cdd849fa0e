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

// Classic sequence models as points of the (context, lattice, weight
// function, normalization) space, plus direct reference implementations of
// their losses.
//
//   ce           order 0, frame lattice without epsilon, local softmax
//   ctc          order 0, frame lattice with epsilon, dedup, local softmax
//   rnnt         label_frame with k = |y| + 1, order cap, local softmax
//   hat          rnnt with the HAT normalization
//   las_bounded  label lattice, order cap, local softmax
//   gnat         any lattice, global normalization
//
// The rnnt and las_bounded presets read context.order as the cap; they are
// exact only when the order covers the longest label history.

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gnat/config.hpp"
#include "gnat/context.hpp"

namespace gnat {

enum class Preset { kCe, kCtc, kRnnt, kHat, kLasBounded, kGnat };

inline constexpr std::uint64_t kPresetStateLimit = 200'000;

constexpr std::string_view to_string(Preset p) {
  switch (p) {
    case Preset::kCe: return "ce";
    case Preset::kCtc: return "ctc";
    case Preset::kRnnt: return "rnnt";
    case Preset::kHat: return "hat";
    case Preset::kLasBounded: return "las_bounded";
    case Preset::kGnat: return "gnat";
  }
  return "?";
}

inline Preset parse_preset(std::string_view name) {
  for (Preset p : {Preset::kCe, Preset::kCtc, Preset::kRnnt, Preset::kHat, Preset::kLasBounded,
                   Preset::kGnat})
    if (name == to_string(p)) return p;
  throw ConfigError("unknown preset '" + std::string(name) +
                    "' (expected ce, ctc, rnnt, hat, las_bounded or gnat)");
}

inline RunConfig expand(Preset p, RunConfig c) {
  c.preset = std::string(to_string(p));
  switch (p) {
    case Preset::kCe:
      c.context.order = 0;
      c.lattice.variant = AlignmentKind::kFrame;
      c.lattice.epsilon = false;
      c.lattice.dedup = false;
      c.weights.normalization = Normalization::kLocalSoftmax;
      break;
    case Preset::kCtc:
      c.context.order = 0;
      c.lattice.variant = AlignmentKind::kFrame;
      c.lattice.epsilon = true;
      c.lattice.dedup = true;
      c.weights.normalization = Normalization::kLocalSoftmax;
      break;
    case Preset::kRnnt:
    case Preset::kHat:
      c.lattice.variant = AlignmentKind::kLabelFrame;
      c.lattice.k = 0;
      c.lattice.dedup = false;
      c.weights.normalization =
          p == Preset::kRnnt ? Normalization::kLocalSoftmax : Normalization::kLocalHat;
      break;
    case Preset::kLasBounded:
      c.lattice.variant = AlignmentKind::kLabel;
      c.lattice.dedup = false;
      c.weights.normalization = Normalization::kLocalSoftmax;
      break;
    case Preset::kGnat:
      if (is_local(c.weights.normalization))
        throw ConfigError("preset gnat requires global normalization, got " +
                          std::string(to_string(c.weights.normalization)));
      break;
  }
  const std::uint64_t states = count_context_states(c.context.order, c.context.vocab);
  if (states > kPresetStateLimit)
    throw ConfigError("preset " + c.preset + " with order " + std::to_string(c.context.order) +
                      " has " + std::to_string(states) + " context states, above the limit of " +
                      std::to_string(kPresetStateLimit));
  validate(c);
  return c;
}

inline RunConfig apply_preset(RunConfig c) {
  if (c.preset.empty()) return c;
  const Preset p = parse_preset(c.preset);
  return expand(p, std::move(c));
}

// Raw score s for (frame, context state, column); column V is epsilon.
using ScoreFn = std::function<double(int frame, StateId context, int column)>;

namespace preset_detail {

inline double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// log p over columns [0, n) of a score row.
inline std::vector<double> log_softmax(const std::vector<double>& s) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : s) m = std::max(m, x);
  double z = 0.0;
  for (double x : s) z += std::exp(x - m);
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] - m - std::log(z);
  return out;
}

// Log-probabilities of (labels..., blank) at one transducer grid point.
inline std::vector<double> transducer_row(const ScoreFn& score, int vocab, int t, StateId q,
                                          bool hat) {
  std::vector<double> s(vocab + 1);
  for (int y = 0; y <= vocab; ++y) s[y] = score(t, q, y);
  if (!hat) return log_softmax(s);
  const double se = s[vocab];
  const double log_blank = -std::log1p(std::exp(-se));
  const double log_not_blank = -std::log1p(std::exp(se));
  std::vector<double> labels(s.begin(), s.begin() + vocab);
  std::vector<double> out = log_softmax(labels);
  for (double& x : out) x += log_not_blank;
  out.push_back(log_blank);
  return out;
}

}  // namespace preset_detail

// Negative log-likelihood from the textbook transducer recursion over the
// (t, u) grid: A(t, u) = A(t-1, u) + blank(t-1, u)  (+)  A(t, u-1) + y_u(t, u-1),
// result -A(T, U). The prediction state for u is the prefix y_1..y_u
// truncated to the context order.
inline double rnnt_oracle_loss(const ScoreFn& score, const ContextDependency& c, int frames,
                               std::span<const Label> y, bool hat = false) {
  const double ninf = -std::numeric_limits<double>::infinity();
  const int U = static_cast<int>(y.size());
  std::vector<StateId> prefix(U + 1);
  for (int u = 0; u <= U; ++u) prefix[u] = c.state_for_suffix(y.first(u));
  std::vector<std::vector<double>> A(frames + 1, std::vector<double>(U + 1, ninf));
  A[0][0] = 0.0;
  for (int t = 0; t <= frames; ++t)
    for (int u = 0; u <= U; ++u) {
      if (t == 0 && u == 0) continue;
      double a = ninf;
      if (t > 0) {
        const auto row = preset_detail::transducer_row(score, c.vocab(), t - 1, prefix[u], hat);
        a = preset_detail::log_add(a, A[t - 1][u] + row[c.vocab()]);
      }
      if (u > 0 && t < frames) {
        const auto row = preset_detail::transducer_row(score, c.vocab(), t, prefix[u - 1], hat);
        a = preset_detail::log_add(a, A[t][u - 1] + row[y[u - 1]]);
      }
      A[t][u] = a;
    }
  return -A[frames][U];
}

// Negative log-likelihood from the standard CTC forward recursion over the
// blank-extended target.
inline double ctc_oracle_loss(const ScoreFn& score, int vocab, int frames,
                              std::span<const Label> y) {
  const double ninf = -std::numeric_limits<double>::infinity();
  const int blank = vocab;
  std::vector<int> ext = {blank};
  for (Label x : y) {
    ext.push_back(x);
    ext.push_back(blank);
  }
  const int S = static_cast<int>(ext.size());
  if (frames == 0) return y.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  auto logp = [&](int t) {
    std::vector<double> s(vocab + 1);
    for (int j = 0; j <= vocab; ++j) s[j] = score(t, 0, j);
    return preset_detail::log_softmax(s);
  };
  std::vector<double> alpha(S, ninf);
  {
    const auto lp = logp(0);
    alpha[0] = lp[ext[0]];
    if (S > 1) alpha[1] = lp[ext[1]];
  }
  for (int t = 1; t < frames; ++t) {
    const auto lp = logp(t);
    std::vector<double> next(S, ninf);
    for (int s = 0; s < S; ++s) {
      double a = alpha[s];
      if (s >= 1) a = preset_detail::log_add(a, alpha[s - 1]);
      if (s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]) a = preset_detail::log_add(a, alpha[s - 2]);
      next[s] = a + lp[ext[s]];
    }
    alpha = std::move(next);
  }
  double total = alpha[S - 1];
  if (S > 1) total = preset_detail::log_add(total, alpha[S - 2]);
  return -total;
}

// Sum over frames of -log softmax over the labels (no epsilon); the target
// must have exactly one label per frame.
inline double ce_oracle_loss(const ScoreFn& score, int vocab, std::span<const Label> y) {
  double loss = 0.0;
  for (int t = 0; t < static_cast<int>(y.size()); ++t) {
    std::vector<double> s(vocab);
    for (int j = 0; j < vocab; ++j) s[j] = score(t, 0, j);
    loss -= preset_detail::log_softmax(s)[y[t]];
  }
  return loss;
}

}  // namespace gnat
