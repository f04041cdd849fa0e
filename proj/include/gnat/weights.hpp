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

// Encoders and weight functions.
//
// A weight function maps (encoder row, context state, label) to a raw score
// s; the lattice runs on LOG weights -s, so a higher score means a more
// likely arc. Column V of every score table is epsilon, columns 0..V-1 are
// the labels.

#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gnat/alignment.hpp"
#include "gnat/context.hpp"
#include "gnat/matrix.hpp"
#include "gnat/semiring.hpp"

namespace gnat {

enum class Normalization { kGlobal, kLocalSoftmax, kLocalHat };
enum class EncoderKind { kCausalRnn, kBidirRnn };
enum class WeightKind { kUnshared, kSharedEmb, kSharedRnn };

constexpr std::string_view to_string(Normalization n) {
  switch (n) {
    case Normalization::kGlobal: return "global";
    case Normalization::kLocalSoftmax: return "local_softmax";
    case Normalization::kLocalHat: return "local_hat";
  }
  return "?";
}
constexpr std::string_view to_string(EncoderKind k) {
  switch (k) {
    case EncoderKind::kCausalRnn: return "causal_rnn";
    case EncoderKind::kBidirRnn: return "bidir_rnn";
  }
  return "?";
}
constexpr std::string_view to_string(WeightKind k) {
  switch (k) {
    case WeightKind::kUnshared: return "unshared";
    case WeightKind::kSharedEmb: return "shared_emb";
    case WeightKind::kSharedRnn: return "shared_rnn";
  }
  return "?";
}

constexpr bool is_local(Normalization n) { return n != Normalization::kGlobal; }

// A named view on one parameter tensor.
struct Param {
  std::string name;
  Matrix* value;
  int fan_in;
};
struct ConstParam {
  std::string name;
  const Matrix* value;
};

namespace detail {

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline void init_params(std::vector<Param> params, std::mt19937_64& rng) {
  for (auto& p : params) fill_uniform(*p.value, 1.0 / std::sqrt(static_cast<double>(p.fan_in)), rng);
}

inline std::vector<ConstParam> as_const(const std::vector<Param>& ps) {
  std::vector<ConstParam> out;
  for (const auto& p : ps) out.push_back({p.name, p.value});
  return out;
}

inline void check_finite(std::span<const double> xs, const char* what) {
  for (double x : xs)
    if (!std::isfinite(x)) throw std::domain_error(std::string("non-finite ") + what);
}

}  // namespace detail

// Single-layer tanh recurrence(s) followed by a linear projection to D.
// The causal variant runs left to right only, so output row t depends on
// input rows 0..t; the bidirectional variant concatenates a right-to-left
// recurrence before projecting.
class Encoder {
 public:
  struct Cache {
    Matrix forward;   // T x D hidden states of the left-to-right recurrence
    Matrix backward;  // T x D hidden states of the right-to-left recurrence (bidir only)
  };

  Encoder() = default;
  Encoder(EncoderKind kind, int input_dim, int hidden_dim)
      : kind_(kind), input_dim_(input_dim), hidden_dim_(hidden_dim) {
    if (input_dim < 1 || hidden_dim < 1) throw std::invalid_argument("encoder dimensions must be >= 1");
    const std::size_t d = hidden_dim, din = input_dim;
    wx_ = Matrix(d, din);
    wh_ = Matrix(d, d);
    b_ = Matrix(d, 1);
    if (kind == EncoderKind::kBidirRnn) {
      wx_back_ = Matrix(d, din);
      wh_back_ = Matrix(d, d);
      b_back_ = Matrix(d, 1);
      proj_ = Matrix(d, 2 * d);
    } else {
      proj_ = Matrix(d, d);
    }
    proj_b_ = Matrix(d, 1);
  }

  EncoderKind kind() const { return kind_; }
  int input_dim() const { return input_dim_; }
  int output_dim() const { return hidden_dim_; }
  bool streaming() const { return kind_ == EncoderKind::kCausalRnn; }

  std::vector<Param> parameters() {
    const int d = hidden_dim_, din = input_dim_;
    std::vector<Param> ps = {{"encoder.wx", &wx_, din}, {"encoder.wh", &wh_, d}, {"encoder.b", &b_, din}};
    if (kind_ == EncoderKind::kBidirRnn) {
      ps.push_back({"encoder.wx_back", &wx_back_, din});
      ps.push_back({"encoder.wh_back", &wh_back_, d});
      ps.push_back({"encoder.b_back", &b_back_, din});
      ps.push_back({"encoder.proj", &proj_, 2 * d});
      ps.push_back({"encoder.proj_b", &proj_b_, 2 * d});
    } else {
      ps.push_back({"encoder.proj", &proj_, d});
      ps.push_back({"encoder.proj_b", &proj_b_, d});
    }
    return ps;
  }
  std::vector<ConstParam> parameters() const {
    return detail::as_const(const_cast<Encoder*>(this)->parameters());
  }

  void init_uniform(std::mt19937_64& rng) { detail::init_params(parameters(), rng); }
  void set_zero() {
    for (auto& p : parameters()) p.value->fill(0.0);
  }

  Matrix encode(const Matrix& x, Cache* cache = nullptr) const {
    if (x.rows() > 0 && static_cast<int>(x.cols()) != input_dim_)
      throw std::invalid_argument("encoder expects " + std::to_string(input_dim_) +
                                  " input columns, got " + std::to_string(x.cols()));
    detail::check_finite(x.flat(), "encoder input");
    const std::size_t T = x.rows(), d = hidden_dim_;
    Cache local;
    Cache& c = cache ? *cache : local;
    c.forward = Matrix(T, d);
    std::vector<double> z(d);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t i = 0; i < d; ++i) z[i] = b_(i, 0);
      gemv_accumulate(wx_, x.row(t), z);
      if (t > 0) gemv_accumulate(wh_, c.forward.row(t - 1), z);
      for (std::size_t i = 0; i < d; ++i) c.forward(t, i) = std::tanh(z[i]);
    }
    if (kind_ == EncoderKind::kBidirRnn) {
      c.backward = Matrix(T, d);
      for (std::size_t r = T; r-- > 0;) {
        for (std::size_t i = 0; i < d; ++i) z[i] = b_back_(i, 0);
        gemv_accumulate(wx_back_, x.row(r), z);
        if (r + 1 < T) gemv_accumulate(wh_back_, c.backward.row(r + 1), z);
        for (std::size_t i = 0; i < d; ++i) c.backward(r, i) = std::tanh(z[i]);
      }
    }
    Matrix h(T, d);
    std::vector<double> cat(kind_ == EncoderKind::kBidirRnn ? 2 * d : d);
    for (std::size_t t = 0; t < T; ++t) {
      auto out = h.row(t);
      for (std::size_t i = 0; i < d; ++i) out[i] = proj_b_(i, 0);
      std::copy(c.forward.row(t).begin(), c.forward.row(t).end(), cat.begin());
      if (kind_ == EncoderKind::kBidirRnn)
        std::copy(c.backward.row(t).begin(), c.backward.row(t).end(), cat.begin() + d);
      gemv_accumulate(proj_, cat, out);
    }
    return h;
  }

  // Accumulates parameter gradients into `grad` given dL/dh.
  void backward(const Matrix& x, const Cache& c, const Matrix& dh, Encoder& grad) const {
    const std::size_t T = x.rows(), d = hidden_dim_;
    const bool bidir = kind_ == EncoderKind::kBidirRnn;
    Matrix d_fwd(T, d), d_bwd(bidir ? T : 0, d);
    std::vector<double> cat(bidir ? 2 * d : d), dcat(cat.size());
    for (std::size_t t = 0; t < T; ++t) {
      std::copy(c.forward.row(t).begin(), c.forward.row(t).end(), cat.begin());
      if (bidir) std::copy(c.backward.row(t).begin(), c.backward.row(t).end(), cat.begin() + d);
      outer_accumulate(grad.proj_, dh.row(t), cat);
      for (std::size_t i = 0; i < d; ++i) grad.proj_b_(i, 0) += dh(t, i);
      std::fill(dcat.begin(), dcat.end(), 0.0);
      gemv_transpose_accumulate(proj_, dh.row(t), dcat);
      for (std::size_t i = 0; i < d; ++i) d_fwd(t, i) = dcat[i];
      if (bidir)
        for (std::size_t i = 0; i < d; ++i) d_bwd(t, i) = dcat[d + i];
    }
    std::vector<double> dz(d), carry(d, 0.0);
    for (std::size_t t = T; t-- > 0;) {
      for (std::size_t i = 0; i < d; ++i) {
        const double a = c.forward(t, i);
        dz[i] = (d_fwd(t, i) + carry[i]) * (1.0 - a * a);
      }
      outer_accumulate(grad.wx_, dz, x.row(t));
      if (t > 0) outer_accumulate(grad.wh_, dz, c.forward.row(t - 1));
      for (std::size_t i = 0; i < d; ++i) grad.b_(i, 0) += dz[i];
      std::fill(carry.begin(), carry.end(), 0.0);
      gemv_transpose_accumulate(wh_, dz, carry);
    }
    if (!bidir) return;
    std::fill(carry.begin(), carry.end(), 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t i = 0; i < d; ++i) {
        const double a = c.backward(t, i);
        dz[i] = (d_bwd(t, i) + carry[i]) * (1.0 - a * a);
      }
      outer_accumulate(grad.wx_back_, dz, x.row(t));
      if (t + 1 < T) outer_accumulate(grad.wh_back_, dz, c.backward.row(t + 1));
      for (std::size_t i = 0; i < d; ++i) grad.b_back_(i, 0) += dz[i];
      std::fill(carry.begin(), carry.end(), 0.0);
      gemv_transpose_accumulate(wh_back_, dz, carry);
    }
  }

 private:
  EncoderKind kind_ = EncoderKind::kCausalRnn;
  int input_dim_ = 0;
  int hidden_dim_ = 0;
  Matrix wx_, wh_, b_;
  Matrix wx_back_, wh_back_, b_back_;
  Matrix proj_, proj_b_;
};

// Per parameter set, per-context-state data shared by every frame.
struct ContextCache {
  Matrix hidden;     // |Q| x H recurrent states (shared_rnn)
  Matrix embedding;  // |Q| x D state embeddings (shared_emb, shared_rnn)
};

class WeightFunction {
 public:
  WeightFunction() : context_(0, 1) {}
  WeightFunction(WeightKind kind, const ContextDependency& context, int hidden_dim,
                 Normalization normalization, int rnn_dim = 16)
      : kind_(kind), normalization_(normalization), context_(context),
        hidden_dim_(hidden_dim), rnn_dim_(rnn_dim) {
    if (hidden_dim < 1) throw std::invalid_argument("weight function hidden dimension must be >= 1");
    const std::size_t q = context.num_states(), v1 = context.vocab() + 1, d = hidden_dim;
    switch (kind) {
      case WeightKind::kUnshared:
        w_ = Matrix(q * v1, d);
        b_ = Matrix(q, v1);
        break;
      case WeightKind::kSharedEmb:
        emb_ = Matrix(q, d);
        w_ = Matrix(v1, d);
        b_ = Matrix(v1, 1);
        break;
      case WeightKind::kSharedRnn:
        if (rnn_dim < 1) throw std::invalid_argument("rnn dimension must be >= 1");
        rnn_in_ = Matrix(rnn_dim, context.vocab());
        rnn_rec_ = Matrix(rnn_dim, rnn_dim);
        rnn_b_ = Matrix(rnn_dim, 1);
        rnn_proj_ = Matrix(d, rnn_dim);
        rnn_proj_b_ = Matrix(d, 1);
        w_ = Matrix(v1, d);
        b_ = Matrix(v1, 1);
        break;
    }
  }

  WeightKind kind() const { return kind_; }
  Normalization normalization() const { return normalization_; }
  const ContextDependency& context() const { return context_; }
  int hidden_dim() const { return hidden_dim_; }
  int rnn_dim() const { return rnn_dim_; }
  int vocab() const { return context_.vocab(); }
  int num_columns() const { return context_.vocab() + 1; }
  int epsilon_column() const { return context_.vocab(); }

  std::vector<Param> parameters() {
    const int d = hidden_dim_, h = rnn_dim_, v = context_.vocab();
    switch (kind_) {
      case WeightKind::kUnshared:
        return {{"weights.w", &w_, d}, {"weights.b", &b_, d}};
      case WeightKind::kSharedEmb:
        return {{"weights.emb", &emb_, d}, {"weights.w", &w_, d}, {"weights.b", &b_, d}};
      case WeightKind::kSharedRnn:
        return {{"weights.rnn_in", &rnn_in_, v},       {"weights.rnn_rec", &rnn_rec_, h},
                {"weights.rnn_b", &rnn_b_, v},         {"weights.rnn_proj", &rnn_proj_, h},
                {"weights.rnn_proj_b", &rnn_proj_b_, h}, {"weights.w", &w_, d},
                {"weights.b", &b_, d}};
    }
    return {};
  }
  std::vector<ConstParam> parameters() const {
    return detail::as_const(const_cast<WeightFunction*>(this)->parameters());
  }

  void init_uniform(std::mt19937_64& rng) { detail::init_params(parameters(), rng); }
  void set_zero() {
    for (auto& p : parameters()) p.value->fill(0.0);
  }

  // Direct access for tests and tools that hand-set parameters.
  Matrix& w() { return w_; }
  Matrix& b() { return b_; }
  Matrix& embedding() { return emb_; }
  Matrix& rnn_projection_bias() { return rnn_proj_b_; }
  const Matrix& rnn_projection_bias() const { return rnn_proj_b_; }

  // Context embeddings for all states. For shared_rnn every state extends
  // its parent history by one recurrence step, oldest label first, from a
  // zero initial hidden state; states are visited in index order, which
  // places parents before children.
  ContextCache prepare() const {
    ContextCache c;
    if (kind_ == WeightKind::kSharedEmb) {
      c.embedding = emb_;
    } else if (kind_ == WeightKind::kSharedRnn) {
      const int n = context_.num_states();
      const std::size_t h = rnn_dim_;
      c.hidden = Matrix(n, h);
      c.embedding = Matrix(n, hidden_dim_);
      std::vector<double> z(h);
      for (StateId q = 1; q < n; ++q) {
        const Label y = context_.incoming_label(q);
        const StateId p = context_.parent(q);
        for (std::size_t i = 0; i < h; ++i) z[i] = rnn_b_(i, 0) + rnn_in_(i, y);
        gemv_accumulate(rnn_rec_, c.hidden.row(p), z);
        for (std::size_t i = 0; i < h; ++i) c.hidden(q, i) = std::tanh(z[i]);
      }
      for (StateId q = 0; q < n; ++q) {
        auto e = c.embedding.row(q);
        for (int i = 0; i < hidden_dim_; ++i) e[i] = rnn_proj_b_(i, 0);
        gemv_accumulate(rnn_proj_, c.hidden.row(q), e);
      }
    }
    return c;
  }

  // Raw scores s for every (context state, label) given one encoder row.
  void raw_scores(const ContextCache& cache, std::span<const double> h, Matrix& out) const {
    if (static_cast<int>(h.size()) != hidden_dim_)
      throw std::invalid_argument("weight function expects " + std::to_string(hidden_dim_) +
                                  "-dim activations, got " + std::to_string(h.size()));
    detail::check_finite(h, "activations");
    const std::size_t n = context_.num_states(), v1 = num_columns(), d = hidden_dim_;
    out = Matrix(n, v1);
    if (kind_ == WeightKind::kUnshared) {
      for (std::size_t q = 0; q < n; ++q)
        for (std::size_t y = 0; y < v1; ++y) {
          const double* wr = w_.data() + (q * v1 + y) * d;
          double s = b_(q, y);
          for (std::size_t i = 0; i < d; ++i) s += wr[i] * h[i];
          out(q, y) = s;
        }
      return;
    }
    std::vector<double> z(d);
    for (std::size_t q = 0; q < n; ++q) {
      const auto e = cache.embedding.row(q);
      for (std::size_t i = 0; i < d; ++i) z[i] = std::tanh(h[i] + e[i]);
      auto o = out.row(q);
      for (std::size_t y = 0; y < v1; ++y) o[y] = b_(y, 0);
      gemv_accumulate(w_, z, o);
    }
  }

  // Backpropagates dL/ds for one encoder row. Parameter gradients go to
  // `grad`, embedding gradients to `d_embedding` (|Q| x D, finished by
  // finish_backward) and activation gradients to dh when non-empty.
  void backward_scores(const ContextCache& cache, std::span<const double> h, const Matrix& ds,
                       WeightFunction& grad, Matrix& d_embedding, std::span<double> dh) const {
    const std::size_t n = context_.num_states(), v1 = num_columns(), d = hidden_dim_;
    if (kind_ == WeightKind::kUnshared) {
      for (std::size_t q = 0; q < n; ++q)
        for (std::size_t y = 0; y < v1; ++y) {
          const double g = ds(q, y);
          if (g == 0.0) continue;
          grad.b_(q, y) += g;
          double* gw = grad.w_.data() + (q * v1 + y) * d;
          const double* wr = w_.data() + (q * v1 + y) * d;
          for (std::size_t i = 0; i < d; ++i) gw[i] += g * h[i];
          if (!dh.empty())
            for (std::size_t i = 0; i < d; ++i) dh[i] += g * wr[i];
        }
      return;
    }
    if (d_embedding.rows() != n) d_embedding = Matrix(n, d);
    std::vector<double> z(d), dz(d);
    for (std::size_t q = 0; q < n; ++q) {
      const auto g = ds.row(q);
      bool any = false;
      for (double x : g) any = any || x != 0.0;
      if (!any) continue;
      const auto e = cache.embedding.row(q);
      for (std::size_t i = 0; i < d; ++i) z[i] = std::tanh(h[i] + e[i]);
      outer_accumulate(grad.w_, g, z);
      for (std::size_t y = 0; y < v1; ++y) grad.b_(y, 0) += g[y];
      std::fill(dz.begin(), dz.end(), 0.0);
      gemv_transpose_accumulate(w_, g, dz);
      auto de = d_embedding.row(q);
      for (std::size_t i = 0; i < d; ++i) {
        const double da = dz[i] * (1.0 - z[i] * z[i]);
        de[i] += da;
        if (!dh.empty()) dh[i] += da;
      }
    }
  }

  void finish_backward(const ContextCache& cache, const Matrix& d_embedding,
                       WeightFunction& grad) const {
    if (d_embedding.empty()) return;
    if (kind_ == WeightKind::kSharedEmb) {
      for (std::size_t i = 0; i < d_embedding.size(); ++i)
        grad.emb_.data()[i] += d_embedding.data()[i];
      return;
    }
    if (kind_ != WeightKind::kSharedRnn) return;
    const int n = context_.num_states();
    const std::size_t h = rnn_dim_;
    Matrix d_hidden(n, h);
    for (StateId q = 0; q < n; ++q) {
      outer_accumulate(grad.rnn_proj_, d_embedding.row(q), cache.hidden.row(q));
      for (int i = 0; i < hidden_dim_; ++i) grad.rnn_proj_b_(i, 0) += d_embedding(q, i);
      gemv_transpose_accumulate(rnn_proj_, d_embedding.row(q), d_hidden.row(q));
    }
    std::vector<double> dz(h);
    for (StateId q = n - 1; q >= 1; --q) {
      const Label y = context_.incoming_label(q);
      const StateId p = context_.parent(q);
      for (std::size_t i = 0; i < h; ++i) {
        const double a = cache.hidden(q, i);
        dz[i] = d_hidden(q, i) * (1.0 - a * a);
        grad.rnn_b_(i, 0) += dz[i];
        grad.rnn_in_(i, y) += dz[i];
      }
      outer_accumulate(grad.rnn_rec_, dz, cache.hidden.row(p));
      gemv_transpose_accumulate(rnn_rec_, dz, d_hidden.row(p));
    }
  }

 private:
  WeightKind kind_ = WeightKind::kUnshared;
  Normalization normalization_ = Normalization::kGlobal;
  ContextDependency context_;
  int hidden_dim_ = 1;
  int rnn_dim_ = 16;
  Matrix w_, b_, emb_;
  Matrix rnn_in_, rnn_rec_, rnn_b_, rnn_proj_, rnn_proj_b_;
};

// LOG weights -s for every (context state, label) at one encoder row.
inline Matrix omega_matrix(const WeightFunction& wf, const ContextCache& cache,
                           std::span<const double> h) {
  Matrix s;
  wf.raw_scores(cache, h, s);
  for (double& x : s.flat()) x = -x;
  return s;
}

// Row-wise normalization of LOG weights x over the arcs present at an
// alignment state. Output entries for absent arcs are zero (+inf) in the
// local modes; global normalization is the identity.
inline Matrix normalize_rows(const Matrix& x, ArcMask mask, Normalization mode) {
  if (!mask.any()) throw std::invalid_argument("normalize_rows: no arcs at a non-final state");
  if (mode == Normalization::kGlobal) return x;
  const std::size_t v = x.cols() - 1;
  Matrix y(x.rows(), x.cols(), kInfinity);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto xr = x.row(r);
    auto yr = y.row(r);
    if (mode == Normalization::kLocalSoftmax || !mask.labels || !mask.epsilon) {
      // Softmax over whatever arcs exist. For HAT this is the degenerate case
      // of a single arc kind.
      double m = kInfinity;
      if (mask.labels)
        for (std::size_t j = 0; j < v; ++j) m = std::min(m, xr[j]);
      if (mask.epsilon && mode == Normalization::kLocalSoftmax) m = std::min(m, xr[v]);
      const bool use_eps = mask.epsilon && (mode == Normalization::kLocalSoftmax || !mask.labels);
      if (use_eps && !mask.labels) m = xr[v];
      double s = 0.0;
      if (mask.labels)
        for (std::size_t j = 0; j < v; ++j) s += std::exp(m - xr[j]);
      if (use_eps) s += std::exp(m - xr[v]);
      const double lse = m - std::log(s);
      if (mask.labels)
        for (std::size_t j = 0; j < v; ++j) yr[j] = xr[j] - lse;
      if (use_eps) yr[v] = xr[v] - lse;
      continue;
    }
    // HAT: epsilon gets sigma(s_eps), labels share 1 - sigma(s_eps) by softmax.
    const double s_eps = -xr[v];
    double m = kInfinity;
    for (std::size_t j = 0; j < v; ++j) m = std::min(m, xr[j]);
    double s = 0.0;
    for (std::size_t j = 0; j < v; ++j) s += std::exp(m - xr[j]);
    const double lse = m - std::log(s);
    const double not_eps = detail::softplus(s_eps);  // -log(1 - sigma(s_eps))
    for (std::size_t j = 0; j < v; ++j) yr[j] = not_eps + xr[j] - lse;
    yr[v] = detail::softplus(-s_eps);  // -log sigma(s_eps)
  }
  return y;
}

// Given dL/dy for y = normalize_rows(x, mask, mode), returns dL/dx.
inline Matrix normalize_rows_backward(const Matrix& x, ArcMask mask, Normalization mode,
                                      const Matrix& dy) {
  if (mode == Normalization::kGlobal) return dy;
  const std::size_t v = x.cols() - 1;
  Matrix dx(x.rows(), x.cols());
  std::vector<double> p(x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto xr = x.row(r);
    const auto g = dy.row(r);
    auto out = dx.row(r);
    const bool hat = mode == Normalization::kLocalHat && mask.labels && mask.epsilon;
    const bool use_eps = mask.epsilon && (mode == Normalization::kLocalSoftmax || !mask.labels);
    // Softmax probabilities over the label block (and epsilon when it is part
    // of the same softmax).
    double m = kInfinity;
    if (mask.labels)
      for (std::size_t j = 0; j < v; ++j) m = std::min(m, xr[j]);
    if (use_eps) m = std::min(m, xr[v]);
    double s = 0.0;
    if (mask.labels)
      for (std::size_t j = 0; j < v; ++j) s += (p[j] = std::exp(m - xr[j]));
    if (use_eps) s += (p[v] = std::exp(m - xr[v]));
    double gsum = 0.0;
    if (mask.labels)
      for (std::size_t j = 0; j < v; ++j) {
        p[j] /= s;
        gsum += g[j];
      }
    if (use_eps) {
      p[v] /= s;
      gsum += g[v];
    }
    if (mask.labels)
      for (std::size_t j = 0; j < v; ++j) out[j] = g[j] - p[j] * gsum;
    if (use_eps) out[v] = g[v] - p[v] * gsum;
    if (hat) {
      const double b = detail::sigmoid(-xr[v]);  // sigma(s_eps)
      out[v] = g[v] * (1.0 - b) - b * gsum;
    }
  }
  return dx;
}

// Normalized LOG weights for every alignment state of a lattice, in weight
// space (one row per context state of the weight function).
struct LatticeWeights {
  Normalization normalization = Normalization::kGlobal;
  int vocab = 0;
  std::vector<Matrix> omega;  // indexed by alignment state; empty without arcs
};

// Binds (weight function, encoder activations) to an alignment lattice:
// computes raw scores once per encoder row, normalizes them per alignment
// state, and maps lattice gradients back to parameters.
class LatticeScorer {
 public:
  LatticeScorer(const WeightFunction& wf, const AlignmentLattice& lattice, const Matrix& h)
      : wf_(&wf), lattice_(&lattice), h_(&h), cache_(wf.prepare()) {
    if (h.rows() > 0 && static_cast<int>(h.cols()) != wf.hidden_dim())
      throw std::invalid_argument("activations have " + std::to_string(h.cols()) +
                                  " columns, weight function expects " +
                                  std::to_string(wf.hidden_dim()));
    if (static_cast<int>(h.rows()) < lattice.frames())
      throw std::invalid_argument("fewer activation rows than lattice frames");
    zero_row_.assign(wf.hidden_dim(), 0.0);
    raw_.resize(lattice.frames() + 1);
    weights_.normalization = wf.normalization();
    weights_.vocab = wf.vocab();
    weights_.omega.resize(lattice.num_states());
    for (StateId q = 0; q < lattice.num_states(); ++q) {
      const ArcMask mask = lattice.arc_mask(q);
      if (!mask.any()) continue;
      const Matrix& x = negated_raw(lattice.feature_row(q));
      weights_.omega[q] = normalize_rows(x, mask, wf.normalization());
    }
  }

  const LatticeWeights& weights() const { return weights_; }
  const ContextCache& cache() const { return cache_; }

  // d_omega[q] holds dL/d(normalized LOG weight) for alignment state q (empty
  // to skip). Parameter gradients are added to `grad`, activation gradients
  // to *dh (T x D) when dh is non-null.
  void backward(const std::vector<Matrix>& d_omega, WeightFunction& grad, Matrix* dh) const {
    std::vector<Matrix> ds(raw_.size());
    for (StateId q = 0; q < lattice_->num_states(); ++q) {
      if (q >= static_cast<StateId>(d_omega.size()) || d_omega[q].empty()) continue;
      const int row = lattice_->feature_row(q);
      const Matrix& x = raw_[row + 1];
      Matrix dx = normalize_rows_backward(x, lattice_->arc_mask(q), wf_->normalization(), d_omega[q]);
      Matrix& acc = ds[row + 1];
      if (acc.empty()) acc = Matrix(dx.rows(), dx.cols());
      // s = -x
      for (std::size_t i = 0; i < dx.size(); ++i) acc.data()[i] -= dx.data()[i];
    }
    if (dh && (dh->rows() != h_->rows() || dh->cols() != h_->cols()))
      *dh = Matrix(h_->rows(), h_->cols());
    Matrix d_embedding;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds[i].empty()) continue;
      const int row = static_cast<int>(i) - 1;
      std::span<double> dh_row;
      if (dh && row >= 0) dh_row = dh->row(row);
      wf_->backward_scores(cache_, feature(row), ds[i], grad, d_embedding, dh_row);
    }
    wf_->finish_backward(cache_, d_embedding, grad);
  }

 private:
  std::span<const double> feature(int row) const {
    if (row < 0) return zero_row_;
    return h_->row(row);
  }

  const Matrix& negated_raw(int row) {
    Matrix& m = raw_[row + 1];
    if (m.empty()) m = omega_matrix(*wf_, cache_, feature(row));
    return m;
  }

  const WeightFunction* wf_;
  const AlignmentLattice* lattice_;
  const Matrix* h_;
  ContextCache cache_;
  std::vector<double> zero_row_;
  std::vector<Matrix> raw_;  // LOG raw weights -s, indexed by feature row + 1
  LatticeWeights weights_;
};

inline LatticeWeights score_lattice(const WeightFunction& wf, const AlignmentLattice& lattice,
                                    const Matrix& h) {
  return LatticeScorer(wf, lattice, h).weights();
}

}  // namespace gnat
