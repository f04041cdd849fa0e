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

// Encoder + weight function + lattice configuration, end to end.

#include <random>
#include <span>
#include <vector>

#include "gnat/config.hpp"
#include "gnat/inference.hpp"
#include "gnat/weights.hpp"

namespace gnat {

class Model {
 public:
  explicit Model(const RunConfig& config)
      : config_(config),
        context_(config.context.order, config.context.vocab),
        encoder_(config.encoder.variant, config.encoder.D_in, config.weights.D),
        weights_(config.weights.variant, context_, config.weights.D, config.weights.normalization,
                 config.weights.H) {}

  static Model initialized(const RunConfig& config, std::uint64_t seed) {
    Model m(config);
    std::mt19937_64 rng(seed);
    m.encoder_.init_uniform(rng);
    m.weights_.init_uniform(rng);
    return m;
  }

  const RunConfig& config() const { return config_; }
  const ContextDependency& context() const { return context_; }
  Encoder& encoder() { return encoder_; }
  const Encoder& encoder() const { return encoder_; }
  WeightFunction& weights() { return weights_; }
  const WeightFunction& weights() const { return weights_; }
  bool dedup() const { return config_.lattice.dedup; }

  std::vector<Param> parameters() {
    auto ps = encoder_.parameters();
    for (auto& p : weights_.parameters()) ps.push_back(p);
    return ps;
  }
  std::vector<ConstParam> parameters() const {
    auto ps = encoder_.parameters();
    for (auto& p : weights_.parameters()) ps.push_back(p);
    return ps;
  }
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p.value->size();
    return n;
  }

  Model zeros_like() const {
    Model g(*this);
    g.encoder_.set_zero();
    g.weights_.set_zero();
    return g;
  }

  AlignmentLattice lattice(int frames, int target_length = -1) const {
    return make_lattice(config_.lattice, frames, target_length);
  }

  // Loss of one example; parameter gradients are added to *grad when given.
  LossResult loss(const Matrix& x, std::span<const Label> y, Model* grad = nullptr) const {
    Encoder::Cache cache;
    const Matrix h = encoder_.encode(x, &cache);
    const AlignmentLattice lat = lattice(static_cast<int>(x.rows()), static_cast<int>(y.size()));
    const LatticeScorer scorer(weights_, lat, h);
    if (!grad) return gnat::loss(lat, context_, y, scorer.weights(), dedup());
    LossGradient lg = loss_gradient(lat, context_, y, scorer.weights(), dedup());
    Matrix dh;
    scorer.backward(lg.d_omega, grad->weights_, &dh);
    encoder_.backward(x, cache, dh, grad->encoder_);
    return lg.loss;
  }

  Decoded decode(const Matrix& x) const {
    const Matrix h = encoder_.encode(x);
    const AlignmentLattice lat = lattice(static_cast<int>(x.rows()));
    return decode_max_path(lat, context_, score_lattice(weights_, lat, h), dedup());
  }

 private:
  RunConfig config_;
  ContextDependency context_;
  Encoder encoder_;
  WeightFunction weights_;
};

}  // namespace gnat
