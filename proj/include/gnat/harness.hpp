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

// Synthetic tasks, training and evaluation.
//
// easy           each label puts a one-hot on its own channel at the frame it
//                occurs; other frames are noise.
// late_evidence  the target is "0 1" or "2 3". Both share identical onset
//                markers early in the utterance (channel 0 for the first label,
//                channel 1 for the second); only the last ceil(T/4) frames
//                carry the answer, +1 or -1 on the last channel.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnat/config.hpp"
#include "gnat/model.hpp"

namespace gnat {

struct Example {
  Matrix x;
  std::vector<Label> y;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SyntheticTask {
  TaskConfig config;
  int vocab = 4;
  int input_dim = 8;

  static SyntheticTask from(const RunConfig& c) { return {c.task, c.context.vocab, c.encoder.D_in}; }

  void check() const {
    if (config.variant == TaskKind::kEasy && input_dim < vocab)
      throw ConfigError("easy task needs encoder.D_in >= vocab");
    if (config.variant == TaskKind::kLateEvidence) {
      if (vocab < 4) throw ConfigError("late_evidence task needs vocab >= 4");
      if (input_dim < 3) throw ConfigError("late_evidence task needs encoder.D_in >= 3");
      if (config.min_frames < 8) throw ConfigError("late_evidence task needs min_frames >= 8");
    }
  }
};

// First frame carrying the late_evidence answer.
inline int late_evidence_start(int frames) { return frames - (frames + 3) / 4; }

inline Example generate_example(const SyntheticTask& task, std::mt19937_64& rng) {
  task.check();
  const TaskConfig& tc = task.config;
  std::uniform_int_distribution<int> frames_dist(tc.min_frames, tc.max_frames);
  const int T = frames_dist(rng);
  Example e;
  e.x = Matrix(T, task.input_dim);
  if (tc.variant == TaskKind::kEasy) {
    const int max_u = std::max(0, std::min(4, T / 2));
    const int U = max_u == 0 ? 0 : std::uniform_int_distribution<int>(1, max_u)(rng);
    std::vector<int> frames(T);
    for (int t = 0; t < T; ++t) frames[t] = t;
    std::shuffle(frames.begin(), frames.end(), rng);
    frames.resize(U);
    std::sort(frames.begin(), frames.end());
    std::uniform_int_distribution<int> label_dist(0, task.vocab - 1);
    for (int u = 0; u < U; ++u) {
      const Label y = label_dist(rng);
      e.y.push_back(y);
      e.x(frames[u], y) = 1.0;
    }
  } else {
    const bool first = std::bernoulli_distribution(0.5)(rng);
    e.y = first ? std::vector<Label>{0, 1} : std::vector<Label>{2, 3};
    const int shift = std::uniform_int_distribution<int>(0, T / 4)(rng);
    e.x(shift, 0) = 1.0;
    e.x(shift + 2, 1) = 1.0;
    for (int t = late_evidence_start(T); t < T; ++t) e.x(t, task.input_dim - 1) = first ? 1.0 : -1.0;
  }
  if (tc.sigma > 0) {
    std::normal_distribution<double> noise(0.0, tc.sigma);
    for (double& v : e.x.flat()) v += noise(rng);
  }
  return e;
}

inline std::vector<Example> generate_batch(const SyntheticTask& task, int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Example> out;
  out.reserve(size);
  for (int i = 0; i < size; ++i) out.push_back(generate_example(task, rng));
  return out;
}

inline int edit_distance(std::span<const Label> hyp, std::span<const Label> ref) {
  std::vector<int> prev(ref.size() + 1), cur(ref.size() + 1);
  for (std::size_t j = 0; j <= ref.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= hyp.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= ref.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[ref.size()];
}

// Adam with a constant step size.
class Adam {
 public:
  Adam(const TrainConfig& c, const Model& shape) : c_(c) {
    for (const auto& p : shape.parameters()) {
      m_.emplace_back(p.value->rows(), p.value->cols());
      v_.emplace_back(p.value->rows(), p.value->cols());
    }
  }

  void step(Model& model, const Model& grad) {
    ++t_;
    auto ps = model.parameters();
    const auto gs = grad.parameters();
    const double bc1 = 1.0 - std::pow(c_.beta1, t_);
    const double bc2 = 1.0 - std::pow(c_.beta2, t_);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      double* w = ps[i].value->data();
      const double* g = gs[i].value->data();
      double* m = m_[i].data();
      double* v = v_[i].data();
      for (std::size_t j = 0; j < ps[i].value->size(); ++j) {
        m[j] = c_.beta1 * m[j] + (1 - c_.beta1) * g[j];
        v[j] = c_.beta2 * v[j] + (1 - c_.beta2) * g[j] * g[j];
        w[j] -= c_.learning_rate * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + c_.epsilon);
      }
    }
  }

 private:
  TrainConfig c_;
  std::vector<Matrix> m_, v_;
  int t_ = 0;
};

struct LossPoint {
  int step;
  double loss;
  bool operator==(const LossPoint&) const = default;
};

struct EvalReport {
  double ler = 0.0;
  int errors = 0;
  int reference_labels = 0;
  int examples = 0;
  double final_loss = 0.0;
  std::vector<LossPoint> loss_curve;
  bool operator==(const EvalReport&) const = default;
};

// Mean loss over a batch; gradients of the mean go to *grad when given.
inline double batch_loss(const Model& model, const std::vector<Example>& batch, Model* grad) {
  double total = 0.0;
  Model local = grad ? model.zeros_like() : Model(model.config());
  for (const Example& e : batch) {
    const LossResult r = model.loss(e.x, e.y, grad ? &local : nullptr);
    if (!std::isfinite(r.loss))
      throw TrainingDiverged("non-finite loss (" + std::to_string(r.loss) + ") on an example with " +
                             std::to_string(e.x.rows()) + " frames and " +
                             std::to_string(e.y.size()) + " labels");
    total += r.loss;
  }
  const double scale = batch.empty() ? 0.0 : 1.0 / static_cast<double>(batch.size());
  if (grad) {
    auto dst = grad->parameters();
    const auto src = local.parameters();
    for (std::size_t i = 0; i < dst.size(); ++i)
      for (std::size_t j = 0; j < dst[i].value->size(); ++j)
        dst[i].value->data()[j] = scale * src[i].value->data()[j];
  }
  return total * scale;
}

inline EvalReport evaluate(const Model& model, const std::vector<Example>& data) {
  EvalReport r;
  for (const Example& e : data) {
    const Decoded d = model.decode(e.x);
    r.errors += edit_distance(d.labels, e.y);
    r.reference_labels += static_cast<int>(e.y.size());
    ++r.examples;
  }
  r.ler = r.reference_labels > 0 ? static_cast<double>(r.errors) / r.reference_labels : 0.0;
  return r;
}

inline constexpr std::uint64_t kEvalSeedSalt = 0x5eed'e7a1'0000'0001ULL;
inline constexpr std::uint64_t kBatchSeedSalt = 0x0ba7'c400'0000'0000ULL;

inline std::uint64_t batch_seed(std::uint64_t seed, int step) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(kBatchSeedSalt >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

// Held-out data depends on the task only, so every model trained on a task
// is scored on the same utterances.
inline std::vector<Example> evaluation_set(const SyntheticTask& task) {
  return generate_batch(task, task.config.eval_size, kEvalSeedSalt);
}

struct TrainResult {
  Model model;
  EvalReport report;
};

inline TrainResult train(const RunConfig& config, const std::vector<Example>* eval = nullptr) {
  const SyntheticTask task = SyntheticTask::from(config);
  task.check();
  Model model = Model::initialized(config, config.seed);
  Adam opt(config.train, model);
  Model grad = model.zeros_like();
  std::vector<LossPoint> curve;
  for (int step = 0; step < config.train.steps; ++step) {
    const auto batch = generate_batch(task, config.train.batch_size, batch_seed(config.seed, step));
    double loss = 0.0;
    try {
      loss = batch_loss(model, batch, &grad);
    } catch (const TrainingDiverged& e) {
      throw TrainingDiverged("step " + std::to_string(step) + ": " + e.what());
    }
    if (step % config.train.log_every == 0 || step + 1 == config.train.steps)
      curve.push_back({step, loss});
    opt.step(model, grad);
  }
  std::vector<Example> local;
  if (!eval) {
    local = evaluation_set(task);
    eval = &local;
  }
  EvalReport report = evaluate(model, *eval);
  report.loss_curve = std::move(curve);
  report.final_loss = report.loss_curve.empty() ? 0.0 : report.loss_curve.back().loss;
  return {std::move(model), std::move(report)};
}

struct GapCell {
  EncoderKind encoder;
  Normalization normalization;
  int order;
  std::vector<double> lers;  // one per seed
  double median = 0.0;
  double spread = 0.0;       // max - min over seeds
};

struct GapTable {
  std::vector<GapCell> cells;  // causal/local, causal/global, bidir/local, bidir/global
  const GapCell& cell(EncoderKind e, Normalization n) const {
    for (const auto& c : cells)
      if (c.encoder == e && c.normalization == n) return c;
    throw std::out_of_range("no such gap cell");
  }
};

inline double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// Trains the {causal, bidir} x {local_softmax, global} grid with otherwise
// identical configs, one run per seed.
inline GapTable run_gap_experiment(const RunConfig& base, std::span<const std::uint64_t> seeds) {
  if (seeds.size() < 3) throw std::invalid_argument("gap experiment needs at least 3 seeds");
  GapTable table;
  const auto eval = evaluation_set(SyntheticTask::from(base));
  for (EncoderKind enc : {EncoderKind::kCausalRnn, EncoderKind::kBidirRnn})
    for (Normalization norm : {Normalization::kLocalSoftmax, Normalization::kGlobal}) {
      GapCell cell{enc, norm, base.context.order, {}, 0.0, 0.0};
      for (std::uint64_t seed : seeds) {
        RunConfig c = base;
        c.encoder.variant = enc;
        c.weights.normalization = norm;
        c.seed = seed;
        cell.lers.push_back(train(c, &eval).report.ler);
      }
      cell.median = median(cell.lers);
      cell.spread = *std::max_element(cell.lers.begin(), cell.lers.end()) -
                    *std::min_element(cell.lers.begin(), cell.lers.end());
      table.cells.push_back(std::move(cell));
    }
  return table;
}

}  // namespace gnat
