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

// Run configuration, stored as JSON. Every section and key is optional and
// falls back to the defaults below; unknown keys are errors.
//
//   {
//     "preset": "gnat",
//     "seed": 1,
//     "context":  {"order": 1, "vocab": 4},
//     "lattice":  {"variant": "frame", "epsilon": true, "k": 1, "k_cap": 4,
//                  "label_bound": 0, "dedup": false},
//     "weights":  {"variant": "unshared", "normalization": "global", "D": 16, "H": 16},
//     "encoder":  {"variant": "causal_rnn", "D_in": 8},
//     "task":     {"variant": "easy", "min_frames": 8, "max_frames": 16,
//                  "sigma": 0.3, "eval_size": 200},
//     "train":    {"steps": 500, "batch_size": 32, "learning_rate": 0.01,
//                  "beta1": 0.9, "beta2": 0.98, "epsilon": 1e-9, "log_every": 50}
//   }
//
// lattice.k = 0 sizes label_frame lattices per example as |y| + 1 (capped by
// k_cap; decoding uses k_cap). lattice.label_bound = 0 bounds label lattices
// by the frame count.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "gnat/alignment.hpp"
#include "gnat/weights.hpp"

namespace gnat {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TaskKind { kEasy, kLateEvidence };

constexpr std::string_view to_string(TaskKind k) {
  return k == TaskKind::kEasy ? "easy" : "late_evidence";
}

struct ContextConfig {
  int order = 1;
  int vocab = 4;
  bool operator==(const ContextConfig&) const = default;
};

struct LatticeConfig {
  AlignmentKind variant = AlignmentKind::kFrame;
  bool epsilon = true;
  int k = 1;
  int k_cap = 4;
  int label_bound = 0;
  bool dedup = false;
  bool operator==(const LatticeConfig&) const = default;
};

struct WeightsConfig {
  WeightKind variant = WeightKind::kUnshared;
  Normalization normalization = Normalization::kGlobal;
  int D = 16;
  int H = 16;
  bool operator==(const WeightsConfig&) const = default;
};

struct EncoderConfig {
  EncoderKind variant = EncoderKind::kCausalRnn;
  int D_in = 8;
  bool operator==(const EncoderConfig&) const = default;
};

struct TaskConfig {
  TaskKind variant = TaskKind::kEasy;
  int min_frames = 8;
  int max_frames = 16;
  double sigma = 0.3;
  int eval_size = 200;
  bool operator==(const TaskConfig&) const = default;
};

struct TrainConfig {
  int steps = 500;
  int batch_size = 32;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
  int log_every = 50;
  bool operator==(const TrainConfig&) const = default;
};

struct RunConfig {
  std::string preset;  // informational once expanded
  std::uint64_t seed = 1;
  ContextConfig context;
  LatticeConfig lattice;
  WeightsConfig weights;
  EncoderConfig encoder;
  TaskConfig task;
  TrainConfig train;
  bool operator==(const RunConfig&) const = default;
};

namespace config_detail {

using nlohmann::ordered_json;

template <class E>
E parse_enum(const ordered_json& j, const char* key,
             std::initializer_list<std::pair<const char*, E>> names) {
  if (!j.is_string()) throw ConfigError(std::string(key) + ": expected a string");
  const std::string s = j.get<std::string>();
  std::string options;
  for (const auto& [name, value] : names) {
    if (s == name) return value;
    options += options.empty() ? name : std::string(", ") + name;
  }
  throw ConfigError(std::string(key) + ": unknown value '" + s + "' (expected one of " + options + ")");
}

inline const auto kAlignmentNames = {std::pair{"frame", AlignmentKind::kFrame},
                                     std::pair{"label_frame", AlignmentKind::kLabelFrame},
                                     std::pair{"label", AlignmentKind::kLabel}};
inline const auto kWeightNames = {std::pair{"unshared", WeightKind::kUnshared},
                                  std::pair{"shared_emb", WeightKind::kSharedEmb},
                                  std::pair{"shared_rnn", WeightKind::kSharedRnn}};
inline const auto kNormNames = {std::pair{"global", Normalization::kGlobal},
                                std::pair{"local_softmax", Normalization::kLocalSoftmax},
                                std::pair{"local_hat", Normalization::kLocalHat}};
inline const auto kEncoderNames = {std::pair{"causal_rnn", EncoderKind::kCausalRnn},
                                   std::pair{"bidir_rnn", EncoderKind::kBidirRnn}};
inline const auto kTaskNames = {std::pair{"easy", TaskKind::kEasy},
                                std::pair{"late_evidence", TaskKind::kLateEvidence}};

// Reads the keys of one section, rejecting anything not consumed.
class Section {
 public:
  Section(const ordered_json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j.is_object()) throw ConfigError(name_ + ": expected an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.contains(it.key())) throw ConfigError(name_ + ": unknown key '" + it.key() + "'");
  }

  const ordered_json* get(const char* key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void read(const char* key, int& out) {
    if (auto* v = get(key)) {
      if (!v->is_number_integer()) throw ConfigError(path(key) + ": expected an integer");
      out = v->get<int>();
    }
  }
  void read(const char* key, std::uint64_t& out) {
    if (auto* v = get(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0))
        throw ConfigError(path(key) + ": expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void read(const char* key, double& out) {
    if (auto* v = get(key)) {
      if (!v->is_number()) throw ConfigError(path(key) + ": expected a number");
      out = v->get<double>();
    }
  }
  void read(const char* key, bool& out) {
    if (auto* v = get(key)) {
      if (!v->is_boolean()) throw ConfigError(path(key) + ": expected true or false");
      out = v->get<bool>();
    }
  }
  void read(const char* key, std::string& out) {
    if (auto* v = get(key)) {
      if (!v->is_string()) throw ConfigError(path(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }
  template <class E, class Names>
  void read_enum(const char* key, E& out, const Names& names) {
    if (auto* v = get(key)) {
      const std::string p = path(key);
      out = parse_enum<E>(*v, p.c_str(), names);
    }
  }
  std::string path(const char* key) const { return name_ + "." + key; }

 private:
  const ordered_json& j_;
  std::string name_;
  std::set<std::string> used_;
};

}  // namespace config_detail

inline void validate(const RunConfig& c) {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  need(c.context.order >= 0, "context.order must be >= 0");
  need(c.context.vocab >= 1, "context.vocab must be >= 1");
  need(c.lattice.k >= 0, "lattice.k must be >= 0");
  need(c.lattice.k_cap >= 1, "lattice.k_cap must be >= 1");
  need(c.lattice.label_bound >= 0, "lattice.label_bound must be >= 0");
  need(c.weights.D >= 1 && c.weights.H >= 1, "weights.D and weights.H must be >= 1");
  need(c.encoder.D_in >= 1, "encoder.D_in must be >= 1");
  need(c.task.min_frames >= 0 && c.task.max_frames >= c.task.min_frames,
       "task frames must satisfy 0 <= min_frames <= max_frames");
  need(c.task.sigma >= 0, "task.sigma must be >= 0");
  need(c.task.eval_size >= 0, "task.eval_size must be >= 0");
  need(c.train.steps >= 0, "train.steps must be >= 0");
  need(c.train.batch_size >= 1, "train.batch_size must be >= 1");
  need(c.train.learning_rate > 0, "train.learning_rate must be > 0");
  need(c.train.log_every >= 1, "train.log_every must be >= 1");
  need(c.train.beta1 >= 0 && c.train.beta1 < 1 && c.train.beta2 >= 0 && c.train.beta2 < 1,
       "train.beta1 and train.beta2 must lie in [0, 1)");
  need(c.train.epsilon > 0, "train.epsilon must be > 0");
  need(c.lattice.variant != AlignmentKind::kFrame || c.lattice.epsilon || !c.lattice.dedup,
       "lattice.dedup needs epsilon arcs");
  try {
    (void)ContextDependency(c.context.order, c.context.vocab);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("context: ") + e.what());
  }
}

inline RunConfig parse_config(const nlohmann::ordered_json& j, RunConfig c = {}) {
  using namespace config_detail;
  {
    Section root(j, "config");
    root.read("preset", c.preset);
    root.read("seed", c.seed);
    if (auto* s = root.get("context")) {
      Section x(*s, "context");
      x.read("order", c.context.order);
      x.read("vocab", c.context.vocab);
    }
    if (auto* s = root.get("lattice")) {
      Section x(*s, "lattice");
      x.read_enum("variant", c.lattice.variant, kAlignmentNames);
      x.read("epsilon", c.lattice.epsilon);
      x.read("k", c.lattice.k);
      x.read("k_cap", c.lattice.k_cap);
      x.read("label_bound", c.lattice.label_bound);
      x.read("dedup", c.lattice.dedup);
    }
    if (auto* s = root.get("weights")) {
      Section x(*s, "weights");
      x.read_enum("variant", c.weights.variant, kWeightNames);
      x.read_enum("normalization", c.weights.normalization, kNormNames);
      x.read("D", c.weights.D);
      x.read("H", c.weights.H);
    }
    if (auto* s = root.get("encoder")) {
      Section x(*s, "encoder");
      x.read_enum("variant", c.encoder.variant, kEncoderNames);
      x.read("D_in", c.encoder.D_in);
    }
    if (auto* s = root.get("task")) {
      Section x(*s, "task");
      x.read_enum("variant", c.task.variant, kTaskNames);
      x.read("min_frames", c.task.min_frames);
      x.read("max_frames", c.task.max_frames);
      x.read("sigma", c.task.sigma);
      x.read("eval_size", c.task.eval_size);
    }
    if (auto* s = root.get("train")) {
      Section x(*s, "train");
      x.read("steps", c.train.steps);
      x.read("batch_size", c.train.batch_size);
      x.read("learning_rate", c.train.learning_rate);
      x.read("beta1", c.train.beta1);
      x.read("beta2", c.train.beta2);
      x.read("epsilon", c.train.epsilon);
      x.read("log_every", c.train.log_every);
    }
  }
  validate(c);
  return c;
}

inline RunConfig parse_config_text(const std::string& text, RunConfig base = {}) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j, std::move(base));
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), std::move(base));
}

inline nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  if (!c.preset.empty()) j["preset"] = c.preset;
  j["seed"] = c.seed;
  j["context"] = {{"order", c.context.order}, {"vocab", c.context.vocab}};
  j["lattice"] = {{"variant", std::string(to_string(c.lattice.variant))},
                  {"epsilon", c.lattice.epsilon},
                  {"k", c.lattice.k},
                  {"k_cap", c.lattice.k_cap},
                  {"label_bound", c.lattice.label_bound},
                  {"dedup", c.lattice.dedup}};
  j["weights"] = {{"variant", std::string(to_string(c.weights.variant))},
                  {"normalization", std::string(to_string(c.weights.normalization))},
                  {"D", c.weights.D},
                  {"H", c.weights.H}};
  j["encoder"] = {{"variant", std::string(to_string(c.encoder.variant))}, {"D_in", c.encoder.D_in}};
  j["task"] = {{"variant", std::string(to_string(c.task.variant))},
               {"min_frames", c.task.min_frames},
               {"max_frames", c.task.max_frames},
               {"sigma", c.task.sigma},
               {"eval_size", c.task.eval_size}};
  j["train"] = {{"steps", c.train.steps},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate},
                {"beta1", c.train.beta1},
                {"beta2", c.train.beta2},
                {"epsilon", c.train.epsilon},
                {"log_every", c.train.log_every}};
  return j;
}

inline std::string serialize_config(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

// Alignment lattice for an utterance of `frames` frames. `target_length` is
// the reference length when known (training) and -1 otherwise (decoding).
inline AlignmentLattice make_lattice(const LatticeConfig& l, int frames, int target_length = -1) {
  switch (l.variant) {
    case AlignmentKind::kFrame:
      return AlignmentLattice::frame(frames, l.epsilon);
    case AlignmentKind::kLabelFrame: {
      int k = l.k;
      if (k == 0) k = target_length < 0 ? l.k_cap : std::min(l.k_cap, target_length + 1);
      return AlignmentLattice::label_frame(frames, std::max(1, k));
    }
    case AlignmentKind::kLabel:
      return AlignmentLattice::label(l.label_bound > 0 ? l.label_bound : frames, frames);
  }
  throw std::logic_error("unknown lattice variant");
}

}  // namespace gnat
