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

// gnat demo | check | train | decode | gap | bench
//
// Exit codes: 0 success, 1 check failure, 2 usage error, 3 data error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gnat/gnat.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;
constexpr int kDataError = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::string preset;
  std::vector<std::string> overrides;  // section.key=value
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw DataError("cannot write '" + path + "'");
}

// "train.steps=200" -> {"train": {"steps": 200}}. Values parse as JSON when
// they can, otherwise they are taken as strings.
nlohmann::ordered_json override_patch(const std::vector<std::string>& sets) {
  nlohmann::ordered_json patch = nlohmann::ordered_json::object();
  for (const std::string& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + s + "'");
    const std::string key = s.substr(0, eq), text = s.substr(eq + 1);
    nlohmann::ordered_json value;
    try {
      value = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
      value = text;
    }
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
      patch[key] = value;
    } else {
      patch[key.substr(0, dot)][key.substr(dot + 1)] = value;
    }
  }
  return patch;
}

gnat::RunConfig resolve_config(const Common& c, gnat::RunConfig base = {}) {
  gnat::RunConfig cfg = c.config_path.empty() ? base : gnat::load_config(c.config_path, base);
  if (!c.overrides.empty()) cfg = gnat::parse_config(override_patch(c.overrides), cfg);
  if (c.seed_given) cfg.seed = c.seed;
  if (!c.preset.empty()) cfg.preset = c.preset;
  return gnat::apply_preset(cfg);
}

void add_common(CLI::App* app, Common& c, bool with_config = true) {
  if (with_config) {
    app->add_option("--config", c.config_path, "JSON run configuration");
    app->add_option("--preset", c.preset, "ce, ctc, rnnt, hat, las_bounded or gnat");
    app->add_option("--set", c.overrides, "override a config key, e.g. --set train.steps=200");
  }
  app->add_option_function<std::uint64_t>(
      "--seed", [&c](std::uint64_t s) { c.seed = s, c.seed_given = true; }, "random seed");
}

std::string labels_text(const std::vector<gnat::Label>& ys) {
  std::string s;
  for (gnat::Label y : ys) s += (s.empty() ? "" : " ") + gnat::ContextDependency::label_name(y);
  return s;
}

nlohmann::ordered_json report_json(const gnat::EvalReport& r) {
  nlohmann::ordered_json j;
  j["ler"] = r.ler;
  j["errors"] = r.errors;
  j["reference_labels"] = r.reference_labels;
  j["examples"] = r.examples;
  j["final_loss"] = r.final_loss;
  auto curve = nlohmann::ordered_json::array();
  for (const auto& p : r.loss_curve) curve.push_back({{"step", p.step}, {"loss", p.loss}});
  j["loss_curve"] = curve;
  return j;
}

int cmd_demo(const Common& c, bool corrupt) {
  const gnat::ToySetup s = gnat::toy_setup(c.seed_given ? c.seed : 1);
  const gnat::ToyReport r = gnat::run_toy(s, corrupt);
  gnat::print_toy(std::cout, s, r);
  return r.ok ? kOk : kCheckFailed;
}

int cmd_check(const Common& c, const std::string& scope, bool inject) {
  const auto& scopes = gnat::check_scopes();
  if (std::find(scopes.begin(), scopes.end(), scope) == scopes.end())
    throw UsageError("unknown scope '" + scope + "'");
  gnat::CheckOptions o;
  if (c.seed_given) o.seed = c.seed;
  o.inject_failure = inject;
  bool ok = true;
  for (const auto& r : gnat::run_checks(scope, o)) {
    std::printf("%s  %-46s %8.2fs  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.seconds,
                r.detail.c_str());
    ok = ok && r.passed;
  }
  return ok ? kOk : kCheckFailed;
}

int cmd_train(const Common& c) {
  const gnat::RunConfig cfg = resolve_config(c);
  const gnat::TrainResult r = gnat::train(cfg);
  const std::string out = c.out.empty() ? "model.gnat" : c.out;
  gnat::save_model(r.model, out);
  for (const auto& p : r.report.loss_curve) std::printf("step %6d  loss %.6f\n", p.step, p.loss);
  std::printf("ler %.4f (%d errors / %d labels, %d examples)\n", r.report.ler, r.report.errors,
              r.report.reference_labels, r.report.examples);
  nlohmann::ordered_json j;
  j["config"] = gnat::to_json(cfg);
  j["report"] = report_json(r.report);
  write_file(out + ".report.json", j.dump(2) + "\n");
  std::printf("wrote %s and %s.report.json\n", out.c_str(), out.c_str());
  return kOk;
}

int cmd_decode(const std::string& model_path, const std::string& features_path) {
  const gnat::Model m = gnat::load_model(model_path);
  gnat::Matrix x;
  try {
    x = gnat::parse_text_matrix(read_file(features_path), m.config().encoder.D_in);
  } catch (const std::invalid_argument& e) {
    throw DataError(features_path + ": " + e.what());
  }
  if (x.rows() == 0) x = gnat::Matrix(0, m.config().encoder.D_in);
  const gnat::Decoded d = m.decode(x);
  std::printf("labels: %s\n", labels_text(d.labels).c_str());
  std::printf("score: %.9f\n", d.score);
  return kOk;
}

int cmd_gap(const Common& c, int seeds) {
  const gnat::RunConfig base = resolve_config(c, gnat::gap_base_config());
  gnat::CheckOptions o;
  o.seed = base.seed;
  o.gap_seeds = seeds;
  const gnat::GapCheck g = gnat::check_gap(o, base);
  const std::string table = gnat::format_gap(g.table);
  std::cout << table << (g.result.passed ? "direction holds: " : "direction fails: ") << g.result.detail
            << "\n";
  if (!c.out.empty()) {
    write_file(c.out, table);
    auto rows = nlohmann::ordered_json::array();
    for (const auto& cell : g.table.cells)
      rows.push_back({{"encoder", std::string(gnat::to_string(cell.encoder))},
                      {"normalization", std::string(gnat::to_string(cell.normalization))},
                      {"order", cell.order},
                      {"median_ler", cell.median},
                      {"spread", cell.spread},
                      {"lers", cell.lers}});
    write_file(c.out + ".json", rows.dump(2) + "\n");
  }
  return kOk;
}

int cmd_bench(const Common& c) {
  gnat::BenchOptions o;
  if (!c.config_path.empty()) {
    try {
      o = gnat::parse_bench_options(nlohmann::ordered_json::parse(read_file(c.config_path)));
    } catch (const nlohmann::json::parse_error& e) {
      throw gnat::ConfigError(std::string("bench config is not valid JSON: ") + e.what());
    }
  }
  if (c.seed_given) o.seed = c.seed;
  const auto rows = gnat::run_bench(o);
  const std::string table = gnat::format_bench(rows);
  std::cout << table;
  const gnat::BenchVerdict v = gnat::judge_bench(rows);
  std::cout << "order 2 slower than order 0: " << (v.order_monotone ? "yes" : "no") << "\n"
            << "label_frame at least as slow as frame: " << (v.lattice_monotone ? "yes" : "no") << "\n"
            << "global at least as slow as local (order 2): " << (v.global_monotone ? "yes" : "no") << "\n";
  for (const auto& s : v.violations) std::cout << "  " << s << "\n";
  if (!c.out.empty()) write_file(c.out, table);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Globally normalized lattice models: demo, checks, training, decoding, benchmarks"};
  app.require_subcommand(1);
  Common common;

  auto* demo = app.add_subcommand("demo", "walk through the bigram toy model and self-check it");
  add_common(demo, common, false);
  bool corrupt = false;
  demo->add_flag("--corrupt-arc", corrupt, "perturb one arc weight (negative control)")->group("");

  auto* check = app.add_subcommand("check", "run property suites");
  add_common(check, common, false);
  std::string scope = "all";
  check->add_option("--scope", scope, "all, toy, z1, oracle, grad, presets, dedup, gap or bench");
  bool inject = false;
  check->add_flag("--inject-failure", inject, "perturb the fast side (negative control)")->group("");

  auto* train = app.add_subcommand("train", "train on a synthetic task");
  add_common(train, common);
  train->add_option("--out", common.out, "model file (default model.gnat)");

  auto* decode = app.add_subcommand("decode", "max-path decode of a feature matrix");
  std::string model_path, features_path;
  decode->add_option("--model", model_path, "model file")->required();
  decode->add_option("--features", features_path, "text matrix, one frame per line")->required();

  auto* gap = app.add_subcommand("gap", "local vs global normalization, streaming vs not");
  add_common(gap, common);
  int seeds = 5;
  gap->add_option("--seeds", seeds, "seeds per cell (>= 3)")->check(CLI::Range(3, 1000));
  gap->add_option("--out", common.out, "write the table here (and a JSON copy to <out>.json)");

  auto* bench = app.add_subcommand("bench", "lattice time and memory over the model grid");
  bench->add_option("--config", common.config_path, "JSON bench options");
  add_common(bench, common, false);
  bench->add_option("--out", common.out, "write the table here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*demo) return cmd_demo(common, corrupt);
    if (*check) return cmd_check(common, scope, inject);
    if (*train) return cmd_train(common);
    if (*decode) return cmd_decode(model_path, features_path);
    if (*gap) return cmd_gap(common, seeds);
    if (*bench) return cmd_bench(common);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const gnat::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kDataError;
  } catch (const gnat::ModelFormatError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return kDataError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const gnat::TrainingDiverged& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsage;
}
