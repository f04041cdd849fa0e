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

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "gnat/bench.hpp"
#include "gnat/checks.hpp"
#include "gnat/model_io.hpp"

namespace gnat {
namespace {

const std::string kConfigs = std::string(GNAT_SOURCE_DIR) + "/configs";

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

TEST(Config, RoundTrip) {
  RunConfig c;
  c.seed = 77;
  c.context = {2, 5};
  c.lattice.variant = AlignmentKind::kLabelFrame;
  c.lattice.k = 3;
  c.weights.variant = WeightKind::kSharedRnn;
  c.weights.normalization = Normalization::kLocalHat;
  c.encoder.variant = EncoderKind::kBidirRnn;
  c.task.variant = TaskKind::kLateEvidence;
  c.train.learning_rate = 0.0125;
  const RunConfig back = parse_config_text(serialize_config(c));
  EXPECT_EQ(serialize_config(back), serialize_config(c));
  EXPECT_EQ(back.weights.variant, WeightKind::kSharedRnn);
  EXPECT_EQ(back.train.learning_rate, 0.0125);
}

TEST(Config, MissingKeysKeepTheBase) {
  RunConfig base;
  base.train.steps = 123;
  const RunConfig c = parse_config_text(R"({"context": {"vocab": 6}})", base);
  EXPECT_EQ(c.train.steps, 123);
  EXPECT_EQ(c.context.vocab, 6);
  EXPECT_EQ(c.context.order, base.context.order);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_EQ(error_of([] { parse_config_text(R"({"train": {"stepz": 3}})"); }),
            "train: unknown key 'stepz'");
  EXPECT_NE(error_of([] { parse_config_text(R"({"weights": {"normalization": "softmax"}})"); })
                .find("normalization"),
            std::string::npos);
  EXPECT_THROW(parse_config_text(R"({"train": {"steps": "many"}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"train": {"batch_size": 0}})"), ConfigError);
  EXPECT_THROW(parse_config_text("{not json"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"lattice": {"epsilon": false, "dedup": true}})"), ConfigError);
  EXPECT_EQ(error_of([] { load_config("/nonexistent/x.json"); }),
            "cannot open config file '/nonexistent/x.json'");
}

TEST(Config, ShippedConfigsParse) {
  int n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(kConfigs)) {
    const std::string path = entry.path().string();
    if (entry.path().filename() == "bench.json") {
      EXPECT_NO_THROW(parse_bench_options(nlohmann::ordered_json::parse(std::ifstream(path))));
    } else {
      EXPECT_NO_THROW(apply_preset(load_config(path))) << path;
    }
    ++n;
  }
  EXPECT_GE(n, 4);
}

TEST(Config, GapConfigMatchesTheBuiltInBase) {
  RunConfig c = load_config(kConfigs + "/gap.json");
  EXPECT_EQ(serialize_config(c), serialize_config(gap_base_config()));
}

TEST(Config, BenchOptions) {
  const BenchOptions o = parse_bench_options(nlohmann::ordered_json::parse(R"({"orders": [0, 2], "frames": 8})"));
  EXPECT_EQ(o.orders, (std::vector<int>{0, 2}));
  EXPECT_EQ(o.frames, 8);
  EXPECT_EQ(o.vocab, 16);
  EXPECT_THROW(parse_bench_options(nlohmann::ordered_json::parse(R"({"frame": 8})")), ConfigError);
  EXPECT_THROW(parse_bench_options(nlohmann::ordered_json::parse(R"({"orders": []})")), ConfigError);
}

TEST(Config, LatticeFromConfig) {
  LatticeConfig l;
  EXPECT_EQ(make_lattice(l, 5).kind(), AlignmentKind::kFrame);
  l.variant = AlignmentKind::kLabel;
  EXPECT_EQ(make_lattice(l, 5).max_labels(), 5);
  l.label_bound = 2;
  EXPECT_EQ(make_lattice(l, 5).max_labels(), 2);
  l.variant = AlignmentKind::kLabelFrame;
  l.k = 2;
  EXPECT_EQ(make_lattice(l, 5, 9).k(), 2);
}

TEST(TextMatrix, ParsesRowsAndRejectsRaggedInput) {
  const Matrix m = parse_text_matrix("1 2 3\n4 5 6\n\n", 3);
  ASSERT_EQ(m.rows(), 2u);
  EXPECT_EQ(m(1, 2), 6.0);
  EXPECT_EQ(parse_text_matrix("", 3).rows(), 0u);
  EXPECT_EQ(error_of([] { parse_text_matrix("1 2 3\n1 2\n", 3); }), "line 2: expected 3 values, got 2");
  EXPECT_THROW(parse_text_matrix("1 x 3\n", 3), std::invalid_argument);
}

RunConfig model_config() {
  RunConfig c;
  c.context = {1, 4};
  c.weights.variant = WeightKind::kSharedRnn;
  c.weights.D = 5;
  c.weights.H = 3;
  c.encoder.variant = EncoderKind::kBidirRnn;
  c.encoder.D_in = 4;
  return c;
}

TEST(ModelFile, RoundTripIsBitIdentical) {
  const Model m = Model::initialized(model_config(), 9);
  const std::string bytes = serialize_model(m);
  const Model back = deserialize_model(bytes);
  EXPECT_EQ(serialize_model(back), bytes);
  const auto a = m.parameters(), b = back.parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].value->size(); ++j)
      EXPECT_EQ(std::bit_cast<std::uint64_t>(a[i].value->data()[j]),
                std::bit_cast<std::uint64_t>(b[i].value->data()[j]));
  Matrix x(3, 4, 0.5);
  EXPECT_EQ(m.decode(x).score, back.decode(x).score);

  const std::string path = ::testing::TempDir() + "/roundtrip.gnat";
  save_model(m, path);
  EXPECT_EQ(serialize_model(load_model(path)), bytes);
}

TEST(ModelFile, RejectsCorruptFiles) {
  const std::string bytes = serialize_model(Model::initialized(model_config(), 9));
  EXPECT_EQ(error_of([] { deserialize_model("hello world, not a model"); }), "not a model file (bad magic)");
  EXPECT_THROW(deserialize_model(bytes.substr(0, bytes.size() - 8)), ModelFormatError);
  EXPECT_THROW(deserialize_model(bytes + "x"), ModelFormatError);
  // Same header length, different vocabulary: the stored tensors no longer fit.
  std::string other = bytes;
  const auto at = other.find("\"vocab\":4");
  ASSERT_NE(at, std::string::npos);
  other[at + 8] = '5';
  EXPECT_NE(error_of([&] { deserialize_model(other); }).find("expected shape"), std::string::npos);
  EXPECT_THROW(load_model("/nonexistent/model.gnat"), ModelFormatError);
}

}  // namespace
}  // namespace gnat
