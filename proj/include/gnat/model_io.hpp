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

// Model files:
//
//   8 bytes   magic "GNATMDL1"
//   8 bytes   header length n, unsigned little-endian
//   n bytes   JSON header {"format_version", "config", "parameters": [{name, rows, cols}]}
//   rest      every parameter in header order, row-major float64 little-endian

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "gnat/config.hpp"
#include "gnat/model.hpp"

namespace gnat {

class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kModelMagic[8] = {'G', 'N', 'A', 'T', 'M', 'D', 'L', '1'};
inline constexpr int kModelFormatVersion = 1;

namespace model_io_detail {

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_u64(const std::string& in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

}  // namespace model_io_detail

inline std::string serialize_model(const Model& m) {
  using namespace model_io_detail;
  nlohmann::ordered_json header;
  header["format_version"] = kModelFormatVersion;
  header["config"] = to_json(m.config());
  auto inventory = nlohmann::ordered_json::array();
  for (const auto& p : m.parameters())
    inventory.push_back({{"name", p.name}, {"rows", p.value->rows()}, {"cols", p.value->cols()}});
  header["parameters"] = inventory;
  const std::string text = header.dump();
  std::string out(kModelMagic, sizeof kModelMagic);
  put_u64(out, text.size());
  out += text;
  for (const auto& p : m.parameters())
    for (double x : p.value->flat()) put_u64(out, std::bit_cast<std::uint64_t>(x));
  return out;
}

inline Model deserialize_model(const std::string& bytes) {
  using namespace model_io_detail;
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kModelMagic, 8) != 0)
    throw ModelFormatError("not a model file (bad magic)");
  const std::uint64_t n = get_u64(bytes, 8);
  if (n > bytes.size() - 16) throw ModelFormatError("truncated model header");
  nlohmann::ordered_json header;
  try {
    header = nlohmann::ordered_json::parse(bytes.substr(16, n));
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelFormatError(std::string("corrupt model header: ") + e.what());
  }
  if (!header.contains("format_version") || header["format_version"] != kModelFormatVersion)
    throw ModelFormatError("unsupported model format version");
  RunConfig config;
  try {
    config = parse_config(header.at("config"));
  } catch (const std::exception& e) {
    throw ModelFormatError(std::string("model config: ") + e.what());
  }
  Model m(config);
  auto params = m.parameters();
  const auto& inventory = header.at("parameters");
  if (!inventory.is_array() || inventory.size() != params.size())
    throw ModelFormatError("parameter inventory does not match the configured model");
  std::size_t pos = 16 + n;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& e = inventory[i];
    Matrix& target = *params[i].value;
    if (e.at("name") != params[i].name || e.at("rows") != target.rows() ||
        e.at("cols") != target.cols())
      throw ModelFormatError("parameter " + params[i].name + " expected shape " +
                             shape_string(target) + ", file has " + e.dump());
    if (bytes.size() < pos + 8 * target.size()) throw ModelFormatError("truncated parameter data");
    for (double& x : target.flat()) {
      x = std::bit_cast<double>(get_u64(bytes, pos));
      pos += 8;
    }
  }
  if (pos != bytes.size()) throw ModelFormatError("trailing bytes after parameter data");
  return m;
}

inline void save_model(const Model& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file '" + path + "'");
  const std::string bytes = serialize_model(m);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing model file '" + path + "'");
}

inline Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace gnat
