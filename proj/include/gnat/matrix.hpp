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

#include <algorithm>
#include <cassert>
#include <cctype>
#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gnat {

// Dense row-major matrix of doubles. Used for parameters, activations and
// per-state weight tables alike.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline std::string shape_string(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// out += A * x, A is (rows x cols), x has cols entries.
inline void gemv_accumulate(const Matrix& a, std::span<const double> x,
                            std::span<double> out) {
  assert(x.size() == a.cols() && out.size() == a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double* ar = a.data() + r * a.cols();
    double s = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) s += ar[c] * x[c];
    out[r] += s;
  }
}

// out += A^T * y, A is (rows x cols), y has rows entries.
inline void gemv_transpose_accumulate(const Matrix& a, std::span<const double> y,
                                      std::span<double> out) {
  assert(y.size() == a.rows() && out.size() == a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    const double* ar = a.data() + r * a.cols();
    for (std::size_t c = 0; c < a.cols(); ++c) out[c] += yr * ar[c];
  }
}

// A += y x^T.
inline void outer_accumulate(Matrix& a, std::span<const double> y,
                             std::span<const double> x) {
  assert(y.size() == a.rows() && x.size() == a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    double* ar = a.data() + r * a.cols();
    for (std::size_t c = 0; c < a.cols(); ++c) ar[c] += yr * x[c];
  }
}

// Fills m with uniform(-r, r) draws in row-major order.
inline void fill_uniform(Matrix& m, double r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-r, r);
  for (double& v : m.flat()) v = dist(rng);
}

// Parses whitespace-separated numbers, one matrix row per non-empty line.
// Every row must have `expected_cols` entries (when non-zero).
inline Matrix parse_text_matrix(const std::string& text, std::size_t expected_cols) {
  std::vector<std::vector<double>> rows;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    ++line_no;
    start = end + 1;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::vector<double> values;
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      if (pos >= line.size()) break;
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(line.substr(pos), &used);
      } catch (const std::exception&) {
        throw std::invalid_argument("line " + std::to_string(line_no) +
                                    ": not a number near '" + line.substr(pos, 16) + "'");
      }
      values.push_back(v);
      pos += used;
    }
    if (values.empty()) continue;
    if (expected_cols != 0 && values.size() != expected_cols) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(expected_cols) + " values, got " +
                                  std::to_string(values.size()));
    }
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": ragged row length");
    }
    rows.push_back(std::move(values));
    if (end == text.size()) break;
  }
  const std::size_t cols = rows.empty() ? expected_cols : rows.front().size();
  Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r)
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  return m;
}

}  // namespace gnat
