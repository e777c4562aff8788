/**
 * Copyright (c) 2026 The parabench authors.
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing,
 *  software distributed under the License is distributed on an "AS
 *  IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either
 *  express or implied.  See the License for the specific language
 *  governing permissions and limitations under the License.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "parabench/error.hpp"
#include "parabench/numeric.hpp"

namespace parabench {

// Dense n x d matrix of 32-bit reals, row-major. The universal currency for
// galleries, queries, class prototypes and synthetic features. Immutable
// after construction and safe to share across threads.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;

  EmbeddingMatrix(std::size_t rows, std::size_t cols, std::vector<float> values,
                  bool normalized = false)
      : rows_(rows), cols_(cols), values_(std::move(values)), normalized_(normalized) {
    if (cols_ == 0 && rows_ > 0) {
      fail(ErrorCode::invalid_config, "embedding dimensionality must be >= 1");
    }
    if (values_.size() != rows_ * cols_) {
      fail(ErrorCode::shape_mismatch,
           "value count " + std::to_string(values_.size()) + " != rows*cols " +
               std::to_string(rows_ * cols_));
    }
    if (normalized_) check_unit_rows();
  }

  static EmbeddingMatrix zeros(std::size_t rows, std::size_t cols) {
    return EmbeddingMatrix(rows, cols, std::vector<float>(rows * cols, 0.0f));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }
  bool normalized() const { return normalized_; }

  std::span<const float> row(std::size_t r) const {
    return std::span<const float>(values_.data() + r * cols_, cols_);
  }

  float at(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  const std::vector<float>& values() const { return values_; }

 private:
  void check_unit_rows() const {
    for (std::size_t r = 0; r < rows_; ++r) {
      const double norm = l2_norm64(row(r));
      if (std::abs(norm - 1.0) > 1e-5) {
        fail(ErrorCode::out_of_range,
             "row " + std::to_string(r) + " norm " + std::to_string(norm) +
                 " violates the normalized flag");
      }
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> values_;
  bool normalized_ = false;
};

// Returns a copy with every row scaled to unit L2 norm. Norms accumulate in
// 64-bit; direction is preserved. Rows with norm below 1e-12 are rejected.
inline EmbeddingMatrix l2_normalize(const EmbeddingMatrix& m) {
  std::vector<float> out(m.values().size());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    const double norm = l2_norm64(row);
    if (norm < 1e-12) {
      fail(ErrorCode::zero_vector, "row " + std::to_string(r) + " has near-zero norm");
    }
    for (std::size_t c = 0; c < m.cols(); ++c) {
      out[r * m.cols() + c] = static_cast<float>(static_cast<double>(row[c]) / norm);
    }
  }
  return EmbeddingMatrix(m.rows(), m.cols(), std::move(out), /*normalized=*/true);
}

}  // namespace parabench
