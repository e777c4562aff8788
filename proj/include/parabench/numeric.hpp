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

#include "parabench/error.hpp"

namespace parabench {

// Pairwise (cascade) summation over a fixed index order. The split points
// depend only on the vector length, so the result is reproducible no matter
// how the values were produced (threads included).
inline double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 32) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
  }
  const std::size_t mid = values.size() / 2;
  return pairwise_sum(values.first(mid)) + pairwise_sum(values.subspan(mid));
}

inline double mean(std::span<const double> values) {
  if (values.empty()) fail(ErrorCode::invalid_config, "mean of empty sequence");
  return pairwise_sum(values) / static_cast<double>(values.size());
}

// Dot product of 32-bit rows accumulated in 64-bit, ascending index order.
inline double dot64(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

inline double l2_norm64(std::span<const float> row) {
  return std::sqrt(dot64(row, row));
}

// Cosine similarity in 64-bit. Rows with near-zero norm are treated as
// orthogonal to everything (similarity 0) so degenerate inputs cannot
// poison a ranking with NaNs.
inline double cosine64(std::span<const float> a, std::span<const float> b) {
  const double na = l2_norm64(a);
  const double nb = l2_norm64(b);
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  return dot64(a, b) / (na * nb);
}

}  // namespace parabench
