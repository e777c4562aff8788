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
#include <numbers>
#include <span>
#include <vector>

#include "parabench/embedding.hpp"
#include "parabench/error.hpp"

namespace parabench::duotower {

// Row-major 64-bit matrix. All trainer arithmetic runs in doubles so the
// finite-difference gradient checks hold at tight tolerances.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {v.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {v.data() + r * cols, cols}; }
  std::size_t size() const { return v.size(); }
};

using Vec = std::vector<double>;

inline Mat to_mat64(const EmbeddingMatrix& m) {
  Mat out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.values().size(); ++i) {
    out.v[i] = static_cast<double>(m.values()[i]);
  }
  return out;
}

inline EmbeddingMatrix to_embedding(const Mat& m) {
  std::vector<float> out(m.v.size());
  for (std::size_t i = 0; i < m.v.size(); ++i) out[i] = static_cast<float>(m.v[i]);
  return EmbeddingMatrix(m.rows, m.cols, std::move(out));
}

// Y = A * B^T. A: n x k, B: m x k. Both operands are walked row-wise.
inline Mat matmul_nt(const Mat& a, const Mat& b) {
  if (a.cols != b.cols) fail(ErrorCode::shape_mismatch, "matmul_nt inner dims differ");
  Mat y(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* ai = a.v.data() + i * a.cols;
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* bj = b.v.data() + j * b.cols;
      double acc = 0.0;
      for (std::size_t t = 0; t < a.cols; ++t) acc += ai[t] * bj[t];
      y.v[i * b.rows + j] = acc;
    }
  }
  return y;
}

// Y = A * B. A: n x k, B: k x m.
inline Mat matmul_nn(const Mat& a, const Mat& b) {
  if (a.cols != b.rows) fail(ErrorCode::shape_mismatch, "matmul_nn inner dims differ");
  Mat y(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double* yi = y.v.data() + i * b.cols;
    const double* ai = a.v.data() + i * a.cols;
    for (std::size_t t = 0; t < a.cols; ++t) {
      const double ait = ai[t];
      const double* bt = b.v.data() + t * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) yi[j] += ait * bt[j];
    }
  }
  return y;
}

// Y = A^T * B. A: n x k, B: n x m.
inline Mat matmul_tn(const Mat& a, const Mat& b) {
  if (a.rows != b.rows) fail(ErrorCode::shape_mismatch, "matmul_tn outer dims differ");
  Mat y(a.cols, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* ai = a.v.data() + i * a.cols;
    const double* bi = b.v.data() + i * b.cols;
    for (std::size_t t = 0; t < a.cols; ++t) {
      const double ait = ai[t];
      double* yt = y.v.data() + t * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) yt[j] += ait * bi[j];
    }
  }
  return y;
}

inline void add_row_inplace(Mat& m, std::span<const double> bias) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    double* row = m.v.data() + r * m.cols;
    for (std::size_t c = 0; c < m.cols; ++c) row[c] += bias[c];
  }
}

inline Vec col_sum(const Mat& m) {
  Vec out(m.cols, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* row = m.v.data() + r * m.cols;
    for (std::size_t c = 0; c < m.cols; ++c) out[c] += row[c];
  }
  return out;
}

// Exact GELU: x * Phi(x) with the Gaussian CDF via erf.
inline double gelu(double x) {
  return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
}

inline double gelu_grad(double x) {
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

inline Mat gelu_forward(const Mat& z) {
  Mat out(z.rows, z.cols);
  for (std::size_t i = 0; i < z.v.size(); ++i) out.v[i] = gelu(z.v[i]);
  return out;
}

// dZ = dA .* gelu'(Z), where A = gelu(Z).
inline Mat gelu_backward(const Mat& z, const Mat& da) {
  Mat out(z.rows, z.cols);
  for (std::size_t i = 0; i < z.v.size(); ++i) out.v[i] = da.v[i] * gelu_grad(z.v[i]);
  return out;
}

}  // namespace parabench::duotower
