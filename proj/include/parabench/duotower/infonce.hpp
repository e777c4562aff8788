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
#include <vector>

#include "parabench/duotower/linalg.hpp"
#include "parabench/error.hpp"

namespace parabench::duotower {

struct InfoNceResult {
  double loss = 0.0;
  Mat d_zi;          // gradient w.r.t. the raw (pre-normalization) image batch
  Mat d_zt;          // gradient w.r.t. the raw text batch
  double d_logit_s = 0.0;  // gradient w.r.t. the log temperature parameter
  double scale = 0.0;      // exp(s) after clamping
};

namespace detail {

struct NormalizedRows {
  Mat unit;
  std::vector<double> norms;
};

inline NormalizedRows normalize_rows(const Mat& z) {
  NormalizedRows out;
  out.unit = Mat(z.rows, z.cols);
  out.norms.resize(z.rows);
  for (std::size_t r = 0; r < z.rows; ++r) {
    double sq = 0.0;
    for (std::size_t c = 0; c < z.cols; ++c) sq += z.at(r, c) * z.at(r, c);
    const double norm = std::sqrt(sq);
    if (norm < 1e-12) {
      fail(ErrorCode::zero_vector, "embedding row " + std::to_string(r) +
                                       " has near-zero norm");
    }
    out.norms[r] = norm;
    for (std::size_t c = 0; c < z.cols; ++c) out.unit.at(r, c) = z.at(r, c) / norm;
  }
  return out;
}

// Backprop through row normalization: dz = (dz_hat - (dz_hat . z_hat) z_hat) / |z|.
inline Mat normalize_backward(const NormalizedRows& n, const Mat& d_unit) {
  Mat out(d_unit.rows, d_unit.cols);
  for (std::size_t r = 0; r < d_unit.rows; ++r) {
    double inner = 0.0;
    for (std::size_t c = 0; c < d_unit.cols; ++c) {
      inner += d_unit.at(r, c) * n.unit.at(r, c);
    }
    for (std::size_t c = 0; c < d_unit.cols; ++c) {
      out.at(r, c) = (d_unit.at(r, c) - inner * n.unit.at(r, c)) / n.norms[r];
    }
  }
  return out;
}

}  // namespace detail

// Symmetric contrastive cross-entropy over a batch of aligned pairs.
// Rows are L2-normalized internally; logits are exp(s) * Zi_hat * Zt_hat^T
// with exp(s) clamped at scale_max (the gradient of s is zero while clamped).
// The loss averages the row-wise and column-wise cross-entropies against the
// diagonal targets:
//   loss = 1/(2n) * sum_i [CE(row i) + CE(col i)].
inline InfoNceResult infonce_loss(const Mat& zi, const Mat& zt, double logit_s,
                                  double scale_max = 100.0) {
  if (zi.rows != zt.rows || zi.cols != zt.cols) {
    fail(ErrorCode::shape_mismatch, "image and text batches must match in shape");
  }
  const std::size_t n = zi.rows;
  if (n < 2) fail(ErrorCode::batch_too_small, "InfoNCE needs a batch of >= 2 pairs");

  const auto ni = detail::normalize_rows(zi);
  const auto nt = detail::normalize_rows(zt);

  const double raw_scale = std::exp(logit_s);
  const bool clamped = raw_scale > scale_max;
  const double scale = clamped ? scale_max : raw_scale;

  const Mat sims = matmul_nt(ni.unit, nt.unit);
  Mat logits(n, n);
  for (std::size_t i = 0; i < logits.v.size(); ++i) logits.v[i] = scale * sims.v[i];

  // Row-wise softmax probabilities.
  Mat p_row(n, n);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double mx = logits.at(i, 0);
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, logits.at(i, j));
    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      p_row.at(i, j) = std::exp(logits.at(i, j) - mx);
      denom += p_row.at(i, j);
    }
    for (std::size_t j = 0; j < n; ++j) p_row.at(i, j) /= denom;
    loss += std::log(denom) + mx - logits.at(i, i);
  }

  // Column-wise softmax probabilities.
  Mat p_col(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double mx = logits.at(0, j);
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, logits.at(i, j));
    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      p_col.at(i, j) = std::exp(logits.at(i, j) - mx);
      denom += p_col.at(i, j);
    }
    for (std::size_t i = 0; i < n; ++i) p_col.at(i, j) /= denom;
    loss += std::log(denom) + mx - logits.at(j, j);
  }
  loss /= 2.0 * static_cast<double>(n);

  // d(loss)/d(logits) = (P_row + P_col - 2I) / (2n).
  Mat d_logits(n, n);
  const double inv = 1.0 / (2.0 * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double target = (i == j) ? 2.0 : 0.0;
      d_logits.at(i, j) = (p_row.at(i, j) + p_col.at(i, j) - target) * inv;
    }
  }

  double d_scale = 0.0;
  for (std::size_t i = 0; i < d_logits.v.size(); ++i) d_scale += d_logits.v[i] * sims.v[i];

  // d(loss)/d(Zi_hat) = scale * G * Zt_hat; d(loss)/d(Zt_hat) = scale * G^T * Zi_hat.
  Mat d_unit_i = matmul_nn(d_logits, nt.unit);
  Mat d_unit_t = matmul_tn(d_logits, ni.unit);
  for (auto& v : d_unit_i.v) v *= scale;
  for (auto& v : d_unit_t.v) v *= scale;

  InfoNceResult out;
  out.loss = loss;
  out.d_zi = detail::normalize_backward(ni, d_unit_i);
  out.d_zt = detail::normalize_backward(nt, d_unit_t);
  out.d_logit_s = clamped ? 0.0 : d_scale * raw_scale;
  out.scale = scale;
  return out;
}

}  // namespace parabench::duotower
