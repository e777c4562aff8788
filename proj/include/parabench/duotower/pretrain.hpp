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
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "parabench/duotower/linalg.hpp"
#include "parabench/duotower/optim.hpp"
#include "parabench/duotower/tower.hpp"
#include "parabench/error.hpp"
#include "parabench/rng.hpp"

namespace parabench::duotower {

struct PretrainConfig {
  std::size_t epochs = 80;
  std::size_t batch_size = 128;
  double lr = 0.001;  // constant; the regression is plumbing, not the method
  AdamWConfig adamw;
  double holdout_fraction = 0.1;
  std::uint64_t seed = 1;

  void validate() const {
    adamw.validate();
    if (lr <= 0.0) fail(ErrorCode::invalid_config, "pretrain lr must be > 0");
    if (batch_size < 1) fail(ErrorCode::invalid_config, "pretrain batch must be >= 1");
    if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
      fail(ErrorCode::invalid_config, "holdout fraction must lie in [0, 1)");
    }
  }
};

// The frozen language-model stand-in: an MLP trunk whose features recover
// the latent through a linear head. Only the trunk is reused downstream,
// flagged immutable; the head stays around for diagnostics.
struct PretrainedBase {
  std::vector<Dense> trunk;
  Dense head;
  double held_out_mse = 0.0;
};

namespace pretrain_stream {
inline constexpr std::uint64_t kInit = 100;
inline constexpr std::uint64_t kShuffle = 101;
}  // namespace pretrain_stream

namespace detail {

inline double mse_and_grad(const Mat& pred, const Mat& target, Mat& d_pred) {
  const double scale = 1.0 / static_cast<double>(pred.v.size());
  d_pred = Mat(pred.rows, pred.cols);
  double loss = 0.0;
  for (std::size_t i = 0; i < pred.v.size(); ++i) {
    const double diff = pred.v[i] - target.v[i];
    loss += diff * diff * scale;
    d_pred.v[i] = 2.0 * diff * scale;
  }
  return loss;
}

inline Mat gather_rows(const Mat& src, const std::vector<std::size_t>& rows,
                       std::size_t begin, std::size_t count) {
  Mat out(count, src.cols);
  for (std::size_t i = 0; i < count; ++i) {
    const auto row = src.row(rows[begin + i]);
    std::copy(row.begin(), row.end(), out.row(i).begin());
  }
  return out;
}

inline void fisher_yates(std::vector<std::size_t>& order, Rng& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_index(i));
    std::swap(order[i - 1], order[j]);
  }
}

}  // namespace detail

// Regresses text features onto their latents by minimizing mean squared
// error, across all templates, so the trunk cannot tell templates of one
// latent apart through the head. The tail holdout_fraction of rows is held
// out and scored after training.
inline PretrainedBase pretrain_text_base(const Mat& texts, const Mat& latents,
                                         const std::vector<std::size_t>& hidden_dims,
                                         const PretrainConfig& cfg) {
  cfg.validate();
  if (texts.rows != latents.rows || texts.rows == 0) {
    fail(ErrorCode::shape_mismatch, "texts and latents must pair row by row");
  }

  TowerSpec spec;
  spec.input_dim = texts.cols;
  spec.hidden_dims = hidden_dims;
  spec.embed_dim = latents.cols;
  spec.strategy = Strategy::finetune;
  spec.projection = Projection::linear;

  Rng init_rng(cfg.seed, pretrain_stream::kInit);
  TowerWeights w = init_tower(spec, init_rng);

  const std::size_t holdout =
      static_cast<std::size_t>(std::floor(cfg.holdout_fraction * texts.rows));
  const std::size_t n_fit = texts.rows - holdout;
  if (n_fit == 0) fail(ErrorCode::invalid_config, "holdout leaves no training rows");

  // Optimizer state per trainable tensor, in for_each_trainable order.
  std::vector<AdamWState> states;
  for_each_trainable(spec, w, [&](std::vector<double>& t, bool) {
    states.emplace_back(t.size());
  });

  const std::size_t batch = std::min(cfg.batch_size, n_fit);
  std::vector<std::size_t> order(n_fit);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(cfg.seed, pretrain_stream::kShuffle);

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    detail::fisher_yates(order, shuffle_rng);
    for (std::size_t begin = 0; begin + batch <= n_fit; begin += batch) {
      const Mat x = detail::gather_rows(texts, order, begin, batch);
      const Mat y = detail::gather_rows(latents, order, begin, batch);

      TowerTrace trace;
      const Mat pred = tower_forward(spec, w, x, &trace);
      Mat d_pred;
      const double loss = detail::mse_and_grad(pred, y, d_pred);
      if (!std::isfinite(loss)) {
        fail(ErrorCode::diverged_training, "pretraining loss is not finite");
      }

      TowerGrads grads = zeros_like(w);
      tower_backward(spec, w, trace, d_pred, grads);

      ++step;
      std::size_t slot = 0;
      std::vector<std::vector<double>*> grad_tensors;
      for_each_trainable(spec, grads, [&](std::vector<double>& g, bool) {
        grad_tensors.push_back(&g);
      });
      for_each_trainable(spec, w, [&](std::vector<double>& t, bool decay) {
        adamw_step(t, *grad_tensors[slot], states[slot], step, cfg.lr, cfg.adamw,
                   decay ? cfg.adamw.weight_decay : 0.0);
        ++slot;
      });
    }
  }

  PretrainedBase base;
  base.trunk = w.base;
  base.head = w.projection[0];

  if (holdout > 0) {
    std::vector<std::size_t> tail(holdout);
    std::iota(tail.begin(), tail.end(), n_fit);
    const Mat x = detail::gather_rows(texts, tail, 0, holdout);
    const Mat y = detail::gather_rows(latents, tail, 0, holdout);
    const Mat pred = tower_forward(spec, w, x);
    Mat unused;
    base.held_out_mse = detail::mse_and_grad(pred, y, unused);
  }
  return base;
}

}  // namespace parabench::duotower
