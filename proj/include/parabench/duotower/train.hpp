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
#include <numeric>
#include <ostream>
#include <vector>

#include "parabench/duotower/infonce.hpp"
#include "parabench/duotower/linalg.hpp"
#include "parabench/duotower/optim.hpp"
#include "parabench/duotower/pretrain.hpp"
#include "parabench/duotower/tower.hpp"
#include "parabench/embedding.hpp"
#include "parabench/error.hpp"
#include "parabench/report.hpp"
#include "parabench/rng.hpp"
#include "parabench/threads.hpp"

namespace parabench::duotower {

struct LossLogRow {
  std::size_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
};

inline void write_loss_log_csv(std::ostream& os, const std::vector<LossLogRow>& log) {
  os << "step,lr,loss\n";
  for (const auto& row : log) {
    os << row.step << ',' << format_double(row.lr) << ',' << format_double(row.loss)
       << '\n';
  }
}

struct DualEncoder {
  TowerSpec vision_spec;
  TowerSpec text_spec;
  TowerWeights vision;
  TowerWeights text;
  double logit_s = 0.0;
};

struct TrainResult {
  DualEncoder model;
  std::vector<LossLogRow> log;
};

namespace train_stream {
inline constexpr std::uint64_t kVisionInit = 200;
inline constexpr std::uint64_t kTextInit = 201;
inline constexpr std::uint64_t kShuffle = 202;
}  // namespace train_stream

namespace detail {

struct ParamGroup {
  std::vector<std::vector<double>*> tensors;
  std::vector<bool> decay;
  std::vector<AdamWState> states;

  template <typename Weights>
  void bind(const TowerSpec& spec, Weights& w) {
    for_each_trainable(spec, w, [&](std::vector<double>& t, bool d) {
      tensors.push_back(&t);
      decay.push_back(d);
    });
  }

  void init_states() {
    for (const auto* t : tensors) states.emplace_back(t->size());
  }
};

}  // namespace detail

// Contrastive training of the dual encoder. The vision tower trains from
// scratch (or from an optional latent-recovery init); the text tower starts
// from the pretrained trunk and trains whatever its strategy allows. Single
// threaded by contract: batch order, init order and arithmetic order are all
// fixed by the seed, so one (seed, config) pins the loss log and the weights.
inline TrainResult train(const TowerSpec& vision_spec, const TowerSpec& text_spec,
                         const std::vector<Dense>& pretrained_text_trunk,
                         const Mat& images, const Mat& texts, const TrainConfig& cfg,
                         const std::vector<Dense>* pretrained_vision_trunk = nullptr) {
  vision_spec.validate();
  text_spec.validate();
  if (images.rows != texts.rows) {
    fail(ErrorCode::shape_mismatch, "contrastive pairs must align row by row");
  }
  if (images.rows == 0) fail(ErrorCode::invalid_config, "no contrastive pairs");
  if (vision_spec.embed_dim != text_spec.embed_dim) {
    fail(ErrorCode::invalid_config, "towers must share the embedding dimension");
  }

  const std::size_t n = images.rows;
  const std::size_t batch = cfg.batch_size;
  const std::size_t steps_per_epoch = n / batch;  // last partial batch dropped
  const std::size_t total_steps = cfg.epochs * steps_per_epoch;
  cfg.validate(total_steps);
  if (cfg.epochs > 0 && steps_per_epoch == 0) {
    fail(ErrorCode::invalid_config, "batch size exceeds the number of pairs");
  }

  TrainResult result;
  result.model.vision_spec = vision_spec;
  result.model.text_spec = text_spec;

  Rng vision_rng(cfg.seed, train_stream::kVisionInit);
  result.model.vision = init_tower(vision_spec, vision_rng, pretrained_vision_trunk);
  Rng text_rng(cfg.seed, train_stream::kTextInit);
  result.model.text = init_tower(text_spec, text_rng, &pretrained_text_trunk);
  result.model.logit_s = cfg.logit_scale_init;

  if (cfg.epochs == 0 || total_steps == 0) return result;

  detail::ParamGroup vision_group, text_group;
  vision_group.bind(vision_spec, result.model.vision);
  text_group.bind(text_spec, result.model.text);
  vision_group.init_states();
  text_group.init_states();
  AdamWState logit_state(1);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(cfg.seed, train_stream::kShuffle);

  std::size_t step = 0;
  result.log.reserve(total_steps);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    detail::fisher_yates(order, shuffle_rng);
    for (std::size_t b = 0; b < steps_per_epoch; ++b) {
      const Mat xb = detail::gather_rows(images, order, b * batch, batch);
      const Mat tb = detail::gather_rows(texts, order, b * batch, batch);

      TowerTrace vision_trace, text_trace;
      const Mat zi = tower_forward(vision_spec, result.model.vision, xb, &vision_trace);
      const Mat zt = tower_forward(text_spec, result.model.text, tb, &text_trace);

      const InfoNceResult nce =
          infonce_loss(zi, zt, result.model.logit_s, cfg.logit_scale_max);
      if (!std::isfinite(nce.loss)) {
        fail(ErrorCode::diverged_training,
             "loss is not finite at step " + std::to_string(step + 1));
      }

      TowerGrads vision_grads = zeros_like(result.model.vision);
      TowerGrads text_grads = zeros_like(result.model.text);
      tower_backward(vision_spec, result.model.vision, vision_trace, nce.d_zi,
                     vision_grads);
      tower_backward(text_spec, result.model.text, text_trace, nce.d_zt, text_grads);

      ++step;
      const double lr = lr_at(step, total_steps, cfg);

      auto apply = [&](detail::ParamGroup& group, const TowerSpec& spec,
                       TowerGrads& grads) {
        std::vector<std::vector<double>*> grad_tensors;
        for_each_trainable(spec, grads, [&](std::vector<double>& g, bool) {
          grad_tensors.push_back(&g);
        });
        for (std::size_t i = 0; i < group.tensors.size(); ++i) {
          adamw_step(*group.tensors[i], *grad_tensors[i], group.states[i], step, lr,
                     cfg.adamw, group.decay[i] ? cfg.adamw.weight_decay : 0.0);
        }
      };
      apply(vision_group, vision_spec, vision_grads);
      apply(text_group, text_spec, text_grads);

      double s_param = result.model.logit_s;
      const double s_grad = nce.d_logit_s;
      adamw_step(std::span<double>(&s_param, 1), std::span<const double>(&s_grad, 1),
                 logit_state, step, lr, cfg.adamw, 0.0);
      result.model.logit_s = s_param;

      result.log.push_back({step, lr, nce.loss});
    }
  }
  return result;
}

// Embeds rows through a trained tower, casting down to the 32-bit embedding
// currency. Pure per-row map, parallelized across contiguous row blocks.
inline EmbeddingMatrix embed_rows(const TowerSpec& spec, const TowerWeights& w,
                                  const Mat& inputs, unsigned threads = 0) {
  std::vector<float> out(inputs.rows * spec.embed_dim);
  const std::size_t block = 128;
  const std::size_t blocks = (inputs.rows + block - 1) / block;
  parallel_for(blocks, threads, [&](std::size_t bi) {
    const std::size_t begin = bi * block;
    const std::size_t count = std::min(block, inputs.rows - begin);
    Mat chunk(count, inputs.cols);
    for (std::size_t r = 0; r < count; ++r) {
      const auto row = inputs.row(begin + r);
      std::copy(row.begin(), row.end(), chunk.row(r).begin());
    }
    const Mat z = tower_forward(spec, w, chunk);
    for (std::size_t r = 0; r < count; ++r) {
      for (std::size_t c = 0; c < spec.embed_dim; ++c) {
        out[(begin + r) * spec.embed_dim + c] = static_cast<float>(z.at(r, c));
      }
    }
  });
  return EmbeddingMatrix(inputs.rows, spec.embed_dim, std::move(out));
}

}  // namespace parabench::duotower
