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
#include <numbers>
#include <span>
#include <vector>

#include "parabench/error.hpp"

namespace parabench::duotower {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-6;
  double weight_decay = 0.1;

  void validate() const {
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
      fail(ErrorCode::invalid_config, "AdamW betas must lie in (0, 1)");
    }
    if (eps <= 0.0) fail(ErrorCode::invalid_config, "AdamW eps must be > 0");
    if (weight_decay < 0.0) fail(ErrorCode::invalid_config, "weight decay must be >= 0");
  }
};

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t epochs = 32;
  std::size_t warmup_steps = 200;
  double base_lr = 0.001;
  AdamWConfig adamw;
  double logit_scale_init = std::log(1.0 / 0.07);
  double logit_scale_max = 100.0;
  std::uint64_t seed = 1;

  void validate(std::size_t total_steps) const {
    adamw.validate();
    if (base_lr <= 0.0) fail(ErrorCode::invalid_config, "learning rate must be > 0");
    if (batch_size < 2) fail(ErrorCode::invalid_config, "batch size must be >= 2");
    if (total_steps > 0 && warmup_steps >= total_steps) {
      fail(ErrorCode::invalid_config,
           "warmup_steps " + std::to_string(warmup_steps) +
               " must be < total steps " + std::to_string(total_steps));
    }
  }
};

// Linear warmup from 0 to base_lr over warmup_steps, then cosine annealing
// to exactly 0 at total_steps. lr_at(0) = 0 and lr_at(warmup) = base_lr.
inline double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& cfg) {
  if (step == 0) return 0.0;
  if (step <= cfg.warmup_steps) {
    return cfg.base_lr * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  }
  const double progress = static_cast<double>(step - cfg.warmup_steps) /
                          static_cast<double>(total_steps - cfg.warmup_steps);
  return cfg.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

struct AdamWState {
  std::vector<double> m;
  std::vector<double> v;

  explicit AdamWState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// One decoupled-weight-decay update (1-based step for bias correction):
//   theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta)
// `weight_decay` is per-tensor: weight matrices take cfg.weight_decay,
// biases and the logit scale take 0.
inline void adamw_step(std::span<double> params, std::span<const double> grads,
                       AdamWState& state, std::size_t step, double lr,
                       const AdamWConfig& cfg, double weight_decay) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    fail(ErrorCode::shape_mismatch, "optimizer tensor sizes disagree");
  }
  if (step < 1) fail(ErrorCode::invalid_config, "optimizer step must be >= 1");
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= lr * (m_hat / (std::sqrt(v_hat) + cfg.eps) + weight_decay * params[i]);
  }
}

}  // namespace parabench::duotower
