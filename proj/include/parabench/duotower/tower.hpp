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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "parabench/duotower/linalg.hpp"
#include "parabench/error.hpp"
#include "parabench/rng.hpp"

namespace parabench::duotower {

// How the tower relates to a pretrained base:
//   finetune          - base weights start from the pretrained model and train
//   frozen            - base weights are immutable; only the projection trains
//   frozen_bottleneck - frozen base plus a trainable residual adapter
//                       (down-project / GELU / up-project, width halved by the
//                       reduction factor) after every hidden layer
//   frozen_alignment  - frozen base plus m trainable layers appended after the
//                       base's final hidden state, each a dense layer + GELU of
//                       the same width as that hidden state
enum class Strategy { finetune, frozen, frozen_bottleneck, frozen_alignment };

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::finetune: return "finetune";
    case Strategy::frozen: return "frozen";
    case Strategy::frozen_bottleneck: return "frozen_bottleneck";
    case Strategy::frozen_alignment: return "frozen_alignment";
  }
  return "unknown";
}

inline Strategy strategy_from_string(const std::string& s) {
  if (s == "finetune") return Strategy::finetune;
  if (s == "frozen") return Strategy::frozen;
  if (s == "frozen_bottleneck") return Strategy::frozen_bottleneck;
  if (s == "frozen_alignment") return Strategy::frozen_alignment;
  fail(ErrorCode::invalid_config, "unknown strategy \"" + s + "\"");
}

enum class Projection { linear, mlp2 };

inline const char* to_string(Projection p) {
  return p == Projection::linear ? "linear" : "mlp2";
}

inline Projection projection_from_string(const std::string& s) {
  if (s == "linear") return Projection::linear;
  if (s == "mlp2") return Projection::mlp2;
  fail(ErrorCode::invalid_config, "unknown projection \"" + s + "\"");
}

struct TowerSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims;
  std::size_t embed_dim = 0;
  Strategy strategy = Strategy::finetune;
  std::size_t alignment_layers = 6;   // m; used by frozen_alignment only
  std::size_t adapter_reduction = 2;  // used by frozen_bottleneck only
  Projection projection = Projection::mlp2;

  std::size_t last_hidden() const { return hidden_dims.back(); }

  void validate() const {
    if (input_dim == 0 || embed_dim == 0) {
      fail(ErrorCode::invalid_config, "tower dims must be >= 1");
    }
    if (hidden_dims.empty()) {
      fail(ErrorCode::invalid_config, "tower needs at least one hidden layer");
    }
    for (std::size_t h : hidden_dims) {
      if (h == 0) fail(ErrorCode::invalid_config, "hidden width must be >= 1");
    }
    if (strategy == Strategy::frozen_bottleneck) {
      if (adapter_reduction < 1) {
        fail(ErrorCode::invalid_config, "adapter reduction must be >= 1");
      }
      for (std::size_t h : hidden_dims) {
        if (h % adapter_reduction != 0 || h / adapter_reduction == 0) {
          fail(ErrorCode::invalid_config,
               "adapter reduction " + std::to_string(adapter_reduction) +
                   " does not divide hidden width " + std::to_string(h));
        }
      }
    }
  }
};

struct Dense {
  Mat W;  // out x in
  Vec b;  // out
};

struct Adapter {
  Dense down;
  Dense up;
};

struct TowerWeights {
  std::vector<Dense> base;
  std::vector<Adapter> adapters;
  std::vector<Dense> alignment;
  std::vector<Dense> projection;
};

inline Dense zero_dense(std::size_t in, std::size_t out) {
  Dense d;
  d.W = Mat(out, in);
  d.b = Vec(out, 0.0);
  return d;
}

// Scaled-uniform fan-in init, bound sqrt(6/fan_in); biases zero. The weight
// matrix is filled row-major, one rng draw per entry, so init order is fixed.
inline Dense init_dense(std::size_t in, std::size_t out, Rng& rng) {
  Dense d = zero_dense(in, out);
  const double bound = std::sqrt(6.0 / static_cast<double>(in));
  for (auto& w : d.W.v) w = rng.next_uniform(-bound, bound);
  return d;
}

// Builds the tower's weights. Consumption order from `rng` is fixed: base
// trunk (skipped when a pretrained trunk is supplied), adapter down
// projections, alignment layers, projection head. Adapter up projections are
// zero-initialized so a fresh adapter is the identity residual.
inline TowerWeights init_tower(const TowerSpec& spec, Rng& rng,
                               const std::vector<Dense>* pretrained_trunk = nullptr) {
  spec.validate();
  TowerWeights w;

  if (pretrained_trunk != nullptr) {
    if (pretrained_trunk->size() != spec.hidden_dims.size()) {
      fail(ErrorCode::shape_mismatch, "pretrained trunk depth does not match spec");
    }
    std::size_t in = spec.input_dim;
    for (std::size_t l = 0; l < pretrained_trunk->size(); ++l) {
      const Dense& d = (*pretrained_trunk)[l];
      if (d.W.cols != in || d.W.rows != spec.hidden_dims[l]) {
        fail(ErrorCode::shape_mismatch, "pretrained trunk layer " + std::to_string(l) +
                                            " does not match spec widths");
      }
      in = spec.hidden_dims[l];
    }
    w.base = *pretrained_trunk;
  } else {
    std::size_t in = spec.input_dim;
    for (std::size_t h : spec.hidden_dims) {
      w.base.push_back(init_dense(in, h, rng));
      in = h;
    }
  }

  if (spec.strategy == Strategy::frozen_bottleneck) {
    for (std::size_t h : spec.hidden_dims) {
      const std::size_t mid = h / spec.adapter_reduction;
      Adapter a;
      a.down = init_dense(h, mid, rng);
      a.up = zero_dense(mid, h);
      w.adapters.push_back(std::move(a));
    }
  }

  if (spec.strategy == Strategy::frozen_alignment) {
    for (std::size_t i = 0; i < spec.alignment_layers; ++i) {
      w.alignment.push_back(init_dense(spec.last_hidden(), spec.last_hidden(), rng));
    }
  }

  if (spec.projection == Projection::linear) {
    w.projection.push_back(init_dense(spec.last_hidden(), spec.embed_dim, rng));
  } else {
    w.projection.push_back(init_dense(spec.last_hidden(), spec.last_hidden(), rng));
    w.projection.push_back(init_dense(spec.last_hidden(), spec.embed_dim, rng));
  }
  return w;
}

// Intermediates needed by the backward pass.
struct TowerTrace {
  Mat input;
  std::vector<Mat> base_in;        // input to each base layer
  std::vector<Mat> base_pre;       // pre-activation of each base layer
  std::vector<Mat> adapter_act;    // base activation fed to the adapter
  std::vector<Mat> adapter_pre;    // adapter down-projection pre-activation
  std::vector<Mat> adapter_mid;    // adapter mid activation
  std::vector<Mat> align_in;
  std::vector<Mat> align_pre;
  Mat proj_in;
  Mat proj_pre;   // mlp2 only
  Mat proj_mid;   // mlp2 only
};

namespace detail {

inline Mat dense_forward(const Dense& d, const Mat& x) {
  Mat y = matmul_nt(x, d.W);
  add_row_inplace(y, d.b);
  return y;
}

}  // namespace detail

// Deterministic forward pass; `trace` captures intermediates for backward.
inline Mat tower_forward(const TowerSpec& spec, const TowerWeights& w, const Mat& x,
                         TowerTrace* trace = nullptr) {
  if (x.cols != spec.input_dim) {
    fail(ErrorCode::shape_mismatch, "input dim " + std::to_string(x.cols) +
                                        " != spec input dim " +
                                        std::to_string(spec.input_dim));
  }
  if (trace) *trace = TowerTrace{};
  Mat h = x;
  for (std::size_t l = 0; l < w.base.size(); ++l) {
    if (trace) trace->base_in.push_back(h);
    Mat pre = detail::dense_forward(w.base[l], h);
    Mat act = gelu_forward(pre);
    if (trace) trace->base_pre.push_back(std::move(pre));
    if (spec.strategy == Strategy::frozen_bottleneck) {
      Mat down_pre = detail::dense_forward(w.adapters[l].down, act);
      Mat mid = gelu_forward(down_pre);
      Mat up = detail::dense_forward(w.adapters[l].up, mid);
      if (trace) {
        trace->adapter_act.push_back(act);
        trace->adapter_pre.push_back(std::move(down_pre));
        trace->adapter_mid.push_back(std::move(mid));
      }
      for (std::size_t i = 0; i < act.v.size(); ++i) act.v[i] += up.v[i];
    }
    h = std::move(act);
  }
  if (spec.strategy == Strategy::frozen_alignment) {
    for (const Dense& layer : w.alignment) {
      if (trace) trace->align_in.push_back(h);
      Mat pre = detail::dense_forward(layer, h);
      Mat act = gelu_forward(pre);
      if (trace) trace->align_pre.push_back(std::move(pre));
      h = std::move(act);
    }
  }
  if (trace) trace->proj_in = h;
  if (spec.projection == Projection::linear) {
    return detail::dense_forward(w.projection[0], h);
  }
  Mat pre = detail::dense_forward(w.projection[0], h);
  Mat mid = gelu_forward(pre);
  if (trace) {
    trace->proj_pre = std::move(pre);
    trace->proj_mid = mid;
  }
  return detail::dense_forward(w.projection[1], mid);
}

struct TowerGrads {
  std::vector<Dense> base;
  std::vector<Adapter> adapters;
  std::vector<Dense> alignment;
  std::vector<Dense> projection;
};

inline Dense zeros_like(const Dense& d) { return zero_dense(d.W.cols, d.W.rows); }

inline TowerGrads zeros_like(const TowerWeights& w) {
  TowerGrads g;
  for (const auto& d : w.base) g.base.push_back(zeros_like(d));
  for (const auto& a : w.adapters) {
    g.adapters.push_back(Adapter{zeros_like(a.down), zeros_like(a.up)});
  }
  for (const auto& d : w.alignment) g.alignment.push_back(zeros_like(d));
  for (const auto& d : w.projection) g.projection.push_back(zeros_like(d));
  return g;
}

namespace detail {

// Accumulates layer grads and returns the gradient w.r.t. the layer input.
inline Mat dense_backward(const Dense& d, const Mat& input, const Mat& dy, Dense* grad) {
  if (grad) {
    Mat dw = matmul_tn(dy, input);
    for (std::size_t i = 0; i < dw.v.size(); ++i) grad->W.v[i] += dw.v[i];
    const Vec db = col_sum(dy);
    for (std::size_t i = 0; i < db.size(); ++i) grad->b[i] += db[i];
  }
  return matmul_nn(dy, d.W);
}

}  // namespace detail

// Backpropagates d(loss)/d(output) through the tower. Gradients are filled
// only for the strategy's trainable groups; frozen groups stay zero and are
// never handed to the optimizer.
inline void tower_backward(const TowerSpec& spec, const TowerWeights& w,
                           const TowerTrace& trace, const Mat& d_out, TowerGrads& grads) {
  Mat dh = d_out;

  if (spec.projection == Projection::linear) {
    dh = detail::dense_backward(w.projection[0], trace.proj_in, dh, &grads.projection[0]);
  } else {
    Mat d_mid = detail::dense_backward(w.projection[1], trace.proj_mid, dh,
                                       &grads.projection[1]);
    Mat d_pre = gelu_backward(trace.proj_pre, d_mid);
    dh = detail::dense_backward(w.projection[0], trace.proj_in, d_pre,
                                &grads.projection[0]);
  }

  if (spec.strategy == Strategy::frozen_alignment) {
    for (std::size_t i = w.alignment.size(); i-- > 0;) {
      Mat d_pre = gelu_backward(trace.align_pre[i], dh);
      dh = detail::dense_backward(w.alignment[i], trace.align_in[i], d_pre,
                                  &grads.alignment[i]);
    }
  }

  const bool base_trainable = spec.strategy == Strategy::finetune;
  for (std::size_t l = w.base.size(); l-- > 0;) {
    Mat d_act = std::move(dh);
    if (spec.strategy == Strategy::frozen_bottleneck) {
      // act feeds both the residual branch and the identity path.
      Mat d_mid = detail::dense_backward(w.adapters[l].up, trace.adapter_mid[l], d_act,
                                         &grads.adapters[l].up);
      Mat d_down_pre = gelu_backward(trace.adapter_pre[l], d_mid);
      Mat d_act_branch = detail::dense_backward(w.adapters[l].down, trace.adapter_act[l],
                                                d_down_pre, &grads.adapters[l].down);
      for (std::size_t i = 0; i < d_act.v.size(); ++i) d_act.v[i] += d_act_branch.v[i];
    }
    Mat d_pre = gelu_backward(trace.base_pre[l], d_act);
    dh = detail::dense_backward(w.base[l], trace.base_in[l], d_pre,
                                base_trainable ? &grads.base[l] : nullptr);
  }
}

// Visits each trainable tensor of the strategy in a fixed order, paired as
// (values, decay). `decay` marks weight matrices; biases take no weight decay.
template <typename Weights, typename Fn>
void for_each_trainable(const TowerSpec& spec, Weights& w, Fn&& fn) {
  if (spec.strategy == Strategy::finetune) {
    for (auto& d : w.base) {
      fn(d.W.v, true);
      fn(d.b, false);
    }
  }
  if (spec.strategy == Strategy::frozen_bottleneck) {
    for (auto& a : w.adapters) {
      fn(a.down.W.v, true);
      fn(a.down.b, false);
      fn(a.up.W.v, true);
      fn(a.up.b, false);
    }
  }
  if (spec.strategy == Strategy::frozen_alignment) {
    for (auto& d : w.alignment) {
      fn(d.W.v, true);
      fn(d.b, false);
    }
  }
  for (auto& d : w.projection) {
    fn(d.W.v, true);
    fn(d.b, false);
  }
}

inline std::size_t dense_param_count(std::size_t in, std::size_t out) {
  return in * out + out;
}

// Closed-form trainable parameter count for a spec.
inline std::size_t trainable_param_count(const TowerSpec& spec) {
  spec.validate();
  std::size_t count = 0;
  if (spec.strategy == Strategy::finetune) {
    std::size_t in = spec.input_dim;
    for (std::size_t h : spec.hidden_dims) {
      count += dense_param_count(in, h);
      in = h;
    }
  }
  if (spec.strategy == Strategy::frozen_bottleneck) {
    for (std::size_t h : spec.hidden_dims) {
      const std::size_t mid = h / spec.adapter_reduction;
      count += dense_param_count(h, mid) + dense_param_count(mid, h);
    }
  }
  if (spec.strategy == Strategy::frozen_alignment) {
    count += spec.alignment_layers *
             dense_param_count(spec.last_hidden(), spec.last_hidden());
  }
  if (spec.projection == Projection::linear) {
    count += dense_param_count(spec.last_hidden(), spec.embed_dim);
  } else {
    count += dense_param_count(spec.last_hidden(), spec.last_hidden()) +
             dense_param_count(spec.last_hidden(), spec.embed_dim);
  }
  return count;
}

}  // namespace parabench::duotower
