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

#include <string>
#include <vector>

#include <json.hpp>

#include "parabench/duotower/train.hpp"
#include "parabench/error.hpp"
#include "parabench/version.hpp"

namespace parabench::duotower {

// JSON weight serialization. Doubles survive a JSON round trip exactly
// (shortest-representation printing), so saved models reload bit-for-bit.

namespace detail {

inline nlohmann::ordered_json dense_to_json(const Dense& d) {
  nlohmann::ordered_json j;
  j["rows"] = d.W.rows;
  j["cols"] = d.W.cols;
  j["W"] = d.W.v;
  j["b"] = d.b;
  return j;
}

inline Dense dense_from_json(const nlohmann::json& j) {
  Dense d;
  d.W.rows = j.at("rows").get<std::size_t>();
  d.W.cols = j.at("cols").get<std::size_t>();
  d.W.v = j.at("W").get<std::vector<double>>();
  d.b = j.at("b").get<std::vector<double>>();
  if (d.W.v.size() != d.W.rows * d.W.cols || d.b.size() != d.W.rows) {
    fail(ErrorCode::shape_mismatch, "dense layer payload does not match its shape");
  }
  return d;
}

inline nlohmann::ordered_json dense_list_to_json(const std::vector<Dense>& ds) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& d : ds) arr.push_back(dense_to_json(d));
  return arr;
}

inline std::vector<Dense> dense_list_from_json(const nlohmann::json& arr) {
  std::vector<Dense> out;
  for (const auto& j : arr) out.push_back(dense_from_json(j));
  return out;
}

inline nlohmann::ordered_json spec_to_json(const TowerSpec& spec) {
  nlohmann::ordered_json j;
  j["input_dim"] = spec.input_dim;
  j["hidden_dims"] = spec.hidden_dims;
  j["embed_dim"] = spec.embed_dim;
  j["strategy"] = to_string(spec.strategy);
  j["alignment_layers"] = spec.alignment_layers;
  j["adapter_reduction"] = spec.adapter_reduction;
  j["projection"] = to_string(spec.projection);
  return j;
}

inline TowerSpec spec_from_json(const nlohmann::json& j) {
  TowerSpec spec;
  spec.input_dim = j.at("input_dim").get<std::size_t>();
  spec.hidden_dims = j.at("hidden_dims").get<std::vector<std::size_t>>();
  spec.embed_dim = j.at("embed_dim").get<std::size_t>();
  spec.strategy = strategy_from_string(j.at("strategy").get<std::string>());
  spec.alignment_layers = j.at("alignment_layers").get<std::size_t>();
  spec.adapter_reduction = j.at("adapter_reduction").get<std::size_t>();
  spec.projection = projection_from_string(j.at("projection").get<std::string>());
  return spec;
}

inline nlohmann::ordered_json tower_to_json(const TowerWeights& w) {
  nlohmann::ordered_json j;
  j["base"] = dense_list_to_json(w.base);
  nlohmann::ordered_json adapters = nlohmann::ordered_json::array();
  for (const auto& a : w.adapters) {
    nlohmann::ordered_json aj;
    aj["down"] = dense_to_json(a.down);
    aj["up"] = dense_to_json(a.up);
    adapters.push_back(std::move(aj));
  }
  j["adapters"] = std::move(adapters);
  j["alignment"] = dense_list_to_json(w.alignment);
  j["projection"] = dense_list_to_json(w.projection);
  return j;
}

inline TowerWeights tower_from_json(const nlohmann::json& j) {
  TowerWeights w;
  w.base = dense_list_from_json(j.at("base"));
  for (const auto& aj : j.at("adapters")) {
    Adapter a;
    a.down = dense_from_json(aj.at("down"));
    a.up = dense_from_json(aj.at("up"));
    w.adapters.push_back(std::move(a));
  }
  w.alignment = dense_list_from_json(j.at("alignment"));
  w.projection = dense_list_from_json(j.at("projection"));
  return w;
}

}  // namespace detail

inline nlohmann::ordered_json dual_encoder_to_json(const DualEncoder& model) {
  nlohmann::ordered_json j;
  j["tool_version"] = kToolVersion;
  j["vision_spec"] = detail::spec_to_json(model.vision_spec);
  j["text_spec"] = detail::spec_to_json(model.text_spec);
  j["logit_scale"] = model.logit_s;
  j["vision"] = detail::tower_to_json(model.vision);
  j["text"] = detail::tower_to_json(model.text);
  return j;
}

inline DualEncoder dual_encoder_from_json(const nlohmann::json& j) {
  DualEncoder model;
  try {
    model.vision_spec = detail::spec_from_json(j.at("vision_spec"));
    model.text_spec = detail::spec_from_json(j.at("text_spec"));
    model.logit_s = j.at("logit_scale").get<double>();
    model.vision = detail::tower_from_json(j.at("vision"));
    model.text = detail::tower_from_json(j.at("text"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_config, std::string("weights file: ") + e.what());
  }
  return model;
}

}  // namespace parabench::duotower
