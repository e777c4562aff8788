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
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "parabench/duotower/pretrain.hpp"
#include "parabench/duotower/synth.hpp"
#include "parabench/duotower/train.hpp"
#include "parabench/embedding.hpp"
#include "parabench/error.hpp"
#include "parabench/metrics.hpp"
#include "parabench/numeric.hpp"
#include "parabench/retrieval.hpp"
#include "parabench/version.hpp"

namespace parabench::duotower {

// Tower shape shared by every strategy in one experiment. Vision projects
// with a linear layer, text with a 2-layer MLP.
struct TowerLayout {
  std::vector<std::size_t> vision_hidden_dims = {64, 64};
  std::vector<std::size_t> text_hidden_dims = {64, 64};
  std::size_t embed_dim = 32;
  std::size_t alignment_layers = 6;
  std::size_t adapter_reduction = 2;

  TowerSpec vision_spec(std::size_t input_dim) const {
    TowerSpec s;
    s.input_dim = input_dim;
    s.hidden_dims = vision_hidden_dims;
    s.embed_dim = embed_dim;
    s.strategy = Strategy::finetune;
    s.projection = Projection::linear;
    return s;
  }

  TowerSpec text_spec(std::size_t input_dim, Strategy strategy) const {
    TowerSpec s;
    s.input_dim = input_dim;
    s.hidden_dims = text_hidden_dims;
    s.embed_dim = embed_dim;
    s.strategy = strategy;
    s.alignment_layers = alignment_layers;
    s.adapter_reduction = adapter_reduction;
    s.projection = Projection::mlp2;
    return s;
  }
};

struct ExperimentConfig {
  SynthConfig synth;
  PretrainConfig pretrain;
  TrainConfig train;
  TowerLayout towers;
  std::vector<Strategy> strategies = {Strategy::finetune, Strategy::frozen,
                                      Strategy::frozen_bottleneck,
                                      Strategy::frozen_alignment};
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::size_t eval_k = 10;
  std::size_t recall_k = 5;
  bool pretrain_vision = false;  // latent-recovery init for the vision tower

  void validate() const {
    synth.validate();
    pretrain.validate();
    if (strategies.empty()) fail(ErrorCode::invalid_config, "no strategies listed");
    if (seeds.empty()) fail(ErrorCode::invalid_config, "need at least one seed");
    if (eval_k < 1 || recall_k < 1) fail(ErrorCode::invalid_config, "k values must be >= 1");
  }
};

struct ExperimentRow {
  Strategy strategy = Strategy::finetune;
  std::uint64_t seed = 0;
  double average_overlap = 0.0;
  double jaccard = 0.0;
  double recall = 0.0;
  double final_loss = 0.0;
  double pretrain_holdout_mse = 0.0;
};

struct StrategyMeans {
  double average_overlap = 0.0;
  double jaccard = 0.0;
  double recall = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ExperimentRow> rows;                // config order: strategy-major
  std::map<std::string, StrategyMeans> means;     // keyed by strategy name
  std::map<std::string, std::vector<LossLogRow>> loss_logs;  // "strategy_seed"

  nlohmann::ordered_json to_json() const;
  void write_csv(std::ostream& os) const;
  std::string format_table() const;
};

// Scores one trained dual encoder on the synthetic benchmark: embed the
// gallery, the queries and the paraphrases, retrieve top-k over the gallery
// embedding and compute AO@k / JS@k per pair plus R@recall_k.
struct EvalScores {
  double average_overlap = 0.0;
  double jaccard = 0.0;
  double recall = 0.0;
};

inline EvalScores score_on_benchmark(const DualEncoder& model, const SynthData& data,
                                     std::size_t eval_k, std::size_t recall_k,
                                     unsigned threads = 0) {
  const EmbeddingMatrix gallery = l2_normalize(embed_rows(
      model.vision_spec, model.vision, to_mat64(data.gallery), threads));
  const EmbeddingMatrix queries = l2_normalize(embed_rows(
      model.text_spec, model.text, to_mat64(data.queries), threads));
  const EmbeddingMatrix paraphrases = l2_normalize(embed_rows(
      model.text_spec, model.text, to_mat64(data.paraphrases), threads));

  const auto lq = retrieval::cosine_topk(queries, gallery, eval_k, threads);
  const auto lp = retrieval::cosine_topk(paraphrases, gallery, eval_k, threads);
  const auto lr = retrieval::cosine_topk(queries, gallery, recall_k, threads);

  std::vector<double> ao(lq.size()), js(lq.size()), hit(lq.size());
  for (std::size_t i = 0; i < lq.size(); ++i) {
    ao[i] = metrics::average_overlap(lq[i], lp[i], eval_k);
    js[i] = metrics::jaccard_at_k(lq[i], lp[i], eval_k);
    hit[i] = metrics::recall_at_k(lr[i], data.relevance[i], recall_k);
  }
  EvalScores scores;
  scores.average_overlap = mean(ao);
  scores.jaccard = mean(js);
  scores.recall = mean(hit);
  return scores;
}

// Full protocol: per seed, generate a fresh synthetic world, pretrain the
// text base once, then train and score every strategy on the same data and
// the same base. Strategy rows are grouped so that per-strategy means are
// simple column means over the seed list.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg, unsigned threads = 0) {
  cfg.validate();
  ExperimentReport report;
  report.config = cfg;

  struct SeedWorld {
    SynthData data;
    PretrainedBase base;
    PretrainedBase vision_base;
    bool has_vision_base = false;
  };

  std::vector<SeedWorld> worlds;
  worlds.reserve(cfg.seeds.size());
  for (std::uint64_t seed : cfg.seeds) {
    SeedWorld world;
    SynthConfig synth_cfg = cfg.synth;
    synth_cfg.seed = seed;
    world.data = synth_generate(synth_cfg);

    PretrainConfig pre_cfg = cfg.pretrain;
    pre_cfg.seed = seed;
    world.base = pretrain_text_base(to_mat64(world.data.pretrain_texts),
                                    to_mat64(world.data.pretrain_latents),
                                    cfg.towers.text_hidden_dims, pre_cfg);
    if (cfg.pretrain_vision) {
      // Mirror of the vision-initialization ablation: recover latents from
      // image features and reuse the trunk as the vision tower's start.
      PretrainConfig vis_cfg = cfg.pretrain;
      vis_cfg.seed = seed + 1;
      Mat latents(world.data.pretrain_images.rows(), cfg.synth.latent_dim);
      // image i pairs with training latent i; recompute from pretrain corpus
      // (concept-major: row i*J holds concept i's latent).
      const Mat all_latents = to_mat64(world.data.pretrain_latents);
      for (std::size_t i = 0; i < latents.rows; ++i) {
        const auto src = all_latents.row(i * cfg.synth.templates);
        std::copy(src.begin(), src.end(), latents.row(i).begin());
      }
      world.vision_base = pretrain_text_base(to_mat64(world.data.pretrain_images), latents,
                                             cfg.towers.vision_hidden_dims, vis_cfg);
      world.has_vision_base = true;
    }
    worlds.push_back(std::move(world));
  }

  for (Strategy strategy : cfg.strategies) {
    std::vector<double> ao, js, recall;
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
      const std::uint64_t seed = cfg.seeds[si];
      const SeedWorld& world = worlds[si];

      TrainConfig train_cfg = cfg.train;
      train_cfg.seed = seed;
      const TowerSpec vision_spec = cfg.towers.vision_spec(cfg.synth.image_dim);
      const TowerSpec text_spec = cfg.towers.text_spec(cfg.synth.text_dim, strategy);

      TrainResult trained = train(
          vision_spec, text_spec, world.base.trunk, to_mat64(world.data.contrastive_images),
          to_mat64(world.data.contrastive_texts), train_cfg,
          world.has_vision_base ? &world.vision_base.trunk : nullptr);

      const EvalScores scores =
          score_on_benchmark(trained.model, world.data, cfg.eval_k, cfg.recall_k, threads);

      ExperimentRow row;
      row.strategy = strategy;
      row.seed = seed;
      row.average_overlap = scores.average_overlap;
      row.jaccard = scores.jaccard;
      row.recall = scores.recall;
      row.final_loss = trained.log.empty() ? 0.0 : trained.log.back().loss;
      row.pretrain_holdout_mse = world.base.held_out_mse;
      report.rows.push_back(row);
      report.loss_logs[std::string(to_string(strategy)) + "_" + std::to_string(seed)] =
          std::move(trained.log);

      ao.push_back(scores.average_overlap);
      js.push_back(scores.jaccard);
      recall.push_back(scores.recall);
    }
    StrategyMeans m;
    m.average_overlap = mean(ao);
    m.jaccard = mean(js);
    m.recall = mean(recall);
    report.means[to_string(strategy)] = m;
  }
  return report;
}

inline nlohmann::ordered_json experiment_config_to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["synth"] = synth_config_to_json(cfg.synth);
  j["pretrain"] = {{"epochs", cfg.pretrain.epochs},
                   {"batch_size", cfg.pretrain.batch_size},
                   {"lr", cfg.pretrain.lr},
                   {"holdout_fraction", cfg.pretrain.holdout_fraction}};
  j["train"] = {{"batch_size", cfg.train.batch_size},
                {"epochs", cfg.train.epochs},
                {"warmup_steps", cfg.train.warmup_steps},
                {"base_lr", cfg.train.base_lr},
                {"adamw",
                 {{"beta1", cfg.train.adamw.beta1},
                  {"beta2", cfg.train.adamw.beta2},
                  {"eps", cfg.train.adamw.eps},
                  {"weight_decay", cfg.train.adamw.weight_decay}}},
                {"logit_scale_init", cfg.train.logit_scale_init},
                {"logit_scale_max", cfg.train.logit_scale_max}};
  j["towers"] = {{"vision_hidden_dims", cfg.towers.vision_hidden_dims},
                 {"text_hidden_dims", cfg.towers.text_hidden_dims},
                 {"embed_dim", cfg.towers.embed_dim},
                 {"alignment_layers", cfg.towers.alignment_layers},
                 {"adapter_reduction", cfg.towers.adapter_reduction}};
  nlohmann::ordered_json strategies = nlohmann::ordered_json::array();
  for (Strategy s : cfg.strategies) strategies.push_back(to_string(s));
  j["strategies"] = strategies;
  j["seeds"] = cfg.seeds;
  j["eval_k"] = cfg.eval_k;
  j["recall_k"] = cfg.recall_k;
  j["pretrain_vision"] = cfg.pretrain_vision;
  return j;
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  if (!j.is_object()) fail(ErrorCode::invalid_config, "experiment config is not an object");
  try {
    for (const auto& item : j.items()) {
      const auto& key = item.key();
      const auto& val = item.value();
      if (key == "synth") {
        cfg.synth = synth_config_from_json(val);
      } else if (key == "pretrain") {
        for (const auto& p : val.items()) {
          if (p.key() == "epochs") cfg.pretrain.epochs = p.value().get<std::size_t>();
          else if (p.key() == "batch_size") cfg.pretrain.batch_size = p.value().get<std::size_t>();
          else if (p.key() == "lr") cfg.pretrain.lr = p.value().get<double>();
          else if (p.key() == "holdout_fraction") cfg.pretrain.holdout_fraction = p.value().get<double>();
          else fail(ErrorCode::invalid_config, "unknown pretrain key \"" + p.key() + "\"");
        }
      } else if (key == "train") {
        for (const auto& p : val.items()) {
          if (p.key() == "batch_size") cfg.train.batch_size = p.value().get<std::size_t>();
          else if (p.key() == "epochs") cfg.train.epochs = p.value().get<std::size_t>();
          else if (p.key() == "warmup_steps") cfg.train.warmup_steps = p.value().get<std::size_t>();
          else if (p.key() == "base_lr") cfg.train.base_lr = p.value().get<double>();
          else if (p.key() == "logit_scale_init") cfg.train.logit_scale_init = p.value().get<double>();
          else if (p.key() == "logit_scale_max") cfg.train.logit_scale_max = p.value().get<double>();
          else if (p.key() == "adamw") {
            for (const auto& a : p.value().items()) {
              if (a.key() == "beta1") cfg.train.adamw.beta1 = a.value().get<double>();
              else if (a.key() == "beta2") cfg.train.adamw.beta2 = a.value().get<double>();
              else if (a.key() == "eps") cfg.train.adamw.eps = a.value().get<double>();
              else if (a.key() == "weight_decay") cfg.train.adamw.weight_decay = a.value().get<double>();
              else fail(ErrorCode::invalid_config, "unknown adamw key \"" + a.key() + "\"");
            }
          } else {
            fail(ErrorCode::invalid_config, "unknown train key \"" + p.key() + "\"");
          }
        }
      } else if (key == "towers") {
        for (const auto& p : val.items()) {
          if (p.key() == "vision_hidden_dims")
            cfg.towers.vision_hidden_dims = p.value().get<std::vector<std::size_t>>();
          else if (p.key() == "text_hidden_dims")
            cfg.towers.text_hidden_dims = p.value().get<std::vector<std::size_t>>();
          else if (p.key() == "embed_dim") cfg.towers.embed_dim = p.value().get<std::size_t>();
          else if (p.key() == "alignment_layers") cfg.towers.alignment_layers = p.value().get<std::size_t>();
          else if (p.key() == "adapter_reduction") cfg.towers.adapter_reduction = p.value().get<std::size_t>();
          else fail(ErrorCode::invalid_config, "unknown towers key \"" + p.key() + "\"");
        }
      } else if (key == "strategies") {
        cfg.strategies.clear();
        for (const auto& s : val) cfg.strategies.push_back(strategy_from_string(s.get<std::string>()));
      } else if (key == "seeds") {
        cfg.seeds = val.get<std::vector<std::uint64_t>>();
      } else if (key == "eval_k") {
        cfg.eval_k = val.get<std::size_t>();
      } else if (key == "recall_k") {
        cfg.recall_k = val.get<std::size_t>();
      } else if (key == "pretrain_vision") {
        cfg.pretrain_vision = val.get<bool>();
      } else {
        fail(ErrorCode::invalid_config, "unknown experiment key \"" + key + "\"");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_config, e.what());
  }
  return cfg;
}

inline nlohmann::ordered_json ExperimentReport::to_json() const {
  nlohmann::ordered_json j;
  j["tool_version"] = kToolVersion;
  j["config"] = experiment_config_to_json(config);
  nlohmann::ordered_json rows_json = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json r;
    r["strategy"] = to_string(row.strategy);
    r["seed"] = row.seed;
    r["ao"] = row.average_overlap;
    r["js"] = row.jaccard;
    r["recall"] = row.recall;
    r["final_loss"] = row.final_loss;
    r["pretrain_holdout_mse"] = row.pretrain_holdout_mse;
    rows_json.push_back(std::move(r));
  }
  j["rows"] = std::move(rows_json);
  nlohmann::ordered_json means_json;
  for (const auto& [name, m] : means) {
    means_json[name] = {{"ao", m.average_overlap}, {"js", m.jaccard}, {"recall", m.recall}};
  }
  j["means"] = std::move(means_json);
  return j;
}

inline void ExperimentReport::write_csv(std::ostream& os) const {
  os << "strategy,seed,ao,js,recall,final_loss\n";
  for (const auto& row : rows) {
    os << to_string(row.strategy) << ',' << row.seed << ','
       << format_double(row.average_overlap) << ',' << format_double(row.jaccard) << ','
       << format_double(row.recall) << ',' << format_double(row.final_loss) << '\n';
  }
  for (const auto& [name, m] : means) {
    os << name << ",mean," << format_double(m.average_overlap) << ','
       << format_double(m.jaccard) << ',' << format_double(m.recall) << ",\n";
  }
}

// Values are scaled by 100 in the table, matching the usual presentation of
// these metrics; JSON and CSV keep the raw [0, 1] values.
inline std::string ExperimentReport::format_table() const {
  char line[160];
  std::string out;
  std::snprintf(line, sizeof(line), "%-20s %8s %8s %8s\n", "strategy",
                ("AO@" + std::to_string(config.eval_k)).c_str(),
                ("JS@" + std::to_string(config.eval_k)).c_str(),
                ("R@" + std::to_string(config.recall_k)).c_str());
  out += line;
  for (const auto& [name, m] : means) {
    std::snprintf(line, sizeof(line), "%-20s %8.1f %8.1f %8.1f\n", name.c_str(),
                  100.0 * m.average_overlap, 100.0 * m.jaccard, 100.0 * m.recall);
    out += line;
  }
  return out;
}

}  // namespace parabench::duotower
