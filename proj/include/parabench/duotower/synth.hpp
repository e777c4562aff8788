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
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "parabench/duotower/linalg.hpp"
#include "parabench/embedding.hpp"
#include "parabench/error.hpp"
#include "parabench/pemb.hpp"
#include "parabench/rng.hpp"
#include "parabench/version.hpp"

namespace parabench::duotower {

// Synthetic world: a latent concept z ~ N(0, I) is rendered as an image
// feature x = A z + sigma_x * eps and, under template j, as a text feature
// t_j = B_j z + sigma_t * eps. Distinct templates of one latent play the
// role of paraphrase pairs. A and every B_j are drawn once from the seed.
struct SynthConfig {
  std::size_t latent_dim = 8;
  std::size_t image_dim = 96;
  std::size_t text_dim = 96;
  std::size_t templates = 2;  // J >= 2: template 2 is held out as the paraphrase
  double sigma_image = 0.1;
  double sigma_text = 0.1;
  std::size_t n_train = 2048;
  std::size_t n_gallery = 500;
  std::size_t n_queries = 200;
  // Template draw probabilities for the contrastive pairs; padded with zeros
  // up to J. The default puts all mass on template 1, which is what starves
  // finetuning of paraphrase exposure.
  std::vector<double> template_distribution = {1.0};
  std::uint64_t seed = 1;

  void validate() const {
    if (templates < 2) fail(ErrorCode::invalid_config, "need J >= 2 templates");
    if (latent_dim < 1 || image_dim < 1 || text_dim < 1) {
      fail(ErrorCode::invalid_config, "all dims must be >= 1");
    }
    if (sigma_image < 0.0 || sigma_text < 0.0) {
      fail(ErrorCode::invalid_config, "noise sigmas must be >= 0");
    }
    if (n_train < 1 || n_queries < 1) {
      fail(ErrorCode::invalid_config, "need at least one concept per split");
    }
    if (n_gallery < n_queries) {
      fail(ErrorCode::invalid_config, "gallery must contain every query's image");
    }
    if (template_distribution.empty() || template_distribution.size() > templates) {
      fail(ErrorCode::invalid_config, "template distribution must have 1..J entries");
    }
    double total = 0.0;
    for (double p : template_distribution) {
      if (p < 0.0) fail(ErrorCode::invalid_config, "template probabilities must be >= 0");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      fail(ErrorCode::invalid_config, "template probabilities must sum to 1");
    }
  }
};

// Named rng substreams; the draw order within each stream is fixed by the
// generation code, so a seed pins the whole dataset bit-for-bit.
namespace synth_stream {
inline constexpr std::uint64_t kImageMap = 0;
inline constexpr std::uint64_t kTextMaps = 1;
inline constexpr std::uint64_t kTrainLatents = 2;
inline constexpr std::uint64_t kTrainImageNoise = 3;
inline constexpr std::uint64_t kPretrainTextNoise = 4;
inline constexpr std::uint64_t kContrastiveTemplates = 5;
inline constexpr std::uint64_t kContrastiveTextNoise = 6;
inline constexpr std::uint64_t kEvalLatents = 7;
inline constexpr std::uint64_t kGalleryImageNoise = 8;
inline constexpr std::uint64_t kQueryTextNoise = 9;
inline constexpr std::uint64_t kParaphraseTextNoise = 10;
}  // namespace synth_stream

struct SynthData {
  // Pretraining corpus: every training concept rendered through all J
  // templates, rows grouped concept-major, paired with the latents.
  EmbeddingMatrix pretrain_texts;
  EmbeddingMatrix pretrain_latents;
  EmbeddingMatrix pretrain_images;  // one image per training concept
  // Contrastive pairs: row-aligned image/text features of the training
  // concepts; the text template follows template_distribution.
  EmbeddingMatrix contrastive_images;
  EmbeddingMatrix contrastive_texts;
  // Evaluation benchmark: gallery images over fresh concepts; queries use
  // template 1 and paraphrases template 2 of the first n_queries concepts.
  EmbeddingMatrix gallery;
  EmbeddingMatrix queries;
  EmbeddingMatrix paraphrases;
  std::vector<std::vector<std::uint32_t>> relevance;  // query i -> {i}
};

namespace detail {

inline Mat gaussian_mat(std::size_t rows, std::size_t cols, double scale, Rng& rng) {
  Mat m(rows, cols);
  for (auto& v : m.v) v = scale * rng.next_gaussian();
  return m;
}

// feature = map * z + sigma * eps, one row.
inline void render_row(const Mat& map, std::span<const double> z, double sigma,
                       Rng& noise_rng, std::vector<float>& out, std::size_t row_offset) {
  for (std::size_t r = 0; r < map.rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < map.cols; ++c) acc += map.at(r, c) * z[c];
    if (sigma > 0.0) acc += sigma * noise_rng.next_gaussian();
    out[row_offset + r] = static_cast<float>(acc);
  }
}

inline std::size_t draw_template(const std::vector<double>& dist, Rng& rng) {
  const double u = rng.next_uniform();
  double cdf = 0.0;
  for (std::size_t j = 0; j < dist.size(); ++j) {
    cdf += dist[j];
    if (u < cdf) return j;
  }
  return dist.size() - 1;
}

}  // namespace detail

inline SynthData synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t dz = cfg.latent_dim;
  const std::size_t dx = cfg.image_dim;
  const std::size_t dt = cfg.text_dim;
  const double map_scale = 1.0 / std::sqrt(static_cast<double>(dz));

  Rng map_rng_x(cfg.seed, synth_stream::kImageMap);
  const Mat image_map = detail::gaussian_mat(dx, dz, map_scale, map_rng_x);
  Rng map_rng_t(cfg.seed, synth_stream::kTextMaps);
  std::vector<Mat> text_maps;
  text_maps.reserve(cfg.templates);
  for (std::size_t j = 0; j < cfg.templates; ++j) {
    text_maps.push_back(detail::gaussian_mat(dt, dz, map_scale, map_rng_t));
  }

  Rng latent_rng(cfg.seed, synth_stream::kTrainLatents);
  Mat train_latents(cfg.n_train, dz);
  for (auto& v : train_latents.v) v = latent_rng.next_gaussian();

  SynthData data;

  // Pretraining corpus across all templates (concept-major grouping).
  {
    std::vector<float> texts(cfg.n_train * cfg.templates * dt);
    std::vector<float> latents(cfg.n_train * cfg.templates * dz);
    Rng noise(cfg.seed, synth_stream::kPretrainTextNoise);
    for (std::size_t i = 0; i < cfg.n_train; ++i) {
      const auto z = train_latents.row(i);
      for (std::size_t j = 0; j < cfg.templates; ++j) {
        const std::size_t row = i * cfg.templates + j;
        detail::render_row(text_maps[j], z, cfg.sigma_text, noise, texts, row * dt);
        for (std::size_t c = 0; c < dz; ++c) {
          latents[row * dz + c] = static_cast<float>(z[c]);
        }
      }
    }
    data.pretrain_texts = EmbeddingMatrix(cfg.n_train * cfg.templates, dt, std::move(texts));
    data.pretrain_latents =
        EmbeddingMatrix(cfg.n_train * cfg.templates, dz, std::move(latents));
  }

  // One image per training concept; shared by pretraining (optional vision
  // init) and the contrastive pairs.
  {
    std::vector<float> images(cfg.n_train * dx);
    Rng noise(cfg.seed, synth_stream::kTrainImageNoise);
    for (std::size_t i = 0; i < cfg.n_train; ++i) {
      detail::render_row(image_map, train_latents.row(i), cfg.sigma_image, noise, images,
                         i * dx);
    }
    data.pretrain_images = EmbeddingMatrix(cfg.n_train, dx, std::move(images));
    data.contrastive_images = data.pretrain_images;
  }

  // Contrastive text side under the (narrow) template distribution.
  {
    std::vector<float> texts(cfg.n_train * dt);
    Rng pick(cfg.seed, synth_stream::kContrastiveTemplates);
    Rng noise(cfg.seed, synth_stream::kContrastiveTextNoise);
    for (std::size_t i = 0; i < cfg.n_train; ++i) {
      const std::size_t j = detail::draw_template(cfg.template_distribution, pick);
      detail::render_row(text_maps[j], train_latents.row(i), cfg.sigma_text, noise, texts,
                         i * dt);
    }
    data.contrastive_texts = EmbeddingMatrix(cfg.n_train, dt, std::move(texts));
  }

  // Evaluation benchmark over fresh concepts. Gallery row i is the image of
  // eval concept i; the first n_queries concepts also get a template-1 query
  // and a template-2 paraphrase, so relevance is the identity mapping.
  {
    Rng eval_rng(cfg.seed, synth_stream::kEvalLatents);
    Mat eval_latents(cfg.n_gallery, dz);
    for (auto& v : eval_latents.v) v = eval_rng.next_gaussian();

    std::vector<float> gallery(cfg.n_gallery * dx);
    Rng gallery_noise(cfg.seed, synth_stream::kGalleryImageNoise);
    for (std::size_t i = 0; i < cfg.n_gallery; ++i) {
      detail::render_row(image_map, eval_latents.row(i), cfg.sigma_image, gallery_noise,
                         gallery, i * dx);
    }
    data.gallery = EmbeddingMatrix(cfg.n_gallery, dx, std::move(gallery));

    std::vector<float> queries(cfg.n_queries * dt);
    Rng query_noise(cfg.seed, synth_stream::kQueryTextNoise);
    for (std::size_t i = 0; i < cfg.n_queries; ++i) {
      detail::render_row(text_maps[0], eval_latents.row(i), cfg.sigma_text, query_noise,
                         queries, i * dt);
    }
    data.queries = EmbeddingMatrix(cfg.n_queries, dt, std::move(queries));

    std::vector<float> paraphrases(cfg.n_queries * dt);
    Rng para_noise(cfg.seed, synth_stream::kParaphraseTextNoise);
    for (std::size_t i = 0; i < cfg.n_queries; ++i) {
      detail::render_row(text_maps[1], eval_latents.row(i), cfg.sigma_text, para_noise,
                         paraphrases, i * dt);
    }
    data.paraphrases = EmbeddingMatrix(cfg.n_queries, dt, std::move(paraphrases));

    data.relevance.resize(cfg.n_queries);
    for (std::size_t i = 0; i < cfg.n_queries; ++i) {
      data.relevance[i] = {static_cast<std::uint32_t>(i)};
    }
  }

  return data;
}

inline nlohmann::ordered_json synth_config_to_json(const SynthConfig& cfg) {
  nlohmann::ordered_json j;
  j["latent_dim"] = cfg.latent_dim;
  j["image_dim"] = cfg.image_dim;
  j["text_dim"] = cfg.text_dim;
  j["templates"] = cfg.templates;
  j["sigma_image"] = cfg.sigma_image;
  j["sigma_text"] = cfg.sigma_text;
  j["n_train"] = cfg.n_train;
  j["n_gallery"] = cfg.n_gallery;
  j["n_queries"] = cfg.n_queries;
  j["template_distribution"] = cfg.template_distribution;
  j["seed"] = cfg.seed;
  return j;
}

inline SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig cfg;
  if (!j.is_object()) fail(ErrorCode::invalid_config, "synth config is not an object");
  try {
    for (const auto& item : j.items()) {
      const auto& key = item.key();
      if (key == "latent_dim") cfg.latent_dim = item.value().get<std::size_t>();
      else if (key == "image_dim") cfg.image_dim = item.value().get<std::size_t>();
      else if (key == "text_dim") cfg.text_dim = item.value().get<std::size_t>();
      else if (key == "templates") cfg.templates = item.value().get<std::size_t>();
      else if (key == "sigma_image") cfg.sigma_image = item.value().get<double>();
      else if (key == "sigma_text") cfg.sigma_text = item.value().get<double>();
      else if (key == "n_train") cfg.n_train = item.value().get<std::size_t>();
      else if (key == "n_gallery") cfg.n_gallery = item.value().get<std::size_t>();
      else if (key == "n_queries") cfg.n_queries = item.value().get<std::size_t>();
      else if (key == "template_distribution")
        cfg.template_distribution = item.value().get<std::vector<double>>();
      else if (key == "seed") cfg.seed = item.value().get<std::uint64_t>();
      else fail(ErrorCode::invalid_config, "unknown synth config key \"" + key + "\"");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_config, e.what());
  }
  return cfg;
}

// Writes the dataset as a portable benchmark bundle: PEMB files, a paraphrase
// manifest, a retrieval manifest, and a config echo.
inline void write_synth_dir(const SynthData& data, const SynthConfig& cfg,
                            const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_embeddings(data.pretrain_texts, dir / "pretrain_texts.pemb");
  save_embeddings(data.pretrain_latents, dir / "pretrain_latents.pemb");
  save_embeddings(data.pretrain_images, dir / "pretrain_images.pemb");
  save_embeddings(data.contrastive_images, dir / "contrastive_images.pemb");
  save_embeddings(data.contrastive_texts, dir / "contrastive_texts.pemb");
  save_embeddings(data.gallery, dir / "gallery.pemb");
  save_embeddings(data.queries, dir / "queries.pemb");
  save_embeddings(data.paraphrases, dir / "paraphrases.pemb");

  nlohmann::ordered_json paraphrase;
  paraphrase["kind"] = "paraphrase";
  paraphrase["queries"] = "queries.pemb";
  paraphrase["paraphrases"] = "paraphrases.pemb";
  paraphrase["gallery"] = "gallery.pemb";
  paraphrase["normalize"] = true;
  {
    std::ofstream out(dir / "paraphrase.manifest.json");
    if (!out) fail(ErrorCode::io_error, "cannot write paraphrase manifest");
    out << paraphrase.dump(2) << '\n';
  }

  nlohmann::ordered_json retrieval;
  retrieval["kind"] = "retrieval";
  retrieval["queries"] = "queries.pemb";
  retrieval["gallery"] = "gallery.pemb";
  retrieval["relevance"] = data.relevance;
  retrieval["normalize"] = true;
  {
    std::ofstream out(dir / "retrieval.manifest.json");
    if (!out) fail(ErrorCode::io_error, "cannot write retrieval manifest");
    out << retrieval.dump(2) << '\n';
  }

  nlohmann::ordered_json echo;
  echo["tool_version"] = kToolVersion;
  echo["synth"] = synth_config_to_json(cfg);
  {
    std::ofstream out(dir / "synth_config.json");
    if (!out) fail(ErrorCode::io_error, "cannot write synth config echo");
    out << echo.dump(2) << '\n';
  }
}

}  // namespace parabench::duotower
