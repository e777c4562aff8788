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
#include <catch2/catch.hpp>

#include <unistd.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <vector>

#include "parabench/duotower/experiment.hpp"
#include "parabench/duotower/infonce.hpp"
#include "parabench/duotower/optim.hpp"
#include "parabench/duotower/pretrain.hpp"
#include "parabench/duotower/synth.hpp"
#include "parabench/duotower/tower.hpp"
#include "parabench/duotower/train.hpp"
#include "parabench/duotower/weights_io.hpp"
#include "parabench/manifest.hpp"

using namespace parabench;
using namespace parabench::duotower;
namespace fs = std::filesystem;

namespace {

SynthConfig tiny_synth(std::uint64_t seed = 5) {
  SynthConfig cfg;
  cfg.latent_dim = 4;
  cfg.image_dim = 16;
  cfg.text_dim = 16;
  cfg.n_train = 400;
  cfg.n_gallery = 60;
  cfg.n_queries = 30;
  cfg.seed = seed;
  return cfg;
}

TowerSpec small_text_spec(Strategy strategy) {
  TowerSpec spec;
  spec.input_dim = 16;
  spec.hidden_dims = {12, 8};
  spec.embed_dim = 6;
  spec.strategy = strategy;
  spec.alignment_layers = 2;
  spec.adapter_reduction = 2;
  spec.projection = Projection::mlp2;
  return spec;
}

Mat random_mat(std::size_t rows, std::size_t cols, Rng& rng) {
  Mat m(rows, cols);
  for (auto& v : m.v) v = rng.next_gaussian();
  return m;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) {
      return false;
    }
  }
  return true;
}

bool towers_bitwise_equal(const TowerWeights& a, const TowerWeights& b) {
  if (a.base.size() != b.base.size() || a.adapters.size() != b.adapters.size() ||
      a.alignment.size() != b.alignment.size() ||
      a.projection.size() != b.projection.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.base.size(); ++i) {
    if (!bitwise_equal(a.base[i].W.v, b.base[i].W.v)) return false;
    if (!bitwise_equal(a.base[i].b, b.base[i].b)) return false;
  }
  for (std::size_t i = 0; i < a.adapters.size(); ++i) {
    if (!bitwise_equal(a.adapters[i].down.W.v, b.adapters[i].down.W.v)) return false;
    if (!bitwise_equal(a.adapters[i].up.W.v, b.adapters[i].up.W.v)) return false;
  }
  for (std::size_t i = 0; i < a.alignment.size(); ++i) {
    if (!bitwise_equal(a.alignment[i].W.v, b.alignment[i].W.v)) return false;
  }
  for (std::size_t i = 0; i < a.projection.size(); ++i) {
    if (!bitwise_equal(a.projection[i].W.v, b.projection[i].W.v)) return false;
    if (!bitwise_equal(a.projection[i].b, b.projection[i].b)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("synth_generate is bit-deterministic in the seed") {
  const SynthConfig cfg = tiny_synth();
  const SynthData a = synth_generate(cfg);
  const SynthData b = synth_generate(cfg);
  CHECK(a.queries.values() == b.queries.values());
  CHECK(a.gallery.values() == b.gallery.values());
  CHECK(a.contrastive_texts.values() == b.contrastive_texts.values());

  SynthConfig other = cfg;
  other.seed = cfg.seed + 1;
  CHECK(synth_generate(other).queries.values() != a.queries.values());
}

TEST_CASE("noiseless features are exact linear images of the shared latent") {
  SynthConfig cfg = tiny_synth(9);
  cfg.sigma_image = 0.0;
  cfg.sigma_text = 0.0;
  const SynthData data = synth_generate(cfg);

  // Replay the documented generation streams.
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.latent_dim));
  Rng map_rng(cfg.seed, synth_stream::kTextMaps);
  Mat b1(cfg.text_dim, cfg.latent_dim), b2(cfg.text_dim, cfg.latent_dim);
  for (auto& v : b1.v) v = scale * map_rng.next_gaussian();
  for (auto& v : b2.v) v = scale * map_rng.next_gaussian();
  Rng eval_rng(cfg.seed, synth_stream::kEvalLatents);
  Mat latents(cfg.n_gallery, cfg.latent_dim);
  for (auto& v : latents.v) v = eval_rng.next_gaussian();

  for (std::size_t i = 0; i < cfg.n_queries; ++i) {
    for (std::size_t r = 0; r < cfg.text_dim; ++r) {
      double q = 0.0, p = 0.0;
      for (std::size_t c = 0; c < cfg.latent_dim; ++c) {
        q += b1.at(r, c) * latents.at(i, c);
        p += b2.at(r, c) * latents.at(i, c);
      }
      CHECK(data.queries.at(i, r) == static_cast<float>(q));
      CHECK(data.paraphrases.at(i, r) == static_cast<float>(p));
    }
  }
}

TEST_CASE("synth bundle manifests validate with zero violations") {
  SynthConfig cfg = tiny_synth(11);
  cfg.n_gallery = 100;
  cfg.n_queries = 50;
  const fs::path dir = fs::temp_directory_path() /
                       ("parabench_synth_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  write_synth_dir(synth_generate(cfg), cfg, dir);

  const auto para = BenchmarkManifest::from_json_file(dir / "paraphrase.manifest.json");
  const auto para_summary = validate_manifest(para);
  CHECK(para_summary.ok());
  CHECK(para_summary.pairs == 50);
  CHECK(para_summary.gallery_rows == 100);

  const auto retr = BenchmarkManifest::from_json_file(dir / "retrieval.manifest.json");
  CHECK(validate_manifest(retr).ok());
  fs::remove_all(dir);
}

TEST_CASE("synth_generate rejects invalid configs") {
  SynthConfig cfg = tiny_synth();
  cfg.templates = 1;
  CHECK_THROWS_AS(synth_generate(cfg), Error);
  cfg = tiny_synth();
  cfg.n_gallery = 10;
  cfg.n_queries = 20;
  CHECK_THROWS_AS(synth_generate(cfg), Error);
  cfg = tiny_synth();
  cfg.template_distribution = {0.5, 0.2};
  CHECK_THROWS_AS(synth_generate(cfg), Error);
}

TEST_CASE("pretraining on a noiseless corpus recovers the latent almost exactly") {
  SynthConfig cfg = tiny_synth(5);
  cfg.sigma_image = 0.0;
  cfg.sigma_text = 0.0;
  const SynthData data = synth_generate(cfg);
  PretrainConfig pcfg;
  pcfg.epochs = 200;
  pcfg.batch_size = 64;
  pcfg.seed = 5;
  const auto base = pretrain_text_base(to_mat64(data.pretrain_texts),
                                       to_mat64(data.pretrain_latents), {32, 32}, pcfg);
  CHECK(base.held_out_mse < 1e-3);
}

TEST_CASE("zero pretraining epochs returns the random initialization") {
  const SynthData data = synth_generate(tiny_synth(6));
  PretrainConfig pcfg;
  pcfg.epochs = 0;
  pcfg.seed = 17;
  const auto base = pretrain_text_base(to_mat64(data.pretrain_texts),
                                       to_mat64(data.pretrain_latents), {12, 8}, pcfg);

  TowerSpec spec;
  spec.input_dim = 16;
  spec.hidden_dims = {12, 8};
  spec.embed_dim = 4;
  spec.strategy = Strategy::finetune;
  spec.projection = Projection::linear;
  Rng rng(17, pretrain_stream::kInit);
  const TowerWeights expected = init_tower(spec, rng);
  REQUIRE(base.trunk.size() == expected.base.size());
  for (std::size_t l = 0; l < base.trunk.size(); ++l) {
    CHECK(bitwise_equal(base.trunk[l].W.v, expected.base[l].W.v));
  }
  CHECK(bitwise_equal(base.head.W.v, expected.projection[0].W.v));
}

TEST_CASE("single-template pretraining is not paraphrase-invariant") {
  const SynthConfig cfg = tiny_synth(5);
  const SynthData data = synth_generate(cfg);
  PretrainConfig pcfg;
  pcfg.epochs = 200;
  pcfg.batch_size = 64;
  pcfg.seed = 5;

  const Mat all_texts = to_mat64(data.pretrain_texts);
  const Mat all_latents = to_mat64(data.pretrain_latents);
  Mat t1_texts(cfg.n_train, cfg.text_dim);
  Mat t1_latents(cfg.n_train, cfg.latent_dim);
  for (std::size_t i = 0; i < cfg.n_train; ++i) {
    const auto t = all_texts.row(i * cfg.templates);
    std::copy(t.begin(), t.end(), t1_texts.row(i).begin());
    const auto z = all_latents.row(i * cfg.templates);
    std::copy(z.begin(), z.end(), t1_latents.row(i).begin());
  }

  const auto base_all = pretrain_text_base(all_texts, all_latents, {32, 32}, pcfg);
  const auto base_single = pretrain_text_base(t1_texts, t1_latents, {32, 32}, pcfg);

  TowerSpec probe;
  probe.input_dim = cfg.text_dim;
  probe.hidden_dims = {32, 32};
  probe.embed_dim = cfg.latent_dim;
  probe.strategy = Strategy::finetune;
  probe.projection = Projection::linear;
  auto paraphrase_distance = [&](const PretrainedBase& base) {
    TowerWeights w;
    w.base = base.trunk;
    w.projection = {base.head};
    const Mat zq = tower_forward(probe, w, to_mat64(data.queries));
    const Mat zp = tower_forward(probe, w, to_mat64(data.paraphrases));
    double acc = 0.0;
    for (std::size_t i = 0; i < zq.v.size(); ++i) {
      const double d = zq.v[i] - zp.v[i];
      acc += d * d;
    }
    return acc / static_cast<double>(zq.rows);
  };

  const double dist_all = paraphrase_distance(base_all);
  const double dist_single = paraphrase_distance(base_single);
  CHECK(dist_single > 5.0 * dist_all);
}

TEST_CASE("fresh adapters and empty alignment stacks are identity wrappers") {
  Rng rng(21);
  const Mat x = random_mat(5, 16, rng);

  const TowerSpec frozen_spec = small_text_spec(Strategy::frozen);
  Rng init_rng(99);
  const TowerWeights frozen = init_tower(frozen_spec, init_rng);
  const Mat baseline = tower_forward(frozen_spec, frozen, x);

  SECTION("zero-initialized bottleneck adapters") {
    const TowerSpec spec = small_text_spec(Strategy::frozen_bottleneck);
    Rng adapter_rng(7);
    TowerWeights w = init_tower(spec, adapter_rng, &frozen.base);
    w.projection = frozen.projection;
    const Mat out = tower_forward(spec, w, x);
    REQUIRE(out.v.size() == baseline.v.size());
    for (std::size_t i = 0; i < out.v.size(); ++i) {
      CHECK(std::abs(out.v[i] - baseline.v[i]) <= 1e-12);
    }
  }

  SECTION("m = 0 alignment layers") {
    TowerSpec spec = small_text_spec(Strategy::frozen_alignment);
    spec.alignment_layers = 0;
    Rng align_rng(8);
    TowerWeights w = init_tower(spec, align_rng, &frozen.base);
    w.projection = frozen.projection;
    const Mat out = tower_forward(spec, w, x);
    for (std::size_t i = 0; i < out.v.size(); ++i) {
      CHECK(std::abs(out.v[i] - baseline.v[i]) <= 1e-12);
    }
  }

  SECTION("finetune and frozen agree before any optimizer step") {
    const TowerSpec spec = small_text_spec(Strategy::finetune);
    TowerWeights w;
    w.base = frozen.base;
    w.projection = frozen.projection;
    const Mat out = tower_forward(spec, w, x);
    for (std::size_t i = 0; i < out.v.size(); ++i) {
      CHECK(out.v[i] == baseline.v[i]);
    }
  }
}

TEST_CASE("InfoNCE equals ln 2 when all four pairwise similarities tie") {
  Mat zi(2, 3), zt(2, 3);
  zi.at(0, 0) = 1.0;
  zi.at(1, 0) = 1.0;
  zt.at(0, 1) = 1.0;
  zt.at(1, 1) = 1.0;
  const auto result = infonce_loss(zi, zt, std::log(5.0));
  CHECK(result.loss == Approx(std::log(2.0)).margin(1e-12));
}

TEST_CASE("InfoNCE vanishes for perfectly aligned orthonormal batches") {
  const std::size_t n = 4;
  Mat z(n, n);
  for (std::size_t i = 0; i < n; ++i) z.at(i, i) = 1.0;
  const auto result = infonce_loss(z, z, std::log(200.0), 100.0);
  CHECK(result.scale == 100.0);
  CHECK(result.loss < 0.01);
  CHECK(result.d_logit_s == 0.0);  // clamped
}

TEST_CASE("InfoNCE on random embeddings sits near the uniform baseline") {
  Rng rng(77);
  for (std::size_t n : {32ul, 64ul}) {
    const Mat zi = random_mat(n, 64, rng);
    const Mat zt = random_mat(n, 64, rng);
    const auto result = infonce_loss(zi, zt, 0.0);
    const double uniform = std::log(static_cast<double>(n));
    CHECK(std::abs(result.loss - uniform) < 0.1 * uniform);
  }
}

TEST_CASE("InfoNCE analytic gradients match central finite differences") {
  Rng rng(78);
  const std::size_t n = 5, d = 4;
  Mat zi = random_mat(n, d, rng);
  Mat zt = random_mat(n, d, rng);
  const double s = 0.4;
  const double h = 1e-5;
  const auto base = infonce_loss(zi, zt, s);

  auto check_matrix = [&](Mat& m, const Mat& analytic) {
    for (std::size_t i = 0; i < m.v.size(); ++i) {
      const double saved = m.v[i];
      m.v[i] = saved + h;
      const double up = infonce_loss(zi, zt, s).loss;
      m.v[i] = saved - h;
      const double down = infonce_loss(zi, zt, s).loss;
      m.v[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double denom = std::max({1.0, std::abs(fd), std::abs(analytic.v[i])});
      CHECK(std::abs(fd - analytic.v[i]) / denom < 1e-5);
    }
  };
  check_matrix(zi, base.d_zi);
  check_matrix(zt, base.d_zt);

  const double up = infonce_loss(zi, zt, s + h).loss;
  const double down = infonce_loss(zi, zt, s - h).loss;
  const double fd = (up - down) / (2.0 * h);
  CHECK(std::abs(fd - base.d_logit_s) / std::max(1.0, std::abs(fd)) < 1e-5);
}

TEST_CASE("InfoNCE requires at least two pairs") {
  Mat zi(1, 3), zt(1, 3);
  zi.at(0, 0) = 1.0;
  zt.at(0, 0) = 1.0;
  try {
    infonce_loss(zi, zt, 0.0);
    FAIL("expected BatchTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::batch_too_small);
  }
}

TEST_CASE("one AdamW step with zero gradient applies pure decoupled decay") {
  std::vector<double> theta = {1.0};
  const std::vector<double> grad = {0.0};
  AdamWState state(1);
  AdamWConfig cfg;
  adamw_step(theta, grad, state, 1, 0.001, cfg, 0.1);
  CHECK(theta[0] == Approx(0.9999).margin(1e-15));
}

TEST_CASE("learning-rate schedule hits its documented endpoints") {
  TrainConfig cfg;
  cfg.base_lr = 0.001;
  cfg.warmup_steps = 200;
  const std::size_t total = 1000;
  CHECK(lr_at(0, total, cfg) == 0.0);
  CHECK(lr_at(200, total, cfg) == cfg.base_lr);
  CHECK(lr_at(100, total, cfg) == Approx(0.5 * cfg.base_lr));
  CHECK(lr_at(total, total, cfg) <= 1e-9 * cfg.base_lr);
  // Monotone decay past warmup.
  double prev = lr_at(200, total, cfg);
  for (std::size_t s = 201; s <= total; ++s) {
    const double lr = lr_at(s, total, cfg);
    CHECK(lr <= prev);
    prev = lr;
  }
}

namespace {

struct SmallRun {
  SynthData data;
  PretrainedBase base;
  TowerSpec vision_spec;
  TowerSpec text_spec;
  TrainConfig cfg;
};

SmallRun make_small_run(Strategy strategy, std::size_t epochs) {
  SmallRun run;
  SynthConfig scfg = tiny_synth(13);
  scfg.n_train = 200;
  run.data = synth_generate(scfg);
  PretrainConfig pcfg;
  pcfg.epochs = 20;
  pcfg.seed = 13;
  run.base = pretrain_text_base(to_mat64(run.data.pretrain_texts),
                                to_mat64(run.data.pretrain_latents), {12, 8}, pcfg);
  run.vision_spec.input_dim = 16;
  run.vision_spec.hidden_dims = {12, 8};
  run.vision_spec.embed_dim = 6;
  run.vision_spec.strategy = Strategy::finetune;
  run.vision_spec.projection = Projection::linear;
  run.text_spec = small_text_spec(strategy);
  run.cfg.batch_size = 32;
  run.cfg.epochs = epochs;
  run.cfg.warmup_steps = epochs == 0 ? 0 : 2;
  run.cfg.seed = 13;
  return run;
}

}  // namespace

TEST_CASE("zero training epochs leaves the model at its initialization") {
  auto run = make_small_run(Strategy::frozen_alignment, 0);
  const auto a = train(run.vision_spec, run.text_spec, run.base.trunk,
                       to_mat64(run.data.contrastive_images),
                       to_mat64(run.data.contrastive_texts), run.cfg);
  CHECK(a.log.empty());
  Rng vision_rng(run.cfg.seed, train_stream::kVisionInit);
  const TowerWeights expected = init_tower(run.vision_spec, vision_rng);
  CHECK(towers_bitwise_equal(a.model.vision, expected));
  CHECK(a.model.logit_s == run.cfg.logit_scale_init);
}

TEST_CASE("frozen parameters are bit-identical after full training") {
  for (Strategy strategy : {Strategy::frozen, Strategy::frozen_bottleneck,
                            Strategy::frozen_alignment}) {
    auto run = make_small_run(strategy, 4);
    const auto result = train(run.vision_spec, run.text_spec, run.base.trunk,
                              to_mat64(run.data.contrastive_images),
                              to_mat64(run.data.contrastive_texts), run.cfg);
    REQUIRE(result.model.text.base.size() == run.base.trunk.size());
    for (std::size_t l = 0; l < run.base.trunk.size(); ++l) {
      CHECK(bitwise_equal(result.model.text.base[l].W.v, run.base.trunk[l].W.v));
      CHECK(bitwise_equal(result.model.text.base[l].b, run.base.trunk[l].b));
    }
  }
}

TEST_CASE("training beats the uniform-prediction baseline on every strategy") {
  for (Strategy strategy : {Strategy::finetune, Strategy::frozen,
                            Strategy::frozen_bottleneck, Strategy::frozen_alignment}) {
    auto run = make_small_run(strategy, 40);
    const auto result = train(run.vision_spec, run.text_spec, run.base.trunk,
                              to_mat64(run.data.contrastive_images),
                              to_mat64(run.data.contrastive_texts), run.cfg);
    REQUIRE_FALSE(result.log.empty());
    CHECK(result.log.back().loss < std::log(static_cast<double>(run.cfg.batch_size)));
  }
}

TEST_CASE("the loss log trends downward on the synthetic task") {
  auto run = make_small_run(Strategy::finetune, 10);
  const auto result = train(run.vision_spec, run.text_spec, run.base.trunk,
                            to_mat64(run.data.contrastive_images),
                            to_mat64(run.data.contrastive_texts), run.cfg);
  const std::size_t quarter = result.log.size() / 4;
  REQUIRE(quarter > 0);
  double head = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < quarter; ++i) head += result.log[i].loss;
  for (std::size_t i = result.log.size() - quarter; i < result.log.size(); ++i) {
    tail += result.log[i].loss;
  }
  CHECK(tail < head);
}

TEST_CASE("training is bit-deterministic in (seed, config)") {
  auto run = make_small_run(Strategy::frozen_bottleneck, 3);
  const auto a = train(run.vision_spec, run.text_spec, run.base.trunk,
                       to_mat64(run.data.contrastive_images),
                       to_mat64(run.data.contrastive_texts), run.cfg);
  const auto b = train(run.vision_spec, run.text_spec, run.base.trunk,
                       to_mat64(run.data.contrastive_images),
                       to_mat64(run.data.contrastive_texts), run.cfg);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(std::bit_cast<std::uint64_t>(a.log[i].loss) ==
          std::bit_cast<std::uint64_t>(b.log[i].loss));
  }
  CHECK(towers_bitwise_equal(a.model.vision, b.model.vision));
  CHECK(towers_bitwise_equal(a.model.text, b.model.text));
  CHECK(a.model.logit_s == b.model.logit_s);
}

TEST_CASE("trainable parameter counts match their closed forms") {
  auto enumerate = [](const TowerSpec& spec) {
    Rng rng(3);
    std::vector<Dense> trunk;
    {
      std::size_t in = spec.input_dim;
      for (std::size_t h : spec.hidden_dims) {
        trunk.push_back(init_dense(in, h, rng));
        in = h;
      }
    }
    TowerWeights w = init_tower(spec, rng, &trunk);
    std::size_t count = 0;
    for_each_trainable(spec, w, [&](std::vector<double>& t, bool) { count += t.size(); });
    return count;
  };

  TowerLayout layout;  // default widths: text 96 -> 64 -> 64, embed 32
  const std::size_t dt = 96;
  const std::size_t frozen = enumerate(layout.text_spec(dt, Strategy::frozen));
  const std::size_t bottleneck = enumerate(layout.text_spec(dt, Strategy::frozen_bottleneck));
  const std::size_t finetune = enumerate(layout.text_spec(dt, Strategy::finetune));
  const std::size_t alignment = enumerate(layout.text_spec(dt, Strategy::frozen_alignment));

  CHECK(frozen == trainable_param_count(layout.text_spec(dt, Strategy::frozen)));
  CHECK(bottleneck == trainable_param_count(layout.text_spec(dt, Strategy::frozen_bottleneck)));
  CHECK(finetune == trainable_param_count(layout.text_spec(dt, Strategy::finetune)));
  CHECK(alignment == trainable_param_count(layout.text_spec(dt, Strategy::frozen_alignment)));

  // Projection head (2-layer MLP): (64*64+64) + (64*32+32) = 6240.
  CHECK(frozen == 6240);
  // Adapters at width 64, reduction 2: 2 * ((64*32+32) + (32*64+64)) = 8384.
  CHECK(bottleneck == frozen + 8384);
  // Trunk: (96*64+64) + (64*64+64) = 10368.
  CHECK(finetune == frozen + 10368);
  CHECK(frozen < bottleneck);
  CHECK(bottleneck < finetune);
  // Alignment: 6 * (64*64+64) = 24960.
  CHECK(alignment == frozen + 24960);
}

TEST_CASE("saved weights reload bit-for-bit") {
  auto run = make_small_run(Strategy::frozen_alignment, 2);
  const auto result = train(run.vision_spec, run.text_spec, run.base.trunk,
                            to_mat64(run.data.contrastive_images),
                            to_mat64(run.data.contrastive_texts), run.cfg);
  const std::string text = dual_encoder_to_json(result.model).dump();
  const DualEncoder back = dual_encoder_from_json(nlohmann::json::parse(text));
  CHECK(towers_bitwise_equal(back.vision, result.model.vision));
  CHECK(towers_bitwise_equal(back.text, result.model.text));
  CHECK(back.logit_s == result.model.logit_s);
  CHECK(back.text_spec.strategy == Strategy::frozen_alignment);
}

TEST_CASE("embedding a matrix is independent of the thread count") {
  auto run = make_small_run(Strategy::frozen, 1);
  const auto result = train(run.vision_spec, run.text_spec, run.base.trunk,
                            to_mat64(run.data.contrastive_images),
                            to_mat64(run.data.contrastive_texts), run.cfg);
  const Mat inputs = to_mat64(run.data.gallery);
  const EmbeddingMatrix a = embed_rows(run.vision_spec, result.model.vision, inputs, 1);
  const EmbeddingMatrix b = embed_rows(run.vision_spec, result.model.vision, inputs, 4);
  CHECK(a.values() == b.values());
}

TEST_CASE("run_experiment produces one scored row per strategy and seed") {
  ExperimentConfig cfg;
  cfg.synth = tiny_synth(3);
  cfg.synth.n_train = 128;
  cfg.pretrain.epochs = 5;
  cfg.train.epochs = 2;
  cfg.train.batch_size = 32;
  cfg.train.warmup_steps = 2;
  cfg.towers.vision_hidden_dims = {12, 8};
  cfg.towers.text_hidden_dims = {12, 8};
  cfg.towers.embed_dim = 6;
  cfg.towers.alignment_layers = 2;
  cfg.strategies = {Strategy::frozen};
  cfg.seeds = {1, 2};
  cfg.eval_k = 5;
  cfg.recall_k = 5;

  const ExperimentReport report = run_experiment(cfg);
  REQUIRE(report.rows.size() == 2);
  for (const auto& row : report.rows) {
    CHECK(row.strategy == Strategy::frozen);
    CHECK((row.average_overlap >= 0.0 && row.average_overlap <= 1.0));
    CHECK((row.jaccard >= 0.0 && row.jaccard <= 1.0));
    CHECK((row.recall >= 0.0 && row.recall <= 1.0));
  }
  REQUIRE(report.means.count("frozen") == 1);
  const auto& m = report.means.at("frozen");
  CHECK(m.average_overlap ==
        Approx(0.5 * (report.rows[0].average_overlap + report.rows[1].average_overlap))
            .margin(1e-12));
  CHECK_FALSE(report.format_table().empty());
}

TEST_CASE("vision-tower pretraining toggles a different initialization") {
  ExperimentConfig cfg;
  cfg.synth = tiny_synth(4);
  cfg.synth.n_train = 128;
  cfg.pretrain.epochs = 5;
  cfg.train.epochs = 2;
  cfg.train.batch_size = 32;
  cfg.train.warmup_steps = 2;
  cfg.towers.vision_hidden_dims = {12, 8};
  cfg.towers.text_hidden_dims = {12, 8};
  cfg.towers.embed_dim = 6;
  cfg.strategies = {Strategy::frozen};
  cfg.seeds = {1};
  cfg.eval_k = 5;

  const ExperimentReport random_init = run_experiment(cfg);
  cfg.pretrain_vision = true;
  const ExperimentReport latent_init = run_experiment(cfg);
  REQUIRE(random_init.rows.size() == 1);
  REQUIRE(latent_init.rows.size() == 1);
  CHECK(random_init.rows[0].final_loss != latent_init.rows[0].final_loss);
}
