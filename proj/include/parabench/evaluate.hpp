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

#include "parabench/embedding.hpp"
#include "parabench/manifest.hpp"
#include "parabench/metrics.hpp"
#include "parabench/pemb.hpp"
#include "parabench/report.hpp"
#include "parabench/retrieval.hpp"
#include "parabench/threads.hpp"

namespace parabench::metrics {

namespace detail {

inline void require_valid(const BenchmarkManifest& m) {
  const auto summary = validate_manifest(m);
  if (!summary.ok()) {
    std::string joined;
    for (const auto& v : summary.violations) {
      if (!joined.empty()) joined += "; ";
      joined += v;
    }
    fail(ErrorCode::bad_manifest, joined);
  }
}

inline EmbeddingMatrix load_side(const std::filesystem::path& path, bool normalize) {
  EmbeddingMatrix m = load_embeddings(path);
  return normalize ? l2_normalize(m) : m;
}

}  // namespace detail

struct ParaphraseEval {
  MetricReport average_overlap;
  MetricReport jaccard;
};

// Paraphrase-consistency protocol: retrieve top-k for every query and its
// row-aligned paraphrase over the shared gallery, then score each pair with
// AO@k and JS@k.
inline ParaphraseEval eval_paraphrase_benchmark(const BenchmarkManifest& manifest,
                                                std::size_t k, unsigned threads = 0) {
  detail::require_valid(manifest);
  const auto queries = detail::load_side(manifest.queries, manifest.normalize);
  const auto paraphrases = detail::load_side(manifest.paraphrases, manifest.normalize);
  const auto gallery = detail::load_side(manifest.gallery, manifest.normalize);

  const auto lq = retrieval::cosine_topk(queries, gallery, k, threads);
  const auto lp = retrieval::cosine_topk(paraphrases, gallery, k, threads);

  std::vector<double> ao(lq.size()), js(lq.size());
  parallel_for(lq.size(), threads, [&](std::size_t i) {
    ao[i] = metrics::average_overlap(lq[i], lp[i], k);
    js[i] = metrics::jaccard_at_k(lq[i], lp[i], k);
  });

  ParaphraseEval out;
  out.average_overlap =
      MetricReport::from_values("average_overlap", static_cast<int>(k), std::move(ao));
  out.jaccard = MetricReport::from_values("jaccard", static_cast<int>(k), std::move(js));
  return out;
}

inline MetricReport eval_retrieval_benchmark(const BenchmarkManifest& manifest,
                                             std::size_t k, unsigned threads = 0) {
  detail::require_valid(manifest);
  const auto queries = detail::load_side(manifest.queries, manifest.normalize);
  const auto gallery = detail::load_side(manifest.gallery, manifest.normalize);
  const auto ranked = retrieval::cosine_topk(queries, gallery, k, threads);
  std::vector<double> hits(ranked.size());
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    hits[i] = metrics::recall_at_k(ranked[i], manifest.relevance[i], k);
  }
  return MetricReport::from_values("recall", static_cast<int>(k), std::move(hits));
}

inline MetricReport eval_classification_benchmark(const BenchmarkManifest& manifest,
                                                  std::size_t k, unsigned threads = 0) {
  detail::require_valid(manifest);
  const auto queries = detail::load_side(manifest.queries, manifest.normalize);
  const auto prototypes = detail::load_side(manifest.class_prototypes, manifest.normalize);
  const auto ranked = retrieval::cosine_topk(queries, prototypes, k, threads);
  std::vector<double> hits(ranked.size());
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    hits[i] = metrics::topk_accuracy(ranked[i], manifest.labels[i], k, prototypes.rows());
  }
  return MetricReport::from_values("topk_accuracy", static_cast<int>(k), std::move(hits));
}

// STS correlations do not fit MetricReport (its aggregate is a mean), so the
// result carries the two coefficients plus the per-pair predictions.
struct StsEval {
  double pearson = 0.0;
  double spearman = 0.0;
  std::size_t count = 0;
  std::vector<double> predictions;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["metric"] = "sts";
    j["count"] = count;
    j["pearson"] = pearson;
    j["spearman"] = spearman;
    j["predictions"] = predictions;
    return j;
  }
};

// STS protocol: predicted similarity is the 64-bit cosine of the two
// sentence embeddings in each row-aligned pair, correlated against the
// human gold labels.
inline StsEval eval_sts_benchmark(const BenchmarkManifest& manifest) {
  detail::require_valid(manifest);
  const auto a = detail::load_side(manifest.queries, manifest.normalize);
  const auto b = detail::load_side(manifest.paraphrases, manifest.normalize);

  LabeledSimilarityPairs pairs;
  pairs.gold = manifest.gold;
  pairs.predictions.resize(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    pairs.predictions[i] = cosine64(a.row(i), b.row(i));
  }

  StsEval out;
  out.pearson = pearson(pairs);
  out.spearman = spearman(pairs);
  out.count = pairs.predictions.size();
  out.predictions = std::move(pairs.predictions);
  return out;
}

}  // namespace parabench::metrics
