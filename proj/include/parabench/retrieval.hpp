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

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <vector>

#include <json.hpp>

#include "parabench/embedding.hpp"
#include "parabench/error.hpp"
#include "parabench/numeric.hpp"
#include "parabench/ranked_list.hpp"
#include "parabench/threads.hpp"

namespace parabench::retrieval {

// Exact top-k cosine retrieval. Scores are computed in 64-bit from the
// 32-bit inputs; ties break by ascending gallery index. The output is
// identical to sorting all gallery rows and taking the first k, and the
// k'-prefix of a depth-k list equals the depth-k' result.
//
// Parallelism is across queries only; per-query work is sequential, so the
// result does not depend on the thread count.
inline std::vector<RankedList> cosine_topk(const EmbeddingMatrix& queries,
                                           const EmbeddingMatrix& gallery,
                                           std::size_t k, unsigned threads = 0) {
  if (queries.cols() != gallery.cols()) {
    fail(ErrorCode::dim_mismatch,
         "queries d=" + std::to_string(queries.cols()) + " vs gallery d=" +
             std::to_string(gallery.cols()));
  }
  if (gallery.rows() == 0) fail(ErrorCode::k_out_of_range, "gallery is empty");
  if (k < 1 || k > gallery.rows()) {
    fail(ErrorCode::k_out_of_range, "k=" + std::to_string(k) + " not in [1, " +
                                        std::to_string(gallery.rows()) + "]");
  }

  std::vector<double> gallery_norms(gallery.rows());
  for (std::size_t g = 0; g < gallery.rows(); ++g) {
    gallery_norms[g] = l2_norm64(gallery.row(g));
  }

  std::vector<RankedList> results(queries.rows());
  parallel_for(queries.rows(), threads, [&](std::size_t q) {
    const auto qrow = queries.row(q);
    const double qnorm = l2_norm64(qrow);
    std::vector<double> scores(gallery.rows());
    for (std::size_t g = 0; g < gallery.rows(); ++g) {
      if (qnorm < 1e-12 || gallery_norms[g] < 1e-12) {
        scores[g] = 0.0;
      } else {
        scores[g] = dot64(qrow, gallery.row(g)) / (qnorm * gallery_norms[g]);
      }
    }
    std::vector<std::uint32_t> order(gallery.rows());
    std::iota(order.begin(), order.end(), 0u);
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                        if (scores[a] != scores[b]) return scores[a] > scores[b];
                        return a < b;
                      });
    RankedList& list = results[q];
    list.indices.assign(order.begin(), order.begin() + k);
    list.scores.resize(k);
    for (std::size_t i = 0; i < k; ++i) list.scores[i] = scores[list.indices[i]];
  });
  return results;
}

// One query plus its K expanded variants, all sharing dimensionality d.
struct QueryExpansionSet {
  std::vector<float> original;
  std::vector<std::vector<float>> expansions;
};

// Fuses the original feature with the K expansion features by arithmetic
// averaging over the K+1 rows. The result is intentionally not renormalized:
// cosine ranking is invariant to the row's scale, and leaving the average
// untouched keeps scores (not just ranks) reproducible.
inline std::vector<float> expand_query(const QueryExpansionSet& set) {
  const std::size_t d = set.original.size();
  for (const auto& e : set.expansions) {
    if (e.size() != d) {
      fail(ErrorCode::dim_mismatch, "expansion dimensionality " + std::to_string(e.size()) +
                                        " != query dimensionality " + std::to_string(d));
    }
  }
  const double denom = static_cast<double>(set.expansions.size() + 1);
  std::vector<float> fused(d);
  for (std::size_t c = 0; c < d; ++c) {
    double acc = static_cast<double>(set.original[c]);
    for (const auto& e : set.expansions) acc += static_cast<double>(e[c]);
    fused[c] = static_cast<float>(acc / denom);
  }
  return fused;
}

inline RankedList retrieve_expanded(const QueryExpansionSet& set,
                                    const EmbeddingMatrix& gallery, std::size_t k) {
  EmbeddingMatrix fused(1, set.original.size(), expand_query(set));
  return cosine_topk(fused, gallery, k)[0];
}

// Bulk expansion: expansions holds K rows per query, grouped so query i owns
// rows [i*K, (i+1)*K). K = 0 returns the originals unchanged.
inline EmbeddingMatrix expand_queries(const EmbeddingMatrix& originals,
                                      const EmbeddingMatrix& expansions, std::size_t K) {
  if (K == 0) return originals;
  if (expansions.cols() != originals.cols()) {
    fail(ErrorCode::dim_mismatch, "expansions d=" + std::to_string(expansions.cols()) +
                                      " vs queries d=" + std::to_string(originals.cols()));
  }
  if (expansions.rows() != originals.rows() * K) {
    fail(ErrorCode::shape_mismatch,
         "expansions holds " + std::to_string(expansions.rows()) + " rows, expected " +
             std::to_string(originals.rows() * K));
  }
  std::vector<float> out(originals.rows() * originals.cols());
  for (std::size_t q = 0; q < originals.rows(); ++q) {
    QueryExpansionSet set;
    const auto orig = originals.row(q);
    set.original.assign(orig.begin(), orig.end());
    set.expansions.reserve(K);
    for (std::size_t i = 0; i < K; ++i) {
      const auto row = expansions.row(q * K + i);
      set.expansions.emplace_back(row.begin(), row.end());
    }
    const auto fused = expand_query(set);
    std::copy(fused.begin(), fused.end(), out.begin() + q * originals.cols());
  }
  return EmbeddingMatrix(originals.rows(), originals.cols(), std::move(out));
}

// JSON-lines emission: {"query": i, "indices": [...], "scores": [...]}.
inline void write_rankings_jsonl(std::ostream& os, const std::vector<RankedList>& lists) {
  for (std::size_t q = 0; q < lists.size(); ++q) {
    nlohmann::ordered_json line;
    line["query"] = q;
    line["indices"] = lists[q].indices;
    line["scores"] = lists[q].scores;
    os << line.dump() << '\n';
  }
}

}  // namespace parabench::retrieval
