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
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "parabench/error.hpp"
#include "parabench/numeric.hpp"
#include "parabench/ranked_list.hpp"

namespace parabench::metrics {

namespace detail {

inline void require_depth(const RankedList& lq, const RankedList& lp, std::size_t k) {
  if (k < 1) fail(ErrorCode::invalid_k, "k must be >= 1");
  if (lq.size() < k || lp.size() < k) {
    fail(ErrorCode::list_too_short,
         "lists of length " + std::to_string(lq.size()) + " and " +
             std::to_string(lp.size()) + " cannot be truncated at depth " +
             std::to_string(k));
  }
  auto check_distinct = [](const RankedList& l, std::size_t depth) {
    std::unordered_set<std::uint32_t> seen;
    seen.reserve(depth);
    for (std::size_t i = 0; i < depth; ++i) {
      if (!seen.insert(l.indices[i]).second) {
        fail(ErrorCode::duplicate_index,
             "index " + std::to_string(l.indices[i]) + " repeats within the top-" +
                 std::to_string(depth));
      }
    }
  };
  check_distinct(lq, k);
  check_distinct(lp, k);
}

// Positions of lq's items inside lp, after verifying both lists are
// permutations of the same index set.
inline std::vector<std::size_t> cross_positions(const RankedList& lq,
                                                const RankedList& lp) {
  if (lq.size() != lp.size()) {
    fail(ErrorCode::not_same_permutation_domain,
         "lists of length " + std::to_string(lq.size()) + " and " +
             std::to_string(lp.size()) + " are not permutations of one set");
  }
  std::unordered_map<std::uint32_t, std::size_t> pos_in_p;
  pos_in_p.reserve(lp.size());
  for (std::size_t i = 0; i < lp.size(); ++i) {
    if (!pos_in_p.emplace(lp.indices[i], i).second) {
      fail(ErrorCode::duplicate_index,
           "index " + std::to_string(lp.indices[i]) + " repeats");
    }
  }
  std::vector<std::size_t> sigma(lq.size());
  std::unordered_set<std::uint32_t> seen;
  seen.reserve(lq.size());
  for (std::size_t i = 0; i < lq.size(); ++i) {
    if (!seen.insert(lq.indices[i]).second) {
      fail(ErrorCode::duplicate_index,
           "index " + std::to_string(lq.indices[i]) + " repeats");
    }
    const auto it = pos_in_p.find(lq.indices[i]);
    if (it == pos_in_p.end()) {
      fail(ErrorCode::not_same_permutation_domain,
           "index " + std::to_string(lq.indices[i]) + " is missing from the other list");
    }
    sigma[i] = it->second;
  }
  return sigma;
}

// Merge-sort inversion count.
inline std::uint64_t count_inversions(std::vector<std::size_t>& a) {
  if (a.size() < 2) return 0;
  std::vector<std::size_t> buf(a.size());
  std::uint64_t inversions = 0;
  for (std::size_t width = 1; width < a.size(); width *= 2) {
    for (std::size_t lo = 0; lo + width < a.size(); lo += 2 * width) {
      const std::size_t mid = lo + width;
      const std::size_t hi = std::min(a.size(), mid + width);
      std::size_t i = lo, j = mid, out = lo;
      while (i < mid && j < hi) {
        if (a[i] <= a[j]) {
          buf[out++] = a[i++];
        } else {
          inversions += mid - i;
          buf[out++] = a[j++];
        }
      }
      while (i < mid) buf[out++] = a[i++];
      while (j < hi) buf[out++] = a[j++];
      std::copy(buf.begin() + lo, buf.begin() + hi, a.begin() + lo);
    }
  }
  return inversions;
}

// Average fractional ranks (1-based); tied values share the mean of their
// positions. The standard convention for rank correlations with ties.
inline std::vector<double> fractional_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] < values[b];
    return a < b;
  });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

// Top-k average overlap: the mean over depths d = 1..k of the prefix
// intersection fraction |L_q[1:d] n L_p[1:d]| / d. Top-weighted (early hits
// count at every depth) and symmetric in its arguments; in [0, 1].
//
// The overlap is advanced incrementally: a set tracks elements seen in
// exactly one list so far, so each depth step is O(1) expected.
inline double average_overlap(const RankedList& lq, const RankedList& lp, std::size_t k) {
  detail::require_depth(lq, lp, k);
  std::unordered_set<std::uint32_t> seen_once;
  seen_once.reserve(2 * k);
  std::size_t overlap = 0;
  double acc = 0.0;
  for (std::size_t d = 0; d < k; ++d) {
    const std::uint32_t a = lq.indices[d];
    const std::uint32_t b = lp.indices[d];
    if (a == b) {
      ++overlap;
    } else {
      if (seen_once.erase(a) == 1) {
        ++overlap;
      } else {
        seen_once.insert(a);
      }
      if (seen_once.erase(b) == 1) {
        ++overlap;
      } else {
        seen_once.insert(b);
      }
    }
    acc += static_cast<double>(overlap) / static_cast<double>(d + 1);
  }
  return acc / static_cast<double>(k);
}

// Top-k Jaccard similarity: |top-k intersection| / |top-k union|. Insensitive
// to ordering inside the two top-k sets; in [0, 1].
inline double jaccard_at_k(const RankedList& lq, const RankedList& lp, std::size_t k) {
  detail::require_depth(lq, lp, k);
  std::unordered_set<std::uint32_t> in_p(lp.indices.begin(), lp.indices.begin() + k);
  std::size_t intersection = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (in_p.count(lq.indices[i]) != 0) ++intersection;
  }
  const std::size_t union_size = 2 * k - intersection;
  return static_cast<double>(intersection) / static_cast<double>(union_size);
}

// Kendall tau-a over two full lists that permute the same index set. Our
// retrieval lists are tie-free by construction, so tau-a applies.
inline double kendall_tau(const RankedList& lq, const RankedList& lp) {
  auto sigma = detail::cross_positions(lq, lp);
  const std::size_t n = sigma.size();
  if (n < 2) fail(ErrorCode::list_too_short, "tau needs at least 2 items");
  const std::uint64_t inversions = detail::count_inversions(sigma);
  const double total_pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return 1.0 - static_cast<double>(inversions) / total_pairs * 2.0;
}

// Spearman's rho over two full lists that permute the same index set.
inline double spearman_rank(const RankedList& lq, const RankedList& lp) {
  const auto sigma = detail::cross_positions(lq, lp);
  const std::size_t n = sigma.size();
  if (n < 2) fail(ErrorCode::list_too_short, "rho needs at least 2 items");
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(sigma[i]);
    sum_sq += d * d;
  }
  const double nn = static_cast<double>(n);
  return 1.0 - 6.0 * sum_sq / (nn * (nn * nn - 1.0));
}

// Per-query hit indicator: 1 if any relevant index appears in the top-k.
inline double recall_at_k(const RankedList& ranked, std::span<const std::uint32_t> relevant,
                          std::size_t k) {
  if (relevant.empty()) fail(ErrorCode::empty_relevance_set, "relevance set is empty");
  if (k < 1) fail(ErrorCode::invalid_k, "k must be >= 1");
  if (k > ranked.size()) {
    fail(ErrorCode::list_too_short, "ranked list of length " + std::to_string(ranked.size()) +
                                        " has no depth " + std::to_string(k));
  }
  std::unordered_set<std::uint32_t> wanted(relevant.begin(), relevant.end());
  for (std::size_t i = 0; i < k; ++i) {
    if (wanted.count(ranked.indices[i]) != 0) return 1.0;
  }
  return 0.0;
}

// Sum of image-retrieval and text-retrieval recalls at k in {1, 5, 10},
// in percent units; range [0, 600].
inline double rsum(const std::array<double, 3>& image_retrieval,
                   const std::array<double, 3>& text_retrieval) {
  double total = 0.0;
  for (double r : image_retrieval) {
    if (!(r >= 0.0 && r <= 100.0)) {
      fail(ErrorCode::out_of_range, "recall " + std::to_string(r) + " outside [0, 100]");
    }
    total += r;
  }
  for (double r : text_retrieval) {
    if (!(r >= 0.0 && r <= 100.0)) {
      fail(ErrorCode::out_of_range, "recall " + std::to_string(r) + " outside [0, 100]");
    }
    total += r;
  }
  return total;
}

// Per-query indicator: 1 iff the true class label is ranked within the
// top-k class prototypes. num_classes = 0 skips the range check.
inline double topk_accuracy(const RankedList& ranked, std::uint32_t label, std::size_t k,
                            std::size_t num_classes = 0) {
  if (num_classes > 0 && label >= num_classes) {
    fail(ErrorCode::label_out_of_range, "label " + std::to_string(label) + " >= " +
                                            std::to_string(num_classes) + " classes");
  }
  if (k < 1) fail(ErrorCode::invalid_k, "k must be >= 1");
  if (k > ranked.size()) {
    fail(ErrorCode::list_too_short, "ranked list of length " + std::to_string(ranked.size()) +
                                        " has no depth " + std::to_string(k));
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (ranked.indices[i] == label) return 1.0;
  }
  return 0.0;
}

// Predicted similarity scores paired with human labels on the 0-5 scale.
struct LabeledSimilarityPairs {
  std::vector<double> predictions;
  std::vector<double> gold;

  void validate() const {
    if (predictions.size() != gold.size()) {
      fail(ErrorCode::shape_mismatch, "predictions and gold differ in length");
    }
    if (predictions.size() < 2) {
      fail(ErrorCode::list_too_short, "need at least 2 pairs");
    }
    for (double p : predictions) {
      if (std::isnan(p)) fail(ErrorCode::non_finite_value, "NaN prediction");
    }
    for (double g : gold) {
      if (!(g >= 0.0 && g <= 5.0)) {
        fail(ErrorCode::out_of_range, "gold label " + std::to_string(g) + " outside [0, 5]");
      }
    }
  }
};

namespace detail {

inline double pearson_of(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  const double mx = mean(x);
  const double my = mean(y);
  std::vector<double> xy(n), xx(n), yy(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    xy[i] = dx * dy;
    xx[i] = dx * dx;
    yy[i] = dy * dy;
  }
  const double var_x = pairwise_sum(xx);
  const double var_y = pairwise_sum(yy);
  if (var_x <= 0.0 || var_y <= 0.0) {
    fail(ErrorCode::zero_variance, "correlation undefined for a constant sequence");
  }
  return pairwise_sum(xy) / std::sqrt(var_x * var_y);
}

}  // namespace detail

// Product-moment correlation of predictions against gold; in [-1, 1].
inline double pearson(const LabeledSimilarityPairs& pairs) {
  pairs.validate();
  return detail::pearson_of(pairs.predictions, pairs.gold);
}

// Spearman correlation: Pearson over average fractional ranks, so tied
// values share their mean rank.
inline double spearman(const LabeledSimilarityPairs& pairs) {
  pairs.validate();
  const auto rp = detail::fractional_ranks(pairs.predictions);
  const auto rg = detail::fractional_ranks(pairs.gold);
  return detail::pearson_of(rp, rg);
}

}  // namespace parabench::metrics
