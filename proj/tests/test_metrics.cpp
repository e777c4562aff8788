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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "parabench/evaluate.hpp"
#include "parabench/metrics.hpp"
#include "parabench/pemb.hpp"
#include "parabench/rng.hpp"

using namespace parabench;
using namespace parabench::metrics;
namespace fs = std::filesystem;

namespace {

RankedList list_of(std::vector<std::uint32_t> indices) {
  RankedList l;
  l.scores.resize(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    l.scores[i] = 1.0 - 0.001 * static_cast<double>(i);
  }
  l.indices = std::move(indices);
  return l;
}

// Naive oracle: materialize both truncated prefixes as sets at every depth.
double ao_oracle(const RankedList& lq, const RankedList& lp, std::size_t k) {
  double acc = 0.0;
  for (std::size_t d = 1; d <= k; ++d) {
    const std::set<std::uint32_t> a(lq.indices.begin(), lq.indices.begin() + d);
    const std::set<std::uint32_t> b(lp.indices.begin(), lp.indices.begin() + d);
    std::size_t inter = 0;
    for (auto x : a) inter += b.count(x);
    acc += static_cast<double>(inter) / static_cast<double>(d);
  }
  return acc / static_cast<double>(k);
}

double js_oracle(const RankedList& lq, const RankedList& lp, std::size_t k) {
  const std::set<std::uint32_t> a(lq.indices.begin(), lq.indices.begin() + k);
  const std::set<std::uint32_t> b(lp.indices.begin(), lp.indices.begin() + k);
  std::set<std::uint32_t> uni = a;
  uni.insert(b.begin(), b.end());
  std::size_t inter = 0;
  for (auto x : a) inter += b.count(x);
  return static_cast<double>(inter) / static_cast<double>(uni.size());
}

// O(n^2) pair-count oracle for tau-a over two permutations of one index set.
double tau_oracle(const RankedList& lq, const RankedList& lp) {
  const std::size_t n = lq.size();
  std::map<std::uint32_t, std::size_t> pos_q, pos_p;
  for (std::size_t i = 0; i < n; ++i) {
    pos_q[lq.indices[i]] = i;
    pos_p[lp.indices[i]] = i;
  }
  std::vector<std::uint32_t> items = lq.indices;
  long long concordant = 0, discordant = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto a = items[i];
      const auto b = items[j];
      const long long dq = static_cast<long long>(pos_q[a]) - static_cast<long long>(pos_q[b]);
      const long long dp = static_cast<long long>(pos_p[a]) - static_cast<long long>(pos_p[b]);
      if (dq * dp > 0) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  return static_cast<double>(concordant - discordant) /
         (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

// Independent route for rho: explicit rank vectors, then plain Pearson.
double rho_oracle(const RankedList& lq, const RankedList& lp) {
  const std::size_t n = lq.size();
  std::map<std::uint32_t, double> rank_q, rank_p;
  for (std::size_t i = 0; i < n; ++i) {
    rank_q[lq.indices[i]] = static_cast<double>(i + 1);
    rank_p[lp.indices[i]] = static_cast<double>(i + 1);
  }
  double mean_rank = 0.5 * static_cast<double>(n + 1);
  double cov = 0.0, var_q = 0.0, var_p = 0.0;
  for (const auto& [item, rq] : rank_q) {
    const double dq = rq - mean_rank;
    const double dp = rank_p[item] - mean_rank;
    cov += dq * dp;
    var_q += dq * dq;
    var_p += dp * dp;
  }
  return cov / std::sqrt(var_q * var_p);
}

// Rank-then-Pearson oracle with explicit average-rank tie handling.
double spearman_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      for (std::size_t t = i; t <= j; ++t) {
        r[order[t]] = 0.5 * static_cast<double>(i + 1 + j + 1);
      }
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    cov += (rx[i] - mx) * (ry[i] - my);
    vx += (rx[i] - mx) * (rx[i] - mx);
    vy += (ry[i] - my) * (ry[i] - my);
  }
  return cov / std::sqrt(vx * vy);
}

std::pair<RankedList, RankedList> random_pair(std::size_t universe, std::size_t len,
                                              Rng& rng) {
  auto draw = [&] {
    std::vector<std::uint32_t> p(universe);
    std::iota(p.begin(), p.end(), 0u);
    for (std::size_t i = p.size(); i > 1; --i) {
      std::swap(p[i - 1], p[rng.next_index(i)]);
    }
    p.resize(len);
    return p;
  };
  return {list_of(draw()), list_of(draw())};
}

fs::path make_temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() /
                       ("parabench_metrics_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("AO is 1 for identical lists and 0 for disjoint lists") {
  const auto l = list_of({4, 2, 9, 7});
  CHECK(average_overlap(l, l, 4) == 1.0);
  CHECK(average_overlap(list_of({0, 1, 2}), list_of({5, 6, 7}), 3) == 0.0);
}

TEST_CASE("AO on the worked three-element pair is 5/9") {
  const auto lq = list_of({10, 11, 12});  // a, b, c
  const auto lp = list_of({11, 10, 13});  // b, a, d
  CHECK(average_overlap(lq, lp, 3) == Approx(5.0 / 9.0).margin(1e-12));
}

TEST_CASE("JS ignores order inside the top-k") {
  CHECK(jaccard_at_k(list_of({1, 2, 3}), list_of({3, 1, 2}), 3) == 1.0);
  CHECK(jaccard_at_k(list_of({1, 2, 3}), list_of({4, 5, 6}), 3) == 0.0);
  CHECK(jaccard_at_k(list_of({10, 11, 12}), list_of({11, 10, 13}), 3) == Approx(0.5));
}

TEST_CASE("AO and JS match the naive set-operations oracle") {
  Rng rng(500);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t k = 1 + rng.next_index(20);
    const std::size_t universe = k + rng.next_index(20);
    const std::size_t len = k + rng.next_index(universe - k + 1);
    const auto [lq, lp] = random_pair(universe, len, rng);
    CHECK(average_overlap(lq, lp, k) == Approx(ao_oracle(lq, lp, k)).margin(1e-12));
    CHECK(jaccard_at_k(lq, lp, k) == Approx(js_oracle(lq, lp, k)).margin(1e-12));
  }
}

TEST_CASE("AO and JS are symmetric and bounded") {
  Rng rng(501);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng.next_index(15);
    const std::size_t universe = k + rng.next_index(25);
    const auto [lq, lp] = random_pair(universe, k, rng);
    const double ao = average_overlap(lq, lp, k);
    const double js = jaccard_at_k(lq, lp, k);
    CHECK(ao == average_overlap(lp, lq, k));
    CHECK(js == jaccard_at_k(lp, lq, k));
    CHECK((ao >= 0.0 && ao <= 1.0));
    CHECK((js >= 0.0 && js <= 1.0));
  }
}

TEST_CASE("AO equals 1 only for element-wise identical prefixes") {
  // Same top-k set in a different order: JS says 1, AO says less.
  const auto lq = list_of({1, 2, 3, 4});
  const auto lp = list_of({2, 1, 3, 4});
  CHECK(jaccard_at_k(lq, lp, 4) == 1.0);
  CHECK(average_overlap(lq, lp, 4) < 1.0);
  CHECK(average_overlap(lq, lq, 4) == 1.0);
}

TEST_CASE("single shared element at depth i gives the closed-form AO") {
  // Lists overlap in exactly one element placed at depth i in both; the
  // closed form is (1/k) * sum_{d=i..k} 1/d, strictly decreasing in i.
  for (std::size_t k = 1; k <= 20; ++k) {
    double previous = 2.0;
    for (std::size_t i = 1; i <= k; ++i) {
      std::vector<std::uint32_t> a(k), b(k);
      for (std::size_t d = 0; d < k; ++d) {
        a[d] = static_cast<std::uint32_t>(100 + d);
        b[d] = static_cast<std::uint32_t>(200 + d);
      }
      a[i - 1] = 999;
      b[i - 1] = 999;
      double closed = 0.0;
      for (std::size_t d = i; d <= k; ++d) closed += 1.0 / static_cast<double>(d);
      closed /= static_cast<double>(k);
      const double ao = average_overlap(list_of(a), list_of(b), k);
      CHECK(ao == Approx(closed).margin(1e-15));
      CHECK(ao < previous);
      previous = ao;
    }
  }
}

TEST_CASE("AO and JS validate their inputs") {
  const auto l3 = list_of({1, 2, 3});
  try {
    average_overlap(l3, l3, 4);
    FAIL("expected ListTooShort");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::list_too_short);
  }
  try {
    average_overlap(l3, l3, 0);
    FAIL("expected InvalidK");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_k);
  }
  try {
    average_overlap(list_of({1, 1, 2}), l3, 3);
    FAIL("expected DuplicateIndex");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::duplicate_index);
  }
}

TEST_CASE("tau and rho agree with hand values on permutations") {
  const auto id = list_of({0, 1, 2, 3});
  CHECK(kendall_tau(id, id) == 1.0);
  CHECK(spearman_rank(id, id) == 1.0);
  const auto rev = list_of({3, 2, 1, 0});
  CHECK(kendall_tau(id, rev) == -1.0);
  CHECK(spearman_rank(id, rev) == -1.0);
  const auto swapped = list_of({1, 0, 2, 3});
  CHECK(kendall_tau(id, swapped) == Approx(2.0 / 3.0).margin(1e-12));
}

TEST_CASE("tau and rho match independent oracles on random permutations") {
  Rng rng(502);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.next_index(40);
    const auto [lq, lp] = random_pair(n, n, rng);
    CHECK(kendall_tau(lq, lp) == Approx(tau_oracle(lq, lp)).margin(1e-12));
    CHECK(spearman_rank(lq, lp) == Approx(rho_oracle(lq, lp)).margin(1e-12));
  }
}

TEST_CASE("tau rejects lists over different index sets") {
  try {
    kendall_tau(list_of({0, 1, 2}), list_of({0, 1, 5}));
    FAIL("expected NotSamePermutationDomain");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::not_same_permutation_domain);
  }
}

TEST_CASE("recall@k is a per-query hit indicator") {
  const auto ranked = list_of({7, 3, 9, 1, 5, 2});
  const std::vector<std::uint32_t> at_rank_1 = {7};
  const std::vector<std::uint32_t> at_rank_6 = {2};
  const std::vector<std::uint32_t> pair = {3, 9};
  CHECK(recall_at_k(ranked, at_rank_1, 5) == 1.0);
  CHECK(recall_at_k(ranked, at_rank_6, 5) == 0.0);
  CHECK(recall_at_k(ranked, pair, 5) == 1.0);
  try {
    recall_at_k(ranked, std::vector<std::uint32_t>{}, 5);
    FAIL("expected EmptyRelevanceSet");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::empty_relevance_set);
  }
}

TEST_CASE("rsum sums six percent-scale recalls") {
  CHECK(rsum({100, 100, 100}, {100, 100, 100}) == 600.0);
  CHECK(rsum({0, 0, 0}, {0, 0, 0}) == 0.0);
  // Component values here are illustrative; the known published total for a
  // clean-COCO CLIP evaluation is 361.8.
  CHECK(rsum({30.4, 56.0, 66.9}, {41.3, 70.2, 97.0}) == Approx(361.8).margin(1e-9));
  try {
    rsum({101, 0, 0}, {0, 0, 0});
    FAIL("expected OutOfRange");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::out_of_range);
  }
}

TEST_CASE("top-k accuracy checks the label against the prototype ranking") {
  const auto ranked = list_of({4, 8, 0, 2, 6});
  CHECK(topk_accuracy(ranked, 4, 1) == 1.0);
  CHECK(topk_accuracy(ranked, 8, 1) == 0.0);
  CHECK(topk_accuracy(ranked, 8, 5) == 1.0);
  try {
    topk_accuracy(ranked, 12, 1, 10);
    FAIL("expected LabelOutOfRange");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::label_out_of_range);
  }
}

TEST_CASE("pearson and spearman hit the exact extremes") {
  LabeledSimilarityPairs pairs;
  pairs.gold = {0.0, 1.0, 2.5, 4.0, 5.0};
  pairs.predictions = pairs.gold;
  CHECK(pearson(pairs) == Approx(1.0).margin(1e-12));
  CHECK(spearman(pairs) == Approx(1.0).margin(1e-12));
  for (auto& p : pairs.predictions) p = -p;
  CHECK(pearson(pairs) == Approx(-1.0).margin(1e-12));
  CHECK(spearman(pairs) == Approx(-1.0).margin(1e-12));
}

TEST_CASE("spearman gives tied values their average rank") {
  LabeledSimilarityPairs pairs;
  pairs.gold = {1.0, 2.0, 2.0, 4.0};
  pairs.predictions = {10.0, 20.0, 20.0, 40.0};
  CHECK(spearman(pairs) == Approx(1.0).margin(1e-12));
}

TEST_CASE("pearson rejects constant sequences") {
  LabeledSimilarityPairs pairs;
  pairs.gold = {1.0, 1.0, 1.0};
  pairs.predictions = {0.5, 0.7, 0.9};
  try {
    pearson(pairs);
    FAIL("expected ZeroVariance");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::zero_variance);
  }
}

TEST_CASE("spearman matches the rank-then-pearson oracle with ties") {
  Rng rng(503);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 3 + rng.next_index(40);
    LabeledSimilarityPairs pairs;
    pairs.gold.resize(n);
    pairs.predictions.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse grids force ties on both sides.
      pairs.gold[i] = static_cast<double>(rng.next_index(6));
      pairs.predictions[i] = 0.25 * static_cast<double>(rng.next_index(9));
    }
    // Skip the degenerate all-equal draws.
    const bool const_gold =
        std::all_of(pairs.gold.begin(), pairs.gold.end(),
                    [&](double v) { return v == pairs.gold.front(); });
    const bool const_pred =
        std::all_of(pairs.predictions.begin(), pairs.predictions.end(),
                    [&](double v) { return v == pairs.predictions.front(); });
    if (const_gold || const_pred) continue;
    CHECK(spearman(pairs) ==
          Approx(spearman_oracle(pairs.predictions, pairs.gold)).margin(1e-12));
  }
}

TEST_CASE("spearman is invariant under strictly increasing transforms") {
  Rng rng(504);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng.next_index(30);
    LabeledSimilarityPairs pairs;
    pairs.gold.resize(n);
    pairs.predictions.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      pairs.gold[i] = static_cast<double>(rng.next_index(6));
      pairs.predictions[i] = rng.next_uniform(-3.0, 3.0);
    }
    if (std::all_of(pairs.gold.begin(), pairs.gold.end(),
                    [&](double v) { return v == pairs.gold.front(); })) {
      continue;
    }
    const double base = spearman(pairs);
    LabeledSimilarityPairs transformed = pairs;
    for (auto& p : transformed.predictions) p = std::exp(p) + p * p * p;
    CHECK(spearman(transformed) == base);
  }
}

TEST_CASE("paraphrase benchmark on identical query files scores exactly 1") {
  const fs::path dir = make_temp_dir("para_identical");
  Rng rng(505);
  std::vector<float> queries(12 * 4), gallery(50 * 4);
  for (auto& v : queries) v = static_cast<float>(rng.next_gaussian());
  for (auto& v : gallery) v = static_cast<float>(rng.next_gaussian());
  save_embeddings(EmbeddingMatrix(12, 4, queries), dir / "q.pemb");
  save_embeddings(EmbeddingMatrix(12, 4, queries), dir / "p.pemb");
  save_embeddings(EmbeddingMatrix(50, 4, gallery), dir / "g.pemb");

  BenchmarkManifest m;
  m.kind = BenchmarkKind::paraphrase;
  m.queries = dir / "q.pemb";
  m.paraphrases = dir / "p.pemb";
  m.gallery = dir / "g.pemb";
  const auto result = eval_paraphrase_benchmark(m, 10);
  CHECK(result.average_overlap.aggregate == 1.0);
  CHECK(result.jaccard.aggregate == 1.0);
  CHECK(result.average_overlap.count == 12);
  fs::remove_all(dir);
}

TEST_CASE("orthogonal query/paraphrase pairs land near the random-overlap baseline") {
  // Queries and paraphrases occupy disjoint coordinate blocks, so their
  // rankings over a random gallery are independent draws.
  const fs::path dir = make_temp_dir("para_orth");
  const std::size_t pairs = 40, d = 80, n_gallery = 400, k = 10;
  Rng rng(506);
  std::vector<float> queries(pairs * d, 0.0f), paraphrases(pairs * d, 0.0f);
  for (std::size_t i = 0; i < pairs; ++i) {
    queries[i * d + i] = 1.0f;
    paraphrases[i * d + pairs + i] = 1.0f;
  }
  std::vector<float> gallery(n_gallery * d);
  for (auto& v : gallery) v = static_cast<float>(rng.next_gaussian());
  save_embeddings(EmbeddingMatrix(pairs, d, queries), dir / "q.pemb");
  save_embeddings(EmbeddingMatrix(pairs, d, paraphrases), dir / "p.pemb");
  save_embeddings(EmbeddingMatrix(n_gallery, d, gallery), dir / "g.pemb");

  BenchmarkManifest m;
  m.kind = BenchmarkKind::paraphrase;
  m.queries = dir / "q.pemb";
  m.paraphrases = dir / "p.pemb";
  m.gallery = dir / "g.pemb";
  const auto result = eval_paraphrase_benchmark(m, k);

  // Monte-Carlo oracle: expected AO/JS of two independent uniform k-prefixes.
  Rng mc(507);
  double ao_sum = 0.0, js_sum = 0.0;
  const int mc_trials = 3000;
  for (int t = 0; t < mc_trials; ++t) {
    const auto [lq, lp] = random_pair(n_gallery, k, mc);
    ao_sum += ao_oracle(lq, lp, k);
    js_sum += js_oracle(lq, lp, k);
  }
  const double ao_baseline = ao_sum / mc_trials;
  const double js_baseline = js_sum / mc_trials;
  CHECK(std::abs(result.average_overlap.aggregate - ao_baseline) < 0.05);
  CHECK(std::abs(result.jaccard.aggregate - js_baseline) < 0.05);
  fs::remove_all(dir);
}

TEST_CASE("retrieval, classification and sts evaluators run end to end") {
  const fs::path dir = make_temp_dir("eval_kinds");
  // Two queries whose nearest gallery rows are 1 and 0 respectively.
  save_embeddings(EmbeddingMatrix(2, 2, {0.1f, 1.0f, 1.0f, 0.1f}), dir / "q.pemb");
  save_embeddings(EmbeddingMatrix(3, 2, {1, 0, 0, 1, -1, -1}), dir / "g.pemb");

  BenchmarkManifest retrieval_manifest;
  retrieval_manifest.kind = BenchmarkKind::retrieval;
  retrieval_manifest.queries = dir / "q.pemb";
  retrieval_manifest.gallery = dir / "g.pemb";
  retrieval_manifest.relevance = {{1}, {2}};
  const auto recall = eval_retrieval_benchmark(retrieval_manifest, 1);
  CHECK(recall.aggregate == Approx(0.5));  // query 0 hits, query 1 misses

  BenchmarkManifest cls;
  cls.kind = BenchmarkKind::classification;
  cls.queries = dir / "q.pemb";
  cls.class_prototypes = dir / "g.pemb";
  cls.labels = {1, 0};
  CHECK(eval_classification_benchmark(cls, 1).aggregate == 1.0);

  BenchmarkManifest sts;
  sts.kind = BenchmarkKind::sts;
  sts.queries = dir / "q.pemb";
  sts.paraphrases = dir / "g.pemb";
  sts.gold = {5.0, 1.0};
  // Two pairs: cosine(q0, g0) < cosine(q1, g1) would flip the sign.
  try {
    eval_sts_benchmark(sts);
    FAIL("expected BadManifest: paraphrases row count differs");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::bad_manifest);
  }

  save_embeddings(EmbeddingMatrix(2, 2, {0.1f, 1.0f, -1.0f, -0.1f}), dir / "p.pemb");
  sts.paraphrases = dir / "p.pemb";
  const auto result = eval_sts_benchmark(sts);
  CHECK(result.count == 2);
  CHECK(result.pearson == Approx(1.0).margin(1e-12));   // two points
  CHECK(result.spearman == Approx(1.0).margin(1e-12));  // order agrees
  fs::remove_all(dir);
}
