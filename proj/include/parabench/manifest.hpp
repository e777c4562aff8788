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
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "parabench/error.hpp"
#include "parabench/pemb.hpp"

namespace parabench {

enum class BenchmarkKind { paraphrase, retrieval, classification, sts };

inline const char* to_string(BenchmarkKind kind) {
  switch (kind) {
    case BenchmarkKind::paraphrase: return "paraphrase";
    case BenchmarkKind::retrieval: return "retrieval";
    case BenchmarkKind::classification: return "classification";
    case BenchmarkKind::sts: return "sts";
  }
  return "unknown";
}

inline BenchmarkKind benchmark_kind_from_string(const std::string& s) {
  if (s == "paraphrase") return BenchmarkKind::paraphrase;
  if (s == "retrieval") return BenchmarkKind::retrieval;
  if (s == "classification") return BenchmarkKind::classification;
  if (s == "sts") return BenchmarkKind::sts;
  fail(ErrorCode::bad_manifest, "unknown benchmark kind \"" + s + "\"");
}

// Declarative description of one evaluation. Pairing is implicit: row i of
// queries corresponds to row i of paraphrases / labels / gold. Relative
// paths in the JSON resolve against the manifest's own directory.
//
// JSON schema (fields by kind; unknown keys are rejected):
//   kind        "paraphrase" | "retrieval" | "classification" | "sts"
//   queries     path                       (all kinds)
//   paraphrases path                       (paraphrase, sts)
//   gallery     path                       (paraphrase, retrieval)
//   class_prototypes path                  (classification)
//   expansions  path, optional             (grouped K rows per query)
//   expansions_per_query integer           (required with expansions)
//   relevance   [[gallery indices], ...]   (retrieval; optional elsewhere)
//   labels      [class index, ...]         (classification)
//   gold        [similarity 0..5, ...]     (sts)
//   normalize   bool, default true
struct BenchmarkManifest {
  BenchmarkKind kind = BenchmarkKind::paraphrase;
  std::filesystem::path queries;
  std::filesystem::path paraphrases;
  std::filesystem::path gallery;
  std::filesystem::path class_prototypes;
  std::filesystem::path expansions;
  std::size_t expansions_per_query = 0;
  std::vector<std::vector<std::uint32_t>> relevance;
  std::vector<std::uint32_t> labels;
  std::vector<double> gold;
  bool normalize = true;

  static BenchmarkManifest from_json(const nlohmann::json& j,
                                     const std::filesystem::path& base_dir);
  static BenchmarkManifest from_json_file(const std::filesystem::path& path);
};

inline BenchmarkManifest BenchmarkManifest::from_json(
    const nlohmann::json& j, const std::filesystem::path& base_dir) {
  static const std::vector<std::string> known = {
      "kind",       "queries",   "paraphrases", "gallery",
      "class_prototypes", "expansions", "expansions_per_query",
      "relevance",  "labels",    "gold",        "normalize"};
  if (!j.is_object()) fail(ErrorCode::bad_manifest, "manifest is not a JSON object");
  for (const auto& item : j.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      fail(ErrorCode::bad_manifest, "unknown manifest key \"" + item.key() + "\"");
    }
  }

  BenchmarkManifest m;
  try {
    m.kind = benchmark_kind_from_string(j.at("kind").get<std::string>());
    auto path_of = [&](const char* key) -> std::filesystem::path {
      if (!j.contains(key)) return {};
      std::filesystem::path p = j.at(key).get<std::string>();
      return p.is_absolute() ? p : base_dir / p;
    };
    m.queries = path_of("queries");
    m.paraphrases = path_of("paraphrases");
    m.gallery = path_of("gallery");
    m.class_prototypes = path_of("class_prototypes");
    m.expansions = path_of("expansions");
    if (j.contains("expansions_per_query")) {
      m.expansions_per_query = j.at("expansions_per_query").get<std::size_t>();
    }
    if (j.contains("relevance")) {
      m.relevance = j.at("relevance").get<std::vector<std::vector<std::uint32_t>>>();
    }
    if (j.contains("labels")) {
      m.labels = j.at("labels").get<std::vector<std::uint32_t>>();
    }
    if (j.contains("gold")) m.gold = j.at("gold").get<std::vector<double>>();
    if (j.contains("normalize")) m.normalize = j.at("normalize").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::bad_manifest, e.what());
  }
  return m;
}

inline BenchmarkManifest BenchmarkManifest::from_json_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::bad_manifest, std::string("JSON parse error: ") + e.what());
  }
  return from_json(j, path.parent_path());
}

struct ValidationSummary {
  std::size_t queries = 0;
  std::size_t pairs = 0;
  std::size_t gallery_rows = 0;
  std::size_t dim = 0;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

namespace detail {

struct FileFacts {
  bool present = false;
  pemb::Header header;
};

inline FileFacts inspect(const std::filesystem::path& path, const char* role,
                         ValidationSummary& summary) {
  FileFacts facts;
  if (path.empty()) return facts;
  std::error_code ec;
  if (!std::filesystem::exists(path, ec) || ec) {
    summary.violations.push_back(std::string(role) + " file missing: " + path.string());
    return facts;
  }
  try {
    facts.header = pemb::peek_header(path);
  } catch (const Error& e) {
    summary.violations.push_back(std::string(role) + ": " + e.what());
    return facts;
  }
  const auto size = std::filesystem::file_size(path, ec);
  const std::uintmax_t expected =
      pemb::kHeaderBytes + std::uintmax_t{4} * facts.header.rows * facts.header.dim;
  if (!ec && size != expected) {
    summary.violations.push_back(std::string(role) + ": file size " + std::to_string(size) +
                                 " != header-implied " + std::to_string(expected));
    return facts;
  }
  const auto ids = ids_path(path);
  if (std::filesystem::exists(ids, ec) && !ec) {
    try {
      const auto names = load_ids(ids);
      if (names.size() != facts.header.rows) {
        summary.violations.push_back(std::string(role) + ": ids sidecar has " +
                                     std::to_string(names.size()) + " lines for " +
                                     std::to_string(facts.header.rows) + " rows");
      }
    } catch (const Error& e) {
      summary.violations.push_back(std::string(role) + ": " + e.what());
    }
  }
  facts.present = true;
  return facts;
}

}  // namespace detail

// Structural validation: header consistency, dimensional agreement, index and
// label ranges. Violations are collected, never thrown, and no file payload
// is read.
inline ValidationSummary validate_manifest(const BenchmarkManifest& m) {
  ValidationSummary summary;
  auto require = [&](const std::filesystem::path& p, const char* role) {
    if (p.empty()) {
      summary.violations.push_back(std::string("manifest kind ") + to_string(m.kind) +
                                   " requires a " + role + " file");
    }
  };
  require(m.queries, "queries");
  switch (m.kind) {
    case BenchmarkKind::paraphrase:
      require(m.paraphrases, "paraphrases");
      require(m.gallery, "gallery");
      break;
    case BenchmarkKind::retrieval:
      require(m.gallery, "gallery");
      if (m.relevance.empty()) summary.violations.push_back("retrieval manifest has no relevance sets");
      break;
    case BenchmarkKind::classification:
      require(m.class_prototypes, "class_prototypes");
      if (m.labels.empty()) summary.violations.push_back("classification manifest has no labels");
      break;
    case BenchmarkKind::sts:
      require(m.paraphrases, "paraphrases");
      if (m.gold.empty()) summary.violations.push_back("sts manifest has no gold labels");
      break;
  }

  const auto queries = detail::inspect(m.queries, "queries", summary);
  const auto paraphrases = detail::inspect(m.paraphrases, "paraphrases", summary);
  const auto gallery = detail::inspect(m.gallery, "gallery", summary);
  const auto prototypes = detail::inspect(m.class_prototypes, "class_prototypes", summary);
  const auto expansions = detail::inspect(m.expansions, "expansions", summary);

  std::size_t dim = 0;
  auto check_dim = [&](const detail::FileFacts& f, const char* role) {
    if (!f.present) return;
    if (dim == 0) {
      dim = f.header.dim;
    } else if (f.header.dim != dim) {
      summary.violations.push_back(std::string("dim mismatch: ") + role + " has d=" +
                                   std::to_string(f.header.dim) + ", expected " +
                                   std::to_string(dim));
    }
  };
  check_dim(queries, "queries");
  check_dim(paraphrases, "paraphrases");
  check_dim(gallery, "gallery");
  check_dim(prototypes, "class_prototypes");
  check_dim(expansions, "expansions");
  summary.dim = dim;

  if (queries.present) summary.queries = static_cast<std::size_t>(queries.header.rows);
  if (gallery.present) summary.gallery_rows = static_cast<std::size_t>(gallery.header.rows);
  if (prototypes.present && m.kind == BenchmarkKind::classification) {
    summary.gallery_rows = static_cast<std::size_t>(prototypes.header.rows);
  }

  if (queries.present && paraphrases.present) {
    if (queries.header.rows != paraphrases.header.rows) {
      summary.violations.push_back(
          "row-aligned pairing broken: queries has " + std::to_string(queries.header.rows) +
          " rows, paraphrases has " + std::to_string(paraphrases.header.rows));
    } else {
      summary.pairs = static_cast<std::size_t>(queries.header.rows);
    }
  }

  if (!m.relevance.empty() && queries.present) {
    if (m.relevance.size() != queries.header.rows) {
      summary.violations.push_back("relevance has " + std::to_string(m.relevance.size()) +
                                   " sets for " + std::to_string(queries.header.rows) +
                                   " queries");
    }
    if (gallery.present) {
      for (std::size_t q = 0; q < m.relevance.size(); ++q) {
        if (m.relevance[q].empty()) {
          summary.violations.push_back("relevance set for query " + std::to_string(q) +
                                       " is empty");
        }
        for (std::uint32_t idx : m.relevance[q]) {
          if (idx >= gallery.header.rows) {
            summary.violations.push_back("relevance index " + std::to_string(idx) +
                                         " out of range for gallery of " +
                                         std::to_string(gallery.header.rows));
          }
        }
      }
    }
  }

  if (!m.labels.empty() && queries.present) {
    if (m.labels.size() != queries.header.rows) {
      summary.violations.push_back("labels has " + std::to_string(m.labels.size()) +
                                   " entries for " + std::to_string(queries.header.rows) +
                                   " queries");
    }
    if (prototypes.present) {
      for (std::uint32_t label : m.labels) {
        if (label >= prototypes.header.rows) {
          summary.violations.push_back("label " + std::to_string(label) +
                                       " out of range for " +
                                       std::to_string(prototypes.header.rows) + " classes");
        }
      }
    }
  }

  if (!m.gold.empty()) {
    if (queries.present && m.gold.size() != queries.header.rows) {
      summary.violations.push_back("gold has " + std::to_string(m.gold.size()) +
                                   " labels for " + std::to_string(queries.header.rows) +
                                   " pairs");
    }
    for (double g : m.gold) {
      if (!(g >= 0.0 && g <= 5.0)) {
        summary.violations.push_back("gold label " + std::to_string(g) + " outside [0, 5]");
        break;
      }
    }
  }

  if (expansions.present) {
    if (m.expansions_per_query == 0) {
      summary.violations.push_back("expansions file given without expansions_per_query");
    } else if (queries.present &&
               expansions.header.rows != queries.header.rows * m.expansions_per_query) {
      summary.violations.push_back(
          "expansions has " + std::to_string(expansions.header.rows) + " rows, expected " +
          std::to_string(queries.header.rows * m.expansions_per_query));
    }
  }

  return summary;
}

}  // namespace parabench
