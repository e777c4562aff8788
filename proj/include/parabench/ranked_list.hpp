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
#include <string>
#include <unordered_set>
#include <vector>

#include "parabench/error.hpp"

namespace parabench {

// Ordered retrieval result: distinct gallery row indices with matching
// non-increasing similarity scores. Ties are always broken by ascending
// index, so equal inputs produce identical lists everywhere.
struct RankedList {
  std::vector<std::uint32_t> indices;
  std::vector<double> scores;

  std::size_t size() const { return indices.size(); }

  void validate() const {
    if (indices.size() != scores.size()) {
      fail(ErrorCode::shape_mismatch, "indices and scores differ in length");
    }
    std::unordered_set<std::uint32_t> seen;
    seen.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
      if (!seen.insert(indices[i]).second) {
        fail(ErrorCode::duplicate_index,
             "index " + std::to_string(indices[i]) + " appears twice");
      }
      if (i > 0 && scores[i] > scores[i - 1]) {
        fail(ErrorCode::out_of_range, "scores increase at position " + std::to_string(i));
      }
    }
  }
};

}  // namespace parabench
