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

#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "parabench/numeric.hpp"

namespace parabench {

// Shortest-lossless decimal rendering used for CSV cells.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Per-item metric values plus their mean. Values are kept so significance
// tests can be run downstream; the aggregate is a pairwise-summed 64-bit
// arithmetic mean of per_item.
struct MetricReport {
  std::string metric;
  std::optional<int> k;
  std::vector<double> per_item;
  double aggregate = 0.0;
  std::size_t count = 0;

  static MetricReport from_values(std::string metric, std::optional<int> k,
                                  std::vector<double> values) {
    MetricReport r;
    r.metric = std::move(metric);
    r.k = k;
    r.count = values.size();
    r.aggregate = values.empty() ? 0.0 : mean(values);
    r.per_item = std::move(values);
    return r;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["metric"] = metric;
    if (k) {
      j["k"] = *k;
    } else {
      j["k"] = nullptr;
    }
    j["count"] = count;
    j["aggregate"] = aggregate;
    j["per_item"] = per_item;
    return j;
  }

  void write_csv(std::ostream& os) const {
    os << "index,value\n";
    for (std::size_t i = 0; i < per_item.size(); ++i) {
      os << i << ',' << format_double(per_item[i]) << '\n';
    }
  }
};

}  // namespace parabench
