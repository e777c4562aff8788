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

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "parabench/embedding.hpp"
#include "parabench/error.hpp"

namespace parabench {

// PEMB binary layout (bit-exact, little-endian):
//   bytes 0-5   magic "PEMB1\n"
//   u32         version (= 1)
//   u32         d, embedding dimensionality
//   u64         n, row count
//   n*d f32     IEEE-754 values, row-major
// An optional sidecar "<file>.ids" holds one UTF-8 identifier per row.

namespace pemb {

inline constexpr char kMagic[6] = {'P', 'E', 'M', 'B', '1', '\n'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 6 + 4 + 4 + 8;

struct Header {
  std::uint32_t version = kVersion;
  std::uint32_t dim = 0;
  std::uint64_t rows = 0;
};

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  const char bytes[4] = {
      static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
      static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  os.write(bytes, 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  put_u32(os, static_cast<std::uint32_t>(v & 0xFFFFFFFFULL));
  put_u32(os, static_cast<std::uint32_t>(v >> 32));
}

inline std::uint32_t decode_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint64_t decode_u64(const unsigned char* p) {
  return static_cast<std::uint64_t>(decode_u32(p)) |
         (static_cast<std::uint64_t>(decode_u32(p + 4)) << 32);
}

inline Header read_header(std::istream& is) {
  unsigned char buf[kHeaderBytes];
  is.read(reinterpret_cast<char*>(buf), kHeaderBytes);
  if (is.gcount() != static_cast<std::streamsize>(kHeaderBytes)) {
    fail(ErrorCode::bad_magic, "file too short for a PEMB header");
  }
  for (std::size_t i = 0; i < 6; ++i) {
    if (static_cast<char>(buf[i]) != kMagic[i]) {
      fail(ErrorCode::bad_magic, "magic bytes do not spell PEMB1");
    }
  }
  Header h;
  h.version = decode_u32(buf + 6);
  h.dim = decode_u32(buf + 10);
  h.rows = decode_u64(buf + 14);
  if (h.version != kVersion) {
    fail(ErrorCode::bad_magic, "unsupported PEMB version " + std::to_string(h.version));
  }
  if (h.dim == 0) fail(ErrorCode::bad_header, "d must be >= 1");
  const std::uint64_t max_values = std::numeric_limits<std::size_t>::max() / 4;
  if (h.rows > max_values / h.dim) {
    fail(ErrorCode::bad_header, "header n*d does not fit in memory");
  }
  return h;
}

}  // namespace detail

inline Header peek_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
  return detail::read_header(in);
}

}  // namespace pemb

inline void save_embeddings(const EmbeddingMatrix& m, std::ostream& os) {
  os.write(pemb::kMagic, 6);
  pemb::detail::put_u32(os, pemb::kVersion);
  pemb::detail::put_u32(os, static_cast<std::uint32_t>(m.cols()));
  pemb::detail::put_u64(os, static_cast<std::uint64_t>(m.rows()));
  std::vector<char> payload(m.values().size() * 4);
  for (std::size_t i = 0; i < m.values().size(); ++i) {
    const float v = m.values()[i];
    if (!std::isfinite(v)) {
      fail(ErrorCode::non_finite_value,
           "value at row " + std::to_string(i / m.cols()) + ", col " +
               std::to_string(i % m.cols()) + " is not finite");
    }
    const std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
    payload[4 * i] = static_cast<char>(bits & 0xFF);
    payload[4 * i + 1] = static_cast<char>((bits >> 8) & 0xFF);
    payload[4 * i + 2] = static_cast<char>((bits >> 16) & 0xFF);
    payload[4 * i + 3] = static_cast<char>((bits >> 24) & 0xFF);
  }
  os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!os) fail(ErrorCode::io_error, "write failed");
}

inline void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
  save_embeddings(m, out);
}

// Loads a PEMB stream. Values are validated to be finite; the normalized
// flag is re-derived from the payload (the format does not carry it).
inline EmbeddingMatrix load_embeddings(std::istream& is) {
  const pemb::Header h = pemb::detail::read_header(is);
  const std::size_t count = static_cast<std::size_t>(h.rows) * h.dim;
  std::vector<char> payload(count * 4);
  is.read(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (is.gcount() != static_cast<std::streamsize>(payload.size())) {
    fail(ErrorCode::truncated_payload,
         "payload holds fewer than n*d*4 = " + std::to_string(count * 4) + " bytes");
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    fail(ErrorCode::truncated_payload, "unexpected bytes after the payload");
  }

  std::vector<float> values(count);
  bool all_unit = h.rows > 0;
  for (std::size_t r = 0; r < h.rows; ++r) {
    double sq = 0.0;
    for (std::size_t c = 0; c < h.dim; ++c) {
      const std::size_t i = r * h.dim + c;
      const auto* p = reinterpret_cast<const unsigned char*>(payload.data() + 4 * i);
      const float v = std::bit_cast<float>(pemb::detail::decode_u32(p));
      if (!std::isfinite(v)) {
        fail(ErrorCode::non_finite_value,
             "value at row " + std::to_string(r) + ", col " + std::to_string(c) +
                 " is not finite");
      }
      values[i] = v;
      sq += static_cast<double>(v) * static_cast<double>(v);
    }
    if (std::abs(std::sqrt(sq) - 1.0) > 1e-5) all_unit = false;
  }
  return EmbeddingMatrix(static_cast<std::size_t>(h.rows), h.dim, std::move(values),
                         all_unit);
}

inline EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
  return load_embeddings(in);
}

// Sidecar helpers; the ids file lives next to the matrix as "<file>.ids".
inline std::filesystem::path ids_path(const std::filesystem::path& pemb_path) {
  return std::filesystem::path(pemb_path.string() + ".ids");
}

inline void save_ids(const std::vector<std::string>& ids,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
  for (const auto& id : ids) out << id << '\n';
}

inline std::vector<std::string> load_ids(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) ids.push_back(line);
  return ids;
}

}  // namespace parabench
