// Copyright 2026 The evseg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "evseg/error.hpp"

namespace evseg {

// Binary per-event vector file:
//
//   magic    8 bytes  "EVSEGEMB"
//   version  u32      1
//   dim      u32
//   count    u64
//   index    count x { u32 id_len, id_len bytes doc id, i64 event id,
//                      u64 byte offset into payload }
//   payload  count x dim float32
//
// All integers and floats are little-endian.
inline constexpr char kEmbeddingMagic[8] = {'E', 'V', 'S', 'E', 'G', 'E', 'M', 'B'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;

using EmbeddingKey = std::pair<std::string, std::int64_t>;

struct EmbeddingTable {
  std::uint32_t dim = 0;
  std::map<EmbeddingKey, std::vector<float>> vectors;

  const std::vector<float>* find(const std::string& doc_id, std::int64_t event_id) const {
    auto it = vectors.find({doc_id, event_id});
    return it == vectors.end() ? nullptr : &it->second;
  }
};

namespace detail {

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    out.put(static_cast<char>((u >> (8 * b)) & 0xFF));
  }
}

template <typename T>
T read_le(std::istream& in, const char* field) {
  static_assert(std::is_integral_v<T>);
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw Error(ErrorKind::kParse, std::string("embedding file truncated in ") + field);
  }
  std::make_unsigned_t<T> u = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    u |= static_cast<std::make_unsigned_t<T>>(buf[b]) << (8 * b);
  }
  return static_cast<T>(u);
}

}  // namespace detail

// Entries are written in key order so the output is independent of
// insertion order.
inline void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  out.write(kEmbeddingMagic, sizeof(kEmbeddingMagic));
  detail::write_le<std::uint32_t>(out, kEmbeddingVersion);
  detail::write_le<std::uint32_t>(out, table.dim);
  detail::write_le<std::uint64_t>(out, table.vectors.size());
  std::uint64_t offset = 0;
  for (const auto& [key, vec] : table.vectors) {
    if (vec.size() != table.dim) {
      throw Error(ErrorKind::kValidation, "vector for event " + std::to_string(key.second) +
                                              " in document '" + key.first + "' has dimension " +
                                              std::to_string(vec.size()) + ", expected " +
                                              std::to_string(table.dim));
    }
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(key.first.size()));
    out.write(key.first.data(), static_cast<std::streamsize>(key.first.size()));
    detail::write_le<std::int64_t>(out, key.second);
    detail::write_le<std::uint64_t>(out, offset);
    offset += std::uint64_t{table.dim} * 4;
  }
  for (const auto& [key, vec] : table.vectors) {
    for (float f : vec) detail::write_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
  }
}

inline void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path.string() + "'");
  write_embeddings(out, table);
  if (!out) throw Error(ErrorKind::kIo, "failed writing '" + path.string() + "'");
}

inline EmbeddingTable read_embeddings(std::istream& in) {
  char magic[sizeof(kEmbeddingMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kEmbeddingMagic, sizeof(magic)) != 0) {
    throw Error(ErrorKind::kParse, "not an embedding file (bad magic)");
  }
  auto version = detail::read_le<std::uint32_t>(in, "version");
  if (version != kEmbeddingVersion) {
    throw Error(ErrorKind::kParse, "unsupported embedding file version " + std::to_string(version));
  }
  EmbeddingTable table;
  table.dim = detail::read_le<std::uint32_t>(in, "dim");
  auto count = detail::read_le<std::uint64_t>(in, "count");
  if (table.dim == 0 && count > 0) throw Error(ErrorKind::kParse, "embedding dimension is zero");

  struct Entry {
    EmbeddingKey key;
    std::uint64_t offset;
  };
  std::vector<Entry> index;
  for (std::uint64_t e = 0; e < count; ++e) {
    auto len = detail::read_le<std::uint32_t>(in, "index");
    std::string doc_id(len, '\0');
    if (!in.read(doc_id.data(), len)) throw Error(ErrorKind::kParse, "embedding file truncated in index");
    auto event_id = detail::read_le<std::int64_t>(in, "index");
    auto offset = detail::read_le<std::uint64_t>(in, "index");
    index.push_back({{std::move(doc_id), event_id}, offset});
  }

  const std::uint64_t stride = std::uint64_t{table.dim} * 4;
  std::vector<char> payload(static_cast<std::size_t>(count * stride));
  if (!in.read(payload.data(), static_cast<std::streamsize>(payload.size()))) {
    throw Error(ErrorKind::kParse, "embedding payload shorter than count x dim floats");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorKind::kParse, "trailing bytes after embedding payload");
  }
  for (const auto& entry : index) {
    if (entry.offset % stride != 0 || entry.offset + stride > payload.size()) {
      throw Error(ErrorKind::kParse, "bad payload offset for event " +
                                         std::to_string(entry.key.second) + " in document '" +
                                         entry.key.first + "'");
    }
    std::vector<float> vec(table.dim);
    for (std::uint32_t d = 0; d < table.dim; ++d) {
      std::uint32_t bits = 0;
      for (std::size_t b = 0; b < 4; ++b) {
        bits |= static_cast<std::uint32_t>(
                    static_cast<unsigned char>(payload[entry.offset + 4 * d + b]))
                << (8 * b);
      }
      vec[d] = std::bit_cast<float>(bits);
    }
    if (!table.vectors.emplace(entry.key, std::move(vec)).second) {
      throw Error(ErrorKind::kParse, "duplicate index key: event " +
                                         std::to_string(entry.key.second) + " in document '" +
                                         entry.key.first + "'");
    }
  }
  return table;
}

inline EmbeddingTable read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "'");
  return read_embeddings(in);
}

}  // namespace evseg
