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

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "evseg/corpus.hpp"
#include "evseg/embedding.hpp"
#include "evseg/error.hpp"
#include "evseg/pos.hpp"

namespace evseg {

// Maps an event pair to a fixed-dimension vector [a; b; a*b; a-b] built from
// the two per-event vectors.
class PairEncoder {
 public:
  virtual ~PairEncoder() = default;

  virtual std::size_t event_dim() const = 0;
  virtual Eigen::VectorXd event_vector(const Document& doc, std::size_t i) const = 0;
  virtual nlohmann::ordered_json describe() const = 0;

  std::size_t pair_dim() const { return 4 * event_dim(); }

  Eigen::VectorXd encode_pair(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    const auto d = a.size();
    Eigen::VectorXd out(4 * d);
    out.segment(0, d) = a;
    out.segment(d, d) = b;
    out.segment(2 * d, d) = a.cwiseProduct(b);
    out.segment(3 * d, d) = a - b;
    return out;
  }

  Eigen::VectorXd encode_pair(const Document& doc, std::size_t i, std::size_t j) const {
    return encode_pair(event_vector(doc, i), event_vector(doc, j));
  }
};

inline std::uint64_t fnv1a(std::string_view text, std::uint64_t seed) {
  std::uint64_t h = 14695981039346656037ull;
  for (int b = 0; b < 8; ++b) {
    h ^= (seed >> (8 * b)) & 0xFF;
    h *= 1099511628211ull;
  }
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct BuiltinEncoderConfig {
  std::size_t hash_dim = 256;
  // Tokens on each side of the trigger that count as context.
  std::size_t window = 3;
  std::uint64_t seed = 0;
};

// Hashed bag of lowercased trigger tokens and of context-window tokens (each
// block L2-normalized), followed by the one-hot POS tag of the trigger's first
// token.
class BuiltinEncoder : public PairEncoder {
 public:
  explicit BuiltinEncoder(BuiltinEncoderConfig cfg = {}) : cfg_(cfg) {
    if (cfg_.hash_dim < 2) throw Error(ErrorKind::kConfig, "hash_dim must be at least 2");
  }

  const BuiltinEncoderConfig& config() const { return cfg_; }

  std::size_t event_dim() const override { return cfg_.hash_dim + kNumPosTags; }

  Eigen::VectorXd event_vector(const Document& doc, std::size_t i) const override {
    const auto& ev = doc.events.at(i);
    const auto& tokens = doc.sentences.at(ev.sentence).tokens;
    const auto th = static_cast<Eigen::Index>(trigger_dim());
    const auto ch = static_cast<Eigen::Index>(cfg_.hash_dim) - th;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(event_dim()));
    for (std::size_t t = ev.span.first; t <= ev.span.last; ++t) {
      v[bucket("t:", tokens[t].surface, th)] += 1.0;
    }
    const std::size_t lo = ev.span.first >= cfg_.window ? ev.span.first - cfg_.window : 0;
    const std::size_t hi = std::min(tokens.size(), ev.span.last + 1 + cfg_.window);
    for (std::size_t t = lo; t < hi; ++t) {
      if (t >= ev.span.first && t <= ev.span.last) continue;
      v[th + bucket("c:", tokens[t].surface, ch)] += 1.0;
    }
    for (auto [start, len] : {std::pair{Eigen::Index{0}, th}, std::pair{th, ch}}) {
      const double norm = v.segment(start, len).norm();
      if (norm > 0) v.segment(start, len) /= norm;
    }
    if (auto p = pos_index(tokens[ev.span.first].pos)) {
      v[th + ch + static_cast<Eigen::Index>(*p)] = 1.0;
    }
    return v;
  }

  nlohmann::ordered_json describe() const override {
    return {{"type", "builtin"},
            {"hash_dim", cfg_.hash_dim},
            {"window", cfg_.window},
            {"seed", cfg_.seed}};
  }

 private:
  // The hashed part is split evenly between trigger and context buckets.
  std::size_t trigger_dim() const { return cfg_.hash_dim / 2; }

  Eigen::Index bucket(std::string_view prefix, const std::string& surface, Eigen::Index size) const {
    std::string key(prefix);
    for (char c : surface) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return static_cast<Eigen::Index>(fnv1a(key, cfg_.seed) % static_cast<std::uint64_t>(size));
  }

  BuiltinEncoderConfig cfg_;
};

// Per-event vectors read from an embedding file.
class ExternalEncoder : public PairEncoder {
 public:
  explicit ExternalEncoder(EmbeddingTable table) : table_(std::move(table)) {}

  const EmbeddingTable& table() const { return table_; }

  std::size_t event_dim() const override { return table_.dim; }

  Eigen::VectorXd event_vector(const Document& doc, std::size_t i) const override {
    const auto& ev = doc.events.at(i);
    const auto* vec = table_.find(doc.id, ev.id);
    if (!vec) {
      throw Error(ErrorKind::kLookup, "no embedding for event " + std::to_string(ev.id) +
                                          " in document '" + doc.id + "'");
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(vec->size()));
    for (std::size_t d = 0; d < vec->size(); ++d) v[static_cast<Eigen::Index>(d)] = (*vec)[d];
    return v;
  }

  // Throws a lookup error naming the first event without a vector.
  void check_coverage(const Corpus& corpus) const {
    for (const auto& doc : corpus.documents) {
      for (std::size_t i = 0; i < doc.events.size(); ++i) event_vector(doc, i);
    }
  }

  nlohmann::ordered_json describe() const override {
    return {{"type", "external"}, {"dim", table_.dim}, {"count", table_.vectors.size()}};
  }

 private:
  EmbeddingTable table_;
};

// Per-event vectors of one document, computed once.
inline std::vector<Eigen::VectorXd> encode_events(const PairEncoder& encoder, const Document& doc) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(doc.events.size());
  for (std::size_t i = 0; i < doc.events.size(); ++i) out.push_back(encoder.event_vector(doc, i));
  return out;
}

}  // namespace evseg
