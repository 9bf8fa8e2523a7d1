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
#include <array>
#include <bit>
#include <optional>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "evseg/corpus.hpp"
#include "evseg/error.hpp"
#include "evseg/random.hpp"
#include "evseg/relation.hpp"

namespace evseg {

// Layout of the three-event subgraph feature vector:
//   [0, 5)   pair (i, j): PC, CP, Coref, NoRel, same-segment
//   [5, 10)  pair (j, k): same layout
//   [10, 42) one indicator per subset of the five features of pair (i, k)
// A subset's local index sets bit 0 for same-segment, bit 1 for NoRel,
// bit 2 for Coref, bit 3 for CP and bit 4 for PC. Only subsets with exactly
// one relation bit describe a realizable assignment.
inline constexpr std::size_t kPairBlock = 5;
inline constexpr std::size_t kPowersetSize = 32;
inline constexpr std::size_t kPowersetOffset = 2 * kPairBlock;
inline constexpr std::size_t kFeatureDim = kPowersetOffset + kPowersetSize;

using PairBlock = std::array<std::uint8_t, kPairBlock>;
using PowersetBlock = std::array<std::uint8_t, kPowersetSize>;

// Set of possible assignments for one pair, as a bit mask over
// assignment_index() (8 bits).
using ValueSet = std::uint8_t;

inline constexpr ValueSet value_bit(PairAssignment a) {
  return static_cast<ValueSet>(1u << assignment_index(a));
}

inline ValueSet make_value_set(const std::vector<PairAssignment>& values) {
  ValueSet set = 0;
  for (const auto& v : values) set |= value_bit(v);
  return set;
}

inline constexpr bool is_subset(ValueSet a, ValueSet b) { return (a & ~b) == 0; }

// Local powerset index of the subset describing one assignment.
inline constexpr std::size_t subset_index(PairAssignment a) {
  return (std::size_t{1} << (4 - index_of(a.relation))) | (a.same_segment ? 1u : 0u);
}

// Inverse of subset_index for well-formed subsets.
inline std::optional<PairAssignment> subset_assignment(std::size_t subset) {
  std::size_t rel_bits = subset >> 1;
  if (std::popcount(rel_bits) != 1) return std::nullopt;
  std::size_t r = 4 - 1 - static_cast<std::size_t>(std::countr_zero(rel_bits));
  return PairAssignment{relation_at(r), (subset & 1u) != 0};
}

struct SubgraphFeature {
  std::array<std::uint8_t, kFeatureDim> x{};

  std::uint8_t operator[](std::size_t i) const { return x[i]; }

  friend bool operator==(const SubgraphFeature&, const SubgraphFeature&) = default;
  friend auto operator<=>(const SubgraphFeature&, const SubgraphFeature&) = default;
};

struct ConstraintExample {
  SubgraphFeature x;
  int t = 0;

  friend bool operator==(const ConstraintExample&, const ConstraintExample&) = default;
};

inline PairBlock encode_pair(PairAssignment a) {
  PairBlock out{};
  out[index_of(a.relation)] = 1;
  out[4] = a.same_segment ? 1 : 0;
  return out;
}

inline PowersetBlock encode_powerset(ValueSet values) {
  PowersetBlock out{};
  for (std::size_t a = 0; a < kNumAssignments; ++a) {
    if (values & (1u << a)) out[subset_index(assignment_at(a))] = 1;
  }
  return out;
}

inline PowersetBlock encode_powerset(const std::vector<PairAssignment>& values) {
  return encode_powerset(make_value_set(values));
}

inline SubgraphFeature featurize_subgraph(PairAssignment aij, PairAssignment ajk,
                                          ValueSet values_ik) {
  SubgraphFeature f;
  auto a = encode_pair(aij);
  auto b = encode_pair(ajk);
  auto p = encode_powerset(values_ik);
  std::copy(a.begin(), a.end(), f.x.begin());
  std::copy(b.begin(), b.end(), f.x.begin() + kPairBlock);
  std::copy(p.begin(), p.end(), f.x.begin() + kPowersetOffset);
  return f;
}

// Recovers the antecedent assignments and value set; throws on vectors that
// violate the layout invariants.
inline std::tuple<PairAssignment, PairAssignment, ValueSet> decode_subgraph(
    const SubgraphFeature& f) {
  auto decode_pair = [&](std::size_t offset) {
    int count = 0;
    PairAssignment a;
    for (std::size_t r = 0; r < kNumRelations; ++r) {
      if (f.x[offset + r]) {
        ++count;
        a.relation = relation_at(r);
      }
    }
    if (count != 1) throw Error(ErrorKind::kValidation, "pair block is not one-hot");
    a.same_segment = f.x[offset + 4] != 0;
    return a;
  };
  ValueSet values = 0;
  for (std::size_t s = 0; s < kPowersetSize; ++s) {
    if (!f.x[kPowersetOffset + s]) continue;
    auto a = subset_assignment(s);
    if (!a) throw Error(ErrorKind::kValidation, "ill-formed subset indicator set");
    values |= value_bit(*a);
  }
  return {decode_pair(0), decode_pair(kPairBlock), values};
}

inline bool satisfies_layout(const SubgraphFeature& f) {
  for (auto v : f.x) {
    if (v > 1) return false;
  }
  try {
    decode_subgraph(f);
  } catch (const Error&) {
    return false;
  }
  return true;
}

// Text-ordered event triples (i < j < k) of a document with n events. When
// there are more than `cap` triples a uniform sample of `cap` is drawn;
// output is in lexicographic order either way.
inline std::vector<std::array<std::size_t, 3>> sample_triples(std::size_t n, std::size_t cap,
                                                              Rng& rng) {
  std::vector<std::array<std::size_t, 3>> all;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) all.push_back({i, j, k});
    }
  }
  if (all.size() <= cap) return all;
  for (std::size_t t = 0; t < cap; ++t) {
    std::swap(all[t], all[t + uniform_below(rng, all.size() - t)]);
  }
  all.resize(cap);
  std::sort(all.begin(), all.end());
  return all;
}

inline PairAssignment pair_assignment(const Document& doc, std::size_t i, std::size_t j) {
  auto same = doc.same_segment(i, j);
  if (!same) {
    throw Error(ErrorKind::kPrecondition, "same_segment unset for pair " + pair_name(doc, i, j));
  }
  return {doc.relation(i, j), *same};
}

struct MiningConfig {
  double neg_ratio = 1.0;
  std::uint64_t seed = 0;
  std::size_t triple_cap = 5000;
};

// Antecedent configuration -> union of observed (i, k) assignments over the
// training split.
inline std::map<std::pair<std::size_t, std::size_t>, ValueSet> observed_value_sets(
    const Corpus& corpus, const MiningConfig& cfg) {
  std::map<std::pair<std::size_t, std::size_t>, ValueSet> unions;
  const std::size_t end = corpus.split_index();
  for (std::size_t d = 0; d < end; ++d) {
    const auto& doc = corpus.documents[d];
    Rng rng(derive_seed(cfg.seed, d));
    for (const auto& [i, j, k] : sample_triples(doc.events.size(), cfg.triple_cap, rng)) {
      auto key = std::pair(assignment_index(pair_assignment(doc, i, j)),
                           assignment_index(pair_assignment(doc, j, k)));
      unions[key] |= value_bit(pair_assignment(doc, i, k));
    }
  }
  return unions;
}

// Positive examples: one per observed antecedent configuration, carrying the
// corpus-wide union of (i, k) assignments. Negatives: ceil(neg_ratio) value
// sets per positive that are neither the union nor a subset of it.
inline std::vector<ConstraintExample> mine_training_examples(const Corpus& corpus,
                                                             const MiningConfig& cfg) {
  if (cfg.neg_ratio < 0) throw Error(ErrorKind::kConfig, "neg_ratio must be non-negative");
  auto unions = observed_value_sets(corpus, cfg);
  if (unions.empty()) {
    std::clog << "warning: no document in the training split has three events; "
                 "no constraint examples mined\n";
  }
  const auto per_positive = static_cast<std::size_t>(std::ceil(cfg.neg_ratio));
  Rng rng(cfg.seed);
  std::vector<ConstraintExample> out;
  for (const auto& [key, values] : unions) {
    auto aij = assignment_at(key.first);
    auto ajk = assignment_at(key.second);
    out.push_back({featurize_subgraph(aij, ajk, values), 1});
    std::vector<ValueSet> candidates;
    for (unsigned m = 1; m < 256; ++m) {
      if (!is_subset(static_cast<ValueSet>(m), values)) candidates.push_back(static_cast<ValueSet>(m));
    }
    std::size_t take = std::min(per_positive, candidates.size());
    for (std::size_t t = 0; t < take; ++t) {
      std::swap(candidates[t], candidates[t + uniform_below(rng, candidates.size() - t)]);
      out.push_back({featurize_subgraph(aij, ajk, candidates[t]), 0});
    }
  }
  return out;
}

inline nlohmann::ordered_json example_to_json(const ConstraintExample& ex) {
  nlohmann::ordered_json x = nlohmann::ordered_json::array();
  for (auto v : ex.x.x) x.push_back(static_cast<int>(v));
  return {{"x", std::move(x)}, {"t", ex.t}};
}

inline void write_examples(std::ostream& out, const std::vector<ConstraintExample>& examples,
                           const nlohmann::ordered_json& meta = nullptr) {
  if (!meta.is_null()) out << nlohmann::ordered_json{{"meta", meta}}.dump() << '\n';
  for (const auto& ex : examples) out << example_to_json(ex).dump() << '\n';
}

inline std::vector<ConstraintExample> read_examples(std::istream& in) {
  std::vector<ConstraintExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      if (j.contains("meta") && !j.contains("x")) continue;
      const auto& x = j.at("x");
      if (x.size() != kFeatureDim) throw ParseError(lineno, "feature vector must have 42 entries");
      ConstraintExample ex;
      for (std::size_t i = 0; i < kFeatureDim; ++i) {
        int v = x[i].get<int>();
        if (v != 0 && v != 1) throw ParseError(lineno, "features must be 0 or 1");
        ex.x.x[i] = static_cast<std::uint8_t>(v);
      }
      ex.t = j.at("t").get<int>();
      if (ex.t != 0 && ex.t != 1) throw ParseError(lineno, "label t must be 0 or 1");
      out.push_back(ex);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return out;
}

inline std::vector<ConstraintExample> read_examples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "'");
  return read_examples(in);
}

}  // namespace evseg
