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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace evseg {

// Relation of an ordered event pair (e_i, e_j). ParentChild means e_i
// contains e_j; ChildParent is its converse.
enum class Relation : std::uint8_t {
  kParentChild = 0,
  kChildParent = 1,
  kCoref = 2,
  kNoRel = 3,
};

inline constexpr std::size_t kNumRelations = 4;

// Fixed label order; also the argmax tie-break order at inference.
inline constexpr std::array<Relation, kNumRelations> kAllRelations = {
    Relation::kParentChild, Relation::kChildParent, Relation::kCoref,
    Relation::kNoRel};

inline constexpr std::size_t index_of(Relation r) {
  return static_cast<std::size_t>(r);
}

inline constexpr Relation relation_at(std::size_t index) {
  return static_cast<Relation>(index);
}

inline constexpr Relation converse(Relation r) {
  switch (r) {
    case Relation::kParentChild: return Relation::kChildParent;
    case Relation::kChildParent: return Relation::kParentChild;
    default: return r;
  }
}

inline constexpr bool is_membership(Relation r) {
  return r == Relation::kParentChild || r == Relation::kChildParent;
}

// Wire names used by the JSONL corpus format.
inline std::string_view relation_name(Relation r) {
  switch (r) {
    case Relation::kParentChild: return "PC";
    case Relation::kChildParent: return "CP";
    case Relation::kCoref: return "COREF";
    case Relation::kNoRel: return "NOREL";
  }
  return "NOREL";
}

inline std::optional<Relation> parse_relation(std::string_view name) {
  for (Relation r : kAllRelations) {
    if (relation_name(r) == name) return r;
  }
  return std::nullopt;
}

// One concrete value of the per-pair feature set: a relation plus the
// same-segment indicator.
struct PairAssignment {
  Relation relation = Relation::kNoRel;
  bool same_segment = false;

  friend bool operator==(const PairAssignment&, const PairAssignment&) = default;
};

inline constexpr std::size_t kNumAssignments = 2 * kNumRelations;

// Dense index in [0, 8): relation-major, segment bit minor.
inline constexpr std::size_t assignment_index(PairAssignment a) {
  return 2 * index_of(a.relation) + (a.same_segment ? 1 : 0);
}

inline constexpr PairAssignment assignment_at(std::size_t index) {
  return {relation_at(index / 2), (index % 2) == 1};
}

}  // namespace evseg
