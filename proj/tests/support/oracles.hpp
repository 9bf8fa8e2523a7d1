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

// Reference implementations used only as test oracles. They follow the
// definitions literally and make no attempt at efficiency.

#include <array>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

#include "evseg/relation.hpp"

namespace evseg::testing {

// Relation matrix indexed [a][b]; diagonal unused.
using RelationMatrix = std::vector<std::vector<Relation>>;

struct Fact {
  Relation relation;
  std::size_t a;
  std::size_t b;
  friend auto operator<=>(const Fact&, const Fact&) = default;
};

// Saturates the fact set under transitivity of PC and Coref, coreference
// substitution on either side of PC, converse symmetry (PC <-> CP) and
// symmetry of Coref. Returns nullopt when the fixpoint holds two distinct
// relations for one pair or a self PC/CP fact.
inline std::optional<RelationMatrix> saturate(std::size_t n, const std::vector<Fact>& input) {
  std::set<Fact> facts(input.begin(), input.end());
  using R = Relation;
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<Fact> derived;
    for (const auto& f : facts) {
      if (f.relation == R::kParentChild) derived.push_back({R::kChildParent, f.b, f.a});
      if (f.relation == R::kChildParent) derived.push_back({R::kParentChild, f.b, f.a});
      if (f.relation == R::kCoref) derived.push_back({R::kCoref, f.b, f.a});
      for (const auto& g : facts) {
        if (f.b != g.a) continue;
        if (f.relation == R::kParentChild && g.relation == R::kParentChild)
          derived.push_back({R::kParentChild, f.a, g.b});
        if (f.relation == R::kCoref && g.relation == R::kCoref)
          derived.push_back({R::kCoref, f.a, g.b});
        if (f.relation == R::kCoref && g.relation == R::kParentChild)
          derived.push_back({R::kParentChild, f.a, g.b});
        if (f.relation == R::kParentChild && g.relation == R::kCoref)
          derived.push_back({R::kParentChild, f.a, g.b});
      }
    }
    for (const auto& d : derived) {
      if (facts.insert(d).second) changed = true;
    }
  }
  RelationMatrix m(n, std::vector<Relation>(n, R::kNoRel));
  std::vector<std::vector<int>> count(n, std::vector<int>(n, 0));
  for (const auto& f : facts) {
    if (f.a == f.b) {
      if (f.relation == R::kCoref) continue;
      return std::nullopt;
    }
    ++count[f.a][f.b];
    m[f.a][f.b] = f.relation;
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (count[a][b] > 1) return std::nullopt;
    }
  }
  return m;
}

// A labelled triangle (i, j, k) is consistent when its facts are already a
// conflict-free fixpoint of the closure rules.
inline bool triangle_consistent(Relation ij, Relation jk, Relation ik) {
  std::vector<Fact> facts;
  auto add = [&](Relation r, std::size_t a, std::size_t b) {
    if (r != Relation::kNoRel) facts.push_back({r, a, b});
  };
  add(ij, 0, 1);
  add(jk, 1, 2);
  add(ik, 0, 2);
  auto closed = saturate(3, facts);
  if (!closed) return false;
  return (*closed)[0][1] == ij && (*closed)[1][2] == jk && (*closed)[0][2] == ik;
}

// Legitimacy of a value set for pair (i, k) under the membership rules only:
// non-empty, and every relation in it closes the triangle consistently. The
// segment bits are unconstrained.
inline bool membership_legitimate(PairAssignment ij, PairAssignment jk, std::uint8_t values) {
  if (values == 0) return false;
  for (std::size_t a = 0; a < kNumAssignments; ++a) {
    if (!(values & (1u << a))) continue;
    if (!triangle_consistent(ij.relation, jk.relation, assignment_at(a).relation)) return false;
  }
  return true;
}

}  // namespace evseg::testing
