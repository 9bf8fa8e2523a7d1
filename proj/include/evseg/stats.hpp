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
#include <cstddef>

#include "evseg/corpus.hpp"
#include "evseg/error.hpp"

namespace evseg {

struct WithinAcross {
  std::size_t within = 0;
  std::size_t across = 0;

  std::size_t total() const { return within + across; }
  double within_fraction() const {
    return total() ? static_cast<double>(within) / static_cast<double>(total()) : 0.0;
  }

  friend bool operator==(const WithinAcross&, const WithinAcross&) = default;
};

// Within/across-segment counts per relation over text-ordered pairs.
struct RelationStats {
  std::array<WithinAcross, kNumRelations> rows{};

  const WithinAcross& operator[](Relation r) const { return rows[index_of(r)]; }
  WithinAcross& operator[](Relation r) { return rows[index_of(r)]; }

  // PC and CP pooled.
  WithinAcross membership() const {
    const auto& pc = (*this)[Relation::kParentChild];
    const auto& cp = (*this)[Relation::kChildParent];
    return {pc.within + cp.within, pc.across + cp.across};
  }

  RelationStats& operator+=(const RelationStats& o) {
    for (std::size_t r = 0; r < kNumRelations; ++r) {
      rows[r].within += o.rows[r].within;
      rows[r].across += o.rows[r].across;
    }
    return *this;
  }
};

inline RelationStats compute_stats(const Document& doc) {
  RelationStats stats;
  for (std::size_t i = 0; i < doc.events.size(); ++i) {
    for (std::size_t j = i + 1; j < doc.events.size(); ++j) {
      auto same = doc.same_segment(i, j);
      if (!same) {
        throw Error(ErrorKind::kPrecondition,
                    "same_segment unset for pair " + pair_name(doc, i, j));
      }
      auto& row = stats[doc.relation(i, j)];
      (*same ? row.within : row.across) += 1;
    }
  }
  return stats;
}

inline RelationStats compute_stats(const Corpus& corpus) {
  RelationStats stats;
  for (const auto& doc : corpus.documents) stats += compute_stats(doc);
  return stats;
}

}  // namespace evseg
