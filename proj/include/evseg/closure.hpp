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

#include <cstddef>
#include <numeric>
#include <vector>

#include "evseg/corpus.hpp"
#include "evseg/error.hpp"

namespace evseg {

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

// Completes the annotation under
//   PC(a,b) & PC(b,c)    => PC(a,c)
//   Coref(a,b) & Coref(b,c) => Coref(a,c)
//   Coref(a,b) & PC(b,c) => PC(a,c),  PC(a,b) & Coref(b,c) => PC(a,c)
//   PC(a,b) <=> CP(b,a)
// and materializes every ordered pair; pairs with no derived relation are
// NoRel. Coreference clusters are collapsed first, then containment is
// closed over the cluster graph. Existing same_segment values are kept.
inline Document transitive_closure(const Document& doc) {
  const std::size_t n = doc.events.size();
  detail::DisjointSets clusters(n);
  for (const auto& [key, label] : doc.pair_labels) {
    if (label.relation == Relation::kCoref) clusters.unite(key.first, key.second);
  }

  std::vector<std::size_t> cluster_of(n);
  std::vector<std::size_t> rep_index(n, n);
  std::size_t num_clusters = 0;
  for (std::size_t e = 0; e < n; ++e) {
    std::size_t root = clusters.find(e);
    if (rep_index[root] == n) rep_index[root] = num_clusters++;
    cluster_of[e] = rep_index[root];
  }

  // Direct containment edges between clusters; remember one witness pair
  // per edge for error messages.
  std::vector<std::vector<std::size_t>> children(num_clusters);
  std::vector<std::vector<char>> direct(num_clusters, std::vector<char>(num_clusters, 0));
  for (const auto& [key, label] : doc.pair_labels) {
    std::size_t parent, child;
    if (label.relation == Relation::kParentChild) {
      parent = key.first;
      child = key.second;
    } else if (label.relation == Relation::kChildParent) {
      parent = key.second;
      child = key.first;
    } else {
      continue;
    }
    std::size_t cp = cluster_of[parent], cc = cluster_of[child];
    if (cp == cc) {
      throw Error(ErrorKind::kInconsistentAnnotation,
                  "pair " + pair_name(doc, parent, child) +
                      " is both coreferent and in a parent-child relation");
    }
    if (!direct[cp][cc]) {
      direct[cp][cc] = 1;
      children[cp].push_back(cc);
    }
  }

  // reach[a][b]: cluster a transitively contains cluster b.
  std::vector<std::vector<char>> reach(num_clusters, std::vector<char>(num_clusters, 0));
  std::vector<std::size_t> stack;
  for (std::size_t src = 0; src < num_clusters; ++src) {
    stack.assign(children[src].begin(), children[src].end());
    while (!stack.empty()) {
      std::size_t c = stack.back();
      stack.pop_back();
      if (reach[src][c]) continue;
      reach[src][c] = 1;
      for (std::size_t next : children[c]) {
        if (!reach[src][next]) stack.push_back(next);
      }
    }
    if (reach[src][src]) {
      std::size_t witness = 0;
      while (cluster_of[witness] != src) ++witness;
      throw Error(ErrorKind::kInconsistentAnnotation,
                  "containment cycle through event " +
                      std::to_string(doc.events[witness].id) + " derives pair " +
                      pair_name(doc, witness, witness) + " as parent-child");
    }
  }

  Document out = doc;
  out.pair_labels.clear();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      std::size_t ca = cluster_of[a], cb = cluster_of[b];
      Relation r = Relation::kNoRel;
      if (ca == cb) {
        r = Relation::kCoref;
      } else if (reach[ca][cb]) {
        r = Relation::kParentChild;
      } else if (reach[cb][ca]) {
        r = Relation::kChildParent;
      }
      PairLabel label{r, doc.same_segment(a, b)};
      out.pair_labels.emplace(EventPair{a, b}, label);
    }
  }
  return out;
}

inline Corpus transitive_closure(const Corpus& corpus) {
  Corpus out = corpus;
  for (auto& doc : out.documents) doc = transitive_closure(doc);
  return out;
}

}  // namespace evseg
