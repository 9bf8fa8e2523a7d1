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
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

#include "evseg/corpus.hpp"
#include "evseg/error.hpp"
#include "evseg/segmentation.hpp"

namespace evseg {

// Containment graph over events taking part in at least one PC/CP relation.
struct MembershipDag {
  std::vector<std::size_t> nodes;                          // event indices, sorted
  std::set<std::pair<std::size_t, std::size_t>> edges;     // parent -> child

  bool empty() const { return nodes.empty(); }
};

// A connected group of events related by containment, with the sentence
// span it covers. Events are identified by their index in Document::events.
struct EventComplex {
  std::size_t root = 0;
  std::vector<std::size_t> members;  // sorted
  SentenceRange span;
};

inline MembershipDag build_membership_dag(const Document& doc) {
  MembershipDag dag;
  std::set<std::size_t> nodes;
  for (const auto& [key, label] : doc.pair_labels) {
    if (label.relation == Relation::kParentChild) {
      dag.edges.insert({key.first, key.second});
    } else if (label.relation == Relation::kChildParent) {
      dag.edges.insert({key.second, key.first});
    } else {
      continue;
    }
    nodes.insert(key.first);
    nodes.insert(key.second);
  }
  dag.nodes.assign(nodes.begin(), nodes.end());

  // Kahn's algorithm; leftover nodes sit on a cycle.
  std::map<std::size_t, std::size_t> indegree;
  std::map<std::size_t, std::vector<std::size_t>> out;
  for (auto n : dag.nodes) indegree[n] = 0;
  for (const auto& [p, c] : dag.edges) {
    ++indegree[c];
    out[p].push_back(c);
  }
  std::vector<std::size_t> ready;
  for (const auto& [n, d] : indegree) {
    if (d == 0) ready.push_back(n);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    auto n = ready.back();
    ready.pop_back();
    ++visited;
    for (auto c : out[n]) {
      if (--indegree[c] == 0) ready.push_back(c);
    }
  }
  if (visited != dag.nodes.size()) {
    for (const auto& [n, d] : indegree) {
      if (d > 0) {
        throw Error(ErrorKind::kInconsistentAnnotation,
                    "containment cycle through event " + std::to_string(doc.events[n].id) +
                        " in document '" + doc.id + "'");
      }
    }
  }
  return dag;
}

namespace detail {

inline SentenceRange span_of(const Document& doc, const std::vector<std::size_t>& members) {
  SentenceRange span{doc.events[members.front()].sentence, doc.events[members.front()].sentence};
  for (auto m : members) {
    span.first = std::min(span.first, doc.events[m].sentence);
    span.last = std::max(span.last, doc.events[m].sentence);
  }
  return span;
}

inline std::size_t overlap_length(const SentenceRange& a, const SentenceRange& b) {
  if (!a.overlaps(b)) return 0;
  return std::min(a.last, b.last) - std::max(a.first, b.first) + 1;
}

// Connected components of the undirected view of `dag`, ignoring `removed`.
inline std::vector<EventComplex> components(const Document& doc, const MembershipDag& dag,
                                            std::optional<std::size_t> removed) {
  std::map<std::size_t, std::vector<std::size_t>> adj;
  std::map<std::size_t, bool> has_parent;
  for (auto n : dag.nodes) {
    if (n != removed) adj[n];
  }
  for (const auto& [p, c] : dag.edges) {
    if (p == removed || c == removed) continue;
    adj[p].push_back(c);
    adj[c].push_back(p);
    has_parent[c] = true;
  }
  std::vector<EventComplex> out;
  std::set<std::size_t> seen;
  for (const auto& [start, _] : adj) {
    if (seen.count(start)) continue;
    EventComplex cx;
    std::vector<std::size_t> stack{start};
    seen.insert(start);
    while (!stack.empty()) {
      auto n = stack.back();
      stack.pop_back();
      cx.members.push_back(n);
      for (auto m : adj[n]) {
        if (seen.insert(m).second) stack.push_back(m);
      }
    }
    std::sort(cx.members.begin(), cx.members.end());
    cx.root = cx.members.front();
    for (auto m : cx.members) {
      if (!has_parent[m]) {
        cx.root = m;
        break;
      }
    }
    cx.span = span_of(doc, cx.members);
    out.push_back(std::move(cx));
  }
  return out;
}

}  // namespace detail

// Event complexes of a document. When every membership-linked event falls
// into a single component, its root is dropped and the remainder re-split.
inline std::vector<EventComplex> event_complexes(const Document& doc, const MembershipDag& dag) {
  auto complexes = detail::components(doc, dag, std::nullopt);
  if (complexes.size() == 1) {
    complexes = detail::components(doc, dag, complexes.front().root);
  }
  return complexes;
}

// Resolves overlapping complex spans into disjoint, sorted spans. For an
// overlapping pair, an event whose exclusion (for span purposes only) makes
// the two spans disjoint is dropped, choosing the one leaving the least total
// overlap and then the smallest event id; otherwise the pair is merged.
inline std::vector<SentenceRange> resolve_spans(const Document& doc,
                                                std::vector<EventComplex> complexes) {
  auto by_span = [](const EventComplex& a, const EventComplex& b) {
    return std::tie(a.span.first, a.span.last, a.root) <
           std::tie(b.span.first, b.span.last, b.root);
  };
  auto total_overlap = [&](std::size_t changed, const SentenceRange& changed_span) {
    std::size_t total = 0;
    for (std::size_t a = 0; a < complexes.size(); ++a) {
      for (std::size_t b = a + 1; b < complexes.size(); ++b) {
        const auto& sa = a == changed ? changed_span : complexes[a].span;
        const auto& sb = b == changed ? changed_span : complexes[b].span;
        total += detail::overlap_length(sa, sb);
      }
    }
    return total;
  };

  for (;;) {
    std::sort(complexes.begin(), complexes.end(), by_span);
    std::optional<std::pair<std::size_t, std::size_t>> clash;
    for (std::size_t a = 0; a < complexes.size() && !clash; ++a) {
      for (std::size_t b = a + 1; b < complexes.size(); ++b) {
        if (complexes[a].span.overlaps(complexes[b].span)) {
          clash = {a, b};
          break;
        }
      }
    }
    if (!clash) break;
    auto [a, b] = *clash;

    struct Candidate {
      std::size_t overlap;
      std::int64_t event_id;
      std::size_t owner;
      std::size_t member_pos;
      SentenceRange span;
    };
    std::optional<Candidate> best;
    for (std::size_t owner : {a, b}) {
      std::size_t other = owner == a ? b : a;
      const auto& members = complexes[owner].members;
      if (members.size() < 2) continue;
      for (std::size_t pos = 0; pos < members.size(); ++pos) {
        std::vector<std::size_t> rest;
        rest.reserve(members.size() - 1);
        for (std::size_t q = 0; q < members.size(); ++q) {
          if (q != pos) rest.push_back(members[q]);
        }
        auto span = detail::span_of(doc, rest);
        if (span.overlaps(complexes[other].span)) continue;
        Candidate c{total_overlap(owner, span), doc.events[members[pos]].id, owner, pos, span};
        if (!best || std::tie(c.overlap, c.event_id) < std::tie(best->overlap, best->event_id)) {
          best = c;
        }
      }
    }
    if (best) {
      auto& members = complexes[best->owner].members;
      members.erase(members.begin() + static_cast<std::ptrdiff_t>(best->member_pos));
      complexes[best->owner].span = best->span;
    } else {
      auto& keep = complexes[a];
      auto& gone = complexes[b];
      keep.members.insert(keep.members.end(), gone.members.begin(), gone.members.end());
      std::sort(keep.members.begin(), keep.members.end());
      keep.span = {std::min(keep.span.first, gone.span.first),
                   std::max(keep.span.last, gone.span.last)};
      keep.root = std::min(keep.root, gone.root);
      complexes.erase(complexes.begin() + static_cast<std::ptrdiff_t>(b));
    }
  }

  std::vector<SentenceRange> spans;
  for (const auto& c : complexes) spans.push_back(c.span);
  return spans;
}

// Gold EventSeg segmentation derived from the (closed) containment
// annotation. Sentences outside every complex join the preceding segment;
// leading ones join the first.
inline Segmentation derive_segments(const Document& doc) {
  const std::size_t m = doc.sentences.size();
  auto dag = build_membership_dag(doc);
  if (dag.empty()) return Segmentation::single(m);
  auto spans = resolve_spans(doc, event_complexes(doc, dag));
  std::vector<std::size_t> starts{0};
  for (std::size_t k = 1; k < spans.size(); ++k) starts.push_back(spans[k].first);
  return Segmentation::from_starts(m, starts);
}

// Fills same_segment for every ordered event pair and records `seg` on the
// returned document.
inline Document pairwise_same_segment(const Document& doc, const Segmentation& seg) {
  if (seg.sentence_count() != doc.sentences.size()) {
    throw Error(ErrorKind::kPrecondition,
                "segmentation length does not match document '" + doc.id + "'");
  }
  Document out = doc;
  auto ids = seg.segment_ids();
  for (std::size_t i = 0; i < doc.events.size(); ++i) {
    for (std::size_t j = 0; j < doc.events.size(); ++j) {
      if (i == j) continue;
      auto& label = out.pair_labels[{i, j}];
      label.same_segment = ids[doc.events[i].sentence] == ids[doc.events[j].sentence];
    }
  }
  out.segmentation = seg;
  return out;
}

inline Document label_segments(const Document& doc) {
  return pairwise_same_segment(doc, derive_segments(doc));
}

inline Corpus label_segments(const Corpus& corpus) {
  Corpus out = corpus;
  for (auto& doc : out.documents) doc = label_segments(doc);
  return out;
}

}  // namespace evseg
