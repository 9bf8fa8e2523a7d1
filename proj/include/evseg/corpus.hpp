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
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "evseg/error.hpp"
#include "evseg/pos.hpp"
#include "evseg/relation.hpp"
#include "evseg/segmentation.hpp"

namespace evseg {

struct Token {
  std::string surface;
  std::string pos;

  friend bool operator==(const Token&, const Token&) = default;
};

struct Sentence {
  std::size_t index = 0;
  std::vector<Token> tokens;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

// Inclusive token range inside one sentence.
struct TokenSpan {
  std::size_t first = 0;
  std::size_t last = 0;

  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct EventMention {
  std::int64_t id = 0;
  std::size_t sentence = 0;
  TokenSpan span;

  friend bool operator==(const EventMention&, const EventMention&) = default;
};

// Ordered pair of event indices (positions in Document::events).
using EventPair = std::pair<std::size_t, std::size_t>;

struct PairLabel {
  Relation relation = Relation::kNoRel;
  std::optional<bool> same_segment;

  friend bool operator==(const PairLabel&, const PairLabel&) = default;
};

struct Document {
  std::string id;
  std::vector<Sentence> sentences;
  // Sorted by (sentence, first token).
  std::vector<EventMention> events;
  // Both orientations are stored; (j, i) always carries the converse of
  // (i, j). Missing pairs are NoRel with unknown segment membership.
  std::map<EventPair, PairLabel> pair_labels;
  std::optional<Segmentation> segmentation;
  std::optional<Segmentation> gold_segmentation;

  std::size_t event_count() const { return events.size(); }
  std::size_t sentence_count() const { return sentences.size(); }

  Relation relation(std::size_t i, std::size_t j) const {
    auto it = pair_labels.find({i, j});
    return it == pair_labels.end() ? Relation::kNoRel : it->second.relation;
  }

  std::optional<bool> same_segment(std::size_t i, std::size_t j) const {
    auto it = pair_labels.find({i, j});
    if (it == pair_labels.end()) return std::nullopt;
    return it->second.same_segment;
  }

  // Sets (i, j) and its converse (j, i).
  void set_relation(std::size_t i, std::size_t j, Relation r) {
    pair_labels[{i, j}].relation = r;
    pair_labels[{j, i}].relation = converse(r);
  }

  void set_same_segment(std::size_t i, std::size_t j, bool same) {
    pair_labels[{i, j}].same_segment = same;
    pair_labels[{j, i}].same_segment = same;
  }

  std::optional<std::size_t> find_event(std::int64_t event_id) const {
    for (std::size_t i = 0; i < events.size(); ++i) {
      if (events[i].id == event_id) return i;
    }
    return std::nullopt;
  }

  friend bool operator==(const Document&, const Document&) = default;
};

struct Corpus {
  std::vector<Document> documents;
  // Fraction of documents (taken from the end) held out for testing.
  double test_fraction = 0.20;

  std::size_t split_index() const {
    auto n = documents.size();
    auto held = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
    return n - std::min(held, n);
  }

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

// Document index ranges for the train/dev/test protocol. Dev is carved from
// the tail of the training portion.
struct SplitRanges {
  std::size_t train_end = 0;
  std::size_t dev_end = 0;
  std::size_t test_end = 0;
};

inline SplitRanges split_ranges(const Corpus& corpus, double dev_fraction = 0.10) {
  SplitRanges r;
  r.dev_end = corpus.split_index();
  r.test_end = corpus.documents.size();
  auto dev = static_cast<std::size_t>(std::llround(dev_fraction * static_cast<double>(r.dev_end)));
  if (dev == 0 && dev_fraction > 0 && r.dev_end >= 2) dev = 1;
  r.train_end = r.dev_end - std::min(dev, r.dev_end);
  return r;
}

inline std::string pair_name(const Document& doc, std::size_t i, std::size_t j) {
  return "(" + std::to_string(doc.events.at(i).id) + ", " +
         std::to_string(doc.events.at(j).id) + ") in document '" + doc.id + "'";
}

// Checks every Document invariant; throws Error(kValidation).
inline void validate(const Document& doc) {
  auto fail = [&](const std::string& msg) {
    throw Error(ErrorKind::kValidation, "document '" + doc.id + "': " + msg);
  };
  if (doc.sentences.empty()) fail("no sentences");
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    const auto& sent = doc.sentences[s];
    if (sent.index != s) fail("sentence index mismatch at " + std::to_string(s));
    if (sent.tokens.empty()) fail("sentence " + std::to_string(s) + " has no tokens");
    for (const auto& tok : sent.tokens) {
      if (!pos_index(tok.pos)) {
        fail("unknown POS tag '" + tok.pos + "' in sentence " + std::to_string(s));
      }
    }
  }
  std::set<std::int64_t> ids;
  for (std::size_t e = 0; e < doc.events.size(); ++e) {
    const auto& ev = doc.events[e];
    if (!ids.insert(ev.id).second) fail("duplicate event id " + std::to_string(ev.id));
    if (ev.sentence >= doc.sentences.size()) {
      fail("event " + std::to_string(ev.id) + " references missing sentence");
    }
    if (ev.span.first > ev.span.last ||
        ev.span.last >= doc.sentences[ev.sentence].tokens.size()) {
      fail("event " + std::to_string(ev.id) + " span outside sentence bounds");
    }
    if (e > 0) {
      const auto& prev = doc.events[e - 1];
      if (std::pair(prev.sentence, prev.span.first) > std::pair(ev.sentence, ev.span.first)) {
        fail("events not in text order");
      }
      if (prev.sentence == ev.sentence && prev.span.last >= ev.span.first) {
        fail("overlapping spans for events " + std::to_string(prev.id) + " and " +
             std::to_string(ev.id));
      }
    }
  }
  for (const auto& [key, label] : doc.pair_labels) {
    auto [i, j] = key;
    if (i >= doc.events.size() || j >= doc.events.size()) fail("pair label references a missing event");
    if (i == j) fail("self pair for event " + std::to_string(doc.events[i].id));
    auto back = doc.pair_labels.find({j, i});
    if (back == doc.pair_labels.end() || back->second.relation != converse(label.relation) ||
        back->second.same_segment != label.same_segment) {
      fail("pair " + pair_name(doc, i, j) + " lacks a consistent converse entry");
    }
  }
  for (const auto* seg : {doc.segmentation ? &*doc.segmentation : nullptr,
                          doc.gold_segmentation ? &*doc.gold_segmentation : nullptr}) {
    if (seg && seg->sentence_count() != doc.sentences.size()) {
      fail("segmentation length does not match sentence count");
    }
  }
}

inline void validate(const Corpus& corpus) {
  if (!(corpus.test_fraction >= 0.0 && corpus.test_fraction <= 1.0)) {
    throw Error(ErrorKind::kValidation, "test fraction outside [0, 1]");
  }
  std::set<std::string> ids;
  for (const auto& doc : corpus.documents) {
    if (!ids.insert(doc.id).second) {
      throw Error(ErrorKind::kValidation, "duplicate document id '" + doc.id + "'");
    }
    validate(doc);
  }
}

}  // namespace evseg
