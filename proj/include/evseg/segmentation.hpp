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
#include <cstdint>
#include <vector>

#include "evseg/error.hpp"

namespace evseg {

// Inclusive range of sentence indices.
struct SentenceRange {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t size() const { return last - first + 1; }
  bool contains(std::size_t s) const { return first <= s && s <= last; }
  bool overlaps(const SentenceRange& o) const {
    return first <= o.last && o.first <= last;
  }

  friend bool operator==(const SentenceRange&, const SentenceRange&) = default;
};

// Sentence-granular segmentation of a document with m sentences, stored as
// m-1 boundary flags: boundaries[i] == 1 iff sentence i ends a segment.
class Segmentation {
 public:
  Segmentation() = default;

  // A single segment covering m sentences.
  static Segmentation single(std::size_t sentence_count) {
    Segmentation s;
    s.sentence_count_ = sentence_count;
    s.boundaries_.assign(sentence_count > 0 ? sentence_count - 1 : 0, 0);
    return s;
  }

  static Segmentation from_boundaries(std::vector<std::uint8_t> boundaries) {
    Segmentation s;
    for (auto& b : boundaries) {
      if (b > 1) throw Error(ErrorKind::kValidation, "boundary flags must be 0 or 1");
    }
    s.sentence_count_ = boundaries.size() + 1;
    s.boundaries_ = std::move(boundaries);
    return s;
  }

  // Segments start at each entry of `starts`; the first entry must be 0 and
  // the entries strictly increasing and below sentence_count.
  static Segmentation from_starts(std::size_t sentence_count,
                                  const std::vector<std::size_t>& starts) {
    Segmentation s = single(sentence_count);
    for (std::size_t k = 0; k < starts.size(); ++k) {
      std::size_t start = starts[k];
      if (start >= sentence_count || (k > 0 && start <= starts[k - 1]) ||
          (k == 0 && start != 0)) {
        throw Error(ErrorKind::kValidation, "invalid segment start list");
      }
      if (start > 0) s.boundaries_[start - 1] = 1;
    }
    return s;
  }

  std::size_t sentence_count() const { return sentence_count_; }
  const std::vector<std::uint8_t>& boundaries() const { return boundaries_; }

  std::vector<SentenceRange> segments() const {
    std::vector<SentenceRange> out;
    if (sentence_count_ == 0) return out;
    std::size_t first = 0;
    for (std::size_t i = 0; i < boundaries_.size(); ++i) {
      if (boundaries_[i]) {
        out.push_back({first, i});
        first = i + 1;
      }
    }
    out.push_back({first, sentence_count_ - 1});
    return out;
  }

  std::size_t segment_count() const {
    if (sentence_count_ == 0) return 0;
    std::size_t n = 1;
    for (auto b : boundaries_) n += b;
    return n;
  }

  // Segment index of every sentence.
  std::vector<std::size_t> segment_ids() const {
    std::vector<std::size_t> ids(sentence_count_, 0);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < sentence_count_; ++i) {
      ids[i] = seg;
      if (i < boundaries_.size() && boundaries_[i]) ++seg;
    }
    return ids;
  }

  friend bool operator==(const Segmentation&, const Segmentation&) = default;

 private:
  std::size_t sentence_count_ = 0;
  std::vector<std::uint8_t> boundaries_;
};

}  // namespace evseg
