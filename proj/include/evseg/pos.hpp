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
#include <optional>
#include <string_view>

namespace evseg {

// Part-of-speech inventory: the 17 Universal Dependencies v2 tags plus the
// v1 coordinating-conjunction tag CONJ, so corpora tagged with either
// release validate.
inline constexpr std::size_t kNumPosTags = 18;

inline constexpr std::array<std::string_view, kNumPosTags> kPosTags = {
    "ADJ",  "ADP",  "ADV",  "AUX",   "CCONJ", "CONJ", "DET",  "INTJ", "NOUN",
    "NUM",  "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X"};

inline std::optional<std::size_t> pos_index(std::string_view tag) {
  auto it = std::find(kPosTags.begin(), kPosTags.end(), tag);
  if (it == kPosTags.end()) return std::nullopt;
  return static_cast<std::size_t>(it - kPosTags.begin());
}

}  // namespace evseg
