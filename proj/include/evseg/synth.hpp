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
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evseg/closure.hpp"
#include "evseg/corpus.hpp"
#include "evseg/error.hpp"
#include "evseg/eventseg.hpp"
#include "evseg/random.hpp"
#include "evseg/segmentation.hpp"

namespace evseg {

struct IntRange {
  std::int64_t min = 0;
  std::int64_t max = 0;

  friend bool operator==(const IntRange&, const IntRange&) = default;
};

struct GenConfig {
  std::size_t n_docs = 100;
  IntRange sentences{10, 16};
  IntRange segments{4, 6};
  // Events in the subevent tree planted in each segment (root included).
  IntRange tree_events{2, 5};
  // Unrelated events per document.
  IntRange free_events{1, 3};
  IntRange coref_pairs{0, 2};
  IntRange sentence_length{8, 14};
  double within_membership_prob = 0.6513;
  double coref_within_prob = 0.47;
  // Probability that a trigger comes from its role's vocabulary rather than
  // the shared one.
  double role_correlation = 0.9;
  // Probability that a relocated event keeps its tree's topic word.
  double topic_keep_prob = 1.0;
  std::size_t vocab_size = 8;
  std::size_t topic_count = 60;
  double test_fraction = 0.20;
  std::uint64_t seed = 0;

  void validate() const {
    auto check_range = [](const IntRange& r, std::int64_t floor, const char* name) {
      if (r.min < floor || r.max < r.min) {
        throw Error(ErrorKind::kConfig, std::string(name) + " range must satisfy " +
                                            std::to_string(floor) + " <= min <= max");
      }
    };
    check_range(sentences, 1, "sentences");
    check_range(segments, 1, "segments");
    check_range(tree_events, 2, "tree_events");
    check_range(free_events, 0, "free_events");
    check_range(coref_pairs, 0, "coref_pairs");
    check_range(sentence_length, 1, "sentence_length");
    if (segments.max > sentences.min) {
      throw Error(ErrorKind::kConfig, "infeasible config: up to " + std::to_string(segments.max) +
                                          " segments but documents may have only " +
                                          std::to_string(sentences.min) + " sentences");
    }
    for (auto [p, name] : {std::pair{within_membership_prob, "within_membership_prob"},
                           std::pair{coref_within_prob, "coref_within_prob"},
                           std::pair{role_correlation, "role_correlation"},
                           std::pair{topic_keep_prob, "topic_keep_prob"},
                           std::pair{test_fraction, "test_fraction"}}) {
      if (!(p >= 0 && p <= 1)) throw Error(ErrorKind::kConfig, std::string(name) + " must lie in [0, 1]");
    }
    if (vocab_size == 0 || topic_count == 0) {
      throw Error(ErrorKind::kConfig, "vocab_size and topic_count must be positive");
    }
  }

  nlohmann::ordered_json to_json() const {
    auto range = [](const IntRange& r) { return nlohmann::ordered_json::array({r.min, r.max}); };
    return {{"n_docs", n_docs},
            {"sentences", range(sentences)},
            {"segments", range(segments)},
            {"tree_events", range(tree_events)},
            {"free_events", range(free_events)},
            {"coref_pairs", range(coref_pairs)},
            {"sentence_length", range(sentence_length)},
            {"within_membership_prob", within_membership_prob},
            {"coref_within_prob", coref_within_prob},
            {"role_correlation", role_correlation},
            {"topic_keep_prob", topic_keep_prob},
            {"vocab_size", vocab_size},
            {"topic_count", topic_count},
            {"test_fraction", test_fraction},
            {"seed", seed}};
  }

  static GenConfig from_json(const nlohmann::json& j) {
    GenConfig c;
    auto range = [&](const char* key, IntRange& r) {
      if (!j.contains(key)) return;
      const auto& v = j.at(key);
      if (!v.is_array() || v.size() != 2) {
        throw Error(ErrorKind::kConfig, std::string(key) + " must be a [min, max] pair");
      }
      r = {v[0].get<std::int64_t>(), v[1].get<std::int64_t>()};
    };
    try {
      c.n_docs = j.value("n_docs", c.n_docs);
      range("sentences", c.sentences);
      range("segments", c.segments);
      range("tree_events", c.tree_events);
      range("free_events", c.free_events);
      range("coref_pairs", c.coref_pairs);
      range("sentence_length", c.sentence_length);
      c.within_membership_prob = j.value("within_membership_prob", c.within_membership_prob);
      c.coref_within_prob = j.value("coref_within_prob", c.coref_within_prob);
      c.role_correlation = j.value("role_correlation", c.role_correlation);
      c.topic_keep_prob = j.value("topic_keep_prob", c.topic_keep_prob);
      c.vocab_size = j.value("vocab_size", c.vocab_size);
      c.topic_count = j.value("topic_count", c.topic_count);
      c.test_fraction = j.value("test_fraction", c.test_fraction);
      c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kConfig, std::string("generator config: ") + e.what());
    }
    c.validate();
    return c;
  }
};

namespace detail {

enum class PlantRole { kRoot, kInner, kLeaf, kMention, kFree };

struct PlantedEvent {
  PlantRole role = PlantRole::kFree;
  std::size_t segment = 0;
  std::size_t sentence = 0;
  std::size_t topic = 0;
  std::string trigger;
  bool relocated = false;
  int parent = -1;  // tree parent (planted index)
  int coref = -1;   // coreferent partner (planted index)
};

inline std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
}

inline std::size_t pick(Rng& rng, const IntRange& r) {
  return static_cast<std::size_t>(uniform_int(rng, r.min, r.max));
}

inline std::string draw_trigger(Rng& rng, const GenConfig& cfg, const char* role_prefix) {
  const bool own = role_prefix && bernoulli(rng, cfg.role_correlation);
  return std::string(own ? role_prefix : "e") + std::to_string(uniform_below(rng, cfg.vocab_size));
}

inline constexpr const char* kFillerPos[] = {"DET", "ADP", "ADJ", "NOUN", "ADV", "PUNCT", "AUX", "PRON"};

inline Document generate_document(const GenConfig& cfg, std::size_t index) {
  Rng rng(derive_seed(cfg.seed, index));
  const std::size_t m = pick(rng, cfg.sentences);
  const std::size_t n_seg = std::min(pick(rng, cfg.segments), m);

  // Planted segmentation: n_seg - 1 distinct starts among sentences 1..m-1.
  std::vector<std::size_t> cut(m - 1);
  for (std::size_t i = 0; i < cut.size(); ++i) cut[i] = i + 1;
  for (std::size_t t = 0; t + 1 < n_seg; ++t) {
    std::swap(cut[t], cut[t + uniform_below(rng, cut.size() - t)]);
  }
  std::vector<std::size_t> starts{0};
  starts.insert(starts.end(), cut.begin(), cut.begin() + static_cast<std::ptrdiff_t>(n_seg - 1));
  std::sort(starts.begin(), starts.end());
  const auto planted = Segmentation::from_starts(m, starts);
  const auto ranges = planted.segments();

  std::vector<std::size_t> topics(cfg.topic_count);
  for (std::size_t t = 0; t < topics.size(); ++t) topics[t] = t;
  shuffle(topics, rng);
  std::size_t next_topic = 0;
  auto fresh_topic = [&] { return topics[next_topic++ % topics.size()]; };

  std::vector<PlantedEvent> ev;
  std::vector<std::size_t> depth;
  for (std::size_t s = 0; s < n_seg; ++s) {
    const std::size_t topic = fresh_topic();
    const std::size_t size = pick(rng, cfg.tree_events);
    const std::size_t base = ev.size();
    for (std::size_t k = 0; k < size; ++k) {
      PlantedEvent e;
      e.segment = s;
      e.topic = topic;
      if (k == 0) {
        e.sentence = ranges[s].first;
        depth.push_back(0);
      } else {
        e.parent = static_cast<int>(base + uniform_below(rng, k));
        e.sentence = pick(rng, ranges[s].first, ranges[s].last);
        depth.push_back(depth[static_cast<std::size_t>(e.parent)] + 1);
      }
      ev.push_back(e);
    }
  }
  std::vector<bool> has_child(ev.size(), false);
  for (const auto& e : ev) {
    if (e.parent >= 0) has_child[static_cast<std::size_t>(e.parent)] = true;
  }
  std::vector<std::size_t> leaves;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    ev[i].role = ev[i].parent < 0 ? PlantRole::kRoot : has_child[i] ? PlantRole::kInner : PlantRole::kLeaf;
    if (ev[i].role == PlantRole::kLeaf) leaves.push_back(i);
  }

  // Coreference: within-segment pairs give a leaf a second mention; across
  // pairs link two new unrelated events in different segments.
  const std::size_t n_coref = pick(rng, cfg.coref_pairs);
  std::vector<std::size_t> mention_of;  // leaves receiving a mention
  std::size_t across_coref = 0;
  {
    std::vector<std::size_t> pool = leaves;
    shuffle(pool, rng);
    for (std::size_t c = 0; c < n_coref; ++c) {
      const bool within = bernoulli(rng, cfg.coref_within_prob);
      if (within && mention_of.size() < pool.size()) {
        mention_of.push_back(pool[mention_of.size()]);
      } else if (n_seg >= 2) {
        ++across_coref;
      }
    }
  }

  // Leaf relocation probability chosen so that the expected share of
  // cross-segment membership pairs is 1 - within_membership_prob.
  double total_pairs = 0, leaf_weight = 0;
  for (std::size_t i = 0; i < ev.size(); ++i) total_pairs += static_cast<double>(depth[i]);
  std::vector<std::size_t> mentions_on(ev.size(), 0);
  for (auto leaf : mention_of) ++mentions_on[leaf];
  for (auto leaf : leaves) {
    total_pairs += static_cast<double>(depth[leaf] * mentions_on[leaf]);
    leaf_weight += static_cast<double>(depth[leaf] * (1 + mentions_on[leaf]));
  }
  const double q = n_seg < 2 || leaf_weight == 0
                       ? 0.0
                       : std::min(1.0, (1.0 - cfg.within_membership_prob) * total_pairs / leaf_weight);
  for (auto leaf : leaves) {
    if (!bernoulli(rng, q)) continue;
    auto& e = ev[leaf];
    std::size_t target;
    if (e.segment == 0) {
      target = 1;
    } else if (e.segment + 1 == n_seg) {
      target = e.segment - 1;
    } else {
      target = bernoulli(rng, 0.5) ? e.segment - 1 : e.segment + 1;
    }
    e.segment = target;
    e.sentence = pick(rng, ranges[target].first, ranges[target].last);
    e.relocated = true;
    if (!bernoulli(rng, cfg.topic_keep_prob)) e.topic = fresh_topic();
  }

  for (auto& e : ev) {
    e.trigger = draw_trigger(rng, cfg, e.role == PlantRole::kLeaf ? "c" : "p");
  }
  for (auto leaf : mention_of) {
    PlantedEvent e = ev[leaf];
    e.role = PlantRole::kMention;
    e.parent = -1;
    e.relocated = false;
    e.coref = static_cast<int>(leaf);
    e.sentence = pick(rng, ranges[e.segment].first, ranges[e.segment].last);
    ev.push_back(e);
  }
  for (std::size_t c = 0; c < across_coref; ++c) {
    const std::size_t a = uniform_below(rng, n_seg);
    std::size_t b = uniform_below(rng, n_seg - 1);
    if (b >= a) ++b;
    PlantedEvent e;
    e.topic = fresh_topic();
    e.trigger = draw_trigger(rng, cfg, nullptr);
    e.segment = a;
    e.sentence = pick(rng, ranges[a].first, ranges[a].last);
    ev.push_back(e);
    e.segment = b;
    e.sentence = pick(rng, ranges[b].first, ranges[b].last);
    e.coref = static_cast<int>(ev.size() - 1);
    ev.push_back(e);
  }
  const std::size_t n_free = pick(rng, cfg.free_events);
  for (std::size_t f = 0; f < n_free; ++f) {
    PlantedEvent e;
    e.segment = uniform_below(rng, n_seg);
    e.sentence = pick(rng, ranges[e.segment].first, ranges[e.segment].last);
    e.topic = fresh_topic();
    e.trigger = draw_trigger(rng, cfg, nullptr);
    ev.push_back(e);
  }

  // Sentences: filler words with each event realized as [topic, trigger].
  Document doc;
  doc.id = "synth-" + std::to_string(cfg.seed) + "-" + std::to_string(index);
  std::vector<std::vector<std::size_t>> in_sentence(m);
  for (std::size_t i = 0; i < ev.size(); ++i) in_sentence[ev[i].sentence].push_back(i);
  std::vector<std::pair<std::size_t, std::size_t>> position(ev.size());  // (sentence, token)
  for (std::size_t s = 0; s < m; ++s) {
    auto& units = in_sentence[s];
    shuffle(units, rng);
    const std::size_t length = std::max(pick(rng, cfg.sentence_length), 2 * units.size() + 1);
    std::vector<int> layout(length - 2 * units.size(), -1);
    for (auto u : units) {
      layout.insert(layout.begin() + static_cast<std::ptrdiff_t>(uniform_below(rng, layout.size() + 1)),
                    static_cast<int>(u));
    }
    Sentence sentence;
    sentence.index = s;
    for (int slot : layout) {
      if (slot < 0) {
        const auto w = uniform_below(rng, 200);
        sentence.tokens.push_back({"w" + std::to_string(w), kFillerPos[w % 8]});
        continue;
      }
      const auto& e = ev[static_cast<std::size_t>(slot)];
      sentence.tokens.push_back({"t" + std::to_string(e.topic), "PROPN"});
      position[static_cast<std::size_t>(slot)] = {s, sentence.tokens.size()};
      sentence.tokens.push_back({e.trigger, "VERB"});
    }
    doc.sentences.push_back(std::move(sentence));
  }

  std::vector<std::size_t> order(ev.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return position[a] < position[b]; });
  std::vector<std::size_t> slot_of(ev.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    slot_of[order[r]] = r;
    const auto [s, t] = position[order[r]];
    doc.events.push_back({static_cast<std::int64_t>(r + 1), s, {t, t}});
  }
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (ev[i].parent >= 0) {
      doc.set_relation(slot_of[static_cast<std::size_t>(ev[i].parent)], slot_of[i], Relation::kParentChild);
    }
    if (ev[i].coref >= 0) doc.set_relation(slot_of[static_cast<std::size_t>(ev[i].coref)], slot_of[i], Relation::kCoref);
  }
  doc = pairwise_same_segment(transitive_closure(doc), planted);
  doc.gold_segmentation = planted;
  return doc;
}

}  // namespace detail

// Synthetic corpus with planted subevent trees, coreference and segment
// structure. Every document is drawn from its own stream derived from the
// seed, so output does not depend on generation order.
inline Corpus generate_corpus(const GenConfig& cfg) {
  cfg.validate();
  Corpus corpus;
  corpus.test_fraction = cfg.test_fraction;
  for (std::size_t d = 0; d < cfg.n_docs; ++d) corpus.documents.push_back(detail::generate_document(cfg, d));
  return corpus;
}

}  // namespace evseg
