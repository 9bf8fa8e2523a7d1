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
#include <cctype>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evseg/corpus.hpp"
#include "evseg/error.hpp"

namespace evseg {

using json = nlohmann::ordered_json;

namespace detail {

inline bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

// A line whose object has a "meta" member and no "id" carries run
// metadata rather than a document.
inline bool is_meta_line(const json& j) {
  return j.is_object() && j.contains("meta") && !j.contains("id");
}

inline Segmentation boundaries_from_json(const json& j) {
  std::vector<std::uint8_t> flags;
  for (const auto& b : j) flags.push_back(static_cast<std::uint8_t>(b.get<int>()));
  return Segmentation::from_boundaries(std::move(flags));
}

inline json boundaries_to_json(const Segmentation& seg) {
  json out = json::array();
  for (auto b : seg.boundaries()) out.push_back(static_cast<int>(b));
  return out;
}

inline Document document_from_json(const json& j) {
  Document doc;
  doc.id = j.at("id").get<std::string>();
  const auto& sentences = j.at("sentences");
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    Sentence sent;
    sent.index = s;
    for (const auto& tok : sentences[s].at("tokens")) {
      if (!tok.is_array() || tok.size() != 2) {
        throw Error(ErrorKind::kParse, "token entries must be [surface, pos]");
      }
      sent.tokens.push_back({tok[0].get<std::string>(), tok[1].get<std::string>()});
    }
    doc.sentences.push_back(std::move(sent));
  }
  for (const auto& ev : j.at("events")) {
    EventMention m;
    m.id = ev.at("id").get<std::int64_t>();
    auto sentence = ev.at("sentence").get<std::int64_t>();
    const auto& span = ev.at("span");
    if (!span.is_array() || span.size() != 2) {
      throw Error(ErrorKind::kParse, "event span must be [start, end]");
    }
    auto first = span[0].get<std::int64_t>();
    auto last = span[1].get<std::int64_t>();
    if (sentence < 0 || first < 0 || last < 0) {
      throw Error(ErrorKind::kValidation,
                  "event " + std::to_string(m.id) + " has a negative index");
    }
    m.sentence = static_cast<std::size_t>(sentence);
    m.span = {static_cast<std::size_t>(first), static_cast<std::size_t>(last)};
    doc.events.push_back(m);
  }
  std::stable_sort(doc.events.begin(), doc.events.end(),
                   [](const EventMention& a, const EventMention& b) {
                     return std::pair(a.sentence, a.span.first) <
                            std::pair(b.sentence, b.span.first);
                   });
  if (j.contains("relations")) {
    for (const auto& rel : j.at("relations")) {
      auto e1 = rel.at("e1").get<std::int64_t>();
      auto e2 = rel.at("e2").get<std::int64_t>();
      auto name = rel.at("label").get<std::string>();
      auto label = parse_relation(name);
      if (!label) throw Error(ErrorKind::kParse, "unknown relation label '" + name + "'");
      auto i = doc.find_event(e1);
      auto k = doc.find_event(e2);
      if (!i || !k) {
        throw Error(ErrorKind::kValidation,
                    "document '" + doc.id + "': relation references unknown event " +
                        std::to_string(!i ? e1 : e2));
      }
      if (*i == *k) {
        throw Error(ErrorKind::kValidation,
                    "document '" + doc.id + "': self relation on event " + std::to_string(e1));
      }
      auto existing = doc.pair_labels.find({*i, *k});
      if (existing != doc.pair_labels.end() && existing->second.relation != *label) {
        throw Error(ErrorKind::kValidation,
                    "document '" + doc.id + "': conflicting labels for pair " +
                        pair_name(doc, *i, *k));
      }
      doc.set_relation(*i, *k, *label);
      if (rel.contains("same_segment") && !rel.at("same_segment").is_null()) {
        doc.set_same_segment(*i, *k, rel.at("same_segment").get<bool>());
      }
    }
  }
  if (j.contains("boundaries")) doc.segmentation = boundaries_from_json(j.at("boundaries"));
  if (j.contains("gold_boundaries")) {
    doc.gold_segmentation = boundaries_from_json(j.at("gold_boundaries"));
  }
  validate(doc);
  return doc;
}

}  // namespace detail

inline json document_to_json(const Document& doc) {
  json j;
  j["id"] = doc.id;
  json sentences = json::array();
  for (const auto& sent : doc.sentences) {
    json tokens = json::array();
    for (const auto& tok : sent.tokens) tokens.push_back(json::array({tok.surface, tok.pos}));
    sentences.push_back(json{{"tokens", std::move(tokens)}});
  }
  j["sentences"] = std::move(sentences);
  json events = json::array();
  for (const auto& ev : doc.events) {
    events.push_back(json{{"id", ev.id},
                          {"sentence", ev.sentence},
                          {"span", json::array({ev.span.first, ev.span.last})}});
  }
  j["events"] = std::move(events);
  json relations = json::array();
  for (const auto& [key, label] : doc.pair_labels) {
    if (key.first >= key.second) continue;
    json r{{"e1", doc.events[key.first].id},
           {"e2", doc.events[key.second].id},
           {"label", std::string(relation_name(label.relation))}};
    if (label.same_segment) r["same_segment"] = *label.same_segment;
    relations.push_back(std::move(r));
  }
  j["relations"] = std::move(relations);
  if (doc.segmentation) j["boundaries"] = detail::boundaries_to_json(*doc.segmentation);
  if (doc.gold_segmentation) {
    j["gold_boundaries"] = detail::boundaries_to_json(*doc.gold_segmentation);
  }
  return j;
}

// Reads one document per line. Blank lines and metadata lines are skipped.
inline Corpus parse_corpus(std::istream& in) {
  Corpus corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank(line)) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(lineno, e.what());
    }
    if (detail::is_meta_line(j)) continue;
    try {
      corpus.documents.push_back(detail::document_from_json(j));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kParse) throw ParseError(lineno, e.what());
      throw Error(e.kind(), "line " + std::to_string(lineno) + ": " + e.what());
    } catch (const json::exception& e) {
      throw ParseError(lineno, e.what());
    }
  }
  validate(corpus);
  return corpus;
}

inline Corpus parse_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open corpus '" + path.string() + "'");
  return parse_corpus(in);
}

// Writes the corpus as JSONL. A non-null `meta` object becomes the first line.
inline void write_corpus(std::ostream& out, const Corpus& corpus, const json& meta = nullptr) {
  if (!meta.is_null()) out << json{{"meta", meta}}.dump() << '\n';
  for (const auto& doc : corpus.documents) out << document_to_json(doc).dump() << '\n';
}

inline std::string serialize_corpus(const Corpus& corpus, const json& meta = nullptr) {
  std::ostringstream out;
  write_corpus(out, corpus, meta);
  return out.str();
}

}  // namespace evseg
