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
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "evseg/corpus.hpp"
#include "evseg/encoder.hpp"
#include "evseg/error.hpp"
#include "evseg/joint_model.hpp"
#include "evseg/segmentation.hpp"

namespace evseg {

// Scores text-ordered event pairs of a document.
class PairScorer {
 public:
  virtual ~PairScorer() = default;
  virtual std::vector<PairPrediction> score(const Document& doc,
                                            const std::vector<EventPair>& pairs) const = 0;
};

class ModelScorer : public PairScorer {
 public:
  ModelScorer(const JointModel& model, const PairEncoder& encoder)
      : model_(model), encoder_(encoder) {}

  std::vector<PairPrediction> score(const Document& doc,
                                    const std::vector<EventPair>& pairs) const override {
    if (pairs.empty()) return {};
    auto vectors = encode_events(encoder_, doc);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(pairs.size()),
                      static_cast<Eigen::Index>(encoder_.pair_dim()));
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      x.row(static_cast<Eigen::Index>(p)) =
          encoder_.encode_pair(vectors[pairs[p].first], vectors[pairs[p].second]).transpose();
    }
    auto f = forward(model_, x);
    std::vector<PairPrediction> out;
    out.reserve(pairs.size());
    for (std::size_t p = 0; p < pairs.size(); ++p) out.push_back(f.prediction(static_cast<Eigen::Index>(p)));
    return out;
  }

 private:
  const JointModel& model_;
  const PairEncoder& encoder_;
};

// Emits one-hot predictions of the document's own annotations.
class GoldScorer : public PairScorer {
 public:
  std::vector<PairPrediction> score(const Document& doc,
                                    const std::vector<EventPair>& pairs) const override {
    std::vector<PairPrediction> out;
    for (auto [i, j] : pairs) {
      PairPrediction p;
      p.y[index_of(doc.relation(i, j))] = 1.0;
      p.z = doc.same_segment(i, j).value_or(true) ? 1.0 : 0.0;
      out.push_back(p);
    }
    return out;
  }
};

inline std::vector<EventPair> text_ordered_pairs(const Document& doc) {
  std::vector<EventPair> pairs;
  for (std::size_t i = 0; i < doc.events.size(); ++i) {
    for (std::size_t j = i + 1; j < doc.events.size(); ++j) pairs.push_back({i, j});
  }
  return pairs;
}

// Highest-probability relation; ties go to the earlier label in
// PC, CP, Coref, NoRel order.
inline Relation argmax_relation(const std::array<double, kNumRelations>& y) {
  std::size_t best = 0;
  for (std::size_t r = 1; r < kNumRelations; ++r) {
    if (y[r] > y[best]) best = r;
  }
  return relation_at(best);
}

inline std::map<EventPair, Relation> predict_relations(const PairScorer& scorer, const Document& doc) {
  auto pairs = text_ordered_pairs(doc);
  auto preds = scorer.score(doc, pairs);
  std::map<EventPair, Relation> out;
  for (std::size_t p = 0; p < pairs.size(); ++p) out[pairs[p]] = argmax_relation(preds[p].y);
  return out;
}

// A boundary follows the sentence of e_i whenever adjacent events e_i and
// e_{i+1} sit in different sentences and their same-segment probability is
// below `threshold`.
inline Segmentation predict_segments(const PairScorer& scorer, const Document& doc,
                                     double threshold = 0.5) {
  auto seg = Segmentation::single(doc.sentences.size());
  if (doc.events.size() < 2) return seg;
  std::vector<EventPair> adjacent;
  for (std::size_t i = 0; i + 1 < doc.events.size(); ++i) {
    if (doc.events[i].sentence != doc.events[i + 1].sentence) adjacent.push_back({i, i + 1});
  }
  auto preds = scorer.score(doc, adjacent);
  auto flags = seg.boundaries();
  for (std::size_t p = 0; p < adjacent.size(); ++p) {
    if (preds[p].z < threshold) flags[doc.events[adjacent[p].first].sentence] = 1;
  }
  return Segmentation::from_boundaries(std::move(flags));
}

struct DocumentPrediction {
  std::string doc_id;
  std::map<EventPair, Relation> relations;
  Segmentation segmentation;
};

inline DocumentPrediction predict_document(const PairScorer& scorer, const Document& doc,
                                           double threshold = 0.5) {
  return {doc.id, predict_relations(scorer, doc), predict_segments(scorer, doc, threshold)};
}

struct ClassMetrics {
  std::size_t tp = 0, fp = 0, fn = 0;

  // With no predicted and no gold positives every score is 1; otherwise an
  // empty denominator scores 0.
  double precision() const {
    if (tp + fp == 0) return tp + fn == 0 ? 1.0 : 0.0;
    return static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  double recall() const {
    if (tp + fn == 0) return tp + fp == 0 ? 1.0 : 0.0;
    return static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r == 0 ? 0.0 : 2 * p * r / (p + r);
  }

  ClassMetrics& operator+=(const ClassMetrics& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }

  nlohmann::ordered_json to_json() const {
    return {{"tp", tp}, {"fp", fp}, {"fn", fn},
            {"precision", precision()}, {"recall", recall()}, {"f1", f1()}};
  }
};

struct RelationMetrics {
  ClassMetrics pc, cp;

  // Pooled PC and CP counts.
  ClassMetrics micro() const {
    ClassMetrics m = pc;
    m += cp;
    return m;
  }
};

inline RelationMetrics eval_relations(const std::vector<DocumentPrediction>& pred,
                                      const std::vector<Document>& gold) {
  if (pred.size() != gold.size()) {
    throw Error(ErrorKind::kValidation, "prediction covers " + std::to_string(pred.size()) +
                                            " documents, gold has " + std::to_string(gold.size()));
  }
  RelationMetrics m;
  for (std::size_t d = 0; d < gold.size(); ++d) {
    const auto& doc = gold[d];
    auto universe = text_ordered_pairs(doc);
    if (pred[d].doc_id != doc.id || pred[d].relations.size() != universe.size()) {
      throw Error(ErrorKind::kValidation, "prediction pair universe differs from gold in document '" +
                                              doc.id + "'");
    }
    for (auto pair : universe) {
      auto it = pred[d].relations.find(pair);
      if (it == pred[d].relations.end()) {
        throw Error(ErrorKind::kValidation, "no prediction for pair " +
                                                pair_name(doc, pair.first, pair.second));
      }
      const Relation g = doc.relation(pair.first, pair.second);
      const Relation p = it->second;
      for (auto [rel, cls] : {std::pair{Relation::kParentChild, &m.pc},
                              std::pair{Relation::kChildParent, &m.cp}}) {
        if (p == rel && g == rel) ++cls->tp;
        if (p == rel && g != rel) ++cls->fp;
        if (p != rel && g == rel) ++cls->fn;
      }
    }
  }
  return m;
}

// Boundary matching: a predicted boundary counts when an unmatched gold
// boundary lies within `window` sentences of it.
inline ClassMetrics eval_segmentation(const Segmentation& pred, const Segmentation& gold,
                                      std::size_t window = 0) {
  if (pred.sentence_count() != gold.sentence_count()) {
    throw Error(ErrorKind::kValidation, "segmentations cover " + std::to_string(pred.sentence_count()) +
                                            " and " + std::to_string(gold.sentence_count()) +
                                            " sentences");
  }
  const auto& pb = pred.boundaries();
  const auto& gb = gold.boundaries();
  std::vector<bool> used(gb.size(), false);
  ClassMetrics m;
  for (std::size_t i = 0; i < pb.size(); ++i) {
    if (!pb[i]) continue;
    bool matched = false;
    const std::size_t lo = i >= window ? i - window : 0;
    const std::size_t hi = std::min(gb.size() - 1, i + window);
    for (std::size_t d = 0; d <= window && !matched; ++d) {
      for (std::size_t g : {i - std::min(d, i), i + d}) {
        if (g < lo || g > hi || !gb[g] || used[g]) continue;
        used[g] = matched = true;
        break;
      }
    }
    ++(matched ? m.tp : m.fp);
  }
  for (std::size_t g = 0; g < gb.size(); ++g) m.fn += gb[g] && !used[g];
  return m;
}

// The labeled segmentation the same-segment targets came from; planted
// boundaries only when no labeling has run.
inline const Segmentation& reference_segmentation(const Document& doc) {
  if (doc.segmentation) return *doc.segmentation;
  if (doc.gold_segmentation) return *doc.gold_segmentation;
  throw Error(ErrorKind::kPrecondition, "document '" + doc.id + "' has no reference segmentation");
}

inline ClassMetrics eval_segmentation(const std::vector<DocumentPrediction>& pred,
                                      const std::vector<Document>& gold, std::size_t window = 0) {
  if (pred.size() != gold.size()) {
    throw Error(ErrorKind::kValidation, "prediction and gold document counts differ");
  }
  ClassMetrics m;
  for (std::size_t d = 0; d < gold.size(); ++d) {
    m += eval_segmentation(pred[d].segmentation, reference_segmentation(gold[d]), window);
  }
  return m;
}

struct MetricsReport {
  RelationMetrics relations;
  ClassMetrics segmentation;
  std::size_t documents = 0;
  std::size_t pairs = 0;

  nlohmann::ordered_json to_json() const {
    return {{"documents", documents},
            {"pairs", pairs},
            {"relations",
             {{"PC", relations.pc.to_json()},
              {"CP", relations.cp.to_json()},
              {"micro", relations.micro().to_json()}}},
            {"segmentation", segmentation.to_json()}};
  }
};

inline MetricsReport evaluate(const std::vector<DocumentPrediction>& pred,
                              const std::vector<Document>& gold, std::size_t window = 0) {
  MetricsReport r;
  r.relations = eval_relations(pred, gold);
  r.segmentation = eval_segmentation(pred, gold, window);
  r.documents = gold.size();
  for (const auto& p : pred) r.pairs += p.relations.size();
  return r;
}

inline std::vector<DocumentPrediction> predict_corpus(const PairScorer& scorer,
                                                      const std::vector<Document>& docs,
                                                      double threshold = 0.5) {
  std::vector<DocumentPrediction> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) out.push_back(predict_document(scorer, doc, threshold));
  return out;
}

// One row per text-ordered pair: doc id, e1, e2, gold, pred.
inline void write_pair_tsv(std::ostream& out, const std::vector<DocumentPrediction>& pred,
                           const std::vector<Document>& gold) {
  out << "doc_id\te1\te2\tgold\tpred\n";
  for (std::size_t d = 0; d < gold.size(); ++d) {
    for (const auto& [pair, rel] : pred[d].relations) {
      out << gold[d].id << '\t' << gold[d].events[pair.first].id << '\t'
          << gold[d].events[pair.second].id << '\t'
          << relation_name(gold[d].relation(pair.first, pair.second)) << '\t' << relation_name(rel)
          << '\n';
    }
  }
}

// Serialized predictions: one JSON object per document.
inline nlohmann::ordered_json prediction_to_json(const DocumentPrediction& p, const Document& doc) {
  nlohmann::ordered_json rels = nlohmann::ordered_json::array();
  for (const auto& [pair, rel] : p.relations) {
    rels.push_back({{"e1", doc.events[pair.first].id},
                    {"e2", doc.events[pair.second].id},
                    {"label", relation_name(rel)}});
  }
  nlohmann::ordered_json b = nlohmann::ordered_json::array();
  for (auto f : p.segmentation.boundaries()) b.push_back(static_cast<int>(f));
  return {{"id", p.doc_id}, {"relations", std::move(rels)}, {"boundaries", std::move(b)}};
}

inline DocumentPrediction prediction_from_json(const nlohmann::json& j, const Document& doc) {
  DocumentPrediction p;
  p.doc_id = j.at("id").get<std::string>();
  if (p.doc_id != doc.id) {
    throw Error(ErrorKind::kValidation, "prediction for document '" + p.doc_id +
                                            "' does not line up with gold document '" + doc.id + "'");
  }
  for (const auto& r : j.at("relations")) {
    auto i = doc.find_event(r.at("e1").get<std::int64_t>());
    auto k = doc.find_event(r.at("e2").get<std::int64_t>());
    if (!i || !k) throw Error(ErrorKind::kValidation, "prediction names an unknown event in '" + doc.id + "'");
    auto rel = parse_relation(r.at("label").get<std::string>());
    if (!rel) throw Error(ErrorKind::kParse, "unknown relation label in prediction");
    p.relations[{*i, *k}] = *rel;
  }
  std::vector<std::uint8_t> flags;
  for (const auto& f : j.at("boundaries")) flags.push_back(f.get<std::uint8_t>());
  p.segmentation = Segmentation::from_boundaries(std::move(flags));
  return p;
}

}  // namespace evseg
