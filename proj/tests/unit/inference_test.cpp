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

#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "evseg/closure.hpp"
#include "evseg/inference.hpp"
#include "evseg/random.hpp"
#include "support/builders.hpp"

namespace evseg {
namespace {

using testing::make_doc;
using R = Relation;

// Returns preset predictions; unlisted pairs are NoRel and same-segment.
class FixedScorer : public PairScorer {
 public:
  std::map<EventPair, PairPrediction> table;

  std::vector<PairPrediction> score(const Document&, const std::vector<EventPair>& pairs) const override {
    std::vector<PairPrediction> out;
    for (auto p : pairs) {
      auto it = table.find(p);
      if (it != table.end()) {
        out.push_back(it->second);
      } else {
        PairPrediction d;
        d.y[index_of(R::kNoRel)] = 1.0;
        d.z = 1.0;
        out.push_back(d);
      }
    }
    return out;
  }
};

PairPrediction with_z(double z) {
  PairPrediction p;
  p.y = {0.25, 0.25, 0.25, 0.25};
  p.z = z;
  return p;
}

TEST(Argmax, PicksLargest) {
  EXPECT_EQ(argmax_relation({0.4, 0.3, 0.2, 0.1}), R::kParentChild);
  EXPECT_EQ(argmax_relation({0.1, 0.2, 0.3, 0.4}), R::kNoRel);
  EXPECT_EQ(argmax_relation({0.1, 0.4, 0.4, 0.1}), R::kChildParent);
}

TEST(Argmax, TiesFollowLabelOrder) {
  EXPECT_EQ(argmax_relation({0.25, 0.25, 0.25, 0.25}), R::kParentChild);
  EXPECT_EQ(argmax_relation({0.0, 0.0, 0.5, 0.5}), R::kCoref);
}

TEST(PredictRelations, EveryTextOrderedPairOnce) {
  auto doc = make_doc(2, {{1, 0, 0}, {2, 0, 3}, {3, 1, 1}, {4, 1, 5}});
  FixedScorer scorer;
  auto pred = predict_relations(scorer, doc);
  EXPECT_EQ(pred.size(), 6u);
  for (auto [pair, rel] : pred) {
    EXPECT_LT(pair.first, pair.second);
    EXPECT_EQ(rel, R::kNoRel);
  }
}

TEST(PredictRelations, GoldScorerReproducesGold) {
  auto doc = transitive_closure(make_doc(2, {{1, 0, 0}, {2, 0, 3}, {3, 1, 1}, {4, 1, 5}},
                                         {{1, 2, R::kParentChild}, {2, 3, R::kParentChild},
                                          {4, 3, R::kCoref}}));
  auto pred = predict_relations(GoldScorer{}, doc);
  for (auto [pair, rel] : pred) EXPECT_EQ(rel, doc.relation(pair.first, pair.second));
  auto m = eval_relations({{doc.id, pred, Segmentation::single(2)}}, {doc});
  EXPECT_EQ(m.micro().f1(), 1.0);
}

TEST(PredictSegments, BoundaryAtSentenceOfFirstEvent) {
  auto doc = make_doc(3, {{1, 0, 0}, {2, 1, 0}, {3, 2, 0}});
  FixedScorer scorer;
  scorer.table[{0, 1}] = with_z(0.9);
  scorer.table[{1, 2}] = with_z(0.2);
  auto seg = predict_segments(scorer, doc);
  EXPECT_EQ(seg.boundaries(), (std::vector<std::uint8_t>{0, 1}));
}

TEST(PredictSegments, AllSameSegmentGivesOneSegment) {
  auto doc = make_doc(4, {{1, 0, 0}, {2, 1, 0}, {3, 3, 0}});
  FixedScorer scorer;
  auto seg = predict_segments(scorer, doc);
  EXPECT_EQ(seg.segment_count(), 1u);
  EXPECT_EQ(seg.boundaries(), (std::vector<std::uint8_t>{0, 0, 0}));
}

TEST(PredictSegments, SameSentenceNeighboursMakeNoDecision) {
  auto doc = make_doc(2, {{1, 0, 0}, {2, 0, 3}, {3, 1, 0}});
  FixedScorer scorer;
  scorer.table[{0, 1}] = with_z(0.0);
  scorer.table[{1, 2}] = with_z(0.7);
  EXPECT_EQ(predict_segments(scorer, doc).segment_count(), 1u);
  scorer.table[{1, 2}] = with_z(0.3);
  EXPECT_EQ(predict_segments(scorer, doc).boundaries(), (std::vector<std::uint8_t>{1}));
}

TEST(PredictSegments, ZeroEventsGiveOneSegment) {
  auto doc = make_doc(3, {});
  EXPECT_EQ(predict_segments(FixedScorer{}, doc).segment_count(), 1u);
}

TEST(PredictSegments, ThresholdIsStrict) {
  auto doc = make_doc(2, {{1, 0, 0}, {2, 1, 0}});
  FixedScorer scorer;
  scorer.table[{0, 1}] = with_z(0.5);
  EXPECT_EQ(predict_segments(scorer, doc, 0.5).segment_count(), 1u);
  EXPECT_EQ(predict_segments(scorer, doc, 0.6).segment_count(), 2u);
}

TEST(ClassMetrics, Arithmetic) {
  ClassMetrics m{4, 1, 6};
  EXPECT_DOUBLE_EQ(m.precision(), 0.8);
  EXPECT_DOUBLE_EQ(m.recall(), 0.4);
  EXPECT_NEAR(m.f1(), 0.5333333333333333, 1e-15);
}

TEST(ClassMetrics, DegenerateCases) {
  ClassMetrics none{0, 0, 5};
  EXPECT_EQ(none.precision(), 0.0);
  EXPECT_EQ(none.f1(), 0.0);
  ClassMetrics vacuous{0, 0, 0};
  EXPECT_EQ(vacuous.precision(), 1.0);
  EXPECT_EQ(vacuous.recall(), 1.0);
  EXPECT_EQ(vacuous.f1(), 1.0);
  ClassMetrics spurious{0, 3, 0};
  EXPECT_EQ(spurious.precision(), 0.0);
  EXPECT_EQ(spurious.recall(), 0.0);
}

TEST(EvalRelations, TenGoldFivePredictedFourCorrect) {
  std::vector<testing::EventSpec> events;
  for (std::int64_t e = 0; e < 11; ++e) events.push_back({e, static_cast<std::size_t>(e / 8), static_cast<std::size_t>(e % 8)});
  std::vector<testing::RelationSpec> rels;
  for (std::int64_t k = 1; k <= 10; ++k) rels.push_back({0, k, R::kParentChild});
  auto doc = make_doc(2, events, rels);
  DocumentPrediction pred{doc.id, {}, Segmentation::single(2)};
  for (auto pair : text_ordered_pairs(doc)) pred.relations[pair] = R::kNoRel;
  for (std::size_t k = 1; k <= 4; ++k) pred.relations[{0, k}] = R::kParentChild;
  pred.relations[{1, 2}] = R::kParentChild;
  auto m = eval_relations({pred}, {doc});
  EXPECT_EQ(m.pc.tp, 4u);
  EXPECT_EQ(m.pc.fp, 1u);
  EXPECT_EQ(m.pc.fn, 6u);
  EXPECT_NEAR(m.pc.f1(), 0.5333333333333333, 1e-15);
  EXPECT_EQ(m.cp.f1(), 1.0);
  EXPECT_NEAR(m.micro().f1(), 0.5333333333333333, 1e-15);
}

TEST(EvalRelations, UniverseMismatch) {
  auto doc = make_doc(1, {{1, 0, 0}, {2, 0, 2}, {3, 0, 4}});
  DocumentPrediction pred{doc.id, {{{0, 1}, R::kNoRel}}, Segmentation::single(1)};
  try {
    eval_relations({pred}, {doc});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kValidation);
  }
  EXPECT_THROW(eval_relations({}, {doc}), Error);
}

// Independent oracle: positives as sets of (doc, pair).
TEST(EvalRelations, MatchesSetOracle) {
  Rng rng(99);
  std::vector<Document> docs;
  std::vector<DocumentPrediction> preds;
  std::set<std::tuple<std::size_t, EventPair, R>> gold_pos, pred_pos;
  for (std::size_t d = 0; d < 20; ++d) {
    std::vector<testing::EventSpec> events;
    const auto n = 2 + uniform_below(rng, 6);
    for (std::size_t e = 0; e < n; ++e) events.push_back({static_cast<std::int64_t>(e), e, 0});
    auto doc = make_doc(n, events, {}, 4, "d" + std::to_string(d));
    DocumentPrediction p{doc.id, {}, Segmentation::single(n)};
    for (auto pair : text_ordered_pairs(doc)) {
      auto g = relation_at(uniform_below(rng, 4));
      auto q = relation_at(uniform_below(rng, 4));
      doc.set_relation(pair.first, pair.second, g);
      p.relations[pair] = q;
      if (is_membership(g)) gold_pos.insert({d, pair, g});
      if (is_membership(q)) pred_pos.insert({d, pair, q});
    }
    docs.push_back(doc);
    preds.push_back(p);
  }
  std::size_t tp = 0;
  for (const auto& x : pred_pos) tp += gold_pos.count(x);
  auto m = eval_relations(preds, docs).micro();
  EXPECT_EQ(m.tp, tp);
  EXPECT_EQ(m.fp, pred_pos.size() - tp);
  EXPECT_EQ(m.fn, gold_pos.size() - tp);
}

Segmentation boundaries_at(std::size_t sentences, std::initializer_list<std::size_t> at) {
  auto s = Segmentation::single(sentences).boundaries();
  for (auto i : at) s[i] = 1;
  return Segmentation::from_boundaries(s);
}

TEST(EvalSegmentation, Identical) {
  auto g = boundaries_at(7, {1, 4});
  EXPECT_EQ(eval_segmentation(g, g).f1(), 1.0);
}

TEST(EvalSegmentation, StrictMatch) {
  EXPECT_EQ(eval_segmentation(boundaries_at(7, {3}), boundaries_at(7, {2})).f1(), 0.0);
}

TEST(EvalSegmentation, HalfRecall) {
  auto m = eval_segmentation(boundaries_at(7, {2}), boundaries_at(7, {2, 5}));
  EXPECT_EQ(m.precision(), 1.0);
  EXPECT_EQ(m.recall(), 0.5);
  EXPECT_NEAR(m.f1(), 2.0 / 3.0, 1e-15);
}

TEST(EvalSegmentation, WindowTolerance) {
  auto m = eval_segmentation(boundaries_at(7, {3}), boundaries_at(7, {2}), 1);
  EXPECT_EQ(m.tp, 1u);
  // one gold boundary can satisfy only one prediction
  m = eval_segmentation(boundaries_at(7, {1, 3}), boundaries_at(7, {2}), 1);
  EXPECT_EQ(m.tp, 1u);
  EXPECT_EQ(m.fp, 1u);
}

TEST(EvalSegmentation, LengthMismatch) {
  try {
    eval_segmentation(Segmentation::single(3), Segmentation::single(4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kValidation);
  }
}

TEST(Predictions, JsonRoundTripAndTsv) {
  auto doc = make_doc(2, {{7, 0, 0}, {9, 1, 2}}, {{7, 9, R::kChildParent}}, 8, "doc-a");
  DocumentPrediction p{doc.id, {{{0, 1}, R::kParentChild}}, boundaries_at(2, {0})};
  auto back = prediction_from_json(nlohmann::json::parse(prediction_to_json(p, doc).dump()), doc);
  EXPECT_EQ(back.relations, p.relations);
  EXPECT_EQ(back.segmentation, p.segmentation);
  std::ostringstream tsv;
  write_pair_tsv(tsv, {p}, {doc});
  EXPECT_EQ(tsv.str(), "doc_id\te1\te2\tgold\tpred\ndoc-a\t7\t9\tCP\tPC\n");
  auto other = make_doc(2, {{7, 0, 0}, {9, 1, 2}}, {}, 8, "doc-b");
  EXPECT_THROW(prediction_from_json(nlohmann::json::parse(prediction_to_json(p, doc).dump()), other), Error);
}

}  // namespace
}  // namespace evseg
