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

#include <string>

#include <gtest/gtest.h>

#include "evseg/closure.hpp"
#include "evseg/random.hpp"
#include "support/builders.hpp"
#include "support/oracles.hpp"

namespace evseg {
namespace {

using testing::idx;
using testing::make_doc;
using R = Relation;

Document chain_doc(const std::vector<testing::RelationSpec>& rels) {
  return make_doc(2, {{1, 0, 0}, {2, 0, 2}, {3, 1, 1}}, rels);
}

TEST(TransitiveClosure, ContainmentChain) {
  auto closed = transitive_closure(chain_doc({{1, 2, R::kParentChild}, {2, 3, R::kParentChild}}));
  auto rel = [&](int a, int b) { return closed.relation(idx(closed, a), idx(closed, b)); };
  EXPECT_EQ(rel(1, 3), R::kParentChild);
  EXPECT_EQ(rel(2, 1), R::kChildParent);
  EXPECT_EQ(rel(3, 2), R::kChildParent);
  EXPECT_EQ(rel(3, 1), R::kChildParent);
  EXPECT_EQ(closed.pair_labels.size(), 6u);
}

TEST(TransitiveClosure, EmptyAnnotationIsAllNoRel) {
  auto closed = transitive_closure(chain_doc({}));
  ASSERT_EQ(closed.pair_labels.size(), 6u);
  for (const auto& [key, label] : closed.pair_labels) EXPECT_EQ(label.relation, R::kNoRel);
}

TEST(TransitiveClosure, CorefSubstitutionMatchesOracle) {
  auto doc = chain_doc({{1, 2, R::kCoref}, {2, 3, R::kParentChild}});
  auto closed = transitive_closure(doc);
  EXPECT_EQ(closed.relation(idx(closed, 1), idx(closed, 3)), R::kParentChild);
  auto oracle = testing::saturate(3, {{R::kCoref, 0, 1}, {R::kParentChild, 1, 2}});
  ASSERT_TRUE(oracle);
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) {
      if (a != b) EXPECT_EQ(closed.relation(a, b), (*oracle)[a][b]);
    }
  }
}

TEST(TransitiveClosure, ConflictsNameTheOffendingPair) {
  auto doc = chain_doc({{1, 2, R::kCoref}, {2, 3, R::kCoref}, {1, 3, R::kParentChild}});
  try {
    transitive_closure(doc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInconsistentAnnotation);
    EXPECT_NE(std::string(e.what()).find("(1, 3)"), std::string::npos) << e.what();
  }
  auto cyclic = chain_doc({{1, 2, R::kParentChild}, {2, 3, R::kParentChild}, {1, 3, R::kChildParent}});
  EXPECT_THROW(transitive_closure(cyclic), Error);
  auto two_way = chain_doc({});
  two_way.pair_labels[{0, 1}].relation = R::kParentChild;
  two_way.pair_labels[{1, 0}].relation = R::kParentChild;
  EXPECT_THROW(transitive_closure(two_way), Error);
}

TEST(TransitiveClosure, PreservesSegmentLabels) {
  auto doc = chain_doc({{1, 2, R::kParentChild}});
  doc.set_same_segment(0, 1, true);
  auto closed = transitive_closure(doc);
  EXPECT_EQ(closed.same_segment(0, 1), true);
  EXPECT_FALSE(closed.same_segment(0, 2).has_value());
}

struct RandomGraph {
  Document doc;
  std::vector<testing::Fact> facts;
};

RandomGraph random_graph(Rng& rng) {
  const auto n = static_cast<std::size_t>(uniform_int(rng, 1, 8));
  const double density = uniform_real(rng, 0.05, 0.45);
  std::vector<testing::EventSpec> events;
  for (std::size_t e = 0; e < n; ++e) events.push_back({static_cast<std::int64_t>(e), e, 0});
  RandomGraph g{make_doc(n, events), {}};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!bernoulli(rng, density)) continue;
      auto r = relation_at(uniform_below(rng, 3));
      g.doc.set_relation(i, j, r);
      g.facts.push_back({r, i, j});
    }
  }
  return g;
}

TEST(TransitiveClosure, AgreesWithBruteForceSaturation) {
  Rng rng(2024);
  int consistent = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto g = random_graph(rng);
    auto oracle = testing::saturate(g.doc.events.size(), g.facts);
    if (!oracle) {
      EXPECT_THROW(transitive_closure(g.doc), Error) << "trial " << trial;
      continue;
    }
    ++consistent;
    auto closed = transitive_closure(g.doc);
    const auto n = g.doc.events.size();
    ASSERT_EQ(closed.pair_labels.size(), n * (n - 1));
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (a != b) ASSERT_EQ(closed.relation(a, b), (*oracle)[a][b]) << "trial " << trial;
      }
    }
  }
  EXPECT_GT(consistent, 300);
  EXPECT_LT(consistent, 1000);
}

TEST(TransitiveClosure, IdempotentAndConverseConsistent) {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    auto g = random_graph(rng);
    Document once;
    try {
      once = transitive_closure(g.doc);
    } catch (const Error&) {
      continue;
    }
    EXPECT_EQ(transitive_closure(once), once);
    for (const auto& [key, label] : once.pair_labels) {
      EXPECT_EQ(once.relation(key.second, key.first), converse(label.relation));
    }
    EXPECT_NO_THROW(validate(once));
  }
}

}  // namespace
}  // namespace evseg
