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

#include <cmath>

#include "evseg/joint_model.hpp"
#include "evseg/subgraph.hpp"
#include "support/gradcheck.hpp"
#include "support/joint_grad.hpp"

namespace evseg {
namespace {

using testing::analytic_head_grads;
using testing::flatten;
using testing::numeric_gradient;
using testing::problem_loss;
using testing::random_net;
using testing::random_triple_problem;
using testing::relative_error;
using testing::unflatten;

// -log(sigmoid(1)) and -log(sigmoid(0)).
constexpr double kFloor = 0.31326168751822286;
constexpr double kLog2 = 0.69314718055994531;

PairPrediction one_hot(PairAssignment a) {
  PairPrediction p;
  p.y[index_of(a.relation)] = 1.0;
  p.z = a.same_segment ? 1.0 : 0.0;
  return p;
}

PairPrediction random_prediction(Rng& rng) {
  PairPrediction p;
  double sum = 0;
  for (auto& y : p.y) sum += (y = uniform_real(rng, 0.01, 1.0));
  for (auto& y : p.y) y /= sum;
  p.z = uniform_unit(rng);
  return p;
}

TEST(JointModel, UntrainedModelIsUniform) {
  auto model = JointModel::init(10, 3);
  EXPECT_EQ(model.relation.w1.rows(), 7);  // (10 + 4) / 2
  EXPECT_EQ(model.segment.w1.rows(), 5);   // (10 + 1) / 2
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(10, -1.0, 1.0);
  auto p = predict_pair(model, x);
  for (double y : p.y) EXPECT_DOUBLE_EQ(y, 0.25);
  EXPECT_DOUBLE_EQ(p.z, 0.5);
}

TEST(JointModel, ProbabilitiesAreNormalized) {
  auto problem = random_triple_problem(11, 8);
  auto f = forward(problem.model, problem.x);
  for (Eigen::Index r = 0; r < 3; ++r) {
    EXPECT_NEAR(f.y.row(r).sum(), 1.0, 1e-12);
    EXPECT_GT(f.z[r], 0.0);
    EXPECT_LT(f.z[r], 1.0);
  }
}

TEST(JointModel, InputDimensionMismatch) {
  auto model = JointModel::init(4, 0);
  try {
    predict_pair(model, Eigen::VectorXd::Zero(5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kPrecondition);
  }
}

TEST(SoftFeaturize, OneHotMatchesBinaryFeature) {
  for (std::size_t a = 0; a < kNumAssignments; ++a) {
    for (std::size_t b = 0; b < kNumAssignments; ++b) {
      for (std::size_t c = 0; c < kNumAssignments; ++c) {
        auto aij = assignment_at(a), ajk = assignment_at(b), aik = assignment_at(c);
        auto psi = soft_featurize(one_hot(aij), one_hot(ajk), one_hot(aik));
        auto x = featurize_subgraph(aij, ajk, make_value_set({aik})).x;
        for (std::size_t d = 0; d < kFeatureDim; ++d) {
          ASSERT_EQ(psi[static_cast<Eigen::Index>(d)], static_cast<double>(x[d])) << a << b << c << d;
        }
      }
    }
  }
}

TEST(SoftFeaturize, SingletonSlotsSumToOne) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    auto psi = soft_featurize(random_prediction(rng), random_prediction(rng), random_prediction(rng));
    double singletons = 0, others = 0;
    for (std::size_t s = 0; s < kPowersetSize; ++s) {
      const double v = psi[static_cast<Eigen::Index>(kPowersetOffset + s)];
      (subset_assignment(s) ? singletons : others) += v;
    }
    EXPECT_NEAR(singletons, 1.0, 1e-12);
    EXPECT_EQ(others, 0.0);
    EXPECT_NEAR(psi.head(4).sum(), 1.0, 1e-12);
    EXPECT_NEAR(psi.segment(5, 4).sum(), 1.0, 1e-12);
  }
}

TEST(LossCons, FloorWhenAllHingesInactive) {
  auto net = RectifierNet::zeros(10);
  net.bias.setConstant(-1.0);
  Eigen::VectorXd psi = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(kFeatureDim), 0.3);
  Eigen::VectorXd g;
  EXPECT_NEAR(loss_cons(net, psi, &g), kFloor, 1e-15);
  EXPECT_EQ(g.norm(), 0.0);
}

TEST(LossCons, OneUnitHingeGivesLogTwo) {
  auto net = RectifierNet::zeros(1);
  net.bias[0] = 1.0;
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(kFeatureDim));
  EXPECT_NEAR(loss_cons(net, psi), kLog2, 1e-15);
}

TEST(LossCons, NeverBelowFloor) {
  Rng rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    auto net = random_net(rng);
    Eigen::VectorXd psi = testing::random_matrix(static_cast<Eigen::Index>(kFeatureDim), 1, rng, 3.0).col(0);
    EXPECT_GE(loss_cons(net, psi), kFloor - 1e-12);
  }
}

TEST(LossCons, SaturatedLossIsFinite) {
  auto net = RectifierNet::zeros(1);
  net.bias[0] = 1e6;
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(kFeatureDim));
  Eigen::VectorXd g;
  const double l = loss_cons(net, psi, &g);
  EXPECT_NEAR(l, -std::log(1e-12), 1e-9);
  EXPECT_TRUE(g.allFinite());
}

TEST(LossCons, GradientMatchesCentralDifferences) {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    auto net = random_net(rng);
    Eigen::VectorXd psi = testing::random_matrix(static_cast<Eigen::Index>(kFeatureDim), 1, rng, 1.0).col(0);
    Eigen::VectorXd g;
    loss_cons(net, psi, &g);
    auto fd = numeric_gradient([&](const Eigen::VectorXd& p) { return loss_cons(net, p); }, psi);
    EXPECT_LE(relative_error(g, fd), 1e-4) << "trial " << trial;
  }
}

TEST(TripleLoss, HeadGradientsMatchCentralDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto p = random_triple_problem(seed);
    auto g = analytic_head_grads(p);
    auto rel = [&](const Eigen::VectorXd& v) {
      JointModel m = p.model;
      m.relation = unflatten(m.relation, v);
      return problem_loss(p, m);
    };
    auto seg = [&](const Eigen::VectorXd& v) {
      JointModel m = p.model;
      m.segment = unflatten(m.segment, v);
      return problem_loss(p, m);
    };
    EXPECT_LE(relative_error(flatten(g.relation), numeric_gradient(rel, flatten(p.model.relation))), 1e-4);
    EXPECT_LE(relative_error(flatten(g.segment), numeric_gradient(seg, flatten(p.model.segment))), 1e-4);
  }
}

TEST(TripleLoss, LinearInLambdas) {
  auto p = random_triple_problem(41);
  auto f = forward(p.model, p.x);
  auto preds = testing::predictions(f);
  auto full = triple_loss(preds, p.gold, p.weights, &p.net);
  const auto& w = p.weights;
  EXPECT_NEAR(full.total, w.lambda1 * full.sub + w.lambda2 * full.seg + w.lambda3 * full.cons, 1e-12);

  TripleGrad g_full, g1, g2, g3;
  triple_loss(preds, p.gold, w, &p.net, &g_full);
  auto only = [&](int which, TripleGrad* g) {
    LossWeights u = w;
    u.lambda1 = which == 1 ? 1.0 : 0.0;
    u.lambda2 = which == 2 ? 1.0 : 0.0;
    u.lambda3 = which == 3 ? 1.0 : 0.0;
    triple_loss(preds, p.gold, u, &p.net, g);
  };
  only(1, &g1);
  only(2, &g2);
  only(3, &g3);
  for (std::size_t k = 0; k < 3; ++k) {
    Eigen::Vector4d combined = w.lambda1 * g1.dlogits[k] + w.lambda3 * g3.dlogits[k];
    EXPECT_LE((g_full.dlogits[k] - combined).norm(), 1e-12);
    EXPECT_NEAR(g_full.dzlogit[k], w.lambda2 * g2.dzlogit[k] + w.lambda3 * g3.dzlogit[k], 1e-12);
  }
}

TEST(TripleLoss, PerfectPredictionsLeaveOnlyTheFloor) {
  std::array<PairAssignment, 3> gold = {PairAssignment{Relation::kParentChild, true},
                                        PairAssignment{Relation::kParentChild, true},
                                        PairAssignment{Relation::kParentChild, true}};
  std::array<PairPrediction, 3> preds = {one_hot(gold[0]), one_hot(gold[1]), one_hot(gold[2])};
  auto net = RectifierNet::zeros(3);
  net.bias.setConstant(-0.5);
  auto loss = triple_loss(preds, gold, LossWeights{}, &net);
  EXPECT_EQ(loss.sub, 0.0);
  EXPECT_EQ(loss.seg, 0.0);
  EXPECT_NEAR(loss.cons, kFloor, 1e-15);
  EXPECT_NEAR(loss.total, kFloor, 1e-15);
}

TEST(TripleLoss, ConfidentMistakeIsClamped) {
  PairAssignment pc{Relation::kParentChild, false};
  PairAssignment norel{Relation::kNoRel, false};
  std::array<PairPrediction, 3> preds = {one_hot(norel), one_hot(norel), one_hot(norel)};
  LossWeights w;
  w.lambda3 = 0;
  auto loss = triple_loss(preds, {pc, norel, norel}, w, nullptr);
  EXPECT_NEAR(loss.sub, -std::log(1e-12) / 3.0, 1e-9);
  EXPECT_TRUE(std::isfinite(loss.total));
}

TEST(TripleLoss, ClassWeightScalesCrossEntropy) {
  auto p = random_triple_problem(3);
  auto preds = testing::predictions(forward(p.model, p.x));
  LossWeights w;
  w.lambda3 = 0;
  auto base = triple_loss(preds, p.gold, w, nullptr);
  for (auto& c : w.class_weights) c = 2.5;
  EXPECT_NEAR(triple_loss(preds, p.gold, w, nullptr).sub, 2.5 * base.sub, 1e-12);
}

TEST(TripleLoss, ConfigErrors) {
  std::array<PairPrediction, 3> preds{};
  std::array<PairAssignment, 3> gold{};
  try {
    triple_loss(preds, gold, LossWeights{}, nullptr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
  LossWeights negative;
  negative.lambda2 = -1;
  negative.lambda3 = 0;
  EXPECT_THROW(triple_loss(preds, gold, negative, nullptr), Error);
}

TEST(Checkpoint, RoundTripIsExact) {
  auto p = random_triple_problem(8, 12);
  auto j = model_to_json(p.model, {{"note", "x"}});
  auto back = model_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_TRUE(back == p.model);
  EXPECT_EQ(j["meta"]["note"], "x");
}

TEST(Checkpoint, RejectsMalformed) {
  auto j = nlohmann::json(model_to_json(JointModel::init(4, 0)));
  auto expect_parse = [](const nlohmann::json& bad) {
    try {
      model_from_json(bad);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kParse);
    }
  };
  auto wrong_format = j;
  wrong_format["format"] = "other";
  expect_parse(wrong_format);
  auto wrong_dim = j;
  wrong_dim["input_dim"] = 5;
  expect_parse(wrong_dim);
  auto short_data = j;
  short_data["relation"]["w1"]["data"].erase(0);
  expect_parse(short_data);
  auto missing = j;
  missing.erase("segment");
  expect_parse(missing);
}

}  // namespace
}  // namespace evseg
