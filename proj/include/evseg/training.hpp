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

#include <array>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "evseg/corpus.hpp"
#include "evseg/encoder.hpp"
#include "evseg/error.hpp"
#include "evseg/inference.hpp"
#include "evseg/joint_model.hpp"
#include "evseg/optimizer.hpp"
#include "evseg/random.hpp"
#include "evseg/rectifier.hpp"
#include "evseg/subgraph.hpp"

namespace evseg {

struct JointTrainConfig {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 1.0;
  double lr = 1e-3;
  std::size_t epochs = 40;
  std::uint64_t seed = 0;
  // Triples per update; a batch never spans two documents.
  std::size_t batch_triples = 256;
  std::size_t triple_cap = 5000;
  // Probability of keeping a triple whose three gold relations are NoRel.
  double norel_keep = 1.0;
  std::optional<std::array<double, kNumRelations>> class_weights;
  double dev_fraction = 0.10;

  LossWeights loss_weights() const {
    LossWeights w{lambda1, lambda2, lambda3, {1.0, 1.0, 1.0, 1.0}};
    if (class_weights) w.class_weights = *class_weights;
    return w;
  }

  void validate() const {
    loss_weights().validate();
    if (lr <= 0) throw Error(ErrorKind::kConfig, "lr must be positive");
    if (batch_triples == 0) throw Error(ErrorKind::kConfig, "batch_triples must be positive");
    if (norel_keep < 0 || norel_keep > 1) throw Error(ErrorKind::kConfig, "norel_keep must lie in [0, 1]");
    if (dev_fraction < 0 || dev_fraction >= 1) throw Error(ErrorKind::kConfig, "dev_fraction must lie in [0, 1)");
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j{{"lambda1", lambda1},         {"lambda2", lambda2},
                             {"lambda3", lambda3},         {"lr", lr},
                             {"epochs", epochs},           {"seed", seed},
                             {"batch_triples", batch_triples}, {"triple_cap", triple_cap},
                             {"norel_keep", norel_keep},   {"dev_fraction", dev_fraction}};
    j["class_weights"] = class_weights ? nlohmann::ordered_json(*class_weights) : nlohmann::ordered_json(nullptr);
    return j;
  }

  static JointTrainConfig from_json(const nlohmann::json& j) {
    JointTrainConfig c;
    try {
      c.lambda1 = j.value("lambda1", c.lambda1);
      c.lambda2 = j.value("lambda2", c.lambda2);
      c.lambda3 = j.value("lambda3", c.lambda3);
      c.lr = j.value("lr", c.lr);
      c.epochs = j.value("epochs", c.epochs);
      c.seed = j.value("seed", c.seed);
      c.batch_triples = j.value("batch_triples", c.batch_triples);
      c.triple_cap = j.value("triple_cap", c.triple_cap);
      c.norel_keep = j.value("norel_keep", c.norel_keep);
      c.dev_fraction = j.value("dev_fraction", c.dev_fraction);
      if (j.contains("class_weights") && !j["class_weights"].is_null()) {
        c.class_weights = j["class_weights"].get<std::array<double, kNumRelations>>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kConfig, std::string("training config: ") + e.what());
    }
    c.validate();
    return c;
  }
};

struct JointTrainResult {
  JointModel model;
  std::size_t best_epoch = 0;
  double best_dev_f1 = 0;
  std::vector<double> dev_f1;     // per epoch
  std::vector<double> train_loss;  // mean triple loss per epoch
};

namespace detail {

struct TrainingDoc {
  const Document* doc;
  std::vector<Eigen::VectorXd> vectors;
  std::vector<std::array<std::size_t, 3>> triples;
  std::vector<bool> norel_only;
};

inline double micro_f1(const PairScorer& scorer, const std::vector<Document>& docs) {
  std::vector<DocumentPrediction> pred;
  for (const auto& doc : docs) pred.push_back({doc.id, predict_relations(scorer, doc), {}});
  return eval_relations(pred, docs).micro().f1();
}

}  // namespace detail

// Accumulated loss and gradients of one batch of triples from one document.
// Returns the summed triple loss.
inline double batch_gradient(const JointModel& model, const PairEncoder& encoder,
                             const detail::TrainingDoc& td,
                             const std::vector<std::array<std::size_t, 3>>& triples,
                             const LossWeights& weights, const RectifierNet* net,
                             MlpGrad& grel, MlpGrad& gseg) {
  const std::size_t n = td.doc->events.size();
  std::vector<int> row_of(n * n, -1);
  std::vector<EventPair> pairs;
  for (const auto& t : triples) {
    for (auto [a, b] : {EventPair{t[0], t[1]}, EventPair{t[1], t[2]}, EventPair{t[0], t[2]}}) {
      if (row_of[a * n + b] < 0) {
        row_of[a * n + b] = static_cast<int>(pairs.size());
        pairs.push_back({a, b});
      }
    }
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(pairs.size()),
                    static_cast<Eigen::Index>(encoder.pair_dim()));
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    x.row(static_cast<Eigen::Index>(p)) =
        encoder.encode_pair(td.vectors[pairs[p].first], td.vectors[pairs[p].second]).transpose();
  }
  auto f = forward(model, x);
  Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(x.rows(), static_cast<Eigen::Index>(kNumRelations));
  Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(x.rows(), 1);
  double total = 0;
  const double scale = 1.0 / static_cast<double>(triples.size());
  TripleGrad g;
  for (const auto& t : triples) {
    const std::array<int, 3> rows = {row_of[t[0] * n + t[1]], row_of[t[1] * n + t[2]],
                                     row_of[t[0] * n + t[2]]};
    const std::array<PairAssignment, 3> gold = {pair_assignment(*td.doc, t[0], t[1]),
                                                pair_assignment(*td.doc, t[1], t[2]),
                                                pair_assignment(*td.doc, t[0], t[2])};
    const std::array<PairPrediction, 3> preds = {f.prediction(rows[0]), f.prediction(rows[1]),
                                                 f.prediction(rows[2])};
    total += triple_loss(preds, gold, weights, net, &g).total;
    for (std::size_t p = 0; p < 3; ++p) {
      dlogits.row(rows[p]) += scale * g.dlogits[p].transpose();
      dz(rows[p], 0) += scale * g.dzlogit[p];
    }
  }
  grel = backward(model.relation, x, f.hr, dlogits);
  gseg = backward(model.segment, x, f.hs, dz);
  return total;
}

// Trains both heads with AMSGrad on text-ordered triples of the training
// documents and keeps the epoch with the best dev micro-F1 over PC and CP.
inline JointTrainResult train_joint(const Corpus& corpus, const RectifierNet* constraints,
                                    const PairEncoder& encoder, const JointTrainConfig& cfg) {
  cfg.validate();
  const auto weights = cfg.loss_weights();
  if (weights.lambda3 > 0 && !constraints) {
    throw Error(ErrorKind::kConfig, "lambda3 > 0 requires a constraint file");
  }
  if (constraints) check_dim(*constraints, static_cast<Eigen::Index>(kFeatureDim));
  const RectifierNet* net = weights.lambda3 > 0 ? constraints : nullptr;

  const auto split = split_ranges(corpus, cfg.dev_fraction);
  std::vector<detail::TrainingDoc> docs;
  for (std::size_t d = 0; d < split.train_end; ++d) {
    const auto& doc = corpus.documents[d];
    Rng rng(derive_seed(cfg.seed, d));
    detail::TrainingDoc td{&doc, {}, sample_triples(doc.events.size(), cfg.triple_cap, rng), {}};
    if (td.triples.empty()) continue;
    for (const auto& t : td.triples) {
      td.norel_only.push_back(doc.relation(t[0], t[1]) == Relation::kNoRel &&
                              doc.relation(t[1], t[2]) == Relation::kNoRel &&
                              doc.relation(t[0], t[2]) == Relation::kNoRel);
    }
    td.vectors = encode_events(encoder, doc);
    docs.push_back(std::move(td));
  }
  if (docs.empty()) {
    throw Error(ErrorKind::kPrecondition, "empty training split: no training document has three events");
  }
  std::vector<Document> dev(corpus.documents.begin() + static_cast<std::ptrdiff_t>(split.train_end),
                            corpus.documents.begin() + static_cast<std::ptrdiff_t>(split.dev_end));

  JointTrainResult result;
  result.model = JointModel::init(encoder.pair_dim(), cfg.seed);
  JointModel model = result.model;
  AdamOptions opts;
  opts.lr = cfg.lr;
  opts.amsgrad = true;
  AdamOptimizer opt(opts);
  Rng rng(derive_seed(cfg.seed, 0x5eed));
  ModelScorer scorer(model, encoder);
  bool have_best = false;

  std::vector<std::size_t> doc_order(docs.size());
  std::iota(doc_order.begin(), doc_order.end(), std::size_t{0});
  MlpGrad grel, gseg;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(doc_order, rng);
    double epoch_loss = 0;
    std::size_t epoch_triples = 0;
    for (auto d : doc_order) {
      const auto& td = docs[d];
      std::vector<std::array<std::size_t, 3>> kept;
      for (std::size_t t = 0; t < td.triples.size(); ++t) {
        if (td.norel_only[t] && cfg.norel_keep < 1.0 && !bernoulli(rng, cfg.norel_keep)) continue;
        kept.push_back(td.triples[t]);
      }
      shuffle(kept, rng);
      for (std::size_t start = 0; start < kept.size(); start += cfg.batch_triples) {
        std::vector<std::array<std::size_t, 3>> batch(
            kept.begin() + static_cast<std::ptrdiff_t>(start),
            kept.begin() + static_cast<std::ptrdiff_t>(std::min(kept.size(), start + cfg.batch_triples)));
        epoch_loss += batch_gradient(model, encoder, td, batch, weights, net, grel, gseg);
        epoch_triples += batch.size();
        opt.begin_step();
        opt.update(0, model.relation.w1, grel.w1);
        opt.update(1, model.relation.b1, grel.b1);
        opt.update(2, model.relation.w2, grel.w2);
        opt.update(3, model.relation.b2, grel.b2);
        opt.update(4, model.segment.w1, gseg.w1);
        opt.update(5, model.segment.b1, gseg.b1);
        opt.update(6, model.segment.w2, gseg.w2);
        opt.update(7, model.segment.b2, gseg.b2);
      }
    }
    result.train_loss.push_back(epoch_triples ? epoch_loss / static_cast<double>(epoch_triples) : 0.0);
    // Without dev documents the last epoch wins.
    const double f1 = dev.empty() ? 0.0 : detail::micro_f1(scorer, dev);
    result.dev_f1.push_back(f1);
    if (!have_best || f1 > result.best_dev_f1 || dev.empty()) {
      have_best = true;
      result.model = model;
      result.best_epoch = epoch;
      result.best_dev_f1 = f1;
    }
  }
  return result;
}

}  // namespace evseg
