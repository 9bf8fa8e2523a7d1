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
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "evseg/error.hpp"
#include "evseg/random.hpp"
#include "evseg/rectifier.hpp"
#include "evseg/relation.hpp"
#include "evseg/subgraph.hpp"

namespace evseg {

// Floor applied to probabilities inside every log.
inline constexpr double kProbFloor = 1e-12;

// One hidden ReLU layer; the hidden width is the mean of the input and
// output widths.
struct Mlp {
  Eigen::MatrixXd w1;  // hidden x in
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // out x hidden
  Eigen::VectorXd b2;

  // Hidden weights uniform in +-1/sqrt(in); output layer zero.
  static Mlp init(std::size_t in, std::size_t out, Rng& rng) {
    const auto hidden = static_cast<Eigen::Index>(std::max<std::size_t>(1, (in + out) / 2));
    const auto n_in = static_cast<Eigen::Index>(in);
    const auto n_out = static_cast<Eigen::Index>(out);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    Mlp m;
    m.w1.resize(hidden, n_in);
    for (Eigen::Index r = 0; r < hidden; ++r) {
      for (Eigen::Index c = 0; c < n_in; ++c) m.w1(r, c) = uniform_real(rng, -scale, scale);
    }
    m.b1 = Eigen::VectorXd::Zero(hidden);
    m.w2 = Eigen::MatrixXd::Zero(n_out, hidden);
    m.b2 = Eigen::VectorXd::Zero(n_out);
    return m;
  }

  // Rows of x are inputs.
  Eigen::MatrixXd hidden(const Eigen::MatrixXd& x) const {
    return ((x * w1.transpose()).rowwise() + b1.transpose()).cwiseMax(0.0);
  }

  Eigen::MatrixXd output(const Eigen::MatrixXd& h) const {
    return (h * w2.transpose()).rowwise() + b2.transpose();
  }

  friend bool operator==(const Mlp& a, const Mlp& b) {
    return a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 && a.b2 == b.b2;
  }
};

struct MlpGrad {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
};

// Backpropagates d loss / d output (rows aligned with x) through the MLP.
inline MlpGrad backward(const Mlp& m, const Eigen::MatrixXd& x, const Eigen::MatrixXd& h,
                        const Eigen::MatrixXd& dout) {
  MlpGrad g;
  g.w2 = dout.transpose() * h;
  g.b2 = dout.colwise().sum().transpose();
  Eigen::MatrixXd dh = (dout * m.w2).cwiseProduct((h.array() > 0.0).cast<double>().matrix());
  g.w1 = dh.transpose() * x;
  g.b1 = dh.colwise().sum().transpose();
  return g;
}

struct PairPrediction {
  std::array<double, kNumRelations> y{};  // softmax over relations
  double z = 0.5;                         // same-segment probability
};

struct JointModel {
  Mlp relation;  // -> 4 logits
  Mlp segment;   // -> 1 logit

  static JointModel init(std::size_t input_dim, std::uint64_t seed) {
    Rng rng(seed);
    JointModel m;
    m.relation = Mlp::init(input_dim, kNumRelations, rng);
    m.segment = Mlp::init(input_dim, 1, rng);
    return m;
  }

  std::size_t input_dim() const { return static_cast<std::size_t>(relation.w1.cols()); }

  friend bool operator==(const JointModel&, const JointModel&) = default;
};

// Activations of one forward pass over a batch of pair representations.
struct JointForward {
  Eigen::MatrixXd hr, hs;    // hidden activations
  Eigen::MatrixXd logits;    // n x 4
  Eigen::MatrixXd y;         // n x 4 softmax
  Eigen::VectorXd z;         // n

  PairPrediction prediction(Eigen::Index row) const {
    PairPrediction p;
    for (std::size_t r = 0; r < kNumRelations; ++r) p.y[r] = y(row, static_cast<Eigen::Index>(r));
    p.z = z[row];
    return p;
  }
};

inline JointForward forward(const JointModel& model, const Eigen::MatrixXd& x) {
  if (static_cast<std::size_t>(x.cols()) != model.input_dim()) {
    throw Error(ErrorKind::kPrecondition, "pair representation has dimension " +
                                              std::to_string(x.cols()) + ", model expects " +
                                              std::to_string(model.input_dim()));
  }
  JointForward f;
  f.hr = model.relation.hidden(x);
  f.hs = model.segment.hidden(x);
  f.logits = model.relation.output(f.hr);
  Eigen::VectorXd zl = model.segment.output(f.hs).col(0);
  f.y.resize(x.rows(), static_cast<Eigen::Index>(kNumRelations));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    Eigen::RowVectorXd e = (f.logits.row(r).array() - f.logits.row(r).maxCoeff()).exp();
    f.y.row(r) = e / e.sum();
  }
  f.z = zl.unaryExpr([](double u) { return sigmoid(u); });
  return f;
}

inline PairPrediction predict_pair(const JointModel& model, const Eigen::VectorXd& x) {
  return forward(model, x.transpose()).prediction(0);
}

// Relaxed 42-dim constraint feature of a triple from its three pair
// predictions (i, j), (j, k), (i, k).
inline Eigen::VectorXd soft_featurize(const PairPrediction& ij, const PairPrediction& jk,
                                      const PairPrediction& ik) {
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(kFeatureDim));
  for (std::size_t r = 0; r < kNumRelations; ++r) {
    psi[static_cast<Eigen::Index>(r)] = ij.y[r];
    psi[static_cast<Eigen::Index>(kPairBlock + r)] = jk.y[r];
  }
  psi[4] = ij.z;
  psi[static_cast<Eigen::Index>(kPairBlock + 4)] = jk.z;
  for (std::size_t s = 0; s < kPowersetSize; ++s) {
    if (auto a = subset_assignment(s)) {
      psi[static_cast<Eigen::Index>(kPowersetOffset + s)] =
          ik.y[index_of(a->relation)] * (a->same_segment ? ik.z : 1.0 - ik.z);
    }
  }
  return psi;
}

// -log(sigmoid(1 - sum_k relu(w_k . psi + b_k))); optionally writes
// d loss / d psi.
inline double loss_cons(const RectifierNet& net, const Eigen::VectorXd& psi,
                        Eigen::VectorXd* grad_psi = nullptr) {
  Eigen::VectorXd pre = preactivations(net, psi);
  const double p = sigmoid(1.0 - pre.cwiseMax(0.0).sum());
  if (grad_psi) {
    grad_psi->setZero(psi.size());
    if (p > kProbFloor) {
      for (Eigen::Index k = 0; k < pre.size(); ++k) {
        if (pre[k] > 0) *grad_psi += (1.0 - p) * net.weights.row(k).transpose();
      }
    }
  }
  return -std::log(std::max(p, kProbFloor));
}

struct LossWeights {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 1.0;
  std::array<double, kNumRelations> class_weights{1.0, 1.0, 1.0, 1.0};

  void validate() const {
    if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0) {
      throw Error(ErrorKind::kConfig, "loss weights must be non-negative");
    }
    for (double w : class_weights) {
      if (w < 0) throw Error(ErrorKind::kConfig, "class weights must be non-negative");
    }
  }
};

struct TripleLoss {
  double total = 0, sub = 0, seg = 0, cons = 0;
};

// d loss / d (relation logits, segment logit) of the pairs (i, j), (j, k),
// (i, k).
struct TripleGrad {
  std::array<Eigen::Vector4d, 3> dlogits;
  std::array<double, 3> dzlogit{};
};

// Loss of one triple: mean 4-class cross-entropy and mean same-segment
// binary cross-entropy over its three pairs, plus the constraint loss on the
// relaxed triple feature. `net` may be null when lambda3 is zero.
inline TripleLoss triple_loss(const std::array<PairPrediction, 3>& preds,
                              const std::array<PairAssignment, 3>& gold, const LossWeights& w,
                              const RectifierNet* net, TripleGrad* grad = nullptr) {
  w.validate();
  if (w.lambda3 > 0 && !net) throw Error(ErrorKind::kConfig, "lambda3 > 0 needs a constraint network");
  TripleLoss loss;
  std::array<Eigen::Vector4d, 3> dy;
  std::array<double, 3> dz{};
  for (auto& v : dy) v.setZero();
  if (grad) {
    for (auto& v : grad->dlogits) v.setZero();
    grad->dzlogit = {0, 0, 0};
  }

  for (std::size_t p = 0; p < 3; ++p) {
    const auto g = index_of(gold[p].relation);
    const double yg = preds[p].y[g];
    const double cw = w.class_weights[g];
    loss.sub += -cw * std::log(std::max(yg, kProbFloor)) / 3.0;
    if (grad && yg > kProbFloor && w.lambda1 > 0) {
      for (std::size_t r = 0; r < kNumRelations; ++r) {
        grad->dlogits[p][static_cast<Eigen::Index>(r)] +=
            w.lambda1 * cw * (preds[p].y[r] - (r == g ? 1.0 : 0.0)) / 3.0;
      }
    }
    const double z = preds[p].z;
    const double q = gold[p].same_segment ? z : 1.0 - z;
    loss.seg += -std::log(std::max(q, kProbFloor)) / 3.0;
    if (grad && q > kProbFloor && w.lambda2 > 0) {
      grad->dzlogit[p] += w.lambda2 * (z - (gold[p].same_segment ? 1.0 : 0.0)) / 3.0;
    }
  }

  if (w.lambda3 > 0) {
    Eigen::VectorXd psi = soft_featurize(preds[0], preds[1], preds[2]);
    Eigen::VectorXd gpsi;
    loss.cons = loss_cons(*net, psi, grad ? &gpsi : nullptr);
    if (grad) {
      gpsi *= w.lambda3;
      for (std::size_t r = 0; r < kNumRelations; ++r) {
        dy[0][static_cast<Eigen::Index>(r)] += gpsi[static_cast<Eigen::Index>(r)];
        dy[1][static_cast<Eigen::Index>(r)] += gpsi[static_cast<Eigen::Index>(kPairBlock + r)];
      }
      dz[0] += gpsi[4];
      dz[1] += gpsi[static_cast<Eigen::Index>(kPairBlock + 4)];
      const auto& ik = preds[2];
      for (std::size_t s = 0; s < kPowersetSize; ++s) {
        auto a = subset_assignment(s);
        if (!a) continue;
        const double gs = gpsi[static_cast<Eigen::Index>(kPowersetOffset + s)];
        const auto r = index_of(a->relation);
        dy[2][static_cast<Eigen::Index>(r)] += gs * (a->same_segment ? ik.z : 1.0 - ik.z);
        dz[2] += gs * (a->same_segment ? ik.y[r] : -ik.y[r]);
      }
      // Chain through the softmax and the sigmoid.
      for (std::size_t p = 0; p < 3; ++p) {
        Eigen::Vector4d y(preds[p].y[0], preds[p].y[1], preds[p].y[2], preds[p].y[3]);
        grad->dlogits[p] += y.cwiseProduct(dy[p] - Eigen::Vector4d::Constant(dy[p].dot(y)));
        grad->dzlogit[p] += dz[p] * preds[p].z * (1.0 - preds[p].z);
      }
    }
  }
  loss.total = w.lambda1 * loss.sub + w.lambda2 * loss.seg + w.lambda3 * loss.cons;
  return loss;
}

namespace detail {

inline nlohmann::ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::ordered_json data = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols)) {
    throw Error(ErrorKind::kParse, "matrix data does not match its shape");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t n = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[n++].get<double>();
  }
  return m;
}

inline nlohmann::ordered_json mlp_to_json(const Mlp& m) {
  return {{"w1", matrix_to_json(m.w1)},
          {"b1", matrix_to_json(m.b1)},
          {"w2", matrix_to_json(m.w2)},
          {"b2", matrix_to_json(m.b2)}};
}

inline Mlp mlp_from_json(const nlohmann::json& j) {
  Mlp m;
  m.w1 = matrix_from_json(j.at("w1"));
  m.b1 = matrix_from_json(j.at("b1")).col(0);
  m.w2 = matrix_from_json(j.at("w2"));
  m.b2 = matrix_from_json(j.at("b2")).col(0);
  if (m.b1.size() != m.w1.rows() || m.w2.cols() != m.w1.rows() || m.b2.size() != m.w2.rows()) {
    throw Error(ErrorKind::kParse, "inconsistent layer shapes in model checkpoint");
  }
  return m;
}

}  // namespace detail

inline constexpr int kCheckpointVersion = 1;

// `extra` carries the training config echo, encoder description and any
// run metadata; it is stored verbatim.
inline nlohmann::ordered_json model_to_json(const JointModel& model,
                                            const nlohmann::ordered_json& extra = nullptr) {
  nlohmann::ordered_json j;
  j["format"] = "evseg-joint-model";
  j["version"] = kCheckpointVersion;
  j["input_dim"] = model.input_dim();
  if (!extra.is_null()) j["meta"] = extra;
  j["relation"] = detail::mlp_to_json(model.relation);
  j["segment"] = detail::mlp_to_json(model.segment);
  return j;
}

inline JointModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "evseg-joint-model") {
      throw Error(ErrorKind::kParse, "not a joint model checkpoint");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw Error(ErrorKind::kParse, "unsupported checkpoint version");
    }
    JointModel m;
    m.relation = detail::mlp_from_json(j.at("relation"));
    m.segment = detail::mlp_from_json(j.at("segment"));
    if (m.relation.w2.rows() != static_cast<Eigen::Index>(kNumRelations) || m.segment.w2.rows() != 1 ||
        m.relation.w1.cols() != m.segment.w1.cols() ||
        static_cast<std::size_t>(m.relation.w1.cols()) != j.at("input_dim").get<std::size_t>()) {
      throw Error(ErrorKind::kParse, "checkpoint head shapes do not match");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("malformed checkpoint: ") + e.what());
  }
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, "'" + path.string() + "': " + e.what());
  }
}

}  // namespace evseg
