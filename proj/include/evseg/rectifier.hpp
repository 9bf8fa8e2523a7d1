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
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "evseg/error.hpp"
#include "evseg/optimizer.hpp"
#include "evseg/random.hpp"
#include "evseg/subgraph.hpp"

namespace evseg {

inline double sigmoid(double u) {
  if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
  double e = std::exp(u);
  return e / (1.0 + e);
}

// log(1 + exp(u)) without overflow.
inline double softplus(double u) {
  return u > 0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

// Two-layer rectifier network p = sigmoid(1 - sum_k relu(w_k . x + b_k)).
// Row k is the learned inequality; x satisfies it when w_k . x + b_k <= 0,
// i.e. when its hinge is inactive.
struct RectifierNet {
  Eigen::MatrixXd weights;  // K x dim
  Eigen::VectorXd bias;     // K

  std::size_t k() const { return static_cast<std::size_t>(weights.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(weights.cols()); }

  static RectifierNet zeros(std::size_t k, std::size_t dim = kFeatureDim) {
    return {Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(dim)),
            Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k))};
  }

  friend bool operator==(const RectifierNet& a, const RectifierNet& b) {
    return a.weights.rows() == b.weights.rows() && a.weights.cols() == b.weights.cols() &&
           a.weights == b.weights && a.bias == b.bias;
  }
};

inline Eigen::VectorXd to_eigen(const SubgraphFeature& f) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(kFeatureDim));
  for (std::size_t i = 0; i < kFeatureDim; ++i) x[static_cast<Eigen::Index>(i)] = f.x[i];
  return x;
}

inline void check_dim(const RectifierNet& net, Eigen::Index n) {
  if (net.weights.cols() != n) {
    throw Error(ErrorKind::kPrecondition, "feature dimension " + std::to_string(n) +
                                              " does not match network input " +
                                              std::to_string(net.weights.cols()));
  }
}

inline Eigen::VectorXd preactivations(const RectifierNet& net, const Eigen::VectorXd& x) {
  check_dim(net, x.size());
  return net.weights * x + net.bias;
}

inline double hinge_sum(const RectifierNet& net, const Eigen::VectorXd& x) {
  return preactivations(net, x).cwiseMax(0.0).sum();
}

inline double forward(const RectifierNet& net, const Eigen::VectorXd& x) {
  return sigmoid(1.0 - hinge_sum(net, x));
}

inline double forward(const RectifierNet& net, const SubgraphFeature& f) {
  return forward(net, to_eigen(f));
}

enum class CheckMode { kHard, kSoft };

inline bool check_structure(const RectifierNet& net, const Eigen::VectorXd& x, CheckMode mode) {
  if (mode == CheckMode::kSoft) return forward(net, x) >= 0.5;
  return (preactivations(net, x).array() <= 0.0).all();
}

inline bool check_structure(const RectifierNet& net, const SubgraphFeature& f, CheckMode mode) {
  return check_structure(net, to_eigen(f), mode);
}

struct RectifierGrad {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
  double loss = 0;
};

// Exact gradient of the mean binary cross-entropy over the rows of `x`
// (one example per row). The hinge subgradient at zero is zero.
inline RectifierGrad grad(const RectifierNet& net, const Eigen::MatrixXd& x,
                          const Eigen::VectorXd& t) {
  if (x.rows() == 0) throw Error(ErrorKind::kPrecondition, "empty batch");
  check_dim(net, x.cols());
  const double n = static_cast<double>(x.rows());
  Eigen::MatrixXd pre = (x * net.weights.transpose()).rowwise() + net.bias.transpose();
  Eigen::MatrixXd active = (pre.array() > 0.0).cast<double>();
  Eigen::VectorXd u = 1.0 - pre.cwiseMax(0.0).rowwise().sum().array();
  Eigen::VectorXd du(u.size());
  RectifierGrad g;
  for (Eigen::Index r = 0; r < u.size(); ++r) {
    g.loss += t[r] * softplus(-u[r]) + (1 - t[r]) * softplus(u[r]);
    du[r] = (sigmoid(u[r]) - t[r]) / n;
  }
  g.loss /= n;
  // dL/dpre[r,k] = -du[r] * active[r,k]
  Eigen::MatrixXd dpre = -(active.array().colwise() * du.array()).matrix();
  g.weights = dpre.transpose() * x;
  g.bias = dpre.colwise().sum().transpose();
  return g;
}

inline void stack_examples(std::span<const ConstraintExample> examples, Eigen::MatrixXd& x,
                           Eigen::VectorXd& t) {
  x.resize(static_cast<Eigen::Index>(examples.size()), static_cast<Eigen::Index>(kFeatureDim));
  t.resize(static_cast<Eigen::Index>(examples.size()));
  for (std::size_t r = 0; r < examples.size(); ++r) {
    for (std::size_t c = 0; c < kFeatureDim; ++c) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = examples[r].x.x[c];
    }
    t[static_cast<Eigen::Index>(r)] = examples[r].t;
  }
}

inline RectifierGrad grad(const RectifierNet& net, std::span<const ConstraintExample> batch) {
  Eigen::MatrixXd x;
  Eigen::VectorXd t;
  stack_examples(batch, x, t);
  return grad(net, x, t);
}

struct ConstraintTrainConfig {
  std::size_t k = 10;
  double lr = 1e-3;
  std::size_t max_epochs = 1000;
  std::uint64_t seed = 0;
  // 0 trains full-batch.
  std::size_t batch_size = 32;
  double holdout_fraction = 0.10;
};

struct ConstraintTrainResult {
  RectifierNet net;
  std::size_t best_epoch = 0;
  double holdout_accuracy = 0;
  double holdout_loss = 0;
  std::size_t epochs_run = 0;
  AdamOptions optimizer;
};

// Soft-mode accuracy (p >= 0.5 predicts t = 1) and mean cross-entropy.
inline std::pair<double, double> evaluate(const RectifierNet& net, const Eigen::MatrixXd& x,
                                          const Eigen::VectorXd& t) {
  if (x.rows() == 0) return {0.0, 0.0};
  Eigen::MatrixXd pre = (x * net.weights.transpose()).rowwise() + net.bias.transpose();
  Eigen::VectorXd u = 1.0 - pre.cwiseMax(0.0).rowwise().sum().array();
  std::size_t correct = 0;
  double loss = 0;
  for (Eigen::Index r = 0; r < u.size(); ++r) {
    bool predicted = sigmoid(u[r]) >= 0.5;
    if (predicted == (t[r] > 0.5)) ++correct;
    loss += t[r] * softplus(-u[r]) + (1 - t[r]) * softplus(u[r]);
  }
  const double n = static_cast<double>(x.rows());
  return {static_cast<double>(correct) / n, loss / n};
}

inline double accuracy(const RectifierNet& net, std::span<const ConstraintExample> examples,
                       CheckMode mode = CheckMode::kSoft) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : examples) {
    if (check_structure(net, ex.x, mode) == (ex.t == 1)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

// Fits the network with Adam on a seeded 90/10 split of `examples` and
// returns the parameters with the best held-out accuracy (ties broken by
// lower held-out loss).
inline ConstraintTrainResult train(std::span<const ConstraintExample> examples,
                                   const ConstraintTrainConfig& cfg) {
  if (cfg.k == 0) throw Error(ErrorKind::kConfig, "number of constraints must be positive");
  std::size_t positives = 0;
  for (const auto& ex : examples) positives += ex.t == 1;
  if (positives == 0 || positives == examples.size()) {
    throw Error(ErrorKind::kPrecondition,
                "constraint learning needs both legitimate and illegitimate examples (got " +
                    std::to_string(positives) + " of " + std::to_string(examples.size()) +
                    " positive)");
  }

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order, rng);
  auto holdout = static_cast<std::size_t>(
      std::ceil(cfg.holdout_fraction * static_cast<double>(examples.size())));
  if (holdout >= examples.size()) holdout = 0;
  std::vector<ConstraintExample> fit, held;
  for (std::size_t r = 0; r < order.size(); ++r) {
    (r < order.size() - holdout ? fit : held).push_back(examples[order[r]]);
  }
  Eigen::MatrixXd fit_x, held_x;
  Eigen::VectorXd fit_t, held_t;
  stack_examples(fit, fit_x, fit_t);
  stack_examples(held.empty() ? std::span<const ConstraintExample>(fit) : held, held_x, held_t);

  const auto k = static_cast<Eigen::Index>(cfg.k);
  const auto dim = static_cast<Eigen::Index>(kFeatureDim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(kFeatureDim));
  RectifierNet net = RectifierNet::zeros(cfg.k);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) net.weights(r, c) = uniform_real(rng, -scale, scale);
  }

  AdamOptions opts;
  opts.lr = cfg.lr;
  AdamOptimizer adam(opts);

  ConstraintTrainResult result;
  result.optimizer = opts;
  result.net = net;
  std::tie(result.holdout_accuracy, result.holdout_loss) = evaluate(net, held_x, held_t);

  const std::size_t n = fit.size();
  const std::size_t batch = cfg.batch_size == 0 ? n : std::min(cfg.batch_size, n);
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  Eigen::MatrixXd bx;
  Eigen::VectorXd bt;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    if (batch < n) shuffle(rows, rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t len = std::min(batch, n - start);
      bx.resize(static_cast<Eigen::Index>(len), dim);
      bt.resize(static_cast<Eigen::Index>(len));
      for (std::size_t r = 0; r < len; ++r) {
        bx.row(static_cast<Eigen::Index>(r)) = fit_x.row(static_cast<Eigen::Index>(rows[start + r]));
        bt[static_cast<Eigen::Index>(r)] = fit_t[static_cast<Eigen::Index>(rows[start + r])];
      }
      auto g = grad(net, bx, bt);
      adam.begin_step();
      adam.update(0, net.weights, g.weights);
      adam.update(1, net.bias, g.bias);
    }
    result.epochs_run = epoch;
    auto [acc, loss] = evaluate(net, held_x, held_t);
    if (acc > result.holdout_accuracy ||
        (acc == result.holdout_accuracy && loss < result.holdout_loss)) {
      result.net = net;
      result.best_epoch = epoch;
      result.holdout_accuracy = acc;
      result.holdout_loss = loss;
    }
  }
  return result;
}

// Exported form of the learned inequalities; row k reads
// w_k . X + b_k <= 0 for every legitimate structure X.
struct ConstraintSet {
  struct Row {
    std::vector<double> w;
    double b = 0;

    friend bool operator==(const Row&, const Row&) = default;
  };
  std::vector<Row> rows;

  std::size_t k() const { return rows.size(); }

  friend bool operator==(const ConstraintSet&, const ConstraintSet&) = default;
};

inline ConstraintSet extract_constraints(const RectifierNet& net) {
  ConstraintSet set;
  for (Eigen::Index r = 0; r < net.weights.rows(); ++r) {
    ConstraintSet::Row row;
    row.w.resize(static_cast<std::size_t>(net.weights.cols()));
    for (Eigen::Index c = 0; c < net.weights.cols(); ++c) {
      row.w[static_cast<std::size_t>(c)] = net.weights(r, c);
    }
    row.b = net.bias[r];
    set.rows.push_back(std::move(row));
  }
  return set;
}

inline RectifierNet to_network(const ConstraintSet& set) {
  if (set.rows.empty()) throw Error(ErrorKind::kValidation, "constraint set is empty");
  const std::size_t dim = set.rows.front().w.size();
  RectifierNet net = RectifierNet::zeros(set.rows.size(), dim);
  for (std::size_t r = 0; r < set.rows.size(); ++r) {
    const auto& row = set.rows[r];
    if (row.w.size() != dim) throw Error(ErrorKind::kValidation, "ragged constraint rows");
    for (std::size_t c = 0; c < dim; ++c) {
      double v = row.w[c];
      if (!std::isfinite(v)) throw Error(ErrorKind::kValidation, "non-finite constraint weight");
      net.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
    if (!std::isfinite(row.b)) throw Error(ErrorKind::kValidation, "non-finite constraint bias");
    net.bias[static_cast<Eigen::Index>(r)] = row.b;
  }
  return net;
}

inline nlohmann::ordered_json constraints_to_json(const ConstraintSet& set,
                                                  const nlohmann::ordered_json& header = nullptr) {
  nlohmann::ordered_json j;
  j["k"] = set.k();
  j["dim"] = set.rows.empty() ? kFeatureDim : set.rows.front().w.size();
  if (!header.is_null()) j["header"] = header;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : set.rows) rows.push_back({{"w", row.w}, {"b", row.b}});
  j["rows"] = std::move(rows);
  return j;
}

inline ConstraintSet constraints_from_json(const nlohmann::json& j) {
  ConstraintSet set;
  try {
    const auto k = j.at("k").get<std::size_t>();
    const auto dim = j.at("dim").get<std::size_t>();
    for (const auto& row : j.at("rows")) {
      ConstraintSet::Row r;
      r.w = row.at("w").get<std::vector<double>>();
      r.b = row.at("b").get<double>();
      if (r.w.size() != dim) throw Error(ErrorKind::kValidation, "row width differs from dim");
      set.rows.push_back(std::move(r));
    }
    if (set.rows.size() != k) throw Error(ErrorKind::kValidation, "row count differs from k");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("constraint file: ") + e.what());
  }
  return set;
}

inline ConstraintSet load_constraints(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open constraint file '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, "constraint file '" + path.string() + "': " + e.what());
  }
  return constraints_from_json(j);
}

}  // namespace evseg
