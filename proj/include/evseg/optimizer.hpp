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

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include <nlohmann/json.hpp>

namespace evseg {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Keep the running maximum of the second-moment estimate (AMSGrad).
  bool amsgrad = false;

  nlohmann::ordered_json to_json() const {
    return {{"lr", lr}, {"beta1", beta1}, {"beta2", beta2}, {"eps", eps}, {"amsgrad", amsgrad}};
  }
};

// Adaptive-moment optimizer over a fixed list of parameter blocks. Call
// begin_step() once per update, then update() for every block in the same
// order each time.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(AdamOptions options) : options_(options) {}

  const AdamOptions& options() const { return options_; }

  void begin_step() { ++t_; }

  template <typename Params, typename Grads>
  void update(std::size_t block, Params& params, const Grads& grads) {
    const auto n = static_cast<Eigen::Index>(params.size());
    if (block >= state_.size()) state_.resize(block + 1);
    auto& s = state_[block];
    if (s.m.size() != n) {
      s.m = Eigen::ArrayXd::Zero(n);
      s.v = Eigen::ArrayXd::Zero(n);
      s.v_max = Eigen::ArrayXd::Zero(n);
    }
    Eigen::Map<Eigen::ArrayXd> p(params.data(), n);
    Eigen::Map<const Eigen::ArrayXd> g(grads.data(), n);
    s.m = options_.beta1 * s.m + (1 - options_.beta1) * g;
    s.v = options_.beta2 * s.v + (1 - options_.beta2) * g.square();
    const double c1 = 1 - std::pow(options_.beta1, static_cast<double>(t_));
    const double c2 = 1 - std::pow(options_.beta2, static_cast<double>(t_));
    if (options_.amsgrad) {
      s.v_max = s.v_max.max(s.v);
      p -= options_.lr * (s.m / c1) / ((s.v_max / c2).sqrt() + options_.eps);
    } else {
      p -= options_.lr * (s.m / c1) / ((s.v / c2).sqrt() + options_.eps);
    }
  }

 private:
  struct BlockState {
    Eigen::ArrayXd m, v, v_max;
  };

  AdamOptions options_;
  long t_ = 0;
  std::vector<BlockState> state_;
};

}  // namespace evseg
