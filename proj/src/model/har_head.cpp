// SPDX-License-Identifier: Apache-2.0
#include "textsense/model/har_head.hpp"

#include <cmath>

#include "textsense/model/ops.hpp"

namespace textsense::model {

Matrix uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(-bound, bound);
  return m;
}

HarHead::HarHead(std::size_t input_dim, std::size_t hidden_dim, std::size_t num_classes, Rng& rng)
    : w1_("har.w1", uniform_init(input_dim, hidden_dim, input_dim, rng)),
      b1_("har.b1", uniform_init(1, hidden_dim, input_dim, rng)),
      w2_("har.w2", uniform_init(hidden_dim, num_classes, hidden_dim, rng)),
      b2_("har.b2", uniform_init(1, num_classes, hidden_dim, rng)) {}

Var HarHead::forward(Tape& tape, Var features) {
  const Var hidden = relu(add_row(matmul(features, tape.parameter(w1_)), tape.parameter(b1_)));
  return add_row(matmul(hidden, tape.parameter(w2_)), tape.parameter(b2_));
}

std::vector<Parameter*> HarHead::parameters() { return {&w1_, &b1_, &w2_, &b2_}; }

AffineLayer::AffineLayer(std::size_t input_dim, std::size_t output_dim, Rng& rng, std::string name)
    : w_(name + ".w", uniform_init(input_dim, output_dim, input_dim, rng)),
      b_(name + ".b", uniform_init(1, output_dim, input_dim, rng)) {}

Var AffineLayer::forward(Tape& tape, Var x) {
  return add_row(matmul(x, tape.parameter(w_)), tape.parameter(b_));
}

}  // namespace textsense::model
