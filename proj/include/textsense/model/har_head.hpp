// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "textsense/core/rng.hpp"
#include "textsense/model/tape.hpp"

namespace textsense::model {

/// Two affine maps with a ReLU between: input -> hidden -> class logits.
class HarHead {
 public:
  HarHead() = default;
  HarHead(std::size_t input_dim, std::size_t hidden_dim, std::size_t num_classes, Rng& rng);

  /// B x input -> B x classes logits.
  Var forward(Tape& tape, Var features);
  std::vector<Parameter*> parameters();

  std::size_t input_dim() const { return w1_.value.rows(); }
  std::size_t num_classes() const { return w2_.value.cols(); }

 private:
  Parameter w1_, b1_, w2_, b2_;
};

/// Single affine map, used as the linear baseline for gradient checks.
class AffineLayer {
 public:
  AffineLayer() = default;
  AffineLayer(std::size_t input_dim, std::size_t output_dim, Rng& rng, std::string name = "affine");

  Var forward(Tape& tape, Var x);
  std::vector<Parameter*> parameters() { return {&w_, &b_}; }

 private:
  Parameter w_, b_;
};

/// Uniform in +-1/sqrt(fan_in).
Matrix uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng);

}  // namespace textsense::model
