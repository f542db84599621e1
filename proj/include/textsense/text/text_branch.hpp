// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "textsense/core/rng.hpp"
#include "textsense/model/tape.hpp"
#include "textsense/text/attention.hpp"
#include "textsense/text/embedding.hpp"
#include "textsense/text/fusion.hpp"

namespace textsense::text {

/// Initial token set for a label dictionary: every description of every
/// label, in `labels` order, as one (labels * L) x C matrix.
Matrix dictionary_tokens(const EmbeddingCache& cache, const std::vector<std::string>& labels);

struct TextBranchConfig {
  std::size_t num_heads = 4;
  double w_text = 0.1;
  Pooling pooling = Pooling::cross_attention;
};

/// Trainable text path: MHSA refinement of the label dictionary, combination
/// with the initial tokens, and weighted fusion into wireless features.
class TextBranch {
 public:
  /// `tokens` is the initial N x C dictionary; `signal_dim` is D.
  TextBranch(Matrix tokens, std::size_t signal_dim, const TextBranchConfig& cfg, Rng& rng);

  /// Fuses a B x D batch of wireless features.
  model::Var apply(model::Tape& tape, model::Var wireless);
  std::vector<model::Parameter*> parameters();

  const FusionConfig& fusion() const { return fusion_; }
  const Matrix& tokens() const { return tokens_; }

 private:
  Matrix tokens_;
  MhsaLayer mhsa_;
  model::Parameter projection_;
  FusionConfig fusion_;
};

}  // namespace textsense::text
