// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>

#include "textsense/core/matrix.hpp"
#include "textsense/model/tape.hpp"
#include "textsense/text/attention.hpp"

namespace textsense::text {

enum class Pooling { mean, cross_attention };

std::string_view to_string(Pooling pooling);
Pooling pooling_from_string(std::string_view name);

/// Weighted text/wireless fusion. `projection` maps text width C to the
/// wireless feature width D.
struct FusionConfig {
  double w_signal = 0.9;
  double w_text = 0.1;
  Pooling pooling = Pooling::cross_attention;
  Matrix projection;  // C x D

  void validate() const;
  /// Sets w_text and w_signal = 1 - w_text.
  static FusionConfig with_text_weight(double w_text, Pooling pooling, Matrix projection);
};

/// Fuses a batch of wireless features (B x D) with combined text tokens.
/// `combined` holds one token set shared by every sample (batch 1) or one per
/// sample (batch B). Returns w_signal * wireless + w_text * project(pool(tokens)).
Matrix fuse(const Matrix& wireless, const TokenMatrix& combined, const FusionConfig& cfg);

/// Tape form with a shared N x C token set; projection is a (possibly
/// trainable) C x D node.
model::Var fuse(model::Var wireless, model::Var combined_tokens, model::Var projection,
                const FusionConfig& cfg);

}  // namespace textsense::text
