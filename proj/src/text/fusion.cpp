// SPDX-License-Identifier: Apache-2.0
#include "textsense/text/fusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "textsense/model/ops.hpp"

namespace textsense::text {

using model::Tape;
using model::Var;

std::string_view to_string(Pooling pooling) {
  return pooling == Pooling::mean ? "mean" : "cross_attention";
}

Pooling pooling_from_string(std::string_view name) {
  if (name == "mean") return Pooling::mean;
  if (name == "cross_attention") return Pooling::cross_attention;
  throw std::invalid_argument("unknown pooling '" + std::string(name) +
                              "' (expected mean or cross_attention)");
}

void FusionConfig::validate() const {
  if (!(w_signal >= 0.0) || !(w_text >= 0.0)) {
    throw std::invalid_argument("FusionConfig: weights must be non-negative");
  }
  if (std::abs(w_signal + w_text - 1.0) > 1e-12) {
    throw std::invalid_argument("FusionConfig: w_signal + w_text must equal 1");
  }
  if (!projection.all_finite()) throw std::invalid_argument("FusionConfig: non-finite projection");
}

FusionConfig FusionConfig::with_text_weight(double w_text, Pooling pooling, Matrix projection) {
  FusionConfig cfg;
  cfg.w_text = w_text;
  cfg.w_signal = 1.0 - w_text;
  cfg.pooling = pooling;
  cfg.projection = std::move(projection);
  cfg.validate();
  return cfg;
}

Var fuse(Var wireless, Var combined_tokens, Var projection, const FusionConfig& cfg) {
  cfg.validate();
  if (combined_tokens.cols() != projection.rows()) {
    throw std::invalid_argument("fuse: text width " + std::to_string(combined_tokens.cols()) +
                                " does not match projection " + projection.value().shape_string());
  }
  if (projection.cols() != wireless.cols()) {
    throw std::invalid_argument("fuse: projected text width " + std::to_string(projection.cols()) +
                                " does not match wireless width " +
                                std::to_string(wireless.cols()));
  }
  const Var signal_part = model::scale(wireless, cfg.w_signal);
  if (cfg.pooling == Pooling::mean) {
    const Var text = model::matmul(model::mean_rows(combined_tokens), projection);
    return model::add_row(signal_part, model::scale(text, cfg.w_text));
  }
  // Each wireless feature queries the projected tokens.
  const Var keys = model::matmul(combined_tokens, projection);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(wireless.cols()));
  const Var weights = model::softmax_rows(model::scale(model::matmul_bt(wireless, keys), inv_sqrt_d));
  const Var text = model::matmul(weights, keys);
  return model::add(signal_part, model::scale(text, cfg.w_text));
}

Matrix fuse(const Matrix& wireless, const TokenMatrix& combined, const FusionConfig& cfg) {
  cfg.validate();
  if (combined.batch() != 1 && combined.batch() != wireless.rows()) {
    throw std::invalid_argument("fuse: " + std::to_string(combined.batch()) +
                                " token sets for " + std::to_string(wireless.rows()) + " samples");
  }
  if (combined.batch() == 1) {
    Tape tape;
    return fuse(tape.constant(wireless), tape.constant(combined.sample(0)),
                tape.constant(cfg.projection), cfg)
        .value();
  }
  Matrix out(wireless.rows(), wireless.cols());
  for (std::size_t b = 0; b < wireless.rows(); ++b) {
    Tape tape;
    const Var row = tape.constant(Matrix::row_vector(wireless.row(b)));
    const Var fused =
        fuse(row, tape.constant(combined.sample(b)), tape.constant(cfg.projection), cfg);
    std::copy(fused.value().data().begin(), fused.value().data().end(), out.row(b).begin());
  }
  return out;
}

}  // namespace textsense::text
