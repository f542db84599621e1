// SPDX-License-Identifier: Apache-2.0
#include "textsense/model/tal_pyramid.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "textsense/model/har_head.hpp"
#include "textsense/model/ops.hpp"

namespace textsense::model {

TalPyramid::TalPyramid(const TalPyramidConfig& cfg, Rng& rng) : cfg_(cfg) {
  if (cfg.num_levels < 1) throw std::invalid_argument("TalPyramid: need at least one level");
  if (cfg.kernel % 2 == 0) throw std::invalid_argument("TalPyramid: kernel must be odd");
  for (std::size_t i = 0; i < cfg.num_levels; ++i) {
    const std::size_t in = (i == 0 ? cfg.input_dim : cfg.hidden_dim) * cfg.kernel;
    const std::string tag = "tal.conv" + std::to_string(i);
    conv_w_.emplace_back(tag + ".w", uniform_init(in, cfg.hidden_dim, in, rng));
    conv_b_.emplace_back(tag + ".b", uniform_init(1, cfg.hidden_dim, in, rng));
  }
  cls_w_ = Parameter("tal.cls.w", uniform_init(cfg.hidden_dim, cfg.num_classes + 1, cfg.hidden_dim, rng));
  cls_b_ = Parameter("tal.cls.b", uniform_init(1, cfg.num_classes + 1, cfg.hidden_dim, rng));
  reg_w_ = Parameter("tal.reg.w", uniform_init(cfg.hidden_dim, 2, cfg.hidden_dim, rng));
  reg_b_ = Parameter("tal.reg.b", uniform_init(1, 2, cfg.hidden_dim, rng));
}

std::vector<LevelOutput> TalPyramid::forward(Tape& tape, Var x) {
  if (x.cols() != cfg_.input_dim) {
    throw std::invalid_argument("TalPyramid: input width " + std::to_string(x.cols()) +
                                ", expected " + std::to_string(cfg_.input_dim));
  }
  const Var cls_w = tape.parameter(cls_w_);
  const Var cls_b = tape.parameter(cls_b_);
  const Var reg_w = tape.parameter(reg_w_);
  const Var reg_b = tape.parameter(reg_b_);
  const std::size_t pad = cfg_.kernel / 2;

  std::vector<LevelOutput> outputs;
  Var features = x;
  std::size_t stride = 1;
  for (std::size_t i = 0; i < cfg_.num_levels; ++i) {
    const std::size_t step = i == 0 ? 1 : 2;
    const Var cols = im2col(features, cfg_.kernel, step, pad);
    features = relu(add_row(matmul(cols, tape.parameter(conv_w_[i])), tape.parameter(conv_b_[i])));
    if (i > 0) stride *= 2;
    outputs.push_back({add_row(matmul(features, cls_w), cls_b),
                       softplus(add_row(matmul(features, reg_w), reg_b)), stride});
  }
  return outputs;
}

std::vector<Parameter*> TalPyramid::parameters() {
  std::vector<Parameter*> params;
  for (std::size_t i = 0; i < conv_w_.size(); ++i) {
    params.push_back(&conv_w_[i]);
    params.push_back(&conv_b_[i]);
  }
  for (Parameter* p : {&cls_w_, &cls_b_, &reg_w_, &reg_b_}) params.push_back(p);
  return params;
}

std::size_t level_length(std::size_t length, std::size_t level) {
  const std::size_t stride = std::size_t{1} << level;
  return (length + stride - 1) / stride;
}

std::vector<LevelTargets> build_level_targets(std::span<const FrameSegment> segments,
                                              std::size_t length, std::size_t num_levels) {
  std::vector<LevelTargets> levels;
  for (std::size_t i = 0; i < num_levels; ++i) {
    LevelTargets level;
    level.stride = std::size_t{1} << i;
    const std::size_t n = level_length(length, i);
    level.classes.assign(n, 0);
    std::vector<double> offsets;
    const auto s = static_cast<double>(level.stride);
    for (std::size_t t = 0; t < n; ++t) {
      const double frame = static_cast<double>(t) * s;
      for (const auto& seg : segments) {
        if (frame >= seg.start && frame < seg.end) {
          level.classes[t] = seg.class_id + 1;
          level.positives.push_back(t);
          offsets.push_back((frame - seg.start) / s);
          offsets.push_back((seg.end - frame) / s);
          break;
        }
      }
    }
    level.offsets = Matrix(level.positives.size(), 2, std::move(offsets));
    levels.push_back(std::move(level));
  }
  return levels;
}

Var tal_total_loss(std::span<const LevelOutput> outputs, std::span<const LevelTargets> targets,
                   std::vector<LevelLoss>* parts, LossStats* stats) {
  if (outputs.size() != targets.size() || outputs.empty()) {
    throw std::invalid_argument("tal_total_loss: " + std::to_string(outputs.size()) +
                                " output levels vs " + std::to_string(targets.size()) +
                                " target levels");
  }
  if (parts) parts->clear();
  Var total;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto& out = outputs[i];
    const auto& tgt = targets[i];
    if (out.logits.rows() != tgt.classes.size()) {
      throw std::invalid_argument("tal_total_loss: level " + std::to_string(i) + " has " +
                                  std::to_string(out.logits.rows()) + " positions but " +
                                  std::to_string(tgt.classes.size()) + " targets");
    }
    const Var cls = focal(softmax_rows(out.logits), tgt.classes, kFocalGamma, kFocalAlpha, stats);
    Var level = scale(cls, kClassificationWeight);
    LevelLoss part{cls.item(), 0.0};
    if (!tgt.positives.empty()) {
      const Var loc = tiou_loss(gather_rows(out.offsets, tgt.positives), tgt.offsets);
      part.localization = loc.item();
      level = add(level, scale(loc, kLocalizationWeight));
    } else if (stats) {
      ++stats->empty_batches;
    }
    if (parts) parts->push_back(part);
    total = total.valid() ? add(total, level) : level;
  }
  return total;
}

std::vector<eval::Detection> decode_detections(std::span<const LevelOutput> outputs,
                                               std::size_t length, const DecodeConfig& cfg) {
  const double duration = static_cast<double>(length) / cfg.frame_rate;
  std::vector<eval::Detection> candidates;
  for (const auto& level : outputs) {
    const Matrix probs = softmax_rows(level.logits.value());
    const Matrix& offsets = level.offsets.value();
    const auto s = static_cast<double>(level.stride);
    for (std::size_t t = 0; t < probs.rows(); ++t) {
      std::size_t best = 1;
      for (std::size_t c = 2; c < probs.cols(); ++c)
        if (probs(t, c) > probs(t, best)) best = c;
      const double score = probs(t, best);
      if (score < cfg.min_score) continue;
      const double frame = static_cast<double>(t) * s;
      const double start = std::max(0.0, (frame - offsets(t, 0) * s) / cfg.frame_rate);
      const double end = std::min(duration, (frame + offsets(t, 1) * s) / cfg.frame_rate);
      if (!(end > start)) continue;
      candidates.push_back({{start, end, static_cast<int>(best) - 1}, score});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  std::vector<eval::Detection> kept;
  for (const auto& cand : candidates) {
    if (kept.size() >= cfg.max_detections) break;
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const auto& k) {
      return k.segment.class_id == cand.segment.class_id &&
             eval::tiou(k.segment, cand.segment) > cfg.nms_threshold;
    });
    if (!suppressed) kept.push_back(cand);
  }
  return kept;
}

}  // namespace textsense::model
