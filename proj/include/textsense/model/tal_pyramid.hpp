// SPDX-License-Identifier: Apache-2.0
#pragma once

// One-dimensional feature pyramid for temporal action localization.
//
// Level 1 is a stride-1 convolution over the input sequence; every further
// level halves the temporal length with a stride-2 convolution of the level
// below, so level i has ceil(T / 2^(i-1)) positions. Each position gets class
// logits (column 0 is background) and non-negative (start, end) distances,
// measured in units of the level stride.

#include <cstddef>
#include <span>
#include <vector>

#include "textsense/core/rng.hpp"
#include "textsense/eval/metrics.hpp"
#include "textsense/model/losses.hpp"
#include "textsense/model/tape.hpp"

namespace textsense::model {

struct TalPyramidConfig {
  std::size_t input_dim = 16;
  std::size_t hidden_dim = 32;
  std::size_t num_classes = 3;  // foreground classes
  std::size_t num_levels = 3;
  std::size_t kernel = 3;
};

struct LevelOutput {
  Var logits;   // T_i x (classes + 1)
  Var offsets;  // T_i x 2, after softplus
  std::size_t stride = 1;
};

/// Per-level training targets.
struct LevelTargets {
  std::vector<int> classes;          // 0 = background, k + 1 = class k
  std::vector<std::size_t> positives;  // positions inside a ground-truth segment
  Matrix offsets;                    // positives x 2, in stride units
  std::size_t stride = 1;
};

/// Segment in frame units for target construction.
struct FrameSegment {
  double start = 0.0;
  double end = 0.0;
  int class_id = 0;
};

class TalPyramid {
 public:
  TalPyramid() = default;
  TalPyramid(const TalPyramidConfig& cfg, Rng& rng);

  /// x is T x input_dim.
  std::vector<LevelOutput> forward(Tape& tape, Var x);
  std::vector<Parameter*> parameters();
  const TalPyramidConfig& config() const { return cfg_; }

 private:
  TalPyramidConfig cfg_;
  std::vector<Parameter> conv_w_;
  std::vector<Parameter> conv_b_;
  Parameter cls_w_, cls_b_, reg_w_, reg_b_;
};

std::size_t level_length(std::size_t length, std::size_t level);

/// Position t of a level with stride s sits at frame t * s; it is positive
/// when it falls inside [start, end) of some segment.
std::vector<LevelTargets> build_level_targets(std::span<const FrameSegment> segments,
                                              std::size_t length, std::size_t num_levels);

/// Differentiable pyramid loss sum_i (1 * focal_i + 1000 * loc_i). Levels
/// without positives contribute no localization term. Per-level scalar parts
/// are written to `parts` when given.
Var tal_total_loss(std::span<const LevelOutput> outputs, std::span<const LevelTargets> targets,
                   std::vector<LevelLoss>* parts = nullptr, LossStats* stats = nullptr);

struct DecodeConfig {
  double frame_rate = 1.0;  // frames per second
  double min_score = 0.05;
  double nms_threshold = 0.5;
  std::size_t max_detections = 50;
};

/// Converts pyramid outputs into scored segments (seconds) with per-class
/// greedy non-maximum suppression.
std::vector<eval::Detection> decode_detections(std::span<const LevelOutput> outputs,
                                               std::size_t length, const DecodeConfig& cfg);

}  // namespace textsense::model
