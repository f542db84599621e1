// SPDX-License-Identifier: Apache-2.0
#pragma once

// HAR accuracy and TAL tIoU / AP@t / mAP.
//
// AP@t here is the fraction of ground-truth actions whose matched detection
// reaches tIoU >= t. Unmatched ground truths count as tIoU 0 and surplus
// detections carry no penalty.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace textsense::eval {

struct Segment {
  double start = 0.0;  // s
  double end = 0.0;    // s
  int class_id = 0;

  void validate() const;
};

struct Detection {
  Segment segment;
  double score = 0.0;

  void validate() const;
};

struct MatchPair {
  std::size_t detection = 0;
  std::size_t ground_truth = 0;
  double tiou = 0.0;
};

struct MatchResult {
  std::vector<MatchPair> pairs;  // in detection processing order
  std::vector<std::size_t> unmatched_detections;
  std::vector<std::size_t> unmatched_ground_truths;
};

inline constexpr std::array<double, 5> kWifiTalThresholds{0.3, 0.4, 0.5, 0.6, 0.7};
inline constexpr std::array<double, 5> kXrfv2Thresholds{0.5, 0.55, 0.6, 0.65, 0.7};

/// Fraction of positions where pred equals truth.
double accuracy(std::span<const int> pred, std::span<const int> truth);

/// Temporal intersection over union of two valid segments.
double tiou(const Segment& a, const Segment& b);

/// Greedy one-to-one assignment. Detections are visited by descending score
/// (ties by lower index); each claims the unclaimed ground truth (same class
/// when `class_aware`) with the highest positive tIoU, ties going to the
/// earlier ground-truth start and then the lower index.
MatchResult match_detections(std::span<const Detection> dets, std::span<const Segment> gts,
                             bool class_aware = true);

/// Per-ground-truth tIoU after matching; 0 for unmatched ground truths.
std::vector<double> matched_tious(std::span<const Detection> dets, std::span<const Segment> gts,
                                  bool class_aware = true);

double ap_at_t(std::span<const Detection> dets, std::span<const Segment> gts, double threshold,
               bool class_aware = true);

/// AP@t for every threshold, sharing one matching pass.
std::vector<double> ap_at_thresholds(std::span<const Detection> dets,
                                     std::span<const Segment> gts,
                                     std::span<const double> thresholds, bool class_aware = true);

double mean_ap(std::span<const Detection> dets, std::span<const Segment> gts,
               std::span<const double> thresholds, bool class_aware = true);

}  // namespace textsense::eval
