// SPDX-License-Identifier: Apache-2.0
#include "textsense/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace textsense::eval {

void Segment::validate() const {
  if (!std::isfinite(start) || !std::isfinite(end) || !(end > start)) {
    throw std::invalid_argument("Segment: need finite start < end, got [" +
                                std::to_string(start) + ", " + std::to_string(end) + "]");
  }
  if (class_id < 0) throw std::invalid_argument("Segment: negative class id");
}

void Detection::validate() const {
  segment.validate();
  if (!std::isfinite(score)) throw std::invalid_argument("Detection: non-finite score");
}

double accuracy(std::span<const int> pred, std::span<const int> truth) {
  if (pred.empty() || pred.size() != truth.size()) {
    throw std::invalid_argument("accuracy: need equal, non-empty label lists (" +
                                std::to_string(pred.size()) + " vs " +
                                std::to_string(truth.size()) + ")");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == truth[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

double tiou(const Segment& a, const Segment& b) {
  a.validate();
  b.validate();
  const double inter = std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
  const double uni = std::max(a.end, b.end) - std::min(a.start, b.start);
  return inter / uni;
}

MatchResult match_detections(std::span<const Detection> dets, std::span<const Segment> gts,
                             bool class_aware) {
  for (const auto& d : dets) d.validate();
  for (const auto& g : gts) g.validate();

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });

  MatchResult result;
  std::vector<bool> claimed(gts.size(), false);
  for (std::size_t di : order) {
    const Segment& seg = dets[di].segment;
    std::size_t best = gts.size();
    double best_iou = 0.0;
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (claimed[gi]) continue;
      if (class_aware && gts[gi].class_id != seg.class_id) continue;
      const double iou = tiou(seg, gts[gi]);
      if (!(iou > 0.0)) continue;
      const bool better = best == gts.size() || iou > best_iou ||
                          (iou == best_iou && gts[gi].start < gts[best].start);
      if (better) {
        best = gi;
        best_iou = iou;
      }
    }
    if (best == gts.size()) {
      result.unmatched_detections.push_back(di);
    } else {
      claimed[best] = true;
      result.pairs.push_back({di, best, best_iou});
    }
  }
  for (std::size_t gi = 0; gi < gts.size(); ++gi)
    if (!claimed[gi]) result.unmatched_ground_truths.push_back(gi);
  return result;
}

std::vector<double> matched_tious(std::span<const Detection> dets, std::span<const Segment> gts,
                                  bool class_aware) {
  const MatchResult match = match_detections(dets, gts, class_aware);
  std::vector<double> per_gt(gts.size(), 0.0);
  for (const auto& pair : match.pairs) per_gt[pair.ground_truth] = pair.tiou;
  return per_gt;
}

std::vector<double> ap_at_thresholds(std::span<const Detection> dets,
                                     std::span<const Segment> gts,
                                     std::span<const double> thresholds, bool class_aware) {
  if (gts.empty()) throw std::invalid_argument("AP@t: no ground-truth actions");
  for (double t : thresholds) {
    if (!(t > 0.0 && t <= 1.0)) {
      throw std::invalid_argument("AP@t: threshold " + std::to_string(t) + " outside (0, 1]");
    }
  }
  const auto per_gt = matched_tious(dets, gts, class_aware);
  std::vector<double> aps;
  aps.reserve(thresholds.size());
  for (double t : thresholds) {
    const auto hits = std::count_if(per_gt.begin(), per_gt.end(), [t](double v) { return v >= t; });
    aps.push_back(static_cast<double>(hits) / static_cast<double>(gts.size()));
  }
  return aps;
}

double ap_at_t(std::span<const Detection> dets, std::span<const Segment> gts, double threshold,
               bool class_aware) {
  const double t[] = {threshold};
  return ap_at_thresholds(dets, gts, t, class_aware).front();
}

double mean_ap(std::span<const Detection> dets, std::span<const Segment> gts,
               std::span<const double> thresholds, bool class_aware) {
  if (thresholds.empty()) throw std::invalid_argument("mean_ap: no thresholds");
  const auto aps = ap_at_thresholds(dets, gts, thresholds, class_aware);
  return std::accumulate(aps.begin(), aps.end(), 0.0) / static_cast<double>(aps.size());
}

}  // namespace textsense::eval
