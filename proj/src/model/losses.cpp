// SPDX-License-Identifier: Apache-2.0
#include "textsense/model/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "textsense/eval/metrics.hpp"

namespace textsense::model {
namespace {

void check_distribution_rows(const Matrix& probs) {
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    double total = 0.0;
    for (double p : probs.row(i)) {
      if (!std::isfinite(p) || p < 0.0) {
        throw std::invalid_argument("cross_entropy_loss: row " + std::to_string(i) +
                                    " has an invalid probability");
      }
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-6) {
      throw std::invalid_argument("cross_entropy_loss: row " + std::to_string(i) + " sums to " +
                                  std::to_string(total));
    }
  }
}

}  // namespace

Matrix one_hot(std::span<const int> labels, std::size_t num_classes) {
  Matrix out(labels.size(), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw std::invalid_argument("one_hot: label " + std::to_string(labels[i]) +
                                  " out of range");
    }
    out(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return out;
}

double cross_entropy_loss(const Matrix& probs, const Matrix& targets, LossStats* stats) {
  if (!probs.same_shape(targets) || probs.rows() == 0) {
    throw std::invalid_argument("cross_entropy_loss: probs " + probs.shape_string() +
                                " vs targets " + targets.shape_string());
  }
  check_distribution_rows(probs);
  double total = 0.0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    for (std::size_t c = 0; c < probs.cols(); ++c) {
      const double y = targets(i, c);
      if (y == 0.0) continue;
      double p = probs(i, c);
      if (p < kProbabilityFloor) {
        p = kProbabilityFloor;
        if (stats) ++stats->clamped;
      }
      total -= y * std::log(p);
    }
  }
  return total / static_cast<double>(probs.rows());
}

double cross_entropy_loss(const Matrix& probs, std::span<const int> labels, LossStats* stats) {
  return cross_entropy_loss(probs, one_hot(labels, probs.cols()), stats);
}

void check_focal_params(double gamma, double alpha) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("focal loss: gamma must be >= 0");
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("focal loss: alpha must lie in (0, 1]");
  }
}

double focal_loss(const Matrix& logits, std::span<const int> targets, double gamma, double alpha,
                  LossStats* stats) {
  check_focal_params(gamma, alpha);
  if (logits.rows() != targets.size() || logits.rows() == 0) {
    throw std::invalid_argument("focal_loss: " + std::to_string(logits.rows()) +
                                " positions vs " + std::to_string(targets.size()) + " targets");
  }
  const Matrix probs = softmax_rows(logits);
  double total = 0.0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const int t = targets[i];
    if (t < 0 || static_cast<std::size_t>(t) >= probs.cols()) {
      throw std::invalid_argument("focal_loss: target " + std::to_string(t) + " out of range");
    }
    double p = probs(i, static_cast<std::size_t>(t));
    if (p < kProbabilityFloor) {
      p = kProbabilityFloor;
      if (stats) ++stats->clamped;
    }
    total += -alpha * std::pow(1.0 - p, gamma) * std::log(p);
  }
  return total / static_cast<double>(probs.rows());
}

void check_offsets(const Matrix& pred, const Matrix& gt) {
  if (!pred.same_shape(gt) || (pred.rows() > 0 && pred.cols() != 2)) {
    throw std::invalid_argument("localization loss: offsets must be Nx2, got " +
                                pred.shape_string() + " and " + gt.shape_string());
  }
  for (double v : gt.data()) {
    if (!(v >= 0.0)) throw std::invalid_argument("localization loss: negative gt offset");
  }
  for (double v : pred.data()) {
    if (!(v >= 0.0)) throw std::invalid_argument("localization loss: negative predicted offset");
  }
}

double localization_loss(const Matrix& pred, const Matrix& gt, LossStats* stats) {
  check_offsets(pred, gt);
  if (pred.rows() == 0) {
    if (stats) ++stats->empty_batches;
    return 0.0;
  }
  // Decode both segments around a common anchor and score them with the
  // evaluation tIoU.
  double total = 0.0;
  for (std::size_t i = 0; i < pred.rows(); ++i) {
    const double anchor = std::max(pred(i, 0), gt(i, 0));
    const eval::Segment p{anchor - pred(i, 0), anchor + pred(i, 1), 0};
    const eval::Segment g{anchor - gt(i, 0), anchor + gt(i, 1), 0};
    const double overlap = (p.end > p.start && g.end > g.start) ? eval::tiou(p, g) : 0.0;
    total += 1.0 - overlap;
  }
  return total / static_cast<double>(pred.rows());
}

double tal_total_loss(std::span<const LevelLoss> levels) {
  double total = 0.0;
  for (const auto& level : levels) {
    total += kClassificationWeight * level.classification +
             kLocalizationWeight * level.localization;
  }
  return total;
}

}  // namespace textsense::model
