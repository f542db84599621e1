// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>

#include "textsense/core/matrix.hpp"

namespace textsense::model {

/// Probability floor applied before every log.
inline constexpr double kProbabilityFloor = 1e-12;

/// Classification and localization weights of the pyramid loss.
inline constexpr double kClassificationWeight = 1.0;
inline constexpr double kLocalizationWeight = 1000.0;

inline constexpr double kFocalGamma = 2.0;
inline constexpr double kFocalAlpha = 0.25;

/// Side-channel counters filled by the loss functions.
struct LossStats {
  std::size_t clamped = 0;        // probabilities raised to kProbabilityFloor
  std::size_t empty_batches = 0;  // localization calls without positives
};

Matrix one_hot(std::span<const int> labels, std::size_t num_classes);

/// (1/N) sum_i sum_c -y_ic log p_ic. Rows of `probs` must sum to 1 within 1e-6.
double cross_entropy_loss(const Matrix& probs, const Matrix& targets, LossStats* stats = nullptr);
double cross_entropy_loss(const Matrix& probs, std::span<const int> labels,
                          LossStats* stats = nullptr);

/// Softmax focal loss averaged over rows (positions) of `logits`.
double focal_loss(const Matrix& logits, std::span<const int> targets, double gamma = kFocalGamma,
                  double alpha = kFocalAlpha, LossStats* stats = nullptr);

/// Mean (1 - tIoU) over positive positions. Each row holds non-negative
/// (start, end) distances from the position's anchor. Returns 0 and bumps
/// `stats->empty_batches` when there are no rows.
double localization_loss(const Matrix& pred, const Matrix& gt, LossStats* stats = nullptr);

struct LevelLoss {
  double classification = 0.0;
  double localization = 0.0;
};

/// sum_i (kClassificationWeight * cls_i + kLocalizationWeight * loc_i).
double tal_total_loss(std::span<const LevelLoss> levels);

void check_focal_params(double gamma, double alpha);
void check_offsets(const Matrix& pred, const Matrix& gt);

}  // namespace textsense::model
