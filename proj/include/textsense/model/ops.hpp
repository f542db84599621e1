// SPDX-License-Identifier: Apache-2.0
#pragma once

// Differentiable operations recorded on a Tape. Every op checks shapes and
// throws std::invalid_argument on mismatch.

#include <cstddef>
#include <span>
#include <vector>

#include "textsense/model/tape.hpp"

namespace textsense::model {

struct LossStats;

Var matmul(Var a, Var b);
/// a * b^T.
Var matmul_bt(Var a, Var b);
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise product.
Var mul(Var a, Var b);
Var scale(Var a, double s);
/// Adds a 1 x n row to every row of a.
Var add_row(Var a, Var row);

Var relu(Var a);
Var softplus(Var a);
Var softmax_rows(Var a);

Var slice_cols(Var a, std::size_t first, std::size_t count);
Var slice_rows(Var a, std::size_t first, std::size_t count);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
/// Rows of `a` at `indices`, in order.
Var gather_rows(Var a, std::span<const std::size_t> indices);

/// Column means, 1 x cols.
Var mean_rows(Var a);
/// 1x1 sum of all entries.
Var sum(Var a);

/// Unfolds a [time, channel] sequence into rows of `kernel` stacked frames
/// for a strided 1-D convolution with zero padding `pad` on both ends.
Var im2col(Var x, std::size_t kernel, std::size_t stride, std::size_t pad);

/// Mean over rows of -sum_c y_c log(max(p_c, eps)).
Var cross_entropy(Var probs, const Matrix& targets, LossStats* stats = nullptr);

/// Mean over rows of -alpha (1 - p_t)^gamma log(max(p_t, eps)) with p_t the
/// probability of each row's target class.
Var focal(Var probs, std::span<const int> targets, double gamma, double alpha,
          LossStats* stats = nullptr);

/// Mean over rows of 1 - tIoU between the segments that (start, end) offsets
/// span around a shared anchor. `gt` is constant.
Var tiou_loss(Var pred, const Matrix& gt);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, double s) { return scale(a, s); }

}  // namespace textsense::model
