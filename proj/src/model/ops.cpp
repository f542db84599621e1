// SPDX-License-Identifier: Apache-2.0
#include "textsense/model/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "textsense/model/losses.hpp"

namespace textsense::model {
namespace {

void same_tape(Var a, Var b, const char* op) {
  if (&a.tape() != &b.tape()) throw std::logic_error(std::string(op) + ": vars on different tapes");
}

void same_shape(Var a, Var b, const char* op) {
  same_tape(a, b, op);
  if (!a.value().same_shape(b.value())) {
    throw std::invalid_argument(std::string(op) + ": shape " + a.value().shape_string() +
                                " vs " + b.value().shape_string());
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  same_tape(a, b, "matmul");
  Matrix out = textsense::matmul(a.value(), b.value());
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a.id(), matmul_bt(g, b.value()));
    if (t.requires_grad(b)) t.accumulate(b.id(), matmul_at(a.value(), g));
  });
}

Var matmul_bt(Var a, Var b) {
  same_tape(a, b, "matmul_bt");
  Matrix out = textsense::matmul_bt(a.value(), b.value());
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a.id(), textsense::matmul(g, b.value()));
    if (t.requires_grad(b)) t.accumulate(b.id(), matmul_at(g, a.value()));
  });
}

Var transpose(Var a) {
  return a.tape().record(textsense::transpose(a.value()), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a.id(), textsense::transpose(g));
  });
}

Var add(Var a, Var b) {
  same_shape(a, b, "add");
  return a.tape().record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a.id(), g);
    t.accumulate(b.id(), g);
  });
}

Var sub(Var a, Var b) {
  same_shape(a, b, "sub");
  return a.tape().record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a.id(), g);
    t.accumulate(b.id(), g * -1.0);
  });
}

Var mul(Var a, Var b) {
  same_shape(a, b, "mul");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.value().data()[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) {
      Matrix ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] *= b.value().data()[i];
      t.accumulate(a.id(), ga);
    }
    if (t.requires_grad(b)) {
      Matrix gb = g;
      for (std::size_t i = 0; i < gb.size(); ++i) gb.data()[i] *= a.value().data()[i];
      t.accumulate(b.id(), gb);
    }
  });
}

Var scale(Var a, double s) {
  return a.tape().record(a.value() * s, {a},
                         [a, s](Tape& t, const Matrix& g) { t.accumulate(a.id(), g * s); });
}

Var add_row(Var a, Var row) {
  same_tape(a, row, "add_row");
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw std::invalid_argument("add_row: row " + row.value().shape_string() + " vs " +
                                a.value().shape_string());
  }
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += row.value()(0, j);
  return a.tape().record(std::move(out), {a, row}, [a, row](Tape& t, const Matrix& g) {
    t.accumulate(a.id(), g);
    if (t.requires_grad(row)) {
      Matrix gr(1, g.cols());
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gr(0, j) += g(i, j);
      t.accumulate(row.id(), gr);
    }
  });
}

Var relu(Var a) {
  Matrix out = a.value();
  for (double& v : out.data()) v = std::max(v, 0.0);
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    Matrix ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i)
      if (!(a.value().data()[i] > 0.0)) ga.data()[i] = 0.0;
    t.accumulate(a.id(), ga);
  });
}

Var softplus(Var a) {
  Matrix out = a.value();
  for (double& v : out.data()) v = std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    Matrix ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i)
      ga.data()[i] *= 1.0 / (1.0 + std::exp(-a.value().data()[i]));
    t.accumulate(a.id(), ga);
  });
}

Var softmax_rows(Var a) {
  Matrix out = textsense::softmax_rows(a.value());
  const std::size_t id = a.tape().size();  // index the output node will receive
  return a.tape().record(std::move(out), {a}, [a, id](Tape& t, const Matrix& g) {
    const Matrix& s = t.value(id);
    Matrix ga(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < g.cols(); ++j) dot += g(i, j) * s(i, j);
      for (std::size_t j = 0; j < g.cols(); ++j) ga(i, j) = s(i, j) * (g(i, j) - dot);
    }
    t.accumulate(a.id(), ga);
  });
}

Var slice_cols(Var a, std::size_t first, std::size_t count) {
  if (first + count > a.cols()) {
    throw std::invalid_argument("slice_cols: [" + std::to_string(first) + ", " +
                                std::to_string(first + count) + ") exceeds " +
                                std::to_string(a.cols()) + " columns");
  }
  Matrix out(a.rows(), count);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < count; ++j) out(i, j) = a.value()(i, first + j);
  return a.tape().record(std::move(out), {a}, [a, first, count](Tape& t, const Matrix& g) {
    Matrix& ga = t.grad(a.id());
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < count; ++j) ga(i, first + j) += g(i, j);
  });
}

Var slice_rows(Var a, std::size_t first, std::size_t count) {
  if (first + count > a.rows()) {
    throw std::invalid_argument("slice_rows: [" + std::to_string(first) + ", " +
                                std::to_string(first + count) + ") exceeds " +
                                std::to_string(a.rows()) + " rows");
  }
  const std::size_t cols = a.cols();
  std::vector<double> data(a.value().data().begin() + static_cast<long>(first * cols),
                           a.value().data().begin() + static_cast<long>((first + count) * cols));
  return a.tape().record(Matrix(count, cols, std::move(data)), {a},
                         [a, first, count, cols](Tape& t, const Matrix& g) {
                           Matrix& ga = t.grad(a.id());
                           for (std::size_t i = 0; i < count; ++i)
                             for (std::size_t j = 0; j < cols; ++j) ga(first + i, j) += g(i, j);
                         });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    same_tape(parts[0], p, "concat_cols");
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row count mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < p.cols(); ++j) out(i, offset + j) = p.value()(i, j);
    offset += p.cols();
  }
  std::vector<Var> owned(parts.begin(), parts.end());
  return parts[0].tape().record(std::move(out), parts, [owned](Tape& t, const Matrix& g) {
    std::size_t offset = 0;
    for (const Var& p : owned) {
      if (t.requires_grad(p)) {
        Matrix& gp = t.grad(p.id());
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < p.cols(); ++j) gp(i, j) += g(i, offset + j);
      }
      offset += p.cols();
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const std::size_t cols = parts[0].cols();
  std::vector<double> data;
  std::size_t rows = 0;
  for (const Var& p : parts) {
    same_tape(parts[0], p, "concat_rows");
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: column count mismatch");
    data.insert(data.end(), p.value().data().begin(), p.value().data().end());
    rows += p.rows();
  }
  std::vector<Var> owned(parts.begin(), parts.end());
  return parts[0].tape().record(Matrix(rows, cols, std::move(data)), parts,
                                [owned](Tape& t, const Matrix& g) {
                                  std::size_t offset = 0;
                                  for (const Var& p : owned) {
                                    if (t.requires_grad(p)) {
                                      Matrix& gp = t.grad(p.id());
                                      for (std::size_t i = 0; i < p.rows(); ++i)
                                        for (std::size_t j = 0; j < g.cols(); ++j)
                                          gp(i, j) += g(offset + i, j);
                                    }
                                    offset += p.rows();
                                  }
                                });
}

Var gather_rows(Var a, std::span<const std::size_t> indices) {
  const std::size_t cols = a.cols();
  Matrix out(indices.size(), cols);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= a.rows()) throw std::invalid_argument("gather_rows: index out of range");
    for (std::size_t j = 0; j < cols; ++j) out(i, j) = a.value()(indices[i], j);
  }
  std::vector<std::size_t> owned(indices.begin(), indices.end());
  return a.tape().record(std::move(out), {a}, [a, owned](Tape& t, const Matrix& g) {
    Matrix& ga = t.grad(a.id());
    for (std::size_t i = 0; i < owned.size(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) ga(owned[i], j) += g(i, j);
  });
}

Var mean_rows(Var a) {
  if (a.rows() == 0) throw std::invalid_argument("mean_rows: empty input");
  Matrix out(1, a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(0, j) += a.value()(i, j);
  const double inv = 1.0 / static_cast<double>(a.rows());
  out *= inv;
  return a.tape().record(std::move(out), {a}, [a, inv](Tape& t, const Matrix& g) {
    Matrix& ga = t.grad(a.id());
    for (std::size_t i = 0; i < ga.rows(); ++i)
      for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += g(0, j) * inv;
  });
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return a.tape().record(Matrix(1, 1, total), {a}, [a](Tape& t, const Matrix& g) {
    Matrix& ga = t.grad(a.id());
    for (double& v : ga.data()) v += g(0, 0);
  });
}

Var im2col(Var x, std::size_t kernel, std::size_t stride, std::size_t pad) {
  if (kernel == 0 || stride == 0) throw std::invalid_argument("im2col: kernel and stride must be > 0");
  const std::size_t length = x.rows();
  const std::size_t channels = x.cols();
  if (length + 2 * pad < kernel) throw std::invalid_argument("im2col: sequence shorter than kernel");
  const std::size_t out_len = (length + 2 * pad - kernel) / stride + 1;
  Matrix out(out_len, kernel * channels);
  for (std::size_t t = 0; t < out_len; ++t) {
    for (std::size_t k = 0; k < kernel; ++k) {
      const long src = static_cast<long>(t * stride + k) - static_cast<long>(pad);
      if (src < 0 || src >= static_cast<long>(length)) continue;
      for (std::size_t c = 0; c < channels; ++c)
        out(t, k * channels + c) = x.value()(static_cast<std::size_t>(src), c);
    }
  }
  return x.tape().record(
      std::move(out), {x}, [x, kernel, stride, pad, length, channels](Tape& t, const Matrix& g) {
        Matrix& gx = t.grad(x.id());
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t k = 0; k < kernel; ++k) {
            const long src = static_cast<long>(r * stride + k) - static_cast<long>(pad);
            if (src < 0 || src >= static_cast<long>(length)) continue;
            for (std::size_t c = 0; c < channels; ++c)
              gx(static_cast<std::size_t>(src), c) += g(r, k * channels + c);
          }
        }
      });
}

Var cross_entropy(Var probs, const Matrix& targets, LossStats* stats) {
  const double loss = cross_entropy_loss(probs.value(), targets, stats);
  return probs.tape().record(Matrix(1, 1, loss), {probs}, [probs, targets](Tape& t,
                                                                           const Matrix& g) {
    const Matrix& p = probs.value();
    const double inv_n = 1.0 / static_cast<double>(p.rows());
    Matrix gp(p.rows(), p.cols());
    for (std::size_t i = 0; i < p.rows(); ++i)
      for (std::size_t c = 0; c < p.cols(); ++c) {
        const double y = targets(i, c);
        // The clamp is a constant below the floor, so no gradient flows there.
        if (y != 0.0 && p(i, c) >= kProbabilityFloor) gp(i, c) = -y / p(i, c) * inv_n * g(0, 0);
      }
    t.accumulate(probs.id(), gp);
  });
}

Var focal(Var probs, std::span<const int> targets, double gamma, double alpha, LossStats* stats) {
  check_focal_params(gamma, alpha);
  const Matrix& p = probs.value();
  if (p.rows() != targets.size() || p.rows() == 0) {
    throw std::invalid_argument("focal: " + std::to_string(p.rows()) + " positions vs " +
                                std::to_string(targets.size()) + " targets");
  }
  std::vector<int> owned(targets.begin(), targets.end());
  double total = 0.0;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    if (owned[i] < 0 || static_cast<std::size_t>(owned[i]) >= p.cols()) {
      throw std::invalid_argument("focal: target " + std::to_string(owned[i]) + " out of range");
    }
    double pt = p(i, static_cast<std::size_t>(owned[i]));
    if (pt < kProbabilityFloor) {
      pt = kProbabilityFloor;
      if (stats) ++stats->clamped;
    }
    total += -alpha * std::pow(1.0 - pt, gamma) * std::log(pt);
  }
  const double inv_n = 1.0 / static_cast<double>(p.rows());
  return probs.tape().record(
      Matrix(1, 1, total * inv_n), {probs},
      [probs, owned, gamma, alpha, inv_n](Tape& t, const Matrix& g) {
        const Matrix& pv = probs.value();
        Matrix gp(pv.rows(), pv.cols());
        for (std::size_t i = 0; i < pv.rows(); ++i) {
          const auto c = static_cast<std::size_t>(owned[i]);
          const double pt = pv(i, c);
          if (pt < kProbabilityFloor) continue;
          const double q = 1.0 - pt;
          // d/dp [-alpha q^gamma log p] = alpha (gamma q^(gamma-1) log p - q^gamma / p)
          const double decay = (gamma == 0.0 || q == 0.0) ? 0.0
                                                          : gamma * std::pow(q, gamma - 1.0) *
                                                                std::log(pt);
          gp(i, c) = alpha * (decay - std::pow(q, gamma) / pt) * inv_n * g(0, 0);
        }
        t.accumulate(probs.id(), gp);
      });
}

Var tiou_loss(Var pred, const Matrix& gt) {
  const Matrix& p = pred.value();
  check_offsets(p, gt);
  if (p.rows() == 0) throw std::invalid_argument("tiou_loss: no positive positions");
  const double inv_n = 1.0 / static_cast<double>(p.rows());
  double total = 0.0;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    const double inter = std::min(p(i, 0), gt(i, 0)) + std::min(p(i, 1), gt(i, 1));
    const double uni = std::max(p(i, 0), gt(i, 0)) + std::max(p(i, 1), gt(i, 1));
    total += 1.0 - (uni > 0.0 ? inter / uni : 0.0);
  }
  return pred.tape().record(Matrix(1, 1, total * inv_n), {pred},
                            [pred, gt, inv_n](Tape& t, const Matrix& g) {
                              const Matrix& pv = pred.value();
                              Matrix gp(pv.rows(), 2);
                              for (std::size_t i = 0; i < pv.rows(); ++i) {
                                const double inter = std::min(pv(i, 0), gt(i, 0)) +
                                                     std::min(pv(i, 1), gt(i, 1));
                                const double uni = std::max(pv(i, 0), gt(i, 0)) +
                                                   std::max(pv(i, 1), gt(i, 1));
                                if (!(uni > 0.0)) continue;
                                for (std::size_t k = 0; k < 2; ++k) {
                                  // Each offset feeds the intersection when it is the
                                  // shorter side, the union otherwise.
                                  const bool in_inter = pv(i, k) <= gt(i, k);
                                  const double d_inter = in_inter ? 1.0 : 0.0;
                                  const double d_union = in_inter ? 0.0 : 1.0;
                                  const double d_iou = (d_inter * uni - inter * d_union) / (uni * uni);
                                  gp(i, k) = -d_iou * inv_n * g(0, 0);
                                }
                              }
                              t.accumulate(pred.id(), gp);
                            });
}

}  // namespace textsense::model
