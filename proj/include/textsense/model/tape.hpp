// SPDX-License-Identifier: Apache-2.0
#pragma once

// Minimal reverse-mode gradient engine over dense matrices.
//
// A Tape records every operation of one forward pass as a node holding the
// forward value and a closure that pushes the node's adjoint onto its
// parents. Parameters live outside the tape; `Tape::parameter` binds one as a
// leaf and `Tape::backward` adds the leaf adjoints into `Parameter::grad`.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "textsense/core/matrix.hpp"

namespace textsense::model {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad = Matrix(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  /// Scalar value of a 1x1 node.
  double item() const;

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  /// Receives the adjoint of the node being processed.
  using Backward = std::function<void(Tape&, const Matrix&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var parameter(Parameter& param);

  /// Records an operation. `backward` is dropped when no parent needs a gradient.
  Var record(Matrix value, std::initializer_list<Var> parents, Backward backward);
  Var record(Matrix value, std::span<const Var> parents, Backward backward);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool requires_grad(Var v) const { return requires_grad(v.id()); }

  /// Adds `g` into the adjoint of node `id`; no-op for constants.
  void accumulate(std::size_t id, const Matrix& g);
  /// Adjoint storage for node `id`, allocated on first use.
  Matrix& grad(std::size_t id);

  /// Reverse sweep from a 1x1 node. Adjoints of bound parameters are added to
  /// their `grad`; call `Parameter::zero_grad` between steps.
  void backward(Var scalar);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  Var push(Node node);
  void check_owned(Var v) const;

  std::vector<Node> nodes_;
};

}  // namespace textsense::model
