// SPDX-License-Identifier: Apache-2.0
#include "textsense/model/tape.hpp"

#include <stdexcept>

namespace textsense::model {

const Matrix& Var::value() const { return tape_->value(id_); }

double Var::item() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw std::logic_error("Var::item on non-scalar node of shape " + v.shape_string());
  }
  return v(0, 0);
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::check_owned(Var v) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) {
    throw std::logic_error("Var does not belong to this tape");
  }
}

Var Tape::constant(Matrix value) { return push(Node{std::move(value), {}, {}, nullptr, false}); }

Var Tape::parameter(Parameter& param) {
  return push(Node{param.value, {}, {}, &param, true});
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, Backward backward) {
  return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                std::move(backward));
}

Var Tape::record(Matrix value, std::span<const Var> parents, Backward backward) {
  bool needs = false;
  for (const Var& p : parents) {
    check_owned(p);
    needs = needs || nodes_[p.id_].requires_grad;
  }
  Node node{std::move(value), {}, {}, nullptr, needs};
  if (needs) node.backward = std::move(backward);
  return push(std::move(node));
}

Matrix& Tape::grad(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.empty() && !node.value.empty()) {
    node.grad = Matrix(node.value.rows(), node.value.cols());
  }
  return node.grad;
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  if (!nodes_[id].requires_grad) return;
  grad(id) += g;
}

void Tape::backward(Var scalar) {
  check_owned(scalar);
  const Matrix& v = nodes_[scalar.id_].value;
  if (v.rows() != 1 || v.cols() != 1) {
    throw std::logic_error("Tape::backward needs a 1x1 loss, got " + v.shape_string());
  }
  if (!nodes_[scalar.id_].requires_grad) return;
  grad(scalar.id_)(0, 0) += 1.0;
  for (std::size_t i = scalar.id_ + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.param != nullptr) {
      if (!node.param->grad.same_shape(node.grad)) {
        node.param->grad = Matrix(node.grad.rows(), node.grad.cols());
      }
      node.param->grad += node.grad;
    } else if (node.backward) {
      node.backward(*this, node.grad);
    }
  }
}

}  // namespace textsense::model
