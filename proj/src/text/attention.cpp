// SPDX-License-Identifier: Apache-2.0
#include "textsense/text/attention.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "textsense/model/ops.hpp"

namespace textsense::text {

using model::Tape;
using model::Var;

TokenMatrix::TokenMatrix(std::size_t batch, std::size_t tokens, std::size_t dim, TokenRole role)
    : batch_(batch), tokens_(tokens), dim_(dim), role_(role), data_(batch * tokens * dim, 0.0) {}

TokenMatrix TokenMatrix::from_samples(const std::vector<Matrix>& samples, TokenRole role) {
  if (samples.empty()) throw std::invalid_argument("TokenMatrix: no samples");
  TokenMatrix out(samples.size(), samples[0].rows(), samples[0].cols(), role);
  for (std::size_t b = 0; b < samples.size(); ++b) out.set_sample(b, samples[b]);
  return out;
}

Matrix TokenMatrix::sample(std::size_t b) const {
  const auto begin = data_.begin() + static_cast<long>(b * tokens_ * dim_);
  return Matrix(tokens_, dim_, std::vector<double>(begin, begin + static_cast<long>(tokens_ * dim_)));
}

void TokenMatrix::set_sample(std::size_t b, const Matrix& tokens) {
  if (b >= batch_ || tokens.rows() != tokens_ || tokens.cols() != dim_) {
    throw std::invalid_argument("TokenMatrix::set_sample: expected " + std::to_string(tokens_) +
                                "x" + std::to_string(dim_) + ", got " + tokens.shape_string());
  }
  std::copy(tokens.data().begin(), tokens.data().end(),
            data_.begin() + static_cast<long>(b * tokens_ * dim_));
}

bool TokenMatrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void MhsaWeights::validate() const {
  if (num_heads == 0 || head_dim == 0) {
    throw std::invalid_argument("MhsaWeights: need at least one head of positive width");
  }
  if (w_q.size() != num_heads || w_k.size() != num_heads || w_v.size() != num_heads) {
    throw std::invalid_argument("MhsaWeights: per-head projection count does not match num_heads");
  }
  const std::size_t dim = w_o.cols();
  if (w_o.rows() != num_heads * head_dim) {
    throw std::invalid_argument("MhsaWeights: w_o has " + std::to_string(w_o.rows()) +
                                " rows, expected H*d_k = " + std::to_string(num_heads * head_dim));
  }
  for (std::size_t h = 0; h < num_heads; ++h) {
    for (const Matrix* m : {&w_q[h], &w_k[h], &w_v[h]}) {
      if (m->rows() != dim || m->cols() != head_dim) {
        throw std::invalid_argument("MhsaWeights: head " + std::to_string(h) + " projection is " +
                                    m->shape_string() + ", expected " + std::to_string(dim) + "x" +
                                    std::to_string(head_dim));
      }
      if (!m->all_finite()) throw std::invalid_argument("MhsaWeights: non-finite entry");
    }
  }
  if (!w_o.all_finite()) throw std::invalid_argument("MhsaWeights: non-finite entry");
}

MhsaWeights MhsaWeights::zeros(std::size_t dim, std::size_t num_heads, std::size_t head_dim) {
  MhsaWeights w;
  w.num_heads = num_heads;
  w.head_dim = head_dim;
  for (std::size_t h = 0; h < num_heads; ++h) {
    w.w_q.emplace_back(dim, head_dim);
    w.w_k.emplace_back(dim, head_dim);
    w.w_v.emplace_back(dim, head_dim);
  }
  w.w_o = Matrix(num_heads * head_dim, dim);
  return w;
}

namespace {

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(-bound, bound);
  return m;
}

}  // namespace

MhsaWeights MhsaWeights::random(std::size_t dim, std::size_t num_heads, std::size_t head_dim,
                                Rng& rng) {
  MhsaWeights w = zeros(dim, num_heads, head_dim);
  const double in_bound = 1.0 / std::sqrt(static_cast<double>(dim));
  const double out_bound = 1.0 / std::sqrt(static_cast<double>(num_heads * head_dim));
  for (std::size_t h = 0; h < num_heads; ++h) {
    w.w_q[h] = uniform_matrix(dim, head_dim, in_bound, rng);
    w.w_k[h] = uniform_matrix(dim, head_dim, in_bound, rng);
    w.w_v[h] = uniform_matrix(dim, head_dim, in_bound, rng);
  }
  w.w_o = uniform_matrix(num_heads * head_dim, dim, out_bound, rng);
  return w;
}

Var mhsa(Var tokens, const MhsaVars& weights, std::vector<Var>* attention) {
  const std::size_t heads = weights.w_q.size();
  if (heads == 0 || weights.w_k.size() != heads || weights.w_v.size() != heads) {
    throw std::invalid_argument("mhsa: inconsistent head count");
  }
  if (tokens.cols() != weights.w_q[0].rows()) {
    throw std::invalid_argument("mhsa: token width " + std::to_string(tokens.cols()) +
                                " does not match projection rows " +
                                std::to_string(weights.w_q[0].rows()));
  }
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(weights.w_q[0].cols()));
  std::vector<Var> head_outputs;
  head_outputs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const Var q = model::matmul(tokens, weights.w_q[h]);
    const Var k = model::matmul(tokens, weights.w_k[h]);
    const Var v = model::matmul(tokens, weights.w_v[h]);
    const Var scores = model::softmax_rows(model::scale(model::matmul_bt(q, k), inv_sqrt_dk));
    if (attention) attention->push_back(scores);
    head_outputs.push_back(model::matmul(scores, v));
  }
  const Var projected = model::matmul(model::concat_cols(head_outputs), weights.w_o);
  return model::add(projected, tokens);
}

Var combine(Var attended, Var initial) {
  if (!attended.value().same_shape(initial.value())) {
    throw std::invalid_argument("combine: attended " + attended.value().shape_string() +
                                " vs initial " + initial.value().shape_string());
  }
  const Var parts[] = {model::mean_rows(attended), initial};
  return model::concat_rows(parts);
}

TokenMatrix mhsa_forward(const TokenMatrix& t_init, const MhsaWeights& weights,
                         AttentionMaps* maps) {
  if (t_init.role() != TokenRole::initial) {
    throw std::invalid_argument("mhsa_forward: input must hold initial tokens");
  }
  weights.validate();
  if (t_init.dim() != weights.model_dim()) {
    throw std::invalid_argument("mhsa_forward: token width " + std::to_string(t_init.dim()) +
                                " does not match weight width " +
                                std::to_string(weights.model_dim()));
  }
  TokenMatrix out(t_init.batch(), t_init.tokens(), t_init.dim(), TokenRole::attended);
  if (maps) maps->assign(t_init.batch(), {});
  for (std::size_t b = 0; b < t_init.batch(); ++b) {
    Tape tape;
    MhsaVars vars;
    for (std::size_t h = 0; h < weights.num_heads; ++h) {
      vars.w_q.push_back(tape.constant(weights.w_q[h]));
      vars.w_k.push_back(tape.constant(weights.w_k[h]));
      vars.w_v.push_back(tape.constant(weights.w_v[h]));
    }
    vars.w_o = tape.constant(weights.w_o);
    std::vector<Var> attention;
    const Var result = mhsa(tape.constant(t_init.sample(b)), vars, maps ? &attention : nullptr);
    out.set_sample(b, result.value());
    if (maps) {
      for (const Var& a : attention) (*maps)[b].push_back(a.value());
    }
  }
  return out;
}

TokenMatrix combine(const TokenMatrix& t_att, const TokenMatrix& t_init) {
  if (t_att.role() != TokenRole::attended || t_init.role() != TokenRole::initial) {
    throw std::invalid_argument("combine: expected (attended, initial) token roles");
  }
  if (t_att.batch() != t_init.batch() || t_att.tokens() != t_init.tokens() ||
      t_att.dim() != t_init.dim()) {
    throw std::invalid_argument("combine: attended and initial shapes differ");
  }
  TokenMatrix out(t_init.batch(), t_init.tokens() + 1, t_init.dim(), TokenRole::combined);
  for (std::size_t b = 0; b < t_init.batch(); ++b) {
    Tape tape;
    const Var merged = combine(tape.constant(t_att.sample(b)), tape.constant(t_init.sample(b)));
    out.set_sample(b, merged.value());
  }
  return out;
}

MhsaLayer::MhsaLayer(std::size_t dim, std::size_t num_heads, std::size_t head_dim, Rng& rng) {
  const MhsaWeights init = MhsaWeights::random(dim, num_heads, head_dim, rng);
  for (std::size_t h = 0; h < num_heads; ++h) {
    const std::string suffix = "[" + std::to_string(h) + "]";
    w_q_.emplace_back("mhsa.w_q" + suffix, init.w_q[h]);
    w_k_.emplace_back("mhsa.w_k" + suffix, init.w_k[h]);
    w_v_.emplace_back("mhsa.w_v" + suffix, init.w_v[h]);
  }
  w_o_ = model::Parameter("mhsa.w_o", init.w_o);
}

MhsaVars MhsaLayer::bind(Tape& tape) {
  MhsaVars vars;
  for (auto& p : w_q_) vars.w_q.push_back(tape.parameter(p));
  for (auto& p : w_k_) vars.w_k.push_back(tape.parameter(p));
  for (auto& p : w_v_) vars.w_v.push_back(tape.parameter(p));
  vars.w_o = tape.parameter(w_o_);
  return vars;
}

std::vector<model::Parameter*> MhsaLayer::parameters() {
  std::vector<model::Parameter*> out;
  for (auto& p : w_q_) out.push_back(&p);
  for (auto& p : w_k_) out.push_back(&p);
  for (auto& p : w_v_) out.push_back(&p);
  out.push_back(&w_o_);
  return out;
}

MhsaWeights MhsaLayer::weights() const {
  MhsaWeights w;
  w.num_heads = w_q_.size();
  w.head_dim = w_q_.empty() ? 0 : w_q_[0].value.cols();
  for (std::size_t h = 0; h < w_q_.size(); ++h) {
    w.w_q.push_back(w_q_[h].value);
    w.w_k.push_back(w_k_[h].value);
    w.w_v.push_back(w_v_[h].value);
  }
  w.w_o = w_o_.value;
  return w;
}

}  // namespace textsense::text
