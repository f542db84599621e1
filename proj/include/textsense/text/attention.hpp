// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "textsense/core/matrix.hpp"
#include "textsense/core/rng.hpp"
#include "textsense/model/tape.hpp"

namespace textsense::text {

enum class TokenRole { initial, attended, combined };

/// Batch of per-description text features, B x L x C.
class TokenMatrix {
 public:
  TokenMatrix() = default;
  TokenMatrix(std::size_t batch, std::size_t tokens, std::size_t dim, TokenRole role);
  /// Stacks B samples of identical L x C shape.
  static TokenMatrix from_samples(const std::vector<Matrix>& samples, TokenRole role);

  std::size_t batch() const { return batch_; }
  std::size_t tokens() const { return tokens_; }
  std::size_t dim() const { return dim_; }
  TokenRole role() const { return role_; }

  double& at(std::size_t b, std::size_t l, std::size_t c) {
    return data_[(b * tokens_ + l) * dim_ + c];
  }
  double at(std::size_t b, std::size_t l, std::size_t c) const {
    return data_[(b * tokens_ + l) * dim_ + c];
  }

  /// L x C slice of sample `b`.
  Matrix sample(std::size_t b) const;
  void set_sample(std::size_t b, const Matrix& tokens);

  const std::vector<double>& data() const { return data_; }
  bool all_finite() const;

 private:
  std::size_t batch_ = 0;
  std::size_t tokens_ = 0;
  std::size_t dim_ = 0;
  TokenRole role_ = TokenRole::initial;
  std::vector<double> data_;
};

/// Per-head projections W_h^Q, W_h^K, W_h^V (C x d_k each) and the output map
/// W^O ((H d_k) x C).
struct MhsaWeights {
  std::size_t num_heads = 0;
  std::size_t head_dim = 0;
  std::vector<Matrix> w_q;
  std::vector<Matrix> w_k;
  std::vector<Matrix> w_v;
  Matrix w_o;

  std::size_t model_dim() const { return w_o.cols(); }
  void validate() const;

  static MhsaWeights zeros(std::size_t dim, std::size_t num_heads, std::size_t head_dim);
  /// Uniform in +-1/sqrt(fan_in).
  static MhsaWeights random(std::size_t dim, std::size_t num_heads, std::size_t head_dim,
                            Rng& rng);
};

/// Attention maps of one forward pass, [sample][head] -> L x L.
using AttentionMaps = std::vector<std::vector<Matrix>>;

/// T_att = Concat_h(Softmax(Q_h K_h^T / sqrt(d_k)) V_h) W^O + T_init for each
/// sample. No positional encoding.
TokenMatrix mhsa_forward(const TokenMatrix& t_init, const MhsaWeights& weights,
                         AttentionMaps* maps = nullptr);

/// Prepends the mean of T_att's tokens to T_init: B x (L+1) x C.
TokenMatrix combine(const TokenMatrix& t_att, const TokenMatrix& t_init);

/// Tape-level building blocks shared by inference and training.
struct MhsaVars {
  std::vector<model::Var> w_q;
  std::vector<model::Var> w_k;
  std::vector<model::Var> w_v;
  model::Var w_o;
};

/// Self-attention plus residual over one L x C sample.
model::Var mhsa(model::Var tokens, const MhsaVars& weights,
                std::vector<model::Var>* attention = nullptr);

/// Mean-pooled summary of `attended` stacked on top of `initial`.
model::Var combine(model::Var attended, model::Var initial);

/// Trainable MHSA weights.
class MhsaLayer {
 public:
  MhsaLayer() = default;
  MhsaLayer(std::size_t dim, std::size_t num_heads, std::size_t head_dim, Rng& rng);

  MhsaVars bind(model::Tape& tape);
  std::vector<model::Parameter*> parameters();
  MhsaWeights weights() const;
  std::size_t num_heads() const { return w_q_.size(); }

 private:
  std::vector<model::Parameter> w_q_;
  std::vector<model::Parameter> w_k_;
  std::vector<model::Parameter> w_v_;
  model::Parameter w_o_;
};

}  // namespace textsense::text
