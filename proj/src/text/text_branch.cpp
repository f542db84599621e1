// SPDX-License-Identifier: Apache-2.0
#include "textsense/text/text_branch.hpp"

#include <cmath>
#include <stdexcept>

namespace textsense::text {

Matrix dictionary_tokens(const EmbeddingCache& cache, const std::vector<std::string>& labels) {
  cache.validate();
  const std::size_t l = cache.descriptions();
  Matrix tokens(labels.size() * l, cache.dim);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const auto it = cache.entries.find(labels[k]);
    if (it == cache.entries.end()) {
      throw std::invalid_argument("embedding cache has no entry for label '" + labels[k] + "'");
    }
    for (std::size_t j = 0; j < l; ++j) {
      const auto& v = it->second[j];
      std::copy(v.begin(), v.end(), tokens.row(k * l + j).begin());
    }
  }
  return tokens;
}

TextBranch::TextBranch(Matrix tokens, std::size_t signal_dim, const TextBranchConfig& cfg,
                       Rng& rng)
    : tokens_(std::move(tokens)) {
  const std::size_t dim = tokens_.cols();
  if (dim == 0 || tokens_.rows() == 0) throw std::invalid_argument("TextBranch: empty dictionary");
  if (cfg.num_heads == 0 || dim % cfg.num_heads != 0) {
    throw std::invalid_argument("TextBranch: text width " + std::to_string(dim) +
                                " is not divisible by " + std::to_string(cfg.num_heads) + " heads");
  }
  mhsa_ = MhsaLayer(dim, cfg.num_heads, dim / cfg.num_heads, rng);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  Matrix projection(dim, signal_dim);
  for (double& v : projection.data()) v = rng.uniform(-bound, bound);
  projection_ = model::Parameter("text.projection", projection);
  fusion_ = FusionConfig::with_text_weight(cfg.w_text, cfg.pooling, projection);
}

model::Var TextBranch::apply(model::Tape& tape, model::Var wireless) {
  const model::Var initial = tape.constant(tokens_);
  const model::Var attended = mhsa(initial, mhsa_.bind(tape));
  const model::Var combined = combine(attended, initial);
  return fuse(wireless, combined, tape.parameter(projection_), fusion_);
}

std::vector<model::Parameter*> TextBranch::parameters() {
  auto params = mhsa_.parameters();
  params.push_back(&projection_);
  return params;
}

}  // namespace textsense::text
