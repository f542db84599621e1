// SPDX-License-Identifier: Apache-2.0
#pragma once

// Label-text embeddings as the text branch consumes them.
//
// Cache files are JSON objects:
//   {"encoder": "...", "strategy": "TLE"|"TCE"|"TDE", "dim": C,
//    "entries": {"label": [[c_0, ..., c_{C-1}], ...], ...}}
// with every label holding the same number L of description vectors.

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace textsense::text {

enum class PromptStrategy { TLE, TCE, TDE };

std::string_view to_string(PromptStrategy strategy);
PromptStrategy strategy_from_string(std::string_view name);

/// Descriptions per label: 1 for TLE and TCE, 3 for TDE.
std::size_t descriptions_per_label(PromptStrategy strategy);

using EmbeddingVector = std::vector<double>;

struct EmbeddingCache {
  std::string encoder_name;
  PromptStrategy strategy = PromptStrategy::TLE;
  std::size_t dim = 0;
  std::map<std::string, std::vector<EmbeddingVector>> entries;

  /// Throws EmbeddingCacheError on any schema violation.
  void validate() const;
  /// Descriptions per label (L); 0 when empty.
  std::size_t descriptions() const;
};

class EmbeddingCacheError : public std::runtime_error {
 public:
  enum class Kind { io, parse, schema, dimension_mismatch, non_finite };

  EmbeddingCacheError(Kind kind, std::string label, long index, const std::string& what);

  Kind kind() const { return kind_; }
  const std::string& label() const { return label_; }
  /// Offending description index, or -1 when not applicable.
  long index() const { return index_; }

 private:
  Kind kind_;
  std::string label_;
  long index_;
};

EmbeddingCache load_embedding_cache(const std::filesystem::path& path);
EmbeddingCache parse_embedding_cache(std::string_view json_text);
void save_embedding_cache(const EmbeddingCache& cache, const std::filesystem::path& path);
std::string dump_embedding_cache(const EmbeddingCache& cache);

/// Deterministic stand-in for a pretrained text encoder. The seed is
/// FNV-1a-64 of "<strategy>/<label>"; `dim` SplitMix64 words are mapped to
/// [-1, 1) and the vector is L2-normalized.
EmbeddingVector pseudo_embed(std::string_view label, std::size_t dim, PromptStrategy strategy);

/// Description `index` of a label. Index 0 is pseudo_embed(label); later
/// descriptions mix that vector (weight 0.8) with the hash of
/// "<label>#<index>" (weight 0.6) and renormalize, so all descriptions of a
/// class share a common direction.
EmbeddingVector pseudo_embed_description(std::string_view label, std::size_t index,
                                         std::size_t dim, PromptStrategy strategy);

EmbeddingCache make_pseudo_cache(const std::vector<std::string>& labels, std::size_t dim,
                                 PromptStrategy strategy);

}  // namespace textsense::text
