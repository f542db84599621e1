// SPDX-License-Identifier: Apache-2.0
#include "textsense/text/embedding.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "textsense/core/rng.hpp"

namespace textsense::text {

using nlohmann::json;

std::string_view to_string(PromptStrategy strategy) {
  switch (strategy) {
    case PromptStrategy::TLE: return "TLE";
    case PromptStrategy::TCE: return "TCE";
    case PromptStrategy::TDE: return "TDE";
  }
  return "?";
}

PromptStrategy strategy_from_string(std::string_view name) {
  if (name == "TLE") return PromptStrategy::TLE;
  if (name == "TCE") return PromptStrategy::TCE;
  if (name == "TDE") return PromptStrategy::TDE;
  throw std::invalid_argument("unknown prompt strategy '" + std::string(name) +
                              "' (expected TLE, TCE or TDE)");
}

std::size_t descriptions_per_label(PromptStrategy strategy) {
  return strategy == PromptStrategy::TDE ? 3 : 1;
}

EmbeddingCacheError::EmbeddingCacheError(Kind kind, std::string label, long index,
                                         const std::string& what)
    : std::runtime_error(what), kind_(kind), label_(std::move(label)), index_(index) {}

std::size_t EmbeddingCache::descriptions() const {
  return entries.empty() ? 0 : entries.begin()->second.size();
}

void EmbeddingCache::validate() const {
  using Kind = EmbeddingCacheError::Kind;
  if (dim == 0) throw EmbeddingCacheError(Kind::schema, "", -1, "embedding cache: dim must be >= 1");
  const std::size_t expected_l = descriptions();
  for (const auto& [label, vectors] : entries) {
    if (vectors.empty()) {
      throw EmbeddingCacheError(Kind::schema, label, -1,
                                "embedding cache: label '" + label + "' has no vectors");
    }
    if (vectors.size() != expected_l) {
      throw EmbeddingCacheError(Kind::dimension_mismatch, label, -1,
                                "embedding cache: label '" + label + "' has " +
                                    std::to_string(vectors.size()) + " descriptions, expected " +
                                    std::to_string(expected_l));
    }
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      if (vectors[i].size() != dim) {
        throw EmbeddingCacheError(Kind::dimension_mismatch, label, static_cast<long>(i),
                                  "embedding cache: label '" + label + "' vector " +
                                      std::to_string(i) + " has length " +
                                      std::to_string(vectors[i].size()) + ", expected " +
                                      std::to_string(dim));
      }
      for (double v : vectors[i]) {
        if (!std::isfinite(v)) {
          throw EmbeddingCacheError(Kind::non_finite, label, static_cast<long>(i),
                                    "embedding cache: label '" + label + "' vector " +
                                        std::to_string(i) + " has a non-finite entry");
        }
      }
    }
  }
}

EmbeddingCache parse_embedding_cache(std::string_view json_text) {
  using Kind = EmbeddingCacheError::Kind;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw EmbeddingCacheError(Kind::parse, "", -1, std::string("embedding cache: ") + e.what());
  }
  if (!j.is_object()) throw EmbeddingCacheError(Kind::schema, "", -1, "embedding cache: not an object");
  for (const char* key : {"encoder", "strategy", "dim", "entries"}) {
    if (!j.contains(key)) {
      throw EmbeddingCacheError(Kind::schema, "", -1,
                                std::string("embedding cache: missing field '") + key + "'");
    }
  }
  EmbeddingCache cache;
  try {
    cache.encoder_name = j.at("encoder").get<std::string>();
    cache.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    const auto& dim = j.at("dim");
    if (!dim.is_number_integer() || dim.get<long long>() < 1) {
      throw EmbeddingCacheError(Kind::schema, "", -1, "embedding cache: dim must be a positive integer");
    }
    cache.dim = dim.get<std::size_t>();
  } catch (const json::exception& e) {
    throw EmbeddingCacheError(Kind::schema, "", -1, std::string("embedding cache: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw EmbeddingCacheError(Kind::schema, "", -1, std::string("embedding cache: ") + e.what());
  }

  const auto& entries = j.at("entries");
  if (!entries.is_object()) {
    throw EmbeddingCacheError(Kind::schema, "", -1, "embedding cache: entries must be an object");
  }
  for (const auto& [label, list] : entries.items()) {
    if (!list.is_array()) {
      throw EmbeddingCacheError(Kind::schema, label, -1,
                                "embedding cache: label '" + label + "' is not a list of vectors");
    }
    std::vector<EmbeddingVector> vectors;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto& vec = list[i];
      if (!vec.is_array()) {
        throw EmbeddingCacheError(Kind::schema, label, static_cast<long>(i),
                                  "embedding cache: label '" + label + "' entry " +
                                      std::to_string(i) + " is not an array");
      }
      EmbeddingVector values;
      values.reserve(vec.size());
      for (const auto& x : vec) {
        // NaN and Inf have no JSON literal; serializers emit null for them.
        if (x.is_null()) {
          throw EmbeddingCacheError(Kind::non_finite, label, static_cast<long>(i),
                                    "embedding cache: label '" + label + "' vector " +
                                        std::to_string(i) + " has a non-finite entry");
        }
        if (!x.is_number()) {
          throw EmbeddingCacheError(Kind::schema, label, static_cast<long>(i),
                                    "embedding cache: label '" + label + "' vector " +
                                        std::to_string(i) + " has a non-numeric entry");
        }
        values.push_back(x.get<double>());
      }
      vectors.push_back(std::move(values));
    }
    cache.entries.emplace(label, std::move(vectors));
  }
  cache.validate();
  return cache;
}

EmbeddingCache load_embedding_cache(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw EmbeddingCacheError(EmbeddingCacheError::Kind::io, "", -1,
                              "embedding cache: cannot open " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_embedding_cache(buffer.str());
}

std::string dump_embedding_cache(const EmbeddingCache& cache) {
  cache.validate();
  json entries = json::object();
  for (const auto& [label, vectors] : cache.entries) entries[label] = vectors;
  const json j = {{"encoder", cache.encoder_name},
                  {"strategy", std::string(to_string(cache.strategy))},
                  {"dim", cache.dim},
                  {"entries", entries}};
  return j.dump() + "\n";
}

void save_embedding_cache(const EmbeddingCache& cache, const std::filesystem::path& path) {
  const std::string text = dump_embedding_cache(cache);
  std::ofstream out(path);
  if (!out) {
    throw EmbeddingCacheError(EmbeddingCacheError::Kind::io, "", -1,
                              "embedding cache: cannot write " + path.string());
  }
  out << text;
}

namespace {

EmbeddingVector embed_key(std::string_view key, std::size_t dim, PromptStrategy strategy) {
  if (dim == 0) throw std::invalid_argument("pseudo_embed: dim must be >= 1");
  std::string seed_text(to_string(strategy));
  seed_text += '/';
  seed_text += key;
  std::uint64_t state = fnv1a64(seed_text);
  EmbeddingVector v(dim);
  double norm2 = 0.0;
  for (auto& x : v) {
    // Top 53 bits -> [0, 1) -> [-1, 1).
    x = static_cast<double>(splitmix64_next(state) >> 11) * 0x1.0p-52 - 1.0;
    norm2 += x * x;
  }
  const double norm = std::sqrt(norm2);
  for (auto& x : v) x /= norm;
  return v;
}

}  // namespace

EmbeddingVector pseudo_embed(std::string_view label, std::size_t dim, PromptStrategy strategy) {
  if (label.empty()) throw std::invalid_argument("pseudo_embed: empty label");
  return embed_key(label, dim, strategy);
}

EmbeddingVector pseudo_embed_description(std::string_view label, std::size_t index,
                                         std::size_t dim, PromptStrategy strategy) {
  if (label.empty()) throw std::invalid_argument("pseudo_embed: empty label");
  EmbeddingVector base = embed_key(label, dim, strategy);
  if (index == 0) return base;
  const auto extra = embed_key(std::string(label) + "#" + std::to_string(index), dim, strategy);
  double norm = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    base[i] = 0.8 * base[i] + 0.6 * extra[i];
    norm += base[i] * base[i];
  }
  norm = std::sqrt(norm);
  for (auto& x : base) x /= norm;
  return base;
}

EmbeddingCache make_pseudo_cache(const std::vector<std::string>& labels, std::size_t dim,
                                 PromptStrategy strategy) {
  EmbeddingCache cache;
  cache.encoder_name = "pseudo-splitmix64";
  cache.strategy = strategy;
  cache.dim = dim;
  const std::size_t l = descriptions_per_label(strategy);
  for (const auto& label : labels) {
    std::vector<EmbeddingVector> vectors;
    for (std::size_t i = 0; i < l; ++i)
      vectors.push_back(pseudo_embed_description(label, i, dim, strategy));
    cache.entries[label] = std::move(vectors);
  }
  return cache;
}

}  // namespace textsense::text
