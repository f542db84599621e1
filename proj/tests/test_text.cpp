// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "oracles.hpp"
#include "textsense/core/rng.hpp"
#include "textsense/model/ops.hpp"
#include "textsense/text/attention.hpp"
#include "textsense/text/embedding.hpp"
#include "textsense/text/fusion.hpp"
#include "textsense/text/text_branch.hpp"

using namespace textsense;
using namespace textsense::text;

namespace {

double norm(const std::vector<double>& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.uniform(-scale, scale);
  return m;
}

TokenMatrix random_tokens(std::size_t b, std::size_t l, std::size_t c, Rng& rng) {
  std::vector<Matrix> samples;
  for (std::size_t i = 0; i < b; ++i) samples.push_back(random_matrix(l, c, rng));
  return TokenMatrix::from_samples(samples, TokenRole::initial);
}

EmbeddingCacheError::Kind parse_kind(const std::string& text) {
  try {
    parse_embedding_cache(text);
  } catch (const EmbeddingCacheError& e) {
    return e.kind();
  }
  FAIL("cache was accepted: " << text);
  return EmbeddingCacheError::Kind::io;
}

}  // namespace

TEST_CASE("strategy names and description counts") {
  for (auto s : {PromptStrategy::TLE, PromptStrategy::TCE, PromptStrategy::TDE})
    CHECK(strategy_from_string(to_string(s)) == s);
  CHECK(descriptions_per_label(PromptStrategy::TLE) == 1);
  CHECK(descriptions_per_label(PromptStrategy::TCE) == 1);
  CHECK(descriptions_per_label(PromptStrategy::TDE) == 3);
  CHECK_THROWS_AS(strategy_from_string("tle"), std::invalid_argument);
}

TEST_CASE("pseudo_embed follows the FNV-1a / SplitMix64 recipe") {
  // Independent recomputation of the recipe.
  const std::string key = "TLE/walk";
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : key) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::vector<double> expected;
  std::uint64_t state = h;
  for (int i = 0; i < 8; ++i) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    expected.push_back(double(z >> 11) * 0x1.0p-53 * 2.0 - 1.0);
  }
  const double n = norm(expected);
  for (double& v : expected) v /= n;

  const auto got = pseudo_embed("walk", 8, PromptStrategy::TLE);
  REQUIRE(got.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-15));
  CHECK(fnv1a64(key) == h);
}

TEST_CASE("pseudo_embed properties") {
  const auto a = pseudo_embed("walk", 8, PromptStrategy::TLE);
  CHECK(a == pseudo_embed("walk", 8, PromptStrategy::TLE));
  CHECK(a != pseudo_embed("walk", 8, PromptStrategy::TCE));
  CHECK(a != pseudo_embed("run", 8, PromptStrategy::TLE));
  for (std::size_t dim : {1u, 2u, 7u, 64u, 768u})
    CHECK(std::abs(norm(pseudo_embed("waving hands", dim, PromptStrategy::TDE)) - 1.0) < 1e-12);
  CHECK_THROWS_AS(pseudo_embed("", 8, PromptStrategy::TLE), std::invalid_argument);
  CHECK_THROWS_AS(pseudo_embed("walk", 0, PromptStrategy::TLE), std::invalid_argument);
}

TEST_CASE("pseudo descriptions of one class share a direction") {
  const auto base = pseudo_embed_description("walking", 0, 64, PromptStrategy::TDE);
  CHECK(base == pseudo_embed("walking", 64, PromptStrategy::TDE));
  const auto other = pseudo_embed("running", 64, PromptStrategy::TDE);
  for (std::size_t j = 1; j < 3; ++j) {
    const auto d = pseudo_embed_description("walking", j, 64, PromptStrategy::TDE);
    CHECK(std::abs(norm(d) - 1.0) < 1e-12);
    const double same = std::inner_product(d.begin(), d.end(), base.begin(), 0.0);
    const double cross = std::inner_product(d.begin(), d.end(), other.begin(), 0.0);
    CHECK(same > 0.6);
    CHECK(same > cross + 0.3);
  }
}

TEST_CASE("pseudo cache: shape, validation and bit-exact round trip") {
  const std::vector<std::string> labels{"walking", "running", "jumping", "waving", "falling",
                                        "sitting", "standing"};
  for (auto s : {PromptStrategy::TLE, PromptStrategy::TCE, PromptStrategy::TDE}) {
    const auto cache = make_pseudo_cache(labels, 24, s);
    CHECK_NOTHROW(cache.validate());
    CHECK(cache.entries.size() == 7);
    CHECK(cache.descriptions() == descriptions_per_label(s));
    const auto back = parse_embedding_cache(dump_embedding_cache(cache));
    CHECK(back.entries == cache.entries);
    CHECK(back.encoder_name == cache.encoder_name);
    CHECK(back.strategy == s);
    CHECK(back.dim == 24);
    for (const auto& [label, vecs] : back.entries)
      for (const auto& v : vecs) CHECK(std::abs(norm(v) - 1.0) < 1e-6);
  }
  const auto path = std::filesystem::temp_directory_path() / "textsense_cache.json";
  const auto cache = make_pseudo_cache(labels, 16, PromptStrategy::TDE);
  save_embedding_cache(cache, path);
  CHECK(load_embedding_cache(path).entries == cache.entries);
  std::filesystem::remove(path);
}

TEST_CASE("cache JSON uses the exact field names") {
  const auto j = nlohmann::json::parse(dump_embedding_cache(make_pseudo_cache({"a"}, 4, PromptStrategy::TCE)));
  CHECK(j.size() == 4);
  CHECK(j.at("encoder").is_string());
  CHECK(j.at("strategy") == "TCE");
  CHECK(j.at("dim") == 4);
  CHECK(j.at("entries").at("a").size() == 1);
  CHECK(j.at("entries").at("a")[0].size() == 4);
}

TEST_CASE("load_embedding_cache accepts a well-formed file") {
  const auto cache = parse_embedding_cache(R"({"encoder":"x","strategy":"TLE","dim":4,
    "entries":{"a":[[1,0,0,0]],"b":[[0,1,0,0]],"c":[[0,0,0.5,0.5]]}})");
  CHECK(cache.entries.size() == 3);
  CHECK(cache.descriptions() == 1);
  CHECK(cache.entries.at("c")[0][2] == 0.5);
}

TEST_CASE("load_embedding_cache rejects bad files with label and index") {
  using K = EmbeddingCacheError::Kind;
  try {
    parse_embedding_cache(R"({"encoder":"x","strategy":"TLE","dim":4,
      "entries":{"a":[[1,0,0,0]],"bad":[[1,0,0]]}})");
    FAIL("accepted a short vector");
  } catch (const EmbeddingCacheError& e) {
    CHECK(e.kind() == K::dimension_mismatch);
    CHECK(e.label() == "bad");
    CHECK(e.index() == 0);
    CHECK(std::string(e.what()).find("bad") != std::string::npos);
  }
  try {
    parse_embedding_cache(R"({"encoder":"x","strategy":"TDE","dim":2,
      "entries":{"a":[[1,0],[0,1],[1,1]],"b":[[1,0],[0,1],[1,null]]}})");
    FAIL("accepted a null entry");
  } catch (const EmbeddingCacheError& e) {
    CHECK(e.kind() == K::non_finite);
    CHECK(e.label() == "b");
    CHECK(e.index() == 2);
  }
  // Ragged description counts.
  CHECK(parse_kind(R"({"encoder":"x","strategy":"TDE","dim":1,"entries":{"a":[[1],[1],[1]],"b":[[1]]}})") ==
        K::dimension_mismatch);
  CHECK(parse_kind("{not json") == K::parse);
  CHECK(parse_kind(R"({"encoder":"x","strategy":"NOPE","dim":1,"entries":{}})") == K::schema);
  CHECK(parse_kind(R"({"encoder":"x","strategy":"TLE","dim":0,"entries":{}})") == K::schema);
  CHECK(parse_kind(R"({"strategy":"TLE","dim":1,"entries":{}})") == K::schema);
  CHECK(parse_kind(R"({"encoder":"x","strategy":"TLE","dim":1,"entries":{"a":[["s"]]}})") == K::schema);
  try {
    load_embedding_cache("/nonexistent/cache.json");
    FAIL("loaded a missing file");
  } catch (const EmbeddingCacheError& e) {
    CHECK(e.kind() == K::io);
  }
}

TEST_CASE("mhsa_forward matches the loop oracle") {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t b = 1 + rng.below(4), l = 1 + rng.below(5), heads = 1 + rng.below(4);
    const std::size_t dk = 1 + rng.below(3), c = 1 + rng.below(8);
    const auto w = MhsaWeights::random(c, heads, dk, rng);
    const auto x = random_tokens(b, l, c, rng);
    AttentionMaps maps;
    const auto out = mhsa_forward(x, w, &maps);
    CHECK(out.role() == TokenRole::attended);
    REQUIRE(out.batch() == b);
    REQUIRE(out.tokens() == l);
    for (std::size_t s = 0; s < b; ++s) {
      std::vector<Matrix> ref_maps;
      const Matrix ref = oracle::mhsa(x.sample(s), w.w_q, w.w_k, w.w_v, w.w_o, &ref_maps);
      CHECK(max_abs_diff(out.sample(s), ref) < 1e-10);
      for (std::size_t h = 0; h < heads; ++h) {
        CHECK(max_abs_diff(maps[s][h], ref_maps[h]) < 1e-12);
        for (std::size_t i = 0; i < l; ++i) {
          const auto row = maps[s][h].row(i);
          CHECK(std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("mhsa with zero weights is the identity, and L = 1 attends to itself") {
  Rng rng(22);
  const auto x = random_tokens(3, 4, 8, rng);
  const auto out = mhsa_forward(x, MhsaWeights::zeros(8, 4, 2));
  CHECK(out.data() == x.data());

  AttentionMaps maps;
  mhsa_forward(random_tokens(2, 1, 8, rng), MhsaWeights::random(8, 2, 4, rng), &maps);
  for (const auto& per_sample : maps)
    for (const auto& m : per_sample) CHECK(m == Matrix{{1.0}});
}

TEST_CASE("mhsa is permutation equivariant") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t l = 2 + rng.below(4), c = 2 + rng.below(7);
    const auto w = MhsaWeights::random(c, 1 + rng.below(4), 1 + rng.below(3), rng);
    const auto x = random_tokens(1, l, c, rng);
    std::vector<std::size_t> perm(l);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = l - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    Matrix permuted(l, c);
    for (std::size_t i = 0; i < l; ++i)
      for (std::size_t j = 0; j < c; ++j) permuted(i, j) = x.sample(0)(perm[i], j);
    const auto a = mhsa_forward(x, w).sample(0);
    const auto b = mhsa_forward(TokenMatrix::from_samples({permuted}, TokenRole::initial), w).sample(0);
    for (std::size_t i = 0; i < l; ++i)
      for (std::size_t j = 0; j < c; ++j) CHECK(std::abs(b(i, j) - a(perm[i], j)) < 1e-10);
  }
}

TEST_CASE("mhsa shape errors") {
  Rng rng(24);
  const auto x = random_tokens(1, 3, 4, rng);
  CHECK_THROWS_AS(mhsa_forward(x, MhsaWeights::zeros(5, 1, 2)), std::invalid_argument);
  auto w = MhsaWeights::zeros(4, 2, 2);
  w.w_o = Matrix(3, 4);
  CHECK_THROWS_AS(mhsa_forward(x, w), std::invalid_argument);
  const auto att = mhsa_forward(x, MhsaWeights::zeros(4, 1, 1));
  CHECK_THROWS_AS(mhsa_forward(att, MhsaWeights::zeros(4, 1, 1)), std::invalid_argument);
}

TEST_CASE("combine prepends the mean attended token") {
  Rng rng(25);
  for (std::size_t l : {1u, 3u, 5u}) {
    const auto init = random_tokens(2, l, 4, rng);
    const auto att = mhsa_forward(init, MhsaWeights::random(4, 2, 2, rng));
    const auto out = combine(att, init);
    CHECK(out.role() == TokenRole::combined);
    REQUIRE(out.tokens() == l + 1);
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t c = 0; c < 4; ++c) {
        double mean = 0.0;
        for (std::size_t i = 0; i < l; ++i) mean += att.at(b, i, c);
        mean /= double(l);
        CHECK(std::abs(out.at(b, 0, c) - mean) < 1e-12);
        if (l == 1) CHECK(out.at(b, 0, c) == att.at(b, 0, c));
        for (std::size_t i = 0; i < l; ++i) CHECK(out.at(b, i + 1, c) == init.at(b, i, c));
      }
  }
  const auto init = random_tokens(1, 2, 3, rng);
  TokenMatrix zeros(1, 2, 3, TokenRole::attended);
  const auto out = combine(zeros, init);
  for (std::size_t c = 0; c < 3; ++c) CHECK(out.at(0, 0, c) == 0.0);
  CHECK_THROWS_AS(combine(init, init), std::invalid_argument);
  CHECK_THROWS_AS(combine(TokenMatrix(1, 3, 3, TokenRole::attended), init), std::invalid_argument);
}

TEST_CASE("fuse examples") {
  Rng rng(26);
  const Matrix wireless = random_matrix(3, 4, rng);
  const auto tokens = TokenMatrix::from_samples({random_matrix(3, 4, rng)}, TokenRole::combined);
  for (auto pooling : {Pooling::mean, Pooling::cross_attention}) {
    const auto degenerate = FusionConfig::with_text_weight(0.0, pooling, random_matrix(4, 4, rng));
    CHECK(fuse(wireless, tokens, degenerate) == wireless);
    FusionConfig cfg;
    cfg.pooling = pooling;
    cfg.projection = random_matrix(4, 4, rng);
    const auto zeros = TokenMatrix::from_samples({Matrix(3, 4)}, TokenRole::combined);
    const auto out = fuse(wireless, zeros, cfg);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == doctest::Approx(0.9 * wireless.data()[i]));
  }
  FusionConfig cfg;
  cfg.pooling = Pooling::mean;
  cfg.projection = Matrix::identity(4);
  const auto out = fuse(wireless, tokens, cfg);
  const Matrix t = tokens.sample(0);
  for (std::size_t b = 0; b < 3; ++b)
    for (std::size_t c = 0; c < 4; ++c) {
      const double mean = (t(0, c) + t(1, c) + t(2, c)) / 3.0;
      CHECK(std::abs(out(b, c) - (0.9 * wireless(b, c) + 0.1 * mean)) < 1e-14);
    }
}

TEST_CASE("cross-attention pooling weights tokens by similarity to each wireless row") {
  Rng rng(27);
  const Matrix w = random_matrix(2, 3, rng), tok = random_matrix(4, 5, rng), proj = random_matrix(5, 3, rng);
  FusionConfig cfg;
  cfg.projection = proj;
  const auto out = fuse(w, TokenMatrix::from_samples({tok}, TokenRole::combined), cfg);
  const Matrix keys = matmul(tok, proj);
  for (std::size_t b = 0; b < 2; ++b) {
    std::vector<double> s(4);
    double z = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      double dot = 0.0;
      for (std::size_t c = 0; c < 3; ++c) dot += w(b, c) * keys(k, c);
      z += (s[k] = std::exp(dot / std::sqrt(3.0)));
    }
    for (std::size_t c = 0; c < 3; ++c) {
      double text = 0.0;
      for (std::size_t k = 0; k < 4; ++k) text += s[k] / z * keys(k, c);
      CHECK(std::abs(out(b, c) - (0.9 * w(b, c) + 0.1 * text)) < 1e-12);
    }
  }
}

TEST_CASE("fuse is linear in the wireless input under mean pooling") {
  Rng rng(28);
  FusionConfig cfg;
  cfg.pooling = Pooling::mean;
  cfg.projection = random_matrix(5, 3, rng);
  const auto tokens = TokenMatrix::from_samples({random_matrix(4, 5, rng)}, TokenRole::combined);
  const Matrix a = random_matrix(2, 3, rng), b = random_matrix(2, 3, rng);
  const Matrix zero(2, 3);
  // f(a + b) - f(0) = (f(a) - f(0)) + (f(b) - f(0))
  const Matrix lhs = fuse(a + b, tokens, cfg) - fuse(zero, tokens, cfg);
  const Matrix rhs = (fuse(a, tokens, cfg) - fuse(zero, tokens, cfg)) + (fuse(b, tokens, cfg) - fuse(zero, tokens, cfg));
  CHECK(max_abs_diff(lhs, rhs) < 1e-14);
}

TEST_CASE("fusion config validation and dimension errors") {
  FusionConfig cfg;
  cfg.w_signal = 0.8;
  cfg.projection = Matrix::identity(3);
  const auto tokens = TokenMatrix::from_samples({Matrix(2, 3)}, TokenRole::combined);
  CHECK_THROWS_AS(fuse(Matrix(1, 3), tokens, cfg), std::invalid_argument);
  cfg = FusionConfig{};
  cfg.w_signal = 1.1;
  cfg.w_text = -0.1;
  cfg.projection = Matrix::identity(3);
  CHECK_THROWS_AS(fuse(Matrix(1, 3), tokens, cfg), std::invalid_argument);
  cfg = FusionConfig{};
  cfg.projection = Matrix(3, 4);
  CHECK_THROWS_AS(fuse(Matrix(1, 3), tokens, cfg), std::invalid_argument);
  CHECK(pooling_from_string("cross_attention") == Pooling::cross_attention);
  CHECK_THROWS_AS(pooling_from_string("max"), std::invalid_argument);
}

TEST_CASE("text branch: dictionary, forward shape and zero text weight") {
  const auto cache = make_pseudo_cache({"a", "b", "c"}, 8, PromptStrategy::TDE);
  const Matrix dict = dictionary_tokens(cache, {"a", "b", "c"});
  CHECK(dict.rows() == 9);
  CHECK(dict.cols() == 8);
  CHECK_THROWS(dictionary_tokens(cache, {"a", "zzz"}));

  Rng rng(29);
  const Matrix x = random_matrix(5, 6, rng);
  for (auto pooling : {Pooling::mean, Pooling::cross_attention}) {
    Rng init(1);
    TextBranch branch(dict, 6, {4, 0.0, pooling}, init);
    model::Tape tape;
    const auto out = branch.apply(tape, tape.constant(x));
    CHECK(out.value() == x);
    Rng init2(1);
    TextBranch live(dict, 6, {4, 0.1, pooling}, init2);
    model::Tape tape2;
    const auto fused = live.apply(tape2, tape2.constant(x));
    CHECK(fused.rows() == 5);
    CHECK(fused.cols() == 6);
    CHECK(max_abs_diff(fused.value(), x) > 0.0);
  }
  Rng bad(3);
  CHECK_THROWS_AS(TextBranch(dict, 6, {3, 0.1, Pooling::mean}, bad), std::invalid_argument);
}

TEST_CASE("tape MHSA agrees with mhsa_forward") {
  Rng rng(30);
  MhsaLayer layer(8, 2, 4, rng);
  const Matrix x = random_matrix(5, 8, rng);
  model::Tape tape;
  const auto out = mhsa(tape.constant(x), layer.bind(tape));
  const auto ref = mhsa_forward(TokenMatrix::from_samples({x}, TokenRole::initial), layer.weights());
  CHECK(max_abs_diff(out.value(), ref.sample(0)) < 1e-14);
}
