// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>

#include "oracles.hpp"
#include "textsense/core/rng.hpp"
#include "textsense/eval/metrics.hpp"
#include "textsense/eval/segments_json.hpp"

using namespace textsense;
using namespace textsense::eval;

namespace {

// Coarse grid so that ties in tIoU, score and start are common.
Segment random_segment(Rng& rng, int classes) {
  const double s = double(rng.below(10));
  return {s, s + 1.0 + double(rng.below(6)), int(rng.below(std::uint64_t(classes)))};
}

struct Instance {
  std::vector<Detection> dets;
  std::vector<Segment> gts;
};

Instance random_instance(Rng& rng) {
  Instance in;
  const int classes = 1 + int(rng.below(2));
  const std::size_t nd = rng.below(6), ng = 1 + rng.below(5);
  for (std::size_t i = 0; i < ng; ++i) in.gts.push_back(random_segment(rng, classes));
  for (std::size_t i = 0; i < nd; ++i)
    in.dets.push_back({random_segment(rng, classes), double(rng.below(4)) / 4.0});
  return in;
}

}  // namespace

TEST_CASE("accuracy") {
  const int pred[] = {0, 1, 2, 2}, truth[] = {0, 1, 2, 1};
  CHECK(accuracy(pred, truth) == 0.75);
  CHECK_THROWS_AS(accuracy(std::span<const int>{}, std::span<const int>{}), std::invalid_argument);
  CHECK_THROWS_AS(accuracy(std::span(pred).first(2), truth), std::invalid_argument);
}

TEST_CASE("tiou examples and properties") {
  CHECK(tiou({0, 10, 0}, {5, 15, 0}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(tiou({0, 10, 0}, {0, 10, 0}) == 1.0);
  CHECK(tiou({0, 5, 0}, {5, 10, 0}) == 0.0);
  CHECK_THROWS_AS(tiou({3, 3, 0}, {0, 1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(tiou({4, 3, 0}, {0, 1, 0}), std::invalid_argument);
  Rng rng(50);
  for (int i = 0; i < 500; ++i) {
    const double as = rng.uniform(0, 10), bs = rng.uniform(0, 10);
    const Segment a{as, as + rng.uniform(0.1, 5), 0}, b{bs, bs + rng.uniform(0.1, 5), 0};
    const double v = tiou(a, b);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v == tiou(b, a));
    CHECK(std::abs(v - oracle::tiou(a.start, a.end, b.start, b.end)) < 1e-12);
    const double k = rng.uniform(0.1, 10);
    CHECK(std::abs(tiou({a.start * k, a.end * k, 0}, {b.start * k, b.end * k, 0}) - v) < 1e-12);
  }
}

TEST_CASE("matching examples") {
  const Segment gt[] = {{0, 10, 0}};
  const Detection one[] = {{{0, 10, 0}, 0.9}};
  auto m = match_detections(one, gt);
  REQUIRE(m.pairs.size() == 1);
  CHECK(m.pairs[0].tiou == 1.0);

  const Detection two[] = {{{1, 9, 0}, 0.4}, {{0, 10, 0}, 0.9}};
  m = match_detections(two, gt);
  REQUIRE(m.pairs.size() == 1);
  CHECK(m.pairs[0].detection == 1);
  CHECK(m.unmatched_detections == std::vector<std::size_t>{0});

  const Detection wrong_class[] = {{{0, 10, 1}, 0.9}};
  CHECK(match_detections(wrong_class, gt).pairs.empty());
  CHECK(match_detections(wrong_class, gt, false).pairs.size() == 1);
}

TEST_CASE("AP examples") {
  const Segment gts[] = {{0, 10, 0}, {20, 30, 0}};
  // tIoU 0.6 against the first ground truth: [0, 6] vs [0, 10]
  const Detection dets[] = {{{0, 6, 0}, 0.8}};
  CHECK(ap_at_t(dets, gts, 0.5) == 0.5);
  CHECK(ap_at_t(dets, gts, 0.7) == 0.0);
  CHECK(ap_at_t(std::span<const Detection>{}, gts, 0.5) == 0.0);
  CHECK_THROWS_AS(ap_at_t(dets, std::span<const Segment>{}, 0.5), std::invalid_argument);
  const double thresholds[] = {0.5, 0.7};
  CHECK(mean_ap(dets, gts, thresholds) == 0.25);
}

TEST_CASE("mean_ap averages per-threshold values") {
  const Segment gts[] = {{0, 10, 0}, {20, 30, 0}};
  const Detection dets[] = {{{0, 10, 0}, 0.9}, {{20, 26, 0}, 0.8}};
  const double thresholds[] = {0.5, 0.7};
  const auto per = ap_at_thresholds(dets, gts, thresholds);
  CHECK(per == std::vector<double>{1.0, 0.5});
  CHECK(mean_ap(dets, gts, thresholds) == 0.75);
}

TEST_CASE("matching and AP agree with exhaustive search on random instances") {
  Rng rng(51);
  const double ts[] = {0.1, 0.3, 0.5, 0.7, 0.9};
  for (int n = 0; n < 1000; ++n) {
    const auto in = random_instance(rng);
    const auto ref = oracle::exhaustive_match(in.dets, in.gts);
    const auto got = match_detections(in.dets, in.gts);
    std::vector<int> assigned(in.dets.size(), -1);
    for (const auto& p : got.pairs) {
      assigned[p.detection] = int(p.ground_truth);
      const auto& s = in.dets[p.detection].segment;
      const auto& g = in.gts[p.ground_truth];
      CHECK(std::abs(p.tiou - oracle::tiou(s.start, s.end, g.start, g.end)) < 1e-12);
    }
    CHECK(assigned == ref);
    double mean = 0.0, previous = 2.0;
    for (double t : ts) {
      const double a = ap_at_t(in.dets, in.gts, t);
      CHECK(std::abs(a - oracle::ap(in.dets, in.gts, ref, t)) < 1e-12);
      CHECK(a <= previous);
      previous = a;
      mean += a / 5.0;
    }
    CHECK(std::abs(mean_ap(in.dets, in.gts, ts) - mean) < 1e-12);
  }
}

TEST_CASE("threshold presets") {
  CHECK(kWifiTalThresholds == std::array<double, 5>{0.3, 0.4, 0.5, 0.6, 0.7});
  CHECK(kXrfv2Thresholds == std::array<double, 5>{0.5, 0.55, 0.6, 0.65, 0.7});
}

TEST_CASE("segments and detections round-trip through JSON") {
  const std::vector<Detection> dets{{{0.5, 2.25, 1}, 0.75}, {{3, 4, 0}, 0.125}};
  const auto path = std::filesystem::temp_directory_path() / "textsense_dets.json";
  write_json_file(path, nlohmann::json(dets));
  const auto back = read_detections(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].segment.start == 0.5);
  CHECK(back[0].segment.end == 2.25);
  CHECK(back[0].segment.class_id == 1);
  CHECK(back[1].score == 0.125);
  const auto segs = read_segments(path);
  CHECK(segs.size() == 2);
  std::filesystem::remove(path);
  nlohmann::json bad = {{"start", 3}, {"end", 1}, {"class", 0}};
  CHECK_THROWS(bad.get<Segment>());
}
