// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "textsense/harness/config.hpp"
#include "textsense/harness/dataset.hpp"
#include "textsense/harness/experiment.hpp"
#include "textsense/harness/report.hpp"

using namespace textsense;
using namespace textsense::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("textsense_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig small_har(const fs::path& out) {
  ExperimentConfig c;
  c.data.num_train = 30;
  c.data.num_test = 12;
  c.training.epochs = 3;
  c.training.batch_size = 10;
  c.training.hidden = 8;
  c.embedding_dim = 8;
  c.text_heads = 2;
  c.seeds = {1, 2};
  c.output = out;
  return c;
}

ExperimentConfig small_tal(const fs::path& out) {
  ExperimentConfig c = small_har(out);
  c.task = Task::tal;
  c.data.num_train = 4;
  c.data.num_test = 2;
  c.data.frames = 40;
  c.training.epochs = 2;
  c.training.batch_size = 2;
  c.training.levels = 2;
  c.seeds = {3};
  return c;
}

}  // namespace

TEST_CASE("fixed-point report cells") {
  CHECK(to_units(0.8542) == 854200);
  CHECK(format_units(854200) == "85.4200");
  CHECK(format_units(-6667) == "-0.6667");
  CHECK(format_units(854250, 2) == "85.43");
  CHECK(parse_units("85.4200") == 854200);
  CHECK(parse_units("-0.6667") == -6667);
  CHECK(mean_units({1, 2}) == 2);
  CHECK(mean_units({100, 200, 400}) == 233);
  CHECK(std_units({5}) == 0);
  CHECK(std_units({100, 300}) == 141);
}

TEST_CASE("report CSV round trip with a missing cell") {
  ReportTable t;
  t.title = "demo";
  t.columns = {"0.3", "Avg"};
  t.rows.push_back({"W", "1", {Cell{500000}, Cell{250000}}});
  t.rows.push_back({"W+T", "1", {std::nullopt, Cell{-12}}});
  const std::string csv = to_csv(t);
  CHECK(csv.rfind("method,seed,0.3,Avg\n", 0) == 0);
  const auto back = parse_csv(csv);
  CHECK(back.columns == t.columns);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[1].values[0] == std::nullopt);
  CHECK(back.rows[1].values[1] == Cell{-12});
  CHECK(to_csv(back) == csv);
  CHECK(back.find("W", "1") != nullptr);
  CHECK(back.find("W", "2") == nullptr);
  const std::string text = render_text(t);
  CHECK(text.find("n/a") != std::string::npos);
  CHECK(text.find("50.00") != std::string::npos);
  CHECK_THROWS(parse_csv("method,seed,Acc\nW,1,1.0,2.0\n"));
}

TEST_CASE("config JSON round trip and validation") {
  ExperimentConfig c = small_tal("out/x");
  c.strategy = text::PromptStrategy::TCE;
  c.pooling = text::Pooling::mean;
  c.grid_strategies = {text::PromptStrategy::TLE, text::PromptStrategy::TDE};
  c.grid_sources = {EmbeddingSource{"pseudo"}, EmbeddingSource{"caches/{strategy}.json"}};
  nlohmann::json j = c;
  const ExperimentConfig back = j.get<ExperimentConfig>();
  CHECK(nlohmann::json(back) == j);
  CHECK(back.grid_sources[1].resolve(text::PromptStrategy::TLE) == fs::path("caches/TLE.json"));

  ExperimentConfig bad = c;
  bad.text_weight = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.seeds.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK(c.tal_thresholds() == std::vector<double>{0.3, 0.4, 0.5, 0.6, 0.7});
}

TEST_CASE("gen: HAR counts, determinism and class balance") {
  auto c = small_har(scratch("gen_har"));
  c.data.num_train = 60;
  c.data.num_test = 9;
  for (auto modality : {Modality::csi, Modality::fmcw, Modality::rfid}) {
    c.modality = modality;
    const auto a = generate_har(c);
    CHECK(a.train.size() == 60);
    CHECK(a.train.sequences.shape[0] == 60);
    CHECK(a.test.size() == 9);
    for (int k = 0; k < 3; ++k) CHECK(std::count(a.train.labels.begin(), a.train.labels.end(), k) == 20);
    const auto b = generate_har(c);
    CHECK(a.train.sequences.data == b.train.sequences.data);
    CHECK(a.test.sequences.data != a.train.sequences.data);
  }
  c.modality = Modality::csi;
  const auto dir = cmd_gen(c);
  const auto first = slurp(dir / "train" / "sequences.bin");
  cmd_gen(c);
  CHECK(slurp(dir / "train" / "sequences.bin") == first);
  const auto loaded = load_har(dir);
  CHECK(loaded.train.labels == generate_har(c).train.labels);
  fs::remove_all(c.output);
}

TEST_CASE("gen: TAL segments lie inside their recordings") {
  const auto c = small_tal(scratch("gen_tal"));
  const auto d = generate_tal(c);
  const double duration = double(c.data.frames) / d.frame_rate;
  for (const auto* split : {&d.train, &d.test}) {
    for (const auto& segs : split->segments) {
      CHECK(segs.size() >= 2);
      CHECK(segs.size() <= 3);
      for (std::size_t i = 0; i < segs.size(); ++i) {
        CHECK(segs[i].start >= 0.0);
        CHECK(segs[i].end <= duration);
        CHECK(segs[i].start < segs[i].end);
        if (i) CHECK(segs[i - 1].end <= segs[i].start);
      }
    }
  }
  const auto dir = cmd_gen(c);
  const auto back = load_tal(dir);
  CHECK(back.train.features.data == d.train.features.data);
  fs::remove_all(c.output);
}

TEST_CASE("run: zero text weight reproduces the baseline exactly") {
  auto c = small_har(scratch("run_zero"));
  c.text_weight = 0.0;
  cmd_gen(c);
  const auto r = cmd_run(c);
  for (std::size_t s = 0; s < c.seeds.size(); ++s) {
    CHECK(r.baseline[s].predictions == r.fused[s].predictions);
    CHECK(r.baseline[s].metrics == r.fused[s].metrics);
    const auto* delta = r.table.find("Δ", std::to_string(c.seeds[s]));
    REQUIRE(delta != nullptr);
    CHECK(delta->values[0] == Cell{0});
  }
  fs::remove_all(c.output);
}

TEST_CASE("run: reports are deterministic and internally consistent") {
  auto c = small_har(scratch("run_det"));
  cmd_gen(c);
  cmd_run(c);
  const auto first = slurp(c.output / "report.csv");
  cmd_run(c);
  CHECK(slurp(c.output / "report.csv") == first);
  const auto table = read_csv(c.output / "report.csv");
  for (auto seed : c.seeds) {
    const auto s = std::to_string(seed);
    const auto *w = table.find("W", s), *wt = table.find("W+T", s), *d = table.find("Δ", s);
    REQUIRE(w);
    REQUIRE(wt);
    REQUIRE(d);
    CHECK(*d->values[0] == *wt->values[0] - *w->values[0]);
  }
  CHECK(fs::exists(c.output / "report.txt"));
  CHECK(fs::exists(c.output / "resolved_config.json"));
  CHECK(fs::exists(c.output / "curves" / "WT_seed1.csv"));
  fs::remove_all(c.output);
}

TEST_CASE("run: TAL Avg equals the mean of the threshold columns") {
  auto c = small_tal(scratch("run_tal"));
  cmd_gen(c);
  cmd_run(c);
  const auto table = read_csv(c.output / "report.csv");
  REQUIRE(table.columns.size() == 6);
  CHECK(table.columns.back() == "Avg");
  for (const auto& row : table.rows) {
    if (row.method == "Δ" || row.seed == "std") continue;
    std::vector<std::int64_t> cols;
    for (std::size_t i = 0; i + 1 < row.values.size(); ++i) cols.push_back(*row.values[i]);
    INFO(row.method, " ", row.seed);
    CHECK(*row.values.back() == mean_units(cols));
  }
  fs::remove_all(c.output);
}

TEST_CASE("run: missing dataset is reported") {
  auto c = small_har(scratch("run_missing"));
  CHECK_THROWS_WITH_AS(cmd_run(c), doctest::Contains("no dataset"), std::runtime_error);
}

TEST_CASE("ablate: one column per strategy, shared baseline, cells match standalone runs") {
  auto c = small_har(scratch("ablate"));
  c.seeds = {1};
  c.training.epochs = 2;
  c.grid_strategies = {text::PromptStrategy::TLE, text::PromptStrategy::TCE, text::PromptStrategy::TDE};
  cmd_gen(c);
  const auto result = cmd_ablate(c);
  CHECK(result.errors.empty());
  CHECK(result.matrix.columns == std::vector<std::string>{"TLE", "TCE", "TDE"});
  REQUIRE(result.matrix.rows.size() == 2);

  std::vector<std::string> baselines;
  for (auto s : c.grid_strategies) {
    const auto cell = read_csv(c.output / "cells" / cell_name(s, c.embedding_source) / "report.csv");
    baselines.push_back(format_units(*cell.find("W", "mean")->values[0]));
  }
  CHECK(baselines[0] == baselines[1]);
  CHECK(baselines[1] == baselines[2]);

  auto alone = c;
  alone.strategy = text::PromptStrategy::TCE;
  alone.dataset = c.dataset_dir();
  alone.output = scratch("ablate_alone");
  cmd_run(alone);
  CHECK(slurp(alone.output / "report.csv") ==
        slurp(c.output / "cells" / cell_name(text::PromptStrategy::TCE, c.embedding_source) / "report.csv"));
  fs::remove_all(c.output);
  fs::remove_all(alone.output);
}

TEST_CASE("config rejects unknown keys") {
  CHECK_THROWS_WITH_AS(nlohmann::json::parse(R"({"training": {"epochs": 3}})").get<ExperimentConfig>(),
                       doctest::Contains("unknown key 'training'"), std::invalid_argument);
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"train": {"epoch": 3}})").get<ExperimentConfig>(),
                  std::invalid_argument);
  const auto c = nlohmann::json::parse(R"({"train": {"epochs": 3}})").get<ExperimentConfig>();
  CHECK(c.training.epochs == 3);
}
