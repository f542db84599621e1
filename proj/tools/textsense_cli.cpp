// SPDX-License-Identifier: Apache-2.0
// textsense: generate synthetic data, write pseudo-embedding caches, run
// W vs. W+T experiments and ablations, and re-render reports.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "textsense/harness/config.hpp"
#include "textsense/harness/experiment.hpp"
#include "textsense/harness/report.hpp"
#include "textsense/text/embedding.hpp"
#include "textsense/text/fusion.hpp"

namespace {

using namespace textsense;
using nlohmann::json;

struct Overrides {
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::string strategy;
  std::optional<double> text_weight;
  std::string pooling;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seeds, "model seed; repeat for several")->take_all();
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--strategy", o.strategy, "prompt strategy")
      ->check(CLI::IsMember({"TLE", "TCE", "TDE"}));
  cmd->add_option("--text-weight", o.text_weight, "text fusion weight in [0, 1]");
  cmd->add_option("--pooling", o.pooling, "text pooling")
      ->check(CLI::IsMember({"mean", "cross_attention"}));
}

harness::ExperimentConfig resolve(const Overrides& o) {
  harness::ExperimentConfig c = o.config.empty() ? harness::ExperimentConfig{} : harness::load_config(o.config);
  if (!o.seeds.empty()) c.seeds = o.seeds;
  if (!o.out.empty()) c.output = o.out;
  if (!o.strategy.empty()) c.strategy = text::strategy_from_string(o.strategy);
  if (o.text_weight) c.text_weight = *o.text_weight;
  if (!o.pooling.empty()) c.pooling = text::pooling_from_string(o.pooling);
  return c;
}

int fail(const std::string& command, const std::string& kind, const std::string& message,
         int code = 1, json extra = json::object()) {
  extra["command"] = command;
  extra["kind"] = kind;
  extra["message"] = message;
  std::cerr << "error: " << extra.dump() << '\n';
  return code;
}

std::vector<std::string> read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open label file " + path);
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) labels.push_back(line);
  }
  if (labels.empty()) throw std::runtime_error("label file " + path + " is empty");
  return labels;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"W vs. W+T wireless sensing experiments"};
  app.require_subcommand(1);

  Overrides gen_o, run_o, ablate_o;
  auto* gen = app.add_subcommand("gen", "write the synthetic dataset of a config");
  add_common(gen, gen_o);
  auto* run = app.add_subcommand("run", "train and evaluate W and W+T for every seed");
  add_common(run, run_o);
  auto* ablate = app.add_subcommand("ablate", "run the strategy x embedding-source grid");
  add_common(ablate, ablate_o);

  auto* embed = app.add_subcommand("embed", "write a pseudo-embedding cache");
  std::string labels_path, embed_out, embed_strategy = "TDE";
  std::size_t dim = 32;
  embed->add_option("--labels", labels_path, "label file, one label per line")->required()->check(CLI::ExistingFile);
  embed->add_option("--out", embed_out, "cache JSON path")->required();
  embed->add_option("--strategy", embed_strategy, "prompt strategy")->check(CLI::IsMember({"TLE", "TCE", "TDE"}));
  embed->add_option("--dim", dim, "embedding width")->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand("report", "render a report CSV as a text table");
  std::string report_path;
  report->add_option("csv", report_path, "report.csv or ablation.csv")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("parse", "usage", e.what(), 2);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (*gen) {
      const auto dir = harness::cmd_gen(resolve(gen_o));
      std::cout << "dataset written to " << dir.string() << '\n';
    } else if (*run) {
      const auto config = resolve(run_o);
      const auto result = harness::cmd_run(config);
      std::cout << harness::render_text(result.table) << "outputs in " << config.output.string() << '\n';
    } else if (*ablate) {
      const auto config = resolve(ablate_o);
      const auto result = harness::cmd_ablate(config);
      std::cout << harness::render_text(result.matrix) << "outputs in " << config.output.string() << '\n';
      if (!result.errors.empty()) {
        json cells = json::array();
        for (const auto& e : result.errors)
          cells.push_back({{"strategy", e.strategy}, {"source", e.source}, {"message", e.message}});
        return fail(command, "cell_failures", std::to_string(result.errors.size()) + " grid cell(s) failed",
                    3, {{"cells", cells}});
      }
    } else if (*embed) {
      const auto cache = text::make_pseudo_cache(read_labels(labels_path), dim,
                                                 text::strategy_from_string(embed_strategy));
      text::save_embedding_cache(cache, embed_out);
      std::cout << "cache written to " << embed_out << '\n';
    } else if (*report) {
      std::cout << harness::render_text(harness::read_csv(report_path));
    }
  } catch (const model::TrainingAborted& e) {
    return fail(command, "training_aborted", e.what(), 1,
                {{"epoch", e.epoch()}, {"batch", e.batch()}});
  } catch (const text::EmbeddingCacheError& e) {
    return fail(command, "embedding_cache", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(command, "invalid_argument", e.what());
  } catch (const std::exception& e) {
    return fail(command, "runtime", e.what());
  }
  return 0;
}
