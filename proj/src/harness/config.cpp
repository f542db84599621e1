// SPDX-License-Identifier: Apache-2.0
#include "textsense/harness/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string_view>

#include "textsense/eval/metrics.hpp"

namespace textsense::harness {

using nlohmann::json;

std::string to_string(Task task) { return task == Task::har ? "har" : "tal"; }

std::string to_string(Modality modality) {
  switch (modality) {
    case Modality::csi: return "csi";
    case Modality::fmcw: return "fmcw";
    case Modality::rfid: return "rfid";
  }
  return "?";
}

Task task_from_string(const std::string& name) {
  if (name == "har") return Task::har;
  if (name == "tal") return Task::tal;
  throw std::invalid_argument("unknown task '" + name + "' (expected har or tal)");
}

Modality modality_from_string(const std::string& name) {
  if (name == "csi") return Modality::csi;
  if (name == "fmcw") return Modality::fmcw;
  if (name == "rfid") return Modality::rfid;
  throw std::invalid_argument("unknown modality '" + name + "' (expected csi, fmcw or rfid)");
}

std::filesystem::path EmbeddingSource::resolve(text::PromptStrategy strategy) const {
  std::string path = spec;
  const std::string key = "{strategy}";
  if (const auto pos = path.find(key); pos != std::string::npos) {
    path.replace(pos, key.size(), std::string(text::to_string(strategy)));
  }
  return path;
}

std::string EmbeddingSource::display_name() const {
  if (is_pseudo()) return "pseudo";
  return std::filesystem::path(spec).stem().string();
}

std::vector<std::string> default_labels() {
  return {"walking", "running", "jumping", "waving", "falling", "sitting", "standing"};
}

std::vector<std::string> ExperimentConfig::class_labels() const {
  if (!labels.empty()) return labels;
  auto all = default_labels();
  all.resize(std::min(all.size(), data.num_classes));
  return all;
}

std::vector<double> ExperimentConfig::tal_thresholds() const {
  if (!thresholds.empty()) return thresholds;
  return {eval::kWifiTalThresholds.begin(), eval::kWifiTalThresholds.end()};
}

std::filesystem::path ExperimentConfig::dataset_dir() const {
  return dataset.empty() ? output / "data" : dataset;
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw std::invalid_argument("config: seeds must not be empty");
  if (data.num_classes < 2) throw std::invalid_argument("config: need at least 2 classes");
  if (labels.empty() && data.num_classes > default_labels().size()) {
    throw std::invalid_argument("config: more classes than default labels; list labels explicitly");
  }
  if (!labels.empty() && labels.size() != data.num_classes) {
    throw std::invalid_argument("config: labels list does not match num_classes");
  }
  if (data.num_train == 0 || data.num_test == 0) {
    throw std::invalid_argument("config: train and test sets must be non-empty");
  }
  if (task == Task::tal && modality != Modality::csi) {
    throw std::invalid_argument("config: the tal task is only available for the csi modality");
  }
  if (task == Task::tal && data.frames < 32) {
    throw std::invalid_argument("config: tal recordings need at least 32 frames");
  }
  if (!(text_weight >= 0.0 && text_weight <= 1.0)) {
    throw std::invalid_argument("config: text weight must lie in [0, 1]");
  }
  if (embedding_dim == 0 || text_heads == 0) {
    throw std::invalid_argument("config: embedding_dim and text_heads must be >= 1");
  }
  if (!(training.learning_rate >= 0.0) || training.batch_size == 0) {
    throw std::invalid_argument("config: invalid training hyperparameters");
  }
  for (double t : tal_thresholds()) {
    if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("config: thresholds must lie in (0, 1]");
  }
  auto check_source = [&](const EmbeddingSource& source, text::PromptStrategy strategy) {
    if (source.is_pseudo()) return;
    const auto path = source.resolve(strategy);
    if (!std::filesystem::exists(path)) {
      throw std::invalid_argument("config: embedding cache " + path.string() + " does not exist");
    }
  };
  check_source(embedding_source, strategy);
}

void to_json(json& j, const ExperimentConfig& c) {
  std::vector<std::string> strategies;
  for (auto s : c.grid_strategies) strategies.emplace_back(text::to_string(s));
  std::vector<std::string> sources;
  for (const auto& s : c.grid_sources) sources.push_back(s.spec);
  j = {{"task", to_string(c.task)},
       {"modality", to_string(c.modality)},
       {"strategy", std::string(text::to_string(c.strategy))},
       {"embedding_source", c.embedding_source.spec},
       {"embedding_dim", c.embedding_dim},
       {"text_heads", c.text_heads},
       {"fusion",
        {{"w_text", c.text_weight},
         {"w_signal", 1.0 - c.text_weight},
         {"pooling", std::string(text::to_string(c.pooling))}}},
       {"labels", c.class_labels()},
       {"seeds", c.seeds},
       {"data_seed", c.data_seed},
       {"data",
        {{"num_classes", c.data.num_classes},
         {"num_train", c.data.num_train},
         {"num_test", c.data.num_test},
         {"frames", c.data.frames},
         {"noise", c.data.noise}}},
       {"train",
        {{"epochs", c.training.epochs},
         {"batch_size", c.training.batch_size},
         {"learning_rate", c.training.learning_rate},
         {"decay_every", c.training.decay_every},
         {"decay_factor", c.training.decay_factor},
         {"hidden", c.training.hidden},
         {"levels", c.training.levels}}},
       {"thresholds", c.tal_thresholds()},
       {"output", c.output.string()},
       {"dataset", c.dataset_dir().string()},
       {"grid", {{"strategies", strategies}, {"sources", sources}}}};
}

namespace {

void reject_unknown(const json& j, std::initializer_list<std::string_view> known, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument("config: " + where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
  }
}

}  // namespace

void from_json(const json& j, ExperimentConfig& c) {
  c = ExperimentConfig{};
  reject_unknown(j, {"task", "modality", "strategy", "embedding_source", "embedding_dim", "text_heads",
                     "fusion", "seeds", "data_seed", "data", "labels", "train", "thresholds", "output",
                     "dataset", "grid"}, "config");
  if (j.contains("fusion")) reject_unknown(j.at("fusion"), {"w_text", "w_signal", "pooling"}, "fusion");
  if (j.contains("data"))
    reject_unknown(j.at("data"), {"num_classes", "num_train", "num_test", "frames", "noise"}, "data");
  if (j.contains("train"))
    reject_unknown(j.at("train"), {"epochs", "batch_size", "learning_rate", "decay_every", "decay_factor",
                                   "hidden", "levels"}, "train");
  if (j.contains("grid")) reject_unknown(j.at("grid"), {"strategies", "sources"}, "grid");
  if (j.contains("task")) c.task = task_from_string(j.at("task").get<std::string>());
  if (j.contains("modality")) c.modality = modality_from_string(j.at("modality").get<std::string>());
  if (j.contains("strategy")) c.strategy = text::strategy_from_string(j.at("strategy").get<std::string>());
  if (j.contains("embedding_source")) c.embedding_source.spec = j.at("embedding_source").get<std::string>();
  c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
  c.text_heads = j.value("text_heads", c.text_heads);
  if (j.contains("fusion")) {
    const auto& f = j.at("fusion");
    c.text_weight = f.value("w_text", c.text_weight);
    if (f.contains("w_signal") && std::abs(f.at("w_signal").get<double>() + c.text_weight - 1.0) > 1e-12) {
      throw std::invalid_argument("config: fusion weights must sum to 1");
    }
    if (f.contains("pooling")) c.pooling = text::pooling_from_string(f.at("pooling").get<std::string>());
  }
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  c.data_seed = j.value("data_seed", c.data_seed);
  if (j.contains("data")) {
    const auto& d = j.at("data");
    c.data.num_classes = d.value("num_classes", c.data.num_classes);
    c.data.num_train = d.value("num_train", c.data.num_train);
    c.data.num_test = d.value("num_test", c.data.num_test);
    c.data.frames = d.value("frames", c.data.frames);
    c.data.noise = d.value("noise", c.data.noise);
  }
  if (j.contains("labels")) {
    c.labels = j.at("labels").get<std::vector<std::string>>();
    if (!j.contains("data") || !j.at("data").contains("num_classes")) c.data.num_classes = c.labels.size();
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    c.training.epochs = t.value("epochs", c.training.epochs);
    c.training.batch_size = t.value("batch_size", c.training.batch_size);
    c.training.learning_rate = t.value("learning_rate", c.training.learning_rate);
    c.training.decay_every = t.value("decay_every", c.training.decay_every);
    c.training.decay_factor = t.value("decay_factor", c.training.decay_factor);
    c.training.hidden = t.value("hidden", c.training.hidden);
    c.training.levels = t.value("levels", c.training.levels);
  }
  if (j.contains("thresholds")) c.thresholds = j.at("thresholds").get<std::vector<double>>();
  if (j.contains("output")) c.output = j.at("output").get<std::string>();
  if (j.contains("dataset")) c.dataset = j.at("dataset").get<std::string>();
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    for (const auto& s : g.value("strategies", std::vector<std::string>{}))
      c.grid_strategies.push_back(text::strategy_from_string(s));
    for (const auto& s : g.value("sources", std::vector<std::string>{}))
      c.grid_sources.push_back(EmbeddingSource{s});
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return json::parse(in).get<ExperimentConfig>();
}

void save_config(const ExperimentConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << json(config).dump(2) << '\n';
}

}  // namespace textsense::harness
