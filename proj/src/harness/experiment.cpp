// SPDX-License-Identifier: Apache-2.0
#include "textsense/harness/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "textsense/core/rng.hpp"
#include "textsense/eval/segments_json.hpp"
#include "textsense/model/har_head.hpp"
#include "textsense/model/losses.hpp"
#include "textsense/model/ops.hpp"
#include "textsense/model/tal_pyramid.hpp"
#include "textsense/text/text_branch.hpp"

namespace textsense::harness {
namespace {

using model::Tape;
using model::Var;
using nlohmann::json;

Matrix gather(const Matrix& rows, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), rows.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = rows.row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

model::TrainConfig train_config(const ExperimentConfig& config) {
  model::TrainConfig cfg;
  cfg.epochs = config.training.epochs;
  cfg.batch_size = config.training.batch_size;
  cfg.optimizer.learning_rate = config.training.learning_rate;
  cfg.optimizer.decay_every = config.training.decay_every;
  cfg.optimizer.decay_factor = config.training.decay_factor;
  return cfg;
}

text::TextBranchConfig branch_config(const ExperimentConfig& config) {
  return {config.text_heads, config.text_weight, config.pooling};
}

std::optional<text::TextBranch> make_branch(const text::EmbeddingCache* cache,
                                            const std::vector<std::string>& labels,
                                            std::size_t signal_dim, const ExperimentConfig& config,
                                            std::uint64_t seed) {
  if (cache == nullptr) return std::nullopt;
  Rng rng(derive_seed(seed, "text"));
  return text::TextBranch(text::dictionary_tokens(*cache, labels), signal_dim,
                          branch_config(config), rng);
}

std::vector<model::Parameter> snapshot(const std::vector<model::Parameter*>& params) {
  std::vector<model::Parameter> out;
  for (const auto* p : params) out.push_back(*p);
  return out;
}

class HarModel final : public model::Trainable {
 public:
  HarModel(const Matrix& x, const std::vector<int>& y, const ExperimentConfig& config,
           const text::EmbeddingCache* cache, std::uint64_t seed)
      : x_(x), y_(y), targets_(model::one_hot(y, config.data.num_classes)) {
    Rng rng(derive_seed(seed, "head"));
    head_ = model::HarHead(x.cols(), config.training.hidden, config.data.num_classes, rng);
    branch_ = make_branch(cache, config.class_labels(), x.cols(), config, seed);
  }

  Var logits(Tape& tape, const Matrix& x) {
    Var in = tape.constant(x);
    if (branch_) in = branch_->apply(tape, in);
    return head_.forward(tape, in);
  }

  std::vector<int> predict(const Matrix& x) {
    Tape tape;
    return argmax_rows(logits(tape, x).value());
  }

  std::vector<model::Parameter*> parameters() override {
    auto params = head_.parameters();
    if (branch_) {
      const auto extra = branch_->parameters();
      params.insert(params.end(), extra.begin(), extra.end());
    }
    return params;
  }

  std::size_t num_examples() const override { return x_.rows(); }

  Var batch_loss(Tape& tape, std::span<const std::size_t> indices) override {
    const Var probs = model::softmax_rows(logits(tape, gather(x_, indices)));
    return model::cross_entropy(probs, gather(targets_, indices));
  }

  double epoch_metric() override { return eval::accuracy(predict(x_), y_); }

 private:
  const Matrix& x_;
  const std::vector<int>& y_;
  Matrix targets_;
  model::HarHead head_;
  std::optional<text::TextBranch> branch_;
};

std::vector<model::FrameSegment> to_frames(const std::vector<eval::Segment>& segments,
                                           double frame_rate) {
  std::vector<model::FrameSegment> out;
  for (const auto& s : segments) out.push_back({s.start * frame_rate, s.end * frame_rate, s.class_id});
  return out;
}

// Recording-pooled AP@t (every ground truth of the split weighs the same)
// followed by their mean.
std::vector<double> pooled_ap(const std::vector<std::vector<eval::Detection>>& dets,
                              const std::vector<std::vector<eval::Segment>>& gts,
                              std::span<const double> thresholds) {
  std::vector<double> hits(thresholds.size(), 0.0);
  double total = 0.0;
  for (std::size_t r = 0; r < gts.size(); ++r) {
    if (gts[r].empty()) continue;
    const auto tious = eval::matched_tious(dets[r], gts[r]);
    for (std::size_t k = 0; k < thresholds.size(); ++k)
      hits[k] += static_cast<double>(
          std::count_if(tious.begin(), tious.end(), [&](double v) { return v >= thresholds[k]; }));
    total += static_cast<double>(gts[r].size());
  }
  std::vector<double> out;
  double sum = 0.0;
  for (double h : hits) {
    out.push_back(total > 0.0 ? h / total : 0.0);
    sum += out.back();
  }
  out.push_back(sum / static_cast<double>(thresholds.size()));
  return out;
}

class TalModel final : public model::Trainable {
 public:
  TalModel(const std::vector<Matrix>& recordings,
           const std::vector<std::vector<eval::Segment>>& segments, double frame_rate,
           const ExperimentConfig& config, const text::EmbeddingCache* cache, std::uint64_t seed)
      : recordings_(recordings), segments_(segments), frame_rate_(frame_rate),
        thresholds_(config.tal_thresholds()) {
    const std::size_t dim = recordings.front().cols();
    model::TalPyramidConfig cfg;
    cfg.input_dim = dim;
    cfg.hidden_dim = config.training.hidden;
    cfg.num_classes = config.data.num_classes;
    cfg.num_levels = config.training.levels;
    Rng rng(derive_seed(seed, "head"));
    pyramid_ = model::TalPyramid(cfg, rng);
    branch_ = make_branch(cache, config.class_labels(), dim, config, seed);
    for (std::size_t r = 0; r < recordings.size(); ++r) {
      const auto frames = to_frames(segments[r], frame_rate);
      targets_.push_back(model::build_level_targets(frames, recordings[r].rows(), cfg.num_levels));
    }
  }

  std::vector<model::LevelOutput> forward(Tape& tape, const Matrix& x) {
    Var in = tape.constant(x);
    if (branch_) in = branch_->apply(tape, in);
    return pyramid_.forward(tape, in);
  }

  std::vector<eval::Detection> detect(const Matrix& x) {
    Tape tape;
    const auto outputs = forward(tape, x);
    model::DecodeConfig cfg;
    cfg.frame_rate = frame_rate_;
    return model::decode_detections(outputs, x.rows(), cfg);
  }

  std::vector<model::Parameter*> parameters() override {
    auto params = pyramid_.parameters();
    if (branch_) {
      const auto extra = branch_->parameters();
      params.insert(params.end(), extra.begin(), extra.end());
    }
    return params;
  }

  std::size_t num_examples() const override { return recordings_.size(); }

  Var batch_loss(Tape& tape, std::span<const std::size_t> indices) override {
    std::optional<Var> total;
    for (auto i : indices) {
      const Var loss = model::tal_total_loss(forward(tape, recordings_[i]), targets_[i]);
      total = total ? model::add(*total, loss) : loss;
    }
    return model::scale(*total, 1.0 / static_cast<double>(indices.size()));
  }

  double epoch_metric() override {
    std::vector<std::vector<eval::Detection>> dets;
    for (const auto& x : recordings_) dets.push_back(detect(x));
    return pooled_ap(dets, segments_, thresholds_).back();
  }

 private:
  const std::vector<Matrix>& recordings_;
  const std::vector<std::vector<eval::Segment>>& segments_;
  double frame_rate_;
  std::vector<double> thresholds_;
  model::TalPyramid pyramid_;
  std::optional<text::TextBranch> branch_;
  std::vector<std::vector<model::LevelTargets>> targets_;
};

std::vector<std::int64_t> row_units(const std::vector<double>& metrics, bool has_avg) {
  std::vector<std::int64_t> units;
  const std::size_t plain = has_avg ? metrics.size() - 1 : metrics.size();
  for (std::size_t i = 0; i < plain; ++i) units.push_back(to_units(metrics[i]));
  // Avg is recomputed from the rounded cells so the CSV is self-consistent.
  if (has_avg) units.push_back(mean_units(units));
  return units;
}

ReportRow make_row(std::string method, std::string seed, const std::vector<std::int64_t>& units) {
  ReportRow row{std::move(method), std::move(seed), {}};
  for (auto u : units) row.values.emplace_back(u);
  return row;
}

std::vector<std::int64_t> difference(const std::vector<std::int64_t>& a,
                                     const std::vector<std::int64_t>& b) {
  std::vector<std::int64_t> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

std::string describe(const ExperimentConfig& config) {
  std::ostringstream out;
  out << to_string(config.task) << " / " << to_string(config.modality)
      << " | strategy " << text::to_string(config.strategy) << " | embeddings "
      << config.embedding_source.display_name() << " | pooling " << text::to_string(config.pooling)
      << " | w_text " << config.text_weight << " | seeds " << config.seeds.size();
  return out.str();
}

ReportTable build_table(const ExperimentConfig& config, const std::vector<SeedResult>& baseline,
                        const std::vector<SeedResult>& fused) {
  ReportTable table;
  table.title = describe(config);
  table.columns = report_columns(config);
  const bool has_avg = config.task == Task::tal;
  const std::size_t width = table.columns.size();
  std::vector<std::vector<std::int64_t>> w_cols(width), t_cols(width);
  for (std::size_t s = 0; s < baseline.size(); ++s) {
    const auto w = row_units(baseline[s].metrics, has_avg);
    const auto t = row_units(fused[s].metrics, has_avg);
    const std::string seed = std::to_string(baseline[s].seed);
    table.rows.push_back(make_row("W", seed, w));
    table.rows.push_back(make_row("W+T", seed, t));
    table.rows.push_back(make_row("Δ", seed, difference(t, w)));
    for (std::size_t c = 0; c < width; ++c) {
      w_cols[c].push_back(w[c]);
      t_cols[c].push_back(t[c]);
    }
  }
  std::vector<std::int64_t> w_mean, t_mean, w_std, t_std;
  for (std::size_t c = 0; c < width; ++c) {
    w_mean.push_back(mean_units(w_cols[c]));
    t_mean.push_back(mean_units(t_cols[c]));
    w_std.push_back(std_units(w_cols[c]));
    t_std.push_back(std_units(t_cols[c]));
  }
  table.rows.push_back(make_row("W", "mean", w_mean));
  table.rows.push_back(make_row("W+T", "mean", t_mean));
  table.rows.push_back(make_row("Δ", "mean", difference(t_mean, w_mean)));
  table.rows.push_back(make_row("W", "std", w_std));
  table.rows.push_back(make_row("W+T", "std", t_std));
  return table;
}

std::string format_threshold(double t) {
  std::ostringstream out;
  out << t;
  return out.str();
}

void check_classes(const ExperimentConfig& config, const std::vector<std::string>& names) {
  if (names != config.class_labels()) {
    throw std::runtime_error("dataset classes do not match the configured labels; regenerate the dataset");
  }
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
  return out;
}

RunResult run_loaded(const ExperimentConfig& config, const std::filesystem::path& dir) {
  const auto cache = resolve_embeddings(config);
  if (config.task == Task::har) {
    const auto data = load_har(dir);
    if (data.modality != config.modality) {
      throw std::runtime_error("dataset modality " + to_string(data.modality) +
                               " does not match the configured " + to_string(config.modality));
    }
    check_classes(config, data.class_names);
    return run_har(config, data, cache);
  }
  const auto data = load_tal(dir);
  check_classes(config, data.class_names);
  return run_tal(config, data, cache);
}

}  // namespace

std::vector<std::string> report_columns(const ExperimentConfig& config) {
  if (config.task == Task::har) return {"Acc"};
  std::vector<std::string> cols;
  for (double t : config.tal_thresholds()) cols.push_back(format_threshold(t));
  cols.emplace_back("Avg");
  return cols;
}

text::EmbeddingCache resolve_embeddings(const ExperimentConfig& config) {
  const auto labels = config.class_labels();
  text::EmbeddingCache cache;
  if (config.embedding_source.is_pseudo()) {
    cache = text::make_pseudo_cache(labels, config.embedding_dim, config.strategy);
  } else {
    cache = text::load_embedding_cache(config.embedding_source.resolve(config.strategy));
    if (cache.strategy != config.strategy) {
      throw std::runtime_error("embedding cache holds " + std::string(text::to_string(cache.strategy)) +
                               " vectors but the configured strategy is " +
                               std::string(text::to_string(config.strategy)));
    }
  }
  for (const auto& label : labels) {
    if (!cache.entries.contains(label))
      throw std::runtime_error("embedding cache has no entry for label '" + label + "'");
  }
  if (cache.dim % config.text_heads != 0) {
    throw std::runtime_error("embedding width " + std::to_string(cache.dim) + " is not divisible by " +
                             std::to_string(config.text_heads) + " text heads");
  }
  return cache;
}

RunResult run_har(const ExperimentConfig& config, const HarDataset& data,
                  const text::EmbeddingCache& cache) {
  auto features = [](const HarSplit& split) {
    Matrix out;
    for (std::size_t i = 0; i < split.size(); ++i) {
      const auto f = har_features(split.sequence(i));
      if (out.empty()) out = Matrix(split.size(), f.size());
      std::copy(f.begin(), f.end(), out.row(i).begin());
    }
    return out;
  };
  const Matrix raw_train = features(data.train);
  const auto norm = Standardizer::fit(raw_train);
  const Matrix x_train = norm.apply(raw_train);
  const Matrix x_test = norm.apply(features(data.test));
  const auto train_cfg = train_config(config);

  RunResult result;
  for (const auto seed : config.seeds) {
    for (const bool with_text : {false, true}) {
      HarModel model(x_train, data.train.labels, config, with_text ? &cache : nullptr, seed);
      SeedResult r;
      r.seed = seed;
      r.curve = model::train(model, train_cfg, seed);
      r.predictions = model.predict(x_test);
      r.metrics = {eval::accuracy(r.predictions, data.test.labels)};
      r.parameters = snapshot(model.parameters());
      (with_text ? result.fused : result.baseline).push_back(std::move(r));
    }
  }
  result.table = build_table(config, result.baseline, result.fused);
  return result;
}

RunResult run_tal(const ExperimentConfig& config, const TalDataset& data,
                  const text::EmbeddingCache& cache) {
  Matrix all_frames;
  {
    const auto& f = data.train.features;
    all_frames = Matrix(f.shape[0] * f.shape[1], f.shape[2], f.data);
  }
  const auto norm = Standardizer::fit(all_frames);
  auto recordings = [&](const TalSplit& split) {
    std::vector<Matrix> out;
    for (std::size_t i = 0; i < split.size(); ++i) out.push_back(norm.apply(split.recording(i)));
    return out;
  };
  const auto train_x = recordings(data.train);
  const auto test_x = recordings(data.test);
  const auto thresholds = config.tal_thresholds();
  const auto train_cfg = train_config(config);

  RunResult result;
  for (const auto seed : config.seeds) {
    for (const bool with_text : {false, true}) {
      TalModel model(train_x, data.train.segments, data.frame_rate, config,
                     with_text ? &cache : nullptr, seed);
      SeedResult r;
      r.seed = seed;
      r.curve = model::train(model, train_cfg, seed);
      for (const auto& x : test_x) r.detections.push_back(model.detect(x));
      r.metrics = pooled_ap(r.detections, data.test.segments, thresholds);
      r.parameters = snapshot(model.parameters());
      (with_text ? result.fused : result.baseline).push_back(std::move(r));
    }
  }
  result.table = build_table(config, result.baseline, result.fused);
  return result;
}

void write_run_outputs(const ExperimentConfig& config, const RunResult& result,
                       const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_csv(dir / "report.csv", result.table);
  {
    std::ofstream out(dir / "report.txt", std::ios::binary);
    out << render_text(result.table);
    if (!out) throw std::runtime_error("cannot write " + (dir / "report.txt").string());
  }
  save_config(config, dir / "resolved_config.json");
  const char* metric = config.task == Task::har ? "train_accuracy" : "train_map";
  for (const auto& [arm, runs] : {std::pair{"W", &result.baseline}, std::pair{"WT", &result.fused}}) {
    for (const auto& r : *runs) {
      const std::string stem = std::string(arm) + "_seed" + std::to_string(r.seed);
      model::write_curve_csv(dir / "curves" / (stem + ".csv"), r.curve, metric);
      std::vector<model::Parameter*> params;
      std::vector<model::Parameter> copies = r.parameters;
      for (auto& p : copies) params.push_back(&p);
      model::save_parameters(dir / "params" / stem, params);
      if (config.task == Task::har) {
        std::filesystem::create_directories(dir / "predictions");
        std::ofstream out(dir / "predictions" / (stem + ".csv"), std::ios::binary);
        out << "sample,prediction\n";
        for (std::size_t i = 0; i < r.predictions.size(); ++i) out << i << ',' << r.predictions[i] << '\n';
      } else {
        std::filesystem::create_directories(dir / "detections");
        eval::write_json_file(dir / "detections" / (stem + ".json"), json(r.detections));
      }
    }
  }
}

std::filesystem::path cmd_gen(const ExperimentConfig& config) {
  config.validate();
  const auto dir = config.dataset_dir();
  if (config.task == Task::har) {
    save_har(generate_har(config), dir);
  } else {
    save_tal(generate_tal(config), dir);
  }
  save_config(config, dir / "resolved_config.json");
  return dir;
}

RunResult cmd_run(const ExperimentConfig& config) {
  config.validate();
  const auto dir = config.dataset_dir();
  if (!std::filesystem::exists(dir / "meta.json")) {
    throw std::runtime_error("no dataset at " + dir.string() + "; run the gen command first");
  }
  auto result = run_loaded(config, dir);
  write_run_outputs(config, result, config.output);
  return result;
}

std::string cell_name(text::PromptStrategy strategy, const EmbeddingSource& source) {
  return std::string(text::to_string(strategy)) + "__" + sanitize(source.display_name());
}

AblationResult cmd_ablate(const ExperimentConfig& config) {
  if (config.seeds.empty()) throw std::invalid_argument("config: seeds must not be empty");
  const auto strategies =
      config.grid_strategies.empty() ? std::vector{config.strategy} : config.grid_strategies;
  const auto sources =
      config.grid_sources.empty() ? std::vector{config.embedding_source} : config.grid_sources;

  AblationResult result;
  auto& m = result.matrix;
  for (auto s : strategies) m.columns.emplace_back(text::to_string(s));
  m.title = "ablation " + to_string(config.task) + " / " + to_string(config.modality) + " | " +
            report_columns(config).back() + " of W+T, seed mean";
  m.rows.push_back({"W (baseline)", "mean", std::vector<Cell>(strategies.size())});
  for (const auto& src : sources)
    m.rows.push_back({src.display_name(), "mean", std::vector<Cell>(strategies.size())});

  for (std::size_t si = 0; si < sources.size(); ++si) {
    for (std::size_t ci = 0; ci < strategies.size(); ++ci) {
      ExperimentConfig cell = config;
      cell.strategy = strategies[ci];
      cell.embedding_source = sources[si];
      cell.grid_strategies.clear();
      cell.grid_sources.clear();
      cell.dataset = config.dataset_dir();
      cell.output = config.output / "cells" / cell_name(strategies[ci], sources[si]);
      try {
        const auto run = cmd_run(cell);
        const auto* fused = run.table.find("W+T", "mean");
        const auto* base = run.table.find("W", "mean");
        m.rows[si + 1].values[ci] = fused->values.back();
        if (!m.rows[0].values[ci]) m.rows[0].values[ci] = base->values.back();
      } catch (const std::exception& e) {
        result.errors.push_back({std::string(text::to_string(strategies[ci])),
                                 sources[si].display_name(), e.what()});
      }
    }
  }

  std::filesystem::create_directories(config.output);
  write_csv(config.output / "ablation.csv", m);
  std::ofstream(config.output / "ablation.txt", std::ios::binary) << render_text(m);
  save_config(config, config.output / "resolved_config.json");
  json errors = json::array();
  for (const auto& e : result.errors)
    errors.push_back({{"strategy", e.strategy}, {"source", e.source}, {"message", e.message}});
  eval::write_json_file(config.output / "ablation_errors.json", errors);
  return result;
}

}  // namespace textsense::harness
