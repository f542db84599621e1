// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "textsense/text/embedding.hpp"
#include "textsense/text/fusion.hpp"

namespace textsense::harness {

enum class Task { har, tal };
enum class Modality { csi, fmcw, rfid };

std::string to_string(Task task);
std::string to_string(Modality modality);
Task task_from_string(const std::string& name);
Modality modality_from_string(const std::string& name);

/// "pseudo" or a cache file path. A path may contain "{strategy}", which is
/// replaced by TLE, TCE or TDE.
struct EmbeddingSource {
  std::string spec = "pseudo";

  bool is_pseudo() const { return spec == "pseudo"; }
  std::filesystem::path resolve(text::PromptStrategy strategy) const;
  /// Row label in ablation tables.
  std::string display_name() const;
};

struct DataConfig {
  std::size_t num_classes = 3;
  std::size_t num_train = 200;
  std::size_t num_test = 60;
  std::size_t frames = 128;  // TAL recording length
  double noise = 1.0;        // scales every modality's noise level
};

struct TrainingConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 20;
  double learning_rate = 5e-3;
  std::size_t decay_every = 15;
  double decay_factor = 0.5;
  std::size_t hidden = 32;
  std::size_t levels = 3;  // TAL pyramid depth
};

struct ExperimentConfig {
  Task task = Task::har;
  Modality modality = Modality::csi;
  text::PromptStrategy strategy = text::PromptStrategy::TDE;
  EmbeddingSource embedding_source;
  std::size_t embedding_dim = 32;
  std::size_t text_heads = 4;
  double text_weight = 0.1;
  text::Pooling pooling = text::Pooling::cross_attention;
  std::vector<std::string> labels;  // empty -> default label set
  std::vector<std::uint64_t> seeds{1};
  std::uint64_t data_seed = 7;
  DataConfig data;
  TrainingConfig training;
  std::vector<double> thresholds;  // TAL; empty -> 0.3:0.1:0.7
  std::filesystem::path output = "out";
  std::filesystem::path dataset;  // empty -> <output>/data

  /// Ablation grid; empty lists fall back to {strategy} and {embedding_source}.
  std::vector<text::PromptStrategy> grid_strategies;
  std::vector<EmbeddingSource> grid_sources;

  void validate() const;
  std::vector<std::string> class_labels() const;
  std::vector<double> tal_thresholds() const;
  std::filesystem::path dataset_dir() const;
};

std::vector<std::string> default_labels();

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);

}  // namespace textsense::harness
