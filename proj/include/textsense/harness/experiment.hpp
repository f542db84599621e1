// SPDX-License-Identifier: Apache-2.0
#pragma once

// W vs. W+T experiments. For every seed a wireless-only model (W) and the
// same model behind the text branch (W+T) are trained on identical data,
// initialization and batch order; only the text branch differs.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "textsense/eval/metrics.hpp"
#include "textsense/harness/config.hpp"
#include "textsense/harness/dataset.hpp"
#include "textsense/harness/report.hpp"
#include "textsense/model/train.hpp"
#include "textsense/text/embedding.hpp"

namespace textsense::harness {

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<double> metrics;  // fractions, one per report column
  std::vector<int> predictions;                             // HAR test set
  std::vector<std::vector<eval::Detection>> detections;     // TAL test set
  std::vector<model::EpochStats> curve;
  std::vector<model::Parameter> parameters;  // trained weights
};

struct RunResult {
  ReportTable table;
  std::vector<SeedResult> baseline;  // W
  std::vector<SeedResult> fused;     // W+T
};

/// Pseudo cache or the configured cache file, checked against the labels.
text::EmbeddingCache resolve_embeddings(const ExperimentConfig& config);

RunResult run_har(const ExperimentConfig& config, const HarDataset& data,
                  const text::EmbeddingCache& cache);
RunResult run_tal(const ExperimentConfig& config, const TalDataset& data,
                  const text::EmbeddingCache& cache);

/// report.csv, report.txt, resolved_config.json, per-seed curves,
/// predictions or detections, and parameters.
void write_run_outputs(const ExperimentConfig& config, const RunResult& result,
                       const std::filesystem::path& dir);

/// Column names of the report: "Acc" for HAR, thresholds and "Avg" for TAL.
std::vector<std::string> report_columns(const ExperimentConfig& config);

/// Writes the synthetic dataset for `config` to its dataset directory and
/// returns that directory.
std::filesystem::path cmd_gen(const ExperimentConfig& config);

/// Loads the dataset, runs both arms for every seed and writes outputs under
/// config.output.
RunResult cmd_run(const ExperimentConfig& config);

struct CellError {
  std::string strategy;
  std::string source;
  std::string message;
};

struct AblationResult {
  ReportTable matrix;  // rows: baseline then one per source; columns: strategies
  std::vector<CellError> errors;
};

/// cmd_run for every (strategy, source) cell under <output>/cells/, then the
/// matrix report under <output>. Failed cells are recorded and left empty.
AblationResult cmd_ablate(const ExperimentConfig& config);

/// Directory name of an ablation cell.
std::string cell_name(text::PromptStrategy strategy, const EmbeddingSource& source);

}  // namespace textsense::harness
