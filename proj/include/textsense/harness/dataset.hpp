// SPDX-License-Identifier: Apache-2.0
#pragma once

// Synthetic labelled datasets for the W vs. W+T experiments.
//
// HAR classes differ by the dynamic-path speed and strength (CSI), the target
// velocity profile (FMCW), or the tag power-perturbation pattern (RFID).
// TAL recordings are CSI frame features with two or three annotated actions.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "textsense/core/array_io.hpp"
#include "textsense/core/matrix.hpp"
#include "textsense/core/rng.hpp"
#include "textsense/eval/metrics.hpp"
#include "textsense/harness/config.hpp"

namespace textsense::harness {

struct HarSplit {
  RealArray sequences;  // [sample, time, channel]
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  /// time x channel slice of one sample.
  Matrix sequence(std::size_t i) const;
};

struct HarDataset {
  Modality modality = Modality::csi;
  std::vector<std::string> class_names;
  HarSplit train;
  HarSplit test;
};

struct TalSplit {
  RealArray features;  // [recording, frame, channel]
  std::vector<std::vector<eval::Segment>> segments;  // seconds

  std::size_t size() const { return segments.size(); }
  Matrix recording(std::size_t i) const;
};

struct TalDataset {
  std::vector<std::string> class_names;
  double frame_rate = 10.0;
  TalSplit train;
  TalSplit test;
};

HarDataset generate_har(const ExperimentConfig& config);
TalDataset generate_tal(const ExperimentConfig& config);

/// One HAR sample of `class_id` drawn from `rng`, shape time x channel.
Matrix synth_har_sequence(Modality modality, int class_id, double noise, Rng& rng);

void save_har(const HarDataset& data, const std::filesystem::path& dir);
HarDataset load_har(const std::filesystem::path& dir);
void save_tal(const TalDataset& data, const std::filesystem::path& dir);
TalDataset load_tal(const std::filesystem::path& dir);

/// Summary vector of a time x channel sequence: per-channel mean and standard
/// deviation followed by the channel-averaged magnitude spectrum of the
/// mean-removed signal, bins 1..T/2 pooled into min(16, T/2) equal bands.
std::vector<double> har_features(const Matrix& sequence);

/// Per-column affine normalization fitted on training data.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& rows);
  Matrix apply(const Matrix& rows) const;
};

}  // namespace textsense::harness
