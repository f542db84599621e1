// SPDX-License-Identifier: Apache-2.0
#include "textsense/harness/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "textsense/core/rng.hpp"
#include "textsense/eval/segments_json.hpp"
#include "textsense/signal/csi.hpp"
#include "textsense/signal/fmcw.hpp"
#include "textsense/signal/rfid.hpp"

namespace textsense::harness {
namespace {

using nlohmann::json;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

Matrix slice_matrix(const RealArray& stack, std::size_t i) {
  const std::size_t rows = stack.shape[1];
  const std::size_t cols = stack.shape[2];
  const auto begin = stack.data.begin() + static_cast<long>(i * rows * cols);
  return Matrix(rows, cols, std::vector<double>(begin, begin + static_cast<long>(rows * cols)));
}

RealArray stack(const std::vector<Matrix>& items, std::vector<std::string> axes) {
  if (items.empty()) throw std::invalid_argument("dataset: empty split");
  RealArray out{{items.size(), items[0].rows(), items[0].cols()}, std::move(axes), {}};
  out.data.reserve(out.element_count());
  for (const auto& m : items) out.data.insert(out.data.end(), m.data().begin(), m.data().end());
  return out;
}

signal::DynamicPath class_motion(int class_id, Rng& rng) {
  const double k = class_id;
  signal::DynamicPath path;
  path.gain = (0.2 + 0.08 * k) * rng.uniform(0.75, 1.25);
  const double speed = (0.3 + 0.25 * k) * rng.uniform(0.75, 1.25);
  const double direction = rng.uniform() < 0.5 ? -1.0 : 1.0;
  path.delay_rate = direction * 2.0 * speed / signal::kSpeedOfLight;
  path.initial_delay = rng.uniform(30e-9, 60e-9);
  path.oscillation_amplitude = 2.0 * 0.02 / signal::kSpeedOfLight;
  path.oscillation_frequency = 0.5 + 0.5 * k;
  return path;
}

signal::CsiScene base_csi_scene(double sample_rate, double duration, double noise, Rng& rng) {
  signal::CsiScene scene;
  scene.num_tx = 1;
  scene.num_rx = 2;
  scene.num_subcarriers = 8;
  scene.subcarrier_freqs = signal::subcarrier_grid(5.32e9, 2.5e6, 8);
  for (int p = 0; p < 3; ++p)
    scene.static_paths.push_back({rng.uniform(0.4, 1.0), rng.uniform(10e-9, 80e-9)});
  scene.noise_std = 0.08 * noise;
  scene.sample_rate = sample_rate;
  scene.duration = duration;
  return scene;
}

Matrix csi_sequence(int class_id, double noise, Rng& rng) {
  signal::CsiScene scene = base_csi_scene(100.0, 1.28, noise, rng);
  scene.dynamic_path = class_motion(class_id, rng);
  const auto csi = signal::synth_csi_sequence(scene, rng.next_u64());
  const auto amp = signal::csi_amplitude(csi);
  return Matrix(amp.shape[0], amp.shape[1], amp.data);
}

Matrix fmcw_sequence(int class_id, double noise, Rng& rng) {
  signal::FmcwParams params;
  params.bandwidth = 1e9;
  params.chirp_duration = 250e-6;
  params.carrier_wavelength = 5e-3;
  params.num_chirps = 16;
  params.samples_per_chirp = 32;
  constexpr std::size_t kFrames = 16;
  constexpr double kFrameRate = 10.0;

  const double k = class_id;
  const double amplitude = (0.6 + 0.5 * k) * rng.uniform(0.8, 1.2);
  const double freq = (0.6 + 0.3 * k) * rng.uniform(0.9, 1.1);
  const double phase = rng.uniform(0.0, kTwoPi);
  const double r0 = rng.uniform(0.6, 1.6);
  const double clutter_range = rng.uniform(0.3, 2.0);

  const std::size_t range_bins = params.samples_per_chirp / 2;
  const std::size_t doppler_bins = params.num_chirps;
  const double norm = static_cast<double>(params.samples_per_chirp * params.num_chirps);
  Matrix seq(kFrames, range_bins + doppler_bins);
  for (std::size_t f = 0; f < kFrames; ++f) {
    const double t = static_cast<double>(f) / kFrameRate;
    const double w = kTwoPi * freq;
    const double velocity = amplitude * std::sin(w * t + phase);
    const double range =
        std::clamp(r0 - amplitude / w * (std::cos(w * t + phase) - std::cos(phase)), 0.2, 2.2);
    const signal::FmcwTarget targets[] = {{range, velocity, 0.0, 0.0, 1.0},
                                          {clutter_range, 0.0, 0.0, 0.0, 0.5}};
    const auto cube = signal::synth_fmcw_cube(params, targets, rng.next_u64(), 0.5 * noise);
    const auto map = signal::range_doppler_map(cube, params);
    for (std::size_t r = 0; r < range_bins; ++r)
      for (std::size_t d = 0; d < doppler_bins; ++d) {
        const double m = map.magnitudes(r, d) / norm;
        seq(f, r) += m;
        seq(f, range_bins + d) += m;
      }
  }
  return seq;
}

Matrix rfid_sequence(int class_id, double noise, Rng& rng) {
  constexpr std::size_t kTags = 4;
  constexpr std::size_t kSamples = 64;
  constexpr double kSampleRate = 30.0;
  const double k = class_id;
  const double amplitude = (0.05 + 0.04 * k) * rng.uniform(0.8, 1.2);
  const double freq = (0.5 + 0.4 * k) * rng.uniform(0.9, 1.1);
  std::vector<double> weight(kTags), phase(kTags);
  for (std::size_t j = 0; j < kTags; ++j) {
    weight[j] = rng.uniform(0.5, 1.0);
    phase[j] = rng.uniform(0.0, kTwoPi);
  }
  Matrix seq(kSamples, kTags);
  for (std::size_t t = 0; t < kSamples; ++t) {
    const double time = static_cast<double>(t) / kSampleRate;
    for (std::size_t j = 0; j < kTags; ++j) {
      signal::RfidLink link;
      link.p_tx = 1.0;
      link.g_tx = link.g_rx = 4.0;
      link.g_tag = 1.5;
      link.wavelength = 0.33;
      link.distance = 1.0 + 0.4 * static_cast<double>(j) +
                      amplitude * weight[j] * std::sin(kTwoPi * freq * time + phase[j]);
      seq(t, j) = signal::watts_to_dbm(signal::rfid_received_power(link)) + 0.3 * noise * rng.normal();
    }
  }
  return seq;
}

std::vector<std::string> axes_for(Modality modality) {
  return {"sample", "time", modality == Modality::rfid ? "tag" : "channel"};
}

HarSplit make_har_split(const ExperimentConfig& config, std::size_t count, const char* stream) {
  Rng rng(derive_seed(config.data_seed, stream));
  std::vector<Matrix> sequences;
  HarSplit split;
  for (std::size_t i = 0; i < count; ++i) {
    const int label = static_cast<int>(i % config.data.num_classes);
    sequences.push_back(synth_har_sequence(config.modality, label, config.data.noise, rng));
    split.labels.push_back(label);
  }
  split.sequences = stack(sequences, axes_for(config.modality));
  return split;
}

std::vector<eval::Segment> place_segments(std::size_t frames, double frame_rate,
                                          std::size_t num_classes, Rng& rng,
                                          std::vector<int>& frame_class) {
  const std::size_t count = 2 + rng.below(2);
  const auto min_len = std::max<std::size_t>(4, frames / 10);
  const auto max_len = std::max(min_len + 1, frames / 4);
  std::vector<std::size_t> lengths(count);
  std::size_t used = 0;
  for (auto& l : lengths) {
    l = min_len + rng.below(max_len - min_len + 1);
    used += l;
  }
  const std::size_t free = frames - used - 2;
  std::vector<double> gaps(count + 1);
  double total = 0.0;
  for (auto& g : gaps) total += (g = rng.uniform(0.2, 1.0));
  std::vector<eval::Segment> segments;
  frame_class.assign(frames, -1);
  std::size_t cursor = 1;
  for (std::size_t s = 0; s < count; ++s) {
    cursor += static_cast<std::size_t>(std::floor(gaps[s] / total * static_cast<double>(free)));
    const int cls = static_cast<int>(rng.below(num_classes));
    for (std::size_t f = cursor; f < cursor + lengths[s]; ++f) frame_class[f] = cls;
    segments.push_back({static_cast<double>(cursor) / frame_rate,
                        static_cast<double>(cursor + lengths[s]) / frame_rate, cls});
    cursor += lengths[s];
  }
  return segments;
}

TalSplit make_tal_split(const ExperimentConfig& config, std::size_t count, double frame_rate,
                        const char* stream) {
  Rng rng(derive_seed(config.data_seed, stream));
  constexpr double kRawRate = 200.0;
  const double window = 1.0 / frame_rate;
  TalSplit split;
  std::vector<Matrix> recordings;
  for (std::size_t r = 0; r < count; ++r) {
    std::vector<int> frame_class;
    split.segments.push_back(
        place_segments(config.data.frames, frame_rate, config.data.num_classes, rng, frame_class));
    const signal::CsiScene scene = base_csi_scene(kRawRate, window, config.data.noise, rng);
    std::vector<signal::DynamicPath> motions;
    for (std::size_t c = 0; c < config.data.num_classes; ++c)
      motions.push_back(class_motion(static_cast<int>(c), rng));
    Matrix features;
    for (std::size_t f = 0; f < config.data.frames; ++f) {
      signal::CsiScene frame_scene = scene;
      signal::DynamicPath motion;
      if (frame_class[f] >= 0) {
        motion = motions[static_cast<std::size_t>(frame_class[f])];
      } else {
        // Idle frames: a faint, slow reflection.
        motion.gain = 0.03;
        motion.initial_delay = 40e-9;
        motion.delay_rate = 2.0 * 0.05 / signal::kSpeedOfLight;
      }
      // Drift restarts every second so long recordings keep a positive delay.
      const double t0 = std::fmod(static_cast<double>(f) * window, 1.0);
      motion.initial_delay = motion.delay_at(t0);
      frame_scene.dynamic_path = motion;
      const auto amp = signal::csi_amplitude(signal::synth_csi_sequence(frame_scene, rng.next_u64()));
      const auto row = har_features(Matrix(amp.shape[0], amp.shape[1], amp.data));
      if (features.empty()) features = Matrix(config.data.frames, row.size());
      std::copy(row.begin(), row.end(), features.row(f).begin());
    }
    recordings.push_back(std::move(features));
  }
  split.features = stack(recordings, {"recording", "frame", "channel"});
  return split;
}

void write_json(const std::filesystem::path& path, const json& j) { eval::write_json_file(path, j); }

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return json::parse(in);
}

}  // namespace

Matrix HarSplit::sequence(std::size_t i) const { return slice_matrix(sequences, i); }
Matrix TalSplit::recording(std::size_t i) const { return slice_matrix(features, i); }

Matrix synth_har_sequence(Modality modality, int class_id, double noise, Rng& rng) {
  switch (modality) {
    case Modality::csi: return csi_sequence(class_id, noise, rng);
    case Modality::fmcw: return fmcw_sequence(class_id, noise, rng);
    case Modality::rfid: return rfid_sequence(class_id, noise, rng);
  }
  throw std::invalid_argument("unknown modality");
}

HarDataset generate_har(const ExperimentConfig& config) {
  HarDataset data;
  data.modality = config.modality;
  data.class_names = config.class_labels();
  data.train = make_har_split(config, config.data.num_train, "har/train");
  data.test = make_har_split(config, config.data.num_test, "har/test");
  return data;
}

TalDataset generate_tal(const ExperimentConfig& config) {
  TalDataset data;
  data.class_names = config.class_labels();
  data.train = make_tal_split(config, config.data.num_train, data.frame_rate, "tal/train");
  data.test = make_tal_split(config, config.data.num_test, data.frame_rate, "tal/test");
  return data;
}

std::vector<double> har_features(const Matrix& sequence) {
  const std::size_t length = sequence.rows();
  const std::size_t channels = sequence.cols();
  if (length < 4 || channels == 0) throw std::invalid_argument("har_features: sequence too short");
  std::vector<double> out;
  std::vector<double> mean(channels, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    double sum = 0.0;
    for (std::size_t t = 0; t < length; ++t) sum += sequence(t, c);
    mean[c] = sum / static_cast<double>(length);
    double var = 0.0;
    for (std::size_t t = 0; t < length; ++t) var += (sequence(t, c) - mean[c]) * (sequence(t, c) - mean[c]);
    out.push_back(mean[c]);
    out.push_back(std::sqrt(var / static_cast<double>(length)));
  }
  const std::size_t half = length / 2;
  std::vector<double> spectrum(half, 0.0);  // bins 1..half
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t k = 1; k <= half; ++k) {
      std::complex<double> acc;
      for (std::size_t t = 0; t < length; ++t) {
        const double angle = -kTwoPi * static_cast<double>(k * t) / static_cast<double>(length);
        acc += (sequence(t, c) - mean[c]) * std::polar(1.0, angle);
      }
      spectrum[k - 1] += std::abs(acc) / static_cast<double>(length * channels);
    }
  }
  const std::size_t bands = std::min<std::size_t>(16, half);
  for (std::size_t b = 0; b < bands; ++b) {
    const std::size_t lo = b * half / bands;
    const std::size_t hi = (b + 1) * half / bands;
    double acc = 0.0;
    for (std::size_t k = lo; k < hi; ++k) acc += spectrum[k];
    out.push_back(acc / static_cast<double>(hi - lo));
  }
  return out;
}

Standardizer Standardizer::fit(const Matrix& rows) {
  Standardizer s;
  const auto n = static_cast<double>(rows.rows());
  s.mean.assign(rows.cols(), 0.0);
  s.scale.assign(rows.cols(), 1.0);
  for (std::size_t j = 0; j < rows.cols(); ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < rows.rows(); ++i) sum += rows(i, j);
    s.mean[j] = sum / n;
    double var = 0.0;
    for (std::size_t i = 0; i < rows.rows(); ++i) var += (rows(i, j) - s.mean[j]) * (rows(i, j) - s.mean[j]);
    const double sd = std::sqrt(var / n);
    s.scale[j] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& rows) const {
  Matrix out = rows;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = (out(i, j) - mean[j]) * scale[j];
  return out;
}

void save_har(const HarDataset& data, const std::filesystem::path& dir) {
  for (const auto& [name, split] : {std::pair{"train", &data.train}, std::pair{"test", &data.test}}) {
    std::filesystem::create_directories(dir / name);
    write_array(dir / name / "sequences.bin", split->sequences, DType::float64);
    write_json(dir / name / "labels.json", split->labels);
  }
  write_json(dir / "meta.json", {{"task", "har"},
                                 {"modality", to_string(data.modality)},
                                 {"class_names", data.class_names}});
}

HarDataset load_har(const std::filesystem::path& dir) {
  const json meta = read_json(dir / "meta.json");
  if (meta.at("task") != "har") throw std::runtime_error(dir.string() + " is not a HAR dataset");
  HarDataset data;
  data.modality = modality_from_string(meta.at("modality").get<std::string>());
  data.class_names = meta.at("class_names").get<std::vector<std::string>>();
  for (auto& [name, split] : {std::pair{"train", &data.train}, std::pair{"test", &data.test}}) {
    split->sequences = read_real_array(dir / name / "sequences.bin");
    split->labels = read_json(dir / name / "labels.json").get<std::vector<int>>();
    if (split->sequences.shape.size() != 3 || split->sequences.shape[0] != split->labels.size()) {
      throw std::runtime_error(dir.string() + "/" + name + ": sequences and labels disagree");
    }
  }
  return data;
}

void save_tal(const TalDataset& data, const std::filesystem::path& dir) {
  for (const auto& [name, split] : {std::pair{"train", &data.train}, std::pair{"test", &data.test}}) {
    std::filesystem::create_directories(dir / name);
    write_array(dir / name / "features.bin", split->features, DType::float64);
    write_json(dir / name / "segments.json", split->segments);
  }
  write_json(dir / "meta.json", {{"task", "tal"},
                                 {"modality", "csi"},
                                 {"class_names", data.class_names},
                                 {"frame_rate", data.frame_rate}});
}

TalDataset load_tal(const std::filesystem::path& dir) {
  const json meta = read_json(dir / "meta.json");
  if (meta.at("task") != "tal") throw std::runtime_error(dir.string() + " is not a TAL dataset");
  TalDataset data;
  data.class_names = meta.at("class_names").get<std::vector<std::string>>();
  data.frame_rate = meta.at("frame_rate").get<double>();
  for (auto& [name, split] : {std::pair{"train", &data.train}, std::pair{"test", &data.test}}) {
    split->features = read_real_array(dir / name / "features.bin");
    split->segments =
        read_json(dir / name / "segments.json").get<std::vector<std::vector<eval::Segment>>>();
    if (split->features.shape.size() != 3 || split->features.shape[0] != split->segments.size()) {
      throw std::runtime_error(dir.string() + "/" + name + ": features and segments disagree");
    }
  }
  return data;
}

}  // namespace textsense::harness
