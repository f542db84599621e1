// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "textsense/core/array_io.hpp"

namespace textsense::signal {

struct StaticPath {
  double gain = 1.0;
  double delay = 0.0;  // s
};

/// Path reflected off the moving person. Its delay follows
/// initial_delay + delay_rate * t + oscillation_amplitude * sin(2 pi oscillation_frequency t).
struct DynamicPath {
  double gain = 0.0;
  double initial_delay = 0.0;          // s
  double delay_rate = 0.0;             // s/s
  double oscillation_amplitude = 0.0;  // s
  double oscillation_frequency = 0.0;  // Hz

  double delay_at(double time_s) const;
};

struct CsiScene {
  std::size_t num_tx = 1;
  std::size_t num_rx = 1;
  std::size_t num_subcarriers = 1;
  std::vector<double> subcarrier_freqs;  // Hz, one per subcarrier
  std::vector<StaticPath> static_paths;
  std::optional<DynamicPath> dynamic_path;
  double noise_std = 0.0;
  double sample_rate = 100.0;  // Hz
  double duration = 1.0;       // s

  void validate() const;
  std::size_t num_samples() const;
  std::size_t num_pairs() const { return num_tx * num_rx; }
};

/// Evenly spaced OFDM subcarrier frequencies centred on `center_hz`.
std::vector<double> subcarrier_grid(double center_hz, double spacing_hz, std::size_t count);

/// Estimated CSI with unit pilots, shape [time, subcarrier, antenna_pair]:
/// H_i(t) = sum_p gain_p exp(-j 2 pi f_i delay_p(t)) + complex Gaussian noise.
ComplexArray synth_csi_sequence(const CsiScene& scene, std::uint64_t seed);

/// |H| reshaped to [time, channel] with channel = subcarrier * num_pairs + pair.
RealArray csi_amplitude(const ComplexArray& csi);

}  // namespace textsense::signal
