// SPDX-License-Identifier: Apache-2.0
#include "textsense/signal/csi.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "textsense/core/rng.hpp"

namespace textsense::signal {

double DynamicPath::delay_at(double time_s) const {
  return initial_delay + delay_rate * time_s +
         oscillation_amplitude * std::sin(2.0 * std::numbers::pi * oscillation_frequency * time_s);
}

void CsiScene::validate() const {
  if (num_tx < 1 || num_rx < 1 || num_subcarriers < 1) {
    throw std::invalid_argument("CsiScene: antenna and subcarrier counts must be >= 1");
  }
  if (subcarrier_freqs.size() != num_subcarriers) {
    throw std::invalid_argument("CsiScene: expected " + std::to_string(num_subcarriers) +
                                " subcarrier frequencies, got " +
                                std::to_string(subcarrier_freqs.size()));
  }
  for (std::size_t i = 0; i < static_paths.size(); ++i) {
    if (!(static_paths[i].delay >= 0.0)) {
      throw std::invalid_argument("CsiScene: static path " + std::to_string(i) +
                                  " has negative delay");
    }
  }
  if (!(noise_std >= 0.0)) throw std::invalid_argument("CsiScene: noise_std must be >= 0");
  if (!(sample_rate > 0.0) || !(duration > 0.0)) {
    throw std::invalid_argument("CsiScene: sample_rate and duration must be > 0");
  }
  if (dynamic_path) {
    // Delay must stay non-negative over the whole recording.
    const auto n = num_samples();
    for (std::size_t t = 0; t < n; ++t) {
      if (dynamic_path->delay_at(static_cast<double>(t) / sample_rate) < 0.0) {
        throw std::invalid_argument("CsiScene: dynamic path delay becomes negative at sample " +
                                    std::to_string(t));
      }
    }
  }
}

std::size_t CsiScene::num_samples() const {
  return static_cast<std::size_t>(std::llround(duration * sample_rate));
}

std::vector<double> subcarrier_grid(double center_hz, double spacing_hz, std::size_t count) {
  std::vector<double> freqs(count);
  const double mid = (static_cast<double>(count) - 1.0) / 2.0;
  for (std::size_t i = 0; i < count; ++i)
    freqs[i] = center_hz + (static_cast<double>(i) - mid) * spacing_hz;
  return freqs;
}

ComplexArray synth_csi_sequence(const CsiScene& scene, std::uint64_t seed) {
  scene.validate();
  const std::size_t samples = scene.num_samples();
  const std::size_t subcarriers = scene.num_subcarriers;
  const std::size_t pairs = scene.num_pairs();
  ComplexArray out{{samples, subcarriers, pairs},
                   {"time", "subcarrier", "antenna_pair"},
                   std::vector<std::complex<double>>(samples * subcarriers * pairs)};

  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  std::vector<std::complex<double>> static_response(subcarriers);
  for (std::size_t i = 0; i < subcarriers; ++i) {
    for (const auto& path : scene.static_paths)
      static_response[i] += std::polar(path.gain, -kTwoPi * scene.subcarrier_freqs[i] * path.delay);
  }

  Rng rng(seed);
  const double component = scene.noise_std / std::numbers::sqrt2;
  for (std::size_t t = 0; t < samples; ++t) {
    const double time_s = static_cast<double>(t) / scene.sample_rate;
    const double dyn_delay = scene.dynamic_path ? scene.dynamic_path->delay_at(time_s) : 0.0;
    for (std::size_t i = 0; i < subcarriers; ++i) {
      std::complex<double> h = static_response[i];
      if (scene.dynamic_path) {
        h += std::polar(scene.dynamic_path->gain, -kTwoPi * scene.subcarrier_freqs[i] * dyn_delay);
      }
      for (std::size_t p = 0; p < pairs; ++p) {
        std::complex<double> y = h;  // unit pilot: Y = H * 1 + N
        if (component > 0.0) y += std::complex<double>(rng.normal() * component,
                                                       rng.normal() * component);
        out.data[(t * subcarriers + i) * pairs + p] = y;
      }
    }
  }
  return out;
}

RealArray csi_amplitude(const ComplexArray& csi) {
  if (csi.shape.size() != 3) throw std::invalid_argument("csi_amplitude: expected rank-3 CSI");
  const std::size_t samples = csi.shape[0];
  const std::size_t channels = csi.shape[1] * csi.shape[2];
  RealArray out{{samples, channels}, {"time", "channel"}, std::vector<double>(samples * channels)};
  for (std::size_t k = 0; k < out.data.size(); ++k) out.data[k] = std::abs(csi.data[k]);
  return out;
}

}  // namespace textsense::signal
