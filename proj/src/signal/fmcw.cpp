// SPDX-License-Identifier: Apache-2.0
#include "textsense/signal/fmcw.hpp"

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <sstream>

#include <fftw3.h>

#include "textsense/core/rng.hpp"

namespace textsense::signal {
namespace {

constexpr double kPi = std::numbers::pi;

void require_finite(double value, const char* what) {
  if (!std::isfinite(value)) {
    throw std::invalid_argument(std::string(what) + " must be finite");
  }
}

std::string angle_message(AngleDomainError::Which which, double argument) {
  std::ostringstream os;
  os << (which == AngleDomainError::Which::elevation ? "elevation" : "azimuth")
     << " angle: arcsine argument " << argument << " outside [-1, 1]";
  return os.str();
}

// The FFTW planner is not reentrant; plan creation and destruction are serialized.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

void FmcwParams::validate() const {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
    throw std::invalid_argument("FmcwParams: bandwidth must be > 0");
  if (!(chirp_duration > 0.0) || !std::isfinite(chirp_duration))
    throw std::invalid_argument("FmcwParams: chirp_duration must be > 0");
  if (!(carrier_wavelength > 0.0) || !std::isfinite(carrier_wavelength))
    throw std::invalid_argument("FmcwParams: carrier_wavelength must be > 0");
  if (!(light_speed > 0.0) || !std::isfinite(light_speed))
    throw std::invalid_argument("FmcwParams: light_speed must be > 0");
  if (num_chirps < 2) throw std::invalid_argument("FmcwParams: num_chirps must be >= 2");
  if (samples_per_chirp < 2)
    throw std::invalid_argument("FmcwParams: samples_per_chirp must be >= 2");
}

void FmcwTarget::validate() const {
  if (!(range > 0.0) || !std::isfinite(range))
    throw std::invalid_argument("FmcwTarget: range must be > 0");
  require_finite(radial_velocity, "FmcwTarget: radial_velocity");
  if (!(std::abs(elevation_phase) <= kPi))
    throw std::invalid_argument("FmcwTarget: |elevation_phase| must be <= pi");
  if (!(std::abs(azimuth_phase) <= kPi))
    throw std::invalid_argument("FmcwTarget: |azimuth_phase| must be <= pi");
  require_finite(reflectivity, "FmcwTarget: reflectivity");
}

AngleDomainError::AngleDomainError(Which which, double argument)
    : std::domain_error(angle_message(which, argument)), which_(which), argument_(argument) {}

double fmcw_range(double delta_f, const FmcwParams& params) {
  require_finite(delta_f, "fmcw_range: delta_f");
  if (delta_f < 0.0) throw std::invalid_argument("fmcw_range: delta_f must be >= 0");
  params.validate();
  return params.light_speed * delta_f * params.chirp_duration / (2.0 * params.bandwidth);
}

double fmcw_velocity(double omega, const FmcwParams& params) {
  require_finite(omega, "fmcw_velocity: omega");
  params.validate();
  return params.carrier_wavelength * omega / (4.0 * kPi * params.chirp_duration);
}

double beat_frequency(double range, const FmcwParams& params) {
  return 2.0 * params.bandwidth * range / (params.light_speed * params.chirp_duration);
}

double doppler_phase(double velocity, const FmcwParams& params) {
  return 4.0 * kPi * velocity * params.chirp_duration / params.carrier_wavelength;
}

Angles fmcw_angles(double omega_z, double omega_x) {
  require_finite(omega_z, "fmcw_angles: omega_z");
  require_finite(omega_x, "fmcw_angles: omega_x");
  const double elevation_arg = omega_z / kPi;
  if (std::abs(elevation_arg) > 1.0) {
    throw AngleDomainError(AngleDomainError::Which::elevation, elevation_arg);
  }
  const double elevation = std::asin(elevation_arg);
  const double azimuth_arg = omega_x == 0.0 ? 0.0 : omega_x / (std::cos(elevation) * kPi);
  if (!(std::abs(azimuth_arg) <= 1.0)) {
    throw AngleDomainError(AngleDomainError::Which::azimuth, azimuth_arg);
  }
  return {elevation, std::asin(azimuth_arg)};
}

Position spherical_to_cartesian(double range, double elevation, double azimuth) {
  require_finite(range, "spherical_to_cartesian: range");
  require_finite(elevation, "spherical_to_cartesian: elevation");
  require_finite(azimuth, "spherical_to_cartesian: azimuth");
  if (!(range > 0.0)) throw std::invalid_argument("spherical_to_cartesian: range must be > 0");
  const double x = range * std::cos(elevation) * std::sin(azimuth);
  const double z = range * std::sin(elevation);
  const double r2 = range * range;
  double radicand = r2 - x * x - z * z;
  if (radicand < 0.0) {
    if (radicand < -1e-12 * r2) {
      throw std::domain_error("spherical_to_cartesian: negative radicand " +
                              std::to_string(radicand));
    }
    radicand = 0.0;
  }
  return {x, std::sqrt(radicand), z};
}

Position locate_target(const FmcwTarget& target) {
  target.validate();
  const Angles angles = fmcw_angles(target.elevation_phase, target.azimuth_phase);
  return spherical_to_cartesian(target.range, angles.elevation, angles.azimuth);
}

ComplexArray synth_fmcw_cube(const FmcwParams& params, std::span<const FmcwTarget> targets,
                             std::uint64_t seed, double noise_std) {
  params.validate();
  if (targets.empty()) throw std::invalid_argument("synth_fmcw_cube: no targets");
  if (!(noise_std >= 0.0)) throw std::invalid_argument("synth_fmcw_cube: noise_std must be >= 0");
  for (std::size_t i = 0; i < targets.size(); ++i) {
    targets[i].validate();
    if (targets[i].range >= params.max_range()) {
      throw std::invalid_argument("synth_fmcw_cube: target " + std::to_string(i) + " at " +
                                  std::to_string(targets[i].range) +
                                  " m is beyond the unambiguous range " +
                                  std::to_string(params.max_range()) + " m");
    }
  }

  const std::size_t chirps = params.num_chirps;
  const std::size_t samples = params.samples_per_chirp;
  ComplexArray cube{{chirps, samples}, {"chirp", "sample"},
                    std::vector<std::complex<double>>(chirps * samples)};

  Rng rng(seed);
  const double sample_period = params.chirp_duration / static_cast<double>(samples);
  for (const auto& target : targets) {
    const double initial_phase = rng.uniform(-kPi, kPi);
    const double beat_step = 2.0 * kPi * beat_frequency(target.range, params) * sample_period;
    const double chirp_step = doppler_phase(target.radial_velocity, params);
    for (std::size_t m = 0; m < chirps; ++m) {
      for (std::size_t n = 0; n < samples; ++n) {
        const double phase = initial_phase + beat_step * static_cast<double>(n) +
                             chirp_step * static_cast<double>(m);
        cube.data[m * samples + n] += target.reflectivity * std::polar(1.0, phase);
      }
    }
  }
  if (noise_std > 0.0) {
    const double component = noise_std / std::numbers::sqrt2;
    for (auto& z : cube.data) z += std::complex<double>(rng.normal() * component,
                                                        rng.normal() * component);
  }
  return cube;
}

long RangeDopplerMap::signed_doppler_bin(std::size_t bin) const {
  const auto m = static_cast<long>(magnitudes.cols());
  const auto b = static_cast<long>(bin);
  return b < (m + 1) / 2 ? b : b - m;
}

RangeDopplerMap range_doppler_map(const ComplexArray& cube, const FmcwParams& params) {
  params.validate();
  const std::size_t chirps = params.num_chirps;
  const std::size_t samples = params.samples_per_chirp;
  if (cube.shape.size() != 2 || cube.shape[0] != chirps || cube.shape[1] != samples ||
      cube.data.size() != chirps * samples) {
    throw std::invalid_argument("range_doppler_map: cube shape does not match [" +
                                std::to_string(chirps) + ", " + std::to_string(samples) + "]");
  }

  // A 2-D DFT over [chirp, sample] is the fast-time FFT followed by the
  // slow-time FFT.
  auto* buffer = fftw_alloc_complex(chirps * samples);
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_2d(static_cast<int>(chirps), static_cast<int>(samples), buffer, buffer,
                            FFTW_FORWARD, FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < cube.data.size(); ++i) {
    buffer[i][0] = cube.data[i].real();
    buffer[i][1] = cube.data[i].imag();
  }
  fftw_execute(plan);

  RangeDopplerMap map;
  map.magnitudes = Matrix(samples, chirps);
  map.range_resolution = params.range_resolution();
  map.velocity_resolution = params.velocity_resolution();
  for (std::size_t m = 0; m < chirps; ++m) {
    for (std::size_t n = 0; n < samples; ++n) {
      const auto& c = buffer[m * samples + n];
      map.magnitudes(n, m) = std::hypot(c[0], c[1]);
    }
  }
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buffer);
  return map;
}

RangeDopplerPeak find_peak(const RangeDopplerMap& map) {
  RangeDopplerPeak peak;
  const std::size_t range_bins = (map.magnitudes.rows() + 1) / 2;
  double best = -1.0;
  for (std::size_t r = 0; r < range_bins; ++r) {
    for (std::size_t d = 0; d < map.magnitudes.cols(); ++d) {
      if (map.magnitudes(r, d) > best) {
        best = map.magnitudes(r, d);
        peak.range_bin = r;
        peak.doppler_bin = d;
      }
    }
  }
  peak.magnitude = best;
  peak.range = static_cast<double>(peak.range_bin) * map.range_resolution;
  peak.velocity =
      static_cast<double>(map.signed_doppler_bin(peak.doppler_bin)) * map.velocity_resolution;
  return peak;
}

}  // namespace textsense::signal
