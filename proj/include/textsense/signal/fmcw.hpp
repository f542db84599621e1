// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include "textsense/core/array_io.hpp"
#include "textsense/core/matrix.hpp"

namespace textsense::signal {

inline constexpr double kSpeedOfLight = 299792458.0;

struct FmcwParams {
  double bandwidth = 4e9;             // Hz
  double chirp_duration = 40e-6;      // s
  double carrier_wavelength = 5e-3;   // m
  std::size_t num_chirps = 64;
  std::size_t samples_per_chirp = 64;
  double light_speed = kSpeedOfLight;  // m/s

  void validate() const;

  double range_resolution() const { return light_speed / (2.0 * bandwidth); }
  double velocity_resolution() const {
    return carrier_wavelength / (2.0 * static_cast<double>(num_chirps) * chirp_duration);
  }
  /// Largest range whose beat frequency stays below half the fast-time rate.
  double max_range() const {
    return light_speed * static_cast<double>(samples_per_chirp) / (4.0 * bandwidth);
  }
  /// Largest |v| whose chirp-to-chirp phase stays inside (-pi, pi).
  double max_velocity() const { return carrier_wavelength / (4.0 * chirp_duration); }
};

struct FmcwTarget {
  double range = 1.0;            // m
  double radial_velocity = 0.0;  // m/s, positive = receding
  double elevation_phase = 0.0;  // rad, phase difference between vertical antennas
  double azimuth_phase = 0.0;    // rad, phase difference between horizontal antennas
  double reflectivity = 1.0;

  void validate() const;
};

struct Angles {
  double elevation = 0.0;  // phi
  double azimuth = 0.0;    // theta
};

struct Position {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Thrown when an arcsine argument leaves [-1, 1].
class AngleDomainError : public std::domain_error {
 public:
  enum class Which { elevation, azimuth };
  AngleDomainError(Which which, double argument);
  Which which() const { return which_; }
  double argument() const { return argument_; }

 private:
  Which which_;
  double argument_;
};

/// Range from the IF beat frequency: c * delta_f * T_c / (2 B).
double fmcw_range(double delta_f, const FmcwParams& params);

/// Radial velocity from the chirp-to-chirp phase change: lambda * omega / (4 pi T_c).
double fmcw_velocity(double omega, const FmcwParams& params);

/// Inverse of fmcw_range; the beat frequency a target at `range` produces.
double beat_frequency(double range, const FmcwParams& params);

/// Chirp-to-chirp phase advance for a target moving at `velocity`.
double doppler_phase(double velocity, const FmcwParams& params);

Angles fmcw_angles(double omega_z, double omega_x);

/// x = R cos(phi) sin(theta), z = R sin(phi), y = sqrt(R^2 - x^2 - z^2).
/// y is always non-negative: targets behind the array are not representable.
Position spherical_to_cartesian(double range, double elevation, double azimuth);

/// Full observable chain for one target: angles from phase differences, then
/// Cartesian position.
Position locate_target(const FmcwTarget& target);

/// Complex IF samples, shape [chirp, sample]. Each target contributes a tone at
/// its beat frequency within a chirp and a Doppler phase ramp across chirps.
/// `seed` drives the per-target initial phase and the receiver noise.
ComplexArray synth_fmcw_cube(const FmcwParams& params, std::span<const FmcwTarget> targets,
                             std::uint64_t seed, double noise_std = 0.0);

struct RangeDopplerMap {
  Matrix magnitudes;  // [range_bin, doppler_bin], doppler bins in FFT order
  double range_resolution = 0.0;
  double velocity_resolution = 0.0;

  /// Signed Doppler bin index for FFT-ordered column `bin`.
  long signed_doppler_bin(std::size_t bin) const;
};

/// Fast-time FFT per chirp followed by a slow-time FFT per range bin.
/// Rectangular window.
RangeDopplerMap range_doppler_map(const ComplexArray& cube, const FmcwParams& params);

struct RangeDopplerPeak {
  std::size_t range_bin = 0;
  std::size_t doppler_bin = 0;
  double range = 0.0;
  double velocity = 0.0;
  double magnitude = 0.0;
};

/// Global maximum of the map, restricted to the unambiguous (positive
/// frequency) half of the range axis.
RangeDopplerPeak find_peak(const RangeDopplerMap& map);

}  // namespace textsense::signal
