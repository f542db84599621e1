// SPDX-License-Identifier: Apache-2.0
#include "textsense/signal/scene_json.hpp"

namespace textsense::signal {

using nlohmann::json;

void to_json(json& j, const StaticPath& p) { j = {{"gain", p.gain}, {"delay", p.delay}}; }

void from_json(const json& j, StaticPath& p) {
  j.at("gain").get_to(p.gain);
  j.at("delay").get_to(p.delay);
}

void to_json(json& j, const DynamicPath& p) {
  j = {{"gain", p.gain},
       {"initial_delay", p.initial_delay},
       {"delay_rate", p.delay_rate},
       {"oscillation_amplitude", p.oscillation_amplitude},
       {"oscillation_frequency", p.oscillation_frequency}};
}

void from_json(const json& j, DynamicPath& p) {
  j.at("gain").get_to(p.gain);
  j.at("initial_delay").get_to(p.initial_delay);
  p.delay_rate = j.value("delay_rate", 0.0);
  p.oscillation_amplitude = j.value("oscillation_amplitude", 0.0);
  p.oscillation_frequency = j.value("oscillation_frequency", 0.0);
}

void to_json(json& j, const CsiScene& s) {
  j = {{"num_tx", s.num_tx},
       {"num_rx", s.num_rx},
       {"num_subcarriers", s.num_subcarriers},
       {"subcarrier_freqs", s.subcarrier_freqs},
       {"static_paths", s.static_paths},
       {"dynamic_path", s.dynamic_path ? json(*s.dynamic_path) : json(nullptr)},
       {"noise_std", s.noise_std},
       {"sample_rate", s.sample_rate},
       {"duration", s.duration}};
}

void from_json(const json& j, CsiScene& s) {
  j.at("num_tx").get_to(s.num_tx);
  j.at("num_rx").get_to(s.num_rx);
  j.at("num_subcarriers").get_to(s.num_subcarriers);
  j.at("subcarrier_freqs").get_to(s.subcarrier_freqs);
  s.static_paths = j.value("static_paths", std::vector<StaticPath>{});
  if (j.contains("dynamic_path") && !j.at("dynamic_path").is_null()) {
    s.dynamic_path = j.at("dynamic_path").get<DynamicPath>();
  } else {
    s.dynamic_path.reset();
  }
  s.noise_std = j.value("noise_std", 0.0);
  j.at("sample_rate").get_to(s.sample_rate);
  j.at("duration").get_to(s.duration);
}

void to_json(json& j, const FmcwParams& p) {
  j = {{"bandwidth", p.bandwidth},
       {"chirp_duration", p.chirp_duration},
       {"carrier_wavelength", p.carrier_wavelength},
       {"num_chirps", p.num_chirps},
       {"samples_per_chirp", p.samples_per_chirp},
       {"light_speed", p.light_speed}};
}

void from_json(const json& j, FmcwParams& p) {
  j.at("bandwidth").get_to(p.bandwidth);
  j.at("chirp_duration").get_to(p.chirp_duration);
  j.at("carrier_wavelength").get_to(p.carrier_wavelength);
  j.at("num_chirps").get_to(p.num_chirps);
  j.at("samples_per_chirp").get_to(p.samples_per_chirp);
  p.light_speed = j.value("light_speed", kSpeedOfLight);
}

void to_json(json& j, const FmcwTarget& t) {
  j = {{"range", t.range},
       {"radial_velocity", t.radial_velocity},
       {"elevation_phase", t.elevation_phase},
       {"azimuth_phase", t.azimuth_phase},
       {"reflectivity", t.reflectivity}};
}

void from_json(const json& j, FmcwTarget& t) {
  j.at("range").get_to(t.range);
  t.radial_velocity = j.value("radial_velocity", 0.0);
  t.elevation_phase = j.value("elevation_phase", 0.0);
  t.azimuth_phase = j.value("azimuth_phase", 0.0);
  t.reflectivity = j.value("reflectivity", 1.0);
}

void to_json(json& j, const RfidLink& l) {
  j = {{"p_tx", l.p_tx},   {"g_tx", l.g_tx},           {"g_rx", l.g_rx},
       {"g_tag", l.g_tag}, {"wavelength", l.wavelength}, {"distance", l.distance}};
}

void from_json(const json& j, RfidLink& l) {
  j.at("p_tx").get_to(l.p_tx);
  j.at("g_tx").get_to(l.g_tx);
  j.at("g_rx").get_to(l.g_rx);
  j.at("g_tag").get_to(l.g_tag);
  j.at("wavelength").get_to(l.wavelength);
  j.at("distance").get_to(l.distance);
}

}  // namespace textsense::signal
