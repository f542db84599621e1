// SPDX-License-Identifier: Apache-2.0
#include "textsense/signal/rfid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace textsense::signal {
namespace {

void require_positive(double value, const char* field) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string("RfidLink: ") + field + " must be finite and > 0");
  }
}

}  // namespace

void RfidLink::validate() const {
  require_positive(p_tx, "p_tx");
  require_positive(g_tx, "g_tx");
  require_positive(g_rx, "g_rx");
  require_positive(g_tag, "g_tag");
  require_positive(wavelength, "wavelength");
  require_positive(distance, "distance");
}

double rfid_received_power(const RfidLink& link) {
  link.validate();
  const double ratio = link.wavelength / (4.0 * std::numbers::pi * link.distance);
  const double ratio2 = ratio * ratio;
  return link.p_tx * link.g_tx * link.g_rx * link.g_tag * link.g_tag * ratio2 * ratio2;
}

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

}  // namespace textsense::signal
