// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace textsense::signal {

/// Monostatic backscatter link between a reader and one passive tag.
struct RfidLink {
  double p_tx = 1.0;         // W
  double g_tx = 1.0;
  double g_rx = 1.0;
  double g_tag = 1.0;
  double wavelength = 0.33;  // m
  double distance = 1.0;     // m

  void validate() const;
};

/// Reader-side received power with two-way path loss:
/// P_tx G_tx G_rx G_tag^2 (lambda / (4 pi d))^4.
double rfid_received_power(const RfidLink& link);

double watts_to_dbm(double watts);

}  // namespace textsense::signal
