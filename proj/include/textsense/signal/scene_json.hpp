// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include "textsense/signal/csi.hpp"
#include "textsense/signal/fmcw.hpp"
#include "textsense/signal/rfid.hpp"

namespace textsense::signal {

void to_json(nlohmann::json& j, const StaticPath& p);
void from_json(const nlohmann::json& j, StaticPath& p);
void to_json(nlohmann::json& j, const DynamicPath& p);
void from_json(const nlohmann::json& j, DynamicPath& p);
void to_json(nlohmann::json& j, const CsiScene& s);
void from_json(const nlohmann::json& j, CsiScene& s);
void to_json(nlohmann::json& j, const FmcwParams& p);
void from_json(const nlohmann::json& j, FmcwParams& p);
void to_json(nlohmann::json& j, const FmcwTarget& t);
void from_json(const nlohmann::json& j, FmcwTarget& t);
void to_json(nlohmann::json& j, const RfidLink& l);
void from_json(const nlohmann::json& j, RfidLink& l);

}  // namespace textsense::signal
