// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "textsense/eval/metrics.hpp"

namespace textsense::eval {

// Segments and detections serialize as {"start", "end", "class"[, "score"]}.
void to_json(nlohmann::json& j, const Segment& s);
void from_json(const nlohmann::json& j, Segment& s);
void to_json(nlohmann::json& j, const Detection& d);
void from_json(const nlohmann::json& j, Detection& d);

std::vector<Segment> read_segments(const std::filesystem::path& path);
std::vector<Detection> read_detections(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace textsense::eval
