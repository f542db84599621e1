// SPDX-License-Identifier: Apache-2.0
#include "textsense/eval/segments_json.hpp"

#include <fstream>
#include <stdexcept>

namespace textsense::eval {

using nlohmann::json;

void to_json(json& j, const Segment& s) {
  j = {{"start", s.start}, {"end", s.end}, {"class", s.class_id}};
}

void from_json(const json& j, Segment& s) {
  j.at("start").get_to(s.start);
  j.at("end").get_to(s.end);
  j.at("class").get_to(s.class_id);
  s.validate();
}

void to_json(json& j, const Detection& d) {
  to_json(j, d.segment);
  j["score"] = d.score;
}

void from_json(const json& j, Detection& d) {
  from_json(j, d.segment);
  d.score = j.value("score", 1.0);
  d.validate();
}

namespace {

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return json::parse(in);
}

}  // namespace

std::vector<Segment> read_segments(const std::filesystem::path& path) {
  return read_json_file(path).get<std::vector<Segment>>();
}

std::vector<Detection> read_detections(const std::filesystem::path& path) {
  return read_json_file(path).get<std::vector<Detection>>();
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace textsense::eval
