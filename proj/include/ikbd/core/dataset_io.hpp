#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ikbd/core/types.hpp"
#include "ikbd/error.hpp"

namespace ikbd {

inline constexpr int kDatasetFormatVersion = 1;

namespace detail {

inline nlohmann::json sample_to_json(const TouchSample& s) {
  nlohmann::json touches = nlohmann::json::array();
  for (const auto& p : s.touches) {
    nlohmann::json t = nlohmann::json::array({p.x, p.y});
    if (p.t_ms) t.push_back(*p.t_ms);
    touches.push_back(std::move(t));
  }
  return {{"user_id", s.user_id}, {"phrase", s.phrase}, {"touches", std::move(touches)}};
}

inline TouchSample sample_from_json(const nlohmann::json& j, std::size_t line) {
  TouchSample s;
  try {
    s.user_id = j.at("user_id").get<std::string>();
    s.phrase = j.at("phrase").get<std::string>();
    for (const auto& t : j.at("touches")) {
      if (!t.is_array() || t.size() < 2 || t.size() > 3) {
        throw ParseError("touch must be [x, y] or [x, y, t_ms]", line);
      }
      TouchPoint p{t[0].get<double>(), t[1].get<double>(), std::nullopt};
      if (t.size() == 3) p.t_ms = t[2].get<double>();
      s.touches.push_back(p);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad sample record: ") + e.what(), line);
  }
  validate_sample(s, "line " + std::to_string(line));
  return s;
}

}  // namespace detail

/// Line-delimited JSON: one header object, then one object per sample.
inline void write_dataset(std::ostream& os, const Dataset& d) {
  nlohmann::json header = {
      {"format_version", kDatasetFormatVersion},
      {"screen_mm", {d.screen.width_mm, d.screen.height_mm}},
      {"screen_px", {d.screen.width_px, d.screen.height_px}},
  };
  os << header.dump() << '\n';
  for (const auto& s : d.samples) os << detail::sample_to_json(s).dump() << '\n';
}

inline Dataset read_dataset(std::istream& is) {
  Dataset d;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    if (!j.is_object()) throw ParseError("record is not an object", lineno);
    if (!have_header) {
      try {
        int version = j.at("format_version").get<int>();
        if (version != kDatasetFormatVersion) {
          throw ParseError("unsupported format_version " + std::to_string(version), lineno);
        }
        const auto& mm = j.at("screen_mm");
        const auto& px = j.at("screen_px");
        d.screen.width_mm = mm.at(0).get<double>();
        d.screen.height_mm = mm.at(1).get<double>();
        d.screen.width_px = px.at(0).get<int>();
        d.screen.height_px = px.at(1).get<int>();
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad header: ") + e.what(), lineno);
      }
      have_header = true;
      continue;
    }
    d.samples.push_back(detail::sample_from_json(j, lineno));
  }
  if (!have_header) throw ParseError("missing header record", lineno ? lineno : 1);
  return d;
}

inline void save_dataset(const std::string& path, const Dataset& d) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_dataset(os, d);
  if (!os) throw Error("write failed: " + path);
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  return read_dataset(is);
}

}  // namespace ikbd
