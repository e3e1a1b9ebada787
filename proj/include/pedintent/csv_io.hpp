#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pedintent/common.hpp"
#include "pedintent/geometry.hpp"
#include "pedintent/nn/train.hpp"
#include "pedintent/scenario.hpp"

namespace pedintent {

// CSV surfaces (MOT-compatible subset). All output uses '.' decimals via
// std::to_chars (shortest round-trip form, locale-free) and LF endings, so
// files are bit-stable across platforms and reruns.

namespace detail {

inline std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("format_number: conversion failed");
  return std::string(buf, ptr);
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

inline double parse_double(std::string_view field, const std::string& path, int line_no) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ValidationError(path + ": line " + std::to_string(line_no) +
                          ": malformed numeric field '" + std::string(field) + "'");
  }
  return value;
}

inline long parse_int(std::string_view field, const std::string& path, int line_no) {
  long value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ValidationError(path + ": line " + std::to_string(line_no) +
                          ": malformed integer field '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace detail

// Raw detections: frame,id,bb_left,bb_top,bb_width,bb_height,confidence
// with id = -1 for detector output.
struct DetectionRow {
  int frame;
  int id;
  double left, top, width, height;
  double confidence;
  int line = 0;  // source line, for diagnostics
};

inline std::vector<DetectionRow> read_detections_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open detections file " + path);
  std::vector<DetectionRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = detail::split_fields(line);
    if (fields.size() != 7) {
      throw ValidationError(path + ": line " + std::to_string(line_no) +
                            ": expected 7 fields, got " + std::to_string(fields.size()));
    }
    DetectionRow row;
    row.frame = static_cast<int>(detail::parse_int(fields[0], path, line_no));
    row.id = static_cast<int>(detail::parse_int(fields[1], path, line_no));
    row.left = detail::parse_double(fields[2], path, line_no);
    row.top = detail::parse_double(fields[3], path, line_no);
    row.width = detail::parse_double(fields[4], path, line_no);
    row.height = detail::parse_double(fields[5], path, line_no);
    row.confidence = detail::parse_double(fields[6], path, line_no);
    row.line = line_no;
    if (row.width <= 0.0 || row.height <= 0.0) {
      throw ValidationError(path + ": line " + std::to_string(line_no) +
                            ": non-positive box size");
    }
    rows.push_back(row);
  }
  return rows;
}

inline void write_detections_csv(const std::string& path, const Scenario& scenario) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write detections file " + path);
  for (int f = 0; f < scenario.config.num_frames; ++f) {
    for (const Detection& d : scenario.detections[f]) {
      out << f << ",-1," << detail::format_number(d.box.x_min) << ','
          << detail::format_number(d.box.y_min) << ','
          << detail::format_number(d.box.width()) << ','
          << detail::format_number(d.box.height()) << ','
          << detail::format_number(d.confidence) << '\n';
    }
  }
  if (!out) throw IoError("write failed for " + path);
}

// Ground truth: frame,agent_id,bb_left,bb_top,bb_width,bb_height,label,onset_frame
inline void write_ground_truth_csv(const std::string& path, const Scenario& scenario) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write ground-truth file " + path);
  for (int f = 0; f < scenario.config.num_frames; ++f) {
    for (const AgentTruth& agent : scenario.agents) {
      const BBox& b = agent.box_at(f);
      out << f << ',' << agent.id << ',' << detail::format_number(b.x_min) << ','
          << detail::format_number(b.y_min) << ',' << detail::format_number(b.width()) << ','
          << detail::format_number(b.height()) << ','
          << (agent.crossing ? "cross" : "not_cross") << ',' << agent.onset_frame << '\n';
    }
  }
  if (!out) throw IoError("write failed for " + path);
}

struct GroundTruthRow {
  int frame;
  int agent_id;
  double left, top, width, height;
  bool crossing;
  int onset_frame;
};

inline std::vector<GroundTruthRow> read_ground_truth_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ground-truth file " + path);
  std::vector<GroundTruthRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = detail::split_fields(line);
    if (fields.size() != 8) {
      throw ValidationError(path + ": line " + std::to_string(line_no) +
                            ": expected 8 fields, got " + std::to_string(fields.size()));
    }
    GroundTruthRow row;
    row.frame = static_cast<int>(detail::parse_int(fields[0], path, line_no));
    row.agent_id = static_cast<int>(detail::parse_int(fields[1], path, line_no));
    row.left = detail::parse_double(fields[2], path, line_no);
    row.top = detail::parse_double(fields[3], path, line_no);
    row.width = detail::parse_double(fields[4], path, line_no);
    row.height = detail::parse_double(fields[5], path, line_no);
    if (fields[6] == "cross") {
      row.crossing = true;
    } else if (fields[6] == "not_cross") {
      row.crossing = false;
    } else {
      throw ValidationError(path + ": line " + std::to_string(line_no) +
                            ": label must be cross or not_cross");
    }
    row.onset_frame = static_cast<int>(detail::parse_int(fields[7], path, line_no));
    rows.push_back(row);
  }
  return rows;
}

// Tracker output: frame,track_id,bb_left,bb_top,bb_width,bb_height
struct TrackRow {
  int frame;
  int track_id;
  double left, top, width, height;
};

inline void write_tracks_csv(const std::string& path, const std::vector<TrackRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write tracks file " + path);
  for (const TrackRow& r : rows) {
    out << r.frame << ',' << r.track_id << ',' << detail::format_number(r.left) << ','
        << detail::format_number(r.top) << ',' << detail::format_number(r.width) << ','
        << detail::format_number(r.height) << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

// Intent scores: frame,track_id,p_cross
struct IntentRow {
  int frame;
  int track_id;
  double p_cross;
};

inline void write_intents_csv(const std::string& path, const std::vector<IntentRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write intents file " + path);
  for (const IntentRow& r : rows) {
    out << r.frame << ',' << r.track_id << ',' << detail::format_number(r.p_cross) << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

// Training history: epoch,loss,accuracy
inline void write_loss_history_csv(const std::string& path,
                                   const std::vector<nn::EpochStats>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write history file " + path);
  out << "epoch,loss,accuracy\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    out << (i + 1) << ',' << detail::format_number(history[i].loss) << ','
        << detail::format_number(history[i].accuracy) << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace pedintent
