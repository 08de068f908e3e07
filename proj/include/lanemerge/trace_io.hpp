#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lanemerge/simulation.hpp"

namespace lanemerge::io {

// Fixed trace format: one row per vehicle per step, deterministic %.6f
// formatting so identical runs produce byte-identical files.
inline std::string trace_to_csv(const sim::Trace& trace) {
  std::string out = "t,veh_id,x,y,psi,beta,r,v,accel,steer,mode\n";
  char buf[256];
  for (std::size_t k = 0; k < trace.rows.size(); ++k) {
    for (std::size_t i = 0; i < trace.rows[k].size(); ++i) {
      const auto& r = trace.rows[k][i];
      std::snprintf(buf, sizeof(buf),
                    "%.6f,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%s\n",
                    trace.times[k], trace.config.vehicles[i].name.c_str(), r.x,
                    r.y, r.psi, r.beta, r.r, r.v, r.accel, r.steer,
                    r.mode.c_str());
      out += buf;
    }
  }
  return out;
}

inline nlohmann::json message_to_json(const rules::CoopMessage& m) {
  return nlohmann::json{{"sender_id", m.sender_id},
                        {"receiver_id", m.receiver_id},
                        {"p_c", m.p_c},
                        {"d_rss_star", m.d_rss_star},
                        {"request", rules::to_string(m.request)},
                        {"timestamp", m.timestamp}};
}

inline nlohmann::json response_to_json(const rules::CoopResponse& r) {
  const char* kind = r.kind == rules::CoopResponse::Kind::Accept   ? "Accept"
                     : r.kind == rules::CoopResponse::Kind::Reject ? "Reject"
                                                                   : "NoReply";
  return nlohmann::json{{"sender_id", r.sender_id},
                        {"receiver_id", r.receiver_id},
                        {"decision", kind},
                        {"v_obs_star", r.v_obs_star},
                        {"accel_limit", r.accel_limit},
                        {"request", rules::to_string(r.request)},
                        {"timestamp", r.timestamp}};
}

// One JSON object per line; requests carry the exact CoopMessage wire keys.
inline std::string messages_to_jsonl(const sim::Trace& trace) {
  std::string out;
  for (const auto& ev : trace.messages) {
    nlohmann::json j{{"t", ev.t}, {"event", ev.event}};
    if (std::holds_alternative<rules::CoopMessage>(ev.payload))
      j["message"] = message_to_json(std::get<rules::CoopMessage>(ev.payload));
    else
      j["response"] = response_to_json(std::get<rules::CoopResponse>(ev.payload));
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline nlohmann::json metrics_to_json(const sim::Metrics& m) {
  nlohmann::json j;
  j["completed"] = m.completed;
  j["merge_time"] = m.merge_time ? nlohmann::json(*m.merge_time) : nlohmann::json();
  j["path_length"] =
      m.path_length ? nlohmann::json(*m.path_length) : nlohmann::json();
  j["max_abs_sideslip"] = m.max_abs_sideslip;
  j["sideslip_sign_changes"] = m.sideslip_sign_changes;
  j["min_gap_ratio"] =
      m.min_gap_ratio ? nlohmann::json(*m.min_gap_ratio) : nlohmann::json();
  j["rss_violations"] = m.rss_violations;
  return j;
}

inline sim::Metrics metrics_from_json(const nlohmann::json& j) {
  sim::Metrics m;
  m.completed = j.at("completed").get<bool>();
  if (!j.at("merge_time").is_null()) m.merge_time = j["merge_time"].get<double>();
  if (!j.at("path_length").is_null())
    m.path_length = j["path_length"].get<double>();
  m.max_abs_sideslip = j.at("max_abs_sideslip").get<double>();
  m.sideslip_sign_changes = j.at("sideslip_sign_changes").get<int>();
  if (!j.at("min_gap_ratio").is_null())
    m.min_gap_ratio = j["min_gap_ratio"].get<double>();
  m.rss_violations = j.at("rss_violations").get<int>();
  return m;
}

inline std::string path_to_csv(const sigmoid::SigmoidPath& path) {
  std::string out = "x,y,heading\n";
  char buf[128];
  for (const auto& wp : path.waypoints) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f\n", wp.x, wp.y, wp.heading);
    out += buf;
  }
  return out;
}

inline nlohmann::json comparison_to_json(
    const std::vector<sim::ComparisonRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json e;
    e["name"] = r.name;
    e["metrics"] = metrics_to_json(r.metrics);
    e["merge_time_delta_pct"] = r.merge_time_delta_pct
                                    ? nlohmann::json(*r.merge_time_delta_pct)
                                    : nlohmann::json();
    e["path_length_delta_pct"] = r.path_length_delta_pct
                                     ? nlohmann::json(*r.path_length_delta_pct)
                                     : nlohmann::json();
    j.push_back(e);
  }
  return j;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Minimal reader for the fixed trace format, used by the plot subcommand.
struct CsvTrace {
  struct Row {
    double t, x, y, psi, beta, r, v, accel, steer;
    std::string veh;
    std::string mode;
  };
  std::vector<Row> rows;
  std::vector<std::string> vehicles; // in first-seen order
};

inline CsvTrace read_trace_csv(const std::string& content) {
  CsvTrace out;
  std::istringstream ss(content);
  std::string line;
  if (!std::getline(ss, line) ||
      line != "t,veh_id,x,y,psi,beta,r,v,accel,steer,mode")
    throw std::runtime_error("read_trace_csv: unexpected header");
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        cells.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (cells.size() != 11) throw std::runtime_error("read_trace_csv: bad row");
    CsvTrace::Row r;
    r.t = std::stod(cells[0]);
    r.veh = cells[1];
    r.x = std::stod(cells[2]);
    r.y = std::stod(cells[3]);
    r.psi = std::stod(cells[4]);
    r.beta = std::stod(cells[5]);
    r.r = std::stod(cells[6]);
    r.v = std::stod(cells[7]);
    r.accel = std::stod(cells[8]);
    r.steer = std::stod(cells[9]);
    r.mode = cells[10];
    if (std::find(out.vehicles.begin(), out.vehicles.end(), r.veh) ==
        out.vehicles.end())
      out.vehicles.push_back(r.veh);
    out.rows.push_back(std::move(r));
  }
  return out;
}

} // namespace lanemerge::io
