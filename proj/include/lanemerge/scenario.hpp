#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lanemerge/channel.hpp"
#include "lanemerge/core.hpp"
#include "lanemerge/merge_rules.hpp"
#include "lanemerge/potential_field.hpp"
#include "lanemerge/vehicle_model.hpp"

namespace lanemerge::sim {

struct PlannerParams {
  double a_lat_comfort = 2.0; // peak lateral acceleration budget [m/s^2]
  double cp_grid_step = 0.5;  // CP candidate spacing [m]
  double path_spacing = 1.0;  // waypoint spacing [m]

  bool valid() const {
    return a_lat_comfort > 0.0 && cp_grid_step > 0.0 && path_spacing > 0.0;
  }
};

// Scheduled cruise-speed change, e.g. a vehicle yielding to open a gap.
struct VehicleEvent {
  double t = 0.0;
  double cruise_speed = 0.0;
};

struct VehicleSpec {
  std::string name;
  int id = 0;
  bool is_ego = false;
  VehicleState initial;
  model::VehicleParams params;
  rules::ObstaclePolicy policy = rules::ObstaclePolicy::NonCooperative;
  double cruise_speed = 0.0;
  int target_lane = 0; // ego only
  std::vector<VehicleEvent> events;
};

struct ScenarioConfig {
  std::string name = "scenario";
  double duration = 30.0;
  double dt = 0.02;
  LaneGeometry lane;
  MergeParams merge;
  bool coop_enabled = false;
  field::FieldParams field;
  ChannelParams channel;
  PlannerParams planner;
  rules::DecideConfig decide;
  std::vector<VehicleSpec> vehicles;
  int ego_index = -1;

  int steps() const { return static_cast<int>(std::llround(duration / dt)); }
};

struct ParseResult {
  std::optional<ScenarioConfig> config;
  std::vector<std::string> errors;

  bool ok() const { return config.has_value() && errors.empty(); }
};

namespace cfg_detail {

using nlohmann::json;

inline void check_keys(const json& obj, const std::vector<std::string>& allowed,
                       const std::string& path, std::vector<std::string>& errors) {
  if (!obj.is_object()) {
    errors.push_back(path + ": expected an object");
    return;
  }
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const auto& k : allowed)
      if (it.key() == k) { known = true; break; }
    if (!known) errors.push_back(path + ": unknown key '" + it.key() + "'");
  }
}

inline double num(const json& obj, const std::string& key, double def,
                  const std::string& path, std::vector<std::string>& errors,
                  bool required = false) {
  if (!obj.contains(key)) {
    if (required) errors.push_back(path + "." + key + ": missing");
    return def;
  }
  if (!obj[key].is_number()) {
    errors.push_back(path + "." + key + ": expected a number");
    return def;
  }
  return obj[key].get<double>();
}

inline RssParams parse_rss(const json& obj, const std::string& path,
                           std::vector<std::string>& errors) {
  RssParams r;
  check_keys(obj, {"t_lag", "a_accel_max", "a_brake_min", "a_brake_max",
                   "a_accel_lat_max", "a_brake_lat_min", "mu"},
             path, errors);
  if (!obj.is_object()) return r;
  r.t_lag = num(obj, "t_lag", r.t_lag, path, errors);
  r.a_accel_max = num(obj, "a_accel_max", r.a_accel_max, path, errors);
  r.a_brake_min = num(obj, "a_brake_min", r.a_brake_min, path, errors);
  r.a_brake_max = num(obj, "a_brake_max", r.a_brake_max, path, errors);
  r.a_accel_lat_max = num(obj, "a_accel_lat_max", r.a_accel_lat_max, path, errors);
  r.a_brake_lat_min = num(obj, "a_brake_lat_min", r.a_brake_lat_min, path, errors);
  r.mu = num(obj, "mu", r.mu, path, errors);
  if (!r.valid()) errors.push_back(path + ": invalid rss parameters");
  return r;
}

inline model::VehicleParams parse_vehicle_params(const json& obj,
                                                 const std::string& path,
                                                 std::vector<std::string>& errors) {
  model::VehicleParams p;
  check_keys(obj,
             {"mass", "yaw_inertia", "cornering_stiffness_front",
              "cornering_stiffness_rear", "dist_cg_front", "dist_cg_rear",
              "max_steer", "v_max"},
             path, errors);
  if (!obj.is_object()) return p;
  p.mass = num(obj, "mass", p.mass, path, errors);
  p.yaw_inertia = num(obj, "yaw_inertia", p.yaw_inertia, path, errors);
  p.cornering_stiffness_front = num(obj, "cornering_stiffness_front",
                                    p.cornering_stiffness_front, path, errors);
  p.cornering_stiffness_rear = num(obj, "cornering_stiffness_rear",
                                   p.cornering_stiffness_rear, path, errors);
  p.dist_cg_front = num(obj, "dist_cg_front", p.dist_cg_front, path, errors);
  p.dist_cg_rear = num(obj, "dist_cg_rear", p.dist_cg_rear, path, errors);
  p.max_steer = num(obj, "max_steer", p.max_steer, path, errors);
  p.v_max = num(obj, "v_max", p.v_max, path, errors);
  return p;
}

inline VehicleSpec parse_vehicle(const json& obj, int index,
                                 std::vector<std::string>& errors) {
  VehicleSpec v;
  const std::string path = "vehicles[" + std::to_string(index) + "]";
  check_keys(obj,
             {"name", "role", "initial", "length", "width", "target_lane",
              "cruise_speed", "policy", "params", "rss", "events"},
             path, errors);
  if (!obj.is_object()) return v;
  v.id = index;
  v.name = obj.value("name", "veh" + std::to_string(index));

  const std::string role = obj.value("role", "obstacle");
  if (role == "ego") v.is_ego = true;
  else if (role != "obstacle") errors.push_back(path + ".role: must be 'ego' or 'obstacle'");

  if (obj.contains("initial")) {
    const auto& ini = obj["initial"];
    check_keys(ini, {"x", "y", "heading", "speed", "speed_lat"}, path + ".initial", errors);
    if (ini.is_object()) {
      v.initial.x = num(ini, "x", 0.0, path + ".initial", errors, true);
      v.initial.y = num(ini, "y", 0.0, path + ".initial", errors, true);
      v.initial.heading = num(ini, "heading", 0.0, path + ".initial", errors);
      v.initial.speed_long = num(ini, "speed", 0.0, path + ".initial", errors, true);
      v.initial.speed_lat = num(ini, "speed_lat", 0.0, path + ".initial", errors);
    }
  } else {
    errors.push_back(path + ".initial: missing");
  }
  v.initial.length = num(obj, "length", 4.6, path, errors);
  v.initial.width = num(obj, "width", 1.8, path, errors);
  if (!v.initial.valid()) errors.push_back(path + ".initial: invalid state");

  if (obj.contains("params"))
    v.params = parse_vehicle_params(obj["params"], path + ".params", errors);
  if (obj.contains("rss"))
    v.params.rss = parse_rss(obj["rss"], path + ".rss", errors);
  if (!v.params.valid()) errors.push_back(path + ".params: invalid vehicle parameters");

  v.cruise_speed = num(obj, "cruise_speed", v.initial.speed_long, path, errors);
  v.target_lane = static_cast<int>(num(obj, "target_lane", 0, path, errors));

  const std::string policy = obj.value("policy", "NonCooperative");
  if (policy == "Cooperative") v.policy = rules::ObstaclePolicy::Cooperative;
  else if (policy == "NonCooperative") v.policy = rules::ObstaclePolicy::NonCooperative;
  else if (policy == "Silent") v.policy = rules::ObstaclePolicy::Silent;
  else errors.push_back(path + ".policy: must be Cooperative|NonCooperative|Silent");

  if (obj.contains("events")) {
    if (!obj["events"].is_array()) {
      errors.push_back(path + ".events: expected an array");
    } else {
      int k = 0;
      for (const auto& ev : obj["events"]) {
        const std::string epath = path + ".events[" + std::to_string(k++) + "]";
        check_keys(ev, {"t", "cruise_speed"}, epath, errors);
        VehicleEvent e;
        e.t = num(ev, "t", 0.0, epath, errors, true);
        e.cruise_speed = num(ev, "cruise_speed", 0.0, epath, errors, true);
        if (e.cruise_speed < 0.0) errors.push_back(epath + ".cruise_speed: negative");
        v.events.push_back(e);
      }
    }
  }
  return v;
}

} // namespace cfg_detail

inline ParseResult parse_scenario(const nlohmann::json& j) {
  using cfg_detail::check_keys;
  using cfg_detail::num;
  ParseResult res;
  auto& errors = res.errors;
  ScenarioConfig c;

  check_keys(j, {"name", "duration", "dt", "lane", "merge", "field", "channel",
                 "planner", "decide", "vehicles"},
             "config", errors);
  if (!j.is_object()) return res;

  c.name = j.value("name", "scenario");
  c.duration = num(j, "duration", 0.0, "config", errors, true);
  c.dt = num(j, "dt", 0.0, "config", errors, true);
  if (!(c.dt > 0.0)) errors.push_back("config.dt: must be > 0");
  if (!(c.duration > 0.0)) errors.push_back("config.duration: must be > 0");
  if (c.dt > 0.0 && c.duration > 0.0) {
    const double steps = c.duration / c.dt;
    if (std::abs(steps - std::llround(steps)) > 1e-6)
      errors.push_back("config.duration: must be an integral number of dt steps");
  }

  if (j.contains("lane")) {
    const auto& lane = j["lane"];
    check_keys(lane, {"y_left", "y_right", "lane_centers", "side_lane_end_x"},
               "config.lane", errors);
    if (lane.is_object()) {
      c.lane.y_left = num(lane, "y_left", c.lane.y_left, "config.lane", errors, true);
      c.lane.y_right = num(lane, "y_right", c.lane.y_right, "config.lane", errors, true);
      c.lane.side_lane_end_x =
          num(lane, "side_lane_end_x", c.lane.side_lane_end_x, "config.lane", errors);
      if (lane.contains("lane_centers") && lane["lane_centers"].is_array()) {
        for (const auto& e : lane["lane_centers"]) {
          if (e.is_number()) c.lane.lane_centers.push_back(e.get<double>());
          else errors.push_back("config.lane.lane_centers: expected numbers");
        }
      } else {
        errors.push_back("config.lane.lane_centers: missing or not an array");
      }
      if (!c.lane.valid())
        errors.push_back("config.lane: boundaries must enclose strictly ascending lane centers");
    }
  } else {
    errors.push_back("config.lane: missing");
  }

  if (j.contains("merge")) {
    const auto& m = j["merge"];
    check_keys(m, {"rho_m", "rho_c", "t_m_dec", "coop_enabled"}, "config.merge", errors);
    if (m.is_object()) {
      c.merge.rho_m = num(m, "rho_m", c.merge.rho_m, "config.merge", errors);
      c.merge.rho_c = num(m, "rho_c", c.merge.rho_c, "config.merge", errors);
      c.merge.t_m_dec = num(m, "t_m_dec", c.merge.t_m_dec, "config.merge", errors);
      if (m.contains("coop_enabled")) {
        if (m["coop_enabled"].is_boolean()) c.coop_enabled = m["coop_enabled"].get<bool>();
        else errors.push_back("config.merge.coop_enabled: expected a boolean");
      }
      if (!c.merge.valid()) errors.push_back("config.merge: thresholds must be positive");
    }
  }

  if (j.contains("field")) {
    const auto& f = j["field"];
    check_keys(f, {"beta", "gamma", "sigma_lat", "sigma_long", "u_floor", "xi",
                   "d_star", "eps_denominator"},
               "config.field", errors);
    if (f.is_object()) {
      c.field.beta = num(f, "beta", c.field.beta, "config.field", errors);
      c.field.gamma = num(f, "gamma", c.field.gamma, "config.field", errors);
      c.field.sigma_lat = num(f, "sigma_lat", c.field.sigma_lat, "config.field", errors);
      c.field.sigma_long = num(f, "sigma_long", c.field.sigma_long, "config.field", errors);
      c.field.u_floor = num(f, "u_floor", c.field.u_floor, "config.field", errors);
      c.field.xi = num(f, "xi", c.field.xi, "config.field", errors);
      c.field.d_star = num(f, "d_star", c.field.d_star, "config.field", errors);
      c.field.eps_denominator =
          num(f, "eps_denominator", c.field.eps_denominator, "config.field", errors);
      if (!c.field.valid()) errors.push_back("config.field: invalid field parameters");
    }
  }

  if (j.contains("channel")) {
    const auto& ch = j["channel"];
    check_keys(ch, {"delay", "drop_probability", "seed"}, "config.channel", errors);
    if (ch.is_object()) {
      c.channel.delay = num(ch, "delay", c.channel.delay, "config.channel", errors);
      c.channel.drop_probability =
          num(ch, "drop_probability", c.channel.drop_probability, "config.channel", errors);
      c.channel.seed = static_cast<std::uint32_t>(
          num(ch, "seed", c.channel.seed, "config.channel", errors));
      if (!c.channel.valid())
        errors.push_back("config.channel: delay >= 0 and drop_probability in [0,1] required");
    }
  }

  if (j.contains("planner")) {
    const auto& p = j["planner"];
    check_keys(p, {"a_lat_comfort", "cp_grid_step", "path_spacing"}, "config.planner", errors);
    if (p.is_object()) {
      c.planner.a_lat_comfort =
          num(p, "a_lat_comfort", c.planner.a_lat_comfort, "config.planner", errors);
      c.planner.cp_grid_step =
          num(p, "cp_grid_step", c.planner.cp_grid_step, "config.planner", errors);
      c.planner.path_spacing =
          num(p, "path_spacing", c.planner.path_spacing, "config.planner", errors);
      if (!c.planner.valid()) errors.push_back("config.planner: values must be positive");
    }
  }

  if (j.contains("decide")) {
    const auto& d = j["decide"];
    check_keys(d, {"halt_window", "halt_margin"}, "config.decide", errors);
    if (d.is_object()) {
      c.decide.halt_window = num(d, "halt_window", c.decide.halt_window, "config.decide", errors);
      c.decide.halt_margin = num(d, "halt_margin", c.decide.halt_margin, "config.decide", errors);
    }
  }

  if (j.contains("vehicles") && j["vehicles"].is_array()) {
    int idx = 0;
    for (const auto& vj : j["vehicles"]) {
      c.vehicles.push_back(cfg_detail::parse_vehicle(vj, idx++, errors));
    }
  } else {
    errors.push_back("config.vehicles: missing or not an array");
  }

  int ego_count = 0;
  for (std::size_t i = 0; i < c.vehicles.size(); ++i) {
    if (c.vehicles[i].is_ego) {
      ++ego_count;
      c.ego_index = static_cast<int>(i);
    }
  }
  if (ego_count != 1)
    errors.push_back("config.vehicles: exactly one vehicle must have role 'ego'");
  if (c.ego_index >= 0) {
    const auto& ego = c.vehicles[c.ego_index];
    if (ego.target_lane < 0 ||
        ego.target_lane >= static_cast<int>(c.lane.lane_centers.size()))
      errors.push_back("config.vehicles: ego target_lane out of range");
  }

  if (errors.empty()) res.config = std::move(c);
  return res;
}

inline ParseResult parse_scenario_text(const std::string& text) {
  ParseResult res;
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    res.errors.push_back("config: not valid JSON");
    return res;
  }
  return parse_scenario(j);
}

// Apply a dotted-key override ("merge.rho_c=2.0") onto the raw JSON document.
// The value is parsed as JSON when possible, else taken as a string.
inline bool apply_override(nlohmann::json& j, const std::string& dotted_key,
                           const std::string& value) {
  nlohmann::json* node = &j;
  std::size_t pos = 0;
  std::string key = dotted_key;
  while ((pos = key.find('.')) != std::string::npos) {
    const std::string head = key.substr(0, pos);
    if (!node->is_object()) return false;
    node = &(*node)[head];
    key = key.substr(pos + 1);
  }
  if (!node->is_object()) return false;
  nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
  (*node)[key] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
  return true;
}

} // namespace lanemerge::sim
