#pragma once

#include <cmath>
#include <stdexcept>

#include "lanemerge/core.hpp"

namespace lanemerge::rss {

struct SafeDistances {
  double d_long = 0.0; // minimum longitudinal safe distance [m]
  double d_lat = 0.0;  // minimum lateral safe distance [m]
};

// Minimum longitudinal distance the ego (rear) must keep to a front vehicle:
// worst case the ego accelerates for t_lag, then brakes comfortably, while
// the front vehicle brakes as hard as it can. Includes the half-length term,
// so the value is a center-to-center requirement by construction.
inline double longitudinal_safe_distance(double v_ego, double v_front,
                                         const RssParams& ego_params,
                                         double front_brake_max,
                                         double l_ego, double l_front) {
  if (!std::isfinite(v_ego) || !std::isfinite(v_front) || v_ego < 0.0 ||
      v_front < 0.0) {
    throw std::invalid_argument("longitudinal_safe_distance: bad speeds");
  }
  if (!ego_params.valid() || front_brake_max <= 0.0) {
    throw std::invalid_argument("longitudinal_safe_distance: bad parameters");
  }
  const double t = ego_params.t_lag;
  const double v_reached = v_ego + ego_params.a_accel_max * t;
  const double bracket = v_ego * t + 0.5 * ego_params.a_accel_max * t * t +
                         0.5 * (l_ego + l_front) +
                         v_reached * v_reached / (2.0 * ego_params.a_brake_min) -
                         v_front * v_front / (2.0 * front_brake_max);
  return positive_part(bracket);
}

// Minimum lateral distance between the ego and the i-th obstacle. By
// convention the two close in on each other laterally for t_lag at their
// maximum lateral acceleration, then brake laterally at their minimum rate:
//   v_e_rho = v_e_lat + a_accel_lat_max * t_lag   (ego, positive = toward)
//   v_o_rho = v_o_lat - a_accel_lat_max_i * t_lag (obstacle, toward the ego)
// Each vehicle's own lateral braking parameter scales its own term.
inline double lateral_safe_distance(double v_lat_ego, double v_lat_other,
                                    const RssParams& ego_params,
                                    const RssParams& other_params,
                                    double w_ego, double w_other) {
  if (!std::isfinite(v_lat_ego) || !std::isfinite(v_lat_other) ||
      w_ego < 0.0 || w_other < 0.0) {
    throw std::invalid_argument("lateral_safe_distance: bad inputs");
  }
  if (!ego_params.valid() || !other_params.valid()) {
    throw std::invalid_argument("lateral_safe_distance: bad parameters");
  }
  const double t = ego_params.t_lag;
  const double v_e_rho = v_lat_ego + ego_params.a_accel_lat_max * t;
  const double v_o_rho = v_lat_other - other_params.a_accel_lat_max * t;
  const double ego_side = 0.5 * (v_lat_ego + v_e_rho) * t +
                          v_e_rho * v_e_rho / (2.0 * ego_params.a_brake_lat_min);
  const double other_side =
      0.5 * (v_lat_other + v_o_rho) * t +
      v_o_rho * v_o_rho / (2.0 * other_params.a_brake_lat_min);
  const double bracket = ego_side + 0.5 * (w_ego + w_other) - other_side;
  return ego_params.mu + positive_part(bracket);
}

inline SafeDistances safe_distances(const VehicleState& ego,
                                    const VehicleState& other,
                                    const RssParams& ego_params,
                                    const RssParams& other_params) {
  SafeDistances out;
  out.d_long = longitudinal_safe_distance(ego.speed_long, other.speed_long,
                                          ego_params, other_params.a_brake_max,
                                          ego.length, other.length);
  out.d_lat = lateral_safe_distance(ego.speed_lat, other.speed_lat, ego_params,
                                    other_params, ego.width, other.width);
  return out;
}

} // namespace lanemerge::rss
