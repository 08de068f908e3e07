#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace lanemerge {

// Global frame: X increases in the direction of travel, Y increases leftward,
// all lanes parallel to X. Positions refer to vehicle geometric centers.

struct VehicleState {
  double x = 0.0;          // longitudinal position [m]
  double y = 0.0;          // lateral position [m]
  double heading = 0.0;    // yaw angle psi [rad]
  double sideslip = 0.0;   // beta [rad]
  double yaw_rate = 0.0;   // r [rad/s]
  double speed_long = 0.0; // longitudinal speed [m/s], >= 0
  double speed_lat = 0.0;  // global-frame lateral velocity [m/s], signed
  double length = 4.6;     // [m], > 0
  double width = 1.8;      // [m], > 0

  bool valid() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(heading) &&
           std::isfinite(sideslip) && std::isfinite(yaw_rate) &&
           std::isfinite(speed_long) && std::isfinite(speed_lat) &&
           speed_long >= 0.0 && length > 0.0 && width > 0.0 &&
           std::abs(sideslip) < M_PI / 2.0;
  }
};

// Reaction, acceleration, braking and margin parameters of the safe-distance
// formulas. t_lag bundles the ego response time and the V2V delay into one
// value; the scenario author supplies the sum.
struct RssParams {
  double t_lag = 0.3;            // retardation time [s]
  double a_accel_max = 3.0;      // max longitudinal acceleration [m/s^2]
  double a_brake_min = 4.0;      // min (comfortable) deceleration [m/s^2]
  double a_brake_max = 8.0;      // max braking capability [m/s^2]
  double a_accel_lat_max = 0.5;  // max lateral acceleration during t_lag [m/s^2]
  double a_brake_lat_min = 1.0;  // min lateral deceleration [m/s^2]
  double mu = 0.1;               // lateral fluctuation margin [m]

  bool valid() const {
    return t_lag >= 0.0 && a_accel_max > 0.0 && a_brake_min > 0.0 &&
           a_brake_max >= a_brake_min && a_accel_lat_max > 0.0 &&
           a_brake_lat_min > 0.0 && mu >= 0.0 && std::isfinite(t_lag) &&
           std::isfinite(a_accel_max) && std::isfinite(a_brake_max);
  }
};

struct MergeParams {
  double rho_m = 4.0;   // lane-merge threshold time [s]
  double rho_c = 2.0;   // communication threshold [s]
  double t_m_dec = 1.0; // lane-merge decision time [s]

  bool valid() const { return rho_m > 0.0 && rho_c > 0.0 && t_m_dec >= 0.0; }
};

struct LaneGeometry {
  double y_left = 7.0;   // left road boundary [m]
  double y_right = -3.5; // right road boundary [m]
  std::vector<double> lane_centers; // strictly ascending [m]
  double side_lane_end_x = 1e9;     // longitudinal end of the side lane [m]

  bool valid() const {
    if (!(y_right < y_left) || lane_centers.empty()) return false;
    for (std::size_t i = 0; i < lane_centers.size(); ++i) {
      if (!(lane_centers[i] > y_right && lane_centers[i] < y_left)) return false;
      if (i > 0 && !(lane_centers[i] > lane_centers[i - 1])) return false;
    }
    return true;
  }

  // Index of the lane whose center is nearest to y.
  int nearest_lane(double y) const {
    int best = 0;
    double best_d = std::abs(y - lane_centers[0]);
    for (int i = 1; i < static_cast<int>(lane_centers.size()); ++i) {
      const double d = std::abs(y - lane_centers[i]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  }
};

// [x]_+ of the safe-distance formulas.
inline double positive_part(double x) {
  return std::max(x, 0.0);
}

// Bumper-to-bumper longitudinal gap; negative means overlap.
inline double bumper_gap(const VehicleState& rear, const VehicleState& front) {
  return (front.x - rear.x) - 0.5 * (front.length + rear.length);
}

} // namespace lanemerge
