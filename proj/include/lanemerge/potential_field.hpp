#pragma once

#include <cmath>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lanemerge/core.hpp"
#include "lanemerge/rss.hpp"

namespace lanemerge::field {

struct FieldParams {
  double beta = 1.0;          // road repulsive coefficient
  double gamma = 10.0;        // obstacle influence coefficient
  double sigma_lat = 0.14;    // lateral repulsive coefficient (default)
  double sigma_long = 5e-4;   // longitudinal repulsive coefficient (default)
  double u_floor = 0.01;      // minimal positive factor U, 0 < U < 1
  double xi = 0.05;           // lane-center attraction coefficient
  double d_star = 20.0;       // search target distance D* [m]
  double eps_denominator = 0.05; // singularity clamp [m]

  bool valid() const {
    return beta > 0.0 && gamma > 0.0 && sigma_lat > 0.0 && sigma_long > 0.0 &&
           u_floor > 0.0 && u_floor < 1.0 && xi > 0.0 && d_star > 0.0 &&
           eps_denominator > 0.0;
  }
};

enum class DriveMode { LaneKeeping, LaneMerging };

struct Scene {
  LaneGeometry lane;
  std::vector<VehicleState> obstacles;
  double target_x = 0.0; // target waypoint sampled from the lane center
  double target_y = 0.0;
  DriveMode mode = DriveMode::LaneKeeping;
};

// Repulsion of one road boundary line. The denominator magnitude is clamped
// at eps_denominator so a vehicle sitting on the line sees a large finite
// cost. Callers sum this over both boundaries.
inline double road_marking_potential(double y, double boundary_y,
                                     double vehicle_width,
                                     const FieldParams& p) {
  const double raw = y - boundary_y - 0.5 * vehicle_width;
  const double denom = std::max(std::abs(raw), p.eps_denominator);
  return 0.5 * p.beta / (denom * denom);
}

// Gaussian repulsion of one obstacle vehicle, floored by U.
inline double obstacle_potential(double x, double y, double obs_x, double obs_y,
                                 double sigma_lat, double sigma_long,
                                 const FieldParams& p) {
  const double dy = y - obs_y;
  const double dx = x - obs_x;
  const double expo = std::exp(-(sigma_lat * dy * dy + sigma_long * dx * dx));
  return p.gamma * std::abs(expo - p.u_floor);
}

inline double obstacle_potential(double x, double y, double obs_x, double obs_y,
                                 const FieldParams& p) {
  return obstacle_potential(x, y, obs_x, obs_y, p.sigma_lat, p.sigma_long, p);
}

// Lane-center attraction; quadratic well while lane keeping, conical while
// merging. The merging branch goes negative for d < D*/2 and is recorded
// as-is, no clamp.
inline double lane_center_potential(double x, double y, const Scene& scene,
                                    const FieldParams& p) {
  const double d = std::hypot(x - scene.target_x, y - scene.target_y);
  if (scene.mode == DriveMode::LaneKeeping) return 0.5 * p.xi * d * d;
  return p.d_star * p.xi * d - 0.5 * p.xi * p.d_star * p.d_star;
}

// Repulsive field extents tied to the safe-distance envelope: the Gaussian's
// one-sigma contour sits on the minimum safe distances.
inline std::pair<double, double> sigma_from_safe_distances(
    const rss::SafeDistances& d) {
  const double lat = std::max(d.d_lat, 0.5);
  const double lon = std::max(d.d_long, 0.5);
  return {1.0 / (2.0 * lat * lat), 1.0 / (2.0 * lon * lon)};
}

// Sum of both road-boundary terms, all obstacle terms and the lane-center
// term. When per-obstacle safe distances are supplied they shape each
// obstacle's sigma pair; otherwise the params defaults apply.
inline double total_potential(double x, double y, const Scene& scene,
                              std::span<const rss::SafeDistances> obstacle_dists,
                              const FieldParams& p, double vehicle_width) {
  if (!obstacle_dists.empty() && obstacle_dists.size() != scene.obstacles.size())
    throw std::invalid_argument("total_potential: distance list size mismatch");
  double sum = road_marking_potential(y, scene.lane.y_left, vehicle_width, p) +
               road_marking_potential(y, scene.lane.y_right, vehicle_width, p);
  for (std::size_t i = 0; i < scene.obstacles.size(); ++i) {
    double s1 = p.sigma_lat;
    double s2 = p.sigma_long;
    if (!obstacle_dists.empty()) {
      const auto [lat, lon] = sigma_from_safe_distances(obstacle_dists[i]);
      s1 = lat;
      s2 = lon;
    }
    sum += obstacle_potential(x, y, scene.obstacles[i].x, scene.obstacles[i].y,
                              s1, s2, p);
  }
  sum += lane_center_potential(x, y, scene, p);
  return sum;
}

// Central finite differences of the total field, h = 0.01 m per axis.
inline std::pair<double, double> potential_gradient(
    double x, double y, const Scene& scene,
    std::span<const rss::SafeDistances> obstacle_dists, const FieldParams& p,
    double vehicle_width) {
  const double h = 0.01;
  const double dpx = total_potential(x + h, y, scene, obstacle_dists, p, vehicle_width) -
                     total_potential(x - h, y, scene, obstacle_dists, p, vehicle_width);
  const double dpy = total_potential(x, y + h, scene, obstacle_dists, p, vehicle_width) -
                     total_potential(x, y - h, scene, obstacle_dists, p, vehicle_width);
  return {dpx / (2.0 * h), dpy / (2.0 * h)};
}

// Rasterized field dump, one "x,y,P" row per grid node.
inline std::string dump_field_csv(const Scene& scene,
                                  std::span<const rss::SafeDistances> dists,
                                  const FieldParams& p, double vehicle_width,
                                  double x0, double x1, double y0, double y1,
                                  double step) {
  if (!(step > 0.0)) throw std::invalid_argument("dump_field_csv: step");
  std::string out = "x,y,P\n";
  char buf[96];
  for (double x = x0; x <= x1 + 1e-9; x += step) {
    for (double y = y0; y <= y1 + 1e-9; y += step) {
      const double v = total_potential(x, y, scene, dists, p, vehicle_width);
      std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.6g\n", x, y, v);
      out += buf;
    }
  }
  return out;
}

} // namespace lanemerge::field
