#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "lanemerge/core.hpp"
#include "lanemerge/sigmoid_planner.hpp"

namespace lanemerge::model {

struct VehicleParams {
  double mass = 1500.0;            // [kg]
  double yaw_inertia = 2500.0;     // [kg m^2]
  double cornering_stiffness_front = 80000.0; // [N/rad]
  double cornering_stiffness_rear = 80000.0;  // [N/rad]
  double dist_cg_front = 1.2;      // [m]
  double dist_cg_rear = 1.6;       // [m]
  double max_steer = 0.5;          // [rad]
  double v_max = 40.0;             // [m/s]
  RssParams rss;

  bool valid() const {
    return mass > 0.0 && yaw_inertia > 0.0 && cornering_stiffness_front > 0.0 &&
           cornering_stiffness_rear > 0.0 && dist_cg_front > 0.0 &&
           dist_cg_rear > 0.0 && max_steer > 0.0 && max_steer < M_PI / 4.0 &&
           v_max > 0.0 && rss.valid();
  }

  double wheelbase() const { return dist_cg_front + dist_cg_rear; }
};

// Speed below which the linear 2-DOF model hands over to the kinematic
// bicycle (the dynamic model has a 1/v singularity).
inline constexpr double kKinematicSpeedLimit = 3.0;

namespace detail {

struct Deriv {
  double dx, dy, dpsi, dbeta, dr, dv;
};

inline Deriv dynamic_deriv(const std::array<double, 6>& s, double steer,
                           double accel, const VehicleParams& p) {
  // s = {x, y, psi, beta, r, v}
  const double v = std::max(s[5], 2.0); // guard while braking through the handover
  const double cf = p.cornering_stiffness_front;
  const double cr = p.cornering_stiffness_rear;
  const double lf = p.dist_cg_front;
  const double lr = p.dist_cg_rear;
  const double beta = s[3];
  const double r = s[4];
  Deriv d;
  d.dbeta = -(cf + cr) / (p.mass * v) * beta +
            ((cr * lr - cf * lf) / (p.mass * v * v) - 1.0) * r +
            cf / (p.mass * v) * steer;
  d.dr = (cr * lr - cf * lf) / p.yaw_inertia * beta -
         (cf * lf * lf + cr * lr * lr) / (p.yaw_inertia * v) * r +
         cf * lf / p.yaw_inertia * steer;
  d.dpsi = r;
  d.dx = s[5] * std::cos(s[2] + beta);
  d.dy = s[5] * std::sin(s[2] + beta);
  d.dv = accel;
  return d;
}

inline double kinematic_sideslip(double steer, const VehicleParams& p) {
  return std::atan(p.dist_cg_rear * std::tan(steer) / p.wheelbase());
}

inline Deriv kinematic_deriv(const std::array<double, 6>& s, double steer,
                             double accel, const VehicleParams& p) {
  const double beta = kinematic_sideslip(steer, p);
  Deriv d;
  d.dbeta = 0.0;
  d.dr = 0.0;
  d.dpsi = s[5] * std::cos(beta) * std::tan(steer) / p.wheelbase();
  d.dx = s[5] * std::cos(s[2] + beta);
  d.dy = s[5] * std::sin(s[2] + beta);
  d.dv = accel;
  return d;
}

} // namespace detail

// One fixed-step RK4 update. Linear 2-DOF lateral dynamics (beta, r) above
// the handover speed, kinematic bicycle below it; longitudinal speed clamps
// to [0, v_max].
inline VehicleState step_dynamics(const VehicleState& state, double steer,
                                  double accel, double dt,
                                  const VehicleParams& p) {
  if (!(dt > 0.0) || dt > 0.05)
    throw std::invalid_argument("step_dynamics: dt must be in (0, 0.05]");
  if (std::abs(steer) > p.max_steer + 1e-12)
    throw std::invalid_argument("step_dynamics: steer beyond max_steer");
  if (accel < -p.rss.a_brake_max - 1e-9 || accel > p.rss.a_accel_max + 1e-9)
    throw std::invalid_argument("step_dynamics: accel outside brake/accel range");
  if (!state.valid()) throw std::invalid_argument("step_dynamics: bad state");

  const bool dynamic = state.speed_long >= kKinematicSpeedLimit;
  auto deriv = [&](const std::array<double, 6>& s) {
    return dynamic ? detail::dynamic_deriv(s, steer, accel, p)
                   : detail::kinematic_deriv(s, steer, accel, p);
  };

  std::array<double, 6> s0 = {state.x,        state.y,        state.heading,
                              state.sideslip, state.yaw_rate, state.speed_long};
  if (!dynamic) {
    s0[3] = detail::kinematic_sideslip(steer, p);
    s0[4] = state.speed_long * std::cos(s0[3]) * std::tan(steer) / p.wheelbase();
  }

  auto advance = [](const std::array<double, 6>& s, const detail::Deriv& d,
                    double h) {
    return std::array<double, 6>{s[0] + h * d.dx,    s[1] + h * d.dy,
                                 s[2] + h * d.dpsi,  s[3] + h * d.dbeta,
                                 s[4] + h * d.dr,    s[5] + h * d.dv};
  };

  const auto k1 = deriv(s0);
  const auto k2 = deriv(advance(s0, k1, dt / 2.0));
  const auto k3 = deriv(advance(s0, k2, dt / 2.0));
  const auto k4 = deriv(advance(s0, k3, dt));

  VehicleState out = state;
  out.x = s0[0] + dt / 6.0 * (k1.dx + 2 * k2.dx + 2 * k3.dx + k4.dx);
  out.y = s0[1] + dt / 6.0 * (k1.dy + 2 * k2.dy + 2 * k3.dy + k4.dy);
  out.heading = s0[2] + dt / 6.0 * (k1.dpsi + 2 * k2.dpsi + 2 * k3.dpsi + k4.dpsi);
  out.speed_long =
      std::clamp(s0[5] + dt / 6.0 * (k1.dv + 2 * k2.dv + 2 * k3.dv + k4.dv),
                 0.0, p.v_max);
  if (dynamic) {
    out.sideslip =
        s0[3] + dt / 6.0 * (k1.dbeta + 2 * k2.dbeta + 2 * k3.dbeta + k4.dbeta);
    out.yaw_rate = s0[4] + dt / 6.0 * (k1.dr + 2 * k2.dr + 2 * k3.dr + k4.dr);
  } else {
    out.sideslip = detail::kinematic_sideslip(steer, p);
    out.yaw_rate =
        out.speed_long * std::cos(out.sideslip) * std::tan(steer) / p.wheelbase();
  }
  out.speed_lat = out.speed_long * std::sin(out.heading + out.sideslip);
  return out;
}

// Pure-pursuit steering toward the path point one lookahead arc ahead.
// Lookahead = clamp(0.5 v, 3 m, 15 m).
inline double track_path(const VehicleState& state,
                         const sigmoid::SigmoidPath& path,
                         double wheelbase = 2.8) {
  if (path.waypoints.empty())
    throw std::invalid_argument("track_path: empty path");
  const double lookahead = std::clamp(0.5 * state.speed_long, 3.0, 15.0);

  // Waypoints are monotone in x; find the nearest one at-or-ahead of the
  // vehicle, then walk forward by arc length.
  const auto& wps = path.waypoints;
  double tx = wps.back().x;
  double ty = wps.back().y;
  if (state.x >= wps.back().x) {
    // past the end: continue along the final heading
    const double ahead = (state.x - wps.back().x) + lookahead;
    tx = wps.back().x + ahead * std::cos(wps.back().heading);
    ty = wps.back().y + ahead * std::sin(wps.back().heading);
    const double alpha_end =
        std::atan2(ty - state.y, tx - state.x) - state.heading;
    const double ld_end = std::max(std::hypot(tx - state.x, ty - state.y), 1e-6);
    return std::atan2(2.0 * wheelbase * std::sin(alpha_end), ld_end);
  }
  std::size_t i = 0;
  while (i + 1 < wps.size() && wps[i].x < state.x) ++i;
  double acc = std::hypot(wps[i].x - state.x, wps[i].y - state.y);
  if (acc >= lookahead) {
    tx = wps[i].x;
    ty = wps[i].y;
  } else {
    bool found = false;
    for (std::size_t j = i; j + 1 < wps.size(); ++j) {
      const double seg =
          std::hypot(wps[j + 1].x - wps[j].x, wps[j + 1].y - wps[j].y);
      if (acc + seg >= lookahead) {
        const double f = (lookahead - acc) / seg;
        tx = wps[j].x + f * (wps[j + 1].x - wps[j].x);
        ty = wps[j].y + f * (wps[j + 1].y - wps[j].y);
        found = true;
        break;
      }
      acc += seg;
    }
    if (!found) {
      // extrapolate along the final heading
      const double rem = lookahead - acc;
      tx = wps.back().x + rem * std::cos(wps.back().heading);
      ty = wps.back().y + rem * std::sin(wps.back().heading);
    }
  }

  const double alpha =
      std::atan2(ty - state.y, tx - state.x) - state.heading;
  const double ld = std::max(std::hypot(tx - state.x, ty - state.y), 1e-6);
  return std::atan2(2.0 * wheelbase * std::sin(alpha), ld);
}

inline double track_path(const VehicleState& state,
                         const sigmoid::SigmoidPath& path,
                         const VehicleParams& p) {
  return std::clamp(track_path(state, path, p.wheelbase()), -p.max_steer,
                    p.max_steer);
}

// Proportional speed law, k_p = 1.0 1/s, clamped to the brake/accel range.
inline double speed_controller(const VehicleState& state, double v_target,
                               const VehicleParams& p) {
  if (!(v_target >= 0.0))
    throw std::invalid_argument("speed_controller: negative target");
  const double kp = 1.0;
  const double accel = kp * (v_target - state.speed_long);
  return std::clamp(accel, -p.rss.a_brake_max, p.rss.a_accel_max);
}

// Speed law for a committed cooperative profile: braking bounded by the
// accepted a_brake_min (SlowDown) or acceleration by a_accel_max (SpeedUp).
inline double coop_speed_controller(const VehicleState& state, double v_target,
                                    bool slow_down, double accel_limit,
                                    const VehicleParams& p) {
  const double raw = speed_controller(state, v_target, p);
  if (slow_down) return std::clamp(raw, -accel_limit, p.rss.a_accel_max);
  return std::clamp(raw, -p.rss.a_brake_max, accel_limit);
}

} // namespace lanemerge::model
