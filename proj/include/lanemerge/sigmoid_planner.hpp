#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "lanemerge/core.hpp"
#include "lanemerge/potential_field.hpp"
#include "lanemerge/rss.hpp"

namespace lanemerge::sigmoid {

struct Waypoint {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

// Lane-merge path y(X) = w / (1 + e^{-kappa (X - p_c)}) + b, sampled at a
// fixed longitudinal spacing. w is signed (target center minus origin
// center), b is the origin lane center.
struct SigmoidPath {
  double w = 0.0;
  double kappa = 0.0;
  double p_c = 0.0;
  double b = 0.0;
  std::vector<Waypoint> waypoints;
};

struct CpInterval {
  std::optional<double> lower; // absent for the leading-obstacle case
  double upper = 0.0;
  bool feasible = false;
};

inline double sigmoid_lateral(double x, double w, double kappa, double p_c,
                              double b) {
  return w / (1.0 + std::exp(-kappa * (x - p_c))) + b;
}

inline double sigmoid_lateral(double x, const SigmoidPath& path) {
  return sigmoid_lateral(x, path.w, path.kappa, path.p_c, path.b);
}

// dY/dX of the sigmoid.
inline double sigmoid_slope(double x, double w, double kappa, double p_c) {
  const double s = 1.0 / (1.0 + std::exp(-kappa * (x - p_c)));
  return w * kappa * s * (1.0 - s);
}

// Feasible CP interval for gap_index of a sorted obstacle row: gap 0 merges
// behind obstacles[0] (leading case, upper bound only, floored at ego.x);
// gap i >= 1 slots between obstacles[i-1] and obstacles[i]. For the front
// gap (index == obstacles.size()) the upper bound is +infinity; callers
// clamp it against the lane end.
inline CpInterval cp_feasible_interval(const VehicleState& ego,
                                       std::span<const VehicleState> obstacles,
                                       int gap_index, double d_rss_lead,
                                       double d_rss_star, double d_rss_next) {
  const int n = static_cast<int>(obstacles.size());
  if (gap_index < 0 || gap_index > n)
    throw std::invalid_argument("cp_feasible_interval: gap index");
  for (int i = 1; i < n; ++i)
    if (obstacles[i].x < obstacles[i - 1].x)
      throw std::invalid_argument("cp_feasible_interval: obstacles not sorted");

  CpInterval out;
  if (gap_index == 0) {
    if (n == 0) {
      out.upper = std::numeric_limits<double>::infinity();
      out.feasible = true;
      return out;
    }
    out.upper = obstacles[0].x - d_rss_lead;
    out.feasible = ego.x <= out.upper;
    return out;
  }
  out.lower = obstacles[gap_index - 1].x + d_rss_star;
  out.upper = gap_index < n ? obstacles[gap_index].x - d_rss_next
                            : std::numeric_limits<double>::infinity();
  out.feasible = *out.lower <= out.upper;
  return out;
}

// Midpoint slope bounding the path's peak lateral acceleration: the sigmoid's
// maximum |y''| is kappa^2 |w| / (6 sqrt(3)), so at speed v the peak lateral
// acceleration is kappa^2 |w| v^2 / (6 sqrt(3)).
inline double select_kappa(double v, double w, double a_lat_comfort) {
  if (!(v > 0.0) || !(std::abs(w) > 0.0) || !(a_lat_comfort > 0.0))
    throw std::invalid_argument("select_kappa: inputs must be positive");
  const double kappa =
      std::sqrt(6.0 * std::sqrt(3.0) * a_lat_comfort / (std::abs(w) * v * v));
  return std::clamp(kappa, 0.05, 1.0);
}

// Line integral of the total potential along the candidate path, sampled at
// ~1 m arc spacing over [x0, x1]. Samples snap to absolute multiples of the
// spacing so candidate costs share one sample lattice.
inline double path_cost(double w, double kappa, double p_c, double b,
                        double x0, double x1, const field::Scene& scene,
                        std::span<const rss::SafeDistances> dists,
                        const field::FieldParams& fp, double vehicle_width,
                        double sample_spacing = 1.0) {
  double cost = 0.0;
  x0 = std::ceil(x0 / sample_spacing) * sample_spacing;
  for (double x = x0; x < x1; x += sample_spacing) {
    const double y = sigmoid_lateral(x, w, kappa, p_c, b);
    const double slope = sigmoid_slope(x, w, kappa, p_c);
    const double ds = std::sqrt(1.0 + slope * slope) * sample_spacing;
    cost += field::total_potential(x, y, scene, dists, fp, vehicle_width) * ds;
  }
  return cost;
}

// Grid search for the CP minimizing the integrated field cost over the
// feasible interval. Ties resolve toward the interval midpoint. Returns
// nullopt (the abort signal) when the interval is infeasible.
inline std::optional<double> select_cp(const CpInterval& interval,
                                       double lo_clamp, double hi_clamp,
                                       double w, double kappa, double b,
                                       const field::Scene& scene,
                                       std::span<const rss::SafeDistances> dists,
                                       const field::FieldParams& fp,
                                       double vehicle_width,
                                       double grid_step = 0.5) {
  if (!interval.feasible) return std::nullopt;
  double lo = std::max(interval.lower.value_or(lo_clamp), lo_clamp);
  double hi = std::min(interval.upper, hi_clamp);
  if (lo > hi) return std::nullopt;
  const double mid = 0.5 * (lo + hi);
  const double settle = 10.0 / kappa;
  const double x0 = lo - settle;
  const double x1 = hi + settle;

  double best_pc = lo;
  double best_cost = std::numeric_limits<double>::infinity();
  for (double pc = lo; pc <= hi + 1e-9; pc += grid_step) {
    const double c =
        path_cost(w, kappa, pc, b, x0, x1, scene, dists, fp, vehicle_width);
    const bool better = c < best_cost - 1e-12;
    const bool tie = std::abs(c - best_cost) <= 1e-12 &&
                     std::abs(pc - mid) < std::abs(best_pc - mid);
    if (better || tie) {
      best_cost = c;
      best_pc = pc;
    }
  }
  return best_pc;
}

// Sample the sigmoid from start_x over `horizon` meters at fixed longitudinal
// spacing; headings from the analytic derivative.
inline SigmoidPath generate_path(double start_x, double w, double kappa,
                                 double p_c, double b, double horizon,
                                 double spacing = 1.0) {
  if (!(spacing > 0.0) || !(horizon > 0.0))
    throw std::invalid_argument("generate_path: spacing and horizon must be > 0");
  SigmoidPath path;
  path.w = w;
  path.kappa = kappa;
  path.p_c = p_c;
  path.b = b;
  const int n = static_cast<int>(std::floor(horizon / spacing)) + 1;
  path.waypoints.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double x = start_x + i * spacing;
    Waypoint wp;
    wp.x = x;
    wp.y = sigmoid_lateral(x, w, kappa, p_c, b);
    wp.heading = std::atan(sigmoid_slope(x, w, kappa, p_c));
    path.waypoints.push_back(wp);
  }
  return path;
}

// Straight lane-keeping path at constant lateral position.
inline SigmoidPath straight_path(double start_x, double y, double horizon,
                                 double spacing = 1.0) {
  SigmoidPath path;
  path.w = 0.0;
  path.kappa = 1.0;
  path.p_c = start_x;
  path.b = y;
  const int n = static_cast<int>(std::floor(horizon / spacing)) + 1;
  path.waypoints.reserve(n);
  for (int i = 0; i < n; ++i)
    path.waypoints.push_back({start_x + i * spacing, y, 0.0});
  return path;
}

} // namespace lanemerge::sigmoid
