#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lanemerge/core.hpp"
#include "lanemerge/rss.hpp"

namespace lanemerge::rules {

enum class MergeMode { LaneKeep, MergeNonCoop, NegotiateCoop, MergeCoop, Halt, Abort };

inline const char* to_string(MergeMode m) {
  switch (m) {
    case MergeMode::LaneKeep: return "LaneKeep";
    case MergeMode::MergeNonCoop: return "MergeNonCoop";
    case MergeMode::NegotiateCoop: return "NegotiateCoop";
    case MergeMode::MergeCoop: return "MergeCoop";
    case MergeMode::Halt: return "Halt";
    case MergeMode::Abort: return "Abort";
  }
  return "?";
}

enum class CoopRequest { SlowDown, SpeedUp };

inline const char* to_string(CoopRequest r) {
  return r == CoopRequest::SlowDown ? "SlowDown" : "SpeedUp";
}

enum class ObstaclePolicy { Cooperative, NonCooperative, Silent };

struct MergeDecision {
  MergeMode mode = MergeMode::LaneKeep;
  std::optional<int> target_gap;      // index of the gap bounding pair
  std::optional<double> v_ego_star;   // commanded ego speed [m/s]
  std::optional<double> v_obs_star;   // requested obstacle speed [m/s]
  std::optional<double> cp_hint;      // proposed sigmoid midpoint [m]
};

// V2V negotiation message. Wire format is one JSON object with exactly these
// fields (see trace_io.hpp).
struct CoopMessage {
  int sender_id = 0;
  int receiver_id = 0;
  double p_c = 0.0;        // proposed sigmoid midpoint [m]
  double d_rss_star = 0.0; // predicted minimum safe distance at the CP [m]
  CoopRequest request = CoopRequest::SlowDown;
  double timestamp = 0.0;  // send time [s]

  bool valid() const {
    return std::isfinite(p_c) && std::isfinite(d_rss_star) && d_rss_star >= 0.0;
  }
};

struct CoopResponse {
  enum class Kind { Accept, Reject, NoReply };
  Kind kind = Kind::NoReply;
  int sender_id = 0;
  int receiver_id = 0;
  double v_obs_star = 0.0;   // committed speed when accepting [m/s]
  double accel_limit = 0.0;  // magnitude bound of the committed profile [m/s^2]
  CoopRequest request = CoopRequest::SlowDown;
  double timestamp = 0.0;
};

// ---------------------------------------------------------------------------
// Closed-form speed-constraint solvers. Each returns the boundary value of
// the corresponding merge inequality; substituting the result back yields
// equality. Feasibility against vehicle capability is the caller's job.
// ---------------------------------------------------------------------------

// Smallest ego speed that keeps the ego safely ahead of a following obstacle
// over the first half of the merge window, with the follower allowed to
// accelerate at its maximum.
inline double noncoop_min_speed_ahead(double x_ego, double x_obs, double v_obs,
                                      double a_obs_accel_max, double rho_m,
                                      double d_rss) {
  if (!(rho_m > 0.0)) throw std::invalid_argument("noncoop_min_speed_ahead: rho_m");
  return (2.0 / rho_m) * (x_obs - x_ego + 0.5 * v_obs * rho_m +
                          a_obs_accel_max * rho_m * rho_m / 8.0 + d_rss);
}

// Largest ego speed that keeps the ego safely behind a leading obstacle over
// the full merge window.
inline double noncoop_max_speed_behind(double x_ego, double x_obs, double v_obs,
                                       double rho_m, double d_rss) {
  if (!(rho_m > 0.0)) throw std::invalid_argument("noncoop_max_speed_behind: rho_m");
  return v_obs + (x_obs - x_ego - d_rss) / rho_m;
}

// Cooperative case, ego ahead: largest speed the following obstacle may hold
// after the negotiation window so that it stays clear of the proposed CP.
inline double coop_max_obstacle_speed_ego_ahead(double x_obs, double v_obs,
                                                double p_c, double d_rss_star,
                                                double rho_c, double rho_m) {
  if (!(rho_c > 0.0) || !(rho_m > 0.0))
    throw std::invalid_argument("coop_max_obstacle_speed_ego_ahead: thresholds");
  return (p_c - d_rss_star - x_obs - 0.5 * v_obs * rho_c) /
         (0.5 * rho_c + 0.5 * rho_m);
}

// Cooperative case, ego behind: smallest speed the leading obstacle must
// reach so the braking ego stays safe through the negotiation window.
inline double coop_min_obstacle_speed_ego_behind(double x_ego, double v_ego,
                                                 double x_obs, double v_obs,
                                                 double a_ego_brake_min,
                                                 double rho_c, double d_rss) {
  if (!(rho_c > 0.0))
    throw std::invalid_argument("coop_min_obstacle_speed_ego_behind: rho_c");
  return (2.0 / rho_c) * (x_ego - x_obs + v_ego * rho_c -
                          0.5 * a_ego_brake_min * rho_c * rho_c + d_rss) -
         v_obs;
}

// ---------------------------------------------------------------------------
// Decision engine
// ---------------------------------------------------------------------------

// One vehicle as the rule engine sees it.
struct AgentView {
  int id = 0;
  VehicleState state;
  RssParams rss;
  double v_max = 40.0;
};

enum class NegotiationPhase { Idle, Waiting, Accepted, Failed };

// Negotiation / halt bookkeeping carried between decide() calls. Explicit
// input/output record; decide never mutates shared state.
struct DeciderState {
  NegotiationPhase phase = NegotiationPhase::Idle;
  int target_obstacle_id = -1;
  int target_gap = -1;
  double first_msg_time = std::numeric_limits<double>::quiet_NaN();
  double hold_speed = std::numeric_limits<double>::quiet_NaN();
  double proposed_p_c = std::numeric_limits<double>::quiet_NaN();
  double d_rss_star = std::numeric_limits<double>::quiet_NaN();
  CoopRequest request = CoopRequest::SlowDown;
  double accepted_v_obs_star = std::numeric_limits<double>::quiet_NaN();
  std::vector<int> attempted; // obstacle ids already negotiated with
  double infeasible_since = std::numeric_limits<double>::quiet_NaN();
  bool halted = false;
};

// Per-gap feasibility assessment. Gap g sits between obstacles[g-1]
// (follower, absent for g=0) and obstacles[g] (leader, absent for g=n).
struct GapAssessment {
  int index = 0;
  int follower = -1;
  int leader = -1;
  double v_lo = 0.0;      // clamped to [0, v_max]
  double v_hi = 0.0;
  double raw_lo = 0.0;    // solver outputs before clamping
  double raw_hi = 0.0;
  bool feasible = false;
  double deficit = 0.0;   // how far outside the envelope when infeasible
};

struct DecideConfig {
  double halt_window = 1.0;  // persistence of infeasibility before halting [s]
  double halt_margin = 5.0;  // extra stopping margin before the lane end [m]
};

struct DecideOutcome {
  MergeDecision decision;
  DeciderState state;
  std::optional<CoopMessage> outgoing; // present when a negotiation starts
};

namespace detail {

// The safe-distance formula is a center-to-center requirement already; the
// decision layer additionally adds the half-length sum so that *bumper* gaps
// clear the formula value, which is what the safety monitor checks.
inline double spacing_requirement(double v_rear, double v_front,
                                  const RssParams& rear_rss,
                                  double front_brake_max, double l_rear,
                                  double l_front) {
  return rss::longitudinal_safe_distance(v_rear, v_front, rear_rss,
                                         front_brake_max, l_rear, l_front) +
         0.5 * (l_rear + l_front);
}

// The d_rss of the merge inequalities depends on the ego speed being solved
// for. The residual of each self-consistent inequality is strictly monotone
// in v, so the boundary is found by bisection over the achievable range.
template <typename Residual>
inline double bisect_speed(Residual F, double lo, double hi) {
  const bool lo_sign = F(lo) >= 0.0; // callers guarantee a sign change
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((F(mid) >= 0.0) == lo_sign) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Lower speed bound for merging ahead of a follower, self-consistent in
// d_rss. Returns the required minimum at v_max when even the top speed is
// insufficient (a value above v_max signals infeasibility to the caller).
inline double ahead_bound(const AgentView& ego, const AgentView& follower,
                          const MergeParams& mp) {
  const double v_proj =
      follower.state.speed_long + follower.rss.a_accel_max * mp.rho_m / 2.0;
  auto required_min = [&](double v) {
    const double d =
        spacing_requirement(v_proj, std::clamp(v, 0.0, ego.v_max), follower.rss,
                            ego.rss.a_brake_max, follower.state.length,
                            ego.state.length);
    return noncoop_min_speed_ahead(ego.state.x, follower.state.x,
                                   follower.state.speed_long,
                                   follower.rss.a_accel_max, mp.rho_m, d);
  };
  auto residual = [&](double v) { return v - required_min(v); }; // increasing
  if (residual(ego.v_max) < 0.0) return required_min(ego.v_max);
  if (residual(0.0) >= 0.0) return std::min(required_min(0.0), 0.0);
  return bisect_speed(residual, 0.0, ego.v_max);
}

// Upper speed bound for merging behind a leader, same self-consistent
// scheme. A negative return signals that no achievable speed satisfies the
// constraint.
inline double behind_bound(const AgentView& ego, const AgentView& leader,
                           const MergeParams& mp) {
  auto allowed_max = [&](double v) {
    const double d = spacing_requirement(std::clamp(v, 0.0, ego.v_max),
                                         leader.state.speed_long, ego.rss,
                                         leader.rss.a_brake_max,
                                         ego.state.length, leader.state.length);
    return noncoop_max_speed_behind(ego.state.x, leader.state.x,
                                    leader.state.speed_long, mp.rho_m, d);
  };
  auto residual = [&](double v) { return allowed_max(v) - v; }; // decreasing
  if (residual(0.0) < 0.0) return allowed_max(0.0);
  if (residual(ego.v_max) >= 0.0) return std::max(allowed_max(ego.v_max), ego.v_max);
  return bisect_speed(residual, 0.0, ego.v_max);
}

} // namespace detail

// Assess every candidate gap of the sorted obstacle row.
inline std::vector<GapAssessment> assess_gaps(const AgentView& ego,
                                              const std::vector<AgentView>& obstacles,
                                              const MergeParams& mp) {
  for (std::size_t i = 1; i < obstacles.size(); ++i) {
    if (obstacles[i].state.x < obstacles[i - 1].state.x)
      throw std::invalid_argument("assess_gaps: obstacles not sorted by x");
  }
  const int n = static_cast<int>(obstacles.size());
  std::vector<GapAssessment> gaps;
  gaps.reserve(n + 1);
  for (int g = 0; g <= n; ++g) {
    GapAssessment a;
    a.index = g;
    a.follower = g - 1;
    a.leader = g < n ? g : -1;
    a.raw_lo = a.follower >= 0
                   ? detail::ahead_bound(ego, obstacles[a.follower], mp)
                   : 0.0;
    a.raw_hi = a.leader >= 0
                   ? detail::behind_bound(ego, obstacles[a.leader], mp)
                   : ego.v_max;
    a.v_lo = std::clamp(a.raw_lo, 0.0, ego.v_max);
    a.v_hi = std::clamp(a.raw_hi, 0.0, ego.v_max);
    const bool in_envelope = a.raw_lo <= ego.v_max && a.raw_hi >= 0.0;
    a.feasible = in_envelope && a.v_lo <= a.v_hi;
    a.deficit = a.feasible ? 0.0
                           : std::max({a.raw_lo - a.raw_hi,
                                       a.raw_lo - ego.v_max, -a.raw_hi});
    gaps.push_back(a);
  }
  return gaps;
}

// Non-cooperative / cooperative merge decision over one snapshot.
// `cruise_speed` is the reference command when the ego is stopped or keeping
// lane. Obstacles must be sorted ascending in x; ids must be stable.
inline DecideOutcome decide(const AgentView& ego,
                            const std::vector<AgentView>& obstacles,
                            const MergeParams& mp, const LaneGeometry& lane,
                            double elapsed, bool coop_enabled,
                            const DeciderState& prev, double cruise_speed,
                            const DecideConfig& cfg = {}) {
  DecideOutcome out;
  out.state = prev;
  DeciderState& st = out.state;
  MergeDecision& dec = out.decision;

  if (elapsed < mp.t_m_dec) {
    dec.mode = MergeMode::LaneKeep;
    return out;
  }

  const auto gaps = assess_gaps(ego, obstacles, mp);
  const double remaining =
      lane.side_lane_end_x - ego.state.x - 0.5 * ego.state.length;
  const double v_now = ego.state.speed_long;
  // a (near-)stopped ego aims for its cruise speed, otherwise "closest to
  // current" would command a standstill forever
  const double reference = v_now < 1.0 ? cruise_speed : v_now;

  auto pick_best = [&](double ref) -> const GapAssessment* {
    const GapAssessment* best = nullptr;
    double best_cost = std::numeric_limits<double>::infinity();
    for (const auto& g : gaps) {
      if (!g.feasible) continue;
      const double v_star = std::clamp(ref, g.v_lo, g.v_hi);
      const double cost = std::abs(v_star - ref);
      if (cost < best_cost - 1e-12) { // ties resolve to the rearmost gap
        best_cost = cost;
        best = &g;
      }
    }
    return best;
  };

  // Re-merge from standstill: wait until a gap is both rule-feasible and
  // kinematically reachable in the remaining lane.
  if (st.halted) {
    if (const GapAssessment* best = pick_best(cruise_speed)) {
      const double v_star = std::clamp(cruise_speed, best->v_lo, best->v_hi);
      const double reach = best->v_lo * best->v_lo / (2.0 * ego.rss.a_accel_max);
      if (reach <= std::max(remaining - 5.0, 0.0)) {
        st.halted = false;
        st.infeasible_since = std::numeric_limits<double>::quiet_NaN();
        dec.mode = MergeMode::MergeNonCoop;
        dec.target_gap = best->index;
        dec.v_ego_star = v_star;
        return out;
      }
    }
    dec.mode = MergeMode::Halt;
    return out;
  }

  if (st.phase == NegotiationPhase::Accepted) {
    dec.mode = MergeMode::MergeCoop;
    dec.target_gap = st.target_gap;
    dec.v_obs_star = st.accepted_v_obs_star;
    dec.cp_hint = st.proposed_p_c;
    if (st.request == CoopRequest::SlowDown) {
      dec.v_ego_star = st.hold_speed; // slow-down deal: ego keeps its speed
    } else {
      // speed-up deal: the ego may brake (at most a_brake_min) while the
      // leader pulls away; track the opening behind-leader bound.
      double v_cmd = st.hold_speed;
      for (const auto& g : gaps) {
        if (g.index == st.target_gap && g.leader >= 0) {
          v_cmd = std::min(v_cmd, std::max(g.raw_hi, 0.0));
          break;
        }
      }
      dec.v_ego_star = v_cmd;
    }
    return out;
  }

  if (const GapAssessment* best = pick_best(reference)) {
    st.infeasible_since = std::numeric_limits<double>::quiet_NaN();
    if (st.phase == NegotiationPhase::Waiting)
      st.phase = NegotiationPhase::Idle; // non-coop space opened up mid-wait
    dec.mode = MergeMode::MergeNonCoop;
    dec.target_gap = best->index;
    dec.v_ego_star = std::clamp(reference, best->v_lo, best->v_hi);
    return out;
  }

  // No feasible gap. Track how long this has persisted (halt rule).
  if (!std::isfinite(st.infeasible_since)) st.infeasible_since = elapsed;
  const double stop_dist =
      v_now * v_now / (2.0 * ego.rss.a_brake_min) + cfg.halt_margin;
  const bool lane_running_out = remaining <= stop_dist;
  const bool persisted = elapsed - st.infeasible_since >= cfg.halt_window - 1e-9;

  if (lane_running_out && persisted) {
    if (st.phase == NegotiationPhase::Waiting) st.phase = NegotiationPhase::Failed;
    st.halted = true;
    dec.mode = MergeMode::Halt;
    return out;
  }

  if (coop_enabled) {
    if (st.phase == NegotiationPhase::Waiting) {
      if (elapsed - st.first_msg_time < mp.rho_c - 1e-9) {
        dec.mode = MergeMode::NegotiateCoop;
        dec.target_gap = st.target_gap;
        dec.cp_hint = st.proposed_p_c;
        return out;
      }
      st.phase = NegotiationPhase::Failed; // negotiation timed out
    }

    // Ask the bounding vehicle of the least-infeasible gap for room. A
    // follower is asked to slow down (the ego keeps its speed); a leader is
    // asked to speed up. Each obstacle is asked at most once per run.
    auto attempted = [&st](int id) {
      return std::find(st.attempted.begin(), st.attempted.end(), id) !=
             st.attempted.end();
    };
    std::vector<const GapAssessment*> order;
    for (const auto& g : gaps)
      if (g.follower >= 0 || g.leader >= 0) order.push_back(&g);
    std::sort(order.begin(), order.end(),
              [](const GapAssessment* a, const GapAssessment* b) {
                if (a->deficit != b->deficit) return a->deficit < b->deficit;
                return a->index < b->index;
              });
    const double hold = v_now;
    const double horizon = mp.rho_c + 0.5 * mp.rho_m;
    std::optional<CoopMessage> msg;
    const GapAssessment* chosen = nullptr;

    for (const GapAssessment* g : order) {
      // Case 1: ego ahead of the gap follower, follower slows down.
      if (g->follower >= 0 && !attempted(obstacles[g->follower].id)) {
        const AgentView& fol = obstacles[g->follower];
        const bool leader_ok =
            g->leader < 0 || g->raw_hi >= hold; // ego can hold speed under the leader
        if (leader_ok) {
          // Predicted safe distance at the CP with both parties at the held
          // speed (the cooperating follower will not be faster by then).
          const double d_star = detail::spacing_requirement(
              hold, hold, fol.rss, ego.rss.a_brake_max, fol.state.length,
              ego.state.length);
          double p_c = ego.state.x + hold * horizon;
          if (g->leader >= 0) {
            const AgentView& led = obstacles[g->leader];
            const double d_lead = detail::spacing_requirement(
                hold, led.state.speed_long, ego.rss, led.rss.a_brake_max,
                ego.state.length, led.state.length);
            p_c = std::min(p_c, led.state.x +
                                    led.state.speed_long * horizon - d_lead);
          }
          p_c = std::min(p_c, lane.side_lane_end_x - cfg.halt_margin);
          if (p_c > ego.state.x + 10.0) {
            const double v_req = coop_max_obstacle_speed_ego_ahead(
                fol.state.x, fol.state.speed_long, p_c, d_star, mp.rho_c,
                mp.rho_m);
            if (v_req >= 0.0) {
              msg = CoopMessage{ego.id, fol.id, p_c, d_star,
                                CoopRequest::SlowDown, elapsed};
              chosen = g;
              break;
            }
          }
        }
      }
      // Case 2: ego behind the gap leader, leader speeds up.
      if (g->leader >= 0 && !attempted(obstacles[g->leader].id)) {
        const AgentView& led = obstacles[g->leader];
        const bool follower_ok = g->follower < 0 || g->raw_lo <= hold;
        if (led.state.x > ego.state.x && follower_ok) {
          const double d_rss = detail::spacing_requirement(
              hold, led.state.speed_long, ego.rss, led.rss.a_brake_max,
              ego.state.length, led.state.length);
          const double v_req = coop_min_obstacle_speed_ego_behind(
              ego.state.x, hold, led.state.x, led.state.speed_long,
              ego.rss.a_brake_min, mp.rho_c, d_rss);
          if (v_req <= led.v_max) {
            const double p_c =
                led.state.x + std::max(v_req, led.state.speed_long) * horizon -
                d_rss;
            msg = CoopMessage{ego.id, led.id,
                              std::min(p_c, lane.side_lane_end_x - cfg.halt_margin),
                              d_rss, CoopRequest::SpeedUp, elapsed};
            chosen = g;
            break;
          }
        }
      }
    }

    if (msg) {
      st.phase = NegotiationPhase::Waiting;
      st.target_obstacle_id = msg->receiver_id;
      st.target_gap = chosen->index;
      st.first_msg_time = elapsed;
      st.hold_speed = hold;
      st.proposed_p_c = msg->p_c;
      st.d_rss_star = msg->d_rss_star;
      st.request = msg->request;
      st.attempted.push_back(msg->receiver_id);
      out.outgoing = msg;
      dec.mode = MergeMode::NegotiateCoop;
      dec.target_gap = chosen->index;
      dec.cp_hint = msg->p_c;
      return out;
    }
  }

  dec.mode = MergeMode::LaneKeep;
  return out;
}

// Snapshot of the requesting ego as the responder perceives it (V2V beacons
// or onboard sensing); speed-up requests cannot be solved from the message
// alone.
struct EgoSnapshot {
  double x = 0.0;
  double v = 0.0;
  double a_brake_min = 4.0;
};

// One obstacle vehicle's answer to a cooperation request: solve for the
// compliant speed and commit to a bounded acceleration profile.
inline CoopResponse obstacle_respond(const CoopMessage& msg,
                                     const VehicleState& obstacle,
                                     ObstaclePolicy policy,
                                     const RssParams& obstacle_rss,
                                     double obstacle_v_max,
                                     const MergeParams& mp,
                                     const EgoSnapshot& ego, double now) {
  if (!msg.valid()) throw std::invalid_argument("obstacle_respond: bad message");
  CoopResponse resp;
  resp.sender_id = msg.receiver_id;
  resp.receiver_id = msg.sender_id;
  resp.request = msg.request;
  resp.timestamp = now;
  if (policy == ObstaclePolicy::Silent) {
    resp.kind = CoopResponse::Kind::NoReply;
    return resp;
  }
  if (policy == ObstaclePolicy::NonCooperative) {
    resp.kind = CoopResponse::Kind::Reject;
    return resp;
  }
  if (msg.request == CoopRequest::SlowDown) {
    const double v_req = coop_max_obstacle_speed_ego_ahead(
        obstacle.x, obstacle.speed_long, msg.p_c, msg.d_rss_star, mp.rho_c,
        mp.rho_m);
    if (v_req < 0.0) {
      resp.kind = CoopResponse::Kind::Reject; // cannot comply even at standstill
      return resp;
    }
    resp.kind = CoopResponse::Kind::Accept;
    resp.v_obs_star = std::min(obstacle.speed_long, v_req);
    resp.accel_limit = obstacle_rss.a_brake_min;
    return resp;
  }
  const double v_req = coop_min_obstacle_speed_ego_behind(
      ego.x, ego.v, obstacle.x, obstacle.speed_long, ego.a_brake_min, mp.rho_c,
      msg.d_rss_star);
  if (v_req > obstacle_v_max) {
    resp.kind = CoopResponse::Kind::Reject;
    return resp;
  }
  resp.kind = CoopResponse::Kind::Accept;
  resp.v_obs_star =
      std::clamp(std::max(obstacle.speed_long, v_req), 0.0, obstacle_v_max);
  resp.accel_limit = obstacle_rss.a_accel_max;
  return resp;
}

} // namespace lanemerge::rules
