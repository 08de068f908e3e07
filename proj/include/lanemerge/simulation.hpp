#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lanemerge/channel.hpp"
#include "lanemerge/core.hpp"
#include "lanemerge/merge_rules.hpp"
#include "lanemerge/potential_field.hpp"
#include "lanemerge/rss.hpp"
#include "lanemerge/scenario.hpp"
#include "lanemerge/sigmoid_planner.hpp"
#include "lanemerge/vehicle_model.hpp"

namespace lanemerge::sim {

struct VehicleRow {
  double x = 0.0, y = 0.0, psi = 0.0, beta = 0.0, r = 0.0, v = 0.0;
  double accel = 0.0, steer = 0.0;
  std::string mode;
};

struct StepDecision {
  rules::MergeMode mode = rules::MergeMode::LaneKeep;
  int target_gap = -1;
  int leader = -1; // vehicle index of the active gap leader, -1 if none
  double path_p_c = std::numeric_limits<double>::quiet_NaN();
};

struct MessageEvent {
  double t = 0.0;
  std::string event; // "sent" or "delivered"
  Payload payload;
};

struct Trace {
  ScenarioConfig config;
  std::vector<double> times;
  std::vector<std::vector<VehicleRow>> rows; // [step][vehicle]
  std::vector<StepDecision> decisions;       // ego decision per step
  std::vector<MessageEvent> messages;
  std::vector<sigmoid::SigmoidPath> paths;   // every path committed by the ego
  std::optional<double> settle_time;         // start of the settlement window
};

struct Metrics {
  bool completed = false;
  std::optional<double> merge_time;
  std::optional<double> path_length;
  double max_abs_sideslip = 0.0;
  int sideslip_sign_changes = 0;
  std::optional<double> min_gap_ratio;
  int rss_violations = 0;
};

namespace harness_detail {

// Settlement: lateral within 0.2 m of the target center and |beta| quiet,
// held for a continuous window.
inline constexpr double kSettleLateralTol = 0.2;
inline constexpr double kSettleBetaTol = 0.005;
inline constexpr double kSettleHold = 0.5;
inline constexpr double kPostSettleRun = 2.0;
inline constexpr double kSignChangeDeadband = 5e-4;

struct CoopProfile {
  bool active = false;
  bool slow_down = true;
  double v_target = 0.0;
  double accel_limit = 0.0;
};

inline double follow_accel(const VehicleState& me, const VehicleState& lead,
                           const RssParams& my_rss, const RssParams& lead_rss,
                           double cruise, const model::VehicleParams& p,
                           std::string& tag) {
  const double gap = bumper_gap(me, lead);
  const double d_req = rss::longitudinal_safe_distance(
      me.speed_long, lead.speed_long, my_rss, lead_rss.a_brake_max, me.length,
      lead.length);
  if (gap < d_req) {
    tag = "RssBrake";
    return -my_rss.a_brake_min;
  }
  if (gap < 1.3 * d_req) {
    tag = "Follow";
    return std::clamp(lead.speed_long - me.speed_long, -my_rss.a_brake_min,
                      my_rss.a_accel_max);
  }
  tag = "Cruise";
  return model::speed_controller(me, cruise, p);
}

} // namespace harness_detail

// Deterministic fixed-step scenario engine.
class Simulator {
 public:
  explicit Simulator(const ScenarioConfig& config) : cfg_(config) {
    if (cfg_.ego_index < 0)
      throw std::invalid_argument("Simulator: config has no ego");
  }

  // A committed path plus the speed its curvature was designed for; the ego
  // does not exceed the design speed while the crossing is in progress.
  struct PlannedPath {
    sigmoid::SigmoidPath path;
    double design_speed = 0.0;
  };

  Trace run() {
    Trace trace;
    trace.config = cfg_;

    const int n_veh = static_cast<int>(cfg_.vehicles.size());
    std::vector<VehicleState> states;
    std::vector<double> cruise(n_veh);
    std::vector<harness_detail::CoopProfile> profiles(n_veh);
    std::vector<std::size_t> next_event(n_veh, 0);
    for (int i = 0; i < n_veh; ++i) {
      states.push_back(cfg_.vehicles[i].initial);
      cruise[i] = cfg_.vehicles[i].cruise_speed;
    }

    const int ego = cfg_.ego_index;
    const VehicleSpec& ego_spec = cfg_.vehicles[ego];
    const double origin_center =
        cfg_.lane.lane_centers[cfg_.lane.nearest_lane(ego_spec.initial.y)];
    const double target_center = cfg_.lane.lane_centers[ego_spec.target_lane];

    Channel channel(cfg_.channel);
    rules::DeciderState decider;
    std::optional<PlannedPath> active_path;
    rules::MergeMode prev_mode = rules::MergeMode::LaneKeep;
    int prev_gap = -1;
    bool settled = false;
    double settle_window_start = std::numeric_limits<double>::quiet_NaN();

    const int max_steps = cfg_.steps();
    for (int k = 0; k <= max_steps; ++k) {
      const double t = k * cfg_.dt;
      if (trace.settle_time &&
          t > *trace.settle_time + harness_detail::kPostSettleRun + 1e-9)
        break;
      if (k == max_steps) {
        // record the terminal state without stepping past the duration
        record_row_(trace, t, states, prev_mode, prev_gap, active_path,
                    std::vector<std::string>(n_veh, "end"));
        break;
      }

      // 1. channel deliveries
      for (const auto& payload : channel.step(t)) {
        trace.messages.push_back({t, "delivered", payload});
        if (std::holds_alternative<rules::CoopMessage>(payload)) {
          const auto& msg = std::get<rules::CoopMessage>(payload);
          const int rec = msg.receiver_id;
          if (rec < 0 || rec >= n_veh || rec == ego) continue;
          rules::EgoSnapshot snap{states[ego].x, states[ego].speed_long,
                                  ego_spec.params.rss.a_brake_min};
          const auto resp = rules::obstacle_respond(
              msg, states[rec], cfg_.vehicles[rec].policy,
              cfg_.vehicles[rec].params.rss, cfg_.vehicles[rec].params.v_max,
              cfg_.merge, snap, t);
          if (resp.kind != rules::CoopResponse::Kind::NoReply) {
            channel.send(resp, t);
            trace.messages.push_back({t, "sent", resp});
          }
          if (resp.kind == rules::CoopResponse::Kind::Accept) {
            profiles[rec].active = true;
            profiles[rec].slow_down = msg.request == rules::CoopRequest::SlowDown;
            profiles[rec].v_target = resp.v_obs_star;
            profiles[rec].accel_limit = resp.accel_limit;
          }
        } else {
          const auto& resp = std::get<rules::CoopResponse>(payload);
          if (resp.receiver_id != ego) continue;
          if (decider.phase == rules::NegotiationPhase::Waiting &&
              resp.sender_id == decider.target_obstacle_id) {
            if (resp.kind == rules::CoopResponse::Kind::Accept) {
              decider.phase = rules::NegotiationPhase::Accepted;
              decider.accepted_v_obs_star = resp.v_obs_star;
            } else if (resp.kind == rules::CoopResponse::Kind::Reject) {
              decider.phase = rules::NegotiationPhase::Failed;
            }
          }
        }
      }

      // 2. scheduled events
      for (int i = 0; i < n_veh; ++i) {
        const auto& evs = cfg_.vehicles[i].events;
        while (next_event[i] < evs.size() && evs[next_event[i]].t <= t + 1e-9) {
          cruise[i] = evs[next_event[i]].cruise_speed;
          ++next_event[i];
        }
      }

      // 3. ego decision
      std::vector<rules::AgentView> obstacles;
      for (int i = 0; i < n_veh; ++i) {
        if (i == ego) continue;
        obstacles.push_back({i, states[i], cfg_.vehicles[i].params.rss,
                             cfg_.vehicles[i].params.v_max});
      }
      std::sort(obstacles.begin(), obstacles.end(),
                [](const rules::AgentView& a, const rules::AgentView& b) {
                  return a.state.x < b.state.x;
                });
      rules::AgentView ego_view{ego, states[ego], ego_spec.params.rss,
                                ego_spec.params.v_max};

      rules::MergeDecision decision;
      if (!settled) {
        auto outcome =
            rules::decide(ego_view, obstacles, cfg_.merge, cfg_.lane, t,
                          cfg_.coop_enabled, decider, cruise[ego], cfg_.decide);
        decision = outcome.decision;
        decider = outcome.state;
        if (outcome.outgoing) {
          channel.send(*outcome.outgoing, t);
          trace.messages.push_back({t, "sent", Payload(*outcome.outgoing)});
        }
      } else {
        decision.mode = rules::MergeMode::LaneKeep;
      }

      // 4. path management
      const bool merge_mode = decision.mode == rules::MergeMode::MergeNonCoop ||
                              decision.mode == rules::MergeMode::MergeCoop;
      const bool decision_changed = decision.mode != prev_mode ||
                                    decision.target_gap.value_or(-1) != prev_gap;
      bool aborted = false;
      if (merge_mode) {
        if (decision_changed || !active_path) {
          const auto planned =
              plan_path_(ego_view, obstacles, decision, decider, origin_center,
                         target_center);
          if (planned) {
            active_path = planned;
            trace.paths.push_back(planned->path);
          } else if (active_path && decision_changed) {
            // committed path lost its feasible CP: abort, return to the side
            // lane if the ego is still nearest to it
            aborted = true;
            if (cfg_.lane.nearest_lane(states[ego].y) ==
                cfg_.lane.nearest_lane(origin_center))
              active_path.reset();
          }
        }
      } else if (decision.mode == rules::MergeMode::LaneKeep ||
                 decision.mode == rules::MergeMode::Halt ||
                 decision.mode == rules::MergeMode::NegotiateCoop) {
        if (!settled &&
            cfg_.lane.nearest_lane(states[ego].y) ==
                cfg_.lane.nearest_lane(origin_center)) {
          // dropping a committed crossing mid-way is an abort
          aborted = active_path.has_value();
          active_path.reset();
        }
      }

      // 5. ego command
      double ego_target = cruise[ego];
      switch (decision.mode) {
        case rules::MergeMode::MergeNonCoop:
          ego_target = decision.v_ego_star.value_or(cruise[ego]);
          if (!active_path) {
            // committed but the CP is not reachable yet: hang back below the
            // gap leader so the lead-in room opens up
            const int g = decision.target_gap.value_or(-1);
            if (g >= 0 && g < static_cast<int>(obstacles.size())) {
              ego_target = std::min(
                  ego_target,
                  std::max(obstacles[g].state.speed_long - 2.0, 0.0));
            }
          }
          break;
        case rules::MergeMode::MergeCoop:
          ego_target = decision.v_ego_star.value_or(decider.hold_speed);
          break;
        case rules::MergeMode::NegotiateCoop:
          ego_target = decider.hold_speed;
          if (decider.request == rules::CoopRequest::SpeedUp) {
            // ego-behind case: ease off (bounded by a_brake_min below)
            // while the leader opens the gap, tracking the rising bound
            for (const auto& ob : obstacles) {
              if (ob.id == decider.target_obstacle_id) {
                ego_target = std::clamp(
                    rules::detail::behind_bound(ego_view, ob, cfg_.merge), 0.0,
                    decider.hold_speed);
                break;
              }
            }
          }
          break;
        case rules::MergeMode::Halt:
          ego_target = 0.0;
          break;
        default:
          break;
      }
      if (merge_mode && !active_path) {
        // never outrun the remaining side lane while the crossing is pending
        const double remaining = cfg_.lane.side_lane_end_x - states[ego].x -
                                 0.5 * states[ego].length -
                                 cfg_.decide.halt_margin;
        const double allowance = std::sqrt(
            2.0 * ego_spec.params.rss.a_brake_min * std::max(remaining, 0.0));
        ego_target = std::min(ego_target, allowance);
      }
      if (merge_mode && active_path && !settled)
        ego_target = std::min(ego_target, active_path->design_speed);

      double ego_steer = 0.0;
      if (active_path) {
        ego_steer =
            model::track_path(states[ego], active_path->path, ego_spec.params);
      } else {
        const double ref_y = settled ? target_center : origin_center;
        const auto lane_path =
            sigmoid::straight_path(states[ego].x - 5.0, ref_y, 60.0, 5.0);
        ego_steer = model::track_path(states[ego], lane_path, ego_spec.params);
      }

      double ego_accel;
      const bool ego_coop_hold =
          decision.mode == rules::MergeMode::MergeCoop ||
          decision.mode == rules::MergeMode::NegotiateCoop;
      if (decision.mode == rules::MergeMode::Halt) {
        // firm stop at the comfortable rate, no proportional tail
        ego_accel = -std::min(ego_spec.params.rss.a_brake_min,
                              states[ego].speed_long / cfg_.dt);
      } else if (ego_coop_hold && decider.request == rules::CoopRequest::SpeedUp) {
        ego_accel = model::coop_speed_controller(
            states[ego], ego_target, /*slow_down=*/true,
            ego_spec.params.rss.a_brake_min, ego_spec.params);
      } else if (!merge_mode && decision.mode == rules::MergeMode::LaneKeep &&
                 (settled || t < cfg_.merge.t_m_dec)) {
        // plain lane keeping: cruise with an RSS follow guard in-lane
        std::string tag;
        ego_accel = guarded_cruise_(states, ego, cruise[ego], tag);
      } else {
        ego_accel = model::speed_controller(states[ego], ego_target,
                                            ego_spec.params);
      }

      // 6. obstacle commands
      std::vector<double> accels(n_veh, 0.0);
      std::vector<std::string> tags(n_veh);
      accels[ego] = ego_accel;
      tags[ego] = aborted ? "Abort" : rules::to_string(decision.mode);
      for (int i = 0; i < n_veh; ++i) {
        if (i == ego) continue;
        if (profiles[i].active) {
          accels[i] = model::coop_speed_controller(
              states[i], profiles[i].v_target, profiles[i].slow_down,
              profiles[i].accel_limit, cfg_.vehicles[i].params);
          tags[i] = profiles[i].slow_down ? "CoopSlowDown" : "CoopSpeedUp";
        } else {
          std::string tag;
          accels[i] = guarded_cruise_(states, i, cruise[i], tag);
          tags[i] = tag;
        }
      }

      // 7. record, then integrate
      record_row_(trace, t, states, decision.mode, decision.target_gap.value_or(-1),
                  active_path, tags, accels, ego_steer, aborted);

      for (int i = 0; i < n_veh; ++i) {
        const double steer = i == ego ? ego_steer : 0.0;
        states[i] = model::step_dynamics(states[i], steer, accels[i], cfg_.dt,
                                         cfg_.vehicles[i].params);
      }

      prev_mode = aborted ? rules::MergeMode::Abort : decision.mode;
      prev_gap = decision.target_gap.value_or(-1);

      // 8. settlement detection on the post-step state
      if (!settled) {
        const bool in_band =
            std::abs(states[ego].y - target_center) <
                harness_detail::kSettleLateralTol &&
            std::abs(states[ego].sideslip) < harness_detail::kSettleBetaTol &&
            (prev_mode == rules::MergeMode::MergeNonCoop ||
             prev_mode == rules::MergeMode::MergeCoop);
        const double t_next = (k + 1) * cfg_.dt;
        if (in_band) {
          if (!std::isfinite(settle_window_start)) settle_window_start = t_next;
          if (t_next - settle_window_start >= harness_detail::kSettleHold - 1e-9) {
            settled = true;
            trace.settle_time = settle_window_start;
          }
        } else {
          settle_window_start = std::numeric_limits<double>::quiet_NaN();
        }
      }
    }
    return trace;
  }

 private:
  double guarded_cruise_(const std::vector<VehicleState>& states, int i,
                         double cruise, std::string& tag) {
    // nearest vehicle ahead whose lateral position maps to the same lane
    const int my_lane = cfg_.lane.nearest_lane(states[i].y);
    int lead = -1;
    for (int j = 0; j < static_cast<int>(states.size()); ++j) {
      if (j == i) continue;
      if (cfg_.lane.nearest_lane(states[j].y) != my_lane) continue;
      if (states[j].x <= states[i].x) continue;
      if (lead < 0 || states[j].x < states[lead].x) lead = j;
    }
    if (lead < 0) {
      tag = "Cruise";
      return model::speed_controller(states[i], cruise, cfg_.vehicles[i].params);
    }
    return harness_detail::follow_accel(
        states[i], states[lead], cfg_.vehicles[i].params.rss,
        cfg_.vehicles[lead].params.rss, cruise, cfg_.vehicles[i].params, tag);
  }

  std::optional<PlannedPath> plan_path_(
      const rules::AgentView& ego_view,
      const std::vector<rules::AgentView>& obstacles,
      const rules::MergeDecision& decision, const rules::DeciderState& decider,
      double origin_center, double target_center) {
    const int gap = decision.target_gap.value_or(-1);
    if (gap < 0) return std::nullopt;
    const double w = target_center - origin_center;
    const double v_cmd =
        std::max(decision.v_ego_star.value_or(ego_view.state.speed_long), 3.0);
    // the curve is first driven at the current speed, so the comfort budget
    // must hold for the faster of the two
    const double v_kappa = std::max(v_cmd, ego_view.state.speed_long);
    double kappa = sigmoid::select_kappa(v_kappa, w, cfg_.planner.a_lat_comfort);
    // the whole lead-in + tail must fit in the remaining side lane, with
    // some slack left for the CP window itself
    const double lane_room = cfg_.lane.side_lane_end_x - ego_view.state.x;
    if (lane_room < 6.0) return std::nullopt;
    const double kappa_fit = 6.0 / lane_room;
    if (kappa_fit > 1.0) return std::nullopt;
    kappa = std::max(kappa, kappa_fit);
    const double budget_speed =
        std::sqrt(6.0 * std::sqrt(3.0) * cfg_.planner.a_lat_comfort /
                  (std::abs(w) * kappa * kappa));
    const double design_speed = std::min(v_cmd, budget_speed);

    const int n = static_cast<int>(obstacles.size());
    std::vector<VehicleState> obs_states;
    obs_states.reserve(n);
    for (const auto& o : obstacles) obs_states.push_back(o.state);

    // Spacing requirements include the half-length sum (bumper gaps must
    // clear the formula values) plus a small cushion on the leader side.
    const double cushion = 1.0;
    double d_rss_lead = 0.0, d_rss_star = 0.0, d_rss_next = 0.0;
    if (gap == 0 && n > 0) {
      d_rss_lead = rules::detail::spacing_requirement(
                       v_cmd, obstacles[0].state.speed_long, ego_view.rss,
                       obstacles[0].rss.a_brake_max, ego_view.state.length,
                       obstacles[0].state.length) +
                   cushion;
    }
    if (gap >= 1) {
      const auto& fol = obstacles[gap - 1];
      d_rss_star = rules::detail::spacing_requirement(
          fol.state.speed_long, v_cmd, fol.rss, ego_view.rss.a_brake_max,
          fol.state.length, ego_view.state.length);
      if (gap < n) {
        const auto& led = obstacles[gap];
        d_rss_next = rules::detail::spacing_requirement(
                         v_cmd, led.state.speed_long, ego_view.rss,
                         led.rss.a_brake_max, ego_view.state.length,
                         led.state.length) +
                     cushion;
      }
    }
    const auto interval = sigmoid::cp_feasible_interval(
        ego_view.state, obs_states, gap, d_rss_lead, d_rss_star, d_rss_next);
    if (!interval.feasible) return std::nullopt;

    // lead-in keeps the initial lateral offset of the curve below ~5% of W;
    // the tail clamp keeps the transition mostly complete before the side
    // lane ends
    const double lo_clamp = ego_view.state.x + 3.0 / kappa;
    const double hi_clamp =
        std::min(cfg_.lane.side_lane_end_x - 2.0 / kappa,
                 ego_view.state.x + 250.0);

    field::Scene scene;
    scene.lane = cfg_.lane;
    scene.obstacles = obs_states;
    scene.mode = field::DriveMode::LaneMerging;
    scene.target_x = std::min(interval.upper, hi_clamp) + cfg_.field.d_star;
    scene.target_y = target_center;
    std::vector<rss::SafeDistances> dists;
    dists.reserve(n);
    for (const auto& o : obstacles)
      dists.push_back(rss::safe_distances(ego_view.state, o.state,
                                          ego_view.rss, o.rss));

    std::optional<double> p_c;
    if (decision.mode == rules::MergeMode::MergeCoop &&
        std::isfinite(decider.proposed_p_c)) {
      // honor the negotiated CP, clamped into the currently feasible interval
      double lo = std::max(interval.lower.value_or(lo_clamp), lo_clamp);
      double hi = std::min(interval.upper, hi_clamp);
      if (lo > hi) return std::nullopt;
      p_c = std::clamp(decider.proposed_p_c, lo, hi);
    } else {
      p_c = sigmoid::select_cp(interval, lo_clamp, hi_clamp, w, kappa,
                               origin_center, scene, dists, cfg_.field,
                               ego_view.state.width, cfg_.planner.cp_grid_step);
    }
    if (!p_c) return std::nullopt;

    const double horizon = (*p_c - ego_view.state.x) + 10.0 / kappa + 80.0;
    return PlannedPath{sigmoid::generate_path(ego_view.state.x, w, kappa, *p_c,
                                              origin_center, horizon,
                                              cfg_.planner.path_spacing),
                       design_speed};
  }

  void record_row_(Trace& trace, double t,
                   const std::vector<VehicleState>& states,
                   rules::MergeMode mode, int gap,
                   const std::optional<PlannedPath>& path,
                   const std::vector<std::string>& tags,
                   const std::vector<double>& accels = {},
                   double ego_steer = 0.0, bool aborted = false) {
    const int n_veh = static_cast<int>(states.size());
    trace.times.push_back(t);
    std::vector<VehicleRow> rows(n_veh);
    for (int i = 0; i < n_veh; ++i) {
      const auto& s = states[i];
      rows[i] = {s.x,
                 s.y,
                 s.heading,
                 s.sideslip,
                 s.yaw_rate,
                 s.speed_long,
                 accels.empty() ? 0.0 : accels[i],
                 i == cfg_.ego_index ? ego_steer : 0.0,
                 tags.empty() ? std::string("?") : tags[i]};
    }
    trace.rows.push_back(std::move(rows));

    StepDecision d;
    d.mode = aborted ? rules::MergeMode::Abort : mode;
    d.target_gap = gap;
    if (path) d.path_p_c = path->path.p_c;
    // resolve the gap leader to a vehicle index for the metrics
    if (gap >= 0) {
      std::vector<std::pair<double, int>> order;
      for (int i = 0; i < n_veh; ++i)
        if (i != cfg_.ego_index) order.push_back({states[i].x, i});
      std::sort(order.begin(), order.end());
      if (gap < static_cast<int>(order.size())) d.leader = order[gap].second;
    }
    trace.decisions.push_back(d);
  }

  ScenarioConfig cfg_;
};

inline Trace run_trace(const ScenarioConfig& config) {
  return Simulator(config).run();
}

// Metrics over a finished trace; merge interval = [first non-LaneKeep
// decision, settlement]. The gap-ratio check runs against the active gap
// leader once it is actually ahead of the ego, and against the nearest
// in-lane leader after settlement.
inline Metrics compute_metrics(const Trace& trace) {
  if (trace.rows.empty()) throw std::invalid_argument("compute_metrics: empty trace");
  Metrics m;
  const auto& cfg = trace.config;
  const int ego = cfg.ego_index;
  const int n = static_cast<int>(trace.rows.size());

  int init_step = -1;
  for (int k = 0; k < n; ++k) {
    if (k < static_cast<int>(trace.decisions.size()) &&
        trace.decisions[k].mode != rules::MergeMode::LaneKeep) {
      init_step = k;
      break;
    }
  }
  m.completed = trace.settle_time.has_value();
  const double t_settle =
      trace.settle_time.value_or(trace.times.back());
  if (m.completed) m.merge_time = t_settle - cfg.merge.t_m_dec;

  // path length over the merge interval
  if (init_step >= 0 && m.completed) {
    double len = 0.0;
    for (int k = init_step + 1; k < n && trace.times[k] <= t_settle + 1e-9; ++k) {
      const auto& a = trace.rows[k - 1][ego];
      const auto& b = trace.rows[k][ego];
      len += std::hypot(b.x - a.x, b.y - a.y);
    }
    m.path_length = len;
  }

  // sideslip stats: max over the whole run, sign changes over the merge interval
  int sign = 0;
  for (int k = 0; k < n; ++k) {
    const double beta = trace.rows[k][ego].beta;
    m.max_abs_sideslip = std::max(m.max_abs_sideslip, std::abs(beta));
    const bool in_merge =
        init_step >= 0 && k >= init_step &&
        (!m.completed || trace.times[k] <= t_settle + 1e-9);
    if (!in_merge) continue;
    if (beta > harness_detail::kSignChangeDeadband) {
      if (sign < 0) ++m.sideslip_sign_changes;
      sign = 1;
    } else if (beta < -harness_detail::kSignChangeDeadband) {
      if (sign > 0) ++m.sideslip_sign_changes;
      sign = -1;
    }
  }

  // RSS gap ratio against the relevant leader: counted once the ego has a
  // committed merge path (it is actually crossing) or sits in the target
  // lane; before that the vehicles are in different lanes and no
  // leader-follower relation exists yet.
  if (init_step >= 0) {
    double min_ratio = std::numeric_limits<double>::infinity();
    for (int k = init_step; k < n; ++k) {
      const auto& erow = trace.rows[k][ego];
      int lead = -1;
      const bool merged =
          cfg.lane.nearest_lane(erow.y) == cfg.vehicles[ego].target_lane;
      const bool committed =
          k < static_cast<int>(trace.decisions.size()) &&
          std::isfinite(trace.decisions[k].path_p_c);
      if (committed && trace.decisions[k].leader >= 0 &&
          trace.rows[k][trace.decisions[k].leader].x >= erow.x) {
        lead = trace.decisions[k].leader;
      } else if (merged) {
        const int my_lane = cfg.lane.nearest_lane(erow.y);
        for (int j = 0; j < static_cast<int>(cfg.vehicles.size()); ++j) {
          if (j == ego) continue;
          const auto& orow = trace.rows[k][j];
          if (cfg.lane.nearest_lane(orow.y) != my_lane || orow.x <= erow.x) continue;
          if (lead < 0 || orow.x < trace.rows[k][lead].x) lead = j;
        }
      }
      if (lead < 0) continue;
      const auto& lrow = trace.rows[k][lead];
      const double gap = (lrow.x - erow.x) -
                         0.5 * (cfg.vehicles[ego].initial.length +
                                cfg.vehicles[lead].initial.length);
      const double d_req = rss::longitudinal_safe_distance(
          erow.v, lrow.v, cfg.vehicles[ego].params.rss,
          cfg.vehicles[lead].params.rss.a_brake_max,
          cfg.vehicles[ego].initial.length, cfg.vehicles[lead].initial.length);
      const double ratio =
          std::min(std::max(gap, 0.0) / std::max(d_req, 1e-9), 1e6);
      min_ratio = std::min(min_ratio, ratio);
      if (gap < d_req - 1e-9) ++m.rss_violations;
    }
    if (std::isfinite(min_ratio)) m.min_gap_ratio = min_ratio;
  }
  return m;
}

struct RunResult {
  Trace trace;
  Metrics metrics;
};

inline RunResult run_scenario(const ScenarioConfig& config) {
  RunResult res{run_trace(config), {}};
  res.metrics = compute_metrics(res.trace);
  return res;
}

struct ComparisonRow {
  std::string name;
  Metrics metrics;
  std::optional<double> merge_time_delta_pct; // vs the first scenario
  std::optional<double> path_length_delta_pct;
};

inline std::vector<ComparisonRow> compare_scenarios(
    const std::vector<ScenarioConfig>& configs) {
  if (configs.size() < 2)
    throw std::invalid_argument("compare_scenarios: need at least two configs");
  std::vector<ComparisonRow> rows;
  for (const auto& cfg : configs) {
    ComparisonRow row;
    row.name = cfg.name;
    row.metrics = run_scenario(cfg).metrics;
    rows.push_back(std::move(row));
  }
  const auto& base = rows.front().metrics;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    auto& r = rows[i];
    if (base.merge_time && r.metrics.merge_time && *base.merge_time > 0.0)
      r.merge_time_delta_pct =
          100.0 * (*r.metrics.merge_time - *base.merge_time) / *base.merge_time;
    if (base.path_length && r.metrics.path_length && *base.path_length > 0.0)
      r.path_length_delta_pct = 100.0 * (*r.metrics.path_length - *base.path_length) /
                                *base.path_length;
  }
  return rows;
}

} // namespace lanemerge::sim
