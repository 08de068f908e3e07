#include <catch2/catch.hpp>

#include <cmath>
#include <optional>
#include <random>

#include "lanemerge/merge_rules.hpp"

using namespace lanemerge;
using namespace lanemerge::rules;

namespace {

// Inequality predicates transcribed directly from the merge rules; the
// brute-force scans below use these, never the solvers.
bool ineq_ahead_ok(double v_e, double x, double x_o, double v_o, double a,
                   double rho_m, double d) {
  return x_o + v_o * rho_m / 2.0 + a * rho_m * rho_m / 8.0 <=
         x + v_e * rho_m / 2.0 - d;
}

bool ineq_behind_ok(double v_e, double x, double x_o, double v_o, double rho_m,
                    double d) {
  return x + v_e * rho_m <= x_o + v_o * rho_m - d;
}

bool ineq_coop_ahead_ok(double v_star, double x_o, double v_o, double p_c,
                        double d_star, double rho_c, double rho_m) {
  return x_o + (v_o + v_star) / 2.0 * rho_c + v_star * rho_m / 2.0 <=
         p_c - d_star;
}

bool ineq_coop_behind_ok(double v_star, double x, double v_e, double x_o,
                         double v_o, double a_brake, double rho_c, double d) {
  return x + v_e * rho_c - a_brake * rho_c * rho_c / 2.0 <=
         x_o + (v_star + v_o) / 2.0 * rho_c - d;
}

// Smallest (or largest) speed on a 0.01 m/s grid satisfying a predicate.
template <typename Pred>
std::optional<double> grid_boundary(Pred ok, bool smallest, double v_max = 60.0) {
  const double step = 0.01;
  if (smallest) {
    for (double v = 0.0; v <= v_max; v += step)
      if (ok(v)) return v;
  } else {
    for (double v = v_max; v >= 0.0; v -= step)
      if (ok(v)) return v;
  }
  return std::nullopt;
}

AgentView make_agent(int id, double x, double v, double length = 4.6) {
  AgentView a;
  a.id = id;
  a.state.x = x;
  a.state.speed_long = v;
  a.state.length = length;
  a.v_max = 25.0;
  return a;
}

} // namespace

TEST_CASE("noncoop_min_speed_ahead fixtures and back-substitution") {
  CHECK(noncoop_min_speed_ahead(50, 50, 0, 0, 4, 0) == Approx(0.0));
  const double v = noncoop_min_speed_ahead(60, 40, 20, 3, 4, 30);
  CHECK(v == Approx(28.0));
  // boundary: equality of the source inequality at the solved speed
  const double lhs = 40 + 20 * 4 / 2.0 + 3 * 16 / 8.0;
  const double rhs = 60 + v * 2.0 - 30;
  CHECK(lhs == Approx(rhs).epsilon(1e-9));
}

TEST_CASE("noncoop_max_speed_behind fixtures") {
  CHECK(noncoop_max_speed_behind(0, 50, 20, 4, 30) == Approx(25.0));
  CHECK(noncoop_max_speed_behind(0, 30, 15, 4, 30) == Approx(15.0));
  CHECK(noncoop_max_speed_behind(0, 10, 20, 4, 30) == Approx(15.0));
}

TEST_CASE("coop solvers fixtures") {
  CHECK(coop_max_obstacle_speed_ego_ahead(40, 22, 120, 25, 1, 4) == Approx(17.6));
  // zero-slack boundary
  const double p_c = 40 + 25 + 22 * 1 / 2.0;
  CHECK(coop_max_obstacle_speed_ego_ahead(40, 22, p_c, 25, 1, 4) ==
        Approx(0.0).margin(1e-12));
  CHECK(coop_min_obstacle_speed_ego_behind(0, 20, 30, 18, 4, 2, 45) ==
        Approx(29.0));
  CHECK(coop_min_obstacle_speed_ego_behind(0, 0, 0, 0, 0, 1, 0) ==
        Approx(0.0).margin(1e-12));
}

TEST_CASE("solver boundaries match brute-force speed scans") {
  std::mt19937 rng(4242);
  std::uniform_real_distribution<double> pos(-80.0, 80.0);
  std::uniform_real_distribution<double> speed(0.0, 30.0);
  std::uniform_real_distribution<double> accel(0.5, 4.0);
  std::uniform_real_distribution<double> rho(1.0, 6.0);
  std::uniform_real_distribution<double> dist(0.0, 60.0);

  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    const double x = pos(rng), x_o = pos(rng), v_o = speed(rng);
    const double a = accel(rng), rho_m = rho(rng), rho_c = rho(rng);
    const double d = dist(rng);
    {
      const double v = noncoop_min_speed_ahead(x, x_o, v_o, a, rho_m, d);
      // boundary: the two sides agree to float precision
      CHECK(x_o + v_o * rho_m / 2.0 + a * rho_m * rho_m / 8.0 ==
            Approx(x + v * rho_m / 2.0 - d).epsilon(1e-9).margin(1e-9));
      if (v >= 0.0 && v <= 60.0) {
        const auto g = grid_boundary(
            [&](double vv) { return ineq_ahead_ok(vv, x, x_o, v_o, a, rho_m, d); },
            true);
        REQUIRE(g.has_value());
        CHECK(std::abs(*g - std::max(v, 0.0)) <= 0.011);
        ++checked;
      }
    }
    {
      const double v = noncoop_max_speed_behind(x, x_o, v_o, rho_m, d);
      CHECK(x + v * rho_m == Approx(x_o + v_o * rho_m - d).epsilon(1e-9).margin(1e-9));
      if (v >= 0.0 && v <= 60.0) {
        const auto g = grid_boundary(
            [&](double vv) { return ineq_behind_ok(vv, x, x_o, v_o, rho_m, d); },
            false);
        REQUIRE(g.has_value());
        CHECK(std::abs(*g - v) <= 0.011);
      }
    }
    {
      const double p_c = pos(rng) + 100.0;
      const double v = coop_max_obstacle_speed_ego_ahead(x_o, v_o, p_c, d, rho_c, rho_m);
      CHECK(x_o + (v_o + v) / 2.0 * rho_c + v * rho_m / 2.0 ==
            Approx(p_c - d).epsilon(1e-9).margin(1e-9));
      if (v >= 0.0 && v <= 60.0) {
        const auto g = grid_boundary(
            [&](double vv) {
              return ineq_coop_ahead_ok(vv, x_o, v_o, p_c, d, rho_c, rho_m);
            },
            false);
        REQUIRE(g.has_value());
        CHECK(std::abs(*g - v) <= 0.011);
      }
    }
    {
      const double v_e = speed(rng), a_b = accel(rng);
      const double v = coop_min_obstacle_speed_ego_behind(x, v_e, x_o, v_o, a_b,
                                                          rho_c, d);
      CHECK(x + v_e * rho_c - a_b * rho_c * rho_c / 2.0 ==
            Approx(x_o + (v + v_o) / 2.0 * rho_c - d).epsilon(1e-9).margin(1e-9));
      if (v >= 0.0 && v <= 60.0) {
        const auto g = grid_boundary(
            [&](double vv) {
              return ineq_coop_behind_ok(vv, x, v_e, x_o, v_o, a_b, rho_c, d);
            },
            true);
        REQUIRE(g.has_value());
        CHECK(std::abs(*g - v) <= 0.011);
      }
    }
  }
  CHECK(checked > 20); // the draw ranges must actually exercise the scan
}

TEST_CASE("decide basics") {
  MergeParams mp;
  mp.t_m_dec = 1.0;
  LaneGeometry lane;
  lane.y_left = 7.0;
  lane.y_right = -3.5;
  lane.lane_centers = {0.0, 3.5};
  lane.side_lane_end_x = 1e9;
  DeciderState st;
  AgentView ego = make_agent(0, 0.0, 20.0);

  SECTION("lane keep before the decision time") {
    auto out = decide(ego, {}, mp, lane, 0.5, false, st, 20.0);
    CHECK(out.decision.mode == MergeMode::LaneKeep);
  }

  SECTION("empty road is a trivially feasible merge at current speed") {
    auto out = decide(ego, {}, mp, lane, 2.0, false, st, 20.0);
    CHECK(out.decision.mode == MergeMode::MergeNonCoop);
    REQUIRE(out.decision.v_ego_star.has_value());
    CHECK(*out.decision.v_ego_star == Approx(20.0));
    CHECK(out.decision.target_gap.value_or(-1) == 0);
  }

  SECTION("single slow distant leader keeps current speed") {
    std::vector<AgentView> obs{make_agent(1, 300.0, 15.0)};
    auto out = decide(ego, obs, mp, lane, 2.0, false, st, 20.0);
    CHECK(out.decision.mode == MergeMode::MergeNonCoop);
    CHECK(*out.decision.v_ego_star == Approx(20.0));
  }

  SECTION("unsorted obstacles are rejected") {
    std::vector<AgentView> obs{make_agent(1, 50.0, 20.0),
                               make_agent(2, 10.0, 20.0)};
    CHECK_THROWS_AS(decide(ego, obs, mp, lane, 2.0, false, st, 20.0),
                    std::invalid_argument);
  }
}

TEST_CASE("decide returns speeds satisfying the source inequalities") {
  MergeParams mp;
  LaneGeometry lane;
  lane.lane_centers = {0.0, 3.5};
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> gap(40.0, 160.0);
  std::uniform_real_distribution<double> speed(8.0, 24.0);
  DeciderState st;

  for (int trial = 0; trial < 100; ++trial) {
    AgentView ego = make_agent(0, 0.0, speed(rng));
    std::vector<AgentView> obs{
        make_agent(1, -gap(rng), speed(rng)),
        make_agent(2, gap(rng), speed(rng)),
    };
    auto out = decide(ego, obs, mp, lane, 2.0, false, st, ego.state.speed_long);
    if (out.decision.mode != MergeMode::MergeNonCoop) continue;
    const double v_star = *out.decision.v_ego_star;
    const int g = *out.decision.target_gap;
    // both bounds of the chosen gap must hold with d_rss recomputed at v_star
    if (g >= 1) {
      const auto& fol = obs[g - 1];
      const double v_proj =
          fol.state.speed_long + fol.rss.a_accel_max * mp.rho_m / 2.0;
      const double d = rss::longitudinal_safe_distance(
          v_proj, v_star, fol.rss, ego.rss.a_brake_max, fol.state.length,
          ego.state.length);
      CHECK(ineq_ahead_ok(v_star + 1e-6, ego.state.x, fol.state.x,
                          fol.state.speed_long, fol.rss.a_accel_max, mp.rho_m,
                          d));
    }
    if (g < static_cast<int>(obs.size())) {
      const auto& led = obs[g];
      const double d = rss::longitudinal_safe_distance(
          v_star, led.state.speed_long, ego.rss, led.rss.a_brake_max,
          ego.state.length, led.state.length);
      CHECK(ineq_behind_ok(v_star - 1e-6, ego.state.x, led.state.x,
                           led.state.speed_long, mp.rho_m, d));
    }
  }
}

TEST_CASE("decide negotiation lifecycle with a silent counterpart") {
  MergeParams mp; // rho_c = 2
  LaneGeometry lane;
  lane.lane_centers = {0.0, 3.5};
  lane.side_lane_end_x = 1e9;

  // pinched row: follower right behind, leader close ahead, trailing guard
  AgentView ego = make_agent(0, 0.0, 20.0);
  std::vector<AgentView> obs{
      make_agent(1, -80.0, 20.0),
      make_agent(2, -5.0, 20.0),
      make_agent(3, 68.0, 20.0),
  };

  DeciderState st;
  auto out = decide(ego, obs, mp, lane, 1.0, true, st, 20.0);
  REQUIRE(out.decision.mode == MergeMode::NegotiateCoop);
  REQUIRE(out.outgoing.has_value());
  CHECK(out.outgoing->request == CoopRequest::SlowDown);
  CHECK(out.outgoing->receiver_id == 2);
  CHECK(out.outgoing->timestamp == Approx(1.0));
  CHECK(out.outgoing->p_c > ego.state.x);
  CHECK(out.outgoing->d_rss_star > 0.0);
  st = out.state;

  // still waiting strictly inside the window
  out = decide(ego, obs, mp, lane, 2.9, true, st, 20.0);
  CHECK(out.decision.mode == MergeMode::NegotiateCoop);
  CHECK_FALSE(out.outgoing.has_value());
  st = out.state;

  // timeout at exactly rho_c after the first message
  out = decide(ego, obs, mp, lane, 3.0, true, st, 20.0);
  CHECK(out.decision.mode != MergeMode::NegotiateCoop);
  CHECK(out.state.phase == NegotiationPhase::Failed);
}

TEST_CASE("decide accepts a negotiated merge") {
  MergeParams mp;
  LaneGeometry lane;
  lane.lane_centers = {0.0, 3.5};
  AgentView ego = make_agent(0, 0.0, 20.0);
  std::vector<AgentView> obs{
      make_agent(1, -80.0, 20.0),
      make_agent(2, -5.0, 20.0),
      make_agent(3, 68.0, 20.0),
  };
  DeciderState st;
  auto out = decide(ego, obs, mp, lane, 1.0, true, st, 20.0);
  REQUIRE(out.decision.mode == MergeMode::NegotiateCoop);
  st = out.state;
  st.phase = NegotiationPhase::Accepted; // harness records the Accept
  st.accepted_v_obs_star = 12.0;

  out = decide(ego, obs, mp, lane, 1.5, true, st, 20.0);
  CHECK(out.decision.mode == MergeMode::MergeCoop);
  CHECK(out.decision.v_ego_star.value_or(0) == Approx(20.0));
  CHECK(out.decision.v_obs_star.value_or(0) == Approx(12.0));
  CHECK(out.decision.cp_hint.has_value());
}

TEST_CASE("decide halts before the lane end and re-merges from standstill") {
  MergeParams mp;
  LaneGeometry lane;
  lane.lane_centers = {0.0, 3.5};
  lane.side_lane_end_x = 60.0;

  AgentView ego = make_agent(0, 20.0, 15.0);
  // same pinched row, no cooperation allowed
  std::vector<AgentView> obs{
      make_agent(1, -80.0, 20.0),
      make_agent(2, 15.0, 20.0),
      make_agent(3, 88.0, 20.0),
  };
  DeciderState st;
  auto out = decide(ego, obs, mp, lane, 1.0, false, st, 15.0);
  CHECK(out.decision.mode == MergeMode::LaneKeep); // infeasible but lane remains
  st = out.state;

  // one second later the stopping margin is gone
  ego.state.x = 32.0;
  out = decide(ego, obs, mp, lane, 2.0, false, st, 15.0);
  CHECK(out.decision.mode == MergeMode::Halt);
  CHECK(out.state.halted);
  st = out.state;

  // halted ego waits while the row is still pinched
  ego.state.x = 50.0;
  ego.state.speed_long = 0.0;
  out = decide(ego, obs, mp, lane, 8.0, false, st, 15.0);
  CHECK(out.decision.mode == MergeMode::Halt);
  st = out.state;

  // the road clears: re-merge with a reachable commanded speed
  std::vector<AgentView> far{make_agent(3, 500.0, 20.0)};
  out = decide(ego, far, mp, lane, 15.0, false, st, 15.0);
  CHECK(out.decision.mode == MergeMode::MergeNonCoop);
  CHECK_FALSE(out.state.halted);
  REQUIRE(out.decision.v_ego_star.has_value());
  CHECK(*out.decision.v_ego_star > 0.0);
}

TEST_CASE("obstacle_respond policies") {
  MergeParams mp;
  mp.rho_c = 1.0;
  mp.rho_m = 4.0;
  RssParams rss_p;
  VehicleState obs;
  obs.x = 40.0;
  obs.speed_long = 22.0;
  EgoSnapshot ego{0.0, 20.0, 4.0};

  CoopMessage msg;
  msg.sender_id = 0;
  msg.receiver_id = 2;
  msg.p_c = 120.0;
  msg.d_rss_star = 25.0;
  msg.request = CoopRequest::SlowDown;
  msg.timestamp = 1.0;

  SECTION("cooperative slow-down matches the closed-form solver") {
    auto r = obstacle_respond(msg, obs, ObstaclePolicy::Cooperative, rss_p, 30.0,
                              mp, ego, 1.1);
    REQUIRE(r.kind == CoopResponse::Kind::Accept);
    CHECK(r.v_obs_star == Approx(17.6));
    CHECK(r.accel_limit == Approx(rss_p.a_brake_min));
  }

  SECTION("silent policy never replies") {
    auto r = obstacle_respond(msg, obs, ObstaclePolicy::Silent, rss_p, 30.0, mp,
                              ego, 1.1);
    CHECK(r.kind == CoopResponse::Kind::NoReply);
  }

  SECTION("non-cooperative policy rejects") {
    auto r = obstacle_respond(msg, obs, ObstaclePolicy::NonCooperative, rss_p,
                              30.0, mp, ego, 1.1);
    CHECK(r.kind == CoopResponse::Kind::Reject);
  }

  SECTION("impossible slow-down is rejected") {
    msg.p_c = 50.0; // would need a negative speed
    auto r = obstacle_respond(msg, obs, ObstaclePolicy::Cooperative, rss_p, 30.0,
                              mp, ego, 1.1);
    CHECK(r.kind == CoopResponse::Kind::Reject);
  }

  SECTION("speed-up beyond the vehicle limit is rejected") {
    msg.request = CoopRequest::SpeedUp;
    msg.d_rss_star = 300.0; // demands an absurd speed
    auto r = obstacle_respond(msg, obs, ObstaclePolicy::Cooperative, rss_p, 30.0,
                              mp, ego, 1.1);
    CHECK(r.kind == CoopResponse::Kind::Reject);
  }

  SECTION("already-compliant speed-up keeps the current speed") {
    msg.request = CoopRequest::SpeedUp;
    msg.p_c = 80.0;
    msg.d_rss_star = 10.0;
    obs.x = 120.0; // far ahead: constraint already satisfied
    auto r = obstacle_respond(msg, obs, ObstaclePolicy::Cooperative, rss_p, 30.0,
                              mp, ego, 1.1);
    REQUIRE(r.kind == CoopResponse::Kind::Accept);
    CHECK(r.v_obs_star == Approx(obs.speed_long));
    CHECK(r.accel_limit == Approx(rss_p.a_accel_max));
  }
}

TEST_CASE("decide determinism") {
  MergeParams mp;
  LaneGeometry lane;
  lane.lane_centers = {0.0, 3.5};
  AgentView ego = make_agent(0, 0.0, 20.0);
  std::vector<AgentView> obs{make_agent(1, -50.0, 18.0),
                             make_agent(2, 60.0, 21.0)};
  DeciderState st;
  auto a = decide(ego, obs, mp, lane, 2.0, true, st, 20.0);
  auto b = decide(ego, obs, mp, lane, 2.0, true, st, 20.0);
  CHECK(a.decision.mode == b.decision.mode);
  CHECK(a.decision.target_gap.value_or(-1) == b.decision.target_gap.value_or(-1));
  CHECK(a.decision.v_ego_star.value_or(-1) == b.decision.v_ego_star.value_or(-1));
}
