#include <catch2/catch.hpp>

#include <json.hpp>

#include "lanemerge/scenario.hpp"

using namespace lanemerge;
using nlohmann::json;

namespace {

json minimal_config() {
  return json::parse(R"({
    "name": "unit",
    "duration": 10.0,
    "dt": 0.02,
    "lane": {
      "y_left": 7.0, "y_right": -3.5,
      "lane_centers": [0.0, 3.5],
      "side_lane_end_x": 500.0
    },
    "merge": {"rho_m": 4.0, "rho_c": 2.0, "t_m_dec": 1.0, "coop_enabled": false},
    "vehicles": [
      {"name": "ego", "role": "ego", "target_lane": 1,
       "initial": {"x": 0.0, "y": 0.0, "speed": 20.0}},
      {"name": "car1", "role": "obstacle", "policy": "Cooperative",
       "initial": {"x": 60.0, "y": 3.5, "speed": 20.0}}
    ]
  })");
}

} // namespace

TEST_CASE("minimal config parses") {
  const auto res = sim::parse_scenario(minimal_config());
  CAPTURE(res.errors);
  REQUIRE(res.ok());
  const auto& c = *res.config;
  CHECK(c.name == "unit");
  CHECK(c.steps() == 500);
  CHECK(c.ego_index == 0);
  CHECK(c.vehicles[1].policy == rules::ObstaclePolicy::Cooperative);
  CHECK(c.vehicles[0].cruise_speed == Approx(20.0));
  CHECK_FALSE(c.coop_enabled);
  // defaults fill the optional blocks
  CHECK(c.field.valid());
  CHECK(c.channel.valid());
  CHECK(c.planner.valid());
}

TEST_CASE("unknown keys are rejected at every level") {
  auto j = minimal_config();
  j["extra_top"] = 1;
  auto res = sim::parse_scenario(j);
  REQUIRE_FALSE(res.ok());
  CHECK(res.errors.at(0).find("unknown key 'extra_top'") != std::string::npos);

  j = minimal_config();
  j["lane"]["bogus"] = true;
  res = sim::parse_scenario(j);
  REQUIRE_FALSE(res.ok());
  CHECK(res.errors.at(0).find("config.lane: unknown key 'bogus'") !=
        std::string::npos);

  j = minimal_config();
  j["vehicles"][0]["typo_field"] = 3;
  CHECK_FALSE(sim::parse_scenario(j).ok());
}

TEST_CASE("validation names the offending field") {
  auto j = minimal_config();
  j["dt"] = 0.0;
  const auto res = sim::parse_scenario(j);
  REQUIRE_FALSE(res.ok());
  bool mentions_dt = false;
  for (const auto& e : res.errors)
    if (e.find("config.dt") != std::string::npos) mentions_dt = true;
  CHECK(mentions_dt);
}

TEST_CASE("duration must be an integral number of steps") {
  auto j = minimal_config();
  j["duration"] = 10.013;
  CHECK_FALSE(sim::parse_scenario(j).ok());
}

TEST_CASE("exactly one ego is required") {
  auto j = minimal_config();
  j["vehicles"][1]["role"] = "ego";
  CHECK_FALSE(sim::parse_scenario(j).ok());
  j = minimal_config();
  j["vehicles"][0]["role"] = "obstacle";
  CHECK_FALSE(sim::parse_scenario(j).ok());
}

TEST_CASE("ego target lane must exist") {
  auto j = minimal_config();
  j["vehicles"][0]["target_lane"] = 5;
  CHECK_FALSE(sim::parse_scenario(j).ok());
}

TEST_CASE("bad lane geometry is rejected") {
  auto j = minimal_config();
  j["lane"]["lane_centers"] = {3.5, 0.0};
  CHECK_FALSE(sim::parse_scenario(j).ok());
  j = minimal_config();
  j["lane"]["lane_centers"] = {0.0, 9.0}; // outside the boundaries
  CHECK_FALSE(sim::parse_scenario(j).ok());
}

TEST_CASE("policy strings are validated") {
  auto j = minimal_config();
  j["vehicles"][1]["policy"] = "Chatty";
  CHECK_FALSE(sim::parse_scenario(j).ok());
}

TEST_CASE("channel bounds are validated") {
  auto j = minimal_config();
  j["channel"] = {{"delay", -0.1}};
  CHECK_FALSE(sim::parse_scenario(j).ok());
  j = minimal_config();
  j["channel"] = {{"drop_probability", 1.5}};
  CHECK_FALSE(sim::parse_scenario(j).ok());
}

TEST_CASE("events parse and order is preserved") {
  auto j = minimal_config();
  j["vehicles"][1]["events"] = {{{"t", 15.0}, {"cruise_speed", 24.0}}};
  const auto res = sim::parse_scenario(j);
  REQUIRE(res.ok());
  REQUIRE(res.config->vehicles[1].events.size() == 1);
  CHECK(res.config->vehicles[1].events[0].t == Approx(15.0));
  CHECK(res.config->vehicles[1].events[0].cruise_speed == Approx(24.0));
}

TEST_CASE("dotted overrides") {
  auto j = minimal_config();
  REQUIRE(sim::apply_override(j, "merge.rho_c", "3.5"));
  REQUIRE(sim::apply_override(j, "dt", "0.01"));
  const auto res = sim::parse_scenario(j);
  REQUIRE(res.ok());
  CHECK(res.config->merge.rho_c == Approx(3.5));
  CHECK(res.config->dt == Approx(0.01));

  SECTION("overrides introducing unknown keys are rejected downstream") {
    sim::apply_override(j, "merge.rho_q", "1.0");
    CHECK_FALSE(sim::parse_scenario(j).ok());
  }
}

TEST_CASE("text parser flags non-JSON input") {
  const auto res = sim::parse_scenario_text("not json at all {");
  REQUIRE_FALSE(res.ok());
  CHECK(res.errors.at(0).find("not valid JSON") != std::string::npos);
}
