#include <catch2/catch.hpp>

#include <cmath>
#include <random>

#include "lanemerge/rss.hpp"

using namespace lanemerge;

// Independent transcriptions of the two safe-distance formulas, written
// before the library implementation and kept structurally separate from it.
namespace oracle {

double longitudinal(double v_e, double v_f, double t_lag, double a_accel,
                    double a_brake_min, double a_brake_max_front, double l_e,
                    double l_f) {
  const double term1 = v_e * t_lag;
  const double term2 = 0.5 * a_accel * std::pow(t_lag, 2.0);
  const double term3 = (l_e + l_f) / 2.0;
  const double term4 =
      std::pow(v_e + a_accel * t_lag, 2.0) / (2.0 * a_brake_min);
  const double term5 = std::pow(v_f, 2.0) / (2.0 * a_brake_max_front);
  const double bracket = term1 + term2 + term3 + term4 - term5;
  return bracket > 0.0 ? bracket : 0.0;
}

double lateral(double v_e_lat, double v_o_lat, double t_lag,
               double a_lat_accel_e, double a_lat_accel_o,
               double a_lat_brake_e, double a_lat_brake_o, double w_e,
               double w_o, double mu) {
  const double v_e_rho = v_e_lat + a_lat_accel_e * t_lag;
  const double v_o_rho = v_o_lat - a_lat_accel_o * t_lag;
  const double ego_part = (v_e_lat + v_e_rho) / 2.0 * t_lag +
                          std::pow(v_e_rho, 2.0) / (2.0 * a_lat_brake_e);
  const double obs_part = (v_o_lat + v_o_rho) / 2.0 * t_lag +
                          std::pow(v_o_rho, 2.0) / (2.0 * a_lat_brake_o);
  const double bracket = ego_part + (w_e + w_o) / 2.0 - obs_part;
  return mu + (bracket > 0.0 ? bracket : 0.0);
}

} // namespace oracle

TEST_CASE("longitudinal safe distance, fixed points") {
  RssParams p;

  SECTION("standstill leaves only the half-length term") {
    p.t_lag = 0.0;
    CHECK(rss::longitudinal_safe_distance(0.0, 0.0, p, 6.0, 4.0, 4.0) ==
          Approx(4.0));
  }

  SECTION("hand-evaluated nominal case") {
    p.t_lag = 0.5;
    p.a_accel_max = 3.0;
    p.a_brake_min = 4.0;
    // term-by-term: 10 + 0.375 + 4.6 + 57.78125 - 33.3333... = 39.42292
    const double d = rss::longitudinal_safe_distance(20.0, 20.0, p, 6.0, 4.6, 4.6);
    CHECK(d == Approx(39.423).margin(1e-3));
    CHECK(d == Approx(oracle::longitudinal(20, 20, 0.5, 3, 4, 6, 4.6, 4.6)));
  }

  SECTION("fast front vehicle clamps the bracket to zero") {
    p.t_lag = 0.1;
    p.a_accel_max = 1.0;
    p.a_brake_min = 4.0;
    CHECK(rss::longitudinal_safe_distance(0.0, 30.0, p, 4.0, 4.0, 4.0) == 0.0);
  }

  SECTION("parameter errors") {
    CHECK_THROWS_AS(rss::longitudinal_safe_distance(1.0, 1.0, p, -1.0, 4, 4),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        rss::longitudinal_safe_distance(std::nan(""), 1.0, p, 4.0, 4, 4),
        std::invalid_argument);
    RssParams bad = p;
    bad.a_brake_min = 0.0;
    CHECK_THROWS_AS(rss::longitudinal_safe_distance(1.0, 1.0, bad, 4.0, 4, 4),
                    std::invalid_argument);
  }
}

TEST_CASE("lateral safe distance, fixed points") {
  RssParams e, o;

  SECTION("zero motion reduces to mu plus half-widths") {
    e.t_lag = 0.0;
    e.mu = 0.1;
    CHECK(rss::lateral_safe_distance(0.0, 0.0, e, o, 2.0, 2.0) == Approx(2.1));
  }

  SECTION("all-zero case") {
    e.t_lag = 0.0;
    e.mu = 0.0;
    CHECK(rss::lateral_safe_distance(0.0, 0.0, e, o, 0.0, 0.0) == 0.0);
  }

  SECTION("frozen fixture from the independent transcription") {
    e.t_lag = 0.3;
    e.mu = 0.1;
    e.a_accel_lat_max = o.a_accel_lat_max = 0.5;
    e.a_brake_lat_min = o.a_brake_lat_min = 1.0;
    // v_e_rho = 0.65, v_o_rho = -0.65:
    // 0.1725 + 0.21125 + 1.8 - (-0.1725 + 0.21125) = 2.145; + mu = 2.245
    const double d = rss::lateral_safe_distance(0.5, -0.5, e, o, 1.8, 1.8);
    CHECK(d == Approx(2.245).margin(1e-9));
    CHECK(d == Approx(oracle::lateral(0.5, -0.5, 0.3, 0.5, 0.5, 1.0, 1.0, 1.8,
                                      1.8, 0.1)));
  }
}

TEST_CASE("longitudinal distance oracle equivalence on random draws") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> speed(0.0, 40.0);
  std::uniform_real_distribution<double> lag(0.0, 1.5);
  std::uniform_real_distribution<double> accel(0.5, 5.0);
  std::uniform_real_distribution<double> brake(1.0, 10.0);
  std::uniform_real_distribution<double> len(3.0, 8.0);
  for (int i = 0; i < 1000; ++i) {
    RssParams p;
    p.t_lag = lag(rng);
    p.a_accel_max = accel(rng);
    p.a_brake_min = brake(rng);
    p.a_brake_max = p.a_brake_min + brake(rng);
    const double v_e = speed(rng), v_f = speed(rng);
    const double fb = brake(rng);
    const double le = len(rng), lf = len(rng);
    const double got = rss::longitudinal_safe_distance(v_e, v_f, p, fb, le, lf);
    const double want = oracle::longitudinal(v_e, v_f, p.t_lag, p.a_accel_max,
                                             p.a_brake_min, fb, le, lf);
    CHECK(got == Approx(want).epsilon(1e-9).margin(1e-12));
  }
}

TEST_CASE("lateral distance oracle equivalence on random draws") {
  std::mt19937 rng(2025);
  std::uniform_real_distribution<double> vlat(-2.0, 2.0);
  std::uniform_real_distribution<double> lag(0.0, 1.0);
  std::uniform_real_distribution<double> alat(0.1, 2.0);
  std::uniform_real_distribution<double> width(1.2, 2.6);
  std::uniform_real_distribution<double> margin(0.0, 0.5);
  for (int i = 0; i < 1000; ++i) {
    RssParams e, o;
    e.t_lag = lag(rng);
    e.a_accel_lat_max = alat(rng);
    o.a_accel_lat_max = alat(rng);
    e.a_brake_lat_min = alat(rng);
    o.a_brake_lat_min = alat(rng);
    e.mu = margin(rng);
    const double ve = vlat(rng), vo = vlat(rng);
    const double we = width(rng), wo = width(rng);
    const double got = rss::lateral_safe_distance(ve, vo, e, o, we, wo);
    const double want =
        oracle::lateral(ve, vo, e.t_lag, e.a_accel_lat_max, o.a_accel_lat_max,
                        e.a_brake_lat_min, o.a_brake_lat_min, we, wo, e.mu);
    CHECK(got == Approx(want).epsilon(1e-9).margin(1e-12));
    CHECK(got >= e.mu);
  }
}

TEST_CASE("longitudinal distance monotonicity where the bracket is positive") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> speed(0.0, 35.0);
  RssParams p;
  p.t_lag = 0.4;
  for (int i = 0; i < 300; ++i) {
    const double v_e = speed(rng);
    const double v_f = speed(rng);
    const double base = rss::longitudinal_safe_distance(v_e, v_f, p, 6.0, 4.6, 4.6);
    if (base <= 0.0) continue;
    CHECK(rss::longitudinal_safe_distance(v_e + 1.0, v_f, p, 6.0, 4.6, 4.6) >=
          base);
    CHECK(rss::longitudinal_safe_distance(v_e, v_f + 1.0, p, 6.0, 4.6, 4.6) <=
          base);
    CHECK(base >= 0.0);
  }
}
