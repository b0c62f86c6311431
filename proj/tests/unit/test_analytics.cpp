#include <doctest.h>

#include <cmath>
#include <random>

#include "roomsense/analytics/comfort.hpp"
#include "roomsense/analytics/feedback.hpp"
#include "roomsense/analytics/occupancy.hpp"
#include "roomsense/analytics/profile.hpp"
#include "roomsense/analytics/weather.hpp"
#include "roomsense/tstore/store.hpp"
#include "support/temp_dir.hpp"

using namespace roomsense;
using namespace roomsense::analytics;
using namespace std::chrono_literals;

namespace {

const SimInstant day0 = *parse_iso8601("2024-03-01");
const ComfortBand humidity_band{Metric::humidity, 40, 50, 15};

Reading reading(Metric m, double v, SimInstant t, std::string room = "dorm1") {
  return Reading{"dev", std::move(room), m, v, t};
}

MacAddress mac(std::string_view s) { return *MacAddress::parse(s); }

}  // namespace

// ---------------------------------------------------------------------------
// comfort

TEST_CASE("comfort score examples") {
  CHECK(comfort_score(45, humidity_band) == 1.0);
  CHECK(comfort_score(25, humidity_band) == 0.0);
  CHECK(comfort_score(30, humidity_band) == doctest::Approx(1.0 / 3.0));
  CHECK(comfort_score(10, humidity_band) == 0.0);
  CHECK(comfort_score(57.5, humidity_band) == doctest::Approx(0.5));
  CHECK(comfort_score(40, humidity_band) == 1.0);
  CHECK(comfort_score(50, humidity_band) == 1.0);
}

TEST_CASE("comfort score breakpoints and continuity on random bands") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-100, 100);
  std::uniform_real_distribution<double> w(0.01, 50);
  for (int i = 0; i < 1000; ++i) {
    ComfortBand b{Metric::temperature, u(rng), 0, w(rng)};
    b.hi = b.lo + w(rng);
    validate_band(b);
    CHECK(comfort_score(b.lo, b) == 1.0);
    CHECK(comfort_score(b.hi, b) == 1.0);
    CHECK(comfort_score(b.lo - b.span, b) == doctest::Approx(0.0));
    CHECK(comfort_score(b.hi + b.span, b) == doctest::Approx(0.0));
    // continuity: a tiny step never changes the score by more than step/span
    const double x = u(rng);
    const double h = 1e-6;
    CHECK(std::abs(comfort_score(x + h, b) - comfort_score(x, b)) <= h / b.span + 1e-12);
    const double s = comfort_score(x, b);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
}

TEST_CASE("band validation") {
  CHECK_THROWS_AS(validate_band({Metric::humidity, 50, 40, 15}), std::invalid_argument);
  CHECK_THROWS_AS(validate_band({Metric::humidity, 40, 40, 15}), std::invalid_argument);
  CHECK_THROWS_AS(validate_band({Metric::humidity, 40, 50, 0}), std::invalid_argument);
  CHECK_THROWS_AS(validate_band({Metric::humidity, NAN, 50, 1}), std::invalid_argument);
  CHECK_NOTHROW(validate_band(default_bands().at(Metric::humidity)));
  CHECK(default_bands().count(Metric::pressure) == 0);
}

TEST_CASE("comfort report flags dry rooms below band") {
  std::vector<Reading> rs;
  for (int i = 0; i < 60; ++i) {
    rs.push_back(reading(Metric::humidity, 28.0, day0 + sim_minutes(i)));
    rs.push_back(reading(Metric::temperature, 23.0, day0 + sim_minutes(i)));
  }
  const auto rep = comfort_report("dorm1", rs, default_bands());
  REQUIRE(rep.metrics.size() == 2);
  const auto& hum = rep.metrics[0].metric == Metric::humidity ? rep.metrics[0] : rep.metrics[1];
  CHECK(hum.flag == ComfortFlag::below_band);
  CHECK(hum.mean_score == doctest::Approx(1 - 12.0 / 15.0));
  REQUIRE(rep.overall);
  CHECK(*rep.overall == doctest::Approx((1.0 + (1 - 12.0 / 15.0)) / 2));
  CHECK_FALSE(rep.light);
}

TEST_CASE("comfort report centred and empty") {
  std::vector<Reading> rs = {reading(Metric::humidity, 45, day0), reading(Metric::temperature, 23, day0)};
  auto rep = comfort_report("r", rs, default_bands());
  REQUIRE(rep.overall);
  CHECK(*rep.overall == 1.0);
  for (const auto& m : rep.metrics) CHECK(m.flag == ComfortFlag::ok);

  rep = comfort_report("r", std::vector<Reading>{}, default_bands());
  CHECK_FALSE(rep.overall);
  for (const auto& m : rep.metrics) CHECK(m.flag == ComfortFlag::no_data);
  CHECK(comfort_flag_name(ComfortFlag::no_data) == "NO_DATA");

  rs = {reading(Metric::temperature, 30, day0)};
  rep = comfort_report("r", rs, default_bands());
  REQUIRE(rep.overall);
  CHECK(*rep.overall == 0.0);  // humidity has no data and is excluded
}

TEST_CASE("comfort report from the store narrows to room and window") {
  testing::TempDir dir;
  tstore::Store store(dir.path(), {.durable = false});
  store.append(Reading{"a", "dorm1", Metric::humidity, 28, day0});
  store.append(Reading{"b", "lab", Metric::humidity, 45, day0});
  store.append(Reading{"a", "dorm1", Metric::humidity, 45, day0 + 2h});
  const auto rep = comfort_report(store, "dorm1", day0, day0 + 1h, default_bands());
  const auto& hum = rep.metrics[0].metric == Metric::humidity ? rep.metrics[0] : rep.metrics[1];
  CHECK(hum.samples == 1);
  CHECK(hum.mean_value == 28);
}

TEST_CASE("light classification") {
  std::vector<Reading> lab, dorm, edge;
  for (int i = 0; i < 100; ++i) {
    lab.push_back(reading(Metric::light, 500 + 2 * i + 1, day0 + sim_minutes(i)));  // mean 600
    dorm.push_back(reading(Metric::light, 2.0 * i, day0 + sim_minutes(i)));        // max 198
  }
  edge = {reading(Metric::light, 200, day0), reading(Metric::light, 400, day0)};
  CHECK(classify_light(lab) == LightClass::adequate);
  CHECK(classify_light(dorm) == LightClass::dim);
  CHECK(classify_light(edge) == LightClass::adequate);
  CHECK(classify_light(edge, 300.01) == LightClass::dim);
  CHECK_FALSE(classify_light(std::vector<Reading>{reading(Metric::humidity, 3, day0)}));
}

// ---------------------------------------------------------------------------
// occupancy and presence

TEST_CASE("occupancy ledger") {
  auto l = occupancy_ledger(day0, {});
  REQUIRE(l.steps.size() == 1);
  CHECK(l.steps[0].count == 0);
  CHECK(l.steps[0].ts == day0);

  std::vector<OccupancyEvent> ev = {
      {"lab", OccupancyKind::camera_count, 2, day0 + 1min},
      {"lab", OccupancyKind::door_open, 1, day0 + 2min},
      {"lab", OccupancyKind::camera_count, -1, day0 + 3min},
      {"lab", OccupancyKind::camera_count, 0, day0 + 4min},
  };
  l = occupancy_ledger(day0, ev);
  REQUIRE(l.steps.size() == 3);
  CHECK(l.steps[1].count == 2);
  CHECK(l.steps[2].count == 0);
  CHECK(l.rejected == 1);
  REQUIRE(l.annotations.size() == 1);
  CHECK(l.annotations[0].kind == OccupancyKind::door_open);
  CHECK(l.count_at(day0 + 2min) == 2);
  CHECK(l.count_at(day0 + 3min) == 2);
  CHECK(l.count_at(day0 + 5min) == 0);
}

TEST_CASE("occupancy ledger never goes negative") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<OccupancyEvent> ev;
    for (int i = 0; i < 50; ++i) {
      const auto kind = static_cast<OccupancyKind>(rng() % 5);
      const double v = std::uniform_int_distribution<int>(-3, 6)(rng);
      ev.push_back({"r", kind, v, day0 + sim_seconds(i)});
    }
    for (const auto& s : occupancy_ledger(day0, ev).steps) CHECK(s.count >= 0);
  }
}

TEST_CASE("presence window") {
  const MacAddress band = mac("C8:0F:10:AA:BB:CC");
  const SimInstant at = day0 + 1h;
  CHECK(presence({{at - 30s, {band}}}, band, at));
  CHECK_FALSE(presence({{at - 121s, {band}}}, band, at));
  CHECK_FALSE(presence({{at - 120s, {band}}}, band, at));
  CHECK(presence({{at - 119s, {band}}}, band, at));
  CHECK(presence({{at, {band}}}, band, at));
  CHECK_FALSE(presence({{at + 1s, {band}}}, band, at));
  CHECK_FALSE(presence({}, band, at));
  CHECK_FALSE(presence({{at - 10s, {mac("00:00:00:00:00:01")}}}, band, at));
}

TEST_CASE("occupancy event validity") {
  CHECK(is_valid(OccupancyEvent{"r", OccupancyKind::camera_count, 3, day0}));
  CHECK_FALSE(is_valid(OccupancyEvent{"r", OccupancyKind::camera_count, 1.5, day0}));
  CHECK_FALSE(is_valid(OccupancyEvent{"r", OccupancyKind::motion, 2, day0}));
  CHECK(is_valid(FeedbackRecord{"r", -1, "", day0}));
  CHECK_FALSE(is_valid(FeedbackRecord{"r", 2, "", day0}));
}

// ---------------------------------------------------------------------------
// profile

TEST_CASE("hourly profile examples") {
  HourlyProfile p;
  CHECK_FALSE(p.predict("lab", Metric::temperature, 9));
  p.update(reading(Metric::temperature, 20.0, day0 + 9h, "lab"));
  CHECK(*p.predict("lab", Metric::temperature, 9) == 20.0);
  p.update(reading(Metric::temperature, 30.0, day0 + 9h + 30min, "lab"));
  CHECK(*p.predict("lab", Metric::temperature, 9) == doctest::Approx(23.0));
  CHECK(p.slot("lab", Metric::temperature, 9)->count == 2);
  CHECK_FALSE(p.predict("lab", Metric::temperature, 10));
  CHECK_FALSE(p.predict("lab", Metric::humidity, 9));
  for (int i = 0; i < 200; ++i) p.update(reading(Metric::temperature, 17.0, day0 + 9h, "lab"));
  CHECK(*p.predict("lab", Metric::temperature, 9) == doctest::Approx(17.0));
  CHECK_THROWS_AS(HourlyProfile(1.0), std::invalid_argument);
  CHECK_THROWS_AS(HourlyProfile(0.0), std::invalid_argument);
}

TEST_CASE("smoother contracts toward a constant input") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-100, 100);
  std::uniform_real_distribution<double> a(0.01, 0.99);
  for (int i = 0; i < 10000; ++i) {
    const double s = u(rng), x = u(rng), alpha = a(rng);
    CHECK(std::abs(smooth(s, x, alpha) - x) <= (1 - alpha) * std::abs(s - x) + 1e-12);
  }
}

TEST_CASE("same training stream gives the same profile") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> noise(0, 0.5);
  HourlyProfile a, b;
  for (int i = 0; i < 7 * 1440; ++i) {
    const Reading r = reading(Metric::temperature, 22 + noise(rng), day0 + sim_minutes(i));
    a.update(r);
    b.update(r);
  }
  CHECK(a.snapshot() == b.snapshot());
  HourlyProfile c = a;
  CHECK(c.snapshot() == a.snapshot());
}

// ---------------------------------------------------------------------------
// weather

TEST_CASE("weather client passes the stub value through and caches it") {
  StubWeatherServer stub(-7.5);
  WeatherClient client(stub.url());
  auto out = client.fetch_outdoor(day0);
  REQUIRE(std::holds_alternative<WeatherSample>(out));
  const auto& s = std::get<WeatherSample>(out);
  CHECK(s.reading.value == -7.5);
  CHECK(s.reading.metric == Metric::outdoor_temperature);
  CHECK(s.reading.device_id == "weather");
  CHECK_FALSE(s.stale);
  CHECK(stub.requests() == 1);

  stub.set_temperature(3.0);
  out = client.fetch_outdoor(day0 + 599s);
  CHECK(std::get<WeatherSample>(out).reading.value == -7.5);
  CHECK(stub.requests() == 1);
  out = client.fetch_outdoor(day0 + 600s);
  CHECK(std::get<WeatherSample>(out).reading.value == 3.0);
  CHECK(stub.requests() == 2);
}

TEST_CASE("weather client falls back to a stale cache") {
  StubWeatherServer stub(4.25);
  WeatherClient client(stub.url(), 500ms);
  REQUIRE(std::holds_alternative<WeatherSample>(client.fetch_outdoor(day0)));
  stub.set_mode(StubWeatherServer::Mode::down);
  auto out = client.fetch_outdoor(day0 + 700s);
  REQUIRE(std::holds_alternative<WeatherSample>(out));
  CHECK(std::get<WeatherSample>(out).stale);
  CHECK(std::get<WeatherSample>(out).reading.value == 4.25);
}

TEST_CASE("weather client with a cold cache reports the provider unavailable") {
  StubWeatherServer stub(1.0);
  stub.set_mode(StubWeatherServer::Mode::bad_payload);
  WeatherClient client(stub.url(), 500ms);
  auto out = client.fetch_outdoor(day0);
  REQUIRE(std::holds_alternative<WeatherError>(out));
  CHECK(weather_error_name(std::get<WeatherError>(out)) == "PROVIDER_UNAVAILABLE");

  // nothing listening at all
  WeatherClient nowhere("http://127.0.0.1:1/weather", 200ms);
  CHECK(std::holds_alternative<WeatherError>(nowhere.fetch_outdoor(day0)));
  CHECK_THROWS_AS(WeatherClient("ftp://x"), std::invalid_argument);
}
