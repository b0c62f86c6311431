#include <doctest.h>

#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "roomsense/cli/commands.hpp"
#include "roomsense/tstore/store.hpp"
#include "support/temp_dir.hpp"

using namespace roomsense;
using namespace std::chrono_literals;

namespace {

const std::string kDefault = std::string(ROOMSENSE_SOURCE_DIR) + "/scenarios/default.yaml";

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

/// One full default-scenario day, shared by the read-only command tests.
const std::filesystem::path& default_store() {
  static testing::TempDir dir("rs-cli-day");
  static const bool ran = [] {
    const auto r = invoke({"simulate", "--scenario", kDefault, "--store", (dir.path() / "store").string(), "--no-api",
                        "--unpaced", "--log-level", "warn"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return true;
  }();
  (void)ran;
  static const auto root = dir.path() / "store";
  return root;
}

}  // namespace

TEST_CASE("usage errors and help") {
  CHECK(invoke({"--help"}).code == 0);
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"report", "--store", "x"}).code == 2);  // --room is required
  CHECK(invoke({"frobnicate"}).code == 2);
  CHECK(invoke({"query", "--store", default_store().string(), "--from", "yesterday"}).code == 2);
  CHECK(invoke({"query", "--store", default_store().string(), "--metric", "lux"}).code == 2);
}

TEST_CASE("simulate: an unknown room reference exits 2 with a line-anchored diagnostic") {
  testing::TempDir dir("rs-cli-bad");
  std::ifstream in(kDefault);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  const std::string needle = "    room: dorm2\n    signals";
  const auto pos = text.find(needle);
  REQUIRE(pos != std::string::npos);
  text.replace(pos, needle.size(), "    room: attic\n    signals");
  const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
  const auto path = dir.path() / "bad.yaml";
  std::ofstream(path) << text;

  const auto r = invoke({"simulate", "--scenario", path.string(), "--store", (dir.path() / "s").string(), "--no-api"});
  CHECK(r.code == 2);
  CHECK(r.err.find(path.string() + ":" + std::to_string(line) + ":11: unknown room 'attic'") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir.path() / "s"));
  CHECK(invoke({"simulate", "--scenario", (dir.path() / "missing.yaml").string()}).code == 2);
}

TEST_CASE("report: dorm humidity below band, lab light adequate, dorm2 dim") {
  const auto store = default_store().string();
  auto r = invoke({"report", "--store", store, "--room", "dorm1", "--json"});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  const auto& metrics = j["comfort"]["metrics"];
  const auto humidity = std::find_if(metrics.begin(), metrics.end(), [](const nlohmann::json& m) { return m["metric"] == "humidity"; });
  REQUIRE(humidity != metrics.end());
  CHECK((*humidity)["flag"] == "below_band");
  CHECK((*humidity)["mean_score"].get<double>() <= 0.34);

  r = invoke({"report", "--store", store, "--room", "lab", "--json"});
  REQUIRE(r.code == 0);
  j = nlohmann::json::parse(r.out);
  CHECK(j["comfort"]["light"]["class"] == "adequate");
  CHECK(j["occupancy"]["steps"].size() >= 4);

  r = invoke({"report", "--store", store, "--room", "dorm2"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("light        dim") != std::string::npos);
  CHECK(r.out.find("humidity") != std::string::npos);
}

TEST_CASE("report: empty store or unknown room exits 3") {
  testing::TempDir dir("rs-cli-empty");
  CHECK(invoke({"report", "--store", (dir.path() / "nothing").string(), "--room", "lab"}).code == 3);
  std::filesystem::create_directories(dir.path() / "empty");
  CHECK(invoke({"report", "--store", (dir.path() / "empty").string(), "--room", "lab"}).code == 3);
  CHECK(invoke({"report", "--store", default_store().string(), "--room", "attic"}).code == 3);
}

TEST_CASE("export: 60-minute buckets over a full day give 24 rows") {
  const auto r = invoke({"export", "--store", default_store().string(), "--room", "dorm1", "--metric", "temperature",
                      "--bucket", "60", "--from", "2017-03-01T00:00:00Z", "--to", "2017-03-02T00:00:00Z"});
  REQUIRE(r.code == 0);
  const auto ls = lines(r.out);
  REQUIRE(ls.size() == 25);
  CHECK(ls[0] == "bucket_start,mean");
  CHECK(ls[1].rfind("2017-03-01T00:00:00Z,", 0) == 0);
  CHECK(ls[24].rfind("2017-03-01T23:00:00Z,", 0) == 0);

  CHECK(invoke({"export", "--store", default_store().string(), "--room", "dorm1", "--metric", "temperature", "--from",
             "2018-01-01T00:00:00Z", "--to", "2018-01-02T00:00:00Z"})
            .code == 3);
  CHECK(invoke({"export", "--store", default_store().string(), "--room", "dorm1", "--metric", "temperature", "--bucket",
             "0"})
            .code == 2);
}

TEST_CASE("export: a constant signal gives a constant column") {
  const auto r = invoke({"export", "--store", default_store().string(), "--device", "weather", "--metric",
                      "outdoor_temperature", "--bucket", "120"});
  REQUIRE(r.code == 0);
  const auto ls = lines(r.out);
  REQUIRE(ls.size() == 13);
  for (std::size_t i = 1; i < ls.size(); ++i) CHECK(ls[i].substr(ls[i].find(',') + 1) == "4.50");
}

TEST_CASE("query and replay read the store") {
  auto r = invoke({"query", "--store", default_store().string(), "--device", "relay-lab"});
  REQUIRE(r.code == 0);
  const auto ls = lines(r.out);
  REQUIRE(ls.size() == 3);
  CHECK(ls[0] == "timestamp,device_id,room_id,metric,value,unit");
  CHECK(ls[1] == "2017-03-01T09:02:00Z,relay-lab,lab,relay,1.00,bool");
  CHECK(ls[2] == "2017-03-01T17:23:00Z,relay-lab,lab,relay,0.00,bool");

  r = invoke({"replay", "--store", default_store().string(), "--room", "lab"});
  REQUIRE(r.code == 0);
  const auto rows = lines(r.out);
  CHECK(rows[0] == "room_id,metric,hour,prediction,samples");
  // temperature, humidity, light, pressure per hour from the tag
  CHECK(rows.size() == 1 + 4 * 24);

  r = invoke({"replay", "--store", default_store().string(), "--json"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.contains("dorm1"));
  CHECK(j.contains("outdoor"));
}

TEST_CASE("simulate: interrupt mid-run leaves a store that parses cleanly") {
  testing::TempDir dir("rs-cli-int");
  const auto store = dir.path() / "store";
  std::thread stopper([] {
    std::this_thread::sleep_for(800ms);
    cli::interrupt_flag().store(true);
  });
  const auto r = invoke({"simulate", "--scenario", kDefault, "--store", store.string(), "--no-api", "--log-level", "warn"});
  stopper.join();
  CHECK(r.code == 0);
  CHECK(r.out.rfind("interrupted", 0) == 0);

  tstore::Store reopened(store);
  CHECK(reopened.recovery().dropped_rows == 0);
  CHECK(invoke({"report", "--store", store.string(), "--room", "lab"}).code == 0);
}
