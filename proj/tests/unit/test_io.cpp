#include <doctest.h>

#include "fixtures.hpp"
#include "vsmfarm/io.hpp"

using namespace vsmfarm;

TEST_CASE("configuration round-trips") {
    const auto& cfg = fixtures::benchmark();
    const Json j = to_json(cfg);
    const auto back = config_from_json(j);
    CHECK(dump(to_json(back)) == dump(j));
    CHECK(back.network.feeders.size() == cfg.network.feeders.size());
    CHECK(back.targets.p_grid == cfg.targets.p_grid);
    // Missing keys keep the benchmark defaults.
    CHECK(dump(to_json(config_from_json(Json::object()))) == dump(j));
}

TEST_CASE("controller set round-trips") {
    const auto& a = fixtures::stage_a();
    const Json j = to_json(a);
    const auto back = controllers_from_json(j);
    CHECK(dump(to_json(back)) == dump(j));
    CHECK(back.machines.size() == 4);
    CHECK(back.machines[2].rsc_q.K_i == a.machines[2].rsc_q.K_i);
    CHECK(back.machines[0].vsmp.path == a.machines[0].vsmp.path);
    CHECK_THROWS_AS(controllers_from_json(Json{{"label", "x"}}), ParseError);
}

TEST_CASE("scenario round-trips") {
    const auto sc = Scenario::voltage_dip();
    const Json j = to_json(sc);
    const auto back = scenario_from_json(j);
    CHECK(back.name == sc.name);
    CHECK(back.events.size() == 2);
    CHECK(back.events[0].mode == ScenarioEvent::Mode::Add);
    CHECK(back.events[1].value == sc.events[1].value);
    CHECK(back.outputs == sc.outputs);
    CHECK(dump(to_json(back)) == dump(j));
}

TEST_CASE("malformed documents are rejected") {
    SUBCASE("unknown key") {
        Json j = to_json(fixtures::benchmark());
        j["grid"]["H_system"] = 5.0;
        CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("H_system"), ParseError);
    }
    SUBCASE("wrong type") {
        Json j = to_json(fixtures::benchmark());
        j["grid"]["H_sys"] = "five";
        CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("H_sys"), ParseError);
    }
    SUBCASE("invalid value") {
        Json j = to_json(fixtures::benchmark());
        j["grid"]["H_sys"] = -1.0;
        CHECK_THROWS_AS(config_from_json(j), ParseError);
    }
    SUBCASE("bad event mode") {
        Json j = to_json(Scenario::pref_step());
        j["events"][0]["mode"] = "multiply";
        CHECK_THROWS_AS(scenario_from_json(j), ParseError);
    }
    SUBCASE("syntax error") {
        CHECK_THROWS_WITH_AS(parse_json_text("{\"a\": ", "cfg.json"), doctest::Contains("cfg.json"), ParseError);
    }
    SUBCASE("unreadable file") {
        CHECK_THROWS(load_config("/nonexistent/config.json"));
    }
}
