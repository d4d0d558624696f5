#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "sbc/errors.hpp"
#include "sbc/scenario.hpp"

using namespace sbc;
using nlohmann::json;

namespace {

json minimal_doc() {
    return json::parse(R"({
        "vehicles": [
            {"reference": {"type": "hover", "point": [0.0, 0.0, -1.0]}}
        ]
    })");
}

}  // namespace

TEST_CASE("a minimal document fills every default") {
    const ScenarioConfig config = parse_scenario(minimal_doc());
    CHECK(config.dt == 0.02);
    CHECK(config.duration == 10.0);
    CHECK(config.k_s == 100.0);
    CHECK_FALSE(config.snap_bound.has_value());
    CHECK(config.poles == std::array<double, 4>{6.0, 6.6, 7.2, 7.8});
    CHECK(config.geometry.ds == 0.25);
    CHECK(config.geometry.c == 2.0);
    CHECK(config.geometry.shape == SafetyShape::kRectangle);
    CHECK_FALSE(config.retune.enabled);
    REQUIRE(config.vehicle_count() == 1);
    // Missing initial state defaults to rest at the reference start.
    CHECK((config.initial[0].r.array() == Eigen::Vector3d(0.0, 0.0, -1.0).array()).all());
    CHECK(config.initial[0].dr.norm() == 0.0);
}

TEST_CASE("unknown keys are rejected with their dotted path") {
    json doc = minimal_doc();
    doc["surprise"] = 1;
    CHECK_THROWS_WITH_AS(parse_scenario(doc), doctest::Contains("surprise"), ValidationError);

    doc = minimal_doc();
    doc["geometry"] = {{"radius", 1.0}};
    CHECK_THROWS_WITH_AS(parse_scenario(doc), doctest::Contains("geometry.radius"),
                         ValidationError);

    doc = minimal_doc();
    doc["vehicles"][0]["reference"]["spin"] = 2.0;
    CHECK_THROWS_WITH_AS(parse_scenario(doc), doctest::Contains("vehicles[0].reference.spin"),
                         ValidationError);
}

TEST_CASE("field errors carry the schema name of the offender") {
    json doc = minimal_doc();
    doc["geometry"] = {{"D_s", -0.1}};
    CHECK_THROWS_WITH_AS(parse_scenario(doc), doctest::Contains("geometry.D_s"), ValidationError);

    doc = minimal_doc();
    doc["poles"] = {1.0, 2.0, 3.0};
    CHECK_THROWS_WITH_AS(parse_scenario(doc), doctest::Contains("poles"), ValidationError);

    doc = minimal_doc();
    doc["vehicles"][0]["reference"] = {{"type", "bezier"}, {"p0", {0, 0, 0}}, {"T", 1.0}};
    CHECK_THROWS_WITH_AS(parse_scenario(doc), doctest::Contains("vehicles[0].reference.p1"),
                         ValidationError);

    doc = minimal_doc();
    doc["vehicles"] = json::array();
    CHECK_THROWS_WITH_AS(parse_scenario(doc), doctest::Contains("vehicles"), ValidationError);
}

TEST_CASE("overrides accept both aliases and dotted paths") {
    ScenarioConfig config = resolve_scenario("two_quad_pass", {"ks=0"});
    CHECK(config.k_s == 0.0);

    config = resolve_scenario("two_quad_pass", {"ds=0.3", "c=1.5", "shape=cylinder"});
    CHECK(config.geometry.ds == 0.3);
    CHECK(config.geometry.c == 1.5);
    CHECK(config.geometry.shape == SafetyShape::kCylinder);

    config = resolve_scenario("two_quad_pass", {"alpha=55"});
    REQUIRE(config.snap_bound.has_value());
    CHECK(*config.snap_bound == 55.0);

    config = resolve_scenario("two_quad_pass", {"poles=[2,3,4,5]", "geometry.D_s=0.2"});
    CHECK(config.poles == std::array<double, 4>{2.0, 3.0, 4.0, 5.0});
    CHECK(config.geometry.ds == 0.2);

    config = resolve_scenario("two_quad_pass", {"max_tilt_deg=30"});
    CHECK(config.limits.max_tilt == doctest::Approx(radians(30.0)).epsilon(1e-15));

    CHECK_THROWS_AS(resolve_scenario("two_quad_pass", {"no_equals_sign"}), ValidationError);
    CHECK_THROWS_WITH_AS(resolve_scenario("two_quad_pass", {"ds=-0.1"}),
                         doctest::Contains("geometry.D_s"), ValidationError);
}

TEST_CASE("builtins round-trip through their JSON echo") {
    for (const std::string& name : builtin_names()) {
        const ScenarioConfig original = builtin_scenario(name);
        const ScenarioConfig reparsed = parse_scenario(scenario_to_json(original));

        CHECK(reparsed.name == original.name);
        CHECK(reparsed.dt == original.dt);
        CHECK(reparsed.duration == original.duration);
        CHECK(reparsed.k_s == original.k_s);
        CHECK(reparsed.poles == original.poles);
        CHECK(reparsed.geometry.ds == original.geometry.ds);
        CHECK(reparsed.geometry.shape == original.geometry.shape);
        CHECK(reparsed.limits.max_thrust_ratio == original.limits.max_thrust_ratio);
        REQUIRE(reparsed.vehicle_count() == original.vehicle_count());
        for (int i = 0; i < original.vehicle_count(); ++i) {
            CHECK(reparsed.references[static_cast<std::size_t>(i)].kind ==
                  original.references[static_cast<std::size_t>(i)].kind);
            CHECK((reparsed.initial[static_cast<std::size_t>(i)].r.array() ==
                   original.initial[static_cast<std::size_t>(i)].r.array())
                      .all());
        }
    }
}

TEST_CASE("exactly the documented builtins exist") {
    const std::vector<std::string> names = builtin_names();
    REQUIRE(names.size() == 3);
    for (const std::string& name : names) {
        CHECK(!builtin_summary(name).empty());
        CHECK_NOTHROW(builtin_scenario(name).validate());
    }
    CHECK_THROWS_AS(builtin_scenario("warp_drive"), ValidationError);
    CHECK_THROWS_AS(builtin_summary("warp_drive"), ValidationError);
}

TEST_CASE("scenario files resolve by path") {
    const std::filesystem::path path =
        std::filesystem::temp_directory_path() / "sbc_scenario_test.json";
    {
        std::ofstream out(path);
        json doc = minimal_doc();
        doc["name"] = "from_file";
        doc["duration"] = 1.5;
        out << doc.dump(2);
    }
    const ScenarioConfig config = resolve_scenario(path.string(), {"ks=25"});
    CHECK(config.name == "from_file");
    CHECK(config.duration == 1.5);
    CHECK(config.k_s == 25.0);
    std::filesystem::remove(path);

    CHECK_THROWS_WITH_AS(resolve_scenario("/nonexistent/sbc.json"),
                         doctest::Contains("cannot open"), ValidationError);

    const std::filesystem::path bad = std::filesystem::temp_directory_path() / "sbc_bad.json";
    {
        std::ofstream out(bad);
        out << "{ not json";
    }
    CHECK_THROWS_AS(resolve_scenario(bad.string()), ValidationError);
    std::filesystem::remove(bad);
}
