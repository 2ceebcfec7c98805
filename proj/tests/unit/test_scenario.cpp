#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "heliotrack/scenario.hpp"

using namespace heliotrack;

namespace {

const char* kMinimal = R"(name: minimal
site:
  start_utc: "2026-03-20T11:00:00Z"
heliostat:
  position: [15.7, 89.2, 0.0]
target:
  center: [0.0, 0.0, 42.3]
  width_m: 8.0
  height_m: 8.0
timeline:
  - {t: 0, mode: target_track}
duration_s: 10
)";

std::string error_of(const std::string& text) {
    try {
        parse_scenario(text, "case.yaml");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::string with(const std::string& extra) { return std::string(kMinimal) + extra; }

}  // namespace

TEST(ScenarioParseTest, MinimalDefaults) {
    const ScenarioConfig c = parse_scenario(kMinimal);
    EXPECT_EQ(c.name, "minimal");
    EXPECT_DOUBLE_EQ(c.scene.site.latitude_deg, kPsaLatitudeDeg);
    EXPECT_DOUBLE_EQ(c.scene.site.timestamp, utc_timestamp(2026, 3, 20, 11));
    EXPECT_EQ(c.camera.width_px(), 800);
    EXPECT_EQ(c.tick_count(), 10);
    EXPECT_EQ(c.timeline.size(), 1u);
    EXPECT_EQ(c.timeline[0].command.mode, HeliostatMode::target_track);
    // Target faces the heliostat when no normal is given.
    const Vec3 to_helio = c.heliostat_position - c.scene.target.center;
    EXPECT_GT(dot(c.scene.target.normal(), to_helio / norm(to_helio)), 0.999);
}

TEST(ScenarioParseTest, BundledScenariosLoad) {
    for (const char* name : {"target_track", "calibration.sun_point", "cloud_pass"}) {
        const ScenarioConfig c = load_scenario(name);
        EXPECT_EQ(c.name, name);
        EXPECT_GT(c.tick_count(), 0);
        EXPECT_NO_THROW(c.validate());
    }
}

TEST(ScenarioParseTest, PedestalTiltInPixels) {
    const ScenarioConfig c = load_scenario("calibration.sun_point");
    ASSERT_TRUE(c.disturbances.pedestal_tilt);
    const PlaneVec px = mrad_to_pixel_error(c.camera, c.disturbances.tilt_mrad);
    EXPECT_NEAR(px.u, 5.0, 1e-9);
    EXPECT_NEAR(px.v, -3.0, 1e-9);
}

TEST(ScenarioParseTest, ManualTimelineEntries) {
    const ScenarioConfig c = load_scenario("target_track");
    ASSERT_EQ(c.timeline.size(), 3u);
    EXPECT_EQ(c.timeline[1].command.mode, HeliostatMode::manual);
    ASSERT_TRUE(c.timeline[1].command.offset_mrad);
    EXPECT_EQ(*c.timeline[1].command.offset_mrad, (PlaneVec{-90.0, 60.0}));
}

TEST(ScenarioErrorTest, UnknownFieldCarriesLocation) {
    const std::string e = error_of(with("bogus: 1\n"));
    EXPECT_NE(e.find("case.yaml:13:1"), std::string::npos) << e;
    EXPECT_NE(e.find("bogus"), std::string::npos) << e;
    EXPECT_NE(e.find("unknown field"), std::string::npos) << e;
}

TEST(ScenarioErrorTest, NestedFieldIsNamed) {
    const std::string e = error_of(with("controller:\n  gain: fast\n"));
    EXPECT_NE(e.find("case.yaml:14:"), std::string::npos) << e;
    EXPECT_NE(e.find("controller.gain"), std::string::npos) << e;
}

TEST(ScenarioErrorTest, Cases) {
    EXPECT_NE(error_of(with("controller: {gain: 2.0}\n")).find("gain"), std::string::npos);
    EXPECT_NE(error_of(with("tick_s: 0\n")).find("tick_s"), std::string::npos);
    EXPECT_NE(error_of(with("seed: 1.5\n")).find("seed"), std::string::npos);
    std::string bad_mode = kMinimal;
    bad_mode.replace(bad_mode.find("target_track"), 12, "parked");
    EXPECT_NE(error_of(bad_mode).find("timeline[0].mode"), std::string::npos);
    std::string bad_time = kMinimal;
    bad_time.replace(bad_time.find("11:00:00Z"), 9, "11:00:00");
    EXPECT_NE(error_of(bad_time).find("site.start_utc"), std::string::npos);
    std::string unordered = kMinimal;
    unordered.replace(unordered.find("duration_s"), 0, "  - {t: -5, mode: stow}\n");
    EXPECT_NE(error_of(unordered).find("time-ordered"), std::string::npos);
    EXPECT_NE(error_of("site: [1, 2]\n").find("site"), std::string::npos);
    EXPECT_NE(error_of(": : :\n  - [").find("case.yaml"), std::string::npos);
}

TEST(ScenarioErrorTest, MissingFileIsConfigError) {
    EXPECT_THROW(load_scenario("/nonexistent/scenario.yaml"), ConfigError);
    try {
        load_scenario("no_such_bundled_scenario");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("no_such_bundled_scenario"), std::string::npos);
    }
}

TEST(ScenarioTest, TickCount) {
    ScenarioConfig c = parse_scenario(kMinimal);
    c.duration_s = 0.0;
    EXPECT_EQ(c.tick_count(), 0);
    c.duration_s = 2.5;
    c.tick_s = 0.5;
    EXPECT_EQ(c.tick_count(), 5);
}

TEST(CalibrationFileTest, RoundTripAndReferenceFromScenario) {
    const auto dir = std::filesystem::temp_directory_path() / "heliotrack_cal_test";
    std::filesystem::create_directories(dir);
    AimingOffset off;
    off.du = 4.958;
    off.dv = -3.029;
    off.samples = 30;
    off.sigma_u = 0.09;
    off.sigma_v = 0.13;
    write_calibration_file(dir / "cal.json", off);
    const AimingOffset back = read_calibration_file(dir / "cal.json");
    EXPECT_DOUBLE_EQ(back.du, off.du);
    EXPECT_DOUBLE_EQ(back.dv, off.dv);
    EXPECT_EQ(back.samples, 30);

    std::ofstream(dir / "s.yaml") << with("calibration_file: cal.json\n");
    const ScenarioConfig c = load_scenario_file(dir / "s.yaml");
    EXPECT_DOUBLE_EQ(c.calibration.du, off.du);
    std::filesystem::remove_all(dir);
}

TEST(HashTest, Fnv1aKnownValues) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}
