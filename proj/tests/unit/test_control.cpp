#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "heliotrack/control.hpp"
#include "heliotrack/render.hpp"
#include "oracles.hpp"

using namespace heliotrack;

namespace {

constexpr double kCalibTolPx = 0.5;
const CameraModel kCam = CameraModel::reference();

TrackingError err_px(double u, double v) { return make_tracking_error(kCam, {u, v}, 0.0); }

// Sun-pointing frames with the optical axis displaced by a pedestal tilt given in pixels.
std::vector<FrameAnalysis> sun_pointing_frames(PlaneVec tilt_px, int n) {
    const auto v = fixtures::reference_view();
    const PlaneVec tilt = pixel_error_to_mrad(kCam, tilt_px);
    std::vector<FrameAnalysis> out;
    for (int i = 0; i < n; ++i) {
        const double t = i * 1.0;
        const AzEl s = az_el_from_direction(v.scene.sun_at(t));
        const CameraPose pose{v.position, perturb_frame(frame_from_az_el(s.azimuth_deg, s.elevation_deg), tilt)};
        out.push_back(analyze_frame(detect(render(v.scene, kCam, pose, t).image), kCam, {}));
    }
    return out;
}

TickRecord record(double t, PlaneVec cam_err, PlaneVec scada_err, PlaneVec slew = {}) {
    TickRecord r;
    r.time_s = t;
    r.mode = HeliostatMode::target_track;
    r.camera_err_mrad = cam_err;
    r.scada_err_mrad = scada_err;
    r.slew_dps = slew;
    return r;
}

}  // namespace

TEST(ControlStepTest, TwentyPixelExample) {
    const ControllerConfig cfg{0.5, 1.0, 50.0};
    const AxisCommand c = control_step(cfg, kCam, err_px(20.0, 0.0));
    EXPECT_NEAR(c.d_azimuth_mrad, -20.0, 0.05);
    EXPECT_EQ(c.d_elevation_mrad, 0.0);
    EXPECT_NEAR(c.d_azimuth_mrad, -0.5 * std::atan(20.0 / 500.0) * 1e3, 1e-12);
}

TEST(ControlStepTest, ClampedToMaxStep) {
    const ControllerConfig cfg{0.5, 1.0, 10.0};
    const AxisCommand c = control_step(cfg, kCam, err_px(20.0, -200.0));
    EXPECT_EQ(c.d_azimuth_mrad, -10.0);
    EXPECT_EQ(c.d_elevation_mrad, 10.0);
}

TEST(ControlStepTest, DeadbandSuppressesCommand) {
    const ControllerConfig cfg{0.5, 1.0, 50.0};
    EXPECT_EQ(control_step(cfg, kCam, err_px(0.9, -1.0)), (AxisCommand{}));
    EXPECT_NE(control_step(cfg, kCam, err_px(1.01, 0.0)), (AxisCommand{}));
}

TEST(ControlStepTest, DeadbandHonouredOverRandomErrors) {
    const ControllerConfig cfg{0.7, 2.5, 50.0};
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> d(-6.0, 6.0);
    for (int i = 0; i < 1000; ++i) {
        const TrackingError e = err_px(d(rng), d(rng));
        const AxisCommand c = control_step(cfg, kCam, e);
        if (std::max(std::abs(e.error_px.u), std::abs(e.error_px.v)) <= cfg.deadband_px) {
            EXPECT_EQ(c, (AxisCommand{}));
        } else {
            EXPECT_LE(c.d_azimuth_mrad * e.error_px.u, 0.0);
            EXPECT_LE(c.d_elevation_mrad * e.error_px.v, 0.0);
        }
    }
}

TEST(ControlStepTest, ConfigValidation) {
    EXPECT_THROW((ControllerConfig{0.0, 1.0, 50.0}.validate()), std::invalid_argument);
    EXPECT_THROW((ControllerConfig{1.5, 1.0, 50.0}.validate()), std::invalid_argument);
    EXPECT_THROW((ControllerConfig{0.5, -1.0, 50.0}.validate()), std::invalid_argument);
    EXPECT_THROW((ControllerConfig{0.5, 1.0, 0.0}.validate()), std::invalid_argument);
    EXPECT_NO_THROW((ControllerConfig{1.0, 0.0, 1.0}.validate()));
}

TEST(CommandToPoseTest, SceneMovesByCommand) {
    // A direction on the optical axis must appear at the commanded camera-plane angles afterwards.
    for (double el : {5.0, 35.0, 70.0}) {
        const AzEl enc{160.0, el};
        const UnitVec3 axis(frame_from_az_el(enc.azimuth_deg, enc.elevation_deg).forward);
        const AxisCommand cmd{3.0, -2.0};
        const PoseCommand p = command_to_pose(enc, cmd);
        const PlaneVec seen = camera_plane_angles(frame_from_az_el(p.azimuth_deg, p.elevation_deg), axis);
        EXPECT_NEAR(seen.u, cmd.d_azimuth_mrad, 0.02) << el;
        EXPECT_NEAR(seen.v, cmd.d_elevation_mrad, 0.02) << el;
    }
}

TEST(CommandToPoseTest, ProportionalStepReducesError) {
    // Sun-pointing geometry: measured error of the Sun, one P-step, new error is smaller.
    const UnitVec3 sun = direction_from_az_el(150.0, 48.0);
    AzEl pose{151.0, 47.5};
    const ControllerConfig cfg{0.5, 0.0, 50.0};
    double prev = 1e9;
    for (int i = 0; i < 8; ++i) {
        const PlaneVec a = camera_plane_angles(frame_from_az_el(pose.azimuth_deg, pose.elevation_deg), sun);
        const double e = std::hypot(a.u, a.v);
        EXPECT_LT(e, prev);
        prev = e;
        const PlaneVec px = mrad_to_pixel_error(kCam, a);
        const PoseCommand p = command_to_pose(pose, control_step(cfg, kCam, make_tracking_error(kCam, px, 0.0)));
        pose = {p.azimuth_deg, p.elevation_deg};
    }
    EXPECT_LT(prev, 0.2);
}

TEST(CalibrationTest, SingleFrameIsItsOwnDeviation) {
    FrameAnalysis fa;
    fa.principal = {400, 300};
    fa.sun_center = PixelPoint{403.5, 298.0};
    const AimingOffset o = calibrate_aiming({fa});
    EXPECT_EQ(o.du, 3.5);
    EXPECT_EQ(o.dv, -2.0);
    EXPECT_EQ(o.samples, 1);
    EXPECT_EQ(o.sigma_u, 0.0);
    EXPECT_EQ(o.sigma_v, 0.0);
}

TEST(CalibrationTest, NoSunAnywhereThrows) {
    EXPECT_THROW(calibrate_aiming({}), NoValidFrames);
    FrameAnalysis fa;
    EXPECT_THROW(calibrate_aiming({fa, fa}), NoValidFrames);
}

TEST(CalibrationTest, FramesWithoutSunAreSkipped) {
    FrameAnalysis a, b, c;
    a.principal = b.principal = c.principal = {400, 300};
    a.sun_center = PixelPoint{402, 300};
    c.sun_center = PixelPoint{404, 302};
    const AimingOffset o = calibrate_aiming({a, b, c});
    EXPECT_EQ(o.samples, 2);
    EXPECT_DOUBLE_EQ(o.du, 3.0);
    EXPECT_DOUBLE_EQ(o.dv, 1.0);
    EXPECT_NEAR(o.sigma_u, std::sqrt(2.0), 1e-12);
}

TEST(CalibrationTest, RecoversInjectedTilt) {
    const AimingOffset o = calibrate_aiming(sun_pointing_frames({5.0, -3.0}, 30));
    EXPECT_EQ(o.samples, 30);
    EXPECT_NEAR(o.du, 5.0, kCalibTolPx);
    EXPECT_NEAR(o.dv, -3.0, kCalibTolPx);
}

TEST(CalibrationTest, LinearUnderDoubling) {
    const AimingOffset o = calibrate_aiming(sun_pointing_frames({10.0, -6.0}, 30));
    EXPECT_NEAR(o.du, 10.0, kCalibTolPx);
    EXPECT_NEAR(o.dv, -6.0, kCalibTolPx);
}

TEST(CalibrationTest, ZeroDisturbance) {
    const AimingOffset o = calibrate_aiming(sun_pointing_frames({0.0, 0.0}, 10));
    EXPECT_NEAR(o.du, 0.0, kCalibTolPx);
    EXPECT_NEAR(o.dv, 0.0, kCalibTolPx);
}

TEST(ScadaSetpointTest, ZenithSunNorthTarget) {
    SunPosition sun;
    sun.elevation_deg = 90.0;
    sun.direction = UnitVec3(0, 0, 1);
    const AzEl n = scada_setpoint(sun, {0, 0, 0}, {0, 100, 0});
    const double q = rad2deg(kScadaQuantumMrad * 1e-3);
    EXPECT_NEAR(n.elevation_deg, 45.0, q / 2 + 1e-9);
    EXPECT_NEAR(n.azimuth_deg, 0.0, q / 2 + 1e-9);
    const AzEl exact = scada_setpoint(sun, {0, 0, 0}, {0, 100, 0}, 0.0);
    EXPECT_NEAR(exact.elevation_deg, 45.0, 1e-9);
    EXPECT_NEAR(exact.azimuth_deg, 0.0, 1e-9);
}

TEST(ScadaSetpointTest, TargetAlongSun) {
    SunPosition sun;
    sun.elevation_deg = 40.0;
    sun.azimuth_deg = 130.0;
    sun.direction = direction_from_az_el(130.0, 40.0);
    const AzEl n = scada_setpoint(sun, {1, 2, 0}, Vec3{1, 2, 0} + sun.direction.vec() * 50.0, 0.0);
    EXPECT_NEAR(n.azimuth_deg, 130.0, 1e-9);
    EXPECT_NEAR(n.elevation_deg, 40.0, 1e-9);
}

TEST(ScadaSetpointTest, ReflectionLawWithinQuantization) {
    std::mt19937_64 rng(100);
    std::uniform_real_distribution<double> az(0.0, 360.0), el(5.0, 85.0), xy(-300.0, 300.0), h(0.0, 5.0), th(20.0, 120.0);
    const double q = kScadaQuantumMrad;
    for (int i = 0; i < 100; ++i) {
        SunPosition sun;
        sun.azimuth_deg = az(rng);
        sun.elevation_deg = el(rng);
        sun.direction = direction_from_az_el(sun.azimuth_deg, sun.elevation_deg);
        const Vec3 helio{xy(rng), xy(rng), h(rng)};
        const Vec3 target{xy(rng), xy(rng), th(rng)};
        const AzEl n = scada_setpoint(sun, helio, target, q);
        const Vec3 r = oracle::reflect(sun.direction.vec(), direction_from_az_el(n.azimuth_deg, n.elevation_deg).vec());
        const double miss_mrad = angle_between(UnitVec3(r), UnitVec3(target - helio)) * 1e3;
        // Per-axis rounding of the normal by q/2 moves the reflection by at most twice the normal error.
        EXPECT_LE(miss_mrad, std::sqrt(2.0) * q + 1e-9) << i;
    }
}

TEST(ScadaSetpointTest, TargetDistanceAlongLineDoesNotMatter) {
    SunPosition sun;
    sun.elevation_deg = 50.0;
    sun.direction = direction_from_az_el(160.0, 50.0);
    const Vec3 h{15.7, 89.2, 0.0}, t{0, 0, 42.3};
    const AzEl a = scada_setpoint(sun, h, t, 0.0);
    const AzEl b = scada_setpoint(sun, h, h + (t - h) * 3.0, 0.0);
    EXPECT_NEAR(a.azimuth_deg, b.azimuth_deg, 1e-9);
    EXPECT_NEAR(a.elevation_deg, b.elevation_deg, 1e-9);
}

TEST(ScadaSetpointTest, SunBelowHorizonThrows) {
    SunPosition sun;
    sun.elevation_deg = -2.0;
    sun.direction = direction_from_az_el(90.0, -2.0);
    EXPECT_THROW(scada_setpoint(sun, {0, 0, 0}, {0, 1, 1}), SunBelowHorizon);
    EXPECT_THROW(scada_sun_setpoint(sun), SunBelowHorizon);
}

TEST(CompareRunsTest, IdenticalErrorsGiveZeroDifference) {
    RunLog a, b;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 3.0);
    for (int i = 0; i < 50; ++i) {
        const PlaneVec e{n(rng), n(rng)};
        a.records.push_back(record(i, e, e));
        b.records.push_back(record(i, e, e));
    }
    const ErrorSeries es = compare_runs(a, b);
    for (double d : es.azimuth.diff_mrad) EXPECT_EQ(d, 0.0);
    for (double d : es.elevation.diff_mrad) EXPECT_EQ(d, 0.0);
    EXPECT_EQ(es.azimuth.max_abs_diff, 0.0);
    EXPECT_TRUE(es.azimuth.spike_times_s.empty());
}

TEST(CompareRunsTest, MismatchedTimelinesThrow) {
    RunLog a, b;
    a.records.push_back(record(0, {}, {}));
    EXPECT_THROW(compare_runs(a, b), TimestampMismatch);
    b.records.push_back(record(0.5, {}, {}));
    EXPECT_THROW(compare_runs(a, b), TimestampMismatch);
}

TEST(CompareRunsTest, PhasesAndSpikes) {
    RunLog v, s;
    for (int i = 0; i < 40; ++i) {
        const bool slewing = i == 10;
        const double spike = i == 11 ? 12.0 : (i == 30 ? 4.0 : 0.5);
        v.records.push_back(record(i, {spike, -0.2}, {0, 0}, slewing ? PlaneVec{0.5, 0} : PlaneVec{}));
        s.records.push_back(record(i, {0, 0}, {0, 0}));
    }
    v.records[35].camera_err_mrad.reset();
    const ErrorSeries es = compare_runs(v, s);
    EXPECT_EQ(es.phase[9], Phase::steady);
    EXPECT_EQ(es.phase[10], Phase::transition);
    EXPECT_EQ(es.phase[20], Phase::transition);
    EXPECT_EQ(es.phase[21], Phase::steady);
    EXPECT_EQ(es.phase[35], Phase::unavailable);
    EXPECT_TRUE(std::isnan(es.azimuth.diff_mrad[35]));
    EXPECT_EQ(es.transition_ticks, 11);
    EXPECT_EQ(es.steady_ticks, 28);
    EXPECT_DOUBLE_EQ(es.azimuth.transition_max_abs_diff, 12.0);
    EXPECT_DOUBLE_EQ(es.azimuth.steady_max_abs_diff, 4.0);
    EXPECT_EQ(es.azimuth.spike_times_s, std::vector<double>{11.0});
    EXPECT_EQ(es.azimuth.unconfined_excursions, 1);  // the 4 mrad tick at t = 30
    EXPECT_DOUBLE_EQ(es.elevation.max_abs_diff, 0.2);
}

TEST(CompareRunsTest, ModeChangeStartsTransition) {
    RunLog v, s;
    for (int i = 0; i < 30; ++i) {
        v.records.push_back(record(i, {}, {}));
        s.records.push_back(record(i, {}, {}));
        if (i >= 5) v.records.back().mode = HeliostatMode::sun_track;
    }
    const ErrorSeries es = compare_runs(v, s);
    EXPECT_EQ(es.phase[4], Phase::steady);
    EXPECT_EQ(es.phase[5], Phase::transition);
    EXPECT_EQ(es.phase[15], Phase::transition);
    EXPECT_EQ(es.phase[16], Phase::steady);
}

TEST(CompareRunsTest, CsvExport) {
    RunLog a;
    a.records.push_back(record(0, {1.0, 2.0}, {0.5, 0.5}));
    std::ostringstream os;
    write_error_series_csv(os, compare_runs(a, a));
    EXPECT_EQ(os.str(),
              "time_s,axis,vision_err_mrad,scada_err_mrad,diff_mrad\n"
              "0.000,azimuth,1.000000,0.500000,0.500000\n"
              "0.000,elevation,2.000000,0.500000,1.500000\n");
}
