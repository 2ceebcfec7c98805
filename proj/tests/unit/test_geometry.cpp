#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "heliotrack/geometry.hpp"

using namespace heliotrack;

namespace {

constexpr double kRoundTripTolRad = 1e-9;
constexpr double kGridResidualPx = 1e-6;
// Frozen from the one-off sweep of 20000 random pairs (measured 1.3e-12 px).
constexpr double kMidpointSweepBoundPx = 1e-9;
// Worst relative deviation of per-axis mrad vs. the 3D angle within 50 px (measured 1.6e-3).
constexpr double kPixelAngleRelBound = 2e-3;

UnitVec3 random_dir(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return UnitVec3(n(rng), n(rng), n(rng));
}

CameraFrame frame_with_forward(const Vec3& fwd, std::mt19937_64& rng) {
    Vec3 r;
    do {
        r = cross(fwd, random_dir(rng).vec());
    } while (norm(r) < 1e-3);
    r = r / norm(r);
    return {r, cross(fwd, r), fwd};
}

}  // namespace

TEST(CameraModelTest, ReferenceCameraConstants) {
    const CameraModel cam = CameraModel::reference();
    EXPECT_EQ(cam.width_px(), 800);
    EXPECT_EQ(cam.height_px(), 600);
    EXPECT_NEAR(cam.pitch_mm(), 0.0047, 1e-12);
    EXPECT_NEAR(cam.focal_px(), 500.0, 1e-9);
    EXPECT_EQ(cam.principal(), (PixelPoint{400.0, 300.0}));
}

TEST(CameraModelTest, RejectsInvalidIntrinsics) {
    EXPECT_THROW(CameraModel(0, 600, 3.76, 2.74, 2.35), std::invalid_argument);
    EXPECT_THROW(CameraModel(800, 600, -1.0, 2.74, 2.35), std::invalid_argument);
    EXPECT_THROW(CameraModel(800, 600, 3.76, 2.74, 0.0), std::invalid_argument);
    // 20% non-square pixels
    EXPECT_THROW(CameraModel(800, 600, 3.76, 3.38, 2.35), std::invalid_argument);
    EXPECT_THROW(CameraModel(800, 600, 3.76, 2.74, 2.35, {900.0, 300.0}), std::invalid_argument);
}

TEST(ProjectionTest, OpticalAxisHitsPrincipalPoint) {
    const auto cam = CameraModel::reference();
    EXPECT_EQ(project_direction(cam, UnitVec3(0, 0, 1)), (PixelPoint{400.0, 300.0}));
}

TEST(ProjectionTest, TangentExample) {
    // tan(theta_x) = 0.2, f = 500 px: 100 px right of center
    const auto cam = CameraModel::reference();
    const PixelPoint p = project_direction(cam, UnitVec3(0.2, 0.0, 1.0));
    EXPECT_NEAR(p.u, 500.0, 1e-9);
    EXPECT_NEAR(p.v, 300.0, 1e-9);
}

TEST(ProjectionTest, BehindCameraThrows) {
    const auto cam = CameraModel::reference();
    EXPECT_THROW(project_direction(cam, UnitVec3(0, 0, -1)), BehindCamera);
    EXPECT_THROW(project_direction(cam, UnitVec3(1, 0, 0)), BehindCamera);
}

TEST(ProjectionTest, RoundTripRandomDirections) {
    const auto cam = CameraModel::reference();
    std::mt19937_64 rng(1);
    for (int i = 0; i < 2000; ++i) {
        UnitVec3 d = random_dir(rng);
        if (d.z() < 0.05) continue;
        const UnitVec3 back = backproject_pixel(cam, project_direction(cam, d));
        EXPECT_LT(angle_between(d, back), kRoundTripTolRad);
    }
}

TEST(ProjectionTest, PixelGridRoundTrip) {
    const auto cam = CameraModel::reference();
    for (int y = 0; y < 600; y += 37) {
        for (int x = 0; x < 800; x += 41) {
            const PixelPoint p{x + 0.5, y + 0.5};
            const PixelPoint q = project_direction(cam, backproject_pixel(cam, p));
            EXPECT_LT(std::hypot(q.u - p.u, q.v - p.v), kGridResidualPx);
        }
    }
}

TEST(UncertaintyTest, ReferenceCameraIsTwoMrad) {
    EXPECT_NEAR(pointing_uncertainty(CameraModel::reference()), 2.0, 0.01);
}

TEST(UncertaintyTest, DoubleResolutionHalvesIt) {
    EXPECT_NEAR(pointing_uncertainty(CameraModel(1600, 1200, 3.76, 2.74, 2.35)), 1.0, 0.01);
}

TEST(UncertaintyTest, ClosedForm) {
    const CameraModel cam(1024, 768, 6.0, 4.5, 8.0);
    EXPECT_NEAR(pointing_uncertainty(cam), std::atan(6.0 / 1024 / 8.0) * 1e3, 1e-12);
}

TEST(UncertaintyTest, DecreasesWithResolution) {
    double prev = 1e9;
    for (int w = 400; w <= 3200; w += 400) {
        const double u = pointing_uncertainty(CameraModel(w, w * 3 / 4, 3.76, 2.74, 2.35));
        EXPECT_LT(u, prev);
        EXPECT_GT(u, 0.0);
        prev = u;
    }
}

TEST(BisectorTest, PerpendicularPair) {
    const UnitVec3 b = bisector(UnitVec3(1, 0, 0), UnitVec3(0, 1, 0));
    EXPECT_NEAR(b.x(), std::sqrt(0.5), 1e-12);
    EXPECT_NEAR(b.y(), std::sqrt(0.5), 1e-12);
    EXPECT_NEAR(b.z(), 0.0, 1e-12);
}

TEST(BisectorTest, IdenticalVectors) {
    const UnitVec3 s(0.3, -0.2, 0.9);
    const UnitVec3 b = bisector(s, s);
    EXPECT_LT(angle_between(b, s), 1e-12);
}

TEST(BisectorTest, AntiparallelThrows) {
    EXPECT_THROW(bisector(UnitVec3(0, 0, 1), UnitVec3(0, 0, -1)), DegenerateBisector);
}

TEST(BisectorTest, EqualAnglesAndSymmetryOverRandomPairs) {
    std::mt19937_64 rng(2);
    int checked = 0;
    while (checked < 1000) {
        const UnitVec3 s = random_dir(rng);
        const UnitVec3 t = random_dir(rng);
        if (angle_between(s, t) > 3.0) continue;
        const UnitVec3 b = bisector(s, t);
        EXPECT_NEAR(angle_between(b, s), angle_between(b, t), 1e-9);
        EXPECT_LT(angle_between(b, bisector(t, s)), 1e-12);
        // b lies in the plane of s and t
        EXPECT_NEAR(dot(b.vec(), cross(s.vec(), t.vec())), 0.0, 1e-9);
        ++checked;
    }
}

TEST(PixelAngleTest, OnePixelIsUncertainty) {
    const auto cam = CameraModel::reference();
    const PlaneVec m = pixel_error_to_mrad(cam, {1.0, 0.0});
    EXPECT_NEAR(m.u, pointing_uncertainty(cam), 1e-12);
    EXPECT_EQ(m.v, 0.0);
}

TEST(PixelAngleTest, PerAxisArctan) {
    const auto cam = CameraModel::reference();
    const PlaneVec m = pixel_error_to_mrad(cam, {10.0, -5.0});
    EXPECT_NEAR(m.u, std::atan(10.0 / 500.0) * 1e3, 1e-12);
    EXPECT_NEAR(m.v, std::atan(-5.0 / 500.0) * 1e3, 1e-12);
    const PlaneVec back = mrad_to_pixel_error(cam, m);
    EXPECT_NEAR(back.u, 10.0, 1e-9);
    EXPECT_NEAR(back.v, -5.0, 1e-9);
}

TEST(PixelAngleTest, AgreesWithThreeDimensionalAngle) {
    const auto cam = CameraModel::reference();
    const PixelPoint c = cam.principal();
    double worst = 0.0;
    for (int du = -50; du <= 50; ++du) {
        for (int dv = -50; dv <= 50; ++dv) {
            if ((du == 0 && dv == 0) || std::hypot(du, dv) > 50.0) continue;
            const PlaneVec m = pixel_error_to_mrad(cam, {double(du), double(dv)});
            const double angle =
                angle_between(backproject_pixel(cam, c), backproject_pixel(cam, {c.u + du, c.v + dv})) * 1e3;
            worst = std::max(worst, std::abs(std::hypot(m.u, m.v) - angle) / angle);
        }
    }
    EXPECT_LT(worst, 0.05);
    EXPECT_LT(worst, kPixelAngleRelBound);
}

TEST(MidpointLawTest, AxisOnBisectorSweep) {
    const auto cam = CameraModel::reference();
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> sep_dist(0.0, deg2rad(60.0));
    double worst = 0.0;
    for (int i = 0; i < 5000; ++i) {
        const UnitVec3 b = random_dir(rng);
        Vec3 p = cross(b.vec(), random_dir(rng).vec());
        if (norm(p) < 1e-3) continue;
        p = p / norm(p);
        const double half = sep_dist(rng) / 2;
        const UnitVec3 s(b.vec() * std::cos(half) + p * std::sin(half));
        const UnitVec3 t(b.vec() * std::cos(half) - p * std::sin(half));

        const CameraFrame f = frame_with_forward(bisector(s, t).vec(), rng);
        const PixelPoint m = midpoint(project_direction(cam, UnitVec3(f.to_camera(s.vec()))),
                                      project_direction(cam, UnitVec3(f.to_camera(t.vec()))));
        worst = std::max(worst, std::hypot(m.u - 400.0, m.v - 300.0));
    }
    EXPECT_LE(worst, kMidpointSweepBoundPx);
}

TEST(FrameTest, AzElRoundTrip) {
    for (double az = 0.0; az < 360.0; az += 23.0) {
        for (double el = -80.0; el <= 80.0; el += 20.0) {
            const AzEl a = az_el_from_direction(direction_from_az_el(az, el));
            EXPECT_NEAR(a.azimuth_deg, az, 1e-9);
            EXPECT_NEAR(a.elevation_deg, el, 1e-9);
        }
    }
}

TEST(FrameTest, CompassDirections) {
    const UnitVec3 north = direction_from_az_el(0.0, 0.0);
    const UnitVec3 east = direction_from_az_el(90.0, 0.0);
    EXPECT_NEAR(north.y(), 1.0, 1e-12);
    EXPECT_NEAR(east.x(), 1.0, 1e-12);
    EXPECT_NEAR(direction_from_az_el(0.0, 90.0).z(), 1.0, 1e-12);
}

TEST(FrameTest, AzElFrameIsOrthonormalWithHorizontalRight) {
    const CameraFrame f = frame_from_az_el(137.0, 41.0);
    EXPECT_NEAR(norm(f.right), 1.0, 1e-12);
    EXPECT_NEAR(norm(f.down), 1.0, 1e-12);
    EXPECT_NEAR(dot(f.right, f.forward), 0.0, 1e-12);
    EXPECT_NEAR(dot(f.down, f.forward), 0.0, 1e-12);
    EXPECT_NEAR(f.right.z, 0.0, 1e-12);
    EXPECT_LT(f.down.z, 0.0);  // image-down points toward the ground
    EXPECT_NEAR(dot(cross(f.right, f.down), f.forward), 1.0, 1e-12);
}

TEST(FrameTest, PerturbationShiftsSceneByOffset) {
    const CameraFrame f = frame_from_az_el(150.0, 50.0);
    const UnitVec3 axis(f.forward);
    for (const PlaneVec off : {PlaneVec{3.0, 0.0}, PlaneVec{0.0, -7.0}, PlaneVec{12.0, 4.0}}) {
        const PlaneVec a = camera_plane_angles(perturb_frame(f, off), axis);
        EXPECT_NEAR(a.u, off.u, 1e-3);
        EXPECT_NEAR(a.v, off.v, 1e-3);
    }
}

TEST(FrameTest, CameraPlaneAnglesBehindThrows) {
    const CameraFrame f = frame_from_az_el(0.0, 10.0);
    EXPECT_THROW(camera_plane_angles(f, UnitVec3(-f.forward)), BehindCamera);
}

TEST(VectorTest, ZeroVectorRejected) { EXPECT_THROW(UnitVec3(0, 0, 0), GeometryError); }

TEST(VectorTest, AngleBetweenIsStableAtExtremes) {
    const UnitVec3 a(1, 0, 0);
    EXPECT_NEAR(angle_between(a, UnitVec3(1, 1e-9, 0)), 1e-9, 1e-15);
    EXPECT_NEAR(angle_between(a, UnitVec3(-1, 1e-9, 0)), kPi - 1e-9, 1e-12);
}
