#include <gtest/gtest.h>

#include <random>

#include "heliotrack/render.hpp"
#include "oracles.hpp"

using namespace heliotrack;

namespace {

constexpr double kSunCentroidTolPx = 0.5;
constexpr double kBisectorMidpointTolPx = 2.0;

const CameraModel kCam = CameraModel::reference();

WorldRect fronto_parallel_rect(const CameraPose& pose, double u0, double u1, double v0, double v1, double z) {
    return fixtures::fronto_parallel_rect(kCam, pose, u0, u1, v0, v1, z);
}

CameraPose jittered_bisector_pose(const fixtures::ReferenceView& v, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-3.0, 3.0);
    const AzEl b = az_el_from_direction(bisector(v.sun, v.to_target));
    return {v.position, frame_from_az_el(b.azimuth_deg + d(rng), b.elevation_deg + d(rng))};
}

}  // namespace

TEST(RenderTest, BisectorPoseCentresMidpoint) {
    auto v = fixtures::reference_view();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> sep(deg2rad(2.0), deg2rad(60.0)), roll(0.0, 2.0 * kPi);
    const CameraFrame sun_frame = frame_from_az_el(az_el_from_direction(v.sun).azimuth_deg,
                                                   az_el_from_direction(v.sun).elevation_deg);
    int checked = 0;
    for (int i = 0; i < 40; ++i) {
        const double a = sep(rng), phi = roll(rng);
        const Vec3 off = sun_frame.right * std::cos(phi) + sun_frame.down * std::sin(phi);
        const UnitVec3 to_target(v.sun.vec() * std::cos(a) + off * std::sin(a));
        if (to_target.z() < 0.02) continue;
        v.scene.target.center = v.position + to_target.vec() * 100.0;
        const AzEl facing = az_el_from_direction(-to_target);
        v.scene.target.normal_az_deg = facing.azimuth_deg;
        v.scene.target.normal_el_deg = facing.elevation_deg;

        const auto rr = render(v.scene, kCam, fixtures::pose_toward(v.position, bisector(v.sun, to_target)), 0.0);
        ASSERT_TRUE(rr.truth.sun_center && rr.truth.target_center) << "separation " << rad2deg(a);
        const PixelPoint m = midpoint(*rr.truth.sun_center, *rr.truth.target_center);
        EXPECT_LE(std::hypot(m.u - 400.0, m.v - 300.0), kBisectorMidpointTolPx);
        ++checked;
    }
    EXPECT_GT(checked, 30);
}

TEST(RenderTest, SunBehindCamera) {
    const auto v = fixtures::reference_view();
    const auto rr = render(v.scene, kCam, fixtures::pose_toward(v.position, -v.sun), 0.0);
    EXPECT_FALSE(rr.truth.sun_center);
    EXPECT_THROW(segment_sun(rr.image), NoSunDetected);
}

TEST(RenderTest, SameSeedIsByteIdentical) {
    auto v = fixtures::reference_view();
    v.scene.style.noise_sigma = 2.0;
    v.scene.seed = 99;
    const CameraPose pose = fixtures::pose_toward(v.position, bisector(v.sun, v.to_target));
    const std::string a = encode_ppm(render(v.scene, kCam, pose, 3.0).image);
    EXPECT_EQ(a, encode_ppm(render(v.scene, kCam, pose, 3.0).image));
    v.scene.seed = 100;
    EXPECT_NE(a, encode_ppm(render(v.scene, kCam, pose, 3.0).image));
}

TEST(RenderTest, SunCentroidWithinHalfPixel) {
    const auto v = fixtures::reference_view();
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> d(-15.0, 15.0), t(0.0, 3600.0);
    const AzEl s = az_el_from_direction(v.sun);
    for (int i = 0; i < 20; ++i) {
        const CameraPose pose{v.position, frame_from_az_el(s.azimuth_deg + d(rng), s.elevation_deg + d(rng))};
        const auto rr = render(v.scene, kCam, pose, t(rng));
        ASSERT_TRUE(rr.truth.sun_center);
        const SunSegment seg = segment_sun(rr.image);
        EXPECT_LT(std::hypot(seg.centroid.u - rr.truth.sun_center->u, seg.centroid.v - rr.truth.sun_center->v),
                  kSunCentroidTolPx);
    }
}

TEST(RenderTest, TargetGroundTruthIsProjectedCentre) {
    const auto v = fixtures::reference_view();
    const CameraPose pose = fixtures::pose_toward(v.position, bisector(v.sun, v.to_target));
    const auto rr = render(v.scene, kCam, pose, 0.0);
    ASSERT_TRUE(rr.truth.target_center && rr.truth.target_bbox);
    const PixelPoint expected = project_direction(kCam, UnitVec3(pose.frame.to_camera(v.to_target.vec())));
    EXPECT_NEAR(rr.truth.target_center->u, expected.u, 1e-9);
    EXPECT_NEAR(rr.truth.target_center->v, expected.v, 1e-9);
    EXPECT_TRUE(rr.truth.target_bbox->contains(expected));
    EXPECT_EQ(rr.image.at(int(expected.u), int(expected.v)), v.scene.style.target);
}

TEST(RenderTest, CloudOverSunRaisesOccludedFraction) {
    auto v = fixtures::reference_view();
    const AzEl s = az_el_from_direction(v.sun);
    // Drifts east across the Sun at 4 mrad/s from 40 mrad west.
    v.scene.clouds.push_back({1, s.azimuth_deg - rad2deg(0.04) / std::cos(deg2rad(s.elevation_deg)), s.elevation_deg,
                              20.0, 15.0, 0.0, 4.0, 0.0});
    const CameraPose pose = fixtures::pose_toward(v.position, v.sun);
    EXPECT_EQ(render(v.scene, kCam, pose, 0.0).truth.sun_occluded_fraction, 0.0);
    const auto mid = render(v.scene, kCam, pose, 10.0).truth;
    EXPECT_EQ(mid.sun_occluded_fraction, 1.0);
    EXPECT_TRUE(mid.shadow);
    EXPECT_EQ(render(v.scene, kCam, pose, 25.0).truth.sun_occluded_fraction, 0.0);
}

TEST(RenderTest, ShadowAndBlockFlagsMatchRayTestOn50Scenes) {
    const auto base = fixtures::reference_view();
    std::mt19937_64 rng(50);
    std::uniform_int_distribution<int> kind(0, 3);
    std::uniform_real_distribution<double> size(10.0, 25.0), clear_gap(6.0, 30.0), sun_cut(1.2, 1.9),
        target_cut(0.25, 0.45), depth(8.0, 20.0);
    int counts[4] = {0, 0, 0, 0};

    for (int i = 0; i < 50; ++i) {
        fixtures::ReferenceView v = base;
        const CameraPose pose = jittered_bisector_pose(v, rng);
        const auto clean = render(v.scene, kCam, pose, 0.0).truth;
        ASSERT_TRUE(clean.sun_center && clean.target_bbox);
        const PixelPoint S = *clean.sun_center;
        const BBox T = *clean.target_bbox;
        const double z = depth(rng);
        const double h = size(rng);
        const int k = kind(rng);
        ++counts[k];

        if (k < 2) {
            // Neighbour beside the Sun on the side away from the target; k == 0 cuts into the disk.
            const double side = S.u > T.center().u ? 1.0 : -1.0;
            const double edge = S.u + side * (k == 0 ? sun_cut(rng) : clear_gap(rng));
            const double far = edge + side * 2.0 * h;
            v.scene.neighbors.push_back(
                fronto_parallel_rect(pose, std::min(edge, far), std::max(edge, far), S.v - h, S.v + h, z));
        } else {
            // Neighbour beside the target on the side away from the Sun; k == 2 covers part of it.
            const double side = T.center().u > S.u ? 1.0 : -1.0;
            const double near_edge = side > 0 ? T.x + T.w : T.x;
            const double edge = k == 2 ? near_edge - side * target_cut(rng) * T.w : near_edge + side * clear_gap(rng);
            const double far = edge + side * 2.0 * h;
            const double cv = T.center().v;
            const double hv = 0.5 * T.h + 4.0;
            v.scene.neighbors.push_back(
                fronto_parallel_rect(pose, std::min(edge, far), std::max(edge, far), cv - hv, cv + hv, z));
        }

        const auto rr = render(v.scene, kCam, pose, 0.0);
        EXPECT_EQ(rr.truth.shadow, k == 0) << "scene " << i;
        EXPECT_EQ(rr.truth.block, k == 2) << "scene " << i;
        const auto fa = analyze_frame(detect(rr.image), kCam, {});
        EXPECT_EQ(fa.shadow, rr.truth.shadow) << "scene " << i << " kind " << k;
        EXPECT_EQ(fa.block, rr.truth.block) << "scene " << i << " kind " << k;
    }
    for (int c : counts) EXPECT_GT(c, 5);
}
