// Deterministic synthetic view of the tracker camera (sky, Sun disk, target,
// neighbouring heliostats, clouds) together with an exact answer key.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "heliotrack/ephemeris.hpp"
#include "heliotrack/geometry.hpp"
#include "heliotrack/image.hpp"
#include "heliotrack/vision.hpp"

namespace heliotrack {

/// Angular radius of the solar disk.
inline constexpr double kSunRadiusMrad = 4.65;

/// Flat rectangle in the world: the white target or a neighbouring heliostat.
struct WorldRect {
    Vec3 center;              // m, ENU
    double width_m = 1.0;
    double height_m = 1.0;
    double normal_az_deg = 0.0;
    double normal_el_deg = 0.0;

    /// Corners in order: bottom-left, bottom-right, top-right, top-left (seen from the front).
    std::array<Vec3, 4> corners() const;
    Vec3 normal() const;
    /// Parametric distance along a ray to the rectangle, if it is hit.
    std::optional<double> intersect(const Vec3& origin, const Vec3& dir) const;
};

/// Cloud at infinity: an ellipse in the sky's tangent plane drifting at a constant angular rate.
struct CloudSpec {
    int label = 0;
    double azimuth_deg = 0.0;     // center at t = 0
    double elevation_deg = 0.0;
    double semi_major_mrad = 50.0;
    double semi_minor_mrad = 30.0;
    double orientation_deg = 0.0;  // major axis from the horizontal
    double az_rate_mrad_s = 0.0;   // angular drift, tangent plane
    double el_rate_mrad_s = 0.0;

    /// Center direction at time t.
    UnitVec3 center_at(double t_s) const;
    /// Whether a world direction falls inside the cloud at time t.
    bool covers(const UnitVec3& dir, double t_s) const;
};

struct RenderStyle {
    Rgb sky{90, 150, 215};
    Rgb ground{120, 105, 80};
    Rgb sun{255, 255, 250};
    Rgb target{235, 235, 235};
    Rgb heliostat{120, 120, 125};
    Rgb cloud{225, 228, 235};
    double cloud_alpha = 0.9;
    double glare_sigma_px = 2.0;
    double glare_amplitude = 1.0;
    double noise_sigma = 0.0;  // per-channel sensor noise, 8-bit units
};

struct Scene {
    GeoTime site;          // timestamp = scenario start
    WorldRect target;
    std::vector<WorldRect> neighbors;
    std::vector<CloudSpec> clouds;
    double refraction_mrad = 0.0;  // apparent Sun elevation lift
    std::uint64_t seed = 0;
    RenderStyle style;

    /// Apparent Sun direction at t seconds after the scenario start.
    UnitVec3 sun_at(double t_s) const;
};

struct CameraPose {
    Vec3 position;
    CameraFrame frame;
};

struct CloudTruth {
    int label = 0;
    PixelPoint centroid;  // mean of covered pixel centers
    BBox bbox;
    int pixels = 0;
};

struct GroundTruth {
    std::optional<PixelPoint> sun_center;     // S'
    std::optional<PixelPoint> target_center;  // T'
    std::optional<BBox> sun_bbox;
    std::optional<BBox> target_bbox;
    std::vector<BBox> heliostat_bboxes;
    std::vector<CloudTruth> clouds;
    double sun_occluded_fraction = 0.0;
    bool shadow = false;
    bool block = false;
};

struct RenderResult {
    Image image;
    GroundTruth truth;
};

/// Identical (scene, camera, pose, time) gives a bit-identical image.
RenderResult render(const Scene& scene, const CameraModel& cam, const CameraPose& pose, double t_s);

}  // namespace heliotrack
