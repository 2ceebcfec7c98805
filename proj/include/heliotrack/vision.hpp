// Sun segmentation, the object-detector contract with its classical
// implementation, per-frame tracking analysis and cloud tracking.
#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "heliotrack/geometry.hpp"
#include "heliotrack/image.hpp"

namespace heliotrack {

class NoSunDetected : public std::runtime_error {
public:
    NoSunDetected() : std::runtime_error("no bright component large enough for the Sun") {}
};

/// Axis-aligned pixel rectangle [x, x+w) x [y, y+h).
struct BBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double area() const { return w * h; }
    PixelPoint center() const { return {x + w * 0.5, y + h * 0.5}; }
    bool contains(const PixelPoint& p) const { return p.u >= x && p.u <= x + w && p.v >= y && p.v <= y + h; }
    BBox translated(double du, double dv) const { return {x + du, y + dv, w, h}; }
    bool operator==(const BBox&) const = default;
};

double intersection_area(const BBox& a, const BBox& b);
/// Positive intersection area; touching edges do not overlap.
inline bool overlaps(const BBox& a, const BBox& b) { return intersection_area(a, b) > 0.0; }
double iou(const BBox& a, const BBox& b);

enum class ObjectClass { sun, cloud, heliostat, target };

std::string_view to_string(ObjectClass c);
ObjectClass object_class_from_string(std::string_view s);

struct Detection {
    ObjectClass cls = ObjectClass::sun;
    BBox bbox;
    double score = 0.0;     // [0, 1]
    PixelPoint center;      // region centroid; bbox center when the detector has no better estimate
};

/// One JSON object per line: {"class", "bbox":[x,y,w,h], "score", "center":[u,v]}.
std::string detections_to_json_lines(const std::vector<Detection>& dets);
std::vector<Detection> detections_from_json_lines(std::string_view text);

struct SunSegment {
    PixelPoint centroid;
    BBox bbox;
    double score = 0.0;
    int area_px = 0;
};

inline constexpr double kDefaultSunLightness = 0.95;
inline constexpr int kDefaultSunMinArea = 20;

/// Unweighted centroid of the largest 8-connected component with lightness >=
/// threshold. Throws NoSunDetected when that component is smaller than min_area_px.
SunSegment segment_sun(const Image& img, double lightness_threshold = kDefaultSunLightness,
                       int min_area_px = kDefaultSunMinArea);

/// Colour thresholds of the classical detector, matched to the synthetic renderer.
struct ClassicalDetectorConfig {
    double sun_lightness = kDefaultSunLightness;
    int sun_min_area = kDefaultSunMinArea;

    double target_max_saturation = 0.10;
    double target_min_lightness = 0.82;
    int target_min_area = 25;
    double target_min_fill = 0.5;

    double heliostat_max_saturation = 0.15;
    double heliostat_min_lightness = 0.20;
    double heliostat_max_lightness = 0.62;
    int heliostat_min_area = 25;

    double cloud_min_lightness = 0.72;
    double cloud_min_saturation = 0.12;
    double cloud_max_saturation = 0.55;
    int cloud_min_area = 150;
};

/// Object detector contract: an image in, class-labelled regions with scores in [0, 1] out.
class Detector {
public:
    virtual ~Detector() = default;
    virtual std::vector<Detection> detect(const Image& img) const = 0;
};

/// Colour segmentation in HSL space plus connected components per class.
/// Stateless and deterministic.
class ClassicalDetector final : public Detector {
public:
    ClassicalDetector() = default;
    explicit ClassicalDetector(ClassicalDetectorConfig cfg) : cfg_(cfg) {}
    std::vector<Detection> detect(const Image& img) const override;
    const ClassicalDetectorConfig& config() const { return cfg_; }

private:
    ClassicalDetectorConfig cfg_;
};

/// Slot for an externally trained model (e.g. a region-proposal CNN). Output is
/// clipped to the image and scores clamped to [0, 1] so downstream code sees
/// the same contract as the classical detector.
class ExternalModelDetector final : public Detector {
public:
    using Model = std::function<std::vector<Detection>(const Image&)>;
    explicit ExternalModelDetector(Model model) : model_(std::move(model)) {}
    std::vector<Detection> detect(const Image& img) const override;

private:
    Model model_;
};

/// Classical detector with default thresholds.
std::vector<Detection> detect(const Image& img);

struct CloudObservation {
    PixelPoint centroid;
    double time_s = 0.0;
};

struct CloudTrack {
    int id = 0;
    std::vector<CloudObservation> history;   // time-ordered
    BBox bbox;                               // latest
    std::optional<PlaneVec> velocity_px_s;   // needs two observations
    std::optional<double> time_to_occlusion_s;
};

inline constexpr double kCloudGatePx = 50.0;

/// Nearest-neighbour association (gate kCloudGatePx, against the
/// constant-velocity prediction), velocity from the last two observations and
/// time until the extrapolated cloud bbox first overlaps the Sun bbox.
/// Tracks without a matching detection are dropped.
std::vector<CloudTrack> track_clouds(const std::vector<CloudTrack>& prev, const std::vector<Detection>& dets,
                                     double dt_s, const std::optional<BBox>& sun_bbox);

/// Stateful wrapper for one analysis pipeline: absolute frame times and ids
/// that stay unique after all clouds have left the frame.
class CloudTracker {
public:
    const std::vector<CloudTrack>& update(const std::vector<Detection>& dets, double time_s, double dt_s,
                                          const std::optional<BBox>& sun_bbox);
    const std::vector<CloudTrack>& tracks() const { return tracks_; }

private:
    std::vector<CloudTrack> tracks_;
    int next_id_ = 1;
};

/// Earliest t >= 0 at which `moving` translated by velocity * t overlaps `fixed`.
std::optional<double> time_to_overlap(const BBox& moving, const PlaneVec& velocity_px_s, const BBox& fixed);

struct ShadowBlock {
    bool shadow = false;  // heliostat or cloud over the Sun
    bool block = false;   // heliostat over the target
};

ShadowBlock detect_shadow_block(const std::vector<Detection>& dets);

/// Constant pixel offset of the aim point (see calibrate_aiming).
struct AimingOffset {
    double du = 0.0;
    double dv = 0.0;
    int samples = 1;
    double sigma_u = 0.0;
    double sigma_v = 0.0;
};

struct FrameAnalysis {
    std::optional<PixelPoint> sun_center;     // S'
    std::optional<PixelPoint> target_center;  // T'
    std::optional<PixelPoint> aim_point;      // A'' = (S' + T') / 2
    PixelPoint principal;                     // A'
    std::optional<PlaneVec> tracking_error_px;  // A'' - (A' + calibration)
    std::optional<BBox> sun_bbox;
    std::optional<BBox> target_bbox;
    bool shadow = false;
    bool block = false;
    std::vector<CloudTrack> cloud_tracks;
};

/// Highest-score detection of a class (ties: larger bbox), if any.
std::optional<Detection> best_detection(const std::vector<Detection>& dets, ObjectClass cls);

FrameAnalysis analyze_frame(const std::vector<Detection>& dets, const CameraModel& cam, const AimingOffset& calib);

/// Sun-pointing error S' - (A' + calibration), used in sun-tracking mode.
std::optional<PlaneVec> sun_pointing_error_px(const FrameAnalysis& fa, const AimingOffset& calib);

}  // namespace heliotrack
