// Tracking control laws: pixel-space proportional loop, Sun-pointing aiming
// calibration, the ephemeris open-loop baseline, and run comparison.
#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "heliotrack/ephemeris.hpp"
#include "heliotrack/geometry.hpp"
#include "heliotrack/run_log.hpp"
#include "heliotrack/vision.hpp"

namespace heliotrack {

class NoValidFrames : public std::runtime_error {
public:
    NoValidFrames() : std::runtime_error("no frame with a detected Sun") {}
};

class SunBelowHorizon : public std::runtime_error {
public:
    SunBelowHorizon() : std::runtime_error("Sun below the horizon") {}
};

class TimestampMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ControllerConfig {
    double gain = 0.5;           // (0, 1]
    double deadband_px = 1.0;    // infinity norm
    double max_step_mrad = 50.0; // per axis per tick

    void validate() const;
};

struct TrackingError {
    PlaneVec error_px;
    PlaneVec error_mrad;
    double time_s = 0.0;
};

TrackingError make_tracking_error(const CameraModel& cam, const PlaneVec& error_px, double time_s);

/// Axis correction in mrad, expressed in the camera plane as the shift the
/// scene should undergo (the negative of the measured error). The plant maps
/// it onto its axes with command_to_pose.
struct AxisCommand {
    double d_azimuth_mrad = 0.0;
    double d_elevation_mrad = 0.0;
    constexpr bool operator==(const AxisCommand&) const = default;
};

/// -gain * error_mrad per axis, clamped to max_step_mrad; zero inside the deadband.
AxisCommand control_step(const ControllerConfig& cfg, const CameraModel& cam, const TrackingError& err);

/// Pose reached by applying an axis command from the given encoder pose.
/// Image-right is increasing azimuth (scaled by 1/cos(el)), image-down is
/// decreasing elevation, and the command moves the scene rather than the axis.
PoseCommand command_to_pose(const AzEl& encoder, const AxisCommand& cmd);

/// Mean of S' - A' over frames where the Sun was found, with per-axis sample
/// standard deviation (0 for a single frame). Throws NoValidFrames.
AimingOffset calibrate_aiming(const std::vector<FrameAnalysis>& frames);

inline constexpr double kScadaQuantumMrad = 1.2;

/// Facet normal that reflects the Sun onto the target, quantized per axis to
/// `quantum_mrad`. Throws SunBelowHorizon.
AzEl scada_setpoint(const SunPosition& sun, const Vec3& heliostat_pos, const Vec3& target_pos,
                    double quantum_mrad = kScadaQuantumMrad);

/// Sun-pointing setpoint with the same quantization.
AzEl scada_sun_setpoint(const SunPosition& sun, double quantum_mrad = kScadaQuantumMrad);

enum class Phase { steady, transition, off_track, unavailable };
std::string_view to_string(Phase p);

struct CompareOptions {
    double slew_threshold_dps = 0.1;  // above this an axis is "moving"
    int settle_ticks = 10;            // ticks after motion/mode change still counted as transition
    double spike_threshold_mrad = 5.0;
    double steady_limit_mrad = 3.0;
};

struct AxisSeries {
    std::vector<double> vision_mrad;  // NaN when absent
    std::vector<double> scada_mrad;
    std::vector<double> diff_mrad;
    double max_abs_diff = 0.0;
    double steady_mean_abs_diff = 0.0;
    double steady_max_abs_diff = 0.0;
    double transition_max_abs_diff = 0.0;
    std::vector<double> spike_times_s;  // local maxima of |diff| above the spike threshold
    /// Ticks with |diff| >= steady_limit that are not inside a transition interval.
    int unconfined_excursions = 0;
};

struct ErrorSeries {
    std::vector<double> time_s;
    std::vector<Phase> phase;
    AxisSeries azimuth;    // camera-plane u
    AxisSeries elevation;  // camera-plane v
    int steady_ticks = 0;
    int transition_ticks = 0;
};

/// Vision error (camera measurement of vision_log) against the SCADA error of
/// scada_log, tick by tick. Throws TimestampMismatch.
ErrorSeries compare_runs(const RunLog& vision_log, const RunLog& scada_log, const CompareOptions& opt = {});

/// time_s,axis,vision_err_mrad,scada_err_mrad,diff_mrad
void write_error_series_csv(std::ostream& os, const ErrorSeries& es);

}  // namespace heliotrack
