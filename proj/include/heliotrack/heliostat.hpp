// Two-axis (azimuth-elevation) heliostat plant with its disturbance model.
#pragma once

#include <optional>
#include <string_view>

#include "heliotrack/geometry.hpp"

namespace heliotrack {

enum class HeliostatMode { stow, sun_track, target_track, manual };

std::string_view to_string(HeliostatMode m);
/// Throws std::invalid_argument for unknown names.
HeliostatMode heliostat_mode_from_string(std::string_view s);
inline bool is_tracking(HeliostatMode m) { return m == HeliostatMode::sun_track || m == HeliostatMode::target_track; }

inline constexpr double kStowElevationDeg = 90.0;

struct HeliostatState {
    Vec3 position;                   // m, ENU (pivot and camera)
    double azimuth_deg = 180.0;      // mechanical pose of the facet normal
    double elevation_deg = 45.0;     // [0, 90]
    double az_rate_limit_dps = 0.6;
    double el_rate_limit_dps = 0.3;
    PlaneVec pedestal_tilt_mrad;     // apparent shift of the scene in the camera plane
    double deformation_gain = 0.0;   // mrad per deg/s of slew
    double encoder_quantum_mrad = 0.0;
    HeliostatMode mode = HeliostatMode::manual;

    PlaneVec slew_dps;               // axis rates of the last step (az, el)
    PlaneVec jitter_mrad;            // current white-noise pose jitter
};

struct PoseCommand {
    double azimuth_deg = 0.0;
    double elevation_deg = 0.0;
    constexpr bool operator==(const PoseCommand&) const = default;
};

/// Moves each axis toward the command, clamped by its rate limit over dt.
/// Throws std::invalid_argument for dt <= 0.
HeliostatState step(const HeliostatState& state, const PoseCommand& command, double dt_s);

/// Axis angles as read back through the encoders.
AzEl encoder_reading(const HeliostatState& state);

/// Camera-plane offset of the physical optical axis from the mechanical one:
/// pedestal tilt, slew-rate deformation (the structure lags the motion) and jitter.
PlaneVec optical_offset_mrad(const HeliostatState& state);

/// Frame of the facet (and the camera rigidly mounted on it), disturbances included.
CameraFrame optical_frame(const HeliostatState& state);

/// Frame the controller believes in: encoder pose, no disturbances.
CameraFrame nominal_frame(const HeliostatState& state);

}  // namespace heliotrack
