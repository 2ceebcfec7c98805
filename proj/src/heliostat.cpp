#include "heliotrack/heliostat.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace heliotrack {

std::string_view to_string(HeliostatMode m) {
    switch (m) {
        case HeliostatMode::stow: return "stow";
        case HeliostatMode::sun_track: return "sun_track";
        case HeliostatMode::target_track: return "target_track";
        case HeliostatMode::manual: return "manual";
    }
    return "unknown";
}

HeliostatMode heliostat_mode_from_string(std::string_view s) {
    if (s == "stow") return HeliostatMode::stow;
    if (s == "sun_track") return HeliostatMode::sun_track;
    if (s == "target_track") return HeliostatMode::target_track;
    if (s == "manual") return HeliostatMode::manual;
    throw std::invalid_argument("unknown heliostat mode '" + std::string(s) + "'");
}

HeliostatState step(const HeliostatState& state, const PoseCommand& command, double dt_s) {
    if (!(dt_s > 0.0)) {
        throw std::invalid_argument("step: dt must be positive");
    }
    HeliostatState next = state;
    const double d_az = std::remainder(command.azimuth_deg - state.azimuth_deg, 360.0);
    const double target_el = std::clamp(command.elevation_deg, 0.0, 90.0);
    const double d_el = target_el - state.elevation_deg;
    const double max_az = state.az_rate_limit_dps * dt_s;
    const double max_el = state.el_rate_limit_dps * dt_s;
    const double move_az = std::clamp(d_az, -max_az, max_az);
    const double move_el = std::clamp(d_el, -max_el, max_el);

    next.azimuth_deg = state.azimuth_deg + move_az;
    if (next.azimuth_deg < 0.0) next.azimuth_deg += 360.0;
    if (next.azimuth_deg >= 360.0) next.azimuth_deg -= 360.0;
    // Land exactly on the command when within reach.
    next.elevation_deg = move_el == d_el ? target_el : state.elevation_deg + move_el;
    next.slew_dps = {move_az / dt_s, move_el / dt_s};
    return next;
}

AzEl encoder_reading(const HeliostatState& state) {
    if (!(state.encoder_quantum_mrad > 0.0)) {
        return {state.azimuth_deg, state.elevation_deg};
    }
    const double q = rad2deg(state.encoder_quantum_mrad * 1e-3);
    return {std::round(state.azimuth_deg / q) * q, std::round(state.elevation_deg / q) * q};
}

PlaneVec optical_offset_mrad(const HeliostatState& state) {
    const double g = state.deformation_gain;
    return {state.pedestal_tilt_mrad.u + g * state.slew_dps.u + state.jitter_mrad.u,
            state.pedestal_tilt_mrad.v - g * state.slew_dps.v + state.jitter_mrad.v};
}

CameraFrame optical_frame(const HeliostatState& state) {
    return perturb_frame(frame_from_az_el(state.azimuth_deg, state.elevation_deg), optical_offset_mrad(state));
}

CameraFrame nominal_frame(const HeliostatState& state) {
    const AzEl e = encoder_reading(state);
    return frame_from_az_el(e.azimuth_deg, e.elevation_deg);
}

}  // namespace heliotrack
