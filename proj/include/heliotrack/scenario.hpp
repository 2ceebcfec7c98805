// Scenario files: scene, camera, plant, controller, disturbances and the
// command timeline of one simulated run.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "heliotrack/control.hpp"
#include "heliotrack/heliostat.hpp"
#include "heliotrack/render.hpp"

namespace heliotrack {

/// Invalid scenario; the message carries "file:line:col: field: reason".
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mode change for one heliostat. In manual mode the pose is either absolute
/// (`pose`) or the current target-tracking setpoint shifted by `offset_mrad`
/// per axis. `nudge_mrad` moves the current manual pose.
struct ModeCommand {
    HeliostatMode mode = HeliostatMode::manual;
    std::optional<PlaneVec> offset_mrad;
    std::optional<AzEl> pose;
    std::optional<PlaneVec> nudge_mrad;
};

struct TimelineEntry {
    double time_s = 0.0;
    ModeCommand command;
};

struct Disturbances {
    bool pedestal_tilt = false;
    PlaneVec tilt_mrad;
    bool deformation = false;
    double deformation_gain = 0.0;  // mrad per deg/s
    bool jitter = false;
    double jitter_sigma_mrad = 0.0;
    bool refraction = false;
    double refraction_mrad = 0.0;
};

struct ScenarioConfig {
    std::string name;
    Scene scene;
    CameraModel camera = CameraModel::reference();
    ControllerConfig controller;
    Disturbances disturbances;

    Vec3 heliostat_position;
    double az_rate_limit_dps = 0.6;
    double el_rate_limit_dps = 0.3;
    double encoder_quantum_mrad = 0.0;
    double scada_quantum_mrad = kScadaQuantumMrad;

    /// Start pose: absolute, or offset (mrad per axis) from the first tracking setpoint.
    std::optional<AzEl> initial_pose;
    PlaneVec initial_offset_mrad;

    std::vector<TimelineEntry> timeline;  // time-ordered
    double tick_s = 1.0;
    double duration_s = 0.0;
    std::uint64_t seed = 0;

    /// Aiming offset applied to the open-loop twin's camera measurement.
    AimingOffset calibration;
    /// Save every n-th frame of a run (0 = none).
    int frame_stride = 0;

    int tick_count() const;
    /// Throws ConfigError.
    void validate() const;
};

ScenarioConfig parse_scenario(const std::string& yaml_text, const std::string& source_name = "<string>");
ScenarioConfig load_scenario_file(const std::filesystem::path& path);

/// Directory searched for bundled scenarios (HELIOTRACK_SCENARIO_DIR overrides the build default).
std::filesystem::path bundled_scenario_dir();
/// A path to an existing file, or the name of a bundled scenario.
std::filesystem::path resolve_scenario(const std::string& name_or_path);
ScenarioConfig load_scenario(const std::string& name_or_path);

/// Aiming offset file written by calibration: {"du":..,"dv":..,"samples":..,"sigma_u":..,"sigma_v":..}.
AimingOffset read_calibration_file(const std::filesystem::path& path);
void write_calibration_file(const std::filesystem::path& path, const AimingOffset& off);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace heliotrack
