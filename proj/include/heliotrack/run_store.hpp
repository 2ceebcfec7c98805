// Run directories: manifest, per-twin logs, error series and saved frames.
#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "heliotrack/control.hpp"
#include "heliotrack/scenario.hpp"
#include "heliotrack/simulation.hpp"

namespace heliotrack {

class RunDirError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Artifact {
    std::string path;  // relative to the run directory
    std::string fnv1a;
    std::uintmax_t bytes = 0;
};

struct AxisSummary {
    double steady_mean_abs_diff_mrad = 0.0;
    double steady_max_abs_diff_mrad = 0.0;
    double transition_max_abs_diff_mrad = 0.0;
    double max_abs_diff_mrad = 0.0;
    std::vector<double> spike_times_s;
    int unconfined_excursions = 0;
};

struct RunSummary {
    int ticks = 0;
    int steady_ticks = 0;
    int transition_ticks = 0;
    AxisSummary azimuth;
    AxisSummary elevation;
};

struct RunManifest {
    std::string run_id;
    std::string scenario_name;
    std::string scenario_hash;
    std::uint64_t seed = 0;
    std::string start_utc;  // simulated clock
    std::string end_utc;
    double tick_s = 1.0;
    std::vector<Artifact> artifacts;
    RunSummary summary;
};

RunSummary summarize(const ErrorSeries& es);

/// Simulates the scenario and writes manifest.json, scenario.yaml, vision.csv,
/// scada.csv, errors.csv and frames/ into out_dir. `scenario_text` is the file the
/// config came from; it is copied verbatim and hashed.
RunManifest write_run(const ScenarioConfig& cfg, const std::string& scenario_text, const std::filesystem::path& out_dir);

void write_manifest(const std::filesystem::path& path, const RunManifest& m);
/// Throws RunDirError naming the missing manifest.
RunManifest read_manifest(const std::filesystem::path& run_dir);

/// Sun-pointing frames of the open-loop twin at rest (|slew| <= 0.1 deg/s), re-analysed
/// from the saved PPMs. Throws RunDirError, NoValidFrames.
AimingOffset calibrate_run(const std::filesystem::path& run_dir);

std::string format_utc(double timestamp);
std::string frame_name(Twin twin, int tick);

}  // namespace heliotrack
