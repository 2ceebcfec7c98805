// Per-tick records of one simulated heliostat and their CSV form.
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "heliotrack/geometry.hpp"
#include "heliotrack/heliostat.hpp"

namespace heliotrack {

struct TickRecord {
    double time_s = 0.0;
    HeliostatMode mode = HeliostatMode::manual;
    PoseCommand commanded;
    AzEl actual;
    PlaneVec slew_dps;
    std::optional<PixelPoint> sun;     // S'
    std::optional<PixelPoint> target;  // T'
    std::optional<PixelPoint> aim;     // A''
    std::optional<PlaneVec> camera_err_px;
    std::optional<PlaneVec> camera_err_mrad;
    std::optional<PlaneVec> scada_err_mrad;  // encoder pose vs. ideal aim, in the camera plane
    std::optional<PlaneVec> true_err_mrad;   // physical axis vs. ideal aim
    bool shadow = false;
    bool block = false;
    int clouds = 0;
    std::optional<double> tto_s;  // earliest cloud time-to-occlusion
};

struct RunLog {
    std::string name;
    double tick_s = 1.0;
    std::vector<TickRecord> records;
};

/// Header plus one row per record, fixed 6-decimal formatting; absent values are empty fields.
void write_run_log_csv(std::ostream& os, const RunLog& log);
std::string run_log_csv(const RunLog& log);
RunLog read_run_log_csv(std::istream& is, std::string name = {});

}  // namespace heliotrack
