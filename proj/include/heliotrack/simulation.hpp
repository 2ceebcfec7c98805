// Closed-loop field simulation: one heliostat under two controllers (the
// camera loop and the ephemeris open loop) on identical plant twins.
#pragma once

#include <array>
#include <functional>
#include <optional>
#include <random>
#include <string_view>

#include "heliotrack/control.hpp"
#include "heliotrack/render.hpp"
#include "heliotrack/run_log.hpp"
#include "heliotrack/scenario.hpp"
#include "heliotrack/vision.hpp"

namespace heliotrack {

enum class Twin { vision, scada };
inline constexpr std::array<Twin, 2> kTwins{Twin::vision, Twin::scada};
std::string_view to_string(Twin t);

/// Rejected command (unknown mode field combination, out-of-range pose).
class InvalidCommand : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A non-stow command while the heliostat is still driving to stow.
class StowInterlock : public std::runtime_error {
public:
    StowInterlock() : std::runtime_error("stow in progress") {}
};

struct TwinView {
    HeliostatState plant;
    PoseCommand commanded;
    bool locked = false;  // camera loop has acquired sun and target
    FrameAnalysis analysis;
    std::vector<Detection> detections;
    GroundTruth truth;
    Image frame;
    std::optional<TickRecord> last;  // latest logged tick
};

/// Ideal error of a frame in the camera plane: midpoint of the projected Sun
/// and target (or the Sun alone when sun-tracking) minus the principal point, in mrad.
std::optional<PlaneVec> geometric_error_mrad(const CameraModel& cam, const CameraFrame& frame, const UnitVec3& sun,
                                             const UnitVec3& to_target, HeliostatMode mode);

class Simulation {
public:
    using FrameSink = std::function<void(Twin, int tick, const Image&, const std::vector<Detection>&)>;

    explicit Simulation(ScenarioConfig cfg);

    const ScenarioConfig& config() const { return cfg_; }
    int tick() const { return tick_; }
    double time_s() const { return tick_ * cfg_.tick_s; }
    /// Past the scenario duration; the service keeps stepping regardless.
    bool finished() const { return tick_ >= cfg_.tick_count(); }

    /// Applies due timeline entries, renders, measures, controls, logs and steps both twins.
    void advance(const FrameSink& sink = {});

    /// Mode change applied from the next tick. Throws InvalidCommand or StowInterlock.
    void command(Twin twin, const ModeCommand& cmd);
    bool stow_in_progress(Twin twin) const;

    const TwinView& view(Twin twin) const { return twins_[index(twin)].view; }
    const RunLog& log(Twin twin) const { return twins_[index(twin)].log; }

private:
    struct TwinState {
        TwinView view;
        PoseCommand hold;  // manual/stow pose
        CloudTracker clouds;
        std::mt19937_64 rng;
        RunLog log;
    };

    static std::size_t index(Twin t) { return t == Twin::vision ? 0 : 1; }
    void apply(TwinState& tw, const ModeCommand& cmd, double t_s);
    PoseCommand tracking_setpoint(HeliostatMode mode, double t_s, double quantum_mrad) const;
    UnitVec3 target_direction() const;

    ScenarioConfig cfg_;
    std::array<TwinState, 2> twins_;
    std::size_t next_event_ = 0;
    int tick_ = 0;
    ClassicalDetector detector_;
};

struct ScenarioRun {
    RunLog vision;
    RunLog scada;
};

/// Runs the whole timeline. The sink, if any, receives every frame.
ScenarioRun run_scenario(const ScenarioConfig& cfg, const Simulation::FrameSink& sink = {});

}  // namespace heliotrack
