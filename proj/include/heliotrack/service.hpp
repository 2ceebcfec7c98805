// HTTP/JSON service over a running simulation, with a server-sent event stream.
//
//   GET  /api/field                       layout, camera constants, all heliostat states
//   GET  /api/heliostats/{id}             pose, errors, flags, clouds
//   POST /api/heliostats/{id}/command     {"mode", "target"?, "pose"?, "offset_mrad"?, "nudge_mrad"?}
//   GET  /api/heliostats/{id}/log.csv     run log so far
//   GET  /api/frames/{id}                 latest frame (PPM)
//   GET  /api/frames/{id}/detections      detections of that frame (JSON)
//   GET  /api/events?limit=N              per-tick telemetry (text/event-stream)
//   GET  /api/sim, POST /api/sim?speed=N  simulation clock; speed 0 pauses
//   POST /api/sim/step                    one tick while paused
#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "heliotrack/scenario.hpp"
#include "heliotrack/simulation.hpp"

namespace httplib {
class Server;
}

namespace heliotrack {

inline constexpr double kDefaultSpeed = 10.0;
inline constexpr const char* kTargetId = "T1";

/// Heliostat id as seen by clients; nullopt for unknown ids.
std::optional<Twin> twin_from_id(const std::string& id);
std::string twin_id(Twin twin);

/// Outcome of parsing and checking a command body.
struct CommandCheck {
    int status = 202;  // 202 accepted, 404, 409, 422
    std::string error;
    std::optional<ModeCommand> command;
};

/// Parses a command JSON body. Field errors yield status 422.
CommandCheck parse_command_json(const std::string& body);

class FieldService {
public:
    FieldService(ScenarioConfig cfg, double speed = kDefaultSpeed);
    ~FieldService();
    FieldService(const FieldService&) = delete;
    FieldService& operator=(const FieldService&) = delete;

    /// Starts the stepping thread.
    void start();
    /// Stops the stepping thread and the HTTP server.
    void stop();

    /// Binds the HTTP server; port 0 picks a free port. Returns the port or -1.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind.
    void listen();

    /// Drains the command queue and advances one tick (the stepping thread calls this).
    void step();
    int tick() const;
    double speed() const { return speed_.load(); }
    void set_speed(double s);

    /// Validates and enqueues a command; the returned status is what the API reports.
    CommandCheck submit(const std::string& id, const std::string& body);

private:
    struct Snapshot;

    void routes();
    void publish();
    std::shared_ptr<const Snapshot> snapshot() const;

    Simulation sim_;
    std::unique_ptr<httplib::Server> server_;
    std::atomic<double> speed_;
    std::atomic<bool> running_{false};
    std::thread stepper_;

    mutable std::mutex mu_;  // snapshot and queue
    std::condition_variable cv_;
    std::shared_ptr<const Snapshot> snap_;
    std::deque<std::pair<Twin, ModeCommand>> queue_;
    std::mutex step_mu_;  // one tick at a time
};

}  // namespace heliotrack
