#include "heliotrack/service.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace heliotrack {

using nlohmann::json;

std::optional<Twin> twin_from_id(const std::string& id) {
    if (id == "H01") return Twin::vision;
    if (id == "H01-scada") return Twin::scada;
    return std::nullopt;
}

std::string twin_id(Twin twin) { return twin == Twin::vision ? "H01" : "H01-scada"; }

namespace {

json opt_vec(const std::optional<PlaneVec>& v) {
    if (!v) return nullptr;
    return json::array({v->u, v->v});
}

json opt_pt(const std::optional<PixelPoint>& p) {
    if (!p) return nullptr;
    return json::array({p->u, p->v});
}

json bbox_json(const BBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

json state_json(Twin twin, const TwinView& v, bool stowing, int tick, double time_s) {
    json clouds = json::array();
    std::optional<double> tto;
    for (const auto& c : v.analysis.cloud_tracks) {
        json jc{{"id", c.id}, {"bbox", bbox_json(c.bbox)}, {"velocity_px_s", opt_vec(c.velocity_px_s)}};
        jc["time_to_occlusion_s"] = c.time_to_occlusion_s ? json(*c.time_to_occlusion_s) : json(nullptr);
        if (c.time_to_occlusion_s && (!tto || *c.time_to_occlusion_s < *tto)) tto = c.time_to_occlusion_s;
        clouds.push_back(jc);
    }
    const TickRecord* r = v.last ? &*v.last : nullptr;
    json j{{"id", twin_id(twin)},
           {"controller", twin == Twin::vision ? "camera" : "ephemeris"},
           {"tick", tick},
           {"time_s", time_s},
           {"mode", std::string(to_string(v.plant.mode))},
           {"pose", {{"azimuth_deg", v.plant.azimuth_deg}, {"elevation_deg", v.plant.elevation_deg}}},
           {"commanded", {{"azimuth_deg", v.commanded.azimuth_deg}, {"elevation_deg", v.commanded.elevation_deg}}},
           {"locked", v.locked},
           {"stow_in_progress", stowing},
           {"sun", opt_pt(v.analysis.sun_center)},
           {"target", opt_pt(v.analysis.target_center)},
           {"aim", opt_pt(v.analysis.aim_point)},
           {"tracking_error_px", r ? opt_vec(r->camera_err_px) : json(nullptr)},
           {"tracking_error_mrad", r ? opt_vec(r->camera_err_mrad) : json(nullptr)},
           {"scada_error_mrad", r ? opt_vec(r->scada_err_mrad) : json(nullptr)},
           {"shadow", v.analysis.shadow},
           {"block", v.analysis.block},
           {"clouds", clouds},
           {"cloud_tto_s", tto ? json(*tto) : json(nullptr)}};
    return j;
}

std::optional<PlaneVec> pair_field(const json& j, const char* key, std::string& err) {
    if (!j.contains(key)) return std::nullopt;
    const json& v = j[key];
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        err = std::string(key) + " must be a list of two numbers";
        return std::nullopt;
    }
    return PlaneVec{v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

CommandCheck parse_command_json(const std::string& body) {
    CommandCheck out;
    out.status = 422;
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception&) {
        out.error = "body is not valid JSON";
        return out;
    }
    if (!j.is_object()) {
        out.error = "body must be a JSON object";
        return out;
    }
    for (const auto& [k, _] : j.items()) {
        if (k != "mode" && k != "target" && k != "pose" && k != "offset_mrad" && k != "nudge_mrad") {
            out.error = "unknown field '" + k + "'";
            return out;
        }
    }
    if (!j.contains("mode") || !j["mode"].is_string()) {
        out.error = "mode is required";
        return out;
    }
    ModeCommand c;
    try {
        c.mode = heliostat_mode_from_string(j["mode"].get<std::string>());
    } catch (const std::invalid_argument& e) {
        out.error = e.what();
        return out;
    }
    if (j.contains("target")) {
        if (c.mode != HeliostatMode::target_track) {
            out.error = "target only applies to target_track";
            return out;
        }
        if (!j["target"].is_string() || j["target"].get<std::string>() != kTargetId) {
            out.error = "unknown target";
            return out;
        }
    }
    std::string err;
    const auto pose = pair_field(j, "pose", err);
    c.offset_mrad = pair_field(j, "offset_mrad", err);
    c.nudge_mrad = pair_field(j, "nudge_mrad", err);
    if (!err.empty()) {
        out.error = err;
        return out;
    }
    if (pose) c.pose = AzEl{pose->u, pose->v};
    const int extras = (c.pose ? 1 : 0) + (c.offset_mrad ? 1 : 0) + (c.nudge_mrad ? 1 : 0);
    if (extras > 0 && c.mode != HeliostatMode::manual) {
        out.error = "pose, offset_mrad and nudge_mrad only apply to manual mode";
        return out;
    }
    if (extras > 1) {
        out.error = "give at most one of pose, offset_mrad, nudge_mrad";
        return out;
    }
    if (c.pose && !(c.pose->elevation_deg >= 0.0 && c.pose->elevation_deg <= 90.0 &&
                    c.pose->azimuth_deg >= 0.0 && c.pose->azimuth_deg < 360.0)) {
        out.error = "pose must be azimuth in [0, 360) and elevation in [0, 90] deg";
        return out;
    }
    out.status = 202;
    out.command = c;
    return out;
}

struct FieldService::Snapshot {
    int tick = -1;  // no tick run yet
    double time_s = 0.0;
    std::string field;
    std::array<std::string, 2> state;  // JSON per twin
    std::array<std::string, 2> ppm;
    std::array<std::string, 2> detections;
    std::array<std::shared_ptr<const RunLog>, 2> log;
    std::array<bool, 2> stowing{false, false};
};

FieldService::FieldService(ScenarioConfig cfg, double speed)
    : sim_(std::move(cfg)), server_(std::make_unique<httplib::Server>()), speed_(speed) {
    publish();
    routes();
}

FieldService::~FieldService() { stop(); }

void FieldService::set_speed(double s) {
    speed_ = std::max(0.0, s);
    cv_.notify_all();
}

int FieldService::tick() const { return snapshot()->tick; }

std::shared_ptr<const FieldService::Snapshot> FieldService::snapshot() const {
    std::lock_guard lk(mu_);
    return snap_;
}

void FieldService::publish() {
    auto s = std::make_shared<Snapshot>();
    s->tick = sim_.tick() - 1;
    s->time_s = s->tick >= 0 ? s->tick * sim_.config().tick_s : 0.0;
    const auto& cfg = sim_.config();
    const auto& cam = cfg.camera;
    json hel = json::array();
    for (Twin t : kTwins) {
        const std::size_t i = t == Twin::vision ? 0 : 1;
        const TwinView& v = sim_.view(t);
        s->stowing[i] = sim_.stow_in_progress(t);
        const json st = state_json(t, v, s->stowing[i], s->tick, s->time_s);
        hel.push_back(st);
        s->state[i] = st.dump();
        s->ppm[i] = v.frame.empty() ? std::string() : encode_ppm(v.frame);
        json dets = json::array();
        for (const auto& d : v.detections) {
            dets.push_back({{"class", std::string(to_string(d.cls))},
                            {"bbox", bbox_json(d.bbox)},
                            {"score", d.score},
                            {"center", {d.center.u, d.center.v}}});
        }
        s->detections[i] = json{{"id", twin_id(t)}, {"tick", s->tick}, {"detections", dets}}.dump();
        s->log[i] = std::make_shared<const RunLog>(sim_.log(t));
    }
    const WorldRect& tg = cfg.scene.target;
    const json field{
        {"scenario", cfg.name},
        {"tick", s->tick},
        {"time_s", s->time_s},
        {"tick_s", cfg.tick_s},
        {"speed", speed_.load()},
        {"site",
         {{"latitude_deg", cfg.scene.site.latitude_deg},
          {"longitude_deg", cfg.scene.site.longitude_deg},
          {"start_utc_s", cfg.scene.site.timestamp}}},
        {"camera",
         {{"width_px", cam.width_px()},
          {"height_px", cam.height_px()},
          {"focal_mm", cam.focal_mm()},
          {"pitch_mm", cam.pitch_mm()},
          {"focal_px", cam.focal_px()},
          {"principal", {cam.principal().u, cam.principal().v}},
          {"pointing_uncertainty_mrad", pointing_uncertainty(cam)}}},
        {"target",
         {{"id", kTargetId},
          {"center", {tg.center.x, tg.center.y, tg.center.z}},
          {"width_m", tg.width_m},
          {"height_m", tg.height_m}}},
        {"heliostats", hel}};
    s->field = field.dump();
    {
        std::lock_guard lk(mu_);
        snap_ = std::move(s);
    }
    cv_.notify_all();
}

void FieldService::step() {
    std::lock_guard step_lk(step_mu_);
    std::deque<std::pair<Twin, ModeCommand>> pending;
    {
        std::lock_guard lk(mu_);
        pending.swap(queue_);
    }
    for (const auto& [twin, cmd] : pending) {
        try {
            sim_.command(twin, cmd);
        } catch (const std::exception&) {
            // Accepted against the previous snapshot but no longer applicable.
        }
    }
    sim_.advance();
    publish();
}

CommandCheck FieldService::submit(const std::string& id, const std::string& body) {
    const auto twin = twin_from_id(id);
    if (!twin) return {404, "unknown heliostat '" + id + "'", std::nullopt};
    CommandCheck c = parse_command_json(body);
    if (c.status != 202) return c;
    const auto s = snapshot();
    const bool stowing = s->stowing[*twin == Twin::vision ? 0 : 1];
    if (stowing && c.command->mode != HeliostatMode::stow) {
        return {409, "stow in progress", std::nullopt};
    }
    {
        std::lock_guard lk(mu_);
        queue_.emplace_back(*twin, *c.command);
    }
    return c;
}

void FieldService::start() {
    if (running_.exchange(true)) return;
    stepper_ = std::thread([this] {
        auto next = std::chrono::steady_clock::now();
        while (running_) {
            const double sp = speed_.load();
            if (sp <= 0.0) {
                std::unique_lock lk(mu_);
                cv_.wait_for(lk, std::chrono::milliseconds(50));
                next = std::chrono::steady_clock::now();
                continue;
            }
            step();
            next += std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                std::chrono::duration<double>(sim_.config().tick_s / sp));
            const auto now = std::chrono::steady_clock::now();
            if (next < now) next = now;  // fell behind: do not burst
            std::unique_lock lk(mu_);
            cv_.wait_until(lk, next, [this] { return !running_; });
        }
    });
}

void FieldService::stop() {
    if (running_.exchange(false)) {
        cv_.notify_all();
        if (stepper_.joinable()) stepper_.join();
    }
    if (server_) server_->stop();
    cv_.notify_all();
}

int FieldService::bind(const std::string& host, int port) {
    if (port == 0) return server_->bind_to_any_port(host);
    return server_->bind_to_port(host, port) ? port : -1;
}

void FieldService::listen() { server_->listen_after_bind(); }

void FieldService::routes() {
    auto& srv = *server_;
    auto json_reply = [](httplib::Response& res, int status, const std::string& body) {
        res.status = status;
        res.set_content(body, "application/json");
    };
    auto error = [json_reply](httplib::Response& res, int status, const std::string& msg) {
        json_reply(res, status, json{{"error", msg}}.dump());
    };

    srv.Get("/api/field", [this, json_reply](const httplib::Request&, httplib::Response& res) {
        json_reply(res, 200, snapshot()->field);
    });

    srv.Get(R"(/api/heliostats/([^/]+))", [this, json_reply, error](const httplib::Request& req,
                                                                       httplib::Response& res) {
        const auto t = twin_from_id(req.matches[1]);
        if (!t) return error(res, 404, "unknown heliostat");
        json_reply(res, 200, snapshot()->state[*t == Twin::vision ? 0 : 1]);
    });

    srv.Get(R"(/api/heliostats/([^/]+)/log\.csv)", [this, error](const httplib::Request& req, httplib::Response& res) {
        const auto t = twin_from_id(req.matches[1]);
        if (!t) return error(res, 404, "unknown heliostat");
        res.set_content(run_log_csv(*snapshot()->log[*t == Twin::vision ? 0 : 1]), "text/csv");
    });

    srv.Post(R"(/api/heliostats/([^/]+)/command)", [this, json_reply](const httplib::Request& req,
                                                                     httplib::Response& res) {
        const CommandCheck c = submit(req.matches[1], req.body);
        if (c.status != 202) {
            json_reply(res, c.status, json{{"error", c.error}}.dump());
        } else {
            json_reply(res, 202, json{{"accepted", true}, {"applies_at_tick", tick() + 1}}.dump());
        }
    });

    srv.Get(R"(/api/frames/([^/]+))", [this, error](const httplib::Request& req, httplib::Response& res) {
        const auto t = twin_from_id(req.matches[1]);
        if (!t) return error(res, 404, "unknown heliostat");
        const auto s = snapshot();
        const std::string& ppm = s->ppm[*t == Twin::vision ? 0 : 1];
        if (ppm.empty()) return error(res, 404, "no frame yet");
        res.set_header("X-Tick", std::to_string(s->tick));
        res.set_content(ppm, "image/x-portable-pixmap");
    });

    srv.Get(R"(/api/frames/([^/]+)/detections)", [this, json_reply, error](const httplib::Request& req,
                                                                          httplib::Response& res) {
        const auto t = twin_from_id(req.matches[1]);
        if (!t) return error(res, 404, "unknown heliostat");
        json_reply(res, 200, snapshot()->detections[*t == Twin::vision ? 0 : 1]);
    });

    srv.Get("/api/sim", [this, json_reply](const httplib::Request&, httplib::Response& res) {
        json_reply(res, 200, json{{"tick", tick()}, {"speed", speed()}}.dump());
    });

    srv.Post("/api/sim", [this, json_reply, error](const httplib::Request& req, httplib::Response& res) {
        if (!req.has_param("speed")) return error(res, 422, "speed query parameter required");
        double s = 0.0;
        try {
            s = std::stod(req.get_param_value("speed"));
        } catch (const std::exception&) {
            return error(res, 422, "speed must be a number");
        }
        if (!(s >= 0.0) || !std::isfinite(s)) return error(res, 422, "speed must be >= 0");
        set_speed(s);
        json_reply(res, 200, json{{"tick", tick()}, {"speed", speed()}}.dump());
    });

    srv.Post("/api/sim/step", [this, json_reply, error](const httplib::Request&, httplib::Response& res) {
        if (speed() > 0.0) return error(res, 409, "simulation is running; set speed=0 first");
        step();
        json_reply(res, 200, json{{"tick", tick()}}.dump());
    });

    srv.Get("/api/events", [this](const httplib::Request& req, httplib::Response& res) {
        long limit = -1;
        if (req.has_param("limit")) {
            try {
                limit = std::stol(req.get_param_value("limit"));
            } catch (const std::exception&) {
                limit = -1;
            }
        }
        auto last = std::make_shared<int>(tick() - 1);
        auto sent = std::make_shared<long>(0);
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream", [this, last, sent, limit](std::size_t, httplib::DataSink& sink) {
                if (!server_->is_running()) return false;
                std::shared_ptr<const Snapshot> s;
                {
                    std::unique_lock lk(mu_);
                    cv_.wait_for(lk, std::chrono::milliseconds(250), [&] { return snap_->tick > *last; });
                    s = snap_;
                }
                if (s->tick <= *last) {
                    // Keep-alive comment; also detects closed connections.
                    const std::string ping = ": keep-alive\n\n";
                    return sink.write(ping.data(), ping.size()) && sink.is_writable();
                }
                *last = s->tick;
                std::string out;
                for (std::size_t i = 0; i < 2; ++i) {
                    out += "id: " + std::to_string(s->tick) + "\nevent: tick\ndata: " + s->state[i] + "\n\n";
                }
                if (!sink.write(out.data(), out.size())) return false;
                if (limit > 0 && ++*sent >= limit) {
                    sink.done();
                }
                return true;
            });
    });
}

}  // namespace heliotrack
