#include "heliotrack/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace heliotrack {

std::string_view to_string(Twin t) { return t == Twin::vision ? "vision" : "scada"; }

std::optional<PlaneVec> geometric_error_mrad(const CameraModel& cam, const CameraFrame& frame, const UnitVec3& sun,
                                             const UnitVec3& to_target, HeliostatMode mode) {
    const Vec3 s = frame.to_camera(sun.vec());
    if (s.z <= 0.0) return std::nullopt;
    const PixelPoint sp = project_direction(cam, UnitVec3(s));
    PixelPoint aim = sp;
    if (mode != HeliostatMode::sun_track) {
        const Vec3 t = frame.to_camera(to_target.vec());
        if (t.z <= 0.0) return std::nullopt;
        aim = midpoint(sp, project_direction(cam, UnitVec3(t)));
    }
    const PixelPoint c = cam.principal();
    return pixel_error_to_mrad(cam, {aim.u - c.u, aim.v - c.v});
}

namespace {

// Axis offset expressed like a camera-plane angle: cross-elevation for azimuth.
PoseCommand offset_pose(const PoseCommand& p, const PlaneVec& off_mrad) {
    const double cos_el = std::max(0.05, std::cos(deg2rad(p.elevation_deg)));
    double az = p.azimuth_deg + rad2deg(off_mrad.u * 1e-3) / cos_el;
    az = std::fmod(az, 360.0);
    if (az < 0.0) az += 360.0;
    return {az, std::clamp(p.elevation_deg + rad2deg(off_mrad.v * 1e-3), 0.0, 90.0)};
}

PoseCommand to_command(const AzEl& a) { return {a.azimuth_deg, a.elevation_deg}; }

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    // splitmix64 step over the combined value
    std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

Simulation::Simulation(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const auto& ds = cfg_.disturbances;

    PoseCommand start;
    if (cfg_.initial_pose) {
        start = to_command(*cfg_.initial_pose);
    } else {
        HeliostatMode first = HeliostatMode::target_track;
        if (!cfg_.timeline.empty() && cfg_.timeline.front().command.mode == HeliostatMode::sun_track) {
            first = HeliostatMode::sun_track;
        }
        start = offset_pose(tracking_setpoint(first, 0.0, 0.0), cfg_.initial_offset_mrad);
    }

    for (Twin t : kTwins) {
        TwinState& tw = twins_[index(t)];
        HeliostatState& p = tw.view.plant;
        p.position = cfg_.heliostat_position;
        p.azimuth_deg = start.azimuth_deg;
        p.elevation_deg = std::clamp(start.elevation_deg, 0.0, 90.0);
        p.az_rate_limit_dps = cfg_.az_rate_limit_dps;
        p.el_rate_limit_dps = cfg_.el_rate_limit_dps;
        p.encoder_quantum_mrad = cfg_.encoder_quantum_mrad;
        p.pedestal_tilt_mrad = ds.pedestal_tilt ? ds.tilt_mrad : PlaneVec{};
        p.deformation_gain = ds.deformation ? ds.deformation_gain : 0.0;
        p.mode = HeliostatMode::manual;
        tw.hold = {p.azimuth_deg, p.elevation_deg};
        tw.view.commanded = tw.hold;
        std::seed_seq seq{static_cast<std::uint32_t>(cfg_.seed), static_cast<std::uint32_t>(cfg_.seed >> 32),
                          static_cast<std::uint32_t>(index(t))};
        tw.rng.seed(seq);
        tw.log.name = cfg_.name + "/" + std::string(to_string(t));
        tw.log.tick_s = cfg_.tick_s;
    }
}

UnitVec3 Simulation::target_direction() const { return UnitVec3(cfg_.scene.target.center - cfg_.heliostat_position); }

PoseCommand Simulation::tracking_setpoint(HeliostatMode mode, double t_s, double quantum_mrad) const {
    GeoTime gt = cfg_.scene.site;
    gt.timestamp += t_s;
    const SunPosition sun = sun_direction(gt);
    if (mode == HeliostatMode::sun_track) return to_command(scada_sun_setpoint(sun, quantum_mrad));
    return to_command(scada_setpoint(sun, cfg_.heliostat_position, cfg_.scene.target.center, quantum_mrad));
}

bool Simulation::stow_in_progress(Twin twin) const {
    const HeliostatState& p = twins_[index(twin)].view.plant;
    return p.mode == HeliostatMode::stow && std::abs(p.elevation_deg - kStowElevationDeg) > 1e-9;
}

void Simulation::command(Twin twin, const ModeCommand& cmd) {
    if (stow_in_progress(twin) && cmd.mode != HeliostatMode::stow) throw StowInterlock();
    apply(twins_[index(twin)], cmd, time_s());
}

void Simulation::apply(TwinState& tw, const ModeCommand& cmd, double t_s) {
    const bool extras = cmd.offset_mrad || cmd.pose || cmd.nudge_mrad;
    if (cmd.mode != HeliostatMode::manual && extras) {
        throw InvalidCommand("pose, offset and nudge only apply to manual mode");
    }
    if ((cmd.offset_mrad ? 1 : 0) + (cmd.pose ? 1 : 0) + (cmd.nudge_mrad ? 1 : 0) > 1) {
        throw InvalidCommand("give at most one of pose, offset, nudge");
    }
    if (cmd.pose && !(cmd.pose->elevation_deg >= 0.0 && cmd.pose->elevation_deg <= 90.0 &&
                      std::isfinite(cmd.pose->azimuth_deg))) {
        throw InvalidCommand("pose elevation must be within [0, 90] deg");
    }
    HeliostatState& p = tw.view.plant;
    if (cmd.mode == p.mode && !extras) return;

    const PoseCommand here{p.azimuth_deg, p.elevation_deg};
    switch (cmd.mode) {
        case HeliostatMode::stow:
            tw.hold = {p.azimuth_deg, kStowElevationDeg};
            break;
        case HeliostatMode::manual:
            if (cmd.pose) {
                tw.hold = to_command(*cmd.pose);
            } else if (cmd.offset_mrad) {
                try {
                    tw.hold = offset_pose(tracking_setpoint(HeliostatMode::target_track, t_s, 0.0), *cmd.offset_mrad);
                } catch (const SunBelowHorizon&) {
                    throw InvalidCommand("offset needs the Sun above the horizon");
                }
            } else if (cmd.nudge_mrad) {
                tw.hold = offset_pose(p.mode == HeliostatMode::manual ? tw.hold : here, *cmd.nudge_mrad);
            } else {
                tw.hold = here;
            }
            break;
        case HeliostatMode::sun_track:
        case HeliostatMode::target_track:
            break;
    }
    if (cmd.mode != p.mode) tw.view.locked = false;
    p.mode = cmd.mode;
}

void Simulation::advance(const FrameSink& sink) {
    const double t = time_s();
    while (next_event_ < cfg_.timeline.size() && cfg_.timeline[next_event_].time_s <= t + 1e-9) {
        for (auto& tw : twins_) apply(tw, cfg_.timeline[next_event_].command, t);
        ++next_event_;
    }

    const CameraModel& cam = cfg_.camera;
    const UnitVec3 to_target = target_direction();
    GeoTime gt = cfg_.scene.site;
    gt.timestamp += t;
    const SunPosition ephem = sun_direction(gt);
    const UnitVec3 sun_apparent = cfg_.scene.sun_at(t);

    for (Twin which : kTwins) {
        TwinState& tw = twins_[index(which)];
        HeliostatState& p = tw.view.plant;
        if (cfg_.disturbances.jitter && cfg_.disturbances.jitter_sigma_mrad > 0.0) {
            std::normal_distribution<double> n(0.0, cfg_.disturbances.jitter_sigma_mrad);
            const double ju = n(tw.rng);
            p.jitter_mrad = {ju, n(tw.rng)};
        }

        Scene scene = cfg_.scene;
        scene.seed = mix(cfg_.seed, static_cast<std::uint64_t>(tick_) * 2 + index(which));
        const CameraFrame optical = optical_frame(p);
        RenderResult rr = render(scene, cam, {p.position, optical}, t);
        std::vector<Detection> dets = detector_.detect(rr.image);

        const AimingOffset calib = which == Twin::scada ? cfg_.calibration : AimingOffset{};
        FrameAnalysis fa = analyze_frame(dets, cam, calib);
        fa.cloud_tracks = tw.clouds.update(dets, t, cfg_.tick_s, fa.sun_bbox);

        TickRecord rec;
        rec.time_s = t;
        rec.mode = p.mode;
        rec.actual = {p.azimuth_deg, p.elevation_deg};
        rec.slew_dps = p.slew_dps;
        rec.sun = fa.sun_center;
        rec.target = fa.target_center;
        rec.aim = fa.aim_point;
        rec.camera_err_px = p.mode == HeliostatMode::sun_track ? sun_pointing_error_px(fa, calib) : fa.tracking_error_px;
        if (rec.camera_err_px) rec.camera_err_mrad = pixel_error_to_mrad(cam, *rec.camera_err_px);
        rec.scada_err_mrad = geometric_error_mrad(cam, nominal_frame(p), ephem.direction, to_target, p.mode);
        rec.true_err_mrad = geometric_error_mrad(cam, optical, sun_apparent, to_target, p.mode);
        rec.shadow = fa.shadow;
        rec.block = fa.block;
        rec.clouds = static_cast<int>(fa.cloud_tracks.size());
        for (const auto& ct : fa.cloud_tracks) {
            if (ct.time_to_occlusion_s && (!rec.tto_s || *ct.time_to_occlusion_s < *rec.tto_s)) {
                rec.tto_s = ct.time_to_occlusion_s;
            }
        }

        PoseCommand cmd = tw.hold;
        const AzEl enc = encoder_reading(p);
        if (is_tracking(p.mode)) {
            try {
                if (which == Twin::scada) {
                    cmd = tracking_setpoint(p.mode, t, cfg_.scada_quantum_mrad);
                } else if (rec.camera_err_px) {
                    tw.view.locked = true;
                    const TrackingError err = make_tracking_error(cam, *rec.camera_err_px, t);
                    cmd = command_to_pose(enc, control_step(cfg_.controller, cam, err));
                } else if (tw.view.locked) {
                    cmd = to_command(enc);  // lost sight: hold
                } else {
                    cmd = tracking_setpoint(p.mode, t, cfg_.scada_quantum_mrad);  // open-loop acquisition
                }
            } catch (const SunBelowHorizon&) {
                cmd = to_command(enc);
            }
        }
        rec.commanded = cmd;
        tw.view.commanded = cmd;

        if (sink) sink(which, tick_, rr.image, dets);
        tw.view.analysis = std::move(fa);
        tw.view.detections = std::move(dets);
        tw.view.truth = std::move(rr.truth);
        tw.view.frame = std::move(rr.image);
        tw.view.last = rec;
        tw.log.records.push_back(rec);
    }

    for (auto& tw : twins_) {
        const HeliostatMode mode = tw.view.plant.mode;
        tw.view.plant = step(tw.view.plant, tw.view.commanded, cfg_.tick_s);
        tw.view.plant.mode = mode;
    }
    ++tick_;
}

ScenarioRun run_scenario(const ScenarioConfig& cfg, const Simulation::FrameSink& sink) {
    Simulation sim(cfg);
    while (!sim.finished()) sim.advance(sink);
    return {sim.log(Twin::vision), sim.log(Twin::scada)};
}

}  // namespace heliotrack
