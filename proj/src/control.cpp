#include "heliotrack/control.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace heliotrack {

void ControllerConfig::validate() const {
    if (!(gain > 0.0 && gain <= 1.0)) throw std::invalid_argument("controller gain must be in (0, 1]");
    if (!(deadband_px >= 0.0)) throw std::invalid_argument("controller deadband must be >= 0");
    if (!(max_step_mrad > 0.0)) throw std::invalid_argument("controller max step must be > 0");
}

TrackingError make_tracking_error(const CameraModel& cam, const PlaneVec& error_px, double time_s) {
    return {error_px, pixel_error_to_mrad(cam, error_px), time_s};
}

AxisCommand control_step(const ControllerConfig& cfg, const CameraModel& cam, const TrackingError& err) {
    (void)cam;
    if (std::max(std::abs(err.error_px.u), std::abs(err.error_px.v)) <= cfg.deadband_px) {
        return {};
    }
    const double m = cfg.max_step_mrad;
    return {std::clamp(-cfg.gain * err.error_mrad.u, -m, m), std::clamp(-cfg.gain * err.error_mrad.v, -m, m)};
}

PoseCommand command_to_pose(const AzEl& encoder, const AxisCommand& cmd) {
    const double cos_el = std::max(0.05, std::cos(deg2rad(encoder.elevation_deg)));
    return {encoder.azimuth_deg + rad2deg(-cmd.d_azimuth_mrad * 1e-3 / cos_el),
            encoder.elevation_deg + rad2deg(cmd.d_elevation_mrad * 1e-3)};
}

AimingOffset calibrate_aiming(const std::vector<FrameAnalysis>& frames) {
    std::vector<PlaneVec> d;
    for (const auto& f : frames) {
        if (f.sun_center) d.push_back({f.sun_center->u - f.principal.u, f.sun_center->v - f.principal.v});
    }
    if (d.empty()) throw NoValidFrames();
    AimingOffset out;
    out.samples = static_cast<int>(d.size());
    for (const auto& p : d) {
        out.du += p.u;
        out.dv += p.v;
    }
    out.du /= out.samples;
    out.dv /= out.samples;
    if (out.samples > 1) {
        double su = 0.0, sv = 0.0;
        for (const auto& p : d) {
            su += (p.u - out.du) * (p.u - out.du);
            sv += (p.v - out.dv) * (p.v - out.dv);
        }
        out.sigma_u = std::sqrt(su / (out.samples - 1));
        out.sigma_v = std::sqrt(sv / (out.samples - 1));
    }
    return out;
}

namespace {

AzEl quantize(AzEl a, double quantum_mrad) {
    if (!(quantum_mrad > 0.0)) return a;
    const double q = rad2deg(quantum_mrad * 1e-3);
    a.azimuth_deg = std::round(a.azimuth_deg / q) * q;
    a.elevation_deg = std::round(a.elevation_deg / q) * q;
    if (a.azimuth_deg >= 360.0) a.azimuth_deg -= 360.0;
    return a;
}

}  // namespace

AzEl scada_setpoint(const SunPosition& sun, const Vec3& heliostat_pos, const Vec3& target_pos, double quantum_mrad) {
    if (!(sun.elevation_deg > 0.0)) throw SunBelowHorizon();
    const UnitVec3 to_target(target_pos - heliostat_pos);
    return quantize(az_el_from_direction(bisector(sun.direction, to_target)), quantum_mrad);
}

AzEl scada_sun_setpoint(const SunPosition& sun, double quantum_mrad) {
    if (!(sun.elevation_deg > 0.0)) throw SunBelowHorizon();
    return quantize(az_el_from_direction(sun.direction), quantum_mrad);
}

std::string_view to_string(Phase p) {
    switch (p) {
        case Phase::steady: return "steady";
        case Phase::transition: return "transition";
        case Phase::off_track: return "off_track";
        case Phase::unavailable: return "unavailable";
    }
    return "unknown";
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void summarize(AxisSeries& s, const std::vector<double>& time, const std::vector<Phase>& phase,
               const CompareOptions& opt) {
    double steady_sum = 0.0;
    int steady_n = 0;
    const std::size_t n = s.diff_mrad.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::abs(s.diff_mrad[i]);
        if (std::isnan(a)) continue;
        s.max_abs_diff = std::max(s.max_abs_diff, a);
        if (phase[i] == Phase::steady) {
            steady_sum += a;
            ++steady_n;
            s.steady_max_abs_diff = std::max(s.steady_max_abs_diff, a);
        } else if (phase[i] == Phase::transition) {
            s.transition_max_abs_diff = std::max(s.transition_max_abs_diff, a);
        }
        if (a >= opt.steady_limit_mrad && phase[i] != Phase::transition) ++s.unconfined_excursions;
        if (a >= opt.spike_threshold_mrad) {
            const double prev = i > 0 ? std::abs(s.diff_mrad[i - 1]) : 0.0;
            const double next = i + 1 < n ? std::abs(s.diff_mrad[i + 1]) : 0.0;
            if (!(prev > a) && !(next >= a)) s.spike_times_s.push_back(time[i]);
        }
    }
    s.steady_mean_abs_diff = steady_n > 0 ? steady_sum / steady_n : 0.0;
}

}  // namespace

ErrorSeries compare_runs(const RunLog& vision_log, const RunLog& scada_log, const CompareOptions& opt) {
    const auto& v = vision_log.records;
    const auto& s = scada_log.records;
    if (v.size() != s.size()) {
        throw TimestampMismatch("logs have different lengths (" + std::to_string(v.size()) + " vs " +
                                std::to_string(s.size()) + ")");
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (std::abs(v[i].time_s - s[i].time_s) > 1e-9) {
            throw TimestampMismatch("timestamps differ at index " + std::to_string(i));
        }
    }

    const std::size_t n = v.size();
    ErrorSeries es;
    es.time_s.resize(n);
    es.phase.assign(n, Phase::steady);

    // Transition: either plant moving or a mode change, dilated by the settle window.
    std::vector<bool> moving(n, false);
    auto is_moving = [&](const TickRecord& r) {
        return std::abs(r.slew_dps.u) > opt.slew_threshold_dps || std::abs(r.slew_dps.v) > opt.slew_threshold_dps;
    };
    for (std::size_t i = 0; i < n; ++i) {
        es.time_s[i] = v[i].time_s;
        const bool mode_change = i > 0 && (v[i].mode != v[i - 1].mode || s[i].mode != s[i - 1].mode);
        moving[i] = is_moving(v[i]) || is_moving(s[i]) || mode_change;
    }
    int since_motion = std::numeric_limits<int>::max() / 2;
    for (std::size_t i = 0; i < n; ++i) {
        since_motion = moving[i] ? 0 : since_motion + 1;
        if (!v[i].camera_err_mrad || !s[i].scada_err_mrad) {
            es.phase[i] = Phase::unavailable;
        } else if (since_motion <= opt.settle_ticks) {
            es.phase[i] = Phase::transition;
        } else if (!is_tracking(v[i].mode) || !is_tracking(s[i].mode)) {
            es.phase[i] = Phase::off_track;
        }
        if (es.phase[i] == Phase::steady) ++es.steady_ticks;
        if (es.phase[i] == Phase::transition) ++es.transition_ticks;
    }

    auto fill = [&](AxisSeries& ax, auto pick) {
        ax.vision_mrad.resize(n);
        ax.scada_mrad.resize(n);
        ax.diff_mrad.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            ax.vision_mrad[i] = v[i].camera_err_mrad ? pick(*v[i].camera_err_mrad) : kNaN;
            ax.scada_mrad[i] = s[i].scada_err_mrad ? pick(*s[i].scada_err_mrad) : kNaN;
            ax.diff_mrad[i] = ax.vision_mrad[i] - ax.scada_mrad[i];
        }
        summarize(ax, es.time_s, es.phase, opt);
    };
    fill(es.azimuth, [](const PlaneVec& p) { return p.u; });
    fill(es.elevation, [](const PlaneVec& p) { return p.v; });
    return es;
}

void write_error_series_csv(std::ostream& os, const ErrorSeries& es) {
    os << "time_s,axis,vision_err_mrad,scada_err_mrad,diff_mrad\n";
    char buf[160];
    auto field = [](double x, char* out, std::size_t len) {
        if (std::isnan(x)) {
            out[0] = '\0';
        } else {
            std::snprintf(out, len, "%.6f", x);
        }
    };
    for (std::size_t i = 0; i < es.time_s.size(); ++i) {
        for (const auto* ax : {&es.azimuth, &es.elevation}) {
            char a[40], b[40], c[40];
            field(ax->vision_mrad[i], a, sizeof a);
            field(ax->scada_mrad[i], b, sizeof b);
            field(ax->diff_mrad[i], c, sizeof c);
            std::snprintf(buf, sizeof buf, "%.3f,%s,%s,%s,%s\n", es.time_s[i],
                          ax == &es.azimuth ? "azimuth" : "elevation", a, b, c);
            os << buf;
        }
    }
}

}  // namespace heliotrack
