#include "heliotrack/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#ifndef HELIOTRACK_SCENARIO_DIR
#define HELIOTRACK_SCENARIO_DIR "scenarios"
#endif

namespace heliotrack {

namespace {

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& n, const std::string& field, const std::string& why) const {
        std::ostringstream os;
        os << source_;
        if (n.IsDefined() && !n.Mark().is_null()) os << ':' << n.Mark().line + 1 << ':' << n.Mark().column + 1;
        os << ": " << field << ": " << why;
        throw ConfigError(os.str());
    }

    void only(const YAML::Node& map, const std::string& path, std::initializer_list<const char*> keys) const {
        if (!map.IsMap()) fail(map, path, "expected a mapping");
        std::set<std::string> ok(keys.begin(), keys.end());
        for (const auto& kv : map) {
            const auto k = kv.first.as<std::string>();
            if (!ok.count(k)) fail(kv.first, join(path, k), "unknown field");
        }
    }

    static std::string join(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }

    double num(const YAML::Node& map, const std::string& path, const char* key, double def) const {
        const YAML::Node n = map[key];
        if (!n) return def;
        return num(n, join(path, key));
    }

    double num(const YAML::Node& n, const std::string& field) const {
        try {
            const double v = n.as<double>();
            if (!std::isfinite(v)) fail(n, field, "must be finite");
            return v;
        } catch (const YAML::Exception&) {
            fail(n, field, "expected a number");
        }
    }

    double req_num(const YAML::Node& map, const std::string& path, const char* key) const {
        const YAML::Node n = map[key];
        if (!n) fail(map, join(path, key), "required field missing");
        return num(n, join(path, key));
    }

    bool flag(const YAML::Node& map, const std::string& path, const char* key, bool def) const {
        const YAML::Node n = map[key];
        if (!n) return def;
        try {
            return n.as<bool>();
        } catch (const YAML::Exception&) {
            fail(n, join(path, key), "expected true or false");
        }
    }

    std::string str(const YAML::Node& map, const std::string& path, const char* key, const std::string& def) const {
        const YAML::Node n = map[key];
        if (!n) return def;
        if (!n.IsScalar()) fail(n, join(path, key), "expected a string");
        return n.as<std::string>();
    }

    std::vector<double> list(const YAML::Node& n, const std::string& field, std::size_t size) const {
        if (!n.IsSequence() || n.size() != size) {
            fail(n, field, "expected a list of " + std::to_string(size) + " numbers");
        }
        std::vector<double> out;
        for (std::size_t i = 0; i < size; ++i) out.push_back(num(n[i], field + "[" + std::to_string(i) + "]"));
        return out;
    }

    Vec3 vec3(const YAML::Node& map, const std::string& path, const char* key) const {
        const YAML::Node n = map[key];
        if (!n) fail(map, join(path, key), "required field missing");
        const auto v = list(n, join(path, key), 3);
        return {v[0], v[1], v[2]};
    }

    PlaneVec pair(const YAML::Node& n, const std::string& field) const {
        const auto v = list(n, field, 2);
        return {v[0], v[1]};
    }

private:
    std::string source_;
};

double parse_utc(const Reader& r, const YAML::Node& n, const std::string& field) {
    const std::string s = n.as<std::string>();
    int y, mo, d, h = 0, mi = 0;
    double sec = 0.0;
    char tail = 0;
    const int got = std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%lf%c", &y, &mo, &d, &h, &mi, &sec, &tail);
    if (got < 3 || (got > 3 && (got != 7 || tail != 'Z')) || mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 ||
        mi < 0 || mi > 59 || sec < 0.0 || sec >= 61.0) {
        r.fail(n, field, "expected an ISO-8601 UTC time like 2026-03-20T11:00:00Z");
    }
    return utc_timestamp(y, mo, d, h, mi, sec);
}

ModeCommand parse_command(const Reader& r, const YAML::Node& n, const std::string& path) {
    ModeCommand c;
    const YAML::Node m = n["mode"];
    if (!m) r.fail(n, Reader::join(path, "mode"), "required field missing");
    try {
        c.mode = heliostat_mode_from_string(m.as<std::string>());
    } catch (const std::invalid_argument& e) {
        r.fail(m, Reader::join(path, "mode"), e.what());
    }
    if (n["offset_mrad"]) c.offset_mrad = r.pair(n["offset_mrad"], Reader::join(path, "offset_mrad"));
    if (n["pose_deg"]) {
        const PlaneVec p = r.pair(n["pose_deg"], Reader::join(path, "pose_deg"));
        c.pose = AzEl{p.u, p.v};
    }
    if (c.mode != HeliostatMode::manual && (c.offset_mrad || c.pose)) {
        r.fail(n, path, "offset_mrad/pose_deg only apply to manual mode");
    }
    if (c.offset_mrad && c.pose) r.fail(n, path, "give either offset_mrad or pose_deg, not both");
    return c;
}

WorldRect parse_rect(const Reader& r, const YAML::Node& n, const std::string& path, const Vec3& heliostat) {
    r.only(n, path, {"center", "width_m", "height_m", "normal_az_deg", "normal_el_deg"});
    WorldRect w;
    w.center = r.vec3(n, path, "center");
    w.width_m = r.req_num(n, path, "width_m");
    w.height_m = r.req_num(n, path, "height_m");
    if (!(w.width_m > 0.0) || !(w.height_m > 0.0)) r.fail(n, path, "size must be positive");
    if (n["normal_az_deg"] || n["normal_el_deg"]) {
        w.normal_az_deg = r.req_num(n, path, "normal_az_deg");
        w.normal_el_deg = r.req_num(n, path, "normal_el_deg");
    } else {
        // Face the heliostat under test.
        const Vec3 d = heliostat - w.center;
        if (norm(d) == 0.0) r.fail(n, path, "coincides with the heliostat");
        const AzEl ae = az_el_from_direction(UnitVec3(d));
        w.normal_az_deg = ae.azimuth_deg;
        w.normal_el_deg = ae.elevation_deg;
    }
    return w;
}

CloudSpec parse_cloud(const Reader& r, const YAML::Node& n, const std::string& path) {
    r.only(n, path,
           {"label", "azimuth_deg", "elevation_deg", "semi_major_mrad", "semi_minor_mrad", "orientation_deg",
            "az_rate_mrad_s", "el_rate_mrad_s"});
    CloudSpec c;
    c.label = static_cast<int>(r.num(n, path, "label", 0));
    c.azimuth_deg = r.req_num(n, path, "azimuth_deg");
    c.elevation_deg = r.req_num(n, path, "elevation_deg");
    c.semi_major_mrad = r.num(n, path, "semi_major_mrad", c.semi_major_mrad);
    c.semi_minor_mrad = r.num(n, path, "semi_minor_mrad", c.semi_minor_mrad);
    c.orientation_deg = r.num(n, path, "orientation_deg", 0.0);
    c.az_rate_mrad_s = r.num(n, path, "az_rate_mrad_s", 0.0);
    c.el_rate_mrad_s = r.num(n, path, "el_rate_mrad_s", 0.0);
    if (!(c.semi_major_mrad > 0.0) || !(c.semi_minor_mrad > 0.0)) r.fail(n, path, "angular size must be positive");
    return c;
}

ScenarioConfig parse_node(const YAML::Node& root, const std::string& source, const std::filesystem::path& base_dir) {
    const Reader r(source);
    r.only(root, "",
           {"name", "site", "camera", "heliostat", "target", "neighbors", "clouds", "controller", "scada",
            "disturbances", "initial", "timeline", "tick_s", "duration_s", "seed", "calibration",
            "calibration_file", "frame_stride", "render"});
    ScenarioConfig cfg;
    cfg.name = r.str(root, "", "name", "");

    const YAML::Node site = root["site"];
    if (!site) r.fail(root, "site", "required field missing");
    r.only(site, "site", {"latitude_deg", "longitude_deg", "start_utc"});
    cfg.scene.site.latitude_deg = r.num(site, "site", "latitude_deg", kPsaLatitudeDeg);
    cfg.scene.site.longitude_deg = r.num(site, "site", "longitude_deg", kPsaLongitudeDeg);
    if (!site["start_utc"]) r.fail(site, "site.start_utc", "required field missing");
    cfg.scene.site.timestamp = parse_utc(r, site["start_utc"], "site.start_utc");
    try {
        cfg.scene.site.validate();
    } catch (const std::invalid_argument& e) {
        r.fail(site, "site", e.what());
    }

    if (const YAML::Node cam = root["camera"]) {
        r.only(cam, "camera", {"width_px", "height_px", "sensor_w_mm", "sensor_h_mm", "focal_mm", "principal"});
        const auto ref = CameraModel::reference();
        const int w = static_cast<int>(r.num(cam, "camera", "width_px", ref.width_px()));
        const int h = static_cast<int>(r.num(cam, "camera", "height_px", ref.height_px()));
        const double sw = r.num(cam, "camera", "sensor_w_mm", ref.sensor_w_mm());
        const double sh = r.num(cam, "camera", "sensor_h_mm", ref.sensor_h_mm());
        const double f = r.num(cam, "camera", "focal_mm", ref.focal_mm());
        try {
            if (cam["principal"]) {
                const PlaneVec p = r.pair(cam["principal"], "camera.principal");
                cfg.camera = CameraModel(w, h, sw, sh, f, {p.u, p.v});
            } else {
                cfg.camera = CameraModel(w, h, sw, sh, f);
            }
        } catch (const std::invalid_argument& e) {
            r.fail(cam, "camera", e.what());
        }
    }

    const YAML::Node hel = root["heliostat"];
    if (!hel) r.fail(root, "heliostat", "required field missing");
    r.only(hel, "heliostat", {"position", "az_rate_dps", "el_rate_dps", "encoder_quantum_mrad"});
    cfg.heliostat_position = r.vec3(hel, "heliostat", "position");
    cfg.az_rate_limit_dps = r.num(hel, "heliostat", "az_rate_dps", cfg.az_rate_limit_dps);
    cfg.el_rate_limit_dps = r.num(hel, "heliostat", "el_rate_dps", cfg.el_rate_limit_dps);
    cfg.encoder_quantum_mrad = r.num(hel, "heliostat", "encoder_quantum_mrad", 0.0);
    if (!(cfg.az_rate_limit_dps > 0.0) || !(cfg.el_rate_limit_dps > 0.0)) {
        r.fail(hel, "heliostat", "rate limits must be positive");
    }

    if (!root["target"]) r.fail(root, "target", "required field missing");
    cfg.scene.target = parse_rect(r, root["target"], "target", cfg.heliostat_position);
    if (const YAML::Node ns = root["neighbors"]) {
        if (!ns.IsSequence()) r.fail(ns, "neighbors", "expected a list");
        for (std::size_t i = 0; i < ns.size(); ++i) {
            cfg.scene.neighbors.push_back(
                parse_rect(r, ns[i], "neighbors[" + std::to_string(i) + "]", cfg.heliostat_position));
        }
    }
    if (const YAML::Node cs = root["clouds"]) {
        if (!cs.IsSequence()) r.fail(cs, "clouds", "expected a list");
        for (std::size_t i = 0; i < cs.size(); ++i) {
            cfg.scene.clouds.push_back(parse_cloud(r, cs[i], "clouds[" + std::to_string(i) + "]"));
        }
    }

    if (const YAML::Node c = root["controller"]) {
        r.only(c, "controller", {"gain", "deadband_px", "max_step_mrad"});
        cfg.controller.gain = r.num(c, "controller", "gain", cfg.controller.gain);
        cfg.controller.deadband_px = r.num(c, "controller", "deadband_px", cfg.controller.deadband_px);
        cfg.controller.max_step_mrad = r.num(c, "controller", "max_step_mrad", cfg.controller.max_step_mrad);
        try {
            cfg.controller.validate();
        } catch (const std::invalid_argument& e) {
            r.fail(c, "controller", e.what());
        }
    }
    if (const YAML::Node s = root["scada"]) {
        r.only(s, "scada", {"quantum_mrad"});
        cfg.scada_quantum_mrad = r.num(s, "scada", "quantum_mrad", cfg.scada_quantum_mrad);
        if (cfg.scada_quantum_mrad < 0.0) r.fail(s, "scada.quantum_mrad", "must be >= 0");
    }

    if (const YAML::Node d = root["disturbances"]) {
        r.only(d, "disturbances", {"pedestal_tilt", "deformation", "jitter", "refraction"});
        auto& ds = cfg.disturbances;
        if (const YAML::Node t = d["pedestal_tilt"]) {
            r.only(t, "disturbances.pedestal_tilt", {"enabled", "mrad", "px"});
            ds.pedestal_tilt = r.flag(t, "disturbances.pedestal_tilt", "enabled", true);
            if (t["mrad"] && t["px"]) r.fail(t, "disturbances.pedestal_tilt", "give either mrad or px");
            if (t["mrad"]) ds.tilt_mrad = r.pair(t["mrad"], "disturbances.pedestal_tilt.mrad");
            if (t["px"]) {
                // Tilt that shifts the image by exactly this many pixels.
                const PlaneVec px = r.pair(t["px"], "disturbances.pedestal_tilt.px");
                ds.tilt_mrad = pixel_error_to_mrad(cfg.camera, px);
            }
        }
        if (const YAML::Node t = d["deformation"]) {
            r.only(t, "disturbances.deformation", {"enabled", "gain_mrad_per_dps"});
            ds.deformation = r.flag(t, "disturbances.deformation", "enabled", true);
            ds.deformation_gain = r.num(t, "disturbances.deformation", "gain_mrad_per_dps", 0.0);
        }
        if (const YAML::Node t = d["jitter"]) {
            r.only(t, "disturbances.jitter", {"enabled", "sigma_mrad"});
            ds.jitter = r.flag(t, "disturbances.jitter", "enabled", true);
            ds.jitter_sigma_mrad = r.num(t, "disturbances.jitter", "sigma_mrad", 0.0);
            if (ds.jitter_sigma_mrad < 0.0) r.fail(t, "disturbances.jitter.sigma_mrad", "must be >= 0");
        }
        if (const YAML::Node t = d["refraction"]) {
            r.only(t, "disturbances.refraction", {"enabled", "mrad"});
            ds.refraction = r.flag(t, "disturbances.refraction", "enabled", true);
            ds.refraction_mrad = r.num(t, "disturbances.refraction", "mrad", 0.0);
        }
    }
    if (cfg.disturbances.refraction) cfg.scene.refraction_mrad = cfg.disturbances.refraction_mrad;

    if (const YAML::Node in = root["initial"]) {
        r.only(in, "initial", {"offset_mrad", "pose_deg"});
        if (in["offset_mrad"] && in["pose_deg"]) r.fail(in, "initial", "give either offset_mrad or pose_deg");
        if (in["offset_mrad"]) cfg.initial_offset_mrad = r.pair(in["offset_mrad"], "initial.offset_mrad");
        if (in["pose_deg"]) {
            const PlaneVec p = r.pair(in["pose_deg"], "initial.pose_deg");
            cfg.initial_pose = AzEl{p.u, p.v};
        }
    }

    if (const YAML::Node tl = root["timeline"]) {
        if (!tl.IsSequence()) r.fail(tl, "timeline", "expected a list");
        for (std::size_t i = 0; i < tl.size(); ++i) {
            const std::string path = "timeline[" + std::to_string(i) + "]";
            r.only(tl[i], path, {"t", "mode", "offset_mrad", "pose_deg"});
            TimelineEntry e;
            e.time_s = r.req_num(tl[i], path, "t");
            e.command = parse_command(r, tl[i], path);
            if (!cfg.timeline.empty() && e.time_s < cfg.timeline.back().time_s) {
                r.fail(tl[i], path + ".t", "timeline must be time-ordered");
            }
            cfg.timeline.push_back(e);
        }
    }

    cfg.tick_s = r.num(root, "", "tick_s", 1.0);
    if (!(cfg.tick_s > 0.0)) r.fail(root["tick_s"], "tick_s", "must be positive");
    cfg.duration_s = r.num(root, "", "duration_s", 0.0);
    if (cfg.duration_s < 0.0) r.fail(root["duration_s"], "duration_s", "must be >= 0");
    const double seed = r.num(root, "", "seed", 0.0);
    if (seed < 0.0 || seed != std::floor(seed)) r.fail(root["seed"], "seed", "must be a non-negative integer");
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.scene.seed = cfg.seed;
    const double stride = r.num(root, "", "frame_stride", 0.0);
    if (stride < 0.0 || stride != std::floor(stride)) {
        r.fail(root["frame_stride"], "frame_stride", "must be a non-negative integer");
    }
    cfg.frame_stride = static_cast<int>(stride);

    if (root["calibration"] && root["calibration_file"]) {
        r.fail(root, "calibration", "give either calibration or calibration_file");
    }
    if (const YAML::Node c = root["calibration"]) {
        r.only(c, "calibration", {"du", "dv"});
        cfg.calibration.du = r.num(c, "calibration", "du", 0.0);
        cfg.calibration.dv = r.num(c, "calibration", "dv", 0.0);
    }
    if (const YAML::Node c = root["calibration_file"]) {
        std::filesystem::path p = r.str(root, "", "calibration_file", "");
        if (p.is_relative()) p = base_dir / p;
        try {
            cfg.calibration = read_calibration_file(p);
        } catch (const std::exception& e) {
            r.fail(c, "calibration_file", e.what());
        }
    }

    if (const YAML::Node rd = root["render"]) {
        r.only(rd, "render", {"noise_sigma", "glare_sigma_px"});
        cfg.scene.style.noise_sigma = r.num(rd, "render", "noise_sigma", 0.0);
        cfg.scene.style.glare_sigma_px = r.num(rd, "render", "glare_sigma_px", cfg.scene.style.glare_sigma_px);
        if (cfg.scene.style.noise_sigma < 0.0) r.fail(rd, "render.noise_sigma", "must be >= 0");
    }
    return cfg;
}

}  // namespace

int ScenarioConfig::tick_count() const {
    return static_cast<int>(std::floor(duration_s / tick_s + 1e-9));
}

void ScenarioConfig::validate() const {
    if (!(tick_s > 0.0)) throw ConfigError("tick_s must be positive");
    if (duration_s < 0.0) throw ConfigError("duration_s must be >= 0");
    for (std::size_t i = 1; i < timeline.size(); ++i) {
        if (timeline[i].time_s < timeline[i - 1].time_s) throw ConfigError("timeline must be time-ordered");
    }
    try {
        controller.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

ScenarioConfig parse_scenario(const std::string& yaml_text, const std::string& source_name) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(source_name + ":" + std::to_string(e.mark.line + 1) + ":" +
                          std::to_string(e.mark.column + 1) + ": syntax: " + e.msg);
    }
    if (!root.IsMap()) throw ConfigError(source_name + ": expected a mapping at the top level");
    return parse_node(root, source_name, std::filesystem::current_path());
}

ScenarioConfig load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open scenario file");
    std::stringstream ss;
    ss << in.rdbuf();
    YAML::Node root;
    try {
        root = YAML::Load(ss.str());
    } catch (const YAML::ParserException& e) {
        throw ConfigError(path.string() + ":" + std::to_string(e.mark.line + 1) + ":" +
                          std::to_string(e.mark.column + 1) + ": syntax: " + e.msg);
    }
    if (!root.IsMap()) throw ConfigError(path.string() + ": expected a mapping at the top level");
    auto cfg = parse_node(root, path.string(), path.parent_path());
    if (cfg.name.empty()) cfg.name = path.stem().string();
    return cfg;
}

std::filesystem::path bundled_scenario_dir() {
    if (const char* env = std::getenv("HELIOTRACK_SCENARIO_DIR"); env && *env) return env;
    return HELIOTRACK_SCENARIO_DIR;
}

std::filesystem::path resolve_scenario(const std::string& name_or_path) {
    const std::filesystem::path p(name_or_path);
    if (std::filesystem::is_regular_file(p)) return p;
    if (p.parent_path().empty()) {
        const auto bundled = bundled_scenario_dir() / (name_or_path + ".yaml");
        if (std::filesystem::is_regular_file(bundled)) return bundled;
    }
    throw ConfigError(name_or_path + ": no such scenario file");
}

ScenarioConfig load_scenario(const std::string& name_or_path) { return load_scenario_file(resolve_scenario(name_or_path)); }

AimingOffset read_calibration_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open calibration file");
    const auto j = nlohmann::json::parse(in);
    AimingOffset o;
    o.du = j.at("du").get<double>();
    o.dv = j.at("dv").get<double>();
    o.samples = j.value("samples", 1);
    o.sigma_u = j.value("sigma_u", 0.0);
    o.sigma_v = j.value("sigma_v", 0.0);
    return o;
}

void write_calibration_file(const std::filesystem::path& path, const AimingOffset& off) {
    nlohmann::json j{{"du", off.du}, {"dv", off.dv}, {"samples", off.samples}, {"sigma_u", off.sigma_u},
                     {"sigma_v", off.sigma_v}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path.string() + ": cannot write calibration file");
    out << j.dump(2) << '\n';
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t h) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace heliotrack
