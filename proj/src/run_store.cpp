#include "heliotrack/run_store.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace heliotrack {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& data) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw RunDirError(p.string() + ": cannot write");
    out << data;
}

AxisSummary axis_summary(const AxisSeries& a) {
    return {a.steady_mean_abs_diff, a.steady_max_abs_diff, a.transition_max_abs_diff, a.max_abs_diff,
            a.spike_times_s, a.unconfined_excursions};
}

json to_json(const AxisSummary& a) {
    return {{"steady_mean_abs_diff_mrad", a.steady_mean_abs_diff_mrad},
            {"steady_max_abs_diff_mrad", a.steady_max_abs_diff_mrad},
            {"transition_max_abs_diff_mrad", a.transition_max_abs_diff_mrad},
            {"max_abs_diff_mrad", a.max_abs_diff_mrad},
            {"spike_times_s", a.spike_times_s},
            {"unconfined_excursions", a.unconfined_excursions}};
}

AxisSummary axis_from_json(const json& j) {
    AxisSummary a;
    a.steady_mean_abs_diff_mrad = j.at("steady_mean_abs_diff_mrad").get<double>();
    a.steady_max_abs_diff_mrad = j.at("steady_max_abs_diff_mrad").get<double>();
    a.transition_max_abs_diff_mrad = j.at("transition_max_abs_diff_mrad").get<double>();
    a.max_abs_diff_mrad = j.at("max_abs_diff_mrad").get<double>();
    a.spike_times_s = j.at("spike_times_s").get<std::vector<double>>();
    a.unconfined_excursions = j.at("unconfined_excursions").get<int>();
    return a;
}

}  // namespace

std::string format_utc(double timestamp) {
    const auto secs = static_cast<long long>(std::floor(timestamp));
    long long days = secs / 86400;
    long long rem = secs % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    // civil_from_days (H. Hinnant)
    const long long z = days + 719468;
    const long long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const long long y0 = static_cast<long long>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    const long long y = y0 + (m <= 2);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ", y, m, d, rem / 3600, (rem / 60) % 60,
                  rem % 60);
    return buf;
}

std::string frame_name(Twin twin, int tick) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s_%05d", std::string(to_string(twin)).c_str(), tick);
    return buf;
}

RunSummary summarize(const ErrorSeries& es) {
    RunSummary s;
    s.ticks = static_cast<int>(es.time_s.size());
    s.steady_ticks = es.steady_ticks;
    s.transition_ticks = es.transition_ticks;
    s.azimuth = axis_summary(es.azimuth);
    s.elevation = axis_summary(es.elevation);
    return s;
}

RunManifest write_run(const ScenarioConfig& cfg, const std::string& scenario_text, const fs::path& out_dir) {
    fs::create_directories(out_dir / "frames");
    RunManifest m;
    m.scenario_name = cfg.name;
    m.scenario_hash = hex64(fnv1a64(scenario_text));
    m.seed = cfg.seed;
    m.run_id = hex64(fnv1a64(std::to_string(cfg.seed), fnv1a64(scenario_text))).substr(0, 12);
    m.start_utc = format_utc(cfg.scene.site.timestamp);
    m.end_utc = format_utc(cfg.scene.site.timestamp + cfg.tick_count() * cfg.tick_s);
    m.tick_s = cfg.tick_s;

    std::vector<std::string> written;
    auto sink = [&](Twin twin, int tick, const Image& img, const std::vector<Detection>& dets) {
        if (cfg.frame_stride <= 0 || tick % cfg.frame_stride != 0) return;
        const std::string base = "frames/" + frame_name(twin, tick);
        write_ppm(out_dir / (base + ".ppm"), img);
        spit(out_dir / (base + ".jsonl"), detections_to_json_lines(dets));
        written.push_back(base + ".ppm");
        written.push_back(base + ".jsonl");
    };
    const ScenarioRun run = run_scenario(cfg, sink);

    spit(out_dir / "scenario.yaml", scenario_text);
    spit(out_dir / "vision.csv", run_log_csv(run.vision));
    spit(out_dir / "scada.csv", run_log_csv(run.scada));
    if (!run.vision.records.empty()) {
        const ErrorSeries es = compare_runs(run.vision, run.scada);
        std::ostringstream os;
        write_error_series_csv(os, es);
        spit(out_dir / "errors.csv", os.str());
        m.summary = summarize(es);
    } else {
        spit(out_dir / "errors.csv", "time_s,axis,vision_err_mrad,scada_err_mrad,diff_mrad\n");
    }

    std::vector<std::string> files{"scenario.yaml", "vision.csv", "scada.csv", "errors.csv"};
    files.insert(files.end(), written.begin(), written.end());
    for (const auto& f : files) {
        const std::string data = slurp(out_dir / f);
        m.artifacts.push_back({f, hex64(fnv1a64(data)), data.size()});
    }
    write_manifest(out_dir / "manifest.json", m);
    return m;
}

void write_manifest(const fs::path& path, const RunManifest& m) {
    json arts = json::array();
    for (const auto& a : m.artifacts) arts.push_back({{"path", a.path}, {"fnv1a", a.fnv1a}, {"bytes", a.bytes}});
    const json j{{"run_id", m.run_id},
                 {"scenario", m.scenario_name},
                 {"scenario_hash", m.scenario_hash},
                 {"seed", m.seed},
                 {"start_utc", m.start_utc},
                 {"end_utc", m.end_utc},
                 {"tick_s", m.tick_s},
                 {"artifacts", arts},
                 {"summary",
                  {{"ticks", m.summary.ticks},
                   {"steady_ticks", m.summary.steady_ticks},
                   {"transition_ticks", m.summary.transition_ticks},
                   {"azimuth", to_json(m.summary.azimuth)},
                   {"elevation", to_json(m.summary.elevation)}}}};
    spit(path, j.dump(2) + "\n");
}

RunManifest read_manifest(const fs::path& run_dir) {
    const fs::path p = run_dir / "manifest.json";
    if (!fs::is_regular_file(p)) throw RunDirError(p.string() + ": missing run manifest");
    json j;
    try {
        j = json::parse(slurp(p));
        RunManifest m;
        m.run_id = j.at("run_id").get<std::string>();
        m.scenario_name = j.at("scenario").get<std::string>();
        m.scenario_hash = j.at("scenario_hash").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.start_utc = j.at("start_utc").get<std::string>();
        m.end_utc = j.at("end_utc").get<std::string>();
        m.tick_s = j.at("tick_s").get<double>();
        for (const auto& a : j.at("artifacts")) {
            m.artifacts.push_back(
                {a.at("path").get<std::string>(), a.at("fnv1a").get<std::string>(), a.at("bytes").get<std::uintmax_t>()});
        }
        const json& s = j.at("summary");
        m.summary.ticks = s.at("ticks").get<int>();
        m.summary.steady_ticks = s.at("steady_ticks").get<int>();
        m.summary.transition_ticks = s.at("transition_ticks").get<int>();
        m.summary.azimuth = axis_from_json(s.at("azimuth"));
        m.summary.elevation = axis_from_json(s.at("elevation"));
        return m;
    } catch (const json::exception& e) {
        throw RunDirError(p.string() + ": malformed manifest: " + e.what());
    }
}

AimingOffset calibrate_run(const fs::path& run_dir) {
    const RunManifest m = read_manifest(run_dir);
    const fs::path log_path = run_dir / "scada.csv";
    std::ifstream in(log_path);
    if (!in) throw RunDirError(log_path.string() + ": missing open-loop log");
    const RunLog log = read_run_log_csv(in, "scada");

    ScenarioConfig cfg;
    try {
        cfg = parse_scenario(slurp(run_dir / "scenario.yaml"), (run_dir / "scenario.yaml").string());
    } catch (const ConfigError& e) {
        throw RunDirError(e.what());
    }

    std::map<std::string, bool> present;
    for (const auto& a : m.artifacts) present[a.path] = true;

    std::vector<FrameAnalysis> frames;
    const ClassicalDetector det;
    for (std::size_t i = 0; i < log.records.size(); ++i) {
        const TickRecord& r = log.records[i];
        if (r.mode != HeliostatMode::sun_track) continue;
        if (std::abs(r.slew_dps.u) > 0.1 || std::abs(r.slew_dps.v) > 0.1) continue;
        const std::string name = "frames/" + frame_name(Twin::scada, static_cast<int>(i)) + ".ppm";
        if (!present.count(name)) continue;
        frames.push_back(analyze_frame(det.detect(read_ppm(run_dir / name)), cfg.camera, {}));
    }
    return calibrate_aiming(frames);
}

}  // namespace heliotrack
