// heliotrack: simulate, calibrate, serve and a few single-frame utilities.
#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "heliotrack/render.hpp"
#include "heliotrack/run_store.hpp"
#include "heliotrack/scenario.hpp"
#include "heliotrack/service.hpp"
#include "heliotrack/vision.hpp"

using namespace heliotrack;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 1;

std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void print_axis(const char* name, const AxisSummary& a) {
    std::printf("%-10s %12.3f %12.3f %14.3f %10.3f   ", name, a.steady_mean_abs_diff_mrad, a.steady_max_abs_diff_mrad,
                a.transition_max_abs_diff_mrad, a.max_abs_diff_mrad);
    if (a.spike_times_s.empty()) std::printf("-");
    for (std::size_t i = 0; i < a.spike_times_s.size(); ++i) {
        std::printf("%s%.0f", i ? "," : "", a.spike_times_s[i]);
    }
    std::printf("\n");
}

int cmd_simulate(const std::string& scenario, const std::string& out, std::optional<std::uint64_t> seed) {
    const auto path = resolve_scenario(scenario);
    ScenarioConfig cfg = load_scenario_file(path);
    if (seed) {
        cfg.seed = *seed;
        cfg.scene.seed = *seed;
    }
    std::string text = read_text(path);
    if (seed) text += "\n# seed override: " + std::to_string(*seed) + "\n";
    const RunManifest m = write_run(cfg, text, out);
    std::printf("run %s  scenario %s  seed %llu  ticks %d (steady %d, transition %d)\n", m.run_id.c_str(),
                m.scenario_name.c_str(), static_cast<unsigned long long>(m.seed), m.summary.ticks,
                m.summary.steady_ticks, m.summary.transition_ticks);
    std::printf("%-10s %12s %12s %14s %10s   %s\n", "axis", "steady_mean", "steady_max", "transition_max", "max",
                "spikes_s");
    print_axis("azimuth", m.summary.azimuth);
    print_axis("elevation", m.summary.elevation);
    std::printf("|vision - scada| in mrad; output in %s\n", out.c_str());
    return 0;
}

int cmd_calibrate(const std::string& run_dir, const std::string& out) {
    const AimingOffset off = calibrate_run(run_dir);
    const std::filesystem::path dest = out.empty() ? std::filesystem::path(run_dir) / "calibration.json" : std::filesystem::path(out);
    write_calibration_file(dest, off);
    std::printf("aiming offset du = %.3f +- %.3f px, dv = %.3f +- %.3f px over %d frames\n", off.du, off.sigma_u, off.dv,
                off.sigma_v, off.samples);
    std::printf("written to %s\n", dest.string().c_str());
    return 0;
}

FieldService* g_service = nullptr;

void on_signal(int) {
    if (g_service) g_service->stop();
}

int cmd_serve(std::string bind, const std::string& scenario, double speed) {
    if (const char* env = std::getenv("HELIOTRACK_BIND"); env && *env) bind = env;
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) throw CLI::ValidationError("--bind", "expected host:port");
    const std::string host = bind.substr(0, colon);
    const int port = std::stoi(bind.substr(colon + 1));

    FieldService svc(load_scenario(scenario), speed);
    const int bound = svc.bind(host, port);
    if (bound < 0) {
        std::fprintf(stderr, "cannot bind %s\n", bind.c_str());
        return kExitRuntime;
    }
    g_service = &svc;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::printf("serving %s on http://%s:%d (speed %gx)\n", scenario.c_str(), host.c_str(), bound, speed);
    std::fflush(stdout);
    svc.start();
    svc.listen();
    svc.stop();
    g_service = nullptr;
    return 0;
}

int cmd_render(const std::string& scenario, double t, const std::string& out, const std::string& dets_out) {
    const ScenarioConfig cfg = load_scenario(scenario);
    Simulation sim(cfg);
    while (sim.time_s() < t - 1e-9) sim.advance();
    sim.advance();
    const TwinView& v = sim.view(Twin::vision);
    write_ppm(out, v.frame);
    if (!dets_out.empty()) {
        std::ofstream(dets_out) << detections_to_json_lines(v.detections);
    }
    std::printf("frame at t=%.1f s written to %s\n", t, out.c_str());
    return 0;
}

int cmd_detect(const std::string& ppm) {
    std::cout << detections_to_json_lines(detect(read_ppm(std::filesystem::path(ppm))));
    return 0;
}

int cmd_uncertainty(int w, int h, double sw, double sh, double f) {
    const CameraModel cam(w, h, sw, sh, f);
    std::printf("pixel pitch %.6f mm, focal %.3f px, U = %.4f mrad\n", cam.pitch_mm(), cam.focal_px(),
                pointing_uncertainty(cam));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Camera-plane heliostat tracking: simulation, calibration and service"};
    app.require_subcommand(1);

    std::string scenario, out, run_dir, bind = "127.0.0.1:8080", ppm, dets_out, cal_out;
    std::uint64_t seed = 0;
    double speed = kDefaultSpeed, t = 0.0;
    int w = 800, h = 600;
    double sw = 3.76, sh = 2.74, f = 2.35;

    auto* sim = app.add_subcommand("simulate", "Run a scenario and write a run directory");
    sim->add_option("--scenario", scenario, "Scenario file or bundled name")->required();
    sim->add_option("--out", out, "Run directory")->required();
    auto* seed_opt = sim->add_option("--seed", seed, "Override the scenario seed");

    auto* cal = app.add_subcommand("calibrate", "Estimate the aiming offset from a sun-pointing run");
    cal->add_option("run_dir", run_dir, "Run directory")->required();
    cal->add_option("--out", cal_out, "Calibration file (default: <run_dir>/calibration.json)");

    auto* srv = app.add_subcommand("serve", "Run the field service");
    srv->add_option("--bind", bind, "host:port (HELIOTRACK_BIND overrides)");
    srv->add_option("--scenario", scenario, "Scenario file or bundled name")->default_val("target_track");
    srv->add_option("--speed", speed, "Multiple of real time (0 pauses)")->default_val(kDefaultSpeed);

    auto* ren = app.add_subcommand("render", "Render the camera-loop frame of a scenario at time t");
    ren->add_option("--scenario", scenario)->required();
    ren->add_option("--time", t, "Seconds after start")->default_val(0.0);
    ren->add_option("--out", out, "PPM output")->required();
    ren->add_option("--detections", dets_out, "JSON-lines detections output");

    auto* det = app.add_subcommand("detect", "Run the classical detector on a PPM");
    det->add_option("ppm", ppm)->required();

    auto* unc = app.add_subcommand("uncertainty", "Pointing uncertainty of a camera");
    unc->add_option("--width", w)->default_val(800);
    unc->add_option("--height", h)->default_val(600);
    unc->add_option("--sensor-w", sw)->default_val(3.76);
    unc->add_option("--sensor-h", sh)->default_val(2.74);
    unc->add_option("--focal", f)->default_val(2.35);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) return cmd_simulate(scenario, out, seed_opt->count() ? std::optional(seed) : std::nullopt);
        if (*cal) return cmd_calibrate(run_dir, cal_out);
        if (*srv) return cmd_serve(bind, scenario, speed);
        if (*ren) return cmd_render(scenario, t, out, dets_out);
        if (*det) return cmd_detect(ppm);
        if (*unc) return cmd_uncertainty(w, h, sw, sh, f);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
    return 0;
}
