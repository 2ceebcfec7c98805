// Python bindings for the geometry, ephemeris, vision and simulation core.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "heliotrack/control.hpp"
#include "heliotrack/ephemeris.hpp"
#include "heliotrack/image.hpp"
#include "heliotrack/run_store.hpp"
#include "heliotrack/scenario.hpp"
#include "heliotrack/simulation.hpp"
#include "heliotrack/vision.hpp"

namespace py = pybind11;
using namespace heliotrack;

namespace {

py::dict axis_dict(const AxisSummary& a) {
    py::dict d;
    d["steady_mean_abs_diff_mrad"] = a.steady_mean_abs_diff_mrad;
    d["steady_max_abs_diff_mrad"] = a.steady_max_abs_diff_mrad;
    d["transition_max_abs_diff_mrad"] = a.transition_max_abs_diff_mrad;
    d["max_abs_diff_mrad"] = a.max_abs_diff_mrad;
    d["spike_times_s"] = a.spike_times_s;
    d["unconfined_excursions"] = a.unconfined_excursions;
    return d;
}

py::dict detection_dict(const Detection& det) {
    py::dict d;
    d["class"] = std::string(to_string(det.cls));
    d["bbox"] = py::make_tuple(det.bbox.x, det.bbox.y, det.bbox.w, det.bbox.h);
    d["score"] = det.score;
    d["center"] = py::make_tuple(det.center.u, det.center.v);
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Vision-based heliostat tracking core";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<OutOfEpoch>(m, "OutOfEpoch", PyExc_ValueError);
    py::register_exception<NoSunDetected>(m, "NoSunDetected", PyExc_RuntimeError);

    py::class_<CameraModel>(m, "CameraModel")
        .def(py::init<int, int, double, double, double>(), py::arg("width_px"), py::arg("height_px"),
             py::arg("sensor_w_mm"), py::arg("sensor_h_mm"), py::arg("focal_mm"))
        .def_static("reference", &CameraModel::reference)
        .def_property_readonly("width_px", &CameraModel::width_px)
        .def_property_readonly("height_px", &CameraModel::height_px)
        .def_property_readonly("focal_px", &CameraModel::focal_px)
        .def_property_readonly("principal", [](const CameraModel& c) { return py::make_tuple(c.principal().u, c.principal().v); });

    m.def("pointing_uncertainty", &pointing_uncertainty, py::arg("camera"), "Pointing uncertainty in mrad.");

    m.def("rgb_to_hsl", [](int r, int g, int b) {
        const HslPixel p = rgb_to_hsl(static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b));
        return py::make_tuple(p.hue_deg, p.saturation, p.lightness);
    });

    m.def("utc_timestamp", &utc_timestamp, py::arg("year"), py::arg("month"), py::arg("day"), py::arg("hour") = 0,
          py::arg("minute") = 0, py::arg("second") = 0.0);
    m.def(
        "sun_position",
        [](double lat, double lon, double ts) {
            const SunPosition s = sun_direction({lat, lon, ts});
            return py::make_tuple(s.azimuth_deg, s.elevation_deg);
        },
        py::arg("latitude_deg"), py::arg("longitude_deg"), py::arg("timestamp"),
        "(azimuth, elevation) in degrees, azimuth clockwise from North.");

    m.def(
        "detect_ppm",
        [](const std::string& path) {
            py::list out;
            for (const auto& d : detect(read_ppm(std::filesystem::path(path)))) out.append(detection_dict(d));
            return out;
        },
        py::arg("path"));

    m.def(
        "load_scenario",
        [](const std::string& name_or_path) {
            const ScenarioConfig cfg = load_scenario(name_or_path);
            py::dict d;
            d["name"] = cfg.name;
            d["seed"] = cfg.seed;
            d["tick_s"] = cfg.tick_s;
            d["duration_s"] = cfg.duration_s;
            d["ticks"] = cfg.tick_count();
            return d;
        },
        py::arg("name_or_path"));

    m.def(
        "run_scenario",
        [](const std::string& name_or_path, std::optional<std::uint64_t> seed) {
            ScenarioConfig cfg = load_scenario(name_or_path);
            if (seed) cfg.seed = *seed;
            ScenarioRun run;
            {
                py::gil_scoped_release release;
                run = heliotrack::run_scenario(cfg);
            }
            const RunSummary s = summarize(compare_runs(run.vision, run.scada));
            py::dict d;
            d["ticks"] = s.ticks;
            d["steady_ticks"] = s.steady_ticks;
            d["transition_ticks"] = s.transition_ticks;
            d["azimuth"] = axis_dict(s.azimuth);
            d["elevation"] = axis_dict(s.elevation);
            d["vision_csv"] = run_log_csv(run.vision);
            d["scada_csv"] = run_log_csv(run.scada);
            return d;
        },
        py::arg("name_or_path"), py::arg("seed") = py::none(),
        "Simulates a scenario; returns the comparison summary and both logs as CSV.");
}
