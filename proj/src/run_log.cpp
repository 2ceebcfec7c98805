#include "heliotrack/run_log.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace heliotrack {

namespace {

constexpr const char* kHeader =
    "time_s,mode,cmd_az_deg,cmd_el_deg,az_deg,el_deg,slew_az_dps,slew_el_dps,sun_u,sun_v,target_u,target_v,"
    "aim_u,aim_v,err_u_px,err_v_px,err_u_mrad,err_v_mrad,scada_err_u_mrad,scada_err_v_mrad,true_err_u_mrad,"
    "true_err_v_mrad,shadow,block,clouds,tto_s";

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

template <typename T, typename F>
void opt_pair(std::string& row, const std::optional<T>& v, F a, F b) {
    row += ',';
    if (v) row += num(a(*v));
    row += ',';
    if (v) row += num(b(*v));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

void write_run_log_csv(std::ostream& os, const RunLog& log) {
    os << kHeader << '\n';
    const auto pu = [](const PixelPoint& p) { return p.u; };
    const auto pv = [](const PixelPoint& p) { return p.v; };
    const auto vu = [](const PlaneVec& p) { return p.u; };
    const auto vv = [](const PlaneVec& p) { return p.v; };
    for (const auto& r : log.records) {
        std::string row;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", r.time_s);
        row += buf;
        row += ',';
        row += to_string(r.mode);
        for (double x : {r.commanded.azimuth_deg, r.commanded.elevation_deg, r.actual.azimuth_deg,
                         r.actual.elevation_deg, r.slew_dps.u, r.slew_dps.v}) {
            row += ',';
            row += num(x);
        }
        opt_pair(row, r.sun, +pu, +pv);
        opt_pair(row, r.target, +pu, +pv);
        opt_pair(row, r.aim, +pu, +pv);
        opt_pair(row, r.camera_err_px, +vu, +vv);
        opt_pair(row, r.camera_err_mrad, +vu, +vv);
        opt_pair(row, r.scada_err_mrad, +vu, +vv);
        opt_pair(row, r.true_err_mrad, +vu, +vv);
        row += r.shadow ? ",1" : ",0";
        row += r.block ? ",1" : ",0";
        row += ',' + std::to_string(r.clouds) + ',';
        if (r.tto_s) row += num(*r.tto_s);
        os << row << '\n';
    }
}

std::string run_log_csv(const RunLog& log) {
    std::ostringstream os;
    write_run_log_csv(os, log);
    return os.str();
}

RunLog read_run_log_csv(std::istream& is, std::string name) {
    RunLog log;
    log.name = std::move(name);
    std::string line;
    if (!std::getline(is, line) || split(line) != split(kHeader)) {
        throw std::runtime_error("run log: unexpected header");
    }
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != 26) throw std::runtime_error("run log: wrong field count on line " + std::to_string(lineno));
        auto d = [&](std::size_t i) { return std::stod(f[i]); };
        auto pix = [&](std::size_t i) -> std::optional<PixelPoint> {
            if (f[i].empty()) return std::nullopt;
            return PixelPoint{d(i), d(i + 1)};
        };
        auto vec = [&](std::size_t i) -> std::optional<PlaneVec> {
            if (f[i].empty()) return std::nullopt;
            return PlaneVec{d(i), d(i + 1)};
        };
        TickRecord r;
        r.time_s = d(0);
        r.mode = heliostat_mode_from_string(f[1]);
        r.commanded = {d(2), d(3)};
        r.actual = {d(4), d(5)};
        r.slew_dps = {d(6), d(7)};
        r.sun = pix(8);
        r.target = pix(10);
        r.aim = pix(12);
        r.camera_err_px = vec(14);
        r.camera_err_mrad = vec(16);
        r.scada_err_mrad = vec(18);
        r.true_err_mrad = vec(20);
        r.shadow = f[22] == "1";
        r.block = f[23] == "1";
        r.clouds = std::stoi(f[24]);
        if (!f[25].empty()) r.tto_s = d(25);
        log.records.push_back(r);
    }
    if (log.records.size() >= 2) log.tick_s = log.records[1].time_s - log.records[0].time_s;
    return log;
}

}  // namespace heliotrack
