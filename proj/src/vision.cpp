#include "heliotrack/vision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace heliotrack {

double intersection_area(const BBox& a, const BBox& b) {
    const double w = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const double h = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

double iou(const BBox& a, const BBox& b) {
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

std::string_view to_string(ObjectClass c) {
    switch (c) {
        case ObjectClass::sun: return "sun";
        case ObjectClass::cloud: return "cloud";
        case ObjectClass::heliostat: return "heliostat";
        case ObjectClass::target: return "target";
    }
    return "unknown";
}

ObjectClass object_class_from_string(std::string_view s) {
    if (s == "sun") return ObjectClass::sun;
    if (s == "cloud") return ObjectClass::cloud;
    if (s == "heliostat") return ObjectClass::heliostat;
    if (s == "target") return ObjectClass::target;
    throw std::invalid_argument("unknown object class '" + std::string(s) + "'");
}

std::string detections_to_json_lines(const std::vector<Detection>& dets) {
    std::string out;
    for (const auto& d : dets) {
        nlohmann::ordered_json j;
        j["class"] = to_string(d.cls);
        j["bbox"] = {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h};
        j["score"] = d.score;
        j["center"] = {d.center.u, d.center.v};
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<Detection> detections_from_json_lines(std::string_view text) {
    std::vector<Detection> out;
    std::istringstream is{std::string(text)};
    std::string line;
    while (std::getline(is, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto j = nlohmann::json::parse(line);
        Detection d;
        d.cls = object_class_from_string(j.at("class").get<std::string>());
        const auto& b = j.at("bbox");
        d.bbox = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>()};
        d.score = j.at("score").get<double>();
        if (j.contains("center")) {
            d.center = {j["center"].at(0).get<double>(), j["center"].at(1).get<double>()};
        } else {
            d.center = d.bbox.center();
        }
        out.push_back(d);
    }
    return out;
}

namespace {

struct Component {
    int area = 0;
    double sum_u = 0.0;
    double sum_v = 0.0;
    int min_x = std::numeric_limits<int>::max();
    int min_y = std::numeric_limits<int>::max();
    int max_x = std::numeric_limits<int>::min();
    int max_y = std::numeric_limits<int>::min();

    BBox bbox() const {
        return {static_cast<double>(min_x), static_cast<double>(min_y), static_cast<double>(max_x - min_x + 1),
                static_cast<double>(max_y - min_y + 1)};
    }
    PixelPoint centroid() const { return {sum_u / area + 0.5, sum_v / area + 0.5}; }
    double fill() const { return area / bbox().area(); }
};

// 8-connected components of a binary mask, in raster order of their first pixel.
std::vector<Component> label_components(const std::vector<std::uint8_t>& mask, int w, int h) {
    std::vector<int> label(mask.size(), -1);
    std::vector<Component> comps;
    std::vector<int> stack;
    for (int y0 = 0; y0 < h; ++y0) {
        for (int x0 = 0; x0 < w; ++x0) {
            const int seed = y0 * w + x0;
            if (!mask[seed] || label[seed] >= 0) continue;
            const int id = static_cast<int>(comps.size());
            comps.emplace_back();
            Component& c = comps.back();
            label[seed] = id;
            stack.push_back(seed);
            while (!stack.empty()) {
                const int idx = stack.back();
                stack.pop_back();
                const int x = idx % w;
                const int y = idx / w;
                ++c.area;
                c.sum_u += x;
                c.sum_v += y;
                c.min_x = std::min(c.min_x, x);
                c.max_x = std::max(c.max_x, x);
                c.min_y = std::min(c.min_y, y);
                c.max_y = std::max(c.max_y, y);
                for (int dy = -1; dy <= 1; ++dy) {
                    const int ny = y + dy;
                    if (ny < 0 || ny >= h) continue;
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = x + dx;
                        if ((dx == 0 && dy == 0) || nx < 0 || nx >= w) continue;
                        const int n = ny * w + nx;
                        if (mask[n] && label[n] < 0) {
                            label[n] = id;
                            stack.push_back(n);
                        }
                    }
                }
            }
        }
    }
    return comps;
}

std::optional<SunSegment> largest_bright(const std::vector<std::uint8_t>& mask, int w, int h, int min_area) {
    const auto comps = label_components(mask, w, h);
    const Component* best = nullptr;
    for (const auto& c : comps) {
        if (!best || c.area > best->area) best = &c;
    }
    if (!best || best->area < min_area) return std::nullopt;
    return SunSegment{best->centroid(), best->bbox(), best->fill(), best->area};
}

}  // namespace

SunSegment segment_sun(const Image& img, double lightness_threshold, int min_area_px) {
    if (!(lightness_threshold > 0.0 && lightness_threshold <= 1.0) || min_area_px < 1) {
        throw std::invalid_argument("segment_sun: threshold must be in (0,1] and min area >= 1");
    }
    const int w = img.width();
    const int h = img.height();
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            mask[static_cast<std::size_t>(y) * w + x] = rgb_to_hsl(img.at(x, y)).lightness >= lightness_threshold;
        }
    }
    auto seg = largest_bright(mask, w, h, min_area_px);
    if (!seg) throw NoSunDetected();
    return *seg;
}

std::vector<Detection> ClassicalDetector::detect(const Image& img) const {
    const int w = img.width();
    const int h = img.height();
    const std::size_t n = static_cast<std::size_t>(w) * h;
    std::vector<std::uint8_t> sun(n), target(n), helio(n), cloud(n);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const HslPixel p = rgb_to_hsl(img.at(x, y));
            const double l = p.lightness;
            const double s = p.saturation;
            sun[i] = l >= cfg_.sun_lightness;
            target[i] = !sun[i] && s <= cfg_.target_max_saturation && l >= cfg_.target_min_lightness;
            helio[i] = s <= cfg_.heliostat_max_saturation && l >= cfg_.heliostat_min_lightness &&
                       l < cfg_.heliostat_max_lightness;
            cloud[i] = !sun[i] && l >= cfg_.cloud_min_lightness && s >= cfg_.cloud_min_saturation &&
                       s <= cfg_.cloud_max_saturation;
        }
    }

    std::vector<Detection> out;
    if (auto seg = largest_bright(sun, w, h, cfg_.sun_min_area)) {
        out.push_back({ObjectClass::sun, seg->bbox, seg->score, seg->centroid});
    }
    for (const auto& c : label_components(target, w, h)) {
        if (c.area >= cfg_.target_min_area && c.fill() >= cfg_.target_min_fill) {
            const BBox b = c.bbox();
            out.push_back({ObjectClass::target, b, c.fill(), b.center()});
        }
    }
    for (const auto& c : label_components(helio, w, h)) {
        if (c.area >= cfg_.heliostat_min_area) {
            const BBox b = c.bbox();
            out.push_back({ObjectClass::heliostat, b, c.fill(), b.center()});
        }
    }
    for (const auto& c : label_components(cloud, w, h)) {
        if (c.area >= cfg_.cloud_min_area) {
            const BBox b = c.bbox();
            // Ellipse inscribed in its bbox fills pi/4 of it.
            const double score = std::min(1.0, c.area / (0.25 * kPi * b.area()));
            out.push_back({ObjectClass::cloud, b, score, c.centroid()});
        }
    }
    return out;
}

std::vector<Detection> ExternalModelDetector::detect(const Image& img) const {
    auto dets = model_(img);
    const double W = img.width();
    const double H = img.height();
    std::vector<Detection> out;
    out.reserve(dets.size());
    for (auto d : dets) {
        const double x0 = std::clamp(d.bbox.x, 0.0, W);
        const double y0 = std::clamp(d.bbox.y, 0.0, H);
        const double x1 = std::clamp(d.bbox.x + d.bbox.w, 0.0, W);
        const double y1 = std::clamp(d.bbox.y + d.bbox.h, 0.0, H);
        if (!(x1 > x0 && y1 > y0)) continue;
        d.bbox = {x0, y0, x1 - x0, y1 - y0};
        d.score = std::clamp(std::isfinite(d.score) ? d.score : 0.0, 0.0, 1.0);
        if (!d.bbox.contains(d.center)) d.center = d.bbox.center();
        out.push_back(d);
    }
    return out;
}

std::vector<Detection> detect(const Image& img) { return ClassicalDetector{}.detect(img); }

std::optional<Detection> best_detection(const std::vector<Detection>& dets, ObjectClass cls) {
    std::optional<Detection> best;
    for (const auto& d : dets) {
        if (d.cls != cls) continue;
        if (!best || d.score > best->score || (d.score == best->score && d.bbox.area() > best->bbox.area())) {
            best = d;
        }
    }
    return best;
}

ShadowBlock detect_shadow_block(const std::vector<Detection>& dets) {
    // An occluder in front hides the pixels it covers, so its blob abuts the
    // visible part of the Sun or target instead of overlapping it.
    constexpr double kContactPx = 1.0;
    auto touches = [](const BBox& a, const BBox& b) {
        return overlaps({a.x - kContactPx, a.y - kContactPx, a.w + 2 * kContactPx, a.h + 2 * kContactPx}, b);
    };
    ShadowBlock out;
    const auto sun = best_detection(dets, ObjectClass::sun);
    const auto target = best_detection(dets, ObjectClass::target);
    for (const auto& d : dets) {
        if (sun && (d.cls == ObjectClass::heliostat || d.cls == ObjectClass::cloud) && touches(d.bbox, sun->bbox)) {
            out.shadow = true;
        }
        if (target && d.cls == ObjectClass::heliostat && touches(d.bbox, target->bbox)) {
            out.block = true;
        }
    }
    return out;
}

FrameAnalysis analyze_frame(const std::vector<Detection>& dets, const CameraModel& cam, const AimingOffset& calib) {
    FrameAnalysis fa;
    fa.principal = cam.principal();
    if (auto sun = best_detection(dets, ObjectClass::sun)) {
        fa.sun_center = sun->center;
        fa.sun_bbox = sun->bbox;
    }
    if (auto target = best_detection(dets, ObjectClass::target)) {
        fa.target_center = target->bbox.center();
        fa.target_bbox = target->bbox;
    }
    if (fa.sun_center && fa.target_center) {
        fa.aim_point = midpoint(*fa.sun_center, *fa.target_center);
        fa.tracking_error_px = PlaneVec{fa.aim_point->u - (fa.principal.u + calib.du),
                                        fa.aim_point->v - (fa.principal.v + calib.dv)};
    }
    const auto flags = detect_shadow_block(dets);
    fa.shadow = flags.shadow;
    fa.block = flags.block;
    return fa;
}

std::optional<PlaneVec> sun_pointing_error_px(const FrameAnalysis& fa, const AimingOffset& calib) {
    if (!fa.sun_center) return std::nullopt;
    return PlaneVec{fa.sun_center->u - (fa.principal.u + calib.du), fa.sun_center->v - (fa.principal.v + calib.dv)};
}

std::optional<double> time_to_overlap(const BBox& moving, const PlaneVec& velocity_px_s, const BBox& fixed) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool never = false;
    // Per axis, the open interval of t where the projections overlap.
    auto axis = [&](double m0, double m1, double f0, double f1, double v) {
        if (v == 0.0) {
            never = never || !(m0 < f1 && m1 > f0);
            return;
        }
        double a = (f0 - m1) / v;
        double b = (f1 - m0) / v;
        if (a > b) std::swap(a, b);
        lo = std::max(lo, a);
        hi = std::min(hi, b);
    };
    axis(moving.x, moving.x + moving.w, fixed.x, fixed.x + fixed.w, velocity_px_s.u);
    axis(moving.y, moving.y + moving.h, fixed.y, fixed.y + fixed.h, velocity_px_s.v);
    if (never || !(lo < hi) || hi <= 0.0) return std::nullopt;
    return std::max(lo, 0.0);
}

namespace {

std::vector<CloudTrack> associate(const std::vector<CloudTrack>& prev, const std::vector<Detection>& dets,
                                  double time_s, double dt_s, int next_id, const std::optional<BBox>& sun_bbox) {
    std::vector<const Detection*> clouds;
    for (const auto& d : dets) {
        if (d.cls == ObjectClass::cloud) clouds.push_back(&d);
    }

    struct Pair {
        double dist;
        std::size_t track;
        std::size_t det;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < prev.size(); ++i) {
        PixelPoint pred = prev[i].history.back().centroid;
        if (prev[i].velocity_px_s) {
            pred = pred + PixelPoint{prev[i].velocity_px_s->u * dt_s, prev[i].velocity_px_s->v * dt_s};
        }
        for (std::size_t j = 0; j < clouds.size(); ++j) {
            const double dist = std::hypot(clouds[j]->center.u - pred.u, clouds[j]->center.v - pred.v);
            if (dist <= kCloudGatePx) pairs.push_back({dist, i, j});
        }
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.dist < b.dist; });

    std::vector<int> det_to_track(clouds.size(), -1);
    std::vector<bool> track_used(prev.size(), false);
    for (const auto& p : pairs) {
        if (track_used[p.track] || det_to_track[p.det] >= 0) continue;
        track_used[p.track] = true;
        det_to_track[p.det] = static_cast<int>(p.track);
    }

    std::vector<CloudTrack> out;
    for (std::size_t j = 0; j < clouds.size(); ++j) {
        CloudTrack t;
        if (det_to_track[j] >= 0) {
            t = prev[static_cast<std::size_t>(det_to_track[j])];
        } else {
            t.id = next_id++;
        }
        t.history.push_back({clouds[j]->center, time_s});
        t.bbox = clouds[j]->bbox;
        t.velocity_px_s.reset();
        if (t.history.size() >= 2) {
            const auto& a = t.history[t.history.size() - 2];
            const auto& b = t.history.back();
            const double span = b.time_s - a.time_s;
            if (span > 0.0) {
                t.velocity_px_s = PlaneVec{(b.centroid.u - a.centroid.u) / span, (b.centroid.v - a.centroid.v) / span};
            }
        }
        t.time_to_occlusion_s.reset();
        if (sun_bbox) {
            t.time_to_occlusion_s = time_to_overlap(t.bbox, t.velocity_px_s.value_or(PlaneVec{}), *sun_bbox);
        }
        out.push_back(std::move(t));
    }
    std::sort(out.begin(), out.end(), [](const CloudTrack& a, const CloudTrack& b) { return a.id < b.id; });
    return out;
}

}  // namespace

std::vector<CloudTrack> track_clouds(const std::vector<CloudTrack>& prev, const std::vector<Detection>& dets,
                                     double dt_s, const std::optional<BBox>& sun_bbox) {
    if (!(dt_s > 0.0)) {
        throw std::invalid_argument("track_clouds: dt must be positive");
    }
    double time_s = 0.0;
    int next_id = 1;
    for (const auto& t : prev) {
        time_s = std::max(time_s, t.history.back().time_s + dt_s);
        next_id = std::max(next_id, t.id + 1);
    }
    return associate(prev, dets, time_s, dt_s, next_id, sun_bbox);
}

const std::vector<CloudTrack>& CloudTracker::update(const std::vector<Detection>& dets, double time_s, double dt_s,
                                                    const std::optional<BBox>& sun_bbox) {
    tracks_ = associate(tracks_, dets, time_s, dt_s, next_id_, sun_bbox);
    for (const auto& t : tracks_) next_id_ = std::max(next_id_, t.id + 1);
    return tracks_;
}

}  // namespace heliotrack
