#include "heliotrack/render.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace heliotrack {

namespace {

struct RectBasis {
    Vec3 right;
    Vec3 up;
    Vec3 normal;
};

RectBasis rect_basis(const WorldRect& r) {
    const CameraFrame f = frame_from_az_el(r.normal_az_deg, r.normal_el_deg);
    return {f.right, -f.down, f.forward};
}

Rgb lerp(Rgb a, Rgb b, double t) {
    auto mix = [t](std::uint8_t x, std::uint8_t y) {
        const double v = x + (y - x) * t;
        return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    };
    return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

// Camera-frame ray through a pixel position (not normalized, z = 1).
Vec3 pixel_ray(const CameraModel& cam, double u, double v) {
    const PixelPoint c = cam.principal();
    const double f = cam.focal_px();
    return {(u - c.u) / f, (v - c.v) / f, 1.0};
}

struct ProjectedQuad {
    std::array<PixelPoint, 4> pts;
    BBox bbox;
};

std::optional<ProjectedQuad> project_rect(const WorldRect& rect, const CameraModel& cam, const CameraPose& pose) {
    ProjectedQuad q;
    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
    const auto corners = rect.corners();
    for (std::size_t i = 0; i < 4; ++i) {
        const Vec3 c = pose.frame.to_camera(corners[i] - pose.position);
        if (c.z <= 1e-6) return std::nullopt;
        q.pts[i] = project_direction(cam, UnitVec3(c));
        x0 = std::min(x0, q.pts[i].u);
        y0 = std::min(y0, q.pts[i].v);
        x1 = std::max(x1, q.pts[i].u);
        y1 = std::max(y1, q.pts[i].v);
    }
    q.bbox = {x0, y0, x1 - x0, y1 - y0};
    return q;
}

// Point in convex polygon (either winding).
bool inside_quad(const std::array<PixelPoint, 4>& p, double u, double v) {
    int sign = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        const PixelPoint a = p[i];
        const PixelPoint b = p[(i + 1) % 4];
        const double cr = (b.u - a.u) * (v - a.v) - (b.v - a.v) * (u - a.u);
        if (cr == 0.0) continue;
        const int s = cr > 0.0 ? 1 : -1;
        if (sign == 0) sign = s;
        else if (s != sign) return false;
    }
    return true;
}

std::optional<BBox> clip_to_image(const BBox& b, const CameraModel& cam) {
    const double x0 = std::max(0.0, b.x);
    const double y0 = std::max(0.0, b.y);
    const double x1 = std::min<double>(cam.width_px(), b.x + b.w);
    const double y1 = std::min<double>(cam.height_px(), b.y + b.h);
    if (!(x1 > x0 && y1 > y0)) return std::nullopt;
    return BBox{x0, y0, x1 - x0, y1 - y0};
}

// Integer pixel range [lo, hi] whose centers may fall in a continuous span.
void pixel_span(double a, double b, int limit, int& lo, int& hi) {
    lo = std::max(0, static_cast<int>(std::floor(a - 0.5)));
    hi = std::min(limit - 1, static_cast<int>(std::ceil(b + 0.5)));
}

void fill_quad(Image& img, const ProjectedQuad& q, Rgb color) {
    int x0, x1, y0, y1;
    pixel_span(q.bbox.x, q.bbox.x + q.bbox.w, img.width(), x0, x1);
    pixel_span(q.bbox.y, q.bbox.y + q.bbox.h, img.height(), y0, y1);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            if (inside_quad(q.pts, x + 0.5, y + 0.5)) img.set(x, y, color);
        }
    }
}

// Cloud ellipse frozen at one instant.
class CloudFootprint {
public:
    CloudFootprint(const CloudSpec& cl, double t_s) {
        const AzEl ae = az_el_from_direction(cl.center_at(t_s));
        tangent_ = frame_from_az_el(ae.azimuth_deg, ae.elevation_deg);
        const double phi = deg2rad(cl.orientation_deg);
        cos_ = std::cos(phi);
        sin_ = std::sin(phi);
        a_ = cl.semi_major_mrad * 1e-3;
        b_ = cl.semi_minor_mrad * 1e-3;
    }

    bool covers(const UnitVec3& dir) const {
        const double along = dot(dir.vec(), tangent_.forward);
        if (along <= 0.0) return false;
        const double x = std::atan2(dot(dir.vec(), tangent_.right), along);
        const double y = std::atan2(-dot(dir.vec(), tangent_.down), along);
        const double p = (x * cos_ + y * sin_) / a_;
        const double q = (-x * sin_ + y * cos_) / b_;
        return p * p + q * q <= 1.0;
    }

private:
    CameraFrame tangent_;
    double cos_ = 1.0;
    double sin_ = 0.0;
    double a_ = 1.0;
    double b_ = 1.0;
};

// Bbox of a cloud's outline in the image; nullopt when entirely behind the camera.
std::optional<BBox> cloud_image_bounds(const CloudSpec& cl, double t, const CameraModel& cam, const CameraPose& pose) {
    const UnitVec3 c = cl.center_at(t);
    const AzEl ae = az_el_from_direction(c);
    const CameraFrame tangent = frame_from_az_el(ae.azimuth_deg, ae.elevation_deg);
    const double phi = deg2rad(cl.orientation_deg);
    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
    constexpr int kSamples = 72;
    for (int i = 0; i < kSamples; ++i) {
        const double a = 2.0 * kPi * i / kSamples;
        const double ex = cl.semi_major_mrad * 1e-3 * std::cos(a);
        const double ey = cl.semi_minor_mrad * 1e-3 * std::sin(a);
        const double tx = std::tan(ex * std::cos(phi) - ey * std::sin(phi));
        const double ty = std::tan(ex * std::sin(phi) + ey * std::cos(phi));
        // tangent.right is along increasing azimuth, -tangent.down is up.
        const Vec3 w = tangent.forward + tangent.right * tx - tangent.down * ty;
        const Vec3 cc = pose.frame.to_camera(w);
        if (cc.z <= 1e-6) return BBox{0.0, 0.0, static_cast<double>(cam.width_px()), static_cast<double>(cam.height_px())};
        const PixelPoint p = project_direction(cam, UnitVec3(cc));
        x0 = std::min(x0, p.u);
        y0 = std::min(y0, p.v);
        x1 = std::max(x1, p.u);
        y1 = std::max(y1, p.v);
    }
    return clip_to_image({x0 - 2.0, y0 - 2.0, x1 - x0 + 4.0, y1 - y0 + 4.0}, cam);
}

}  // namespace

std::array<Vec3, 4> WorldRect::corners() const {
    const RectBasis b = rect_basis(*this);
    const Vec3 rx = b.right * (width_m * 0.5);
    const Vec3 uy = b.up * (height_m * 0.5);
    return {center - rx - uy, center + rx - uy, center + rx + uy, center - rx + uy};
}

Vec3 WorldRect::normal() const { return rect_basis(*this).normal; }

std::optional<double> WorldRect::intersect(const Vec3& origin, const Vec3& dir) const {
    const RectBasis b = rect_basis(*this);
    const double denom = dot(dir, b.normal);
    if (std::abs(denom) < 1e-12) return std::nullopt;
    const double t = dot(center - origin, b.normal) / denom;
    if (t <= 0.0) return std::nullopt;
    const Vec3 hit = origin + dir * t - center;
    if (std::abs(dot(hit, b.right)) > width_m * 0.5 || std::abs(dot(hit, b.up)) > height_m * 0.5) {
        return std::nullopt;
    }
    return t;
}

UnitVec3 CloudSpec::center_at(double t_s) const {
    const double el = elevation_deg + rad2deg(el_rate_mrad_s * 1e-3 * t_s);
    const double cos_el = std::max(1e-6, std::cos(deg2rad(elevation_deg)));
    const double az = azimuth_deg + rad2deg(az_rate_mrad_s * 1e-3 * t_s / cos_el);
    return direction_from_az_el(az, el);
}

bool CloudSpec::covers(const UnitVec3& dir, double t_s) const { return CloudFootprint(*this, t_s).covers(dir); }

UnitVec3 Scene::sun_at(double t_s) const {
    GeoTime gt = site;
    gt.timestamp += t_s;
    const SunPosition sp = sun_direction(gt);
    if (refraction_mrad == 0.0) return sp.direction;
    return direction_from_az_el(sp.azimuth_deg, sp.elevation_deg + rad2deg(refraction_mrad * 1e-3));
}

RenderResult render(const Scene& scene, const CameraModel& cam, const CameraPose& pose, double t_s) {
    const RenderStyle& st = scene.style;
    const int W = cam.width_px();
    const int H = cam.height_px();
    RenderResult out{Image(W, H, st.sky), {}};
    Image& img = out.image;
    GroundTruth& gt = out.truth;

    // Background: ground where the pixel ray points below the horizon. The
    // world elevation of a camera ray is linear in (u, v).
    {
        const CameraFrame& f = pose.frame;
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                const Vec3 r = pixel_ray(cam, x + 0.5, y + 0.5);
                if (f.right.z * r.x + f.down.z * r.y + f.forward.z * r.z < 0.0) img.set(x, y, st.ground);
            }
        }
    }

    // Sun disk with glare.
    const UnitVec3 sun_world = scene.sun_at(t_s);
    const Vec3 sun_cam = pose.frame.to_camera(sun_world.vec());
    const double fpx = cam.focal_px();
    const double r_sun_px = std::tan(kSunRadiusMrad * 1e-3) * fpx;
    if (sun_cam.z > 0.0 && sun_world.z() > 0.0) {
        const UnitVec3 s(sun_cam);
        const PixelPoint sp = project_direction(cam, s);
        gt.sun_center = sp;
        gt.sun_bbox = clip_to_image({sp.u - r_sun_px - 1.0, sp.v - r_sun_px - 1.0, 2.0 * (r_sun_px + 1.0),
                                     2.0 * (r_sun_px + 1.0)},
                                    cam);
        if (!gt.sun_bbox) {
            gt.sun_center.reset();
        }
        const double reach = r_sun_px + 4.0 * st.glare_sigma_px + 2.0;
        int x0, x1, y0, y1;
        pixel_span(sp.u - reach, sp.u + reach, W, x0, x1);
        pixel_span(sp.v - reach, sp.v + reach, H, y0, y1);
        const double cos_r = std::cos(kSunRadiusMrad * 1e-3);
        constexpr int kSub = 4;
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                int hits = 0;
                for (int j = 0; j < kSub; ++j) {
                    for (int i = 0; i < kSub; ++i) {
                        const Vec3 r = pixel_ray(cam, x + (i + 0.5) / kSub, y + (j + 0.5) / kSub);
                        if (dot(r, s.vec()) / norm(r) >= cos_r) ++hits;
                    }
                }
                const double coverage = static_cast<double>(hits) / (kSub * kSub);
                const Vec3 rc = pixel_ray(cam, x + 0.5, y + 0.5);
                const double ang = std::acos(std::clamp(dot(rc, s.vec()) / norm(rc), -1.0, 1.0));
                const double d_px = std::max(0.0, (ang - kSunRadiusMrad * 1e-3) * fpx);
                const double glare =
                    st.glare_amplitude * std::exp(-d_px * d_px / (2.0 * st.glare_sigma_px * st.glare_sigma_px));
                Rgb c = lerp(img.at(x, y), st.sun, coverage);
                c = lerp(c, Rgb{255, 255, 255}, glare * (1.0 - coverage));
                if (coverage > 0.0 || glare > 1e-3) img.set(x, y, c);
            }
        }
    }

    // Clouds (alpha over sky and Sun, only above the horizon).
    for (const auto& cl : scene.clouds) {
        const auto bounds = cloud_image_bounds(cl, t_s, cam, pose);
        if (!bounds) continue;
        int x0, x1, y0, y1;
        pixel_span(bounds->x, bounds->x + bounds->w, W, x0, x1);
        pixel_span(bounds->y, bounds->y + bounds->h, H, y0, y1);
        const CloudFootprint fp(cl, t_s);
        CloudTruth ct;
        ct.label = cl.label;
        double su = 0.0, sv = 0.0;
        int bx0 = W, by0 = H, bx1 = -1, by1 = -1;
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const UnitVec3 w(pose.frame.to_world(pixel_ray(cam, x + 0.5, y + 0.5)));
                if (w.z() <= 0.0 || !fp.covers(w)) continue;
                img.set(x, y, lerp(img.at(x, y), st.cloud, st.cloud_alpha));
                ++ct.pixels;
                su += x + 0.5;
                sv += y + 0.5;
                bx0 = std::min(bx0, x);
                by0 = std::min(by0, y);
                bx1 = std::max(bx1, x);
                by1 = std::max(by1, y);
            }
        }
        if (ct.pixels > 0) {
            ct.centroid = {su / ct.pixels, sv / ct.pixels};
            ct.bbox = {static_cast<double>(bx0), static_cast<double>(by0), static_cast<double>(bx1 - bx0 + 1),
                       static_cast<double>(by1 - by0 + 1)};
            gt.clouds.push_back(ct);
        }
    }

    // Target, then neighbours from far to near.
    if (auto q = project_rect(scene.target, cam, pose)) {
        const Vec3 c = pose.frame.to_camera(scene.target.center - pose.position);
        gt.target_center = project_direction(cam, UnitVec3(c));
        gt.target_bbox = clip_to_image(q->bbox, cam);
        if (gt.target_bbox) {
            fill_quad(img, *q, st.target);
        } else {
            gt.target_center.reset();
        }
    }
    std::vector<std::size_t> order(scene.neighbors.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return norm(scene.neighbors[a].center - pose.position) > norm(scene.neighbors[b].center - pose.position);
    });
    for (std::size_t i : order) {
        if (auto q = project_rect(scene.neighbors[i], cam, pose)) {
            if (auto b = clip_to_image(q->bbox, cam)) {
                gt.heliostat_bboxes.push_back(*b);
                fill_quad(img, *q, st.heliostat);
            }
        }
    }

    // 3D answer key: Sun disk samples against clouds and neighbours, target samples against neighbours.
    if (sun_world.z() > 0.0) {
        const AzEl ae = az_el_from_direction(sun_world);
        const CameraFrame tangent = frame_from_az_el(ae.azimuth_deg, ae.elevation_deg);
        constexpr int kGrid = 24;
        int total = 0;
        int blocked = 0;
        std::vector<CloudFootprint> footprints;
        for (const auto& cl : scene.clouds) footprints.emplace_back(cl, t_s);
        for (int j = 0; j < kGrid; ++j) {
            for (int i = 0; i < kGrid; ++i) {
                const double a = ((i + 0.5) / kGrid * 2.0 - 1.0);
                const double b = ((j + 0.5) / kGrid * 2.0 - 1.0);
                if (a * a + b * b > 1.0) continue;
                ++total;
                const double r = std::tan(kSunRadiusMrad * 1e-3);
                const UnitVec3 d(tangent.forward + tangent.right * (a * r) + tangent.down * (b * r));
                bool hit = false;
                for (const auto& fp : footprints) hit = hit || fp.covers(d);
                for (const auto& n : scene.neighbors) hit = hit || n.intersect(pose.position, d.vec()).has_value();
                if (hit) ++blocked;
            }
        }
        gt.sun_occluded_fraction = total > 0 ? static_cast<double>(blocked) / total : 0.0;
        gt.shadow = blocked > 0;
    }
    {
        const RectBasis b = rect_basis(scene.target);
        constexpr int kGrid = 9;
        for (int j = 0; j < kGrid && !gt.block; ++j) {
            for (int i = 0; i < kGrid && !gt.block; ++i) {
                const double a = (i / (kGrid - 1.0) - 0.5) * scene.target.width_m;
                const double c = (j / (kGrid - 1.0) - 0.5) * scene.target.height_m;
                const Vec3 p = scene.target.center + b.right * a + b.up * c;
                const Vec3 d = p - pose.position;
                const double dist = norm(d);
                for (const auto& n : scene.neighbors) {
                    if (auto t = n.intersect(pose.position, d / dist); t && *t < dist) gt.block = true;
                }
            }
        }
    }

    if (st.noise_sigma > 0.0) {
        std::seed_seq seq{static_cast<std::uint32_t>(scene.seed), static_cast<std::uint32_t>(scene.seed >> 32),
                          static_cast<std::uint32_t>(std::llround(t_s * 1000.0))};
        std::mt19937 rng(seq);
        std::normal_distribution<double> noise(0.0, st.noise_sigma);
        for (auto& px : img.data()) {
            px = static_cast<std::uint8_t>(std::clamp(std::lround(px + noise(rng)), 0L, 255L));
        }
    }
    return out;
}

}  // namespace heliotrack
