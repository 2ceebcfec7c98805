#include "heliotrack/geometry.hpp"

#include <algorithm>
#include <sstream>

namespace heliotrack {

UnitVec3::UnitVec3(const Vec3& v) {
    const double n = norm(v);
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw GeometryError("cannot normalize a zero or non-finite vector");
    }
    v_ = v / n;
}

double angle_between(const UnitVec3& a, const UnitVec3& b) {
    return std::atan2(norm(cross(a.vec(), b.vec())), dot(a.vec(), b.vec()));
}

CameraModel::CameraModel(int width_px, int height_px, double sensor_w_mm, double sensor_h_mm,
                         double focal_mm)
    : CameraModel(width_px, height_px, sensor_w_mm, sensor_h_mm, focal_mm,
                  PixelPoint{width_px / 2.0, height_px / 2.0}) {}

CameraModel::CameraModel(int width_px, int height_px, double sensor_w_mm, double sensor_h_mm,
                         double focal_mm, PixelPoint principal)
    : width_(width_px),
      height_(height_px),
      sensor_w_(sensor_w_mm),
      sensor_h_(sensor_h_mm),
      focal_(focal_mm),
      principal_(principal) {
    if (width_px <= 0 || height_px <= 0 || !(sensor_w_mm > 0.0) || !(sensor_h_mm > 0.0) ||
        !(focal_mm > 0.0)) {
        throw std::invalid_argument("camera dimensions must be positive");
    }
    const double pw = sensor_w_mm / width_px;
    const double ph = sensor_h_mm / height_px;
    if (std::abs(pw - ph) / pw > kMaxPitchMismatch) {
        std::ostringstream os;
        os << "non-square pixels: pitch " << pw << " mm x " << ph << " mm";
        throw std::invalid_argument(os.str());
    }
    if (!contains(principal)) {
        throw std::invalid_argument("principal point outside the image");
    }
}

CameraModel CameraModel::reference() { return CameraModel(800, 600, 3.76, 2.74, 2.35); }

PixelPoint project_direction(const CameraModel& cam, const UnitVec3& dir) {
    if (dir.z() <= 0.0) {
        throw BehindCamera();
    }
    const double fpx = cam.focal_px();
    const PixelPoint c = cam.principal();
    return {c.u + fpx * dir.x() / dir.z(), c.v + fpx * dir.y() / dir.z()};
}

UnitVec3 backproject_pixel(const CameraModel& cam, const PixelPoint& p) {
    const double fpx = cam.focal_px();
    const PixelPoint c = cam.principal();
    return UnitVec3((p.u - c.u) / fpx, (p.v - c.v) / fpx, 1.0);
}

double pointing_uncertainty(const CameraModel& cam) {
    return std::atan(cam.pitch_mm() / cam.focal_mm()) * 1e3;
}

UnitVec3 bisector(const UnitVec3& s, const UnitVec3& t) {
    const Vec3 sum = s.vec() + t.vec();
    if (norm(sum) < 1e-9) {
        throw DegenerateBisector();
    }
    return UnitVec3(sum);
}

PlaneVec pixel_error_to_mrad(const CameraModel& cam, const PlaneVec& delta_px) {
    const double fpx = cam.focal_px();
    return {std::atan(delta_px.u / fpx) * 1e3, std::atan(delta_px.v / fpx) * 1e3};
}

PlaneVec mrad_to_pixel_error(const CameraModel& cam, const PlaneVec& mrad) {
    const double fpx = cam.focal_px();
    return {std::tan(mrad.u * 1e-3) * fpx, std::tan(mrad.v * 1e-3) * fpx};
}

UnitVec3 direction_from_az_el(double azimuth_deg, double elevation_deg) {
    const double az = deg2rad(azimuth_deg);
    const double el = deg2rad(elevation_deg);
    return UnitVec3(std::sin(az) * std::cos(el), std::cos(az) * std::cos(el), std::sin(el));
}

AzEl az_el_from_direction(const UnitVec3& dir) {
    double az = rad2deg(std::atan2(dir.x(), dir.y()));
    if (az < 0.0) az += 360.0;
    if (az >= 360.0) az -= 360.0;
    const double el = rad2deg(std::asin(std::clamp(dir.z(), -1.0, 1.0)));
    return {az, el};
}

CameraFrame frame_from_az_el(double azimuth_deg, double elevation_deg) {
    const double az = deg2rad(azimuth_deg);
    const Vec3 forward = direction_from_az_el(azimuth_deg, elevation_deg).vec();
    const Vec3 right{std::cos(az), -std::sin(az), 0.0};
    return {right, cross(forward, right), forward};
}

namespace {

// Rodrigues rotation of v about unit axis k by angle with given cos/sin.
Vec3 rotate(const Vec3& v, const Vec3& k, double c, double s) {
    return v * c + cross(k, v) * s + k * (dot(k, v) * (1.0 - c));
}

}  // namespace

CameraFrame perturb_frame(const CameraFrame& frame, const PlaneVec& offset_mrad) {
    // d is where the old optical axis must land in the new camera coordinates.
    // With c' = Q c and Q the minimal rotation taking e_z to d, the new basis
    // vectors in old camera coordinates are Q^T e_i.
    const UnitVec3 d(std::tan(offset_mrad.u * 1e-3), std::tan(offset_mrad.v * 1e-3), 1.0);
    const Vec3 ez{0.0, 0.0, 1.0};
    const Vec3 axis = cross(ez, d.vec());
    const double s = norm(axis);
    if (s < 1e-15) {
        return frame;
    }
    const Vec3 k = axis / s;
    const double c = dot(d.vec(), ez);
    // Q^T is the rotation about k by -theta.
    const Vec3 bx = rotate({1.0, 0.0, 0.0}, k, c, -s);
    const Vec3 by = rotate({0.0, 1.0, 0.0}, k, c, -s);
    const Vec3 bz = rotate({0.0, 0.0, 1.0}, k, c, -s);
    return {frame.to_world(bx), frame.to_world(by), frame.to_world(bz)};
}

PlaneVec camera_plane_angles(const CameraFrame& frame, const UnitVec3& world_dir) {
    const Vec3 c = frame.to_camera(world_dir.vec());
    if (c.z <= 0.0) {
        throw BehindCamera();
    }
    return {std::atan(c.x / c.z) * 1e3, std::atan(c.y / c.z) * 1e3};
}

}  // namespace heliotrack
