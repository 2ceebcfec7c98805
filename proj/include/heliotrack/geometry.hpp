// Camera-plane geometry: vectors, pinhole camera model, projection and the
// pixel/angle relations used by the tracker.
//
// Frames: world is East-North-Up. Camera frame has z along the optical axis
// (the heliostat facet normal), x to image-right and y to image-down.
// Pixel (i, j) covers [i, i+1) x [j, j+1); its center is (i + 0.5, j + 0.5).
#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace heliotrack {

class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BehindCamera : public GeometryError {
public:
    BehindCamera() : GeometryError("direction is behind the camera (z <= 0)") {}
};

class DegenerateBisector : public GeometryError {
public:
    DegenerateBisector() : GeometryError("bisector undefined for antiparallel vectors") {}
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr bool operator==(const Vec3&) const = default;
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }
constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

/// Unit direction. Construction normalizes; a zero vector is rejected.
class UnitVec3 {
public:
    UnitVec3() : v_{0.0, 0.0, 1.0} {}
    explicit UnitVec3(const Vec3& v);
    UnitVec3(double x, double y, double z) : UnitVec3(Vec3{x, y, z}) {}

    double x() const { return v_.x; }
    double y() const { return v_.y; }
    double z() const { return v_.z; }
    const Vec3& vec() const { return v_; }
    UnitVec3 operator-() const { return UnitVec3(-v_); }

private:
    Vec3 v_;
};

/// Angle between two unit vectors in radians, stable near 0 and pi.
double angle_between(const UnitVec3& a, const UnitVec3& b);

struct PixelPoint {
    double u = 0.0;
    double v = 0.0;

    constexpr PixelPoint operator+(const PixelPoint& o) const { return {u + o.u, v + o.v}; }
    constexpr PixelPoint operator-(const PixelPoint& o) const { return {u - o.u, v - o.v}; }
    constexpr PixelPoint operator*(double s) const { return {u * s, v * s}; }
    constexpr bool operator==(const PixelPoint&) const = default;
};

inline PixelPoint midpoint(const PixelPoint& a, const PixelPoint& b) {
    return {(a.u + b.u) * 0.5, (a.v + b.v) * 0.5};
}

/// Two-component quantity in the camera plane (u = image-right, v = image-down).
struct PlaneVec {
    double u = 0.0;
    double v = 0.0;
    constexpr bool operator==(const PlaneVec&) const = default;
};

/// Pinhole camera intrinsics.
///
/// Pixels are treated as square with pitch sensor_w_mm / width_px. The height
/// pitch may differ by up to kMaxPitchMismatch (the reference 800x600 sensor
/// is 3.76 x 2.74 mm, a 2.8% mismatch).
class CameraModel {
public:
    static constexpr double kMaxPitchMismatch = 0.05;

    /// Principal point defaults to the image center.
    CameraModel(int width_px, int height_px, double sensor_w_mm, double sensor_h_mm, double focal_mm);
    CameraModel(int width_px, int height_px, double sensor_w_mm, double sensor_h_mm, double focal_mm,
                PixelPoint principal);

    /// 800x600, 3.76x2.74 mm sensor, 2.35 mm lens (a Raspberry Pi camera module).
    static CameraModel reference();

    int width_px() const { return width_; }
    int height_px() const { return height_; }
    double sensor_w_mm() const { return sensor_w_; }
    double sensor_h_mm() const { return sensor_h_; }
    double focal_mm() const { return focal_; }
    PixelPoint principal() const { return principal_; }
    double pitch_mm() const { return sensor_w_ / width_; }
    /// Focal length expressed in pixels.
    double focal_px() const { return focal_ / pitch_mm(); }
    bool contains(const PixelPoint& p) const {
        return p.u >= 0.0 && p.v >= 0.0 && p.u < width_ && p.v < height_;
    }

private:
    int width_;
    int height_;
    double sensor_w_;
    double sensor_h_;
    double focal_;
    PixelPoint principal_;
};

/// Gnomonic projection of a camera-frame direction. Throws BehindCamera for dir.z <= 0.
/// The result may fall outside the image.
PixelPoint project_direction(const CameraModel& cam, const UnitVec3& dir);

UnitVec3 backproject_pixel(const CameraModel& cam, const PixelPoint& p);

/// Angular size of one pixel at the principal point, arctan(p / f), in mrad.
double pointing_uncertainty(const CameraModel& cam);

/// Unit vector making equal angles with s and t (the mirror normal that
/// reflects s onto t). Throws DegenerateBisector when s ~ -t.
UnitVec3 bisector(const UnitVec3& s, const UnitVec3& t);

/// Per-axis arctan(delta * p / f), in mrad.
PlaneVec pixel_error_to_mrad(const CameraModel& cam, const PlaneVec& delta_px);

/// Inverse of pixel_error_to_mrad.
PlaneVec mrad_to_pixel_error(const CameraModel& cam, const PlaneVec& mrad);

/// Orthonormal camera basis expressed in world coordinates.
struct CameraFrame {
    Vec3 right;    // camera x
    Vec3 down;     // camera y
    Vec3 forward;  // camera z, optical axis

    Vec3 to_camera(const Vec3& world) const {
        return {dot(right, world), dot(down, world), dot(forward, world)};
    }
    Vec3 to_world(const Vec3& cam) const { return right * cam.x + down * cam.y + forward * cam.z; }
};

/// World (ENU) direction from azimuth (clockwise from North) and elevation, degrees.
UnitVec3 direction_from_az_el(double azimuth_deg, double elevation_deg);

struct AzEl {
    double azimuth_deg = 0.0;
    double elevation_deg = 0.0;
};

/// Azimuth in [0, 360), elevation in [-90, 90].
AzEl az_el_from_direction(const UnitVec3& dir);

/// Camera frame of an az-el mount: forward along (az, el), right horizontal.
CameraFrame frame_from_az_el(double azimuth_deg, double elevation_deg);

/// Rotates a frame so that the undisturbed optical axis appears at camera-plane
/// angles `offset_mrad` (u right, v down). Scene content shifts by the same
/// angles in the image.
CameraFrame perturb_frame(const CameraFrame& frame, const PlaneVec& offset_mrad);

/// Camera-plane angles (arctan of tangent components) of a world direction in
/// `frame`, in mrad. Throws BehindCamera when the direction is not in front.
PlaneVec camera_plane_angles(const CameraFrame& frame, const UnitVec3& world_dir);

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double deg2rad(double d) { return d * kPi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

}  // namespace heliotrack
