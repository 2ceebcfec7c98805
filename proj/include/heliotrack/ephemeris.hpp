// Solar position from UTC time and site coordinates.
#pragma once

#include <stdexcept>

#include "heliotrack/geometry.hpp"

namespace heliotrack {

class OutOfEpoch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GeoTime {
    double latitude_deg = 0.0;
    double longitude_deg = 0.0;  // east positive
    double timestamp = 0.0;      // UTC seconds since 1970-01-01

    /// Throws std::invalid_argument when latitude/longitude are out of range.
    void validate() const;
};

/// Plataforma Solar de Almeria.
inline constexpr double kPsaLatitudeDeg = 37.09;
inline constexpr double kPsaLongitudeDeg = -2.36;

struct SunPosition {
    double azimuth_deg = 0.0;    // clockwise from North
    double elevation_deg = 0.0;
    UnitVec3 direction;          // ENU, toward the Sun
};

/// Apparent topocentric position, no refraction. Accurate to ~0.01 deg over
/// 1950-2050; throws OutOfEpoch outside that range.
SunPosition sun_direction(const GeoTime& gt);

/// UTC timestamp for a calendar date/time (proleptic Gregorian).
double utc_timestamp(int year, int month, int day, int hour = 0, int minute = 0, double second = 0.0);

}  // namespace heliotrack
