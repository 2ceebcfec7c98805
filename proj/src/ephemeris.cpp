#include "heliotrack/ephemeris.hpp"

#include <algorithm>
#include <cmath>

namespace heliotrack {

namespace {

// 1950-01-01T00:00Z and 2051-01-01T00:00Z.
constexpr double kEpochStart = -631152000.0;
constexpr double kEpochEnd = 2556144000.0;

double wrap(double x, double period) {
    x = std::fmod(x, period);
    return x < 0.0 ? x + period : x;
}

}  // namespace

void GeoTime::validate() const {
    if (!(std::abs(latitude_deg) <= 90.0) || !(std::abs(longitude_deg) <= 180.0)) {
        throw std::invalid_argument("latitude/longitude out of range");
    }
}

double utc_timestamp(int year, int month, int day, int hour, int minute, double second) {
    // days_from_civil (H. Hinnant)
    year -= month <= 2 ? 1 : 0;
    const int era = (year >= 0 ? year : year - 399) / 400;
    const int yoe = year - era * 400;
    const int doy = (153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
    const int doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    const long days = static_cast<long>(era) * 146097 + doe - 719468;
    return static_cast<double>(days) * 86400.0 + hour * 3600.0 + minute * 60.0 + second;
}

SunPosition sun_direction(const GeoTime& gt) {
    gt.validate();
    if (!(gt.timestamp >= kEpochStart && gt.timestamp < kEpochEnd)) {
        throw OutOfEpoch("timestamp outside 1950-2050");
    }
    // Michalsky (1988), Astronomical Almanac low-precision solar coordinates.
    const double jd = gt.timestamp / 86400.0 + 2440587.5;
    const double n = jd - 2451545.0;

    const double mean_long = wrap(280.460 + 0.9856474 * n, 360.0);
    const double mean_anom = deg2rad(wrap(357.528 + 0.9856003 * n, 360.0));
    const double ecl_long =
        deg2rad(wrap(mean_long + 1.915 * std::sin(mean_anom) + 0.020 * std::sin(2.0 * mean_anom), 360.0));
    const double obliquity = deg2rad(23.439 - 0.0000004 * n);

    const double ra = std::atan2(std::cos(obliquity) * std::sin(ecl_long), std::cos(ecl_long));
    const double dec = std::asin(std::sin(obliquity) * std::sin(ecl_long));

    const double ut_hours = wrap(gt.timestamp, 86400.0) / 3600.0;
    const double jd0 = std::floor(jd - 0.5) + 0.5;  // preceding 0h UT
    const double gmst = wrap(6.697375 + 0.0657098242 * (jd0 - 2451545.0) + 1.00273790935 * ut_hours, 24.0);
    const double lmst = wrap(gmst + gt.longitude_deg / 15.0, 24.0);

    double ha = deg2rad(lmst * 15.0) - ra;
    ha = std::remainder(ha, 2.0 * kPi);

    const double lat = deg2rad(gt.latitude_deg);
    const double sin_el = std::sin(dec) * std::sin(lat) + std::cos(dec) * std::cos(lat) * std::cos(ha);
    const double el = std::asin(std::clamp(sin_el, -1.0, 1.0));
    const double az = std::atan2(-std::cos(dec) * std::sin(ha),
                                 std::sin(dec) * std::cos(lat) - std::cos(dec) * std::cos(ha) * std::sin(lat));

    SunPosition out;
    out.azimuth_deg = wrap(rad2deg(az), 360.0);
    out.elevation_deg = rad2deg(el);
    out.direction = direction_from_az_el(out.azimuth_deg, out.elevation_deg);
    return out;
}

}  // namespace heliotrack
