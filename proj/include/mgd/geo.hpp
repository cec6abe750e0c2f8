#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mgd/common.hpp"
#include "mgd/rng.hpp"

namespace mgd {

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

struct GeoLocation {
    double lat = 0.0;  // degrees, [-90, 90]
    double lon = 0.0;  // degrees, [-180, 180)

    GeoLocation() = default;
    GeoLocation(double lat_, double lon_) : lat(lat_), lon(lon_) {
        if (!(lat >= -90.0 && lat <= 90.0))
            throw ConfigError("latitude out of range: " + std::to_string(lat_));
        if (!(lon >= -180.0 && lon < 180.0))
            throw ConfigError("longitude out of range: " + std::to_string(lon_));
    }
};

inline double haversine_km(const GeoLocation& a, const GeoLocation& b) {
    double p1 = deg2rad(a.lat), p2 = deg2rad(b.lat);
    double dp = p2 - p1, dl = deg2rad(b.lon - a.lon);
    double h = std::sin(dp / 2) * std::sin(dp / 2) + std::cos(p1) * std::cos(p2) * std::sin(dl / 2) * std::sin(dl / 2);
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

// Great-circle destination point from a start, bearing (radians) and distance.
inline GeoLocation geo_offset(const GeoLocation& start, double bearing_rad, double dist_km) {
    double ang = dist_km / kEarthRadiusKm;
    double p1 = deg2rad(start.lat), l1 = deg2rad(start.lon);
    double p2 = std::asin(std::sin(p1) * std::cos(ang) + std::cos(p1) * std::sin(ang) * std::cos(bearing_rad));
    double l2 = l1 + std::atan2(std::sin(bearing_rad) * std::sin(ang) * std::cos(p1),
                                std::cos(ang) - std::sin(p1) * std::sin(p2));
    double lat = rad2deg(p2);
    double lon = rad2deg(l2);
    lon = std::fmod(lon + 540.0, 360.0) - 180.0;  // wrap to [-180, 180)
    lat = std::clamp(lat, -90.0, 90.0);
    if (lon >= 180.0) lon = -180.0;
    return GeoLocation(lat, lon);
}

// Six latitude-band x longitude-band cells. Band edges belong to the lower
// band, so the intervals are half-open from above.
inline int region_of(const GeoLocation& loc) {
    int lat_band = loc.lat <= 15.0 ? 0 : 1;
    int lon_band = loc.lon <= -45.0 ? 0 : (loc.lon <= 75.0 ? 1 : 2);
    return lat_band * 3 + lon_band;
}

inline constexpr int kNumRegions = 6;

inline const char* region_name(int region_id) {
    static const char* names[kNumRegions] = {"tropical", "savanna", "coastal", "desert", "temperate", "boreal"};
    if (region_id < 0 || region_id >= kNumRegions) throw ConfigError("bad region id " + std::to_string(region_id));
    return names[region_id];
}

// Rejection sampling around the given centers with an exact pairwise
// minimum-distance check. Deterministic per seed.
inline std::vector<GeoLocation> sample_locations(int64_t n, const std::vector<GeoLocation>& centers, double radius_km,
                                                 double d_min_km, uint64_t seed) {
    if (n < 1) throw ConfigError("sample_locations: n must be >= 1");
    if (d_min_km <= 0) throw ConfigError("sample_locations: d_min_km must be > 0");
    if (centers.empty()) throw ConfigError("sample_locations: need at least one center");
    Rng rng = Rng::child(seed, 0x10c5);
    std::vector<GeoLocation> out;
    out.reserve(size_t(n));
    int64_t budget = 1000 * n;
    while (int64_t(out.size()) < n && budget > 0) {
        --budget;
        const GeoLocation& c = centers[size_t(rng.uniform_int(0, int64_t(centers.size()) - 1))];
        double bearing = rng.uniform(0.0, 2.0 * kPi);
        double dist = radius_km * std::sqrt(rng.uniform());
        GeoLocation cand = geo_offset(c, bearing, dist);
        bool ok = true;
        for (const auto& p : out) {
            if (haversine_km(p, cand) < d_min_km) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(cand);
    }
    if (int64_t(out.size()) < n)
        throw ConfigError("sample_locations: rejection budget exhausted at " + std::to_string(out.size()) + " of " +
                          std::to_string(n) + " points (density infeasible)");
    return out;
}

// Smooth location-dependent generator fields. Their spatial frequencies are
// low enough that a degree-5 harmonic basis can resolve them, which is what
// ties tile statistics to geography.
namespace geofield {

inline double urban_level(const GeoLocation& loc) {
    double la = deg2rad(loc.lat), lo = deg2rad(loc.lon);
    double v = 0.6 * std::sin(2.0 * lo + 1.1) * std::cos(2.0 * la) + 0.4 * std::cos(3.0 * lo - 0.4) * std::sin(la + 0.5);
    return std::clamp(0.55 + 0.45 * v, 0.0, 1.0);
}

inline double water_prob(const GeoLocation& loc) {
    double la = deg2rad(loc.lat), lo = deg2rad(loc.lon);
    return 0.32 + 0.22 * std::sin(lo + 2.2) * std::sin(2.0 * la - 0.3);
}

// Fraction of the background drawn as bare ground; each region gets its own
// band so regional appearance stays classifiable.
inline double bare_mix(const GeoLocation& loc) {
    static const double lo_band[kNumRegions] = {0.0, 0.5, 0.3, 0.7, 0.1, 0.2};
    static const double hi_band[kNumRegions] = {0.3, 0.8, 0.6, 1.0, 0.4, 0.5};
    double la = deg2rad(loc.lat), lo = deg2rad(loc.lon);
    double f = 0.5 + 0.5 * std::sin(2.0 * lo - 1.7) * std::cos(la + 1.0);
    int r = region_of(loc);
    return lo_band[r] + (hi_band[r] - lo_band[r]) * f;
}

}  // namespace geofield

}  // namespace mgd
