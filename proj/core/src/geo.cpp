#include "netoed/geo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "netoed/error.hpp"
#include "netoed/sobol.hpp"

namespace netoed {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

bool on_segment(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
    const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
    const double scale = std::max({std::abs(b.lon - a.lon), std::abs(b.lat - a.lat), 1.0});
    if (std::abs(cross) > 1e-12 * scale) return false;
    return p.lon >= std::min(a.lon, b.lon) - 1e-12 && p.lon <= std::max(a.lon, b.lon) + 1e-12 &&
           p.lat >= std::min(a.lat, b.lat) - 1e-12 && p.lat <= std::max(a.lat, b.lat) + 1e-12;
}

double segment_distance(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
    const double dx = b.lon - a.lon;
    const double dy = b.lat - a.lat;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((p.lon - a.lon) * dx + (p.lat - a.lat) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.lon - (a.lon + t * dx), p.lat - (a.lat + t * dy));
}

}  // namespace

bool GeoPoint::valid() const {
    return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
           lon >= -180.0 && lon <= 180.0;
}

void Domain::validate() const {
    if (!(lat_min < lat_max) || !(lon_min < lon_max) || !(depth_min < depth_max) ||
        !(mag_min < mag_max)) {
        throw InputError("domain: every axis needs min < max");
    }
    if (depth_min < 0.0) throw InputError("domain: depth_min must be >= 0");
    if (!GeoPoint{lat_min, lon_min}.valid() || !GeoPoint{lat_max, lon_max}.valid()) {
        throw InputError("domain: latitude/longitude out of range");
    }
}

bool Domain::contains(const GeoPoint& p) const {
    return p.lat >= lat_min && p.lat <= lat_max && p.lon >= lon_min && p.lon <= lon_max;
}

bool Domain::contains(const Event& e) const {
    return contains(e.loc) && e.depth >= depth_min && e.depth <= depth_max && e.mag >= mag_min &&
           e.mag <= mag_max;
}

PolygonRegion::PolygonRegion(std::vector<std::vector<GeoPoint>> rings) : rings_(std::move(rings)) {
    if (rings_.empty()) throw InputError("polygon: at least one ring required");
    for (auto& ring : rings_) {
        for (const auto& v : ring) {
            if (!v.valid()) throw InputError("polygon: vertex out of range");
        }
        if (!ring.empty() && ring.front() == ring.back()) ring.pop_back();
        std::vector<GeoPoint> distinct;
        for (const auto& v : ring) {
            if (std::find(distinct.begin(), distinct.end(), v) == distinct.end()) distinct.push_back(v);
        }
        if (distinct.size() < 3) throw InputError("polygon: ring needs at least 3 distinct vertices");
        // Shoelace area; zero means every vertex is collinear.
        double area2 = 0.0;
        for (std::size_t i = 0; i < ring.size(); ++i) {
            const auto& a = ring[i];
            const auto& b = ring[(i + 1) % ring.size()];
            area2 += a.lon * b.lat - b.lon * a.lat;
        }
        if (std::abs(area2) < 1e-14) throw InputError("polygon: degenerate ring (collinear vertices)");
        ring.push_back(ring.front());
    }
    const auto& outer = rings_.front();
    lat_min_ = lat_max_ = outer.front().lat;
    lon_min_ = lon_max_ = outer.front().lon;
    for (const auto& v : outer) {
        lat_min_ = std::min(lat_min_, v.lat);
        lat_max_ = std::max(lat_max_, v.lat);
        lon_min_ = std::min(lon_min_, v.lon);
        lon_max_ = std::max(lon_max_, v.lon);
    }
}

double great_circle_distance(const GeoPoint& a, const GeoPoint& b) {
    const double phi1 = a.lat * kDegToRad;
    const double phi2 = b.lat * kDegToRad;
    const double dphi = (b.lat - a.lat) * kDegToRad;
    const double dlam = (b.lon - a.lon) * kDegToRad;
    const double s1 = std::sin(dphi / 2);
    const double s2 = std::sin(dlam / 2);
    const double h = std::min(1.0, s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2);
    return 2.0 * std::asin(std::sqrt(h)) / kDegToRad;
}

bool point_in_polygon(const GeoPoint& p, const PolygonRegion& region) {
    if (region.empty()) throw InputError("polygon: empty region");
    bool inside = false;
    for (const auto& ring : region.rings()) {
        for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
            const GeoPoint& a = ring[i];
            const GeoPoint& b = ring[j];
            if (on_segment(p, a, b)) return true;
            if ((a.lat > p.lat) != (b.lat > p.lat)) {
                const double x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
                if (p.lon < x) inside = !inside;
            }
        }
    }
    return inside;
}

double distance_to_boundary(const GeoPoint& p, const PolygonRegion& region) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& ring : region.rings()) {
        for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
            best = std::min(best, segment_distance(p, ring[i], ring[i + 1]));
        }
    }
    return best;
}

Event map_unit_to_event(std::span<const double, 4> u, const Domain& d) {
    Event e;
    e.loc.lat = d.lat_min + u[0] * (d.lat_max - d.lat_min);
    e.loc.lon = d.lon_min + u[1] * (d.lon_max - d.lon_min);
    e.depth = d.depth_min + u[2] * (d.depth_max - d.depth_min);
    e.mag = d.mag_min + u[3] * (d.mag_max - d.mag_min);
    return e;
}

std::vector<Event> sobol_events(std::size_t n, const Domain& domain, std::uint64_t seed) {
    if (n == 0) throw InputError("sobol_events: empty event set requested");
    domain.validate();
    SobolSequence seq(4, seed);
    std::vector<Event> events;
    events.reserve(n);
    for (const auto& u : seq.first(n)) {
        events.push_back(map_unit_to_event(std::span<const double, 4>(u.data(), 4), domain));
    }
    return events;
}

}  // namespace netoed
