#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "netoed/event.hpp"

namespace netoed {

/// Kilometres per degree of great-circle arc on the reference sphere.
inline constexpr double kKmPerDegree = 111.19;

/// Rectangular monitoring box over (lat, lon, depth, magnitude).
struct Domain {
    double lat_min = 40.0;
    double lat_max = 42.0;
    double lon_min = -112.0;
    double lon_max = -108.36;
    double depth_min = 0.0;  // km
    double depth_max = 40.0;
    double mag_min = 0.5;
    double mag_max = 4.5;

    /// Throws InputError unless every axis has min < max and depth_min >= 0.
    void validate() const;

    bool contains(const Event& e) const;
    bool contains(const GeoPoint& p) const;

    /// Surface area in square degrees (lat span times lon span).
    double area_deg2() const { return (lat_max - lat_min) * (lon_max - lon_min); }
    double depth_range() const { return depth_max - depth_min; }
};

/// Closed polygonal region in the (lon, lat) plane: an outer ring plus optional holes.
/// Rings are closed on construction (first vertex repeated at the end).
class PolygonRegion {
public:
    PolygonRegion() = default;
    explicit PolygonRegion(std::vector<std::vector<GeoPoint>> rings);

    const std::vector<std::vector<GeoPoint>>& rings() const { return rings_; }
    bool empty() const { return rings_.empty(); }

    /// Axis-aligned bounds of the outer ring.
    double lat_min() const { return lat_min_; }
    double lat_max() const { return lat_max_; }
    double lon_min() const { return lon_min_; }
    double lon_max() const { return lon_max_; }

private:
    std::vector<std::vector<GeoPoint>> rings_;
    double lat_min_ = 0, lat_max_ = 0, lon_min_ = 0, lon_max_ = 0;
};

/// Central angle between two points by the haversine formula, in degrees.
double great_circle_distance(const GeoPoint& a, const GeoPoint& b);

inline double degrees_to_km(double deg) { return deg * kKmPerDegree; }

/// Even-odd crossing rule in the (lon, lat) plane. Points on any edge count as inside.
bool point_in_polygon(const GeoPoint& p, const PolygonRegion& region);

/// Planar distance (degrees in the lon/lat plane) from p to the nearest ring edge.
double distance_to_boundary(const GeoPoint& p, const PolygonRegion& region);

/// Maps a point of the unit hypercube to an event by an affine map of each axis.
Event map_unit_to_event(std::span<const double, 4> u, const Domain& domain);

/// n events from a scrambled 4-D Sobol sequence mapped affinely into the domain.
std::vector<Event> sobol_events(std::size_t n, const Domain& domain, std::uint64_t seed);

}  // namespace netoed
