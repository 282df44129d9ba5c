#pragma once

namespace netoed {

/// Surface location in degrees.
struct GeoPoint {
    double lat = 0.0;  // degrees north, [-90, 90]
    double lon = 0.0;  // degrees east, [-180, 180]

    bool valid() const;
    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Candidate seismic source. Origin time is not a parameter; it is marginalized.
struct Event {
    GeoPoint loc;
    double depth = 0.0;  // km
    double mag = 0.0;

    friend bool operator==(const Event&, const Event&) = default;
};

}  // namespace netoed
