#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "netoed/event.hpp"

namespace netoed {

struct Station {
    GeoPoint loc;
    double snr_offset = 0.0;  // additive SNR fidelity offset

    friend bool operator==(const Station&, const Station&) = default;
};

/// Ordered set of stations. Station order fixes the layout of every
/// per-station vector (detections, arrivals, covariance rows).
struct SensorNetwork {
    std::vector<Station> stations;

    std::size_t size() const { return stations.size(); }
    SensorNetwork with(const Station& extra) const {
        SensorNetwork out = *this;
        out.stations.push_back(extra);
        return out;
    }
    friend bool operator==(const SensorNetwork&, const SensorNetwork&) = default;
};

/// Per-station detection flags.
struct DetectionVector {
    std::vector<std::uint8_t> flags;

    std::size_t size() const { return flags.size(); }
    std::size_t count() const {
        std::size_t c = 0;
        for (auto f : flags) c += f != 0;
        return c;
    }
    friend bool operator==(const DetectionVector&, const DetectionVector&) = default;
};

/// Arrival times (seconds) of the detecting stations, in station order.
struct ArrivalVector {
    std::vector<double> times;

    std::size_t size() const { return times.size(); }
    friend bool operator==(const ArrivalVector&, const ArrivalVector&) = default;
};

}  // namespace netoed
