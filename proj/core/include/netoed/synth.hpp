#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "netoed/arrivals.hpp"
#include "netoed/bundle.hpp"
#include "netoed/network.hpp"
#include "netoed/rng.hpp"

namespace netoed {

/// One hypothetical observation of an event. `arrivals` holds one time per
/// detection, except for bundles with arrivals disabled where it is empty.
struct SyntheticDataset {
    DetectionVector detections;
    ArrivalVector arrivals;
    double origin_time_used = 0.0;  // s
};

/// Independent Bernoulli detection per station.
DetectionVector sample_detections(const Event& e, const SensorNetwork& net, const DetectionModel& dm, Rng& rng);

/// Arrival times mu + L z for the detecting stations, origin time 0.
/// Uses a pivoted LDL^T factor so positive semi-definite covariances are accepted.
ArrivalVector sample_arrivals(const Event& e, const DetectionVector& d, const SensorNetwork& net,
                              const ModelBundle& bundle, Rng& rng);

/// Draws a correlated Gaussian vector with covariance `sigma` (PSD) and adds it to `mean`.
std::vector<double> sample_gaussian(std::span<const double> mean, const Eigen::MatrixXd& sigma, Rng& rng);

/// Detections then arrivals from precomputed per-station predictions and the
/// full-network covariance.
SyntheticDataset sample_dataset(std::span<const StationPrediction> preds, const Eigen::MatrixXd& sigma_full,
                                bool with_arrivals, Rng& rng);

/// Replicate k is drawn from the stream keyed by (seed, event_index, k).
std::vector<SyntheticDataset> synth_dataset(const Event& e, const SensorNetwork& net, const ModelBundle& bundle,
                                            std::size_t n_realizations, std::uint64_t seed,
                                            std::uint64_t event_index = 0);

}  // namespace netoed
