#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netoed/eig.hpp"
#include "netoed/geo.hpp"
#include "netoed/network.hpp"
#include "netoed/rng.hpp"

namespace netoed {

/// Where a new sensor may go: a lat/lon box, optionally intersected with a polygon.
class PlacementRegion {
public:
    explicit PlacementRegion(const Domain& box);
    PlacementRegion(const Domain& box, PolygonRegion polygon);

    bool contains(const GeoPoint& p) const;

    double lat_min() const { return lat_min_; }
    double lat_max() const { return lat_max_; }
    double lon_min() const { return lon_min_; }
    double lon_max() const { return lon_max_; }
    const std::optional<PolygonRegion>& polygon() const { return polygon_; }

private:
    double lat_min_, lat_max_, lon_min_, lon_max_;
    std::optional<PolygonRegion> polygon_;
};

/// Rectangle mapped onto the unit square before kernel evaluation.
struct GpInputBox {
    double lat_min = 0.0, lat_max = 1.0;
    double lon_min = 0.0, lon_max = 1.0;

    static GpInputBox from(const PlacementRegion& r) { return {r.lat_min(), r.lat_max(), r.lon_min(), r.lon_max()}; }
};

/// Squared-exponential ARD kernel hyperparameters. Lengths are in unit-square
/// coordinates; variances refer to standardized training values.
struct GpHyperparameters {
    double length_lat = 0.3;
    double length_lon = 0.3;
    double signal_var = 1.0;
    double noise_var = 1e-2;
};

struct GpPrediction {
    double mean = 0.0;
    double std = 0.0;  // latent function, observation noise excluded
};

class GpSurrogate {
public:
    static constexpr double kNoiseFloor = 1e-8;

    const GpHyperparameters& hyper() const { return hyper_; }
    const GpInputBox& box() const { return box_; }
    std::size_t size() const { return static_cast<std::size_t>(x_.rows()); }

    /// Length scale along latitude (axis 0) or longitude (axis 1) in degrees.
    double length_scale_deg(int axis) const;
    /// Observation-noise and prior signal standard deviations in value units.
    double noise_sd() const;
    double signal_sd() const;
    double prior_mean() const { return y_mean_; }

    /// Negative log marginal likelihood of the standardized data and its gradient
    /// with respect to (log l_lat, log l_lon, log signal_var, log noise_var).
    double neg_log_marginal(const Eigen::Vector4d& log_theta, Eigen::Vector4d* grad) const;

private:
    friend GpSurrogate gp_fit(std::span<const GeoPoint>, std::span<const double>, const GpInputBox&);
    friend GpPrediction gp_predict(const GpSurrogate&, const GeoPoint&);

    void set_hyper(const GpHyperparameters& h);

    GpInputBox box_;
    Eigen::MatrixX2d x_;
    Eigen::VectorXd y_;  // standardized
    double y_mean_ = 0.0, y_scale_ = 1.0;
    GpHyperparameters hyper_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd alpha_;
};

/// Maximum marginal likelihood fit from 8 deterministic starting points.
/// Requires at least two points; duplicate points are allowed.
GpSurrogate gp_fit(std::span<const GeoPoint> points, std::span<const double> values, const GpInputBox& box);

GpPrediction gp_predict(const GpSurrogate& s, const GeoPoint& p);

/// Expected improvement over `best` for maximization.
double expected_improvement(double mean, double std, double best);

/// Probability of improvement over `best` for maximization.
double probability_of_improvement(double mean, double std, double best);

/// Confidence-bound acquisition; the maximization form of the lower confidence bound.
inline double confidence_bound(double mean, double std, double kappa) { return mean + kappa * std; }

enum class Acquisition { ExpectedImprovement, ConfidenceBound, ProbabilityOfImprovement };

std::string to_string(Acquisition a);
Acquisition acquisition_from_string(const std::string& s);

struct ProposalSettings {
    std::size_t candidates = 2048;
    std::size_t pattern_steps = 20;
    Acquisition acquisition = Acquisition::ExpectedImprovement;
    double kappa = 1.96;  // confidence-bound width
};

/// Maximizer of the acquisition over feasible QMC candidates, polished by a
/// feasible compass search. Falls back to the largest predictive std when
/// every candidate scores zero. Throws InfeasibleRegionError when no
/// candidate is feasible.
GeoPoint propose_next(const GpSurrogate& s, const PlacementRegion& region, double best, Rng& rng,
                      const ProposalSettings& settings = {});

struct ObjectiveValue {
    double value = 0.0;
    double std_error = 0.0;
};

struct BoEvaluation {
    GeoPoint loc;
    ObjectiveValue objective;
};

struct BoSettings {
    std::size_t n_init = 10;
    std::size_t budget = 100;  // total objective evaluations, initial design included
    ProposalSettings proposal;
    std::uint64_t seed = 0;
};

struct BoResult {
    std::vector<BoEvaluation> evaluations;
    std::size_t best = 0;  // index of the largest evaluated value (first on ties)
};

/// Feasible scrambled-Sobol points inside the region, in sequence order.
std::vector<GeoPoint> feasible_design(const PlacementRegion& region, std::size_t n, std::uint64_t seed);

BoResult bo_maximize(const std::function<ObjectiveValue(const GeoPoint&)>& objective, const PlacementRegion& region,
                     const BoSettings& settings);

struct PlacementStep {
    std::size_t sensor_idx = 0;
    GeoPoint loc;
    double eig = 0.0;
    double mc_std_error = 0.0;
    std::size_t n_evaluations = 0;
};

struct TraceEvaluation {
    std::size_t sensor_idx = 0;
    std::size_t iter = 0;
    GeoPoint loc;
    double eig = 0.0;
};

struct OptimizationTrace {
    double initial_eig = 0.0;
    double initial_std_error = 0.0;
    std::vector<PlacementStep> steps;
    std::vector<TraceEvaluation> evaluations;
};

struct GreedySettings {
    std::size_t budget = 100;  // eig_total evaluations per placed sensor
    std::size_t n_init = 10;
    ProposalSettings proposal;
    EigSettings eig;           // same seed for every evaluation: common random numbers
    double new_station_snr_offset = 0.0;
    std::uint64_t seed = 0;
};

struct PlacementResult {
    SensorNetwork network;
    OptimizationTrace trace;
};

/// Adds k sensors one at a time, each at the best location evaluated by Bayesian optimization.
PlacementResult greedy_place(const SensorNetwork& initial, std::size_t k, const PlacementRegion& region,
                             const WeightedEventSet& support, const ModelBundle& bundle,
                             const GreedySettings& settings);

/// Header `sensor_idx,iter,lat,lon,eig_nats`, preceded by `# ` comment lines.
void write_trace_csv(std::ostream& out, const OptimizationTrace& trace, std::span<const std::string> comments = {});

}  // namespace netoed
