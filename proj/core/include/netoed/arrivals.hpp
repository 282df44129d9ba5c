#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "netoed/bundle.hpp"
#include "netoed/network.hpp"

namespace netoed {

/// Mean SNR for a station at `delta_km` (clamped below at 1 km) from an event of magnitude `mag`.
double snr_mean(const SnrModel& m, double delta_km, double mag, double station_offset = 0.0);

/// Piecewise pick uncertainty in seconds.
double sigma_meas(const PickNoiseModel& p, double snr);

/// sqrt(model^2 + meas^2).
double total_sigma(double model_sigma, double meas_sigma);

/// Per-station quantities of one candidate event under a bundle.
struct StationPrediction {
    double dist_deg = 0.0;
    double dist_km = 0.0;
    double mean_tt = 0.0;      // s
    double sigma_model = 0.0;  // s
    double sigma_meas = 0.0;   // s
    double log_p_detect = 0.0;
    double log_p_miss = 0.0;
};

std::vector<StationPrediction> predict_stations(const Event& e, const SensorNetwork& net, const ModelBundle& bundle);

/// Station-by-station arrival covariance over the whole network (s^2), nugget included.
Eigen::MatrixXd full_covariance(std::span<const StationPrediction> preds, const SensorNetwork& net,
                                const ModelBundle& bundle);

/// Covariance of the detecting stations only.
Eigen::MatrixXd assemble_covariance(const Event& e, const SensorNetwork& net, const DetectionVector& d,
                                    const ModelBundle& bundle);

/// Gaussian log-density of a residual vector (arrivals minus predictions).
double mvn_loglik(std::span<const double> residual, const Eigen::MatrixXd& sigma);

/// Log-density of a residual vector with a common unknown offset integrated out
/// under a flat prior. Zero for one residual, invariant to adding a constant.
double mvn_marginal_loglik(std::span<const double> residual, const Eigen::MatrixXd& sigma);

/// Log-density of arrivals given the event and a known origin time.
double arrival_loglik_conditional(const ArrivalVector& a, double origin_time, const Event& e, const DetectionVector& d,
                                  const SensorNetwork& net, const ModelBundle& bundle);

/// Log-density of arrivals with the origin time marginalized. Zero when fewer
/// than two stations detect.
double arrival_loglik_marginal(const ArrivalVector& a, const Event& e, const DetectionVector& d,
                               const SensorNetwork& net, const ModelBundle& bundle);

/// Allocation-free evaluation of the origin-time-marginalized Gaussian on a
/// subset of a full covariance. One instance per thread.
class MarginalWorkspace {
public:
    /// `sigma_full` is row-major n_full x n_full; `index` selects rows/cols;
    /// `residual` is aligned with `index`. Throws NumericalError if singular.
    double marginal(const double* sigma_full, std::size_t n_full, std::span<const int> index,
                    std::span<const double> residual);

    /// Same, for the conditional density at residual - origin_time.
    double conditional(const double* sigma_full, std::size_t n_full, std::span<const int> index,
                       std::span<const double> residual, double origin_time);

private:
    double factor(const double* sigma_full, std::size_t n_full, std::span<const int> index);
    void forward_solve(double* b) const;

    std::size_t n_ = 0;
    std::vector<double> chol_;
    std::vector<double> ones_;
    std::vector<double> work_;
};

}  // namespace netoed
