#include "netoed/arrivals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "netoed/error.hpp"
#include "netoed/geo.hpp"

namespace netoed {
namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

std::vector<int> detected_indices(const DetectionVector& d) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d.flags[i]) idx.push_back(static_cast<int>(i));
    }
    return idx;
}

void check_shapes(const ArrivalVector& a, const DetectionVector& d, const SensorNetwork& net) {
    if (d.size() != net.size()) throw InputError("arrival likelihood: detection vector length differs from network size");
    if (a.size() != d.count()) throw InputError("arrival likelihood: one arrival per detection required");
}

}  // namespace

double snr_mean(const SnrModel& m, double delta_km, double mag, double station_offset) {
    return m.a * mag - m.b * std::log(std::max(delta_km, 1.0)) + m.c + station_offset;
}

double sigma_meas(const PickNoiseModel& p, double snr) {
    if (snr < p.t_low) return p.sigma0;
    if (snr > p.t_high) return p.shrink * p.sigma0;
    return p.sigma0 - (p.sigma0 - p.shrink * p.sigma0) / (std::log(p.t_high) - std::log(p.t_low)) * std::log(snr / p.t_low);
}

double total_sigma(double model_sigma, double meas_sigma) { return std::hypot(model_sigma, meas_sigma); }

std::vector<StationPrediction> predict_stations(const Event& e, const SensorNetwork& net, const ModelBundle& b) {
    std::vector<StationPrediction> out(net.size());
    for (std::size_t i = 0; i < net.size(); ++i) {
        auto& p = out[i];
        p.dist_deg = great_circle_distance(e.loc, net.stations[i].loc);
        p.dist_km = degrees_to_km(p.dist_deg);
        const double z = b.detection.logit(p.dist_deg, e.depth, e.mag);
        p.log_p_detect = log_sigmoid(z);
        p.log_p_miss = log_sigmoid(-z);
        if (b.use_arrivals) {
            p.mean_tt = b.mean_tt(p.dist_km, e.depth);
            p.sigma_model = b.sigma_tt(p.dist_km, e.depth);
            p.sigma_meas = sigma_meas(b.pick, snr_mean(b.snr, p.dist_km, e.mag, net.stations[i].snr_offset));
        }
    }
    return out;
}

Eigen::MatrixXd full_covariance(std::span<const StationPrediction> preds, const SensorNetwork& net,
                                const ModelBundle& b) {
    const auto n = static_cast<Eigen::Index>(preds.size());
    Eigen::MatrixXd sigma(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = 0; k <= j; ++k) {
            double rho;
            switch (b.correlation.mode) {
                case CorrelationMode::EpicentralDifference:
                    rho = kernel_correlation(b.correlation, preds[j].dist_km, preds[k].dist_km);
                    break;
                case CorrelationMode::StationSeparation:
                    rho = kernel_correlation(b.correlation,
                                             degrees_to_km(great_circle_distance(net.stations[j].loc, net.stations[k].loc)),
                                             0.0);
                    break;
                case CorrelationMode::Independent:
                default:
                    rho = j == k ? 1.0 : 0.0;
                    break;
            }
            sigma(j, k) = sigma(k, j) = preds[j].sigma_model * rho * preds[k].sigma_model;
        }
        sigma(j, j) += preds[j].sigma_meas * preds[j].sigma_meas + b.nugget;
    }
    return sigma;
}

Eigen::MatrixXd assemble_covariance(const Event& e, const SensorNetwork& net, const DetectionVector& d,
                                    const ModelBundle& b) {
    if (d.size() != net.size()) throw InputError("assemble_covariance: detection vector length differs from network size");
    const auto idx = detected_indices(d);
    if (idx.empty()) throw InputError("assemble_covariance: at least one detection required");
    const auto preds = predict_stations(e, net, b);
    const Eigen::MatrixXd full = full_covariance(preds, net, b);
    Eigen::MatrixXd sub(idx.size(), idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) {
        for (std::size_t k = 0; k < idx.size(); ++k) sub(j, k) = full(idx[j], idx[k]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sub);
    if (llt.info() != Eigen::Success) throw NumericalError("assemble_covariance: covariance is not positive definite");
    return sub;
}

double MarginalWorkspace::factor(const double* a, std::size_t n_full, std::span<const int> index) {
    const std::size_t n = index.size();
    n_ = n;
    chol_.resize(n * n);
    double logdet = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double* lj = &chol_[j * n];
        double s = a[index[j] * n_full + index[j]];
        for (std::size_t k = 0; k < j; ++k) s -= lj[k] * lj[k];
        if (!(s > 0.0) || !std::isfinite(s)) throw NumericalError("singular arrival covariance");
        const double d = std::sqrt(s);
        lj[j] = d;
        logdet += 2.0 * std::log(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double* li = &chol_[i * n];
            double t = a[index[i] * n_full + index[j]];
            for (std::size_t k = 0; k < j; ++k) t -= li[k] * lj[k];
            li[j] = t / d;
        }
    }
    return logdet;
}

void MarginalWorkspace::forward_solve(double* b) const {
    for (std::size_t i = 0; i < n_; ++i) {
        const double* li = &chol_[i * n_];
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= li[k] * b[k];
        b[i] = s / li[i];
    }
}

double MarginalWorkspace::marginal(const double* sigma_full, std::size_t n_full, std::span<const int> index,
                                   std::span<const double> residual) {
    const std::size_t n = index.size();
    if (residual.size() != n) throw InputError("marginal likelihood: residual length differs from station count");
    if (n <= 1) return 0.0;
    const double logdet = factor(sigma_full, n_full, index);

    // The constant offset is removed twice: first by centring (exact, keeps
    // magnitudes small), then by the generalized-least-squares offset alpha/beta.
    // The remaining quadratic form equals r'S^-1 r - alpha^2/beta of the
    // closed form but is computed without cancellation.
    const double mean = std::accumulate(residual.begin(), residual.end(), 0.0) / static_cast<double>(n);
    ones_.assign(n, 1.0);
    work_.resize(n);
    for (std::size_t i = 0; i < n; ++i) work_[i] = residual[i] - mean;
    forward_solve(ones_.data());
    forward_solve(work_.data());
    double beta = 0.0, alpha = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        beta += ones_[i] * ones_[i];
        alpha += ones_[i] * work_[i];
    }
    const double offset = alpha / beta;
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = work_[i] - offset * ones_[i];
        quad += v * v;
    }
    return -0.5 * static_cast<double>(n - 1) * kLog2Pi - 0.5 * logdet - 0.5 * std::log(beta) - 0.5 * quad;
}

double MarginalWorkspace::conditional(const double* sigma_full, std::size_t n_full, std::span<const int> index,
                                      std::span<const double> residual, double origin_time) {
    const std::size_t n = index.size();
    if (residual.size() != n) throw InputError("conditional likelihood: residual length differs from station count");
    if (n == 0) return 0.0;
    const double logdet = factor(sigma_full, n_full, index);
    work_.resize(n);
    for (std::size_t i = 0; i < n; ++i) work_[i] = residual[i] - origin_time;
    forward_solve(work_.data());
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) quad += work_[i] * work_[i];
    return -0.5 * static_cast<double>(n) * kLog2Pi - 0.5 * logdet - 0.5 * quad;
}

double mvn_loglik(std::span<const double> residual, const Eigen::MatrixXd& sigma) {
    const Eigen::MatrixXd rm = sigma;  // column-major symmetric == row-major
    std::vector<int> idx(residual.size());
    std::iota(idx.begin(), idx.end(), 0);
    MarginalWorkspace ws;
    return ws.conditional(rm.data(), residual.size(), idx, residual, 0.0);
}

double mvn_marginal_loglik(std::span<const double> residual, const Eigen::MatrixXd& sigma) {
    std::vector<int> idx(residual.size());
    std::iota(idx.begin(), idx.end(), 0);
    MarginalWorkspace ws;
    return ws.marginal(sigma.data(), residual.size(), idx, residual);
}

double arrival_loglik_conditional(const ArrivalVector& a, double origin_time, const Event& e, const DetectionVector& d,
                                  const SensorNetwork& net, const ModelBundle& b) {
    check_shapes(a, d, net);
    const auto idx = detected_indices(d);
    if (idx.empty()) return 0.0;
    const auto preds = predict_stations(e, net, b);
    const Eigen::MatrixXd full = full_covariance(preds, net, b);
    std::vector<double> resid(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) resid[j] = a.times[j] - preds[idx[j]].mean_tt;
    MarginalWorkspace ws;
    return ws.conditional(full.data(), net.size(), idx, resid, origin_time);
}

double arrival_loglik_marginal(const ArrivalVector& a, const Event& e, const DetectionVector& d,
                               const SensorNetwork& net, const ModelBundle& b) {
    check_shapes(a, d, net);
    const auto idx = detected_indices(d);
    if (idx.size() < 2) return 0.0;
    const auto preds = predict_stations(e, net, b);
    const Eigen::MatrixXd full = full_covariance(preds, net, b);
    std::vector<double> resid(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) resid[j] = a.times[j] - preds[idx[j]].mean_tt;
    MarginalWorkspace ws;
    return ws.marginal(full.data(), net.size(), idx, resid);
}

}  // namespace netoed
