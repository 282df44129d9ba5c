#include "netoed/synth.hpp"

#include <algorithm>
#include <cmath>

#include "netoed/error.hpp"

namespace netoed {

DetectionVector sample_detections(const Event& e, const SensorNetwork& net, const DetectionModel& dm, Rng& rng) {
    DetectionVector d;
    d.flags.resize(net.size());
    for (std::size_t i = 0; i < net.size(); ++i) {
        const double p = detection_probability(dm, e, net.stations[i].loc);
        d.flags[i] = uniform01(rng) < p ? 1 : 0;
    }
    return d;
}

std::vector<double> sample_gaussian(std::span<const double> mean, const Eigen::MatrixXd& sigma, Rng& rng) {
    const auto n = static_cast<Eigen::Index>(mean.size());
    if (sigma.rows() != n || sigma.cols() != n) throw InputError("sample_gaussian: covariance shape mismatch");
    std::vector<double> out(mean.begin(), mean.end());
    if (n == 0) return out;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma);
    if (ldlt.info() != Eigen::Success) throw NumericalError("sample_gaussian: factorization failed");
    const Eigen::VectorXd dvec = ldlt.vectorD();
    const double scale = std::max(dvec.cwiseAbs().maxCoeff(), 1e-300);
    if (dvec.minCoeff() < -1e-10 * scale) throw NumericalError("sample_gaussian: covariance is not positive semi-definite");

    std::normal_distribution<double> normal;
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(rng) * std::sqrt(std::max(dvec[i], 0.0));
    // sigma = P^T L D L^T P, so P^T L sqrt(D) z has covariance sigma.
    const Eigen::VectorXd lz = ldlt.matrixL() * z;
    const Eigen::VectorXd x = ldlt.transpositionsP().transpose() * lz;
    for (Eigen::Index i = 0; i < n; ++i) out[i] += x[i];
    return out;
}

ArrivalVector sample_arrivals(const Event& e, const DetectionVector& d, const SensorNetwork& net,
                              const ModelBundle& bundle, Rng& rng) {
    if (d.size() != net.size()) throw InputError("sample_arrivals: detection vector length differs from network size");
    if (d.count() == 0) return {};
    const auto preds = predict_stations(e, net, bundle);
    const Eigen::MatrixXd sigma = assemble_covariance(e, net, d, bundle);
    std::vector<double> mean;
    for (std::size_t i = 0; i < net.size(); ++i) {
        if (d.flags[i]) mean.push_back(preds[i].mean_tt);
    }
    return ArrivalVector{sample_gaussian(mean, sigma, rng)};
}

SyntheticDataset sample_dataset(std::span<const StationPrediction> preds, const Eigen::MatrixXd& sigma_full,
                                bool with_arrivals, Rng& rng) {
    SyntheticDataset ds;
    ds.detections.flags.resize(preds.size());
    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const bool hit = uniform01(rng) < std::exp(preds[i].log_p_detect);
        ds.detections.flags[i] = hit ? 1 : 0;
        if (hit) idx.push_back(static_cast<Eigen::Index>(i));
    }
    if (!with_arrivals || idx.empty()) return ds;
    std::vector<double> mean(idx.size());
    Eigen::MatrixXd sub(idx.size(), idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) {
        mean[j] = preds[idx[j]].mean_tt;
        for (std::size_t k = 0; k < idx.size(); ++k) sub(j, k) = sigma_full(idx[j], idx[k]);
    }
    ds.arrivals.times = sample_gaussian(mean, sub, rng);
    return ds;
}

std::vector<SyntheticDataset> synth_dataset(const Event& e, const SensorNetwork& net, const ModelBundle& bundle,
                                            std::size_t n_realizations, std::uint64_t seed,
                                            std::uint64_t event_index) {
    if (n_realizations == 0) throw InputError("synth_dataset: n_realizations must be >= 1");
    const auto preds = predict_stations(e, net, bundle);
    const Eigen::MatrixXd sigma = bundle.use_arrivals ? full_covariance(preds, net, bundle) : Eigen::MatrixXd();
    std::vector<SyntheticDataset> out;
    out.reserve(n_realizations);
    for (std::size_t k = 0; k < n_realizations; ++k) {
        Rng rng = make_stream(seed, {event_index, k});
        out.push_back(sample_dataset(preds, sigma, bundle.use_arrivals, rng));
    }
    return out;
}

}  // namespace netoed
