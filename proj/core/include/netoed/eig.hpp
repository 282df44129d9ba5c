#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "netoed/arrivals.hpp"
#include "netoed/bundle.hpp"
#include "netoed/network.hpp"
#include "netoed/priors.hpp"
#include "netoed/synth.hpp"

namespace netoed {

/// Probabilities over the events of a WeightedEventSet, in support order.
struct DiscreteDistribution {
    std::vector<double> probs;

    std::size_t size() const { return probs.size(); }
    static DiscreteDistribution from_support(const WeightedEventSet& support);
};

/// Normalizes prior weights times likelihoods in log space. Throws
/// NumericalError when no support event keeps finite mass.
DiscreteDistribution posterior_from_loglik(std::span<const double> log_prior, std::span<const double> loglik);

/// Posterior over the support given one dataset.
DiscreteDistribution posterior_weights(const SyntheticDataset& ds, const WeightedEventSet& support,
                                       const SensorNetwork& net, const ModelBundle& bundle);

/// sum p log(p / q) with 0 log 0 = 0. Throws InputError on length mismatch or
/// when p has mass where q has none.
double kl_divergence(const DiscreteDistribution& post, const DiscreteDistribution& prior);

/// log p(D | theta) for one support event, from cached station predictions.
double dataset_loglik(const SyntheticDataset& ds, std::span<const StationPrediction> preds,
                      const Eigen::MatrixXd& sigma_full, const ModelBundle& bundle, MarginalWorkspace& ws);

struct SensitivityRecord {
    Event event;
    double eig = 0.0;           // nats
    double mc_std_error = 0.0;  // nats
    std::size_t n_realizations = 0;
    std::size_t skipped = 0;           // datasets with no posterior mass
    double max_posterior_mass = 0.0;   // largest single-event posterior probability seen
};

struct EigSettings {
    std::size_t n_realizations = 32;
    std::uint64_t seed = 0;
    std::size_t workers = 0;  // 0: NETOED_THREADS or hardware
};

struct EigReport {
    double total_eig = 0.0;
    double total_std_error = 0.0;
    std::vector<SensitivityRecord> records;
    std::vector<double> weights;  // normalized prior weights used for the aggregate
    EigSettings settings;
    std::size_t n_stations = 0;
    std::size_t skipped = 0;
    std::size_t datasets = 0;
    double max_posterior_mass = 0.0;

    /// True when some posterior put more than half its mass on one support event.
    bool coarse_grid_warning() const { return max_posterior_mass > 0.5; }
};

/// Per-support-event predictions and full-network covariances. Built once per
/// (support, network, bundle) and shared read-only by all workers.
class LikelihoodCache {
public:
    LikelihoodCache(const WeightedEventSet& support, const SensorNetwork& net, const ModelBundle& bundle,
                    std::size_t workers = 0);

    std::size_t size() const { return preds_.size(); }
    std::size_t n_stations() const { return n_stations_; }
    std::span<const StationPrediction> predictions(std::size_t k) const { return preds_[k]; }
    const Eigen::MatrixXd& covariance(std::size_t k) const { return sigma_[k]; }
    const ModelBundle& bundle() const { return bundle_; }
    std::span<const double> log_prior() const { return log_prior_; }

    /// log p(D | theta_k) for every support event.
    void loglik(const SyntheticDataset& ds, std::span<double> out, MarginalWorkspace& ws) const;

private:
    ModelBundle bundle_;
    std::size_t n_stations_ = 0;
    std::vector<std::vector<StationPrediction>> preds_;
    std::vector<Eigen::MatrixXd> sigma_;
    std::vector<double> log_prior_;
};

/// KL(posterior || prior) for one dataset, computed as E_post[log L] - log E_prior[L].
/// Returns false when the posterior has no finite mass. `max_mass` receives the largest posterior probability.
bool dataset_information(const LikelihoodCache& cache, const SyntheticDataset& ds, MarginalWorkspace& ws,
                         std::vector<double>& scratch, double& kl, double& max_mass);

/// Expected information gain about theta_prime, averaged over synthesized datasets.
SensitivityRecord eig_event(const Event& theta_prime, const WeightedEventSet& support, const SensorNetwork& net,
                            const ModelBundle& bundle, std::size_t n_realizations, std::uint64_t seed,
                            std::uint64_t event_index = 0);

/// Prior-weighted average of eig_event over the support, which doubles as the
/// inference grid. Result is independent of the worker count.
EigReport eig_total(const WeightedEventSet& support, const SensorNetwork& net, const ModelBundle& bundle,
                    const EigSettings& settings);

struct SensitivityRow {
    double lat = 0.0, lon = 0.0, depth_km = 0.0, mag = 0.0;
    double eig_nats = 0.0, mc_se_nats = 0.0;

    friend bool operator==(const SensitivityRow&, const SensitivityRow&) = default;
};

std::vector<SensitivityRow> sensitivity_map(const EigReport& report);

/// Header `lat,lon,depth_km,mag,eig_nats,mc_se_nats`, preceded by `# ` comment lines.
void write_sensitivity_csv(std::ostream& out, std::span<const SensitivityRow> rows,
                           std::span<const std::string> comments = {});
std::vector<SensitivityRow> read_sensitivity_csv(std::istream& in, const std::string& name = "sensitivity");

nlohmann::json report_to_json(const EigReport& report);

}  // namespace netoed
