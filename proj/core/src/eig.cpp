#include "netoed/eig.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "netoed/csv.hpp"
#include "netoed/error.hpp"
#include "netoed/parallel.hpp"

namespace netoed {
namespace {

double log_sum_exp(std::span<const double> a) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : a) m = std::max(m, v);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double v : a) s += std::exp(v - m);
    return m + std::log(s);
}

std::vector<double> normalized_log_weights(const WeightedEventSet& support) {
    if (support.size() == 0) throw InputError("support must contain at least one event");
    if (support.log_weights.size() != support.size()) throw InputError("support: one log weight per event required");
    const double lse = log_sum_exp(support.log_weights);
    if (!std::isfinite(lse)) throw InputError("support: weights carry no mass");
    std::vector<double> out(support.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = support.log_weights[k] - lse;
    return out;
}

struct Moments {
    double mean = 0.0, std_error = 0.0;
};

Moments mean_and_error(std::span<const double> xs) {
    Moments m;
    if (xs.empty()) return m;
    const double n = static_cast<double>(xs.size());
    m.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - m.mean) * (x - m.mean);
        m.std_error = std::sqrt(ss / (n - 1.0) / n);
    }
    return m;
}

}  // namespace

DiscreteDistribution DiscreteDistribution::from_support(const WeightedEventSet& support) {
    DiscreteDistribution d;
    for (double lw : normalized_log_weights(support)) d.probs.push_back(std::exp(lw));
    return d;
}

DiscreteDistribution posterior_from_loglik(std::span<const double> log_prior, std::span<const double> loglik) {
    if (log_prior.size() != loglik.size()) throw InputError("posterior: prior and likelihood lengths differ");
    if (log_prior.empty()) throw InputError("posterior: empty support");
    std::vector<double> a(log_prior.size());
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = log_prior[k] + loglik[k];
    const double lse = log_sum_exp(a);
    if (!std::isfinite(lse)) throw NumericalError("posterior has no mass on the support");
    DiscreteDistribution d;
    d.probs.resize(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) d.probs[k] = std::exp(a[k] - lse);
    return d;
}

double kl_divergence(const DiscreteDistribution& post, const DiscreteDistribution& prior) {
    if (post.size() != prior.size()) throw InputError("kl_divergence: distributions on different supports");
    double kl = 0.0;
    for (std::size_t k = 0; k < post.size(); ++k) {
        const double p = post.probs[k];
        if (p == 0.0) continue;
        const double q = prior.probs[k];
        if (!(q > 0.0)) throw InputError("kl_divergence: posterior mass where the prior has none");
        kl += p * (std::log(p) - std::log(q));
    }
    return kl;
}

double dataset_loglik(const SyntheticDataset& ds, std::span<const StationPrediction> preds,
                      const Eigen::MatrixXd& sigma_full, const ModelBundle& bundle, MarginalWorkspace& ws) {
    const std::size_t n = preds.size();
    if (ds.detections.size() != n) throw InputError("dataset: detection vector length differs from network size");
    if (bundle.use_arrivals && ds.arrivals.size() != ds.detections.count()) {
        throw InputError("dataset: one arrival per detection required");
    }
    double ll = 0.0;
    int idx[64];
    double resid[64];
    std::vector<int> idx_heap;
    std::vector<double> resid_heap;
    int* ip = idx;
    double* rp = resid;
    if (n > 64) {
        idx_heap.resize(n);
        resid_heap.resize(n);
        ip = idx_heap.data();
        rp = resid_heap.data();
    }
    std::size_t m = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool hit = ds.detections.flags[i] != 0;
        if (bundle.use_detections) ll += hit ? preds[i].log_p_detect : preds[i].log_p_miss;
        if (hit) {
            if (bundle.use_arrivals) rp[m] = ds.arrivals.times[m] - preds[i].mean_tt;
            ip[m++] = static_cast<int>(i);
        }
    }
    if (bundle.use_arrivals && m >= 2) {
        ll += ws.marginal(sigma_full.data(), n, std::span<const int>(ip, m), std::span<const double>(rp, m));
    }
    return ll;
}

DiscreteDistribution posterior_weights(const SyntheticDataset& ds, const WeightedEventSet& support,
                                       const SensorNetwork& net, const ModelBundle& bundle) {
    const LikelihoodCache cache(support, net, bundle, 1);
    MarginalWorkspace ws;
    std::vector<double> ll(cache.size());
    cache.loglik(ds, ll, ws);
    return posterior_from_loglik(cache.log_prior(), ll);
}

LikelihoodCache::LikelihoodCache(const WeightedEventSet& support, const SensorNetwork& net, const ModelBundle& bundle,
                                 std::size_t workers)
    : bundle_(bundle), n_stations_(net.size()), log_prior_(normalized_log_weights(support)) {
    preds_.resize(support.size());
    sigma_.resize(support.size());
    parallel_for(
        support.size(),
        [&](std::size_t k) {
            preds_[k] = predict_stations(support.events[k], net, bundle_);
            if (bundle_.use_arrivals) sigma_[k] = full_covariance(preds_[k], net, bundle_);
        },
        workers);
}

void LikelihoodCache::loglik(const SyntheticDataset& ds, std::span<double> out, MarginalWorkspace& ws) const {
    if (out.size() != preds_.size()) throw InputError("loglik: output length differs from support size");
    for (std::size_t k = 0; k < preds_.size(); ++k) out[k] = dataset_loglik(ds, preds_[k], sigma_[k], bundle_, ws);
}

bool dataset_information(const LikelihoodCache& cache, const SyntheticDataset& ds, MarginalWorkspace& ws,
                         std::vector<double>& scratch, double& kl, double& max_mass) {
    const std::size_t n = cache.size();
    scratch.resize(2 * n);
    std::span<double> ll(scratch.data(), n);
    std::span<double> a(scratch.data() + n, n);
    cache.loglik(ds, ll, ws);
    const auto lp = cache.log_prior();
    for (std::size_t k = 0; k < n; ++k) a[k] = lp[k] + ll[k];
    const double lse = log_sum_exp(a);
    if (!std::isfinite(lse)) return false;
    // KL(post || prior) = sum_k post_k log L_k - log sum_k prior_k L_k.
    double expected = 0.0, top = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double p = std::exp(a[k] - lse);
        if (p > 0.0) expected += p * ll[k];
        top = std::max(top, p);
    }
    kl = expected - lse;
    max_mass = top;
    return true;
}

namespace {

SensitivityRecord summarize(const Event& e, std::span<const double> kls, std::span<const std::uint8_t> ok,
                            std::span<const double> masses) {
    SensitivityRecord rec;
    rec.event = e;
    rec.n_realizations = kls.size();
    std::vector<double> used;
    for (std::size_t r = 0; r < kls.size(); ++r) {
        if (ok[r]) {
            used.push_back(kls[r]);
            rec.max_posterior_mass = std::max(rec.max_posterior_mass, masses[r]);
        } else {
            ++rec.skipped;
        }
    }
    const Moments m = mean_and_error(used);
    rec.eig = m.mean;
    rec.mc_std_error = m.std_error;
    return rec;
}

}  // namespace

SensitivityRecord eig_event(const Event& theta_prime, const WeightedEventSet& support, const SensorNetwork& net,
                            const ModelBundle& bundle, std::size_t n_realizations, std::uint64_t seed,
                            std::uint64_t event_index) {
    if (n_realizations == 0) throw InputError("eig_event: n_realizations must be >= 1");
    const LikelihoodCache cache(support, net, bundle, 1);
    const auto preds = predict_stations(theta_prime, net, bundle);
    const Eigen::MatrixXd sigma = bundle.use_arrivals ? full_covariance(preds, net, bundle) : Eigen::MatrixXd();
    MarginalWorkspace ws;
    std::vector<double> scratch, kls(n_realizations), masses(n_realizations);
    std::vector<std::uint8_t> ok(n_realizations);
    for (std::size_t r = 0; r < n_realizations; ++r) {
        Rng rng = make_stream(seed, {event_index, r});
        const SyntheticDataset ds = sample_dataset(preds, sigma, bundle.use_arrivals, rng);
        ok[r] = dataset_information(cache, ds, ws, scratch, kls[r], masses[r]) ? 1 : 0;
    }
    return summarize(theta_prime, kls, ok, masses);
}

EigReport eig_total(const WeightedEventSet& support, const SensorNetwork& net, const ModelBundle& bundle,
                    const EigSettings& settings) {
    if (settings.n_realizations == 0) throw InputError("eig_total: n_realizations must be >= 1");
    const LikelihoodCache cache(support, net, bundle, settings.workers);
    const std::size_t n = support.size();
    const std::size_t reps = settings.n_realizations;
    std::vector<double> kls(n * reps, 0.0), masses(n * reps, 0.0);
    std::vector<std::uint8_t> ok(n * reps, 0);

    parallel_for(
        n * reps,
        [&](std::size_t t) {
            thread_local MarginalWorkspace ws;
            thread_local std::vector<double> scratch;
            const std::size_t i = t / reps;
            const std::size_t r = t % reps;
            Rng rng = make_stream(settings.seed, {i, r});
            const SyntheticDataset ds =
                sample_dataset(cache.predictions(i), cache.covariance(i), bundle.use_arrivals, rng);
            ok[t] = dataset_information(cache, ds, ws, scratch, kls[t], masses[t]) ? 1 : 0;
        },
        settings.workers);

    EigReport report;
    report.settings = settings;
    report.n_stations = net.size();
    report.datasets = n * reps;
    report.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::span<const double> k(kls.data() + i * reps, reps);
        const std::span<const std::uint8_t> o(ok.data() + i * reps, reps);
        const std::span<const double> m(masses.data() + i * reps, reps);
        report.records.push_back(summarize(support.events[i], k, o, m));
        report.skipped += report.records.back().skipped;
        report.max_posterior_mass = std::max(report.max_posterior_mass, report.records.back().max_posterior_mass);
    }
    const auto lp = cache.log_prior();
    report.weights.resize(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = std::exp(lp[i]);
        report.weights[i] = w;
        report.total_eig += w * report.records[i].eig;
        var += w * w * report.records[i].mc_std_error * report.records[i].mc_std_error;
    }
    report.total_std_error = std::sqrt(var);
    return report;
}

std::vector<SensitivityRow> sensitivity_map(const EigReport& report) {
    std::vector<SensitivityRow> rows;
    rows.reserve(report.records.size());
    for (const auto& r : report.records) {
        rows.push_back({r.event.loc.lat, r.event.loc.lon, r.event.depth, r.event.mag, r.eig, r.mc_std_error});
    }
    return rows;
}

void write_sensitivity_csv(std::ostream& out, std::span<const SensitivityRow> rows,
                           std::span<const std::string> comments) {
    for (const auto& c : comments) out << "# " << c << '\n';
    out << "lat,lon,depth_km,mag,eig_nats,mc_se_nats\n";
    for (const auto& r : rows) {
        out << format_double(r.lat) << ',' << format_double(r.lon) << ',' << format_double(r.depth_km) << ','
            << format_double(r.mag) << ',' << format_double(r.eig_nats) << ',' << format_double(r.mc_se_nats) << '\n';
    }
}

std::vector<SensitivityRow> read_sensitivity_csv(std::istream& in, const std::string& name) {
    CsvReader reader(in, name);
    reader.expect_header({"lat", "lon", "depth_km", "mag", "eig_nats", "mc_se_nats"});
    std::vector<SensitivityRow> rows;
    std::vector<std::string> f;
    while (reader.next(f)) {
        rows.push_back({reader.to_double(f[0]), reader.to_double(f[1]), reader.to_double(f[2]),
                        reader.to_double(f[3]), reader.to_double(f[4]), reader.to_double(f[5])});
    }
    return rows;
}

nlohmann::json report_to_json(const EigReport& r) {
    return {{"total_eig_nats", r.total_eig},
            {"total_mc_se_nats", r.total_std_error},
            {"n_support", r.records.size()},
            {"n_stations", r.n_stations},
            {"n_realizations", r.settings.n_realizations},
            {"seed", r.settings.seed},
            {"datasets", r.datasets},
            {"skipped_datasets", r.skipped},
            {"max_posterior_mass", r.max_posterior_mass},
            {"coarse_grid_warning", r.coarse_grid_warning()}};
}

}  // namespace netoed
