#include <doctest.h>

#include <cmath>

#include <netoed/arrivals.hpp>
#include <netoed/detection.hpp>
#include <netoed/synth.hpp>

#include "test_support.hpp"

using namespace netoed;
using netoed::testing::simple_bundle;

namespace {

SensorNetwork grid_network() {
    SensorNetwork net;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) net.stations.push_back({{40.4 + 0.6 * i, -110.8 + 1.0 * j}, 0.0});
    return net;
}

const Event kEvent{{41.0, -110.2}, 10, 2.0};

}  // namespace

TEST_CASE("forced detection models") {
    const auto net = grid_network();
    DetectionModel all{0, 0, 0, 60};
    DetectionModel none{0, 0, 0, -60};
    Rng rng = make_stream(1, {});
    for (int i = 0; i < 200; ++i) {
        CHECK(sample_detections(kEvent, net, all, rng).count() == net.size());
        CHECK(sample_detections(kEvent, net, none, rng).count() == 0);
    }
}

TEST_CASE("detection rates match the logistic model") {
    const auto net = grid_network();
    const DetectionModel dm;
    Rng rng = make_stream(2, {});
    const int n = 10000;
    std::vector<int> hits(net.size(), 0);
    for (int i = 0; i < n; ++i) {
        const auto d = sample_detections(kEvent, net, dm, rng);
        for (std::size_t s = 0; s < net.size(); ++s) hits[s] += d.flags[s];
    }
    for (std::size_t s = 0; s < net.size(); ++s) {
        const double p = detection_probability(dm, kEvent, net.stations[s].loc);
        CHECK(std::abs(hits[s] / double(n) - p) <= 3 * std::sqrt(p * (1 - p) / n) + 1e-12);
    }
}

TEST_CASE("zero model variance leaves white pick noise plus nugget") {
    auto b = simple_bundle(0.0);
    b.sigma_tt = SigmaSurrogate(std::vector<double>(SigmaSurrogate::kTerms, 0.0), b.sigma_tt.domain(), 1e-12);
    const auto net = grid_network();
    const auto preds = predict_stations(kEvent, net, b);
    const auto sigma = full_covariance(preds, net, b);
    for (int j = 0; j < sigma.rows(); ++j)
        for (int k = 0; k < sigma.cols(); ++k)
            if (j != k) CHECK(std::abs(sigma(j, k)) < 1e-20);

    Rng rng = make_stream(3, {});
    const int n = 20000;
    std::vector<double> sum(net.size(), 0), sq(net.size(), 0);
    const DetectionVector all{std::vector<std::uint8_t>(net.size(), 1)};
    for (int i = 0; i < n; ++i) {
        const auto a = sample_arrivals(kEvent, all, net, b, rng);
        for (std::size_t s = 0; s < net.size(); ++s) {
            const double r = a.times[s] - preds[s].mean_tt;
            sum[s] += r;
            sq[s] += r * r;
        }
    }
    for (std::size_t s = 0; s < net.size(); ++s) {
        const double var = preds[s].sigma_meas * preds[s].sigma_meas + b.nugget;
        CHECK(std::abs(sum[s] / n) < 4 * std::sqrt(var / n));
        CHECK(sq[s] / n == doctest::Approx(var).epsilon(0.05));
    }
}

TEST_CASE("near-deterministic limit reproduces the mean travel times") {
    auto b = simple_bundle(0.0);
    b.sigma_tt = SigmaSurrogate(std::vector<double>(SigmaSurrogate::kTerms, 0.0), b.sigma_tt.domain(), 1e-12);
    b.pick = {1e-9, 0.5, 1, 10};
    const auto net = grid_network();
    const auto preds = predict_stations(kEvent, net, b);
    const DetectionVector all{std::vector<std::uint8_t>(net.size(), 1)};
    Rng rng = make_stream(13, {});
    for (int i = 0; i < 200; ++i) {
        const auto a = sample_arrivals(kEvent, all, net, b, rng);
        for (std::size_t s = 0; s < net.size(); ++s) CHECK(std::abs(a.times[s] - preds[s].mean_tt) < 9e-3);
    }
}

TEST_CASE("empirical covariance of arrivals matches the assembled covariance") {
    const auto b = simple_bundle(0.8);
    const auto net = grid_network();
    const DetectionVector all{std::vector<std::uint8_t>(net.size(), 1)};
    const auto sigma = assemble_covariance(kEvent, net, all, b);
    const auto preds = predict_stations(kEvent, net, b);
    const int n = 40000;
    const auto m = static_cast<Eigen::Index>(net.size());
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(m, m);
    Rng rng = make_stream(4, {});
    for (int i = 0; i < n; ++i) {
        const auto a = sample_arrivals(kEvent, all, net, b, rng);
        Eigen::VectorXd r(m);
        for (Eigen::Index s = 0; s < m; ++s) r(s) = a.times[s] - preds[s].mean_tt;
        acc += r * r.transpose();
    }
    acc /= n;
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index k = 0; k < m; ++k)
            CHECK(std::abs(acc(j, k) - sigma(j, k)) <= 0.05 * std::sqrt(sigma(j, j) * sigma(k, k)));
}

TEST_CASE("perfectly correlated Gaussian components are identical") {
    Eigen::MatrixXd s = Eigen::MatrixXd::Constant(3, 3, 2.25);
    const std::vector<double> mean{1.0, 1.0, 1.0};
    Rng rng = make_stream(5, {});
    for (int i = 0; i < 100; ++i) {
        const auto x = sample_gaussian(mean, s, rng);
        CHECK(x[0] == doctest::Approx(x[1]).epsilon(1e-12));
        CHECK(x[1] == doctest::Approx(x[2]).epsilon(1e-12));
    }
}

TEST_CASE("replicates are deterministic in seed and index") {
    const auto b = simple_bundle(0.5);
    const auto net = grid_network();
    const auto a = synth_dataset(kEvent, net, b, 20, 77, 3);
    const auto c = synth_dataset(kEvent, net, b, 20, 77, 3);
    REQUIRE(a.size() == 20);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].detections == c[i].detections);
        CHECK(a[i].arrivals == c[i].arrivals);
        CHECK(a[i].arrivals.size() == a[i].detections.count());
        CHECK(a[i].origin_time_used == 0.0);
    }
    const auto other_event = synth_dataset(kEvent, net, b, 20, 77, 4);
    const auto other_seed = synth_dataset(kEvent, net, b, 20, 78, 3);
    int diff_event = 0, diff_seed = 0, diff_rep = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff_event += !(a[i].arrivals == other_event[i].arrivals);
        diff_seed += !(a[i].arrivals == other_seed[i].arrivals);
        if (i > 0) diff_rep += !(a[i].arrivals == a[i - 1].arrivals);
    }
    CHECK(diff_event > 15);
    CHECK(diff_seed > 15);
    CHECK(diff_rep > 15);
}

TEST_CASE("arrivals are omitted when the arrival term is disabled") {
    auto b = simple_bundle(0.5);
    b.use_arrivals = false;
    for (const auto& ds : synth_dataset(kEvent, grid_network(), b, 10, 1)) CHECK(ds.arrivals.size() == 0);
}

TEST_CASE("the generating event out-scores a displaced event") {
    const auto b = simple_bundle(0.5);
    const auto net = grid_network();
    const Event displaced{{kEvent.loc.lat + 1.0, kEvent.loc.lon}, kEvent.depth, kEvent.mag};
    const auto data = synth_dataset(kEvent, net, b, 500, 11);
    auto score = [&](const Event& e, const SyntheticDataset& ds) {
        return detection_loglik(b.detection, ds.detections, e, net) +
               arrival_loglik_marginal(ds.arrivals, e, ds.detections, net, b);
    };
    double mean_gap = 0.0;
    int wins = 0;
    for (const auto& ds : data) {
        const double gap = score(kEvent, ds) - score(displaced, ds);
        mean_gap += gap / data.size();
        wins += gap > 0;
    }
    CHECK(mean_gap > 0.0);
    CHECK(wins > 450);
}
