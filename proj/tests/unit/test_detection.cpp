#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <netoed/detection.hpp>
#include <netoed/error.hpp>
#include <netoed/geo.hpp>

using namespace netoed;

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Station due north of the event at a given arc distance.
GeoPoint north_of(const Event& e, double deg) { return {e.loc.lat + deg, e.loc.lon}; }

}  // namespace

TEST_CASE("detection probability examples") {
    const DetectionModel m;
    const Event e{{41.0, -110.0}, 0.0, 2.0};
    CHECK(detection_probability(m, e, e.loc) == doctest::Approx(0.98566).epsilon(1e-5 / 0.98566));
    CHECK(detection_probability(m, e, north_of(e, 3.0)) == doctest::Approx(0.01434).epsilon(1e-3));
    const DetectionModel zero{0, 0, 0, 0};
    CHECK(detection_probability(zero, {{40.5, -111}, 33, 3.3}, {41, -109}) == 0.5);
}

TEST_CASE("log_sigmoid is stable") {
    CHECK(log_sigmoid(0.0) == doctest::Approx(std::log(0.5)));
    CHECK(log_sigmoid(-800.0) == doctest::Approx(-800.0));
    CHECK(log_sigmoid(800.0) == 0.0);
    CHECK(log_sigmoid(3.0) == doctest::Approx(std::log(logistic(3.0))).epsilon(1e-14));
}

TEST_CASE("detection probability is monotone in distance and magnitude") {
    const DetectionModel m;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 100; ++i) {
        const Event e{{40 + 2 * u(rng), -112 + 3.5 * u(rng)}, 40 * u(rng), 0.5 + 4 * u(rng)};
        const double d = 0.05 + 3 * u(rng);
        CHECK(detection_probability(m, e, north_of(e, d + 1e-3)) < detection_probability(m, e, north_of(e, d)));
        Event bigger = e;
        bigger.mag += 1e-3;
        CHECK(detection_probability(m, bigger, north_of(e, d)) > detection_probability(m, e, north_of(e, d)));
    }
}

TEST_CASE("detection log-likelihood") {
    const DetectionModel half{0, 0, 0, 0};
    SensorNetwork net;
    for (int i = 0; i < 4; ++i) net.stations.push_back({{40.0 + 0.3 * i, -110.0}, 0.0});
    const Event e{{41, -110.5}, 5, 1.0};
    CHECK(detection_loglik(half, DetectionVector{{1, 0, 1, 1}}, e, net) == doctest::Approx(4 * std::log(0.5)));

    const DetectionModel m;
    const Event at{{41, -110}, 0, 2};
    SensorNetwork one{{{at.loc, 0.0}}};
    CHECK(detection_loglik(m, DetectionVector{{1}}, at, one) == doctest::Approx(std::log(0.985657)).epsilon(1e-5));
    CHECK_THROWS_AS(detection_loglik(m, DetectionVector{{1, 0}}, at, one), InputError);
}

TEST_CASE("detection probabilities over all outcomes sum to one") {
    const DetectionModel m;
    SensorNetwork net;
    for (int i = 0; i < 10; ++i) net.stations.push_back({{40.1 + 0.2 * i, -111.5 + 0.3 * i}, 0.0});
    const Event e{{41, -110}, 12, 1.7};
    double total = 0.0;
    for (unsigned mask = 0; mask < (1u << 10); ++mask) {
        DetectionVector d;
        for (int i = 0; i < 10; ++i) d.flags.push_back((mask >> i) & 1u);
        total += std::exp(detection_loglik(m, d, e, net));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("detection log-likelihood is invariant to station order") {
    const DetectionModel m;
    SensorNetwork net;
    DetectionVector d;
    for (int i = 0; i < 6; ++i) {
        net.stations.push_back({{40.2 + 0.3 * i, -111 + 0.4 * i}, 0.0});
        d.flags.push_back(i % 2);
    }
    const Event e{{41, -110}, 10, 1.2};
    const double ll = detection_loglik(m, d, e, net);
    std::reverse(net.stations.begin(), net.stations.end());
    std::reverse(d.flags.begin(), d.flags.end());
    CHECK(detection_loglik(m, d, e, net) == doctest::Approx(ll).epsilon(1e-14));
}

TEST_CASE("weighted BCE gradient matches central differences") {
    CatalogSynthesis cs;
    cs.mag_missing_fraction = 0.2;
    cs.mag_missing_logit_shift = -0.5;
    const auto rows = synthesize_catalog(DetectionModel{}, 2000, 3, cs);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0, 1);
    for (int t = 0; t < 20; ++t) {
        DetectionParams p;
        for (auto& v : p) v = g(rng);
        const auto grad = weighted_bce_gradient(p, rows, 2.0);
        for (int i = 0; i < 5; ++i) {
            auto hi = p, lo = p;
            const double h = 1e-5;
            hi[i] += h;
            lo[i] -= h;
            const double fd = (weighted_bce(hi, rows, 2.0) - weighted_bce(lo, rows, 2.0)) / (2 * h);
            CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-6).scale(1e-3));
        }
    }
}

TEST_CASE("fit recovers known coefficients") {
    const DetectionModel truth;
    const auto rows = synthesize_catalog(truth, 50000, 11);
    const auto fit = fit_detection_model(rows, 1.0);
    CHECK(fit.model.alpha == doctest::Approx(truth.alpha).epsilon(0.1 / 2.82));
    CHECK(std::abs(fit.model.beta - truth.beta) < 0.1);
    CHECK(std::abs(fit.model.gamma_m - truth.gamma_m) < 0.1);
    CHECK(std::abs(fit.model.delta0 - truth.delta0) < 0.1);
    CHECK(fit.gradient_norm < 1e-8);
}

TEST_CASE("synthetic catalogue has roughly a quarter positives") {
    const auto rows = synthesize_catalog(DetectionModel{}, 50000, 12);
    const double pos = std::count_if(rows.begin(), rows.end(), [](const CatalogRow& r) { return r.detected; }) / 50000.0;
    CHECK(pos > 0.18);
    CHECK(pos < 0.28);
}

TEST_CASE("up-weighting detections raises held-out recall") {
    const auto train = synthesize_catalog(DetectionModel{}, 50000, 21);
    const auto test = synthesize_catalog(DetectionModel{}, 50000, 22);
    const auto w1 = classification_scores(fit_detection_model(train, 1.0), test);
    const auto w2 = classification_scores(fit_detection_model(train, 2.0), test);
    CHECK(w2.recall > w1.recall);
}

TEST_CASE("magnitude-missing indicator is fitted then dropped") {
    CatalogSynthesis cs;
    cs.mag_missing_fraction = 0.3;
    cs.mag_missing_logit_shift = 1.0;
    const auto rows = synthesize_catalog(DetectionModel{}, 40000, 5, cs);
    const auto fit = fit_detection_model(rows, 1.0);
    CHECK(fit.mag_missing_coef != 0.0);
    CHECK(std::abs(fit.model.alpha - DetectionModel{}.alpha) < 0.15);
}

TEST_CASE("separable data are reported") {
    std::vector<CatalogRow> same(50, CatalogRow{1.0, 10.0, 2.0, true});
    CHECK_THROWS_AS(fit_detection_model(same, 2.0), SeparableDataError);
    std::vector<CatalogRow> split;
    for (int i = 0; i < 50; ++i) split.push_back({0.1 * i, 10.0, 2.0, i < 25});
    try {
        fit_detection_model(split, 1.0);
        CHECK(false);
    } catch (const SeparableDataError& e) {
        for (double v : {e.clamped().model.alpha, e.clamped().model.delta0}) CHECK(std::abs(v) <= 1e3);
    }
}

TEST_CASE("catalogue CSV round trip") {
    CatalogSynthesis cs;
    cs.mag_missing_fraction = 0.25;
    const auto rows = synthesize_catalog(DetectionModel{}, 200, 9, cs);
    const auto path = std::filesystem::temp_directory_path() / "netoed_catalog_rt.csv";
    write_catalog_csv(path, rows);
    const auto back = read_catalog_csv(path);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].dist_deg == rows[i].dist_deg);
        CHECK(back[i].depth_km == rows[i].depth_km);
        CHECK(back[i].mag == rows[i].mag);
        CHECK(back[i].detected == rows[i].detected);
    }
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_catalog_csv("/nonexistent/catalog.csv"), InputError);
}
