#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include <netoed/arrivals.hpp>
#include <netoed/error.hpp>
#include <netoed/geo.hpp>

#include "test_support.hpp"

using namespace netoed;
using netoed::testing::simple_bundle;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Dense multivariate-normal log density with explicit inverse and determinant.
double mvn_oracle(const Eigen::VectorXd& r, const Eigen::MatrixXd& s) {
    const double n = static_cast<double>(r.size());
    return -0.5 * n * std::log(2 * kPi) - 0.5 * std::log(s.determinant()) - 0.5 * r.dot(s.inverse() * r);
}

Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0, 1);
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = g(rng);
    return a * a.transpose() / n + 0.3 * Eigen::MatrixXd::Identity(n, n);
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

SensorNetwork ring_network(int n, double radius = 0.8) {
    SensorNetwork net;
    for (int i = 0; i < n; ++i) {
        const double a = 2 * kPi * i / n;
        net.stations.push_back({{41.0 + radius * std::sin(a), -110.0 + radius * 1.3 * std::cos(a)}, 0.0});
    }
    return net;
}

}  // namespace

TEST_CASE("SNR mean") {
    CHECK(snr_mean({1, 0, 0}, 50.0, 2.0) == 2.0);
    CHECK(snr_mean({1, 1, 0}, std::exp(2.0), 3.0) == doctest::Approx(1.0).epsilon(1e-14));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.5, 500);
    const SnrModel m;
    for (int i = 0; i < 50; ++i) {
        const double d = u(rng), mag = u(rng) / 100;
        CHECK(snr_mean(m, d, mag, 1.0) == doctest::Approx(snr_mean(m, d, mag) + 1.0).epsilon(1e-14));
    }
    CHECK(snr_mean(m, 0.0, 1.0) == snr_mean(m, 1.0, 1.0));
}

TEST_CASE("pick uncertainty") {
    const PickNoiseModel p;
    CHECK(sigma_meas(p, 0.5) == p.sigma0);
    CHECK(sigma_meas(p, 20.0) == doctest::Approx(p.shrink * p.sigma0));
    CHECK(sigma_meas(p, std::sqrt(p.t_low * p.t_high)) == doctest::Approx(0.5 * (p.sigma0 + p.shrink * p.sigma0)));
    double prev = sigma_meas(p, -50.0);
    for (double s = -50.0; s < 50.0; s += 0.001) {
        const double v = sigma_meas(p, s);
        CHECK(v <= prev + 1e-15);
        CHECK(std::abs(v - prev) < 1e-3);
        prev = v;
    }
}

TEST_CASE("total sigma") {
    CHECK(total_sigma(0, 2.5) == 2.5);
    CHECK(total_sigma(3, 4) == doctest::Approx(5.0).epsilon(1e-15));
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 10);
    for (int i = 0; i < 100; ++i) {
        const double a = u(rng), b = u(rng);
        CHECK(total_sigma(a, b) * total_sigma(a, b) == doctest::Approx(a * a + b * b).epsilon(1e-12));
    }
}

TEST_CASE("identity correlation gives a diagonal covariance") {
    auto b = simple_bundle(0.7, CorrelationMode::Independent);
    const auto net = ring_network(4);
    const Event e{{41.1, -110.2}, 10, 1.5};
    const auto s = assemble_covariance(e, net, DetectionVector{{1, 1, 1, 1}}, b);
    const auto preds = predict_stations(e, net, b);
    for (int j = 0; j < 4; ++j) {
        for (int k = 0; k < 4; ++k) {
            if (j != k) CHECK(s(j, k) == 0.0);
        }
        CHECK(s(j, j) == doctest::Approx(0.49 + preds[j].sigma_meas * preds[j].sigma_meas + 1e-6).epsilon(1e-14));
    }
}

TEST_CASE("coincident stations: model term is singular, nugget restores definiteness") {
    auto b = simple_bundle(0.7);
    b.pick = {1e-4, 0.5, 1, 10};  // negligible pick noise
    SensorNetwork net{{{{41, -110}, 0}, {{41, -110}, 0}}};
    const Event e{{40.5, -111}, 10, 1.0};
    const auto preds = predict_stations(e, net, b);
    Eigen::MatrixXd model(2, 2);
    for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
            model(j, k) = preds[j].sigma_model * kernel_correlation(b.correlation, preds[j].dist_km, preds[k].dist_km) *
                          preds[k].sigma_model;
    CHECK(std::abs(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(model).eigenvalues().minCoeff()) < 1e-12);
    const auto s = assemble_covariance(e, net, DetectionVector{{1, 1}}, b);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s).eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("covariance matches elementwise hand assembly") {
    const auto b = simple_bundle(0.6);
    SensorNetwork net{{{{40.3, -111.2}, 0.5}, {{41.7, -110.4}, -1.0}, {{40.9, -108.9}, 0.0}}};
    const Event e{{41.0, -110.0}, 12, 1.3};
    const auto s = assemble_covariance(e, net, DetectionVector{{1, 1, 1}}, b);
    for (int j = 0; j < 3; ++j) {
        for (int k = 0; k < 3; ++k) {
            const double dj = degrees_to_km(great_circle_distance(e.loc, net.stations[j].loc));
            const double dk = degrees_to_km(great_circle_distance(e.loc, net.stations[k].loc));
            double v = b.sigma_tt(dj, e.depth) * kernel_correlation(b.correlation, dj, dk) * b.sigma_tt(dk, e.depth);
            if (j == k) {
                const double m = sigma_meas(b.pick, snr_mean(b.snr, dj, e.mag, net.stations[j].snr_offset));
                v += m * m + b.nugget;
            }
            CHECK(s(j, k) == doctest::Approx(v).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(assemble_covariance(e, net, DetectionVector{{0, 0, 0}}, b), InputError);
}

TEST_CASE("station-separation mode uses inter-station distance") {
    const auto b = simple_bundle(0.6, CorrelationMode::StationSeparation);
    SensorNetwork net{{{{40.5, -110}, 0}, {{41.5, -110}, 0}}};
    const Event e{{41.0, -110.0}, 10, 1.0};  // equidistant: epicentral mode would give rho = 1
    const auto s = assemble_covariance(e, net, DetectionVector{{1, 1}}, b);
    const double sep = degrees_to_km(great_circle_distance(net.stations[0].loc, net.stations[1].loc));
    CHECK(s(0, 1) == doctest::Approx(0.36 * std::exp(-sep * sep / (2 * 147.5 * 147.5))).epsilon(1e-12));
}

TEST_CASE("conditional log-density spot values") {
    CHECK(mvn_loglik(std::vector<double>{0.0}, Eigen::MatrixXd::Identity(1, 1)) ==
          doctest::Approx(-0.91893853320467).epsilon(1e-13));
    const std::vector<double> r{0.3, -1.1};
    CHECK(mvn_loglik(r, Eigen::MatrixXd::Identity(2, 2)) ==
          doctest::Approx(-std::log(2 * kPi) - 0.5 * (0.09 + 1.21)).epsilon(1e-14));
}

TEST_CASE("conditional log-density matches a dense oracle") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0, 2);
    for (int t = 0; t < 50; ++t) {
        const auto s = random_spd(5, rng);
        Eigen::VectorXd r(5);
        for (auto& x : r) x = g(rng);
        CHECK(mvn_loglik(to_vec(r), s) == doctest::Approx(mvn_oracle(r, s)).epsilon(1e-10));
    }
}

TEST_CASE("marginal density for two unit-variance arrivals with equal residuals") {
    for (double r : {-30.0, 0.0, 0.7, 1e4}) {
        const std::vector<double> res{r, r};
        CHECK(std::exp(mvn_marginal_loglik(res, Eigen::MatrixXd::Identity(2, 2))) ==
              doctest::Approx(1.0 / (2.0 * std::sqrt(kPi))).epsilon(1e-12));
    }
}

TEST_CASE("marginal is zero with fewer than two arrivals") {
    CHECK(mvn_marginal_loglik(std::vector<double>{}, Eigen::MatrixXd(0, 0)) == 0.0);
    CHECK(mvn_marginal_loglik(std::vector<double>{5.0}, Eigen::MatrixXd::Constant(1, 1, 3.0)) == 0.0);
}

TEST_CASE("marginal matches the closed form with explicit alpha and beta") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0, 1);
    for (int t = 0; t < 50; ++t) {
        const int n = 2 + t % 6;
        const auto s = random_spd(n, rng);
        Eigen::VectorXd r(n);
        for (auto& x : r) x = g(rng);
        const Eigen::MatrixXd si = s.inverse();
        const Eigen::VectorXd one = Eigen::VectorXd::Ones(n);
        const double alpha = one.dot(si * r), beta = one.dot(si * one);
        const double closed = -0.5 * (n - 1) * std::log(2 * kPi) - 0.5 * std::log(s.determinant()) -
                              0.5 * std::log(beta) - 0.5 * r.dot(si * r) + alpha * alpha / (2 * beta);
        CHECK(mvn_marginal_loglik(to_vec(r), s) == doctest::Approx(closed).epsilon(1e-10));
    }
}

TEST_CASE("marginal equals the integral of the conditional over origin time") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0, 1);
    for (int t = 0; t < 20; ++t) {
        const auto s = random_spd(4, rng);
        Eigen::VectorXd r(4);
        for (auto& x : r) x = 3 * g(rng);
        const Eigen::MatrixXd si = s.inverse();
        const Eigen::VectorXd one = Eigen::VectorXd::Ones(4);
        const double beta = one.dot(si * one), centre = one.dot(si * r) / beta;
        const double half = 60.0 / std::sqrt(beta);
        const int m = 20000;
        double sum = 0;
        for (int i = 0; i <= m; ++i) {
            const double to = centre - half + 2 * half * i / m;
            const double w = (i == 0 || i == m) ? 1 : (i % 2 ? 4 : 2);
            sum += w * std::exp(mvn_oracle(r - to * one, s));
        }
        const double integral = sum * (2 * half / m) / 3;
        CHECK(std::exp(mvn_marginal_loglik(to_vec(r), s)) == doctest::Approx(integral).epsilon(1e-6));
    }
}

TEST_CASE("marginal is shift invariant") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g(0, 1);
    std::uniform_real_distribution<double> c(-1e4, 1e4);
    for (int t = 0; t < 100; ++t) {
        const int n = 2 + t % 7;
        const auto s = random_spd(n, rng);
        std::vector<double> r(n);
        for (auto& x : r) x = 5 * g(rng) + 300;
        const double base = mvn_marginal_loglik(r, s);
        const double shift = c(rng);
        for (auto& x : r) x += shift;
        CHECK(std::abs(mvn_marginal_loglik(r, s) - base) < 1e-9);
    }
}

TEST_CASE("marginal is invariant to station permutation") {
    const auto b = simple_bundle(0.5);
    auto net = ring_network(5);
    const Event e{{41.0, -110.3}, 8, 1.8};
    DetectionVector d{{1, 0, 1, 1, 1}};
    ArrivalVector a{{40.0, 31.5, 29.0, 35.2}};
    const double base = arrival_loglik_marginal(a, e, d, net, b);
    std::reverse(net.stations.begin(), net.stations.end());
    std::reverse(d.flags.begin(), d.flags.end());
    std::reverse(a.times.begin(), a.times.end());
    CHECK(arrival_loglik_marginal(a, e, d, net, b) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("larger pick noise lowers the marginal density at zero residual") {
    const auto net = ring_network(4);
    const Event e{{41.0, -110.3}, 8, 1.8};
    const DetectionVector d{{1, 1, 1, 1}};
    auto b = simple_bundle(0.5);
    const auto preds = predict_stations(e, net, b);
    ArrivalVector a;
    for (const auto& p : preds) a.times.push_back(p.mean_tt);
    double prev = arrival_loglik_marginal(a, e, d, net, b);
    for (double s0 : {1.5, 2.0, 3.0}) {
        b.pick.sigma0 = s0;
        const double v = arrival_loglik_marginal(a, e, d, net, b);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("network wrappers agree with the matrix functions") {
    const auto b = simple_bundle(0.5);
    const auto net = ring_network(5);
    const Event e{{41.2, -110.1}, 14, 2.2};
    const DetectionVector d{{1, 1, 0, 1, 0}};
    const ArrivalVector a{{20.0, 25.0, 18.0}};
    const auto s = assemble_covariance(e, net, d, b);
    const auto preds = predict_stations(e, net, b);
    std::vector<double> r{a.times[0] - preds[0].mean_tt, a.times[1] - preds[1].mean_tt, a.times[2] - preds[3].mean_tt};
    CHECK(arrival_loglik_marginal(a, e, d, net, b) == doctest::Approx(mvn_marginal_loglik(r, s)).epsilon(1e-13));
    const double to = 4.0;
    std::vector<double> rc = r;
    for (auto& x : rc) x -= to;
    CHECK(arrival_loglik_conditional(a, to, e, d, net, b) == doctest::Approx(mvn_loglik(rc, s)).epsilon(1e-13));
    CHECK_THROWS_AS(arrival_loglik_marginal(ArrivalVector{{1.0}}, e, d, net, b), InputError);
    CHECK(arrival_loglik_marginal(ArrivalVector{{1.0}}, e, DetectionVector{{0, 0, 1, 0, 0}}, net, b) == 0.0);
    CHECK(arrival_loglik_marginal(ArrivalVector{}, e, DetectionVector{{0, 0, 0, 0, 0}}, net, b) == 0.0);
}

TEST_CASE("singular covariance is reported") {
    Eigen::MatrixXd s = Eigen::MatrixXd::Ones(2, 2);
    CHECK_THROWS_AS(mvn_marginal_loglik(std::vector<double>{1.0, 2.0}, s), NumericalError);
    CHECK_THROWS_AS(mvn_loglik(std::vector<double>{1.0, 2.0}, s), NumericalError);
}
