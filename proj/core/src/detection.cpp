#include "netoed/detection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>

#include "netoed/csv.hpp"
#include "netoed/geo.hpp"
#include "netoed/rng.hpp"

namespace netoed {
namespace {

constexpr double kCoefficientClamp = 1e3;
constexpr int kMaxNewtonIterations = 200;

using Features = std::array<double, 5>;

Features features(const CatalogRow& r) {
    return {r.dist_deg, r.depth_km, r.mag.value_or(0.0), 1.0, r.mag_missing() ? 1.0 : 0.0};
}

double dot(const DetectionParams& p, const Features& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += p[i] * x[i];
    return s;
}

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

DetectionFit make_fit(const DetectionParams& p) {
    DetectionFit fit;
    fit.model = {p[0], p[1], p[2], p[3]};
    fit.mag_missing_coef = p[4];
    return fit;
}

}  // namespace

double log_sigmoid(double z) { return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

double detection_probability(const DetectionModel& m, const Event& e, const GeoPoint& station) {
    return sigmoid(m.logit(great_circle_distance(e.loc, station), e.depth, e.mag));
}

double detection_loglik(const DetectionModel& m, const DetectionVector& d, const Event& e,
                        const SensorNetwork& net) {
    if (d.size() != net.size()) throw InputError("detection_loglik: detection vector length differs from network size");
    double ll = 0.0;
    for (std::size_t i = 0; i < net.size(); ++i) {
        const double z = m.logit(great_circle_distance(e.loc, net.stations[i].loc), e.depth, e.mag);
        ll += d.flags[i] ? log_sigmoid(z) : log_sigmoid(-z);
    }
    return ll;
}

double weighted_bce(const DetectionParams& p, std::span<const CatalogRow> rows, double detection_weight) {
    double loss = 0.0;
    for (const auto& r : rows) {
        const double z = dot(p, features(r));
        loss -= r.detected ? detection_weight * log_sigmoid(z) : log_sigmoid(-z);
    }
    return loss / static_cast<double>(rows.size());
}

DetectionParams weighted_bce_gradient(const DetectionParams& p, std::span<const CatalogRow> rows,
                                      double detection_weight) {
    DetectionParams g{};
    for (const auto& r : rows) {
        const Features x = features(r);
        const double w = r.detected ? detection_weight : 1.0;
        const double resid = w * (sigmoid(dot(p, x)) - (r.detected ? 1.0 : 0.0));
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += resid * x[i];
    }
    for (double& v : g) v /= static_cast<double>(rows.size());
    return g;
}

DetectionFit fit_detection_model(std::span<const CatalogRow> rows, double detection_weight) {
    if (!(detection_weight > 0.0)) throw InputError("detection fit: weight must be positive");
    if (rows.empty()) throw InputError("detection fit: empty catalogue");
    const bool any_pos = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.detected; });
    const bool any_neg = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return !r.detected; });
    const bool any_missing = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.mag_missing(); });
    if (!any_pos || !any_neg) {
        DetectionParams p{};
        p[3] = any_pos ? kCoefficientClamp : -kCoefficientClamp;
        throw SeparableDataError("detection fit: only one class present; data are separable", make_fit(p));
    }

    // The indicator column is identically zero when no magnitude is missing;
    // that parameter is then held at zero.
    const int n_par = any_missing ? 5 : 4;
    DetectionParams p{};
    double loss = weighted_bce(p, rows, detection_weight);
    double gnorm = 0.0;
    int iter = 0;
    for (; iter < kMaxNewtonIterations; ++iter) {
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(n_par);
        Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(n_par, n_par);
        for (const auto& r : rows) {
            const Features x = features(r);
            const double w = r.detected ? detection_weight : 1.0;
            const double s = sigmoid(dot(p, x));
            const double resid = w * (s - (r.detected ? 1.0 : 0.0));
            const double curv = w * s * (1.0 - s);
            for (int i = 0; i < n_par; ++i) {
                grad(i) += resid * x[i];
                for (int j = 0; j <= i; ++j) hess(i, j) += curv * x[i] * x[j];
            }
        }
        const double n = static_cast<double>(rows.size());
        grad /= n;
        hess /= n;
        hess.triangularView<Eigen::StrictlyUpper>() = hess.transpose();
        gnorm = grad.norm();
        if (gnorm < 1e-8) break;

        const Eigen::VectorXd step = hess.ldlt().solve(-grad);
        if (!step.allFinite()) break;
        double t = 1.0;
        DetectionParams trial = p;
        double trial_loss = loss;
        for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
            for (int i = 0; i < n_par; ++i) trial[i] = p[i] + t * step(i);
            trial_loss = weighted_bce(trial, rows, detection_weight);
            if (trial_loss <= loss + 1e-4 * t * grad.dot(step)) break;
        }
        if (!(trial_loss <= loss)) break;
        p = trial;
        loss = trial_loss;
        const double max_coef = std::abs(*std::max_element(p.begin(), p.end(), [](double a, double b) {
            return std::abs(a) < std::abs(b);
        }));
        if (max_coef > kCoefficientClamp) break;
    }

    // A maximum-likelihood estimate exists only if no hyperplane separates the
    // classes; perfect sign agreement at the optimum means it does not.
    const bool separated = std::all_of(rows.begin(), rows.end(), [&](const CatalogRow& r) {
        const double z = dot(p, features(r));
        return r.detected ? z > 0.0 : z < 0.0;
    });

    DetectionFit fit = make_fit(p);
    fit.iterations = iter;
    fit.gradient_norm = gnorm;
    fit.loss = loss;
    if (separated) {
        for (double& v : p) v = std::clamp(v, -kCoefficientClamp, kCoefficientClamp);
        DetectionFit clamped = make_fit(p);
        clamped.iterations = iter;
        clamped.gradient_norm = gnorm;
        clamped.loss = loss;
        throw SeparableDataError("detection fit: classes are linearly separable; no finite maximizer", clamped);
    }
    if (gnorm >= 1e-8) {
        const double max_coef = std::abs(*std::max_element(p.begin(), p.end(), [](double a, double b) {
            return std::abs(a) < std::abs(b);
        }));
        if (max_coef > kCoefficientClamp || loss < 1e-10) {
            for (double& v : p) v = std::clamp(v, -kCoefficientClamp, kCoefficientClamp);
            DetectionFit clamped = make_fit(p);
            clamped.iterations = iter;
            clamped.gradient_norm = gnorm;
            clamped.loss = loss;
            throw SeparableDataError("detection fit: coefficients diverge; data are separable", clamped);
        }
        // Converged to round-off rather than the nominal tolerance; keep the estimate.
    }
    return fit;
}

std::vector<CatalogRow> synthesize_catalog(const DetectionModel& truth, std::size_t n, std::uint64_t seed,
                                           const CatalogSynthesis& params) {
    Rng rng = make_stream(seed, {0xca7a1u});
    std::exponential_distribution<double> expo(params.mag_rate);
    std::vector<CatalogRow> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        CatalogRow r;
        r.dist_deg = uniform01(rng) * params.dist_max_deg;
        r.depth_km = uniform01(rng) * params.depth_max_km;
        const double mag = params.mag_min + expo(rng);
        const bool missing = uniform01(rng) < params.mag_missing_fraction;
        double z = truth.logit(r.dist_deg, r.depth_km, mag);
        if (missing) {
            z += params.mag_missing_logit_shift - truth.gamma_m * mag;
        } else {
            r.mag = mag;
        }
        r.detected = uniform01(rng) < sigmoid(z);
        rows.push_back(r);
    }
    return rows;
}

std::vector<CatalogRow> read_catalog_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open catalogue file: " + path.string());
    CsvReader reader(in, path.string());
    reader.expect_header({"dist_deg", "depth_km", "mag", "mag_missing", "detected"});
    std::vector<CatalogRow> rows;
    std::vector<std::string> f;
    while (reader.next(f)) {
        CatalogRow r;
        r.dist_deg = reader.to_double(f[0]);
        r.depth_km = reader.to_double(f[1]);
        const bool missing = reader.to_int(f[3]) != 0;
        if (!missing) {
            if (f[2].empty()) throw InputError(reader.where() + ": mag is empty but mag_missing=0");
            r.mag = reader.to_double(f[2]);
        }
        r.detected = reader.to_int(f[4]) != 0;
        if (r.dist_deg < 0) throw InputError(reader.where() + ": negative distance");
        rows.push_back(r);
    }
    return rows;
}

void write_catalog_csv(const std::filesystem::path& path, std::span<const CatalogRow> rows) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write catalogue file: " + path.string());
    out << "dist_deg,depth_km,mag,mag_missing,detected\n";
    for (const auto& r : rows) {
        out << format_double(r.dist_deg) << ',' << format_double(r.depth_km) << ','
            << (r.mag ? format_double(*r.mag) : std::string()) << ',' << (r.mag_missing() ? 1 : 0) << ','
            << (r.detected ? 1 : 0) << '\n';
    }
}

ClassificationScores classification_scores(const DetectionFit& fit, std::span<const CatalogRow> rows) {
    const DetectionParams p{fit.model.alpha, fit.model.beta, fit.model.gamma_m, fit.model.delta0, fit.mag_missing_coef};
    double tp = 0, fp = 0, tn = 0, fn = 0;
    for (const auto& r : rows) {
        const bool predicted = dot(p, features(r)) > 0.0;
        if (predicted && r.detected) ++tp;
        else if (predicted) ++fp;
        else if (r.detected) ++fn;
        else ++tn;
    }
    ClassificationScores s;
    s.accuracy = (tp + tn) / static_cast<double>(rows.size());
    s.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    s.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    return s;
}

}  // namespace netoed
