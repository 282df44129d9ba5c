#include "netoed/optimize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>

#include "netoed/csv.hpp"
#include "netoed/error.hpp"
#include "netoed/sobol.hpp"

namespace netoed {

PlacementRegion::PlacementRegion(const Domain& box)
    : lat_min_(box.lat_min), lat_max_(box.lat_max), lon_min_(box.lon_min), lon_max_(box.lon_max) {
    if (!(lat_min_ < lat_max_ && lon_min_ < lon_max_)) throw InputError("placement region: empty box");
}

PlacementRegion::PlacementRegion(const Domain& box, PolygonRegion polygon) : PlacementRegion(box) {
    if (polygon.empty()) return;
    lat_min_ = std::max(lat_min_, polygon.lat_min());
    lat_max_ = std::min(lat_max_, polygon.lat_max());
    lon_min_ = std::max(lon_min_, polygon.lon_min());
    lon_max_ = std::min(lon_max_, polygon.lon_max());
    if (!(lat_min_ < lat_max_ && lon_min_ < lon_max_)) {
        throw InfeasibleRegionError("placement polygon does not overlap the sensor domain");
    }
    polygon_ = std::move(polygon);
}

bool PlacementRegion::contains(const GeoPoint& p) const {
    if (p.lat < lat_min_ || p.lat > lat_max_ || p.lon < lon_min_ || p.lon > lon_max_) return false;
    return !polygon_ || point_in_polygon(p, *polygon_);
}

// ---------------------------------------------------------------------------
// Gaussian-process surrogate

namespace {

constexpr std::array<double, 4> kLogLo = {-4.605170185988091, -4.605170185988091, -6.907755278982137,
                                          -18.420680743952367};  // 1e-2, 1e-2, 1e-3, 1e-8
constexpr std::array<double, 4> kLogHi = {2.302585092994046, 2.302585092994046, 4.605170185988092,
                                          0.0};  // 10, 10, 100, 1

Eigen::Vector2d to_unit(const GpInputBox& b, const GeoPoint& p) {
    return {(p.lat - b.lat_min) / (b.lat_max - b.lat_min), (p.lon - b.lon_min) / (b.lon_max - b.lon_min)};
}

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

Eigen::Vector4d from_unconstrained(const Eigen::Vector4d& u) {
    Eigen::Vector4d t;
    for (int i = 0; i < 4; ++i) t[i] = kLogLo[i] + (kLogHi[i] - kLogLo[i]) * sigmoid(u[i]);
    return t;
}

Eigen::Vector4d to_unconstrained(const Eigen::Vector4d& t) {
    Eigen::Vector4d u;
    for (int i = 0; i < 4; ++i) {
        const double s = std::clamp((t[i] - kLogLo[i]) / (kLogHi[i] - kLogLo[i]), 1e-9, 1.0 - 1e-9);
        u[i] = std::log(s / (1.0 - s));
    }
    return u;
}

GpHyperparameters hyper_from_log(const Eigen::Vector4d& t) {
    return {std::exp(t[0]), std::exp(t[1]), std::exp(t[2]), std::max(std::exp(t[3]), GpSurrogate::kNoiseFloor)};
}

}  // namespace

double GpSurrogate::length_scale_deg(int axis) const {
    return axis == 0 ? hyper_.length_lat * (box_.lat_max - box_.lat_min)
                     : hyper_.length_lon * (box_.lon_max - box_.lon_min);
}

double GpSurrogate::noise_sd() const { return y_scale_ * std::sqrt(hyper_.noise_var); }
double GpSurrogate::signal_sd() const { return y_scale_ * std::sqrt(hyper_.signal_var); }

double GpSurrogate::neg_log_marginal(const Eigen::Vector4d& t, Eigen::Vector4d* grad) const {
    const Eigen::Index n = x_.rows();
    const double l0 = std::exp(t[0]), l1 = std::exp(t[1]), sf2 = std::exp(t[2]);
    const double sn2 = std::max(std::exp(t[3]), kNoiseFloor);
    Eigen::MatrixXd kf(n, n), d0(n, n), d1(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double a = (x_(i, 0) - x_(j, 0)) / l0;
            const double b = (x_(i, 1) - x_(j, 1)) / l1;
            d0(i, j) = d0(j, i) = a * a;
            d1(i, j) = d1(j, i) = b * b;
            kf(i, j) = kf(j, i) = sf2 * std::exp(-0.5 * (a * a + b * b));
        }
    }
    Eigen::MatrixXd k = kf;
    k.diagonal().array() += sn2;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const Eigen::VectorXd alpha = llt.solve(y_);
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    const double nll = 0.5 * y_.dot(alpha) + 0.5 * logdet + 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    if (grad) {
        // d nll / d theta = -1/2 tr((alpha alpha^T - K^-1) dK/dtheta)
        const Eigen::MatrixXd w = alpha * alpha.transpose() - llt.solve(Eigen::MatrixXd::Identity(n, n));
        (*grad)[0] = -0.5 * (w.array() * kf.array() * d0.array()).sum();
        (*grad)[1] = -0.5 * (w.array() * kf.array() * d1.array()).sum();
        (*grad)[2] = -0.5 * (w.array() * kf.array()).sum();
        (*grad)[3] = std::exp(t[3]) < kNoiseFloor ? 0.0 : -0.5 * sn2 * w.trace();
    }
    return nll;
}

void GpSurrogate::set_hyper(const GpHyperparameters& h) {
    hyper_ = h;
    const Eigen::Index n = x_.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double a = (x_(i, 0) - x_(j, 0)) / h.length_lat;
            const double b = (x_(i, 1) - x_(j, 1)) / h.length_lon;
            k(i, j) = k(j, i) = h.signal_var * std::exp(-0.5 * (a * a + b * b));
        }
    }
    k.diagonal().array() += h.noise_var;
    llt_.compute(k);
    if (llt_.info() != Eigen::Success) throw NumericalError("gp_fit: training covariance is not positive definite");
    alpha_ = llt_.solve(y_);
}

namespace {

// BFGS on the unconstrained parametrization with Armijo backtracking.
Eigen::Vector4d minimize_nll(const GpSurrogate& s, Eigen::Vector4d u, double& best) {
    auto eval = [&](const Eigen::Vector4d& uu, Eigen::Vector4d& g) {
        const Eigen::Vector4d t = from_unconstrained(uu);
        Eigen::Vector4d gt;
        const double f = s.neg_log_marginal(t, &gt);
        for (int i = 0; i < 4; ++i) {
            const double sg = sigmoid(uu[i]);
            g[i] = gt[i] * (kLogHi[i] - kLogLo[i]) * sg * (1.0 - sg);
        }
        return f;
    };
    Eigen::Vector4d g;
    double f = eval(u, g);
    if (!std::isfinite(f)) {
        best = f;
        return u;
    }
    Eigen::Matrix4d h = Eigen::Matrix4d::Identity();
    for (int it = 0; it < 200 && g.norm() > 1e-7; ++it) {
        Eigen::Vector4d p = -h * g;
        if (p.dot(g) >= 0.0) {
            h.setIdentity();
            p = -g;
        }
        double step = 1.0;
        Eigen::Vector4d un, gn;
        double fn = 0.0;
        bool moved = false;
        for (int ls = 0; ls < 40; ++ls) {
            un = u + step * p;
            fn = eval(un, gn);
            if (std::isfinite(fn) && fn <= f + 1e-4 * step * g.dot(p)) {
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
        const Eigen::Vector4d sv = un - u, yv = gn - g;
        const double sy = sv.dot(yv);
        if (sy > 1e-12) {
            const double rho = 1.0 / sy;
            const Eigen::Matrix4d i4 = Eigen::Matrix4d::Identity();
            h = (i4 - rho * sv * yv.transpose()) * h * (i4 - rho * yv * sv.transpose()) + rho * sv * sv.transpose();
        }
        const double change = f - fn;
        u = un;
        g = gn;
        f = fn;
        if (change < 1e-12 * (1.0 + std::abs(f))) break;
    }
    best = f;
    return u;
}

}  // namespace

GpSurrogate gp_fit(std::span<const GeoPoint> points, std::span<const double> values, const GpInputBox& box) {
    if (points.size() != values.size()) throw InputError("gp_fit: points and values differ in length");
    if (points.size() < 2) throw InputError("gp_fit: at least two points required");
    if (!(box.lat_max > box.lat_min && box.lon_max > box.lon_min)) throw InputError("gp_fit: empty input box");
    GpSurrogate s;
    s.box_ = box;
    const auto n = static_cast<Eigen::Index>(points.size());
    s.x_.resize(n, 2);
    s.y_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        s.x_.row(i) = to_unit(box, points[i]).transpose();
        if (!std::isfinite(values[i])) throw InputError("gp_fit: non-finite training value");
    }
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    s.y_mean_ = mean;
    s.y_scale_ = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0;
    for (Eigen::Index i = 0; i < n; ++i) s.y_[i] = (values[i] - mean) / s.y_scale_;

    // Restarts: a central default, then a fixed Sobol design over the box.
    std::vector<Eigen::Vector4d> starts;
    starts.push_back({std::log(0.3), std::log(0.3), 0.0, std::log(1e-2)});
    const SobolSequence sobol(4, 0x9b5u, true);
    for (const auto& q : sobol.first(7)) {
        Eigen::Vector4d t;
        for (int i = 0; i < 4; ++i) t[i] = kLogLo[i] + (kLogHi[i] - kLogLo[i]) * (0.05 + 0.9 * q[i]);
        starts.push_back(t);
    }
    double best_f = std::numeric_limits<double>::infinity();
    Eigen::Vector4d best_t = starts.front();
    for (const auto& t0 : starts) {
        double f = 0.0;
        const Eigen::Vector4d u = minimize_nll(s, to_unconstrained(t0), f);
        if (f < best_f) {
            best_f = f;
            best_t = from_unconstrained(u);
        }
    }
    if (!std::isfinite(best_f)) {
        // Every start was singular: fall back to the largest admissible noise.
        best_t = starts.front();
        best_t[3] = kLogHi[3];
    }
    s.set_hyper(hyper_from_log(best_t));
    return s;
}

GpPrediction gp_predict(const GpSurrogate& s, const GeoPoint& p) {
    const Eigen::Vector2d x = to_unit(s.box_, p);
    const auto& h = s.hyper_;
    const Eigen::Index n = s.x_.rows();
    Eigen::VectorXd k(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double a = (x[0] - s.x_(i, 0)) / h.length_lat;
        const double b = (x[1] - s.x_(i, 1)) / h.length_lon;
        k[i] = h.signal_var * std::exp(-0.5 * (a * a + b * b));
    }
    const double mean = k.dot(s.alpha_);
    const Eigen::VectorXd v = s.llt_.matrixL().solve(k);
    const double var = std::max(h.signal_var - v.squaredNorm(), 0.0);
    return {s.y_mean_ + s.y_scale_ * mean, s.y_scale_ * std::sqrt(var)};
}

double expected_improvement(double mean, double std, double best) {
    const double gain = mean - best;
    if (!(std > 0.0)) return std::max(gain, 0.0);
    const double z = gain / std;
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    if (z > 0.0) {
        // gain + std * (phi(z) - z Q(z)); the bracket is non-negative.
        const double upper_tail = 0.5 * std::erfc(z / std::numbers::sqrt2);
        return gain + std * std::max(pdf - z * upper_tail, 0.0);
    }
    const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    return std::max(std * (pdf + z * cdf), 0.0);
}

double probability_of_improvement(double mean, double std, double best) {
    if (!(std > 0.0)) return mean > best ? 1.0 : 0.0;
    return 0.5 * std::erfc(-(mean - best) / (std * std::numbers::sqrt2));
}

std::string to_string(Acquisition a) {
    switch (a) {
        case Acquisition::ExpectedImprovement: return "ei";
        case Acquisition::ConfidenceBound: return "lcb";
        case Acquisition::ProbabilityOfImprovement: return "pi";
    }
    return "unknown";
}

Acquisition acquisition_from_string(const std::string& s) {
    if (s == "ei") return Acquisition::ExpectedImprovement;
    if (s == "lcb") return Acquisition::ConfidenceBound;
    if (s == "pi") return Acquisition::ProbabilityOfImprovement;
    throw InputError("unknown acquisition function: " + s + " (expected ei, lcb or pi)");
}

// ---------------------------------------------------------------------------
// Acquisition and Bayesian optimization

std::vector<GeoPoint> feasible_design(const PlacementRegion& region, std::size_t n, std::uint64_t seed) {
    const SobolSequence sobol(2, seed, true);
    std::vector<GeoPoint> out;
    const std::uint32_t limit = static_cast<std::uint32_t>(std::max<std::size_t>(4096, 512 * n));
    for (std::uint32_t i = 1; i <= limit && out.size() < n; ++i) {
        const auto q = sobol.point(i);
        const GeoPoint p{region.lat_min() + (region.lat_max() - region.lat_min()) * q[0],
                         region.lon_min() + (region.lon_max() - region.lon_min()) * q[1]};
        if (region.contains(p)) out.push_back(p);
    }
    return out;
}

GeoPoint propose_next(const GpSurrogate& s, const PlacementRegion& region, double best, Rng& rng,
                      const ProposalSettings& settings) {
    const SobolSequence sobol(2, rng(), true);
    std::vector<GeoPoint> cands;
    for (const auto& q : sobol.first(settings.candidates)) {
        const GeoPoint p{region.lat_min() + (region.lat_max() - region.lat_min()) * q[0],
                         region.lon_min() + (region.lon_max() - region.lon_min()) * q[1]};
        if (region.contains(p)) cands.push_back(p);
    }
    if (cands.empty()) throw InfeasibleRegionError("no feasible candidate location in the placement region");

    auto acquire = [&](const GpPrediction& g) {
        switch (settings.acquisition) {
            case Acquisition::ConfidenceBound: return confidence_bound(g.mean, g.std, settings.kappa);
            case Acquisition::ProbabilityOfImprovement: return probability_of_improvement(g.mean, g.std, best);
            case Acquisition::ExpectedImprovement:
            default: return expected_improvement(g.mean, g.std, best);
        }
    };
    double top_acq = -std::numeric_limits<double>::infinity(), top_std = -1.0;
    std::size_t arg_acq = 0, arg_std = 0;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const GpPrediction g = gp_predict(s, cands[i]);
        const double a = acquire(g);
        if (a > top_acq) top_acq = a, arg_acq = i;
        if (g.std > top_std) top_std = g.std, arg_std = i;
    }
    // Confidence bounds are never uniformly zero; EI and PI are when nothing can improve.
    const bool explore = settings.acquisition != Acquisition::ConfidenceBound && !(top_acq > 0.0);
    auto score = [&](const GeoPoint& p) {
        const GpPrediction g = gp_predict(s, p);
        return explore ? g.std : acquire(g);
    };

    GeoPoint x = cands[explore ? arg_std : arg_acq];
    double fx = score(x);
    double step_lat = 0.05 * (region.lat_max() - region.lat_min());
    double step_lon = 0.05 * (region.lon_max() - region.lon_min());
    for (std::size_t it = 0; it < settings.pattern_steps; ++it) {
        const std::array<GeoPoint, 4> nbrs = {GeoPoint{x.lat + step_lat, x.lon}, GeoPoint{x.lat - step_lat, x.lon},
                                              GeoPoint{x.lat, x.lon + step_lon}, GeoPoint{x.lat, x.lon - step_lon}};
        bool improved = false;
        for (const auto& q : nbrs) {
            if (!region.contains(q)) continue;
            const double fq = score(q);
            if (fq > fx) fx = fq, x = q, improved = true;
        }
        if (!improved) {
            step_lat *= 0.5;
            step_lon *= 0.5;
        }
    }
    return x;
}

BoResult bo_maximize(const std::function<ObjectiveValue(const GeoPoint&)>& objective, const PlacementRegion& region,
                     const BoSettings& settings) {
    if (settings.n_init < 2) throw InputError("bayesian optimization: need at least two initial points");
    if (settings.budget < settings.n_init) throw InputError("bayesian optimization: budget below initial design size");
    const auto design = feasible_design(region, settings.n_init, stream_key(settings.seed, {0}));
    if (design.size() < settings.n_init) {
        throw InfeasibleRegionError("placement region too small for the initial design");
    }
    BoResult res;
    std::vector<GeoPoint> pts;
    std::vector<double> vals;
    auto record = [&](const GeoPoint& p) {
        const ObjectiveValue v = objective(p);
        res.evaluations.push_back({p, v});
        pts.push_back(p);
        vals.push_back(v.value);
        if (v.value > res.evaluations[res.best].objective.value) res.best = res.evaluations.size() - 1;
    };
    for (const auto& p : design) record(p);
    Rng rng = make_stream(settings.seed, {1});
    const GpInputBox box = GpInputBox::from(region);
    while (res.evaluations.size() < settings.budget) {
        const GpSurrogate gp = gp_fit(pts, vals, box);
        record(propose_next(gp, region, res.evaluations[res.best].objective.value, rng, settings.proposal));
    }
    return res;
}

PlacementResult greedy_place(const SensorNetwork& initial, std::size_t k, const PlacementRegion& region,
                             const WeightedEventSet& support, const ModelBundle& bundle,
                             const GreedySettings& settings) {
    if (k == 0) throw InputError("greedy_place: k must be >= 1");
    if (settings.budget < 10) throw InputError("greedy_place: budget must be >= 10");
    PlacementResult out;
    out.network = initial;
    const EigReport base = eig_total(support, initial, bundle, settings.eig);
    out.trace.initial_eig = base.total_eig;
    out.trace.initial_std_error = base.total_std_error;

    for (std::size_t s = 0; s < k; ++s) {
        const SensorNetwork current = out.network;
        auto objective = [&](const GeoPoint& p) {
            const EigReport r = eig_total(support, current.with(Station{p, settings.new_station_snr_offset}), bundle,
                                          settings.eig);
            return ObjectiveValue{r.total_eig, r.total_std_error};
        };
        BoSettings bo;
        bo.n_init = std::min(settings.n_init, settings.budget);
        bo.budget = settings.budget;
        bo.proposal = settings.proposal;
        bo.seed = stream_key(settings.seed, {s});
        const BoResult res = bo_maximize(objective, region, bo);
        for (std::size_t it = 0; it < res.evaluations.size(); ++it) {
            const auto& e = res.evaluations[it];
            out.trace.evaluations.push_back({s, it, e.loc, e.objective.value});
        }
        const auto& chosen = res.evaluations[res.best];
        out.network = current.with(Station{chosen.loc, settings.new_station_snr_offset});
        out.trace.steps.push_back(
            {s, chosen.loc, chosen.objective.value, chosen.objective.std_error, res.evaluations.size()});
    }
    return out;
}

void write_trace_csv(std::ostream& out, const OptimizationTrace& trace, std::span<const std::string> comments) {
    for (const auto& c : comments) out << "# " << c << '\n';
    out << "sensor_idx,iter,lat,lon,eig_nats\n";
    for (const auto& e : trace.evaluations) {
        out << e.sensor_idx << ',' << e.iter << ',' << format_double(e.loc.lat) << ',' << format_double(e.loc.lon)
            << ',' << format_double(e.eig) << '\n';
    }
}

}  // namespace netoed
