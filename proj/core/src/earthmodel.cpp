#include "netoed/earthmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "netoed/error.hpp"
#include "netoed/rng.hpp"

namespace netoed {
namespace {

constexpr double kDomainTol = 1e-9;

double scale_to_unit(double x, double lo, double hi) { return 2.0 * (x - lo) / (hi - lo) - 1.0; }

}  // namespace

void VelocityProfile::validate() const {
    double prev = 0.0;
    for (const auto& layer : layers) {
        if (!(layer.thickness > 0.0) || !(layer.vp > 0.0)) {
            throw InputError("velocity profile: layer thickness and vp must be positive");
        }
        if (layer.vp < prev) throw InputError("velocity profile: vp must not decrease with depth");
        prev = layer.vp;
    }
    if (!(halfspace_vp > 0.0) || halfspace_vp < prev) {
        throw InputError("velocity profile: half-space vp must be positive and not slower than the layers");
    }
}

double travel_time(const VelocityProfile& p, double delta_km, double depth_km) {
    if (!(delta_km >= 0.0) || !(depth_km >= 0.0) || !std::isfinite(delta_km)) {
        throw InputError("travel_time: distance and depth must be non-negative");
    }
    if (depth_km > p.max_depth) throw OutOfDomainError("travel_time: source below the velocity model");

    const std::size_t n_layers = p.layers.size();
    auto velocity = [&](std::size_t i) { return i < n_layers ? p.layers[i].vp : p.halfspace_vp; };

    // Direct ray: straight path, slowness averaged over the vertical extent [0, depth].
    double direct;
    if (depth_km == 0.0) {
        direct = delta_km / velocity(0);
    } else {
        double slowness_depth = 0.0;  // integral of 1/v over depth
        double top = 0.0;
        for (std::size_t i = 0; i <= n_layers && top < depth_km; ++i) {
            const double bottom = i < n_layers ? top + p.layers[i].thickness : depth_km;
            slowness_depth += (std::min(bottom, depth_km) - top) / velocity(i);
            top = bottom;
        }
        direct = std::hypot(delta_km, depth_km) * slowness_depth / depth_km;
    }

    double best = direct;
    double interface_depth = 0.0;
    for (std::size_t n = 0; n < n_layers; ++n) {
        interface_depth += p.layers[n].thickness;
        if (interface_depth < depth_km) continue;
        const double refractor = velocity(n + 1);
        double delay = 0.0;
        double critical = 0.0;
        bool valid = true;
        double top = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            const double v = velocity(i);
            if (!(v < refractor)) {
                valid = false;
                break;
            }
            const double bottom = top + p.layers[i].thickness;
            const double below_source = std::max(0.0, bottom - std::max(top, depth_km));
            const double legs = p.layers[i].thickness + below_source;
            const double ratio = v / refractor;
            delay += legs * std::sqrt(1.0 / (v * v) - 1.0 / (refractor * refractor));
            critical += legs * ratio / std::sqrt(1.0 - ratio * ratio);
            top = bottom;
        }
        if (!valid || delta_km < critical) continue;
        best = std::min(best, delta_km / refractor + delay);
    }
    return best;
}

void Ensemble::validate() const {
    if (profiles.size() < 2) throw InputError("ensemble: at least two members required");
    for (const auto& p : profiles) p.validate();
}

Ensemble generate_ensemble(const EnsembleSpec& spec, std::uint64_t seed) {
    if (spec.members < 2) throw InputError("ensemble: at least two members required");
    Rng rng = make_stream(seed, {0xea27u});
    std::normal_distribution<double> gauss(0.0, 1.0);
    Ensemble ens;
    ens.profiles.reserve(spec.members);
    while (ens.profiles.size() < spec.members) {
        const double thickness = spec.crust_thickness_mean + spec.crust_thickness_sd * gauss(rng);
        const double crust = spec.crust_vp_mean + spec.crust_vp_sd * gauss(rng);
        const double mantle = spec.mantle_vp_mean + spec.mantle_vp_sd * gauss(rng);
        // Truncate to physically monotone models.
        if (!(thickness > 1.0) || !(crust > 0.0) || !(mantle > crust)) continue;
        VelocityProfile p;
        p.layers.push_back({thickness, crust});
        p.halfspace_vp = mantle;
        ens.profiles.push_back(std::move(p));
    }
    return ens;
}

TravelTimeStats ensemble_stats(const Ensemble& ens, double delta_km, double depth_km) {
    ens.validate();
    const double n = static_cast<double>(ens.size());
    std::vector<double> times;
    times.reserve(ens.size());
    for (const auto& p : ens.profiles) times.push_back(travel_time(p, delta_km, depth_km));
    double mu = 0.0;
    for (double t : times) mu += t;
    mu /= n;
    double ss = 0.0;
    for (double t : times) ss += (t - mu) * (t - mu);
    return {mu, std::sqrt(ss / (n - 1.0))};
}

bool FitDomain::contains(double delta_km, double depth_km) const {
    return delta_km >= delta_min - kDomainTol && delta_km <= delta_max + kDomainTol &&
           depth_km >= depth_min - kDomainTol && depth_km <= depth_max + kDomainTol;
}

FitGrid FitGrid::uniform(const FitDomain& d, double delta_step, double depth_step) {
    if (!(delta_step > 0) || !(depth_step > 0) || !(d.delta_max > d.delta_min) || !(d.depth_max > d.depth_min)) {
        throw InputError("fit grid: invalid range or spacing");
    }
    FitGrid g;
    const auto nd = static_cast<std::size_t>(std::ceil((d.delta_max - d.delta_min) / delta_step - 1e-9));
    const auto nx = static_cast<std::size_t>(std::ceil((d.depth_max - d.depth_min) / depth_step - 1e-9));
    for (std::size_t i = 0; i <= nd; ++i) g.deltas.push_back(std::min(d.delta_min + i * delta_step, d.delta_max));
    for (std::size_t i = 0; i <= nx; ++i) g.depths.push_back(std::min(d.depth_min + i * depth_step, d.depth_max));
    return g;
}

FitDomain FitGrid::domain() const {
    if (deltas.empty() || depths.empty()) return {};
    return {deltas.front(), deltas.back(), depths.front(), depths.back()};
}

MeanSurrogate::MeanSurrogate(FitGrid grid, std::vector<double> table)
    : grid_(std::move(grid)), table_(std::move(table)) {
    if (grid_.deltas.size() < 2 || grid_.depths.size() < 2) throw InputError("mean surrogate: grid needs 2x2 nodes");
    if (table_.size() != grid_.deltas.size() * grid_.depths.size()) {
        throw InputError("mean surrogate: table size does not match grid");
    }
    if (!std::is_sorted(grid_.deltas.begin(), grid_.deltas.end()) ||
        !std::is_sorted(grid_.depths.begin(), grid_.depths.end())) {
        throw InputError("mean surrogate: grid axes must be ascending");
    }
}

double MeanSurrogate::operator()(double delta_km, double depth_km) const {
    if (!domain().contains(delta_km, depth_km)) {
        throw OutOfDomainError("mean travel-time surrogate evaluated outside its fit domain");
    }
    auto bracket = [](const std::vector<double>& axis, double x) {
        auto it = std::upper_bound(axis.begin(), axis.end(), x);
        std::size_t hi = static_cast<std::size_t>(it - axis.begin());
        hi = std::clamp<std::size_t>(hi, 1, axis.size() - 1);
        const std::size_t lo = hi - 1;
        const double t = std::clamp((x - axis[lo]) / (axis[hi] - axis[lo]), 0.0, 1.0);
        return std::pair{lo, t};
    };
    const auto [i, s] = bracket(grid_.deltas, delta_km);
    const auto [j, t] = bracket(grid_.depths, depth_km);
    const std::size_t nx = grid_.depths.size();
    const double f00 = table_[i * nx + j], f01 = table_[i * nx + j + 1];
    const double f10 = table_[(i + 1) * nx + j], f11 = table_[(i + 1) * nx + j + 1];
    return (1 - s) * ((1 - t) * f00 + t * f01) + s * ((1 - t) * f10 + t * f11);
}

SigmaSurrogate::SigmaSurrogate(std::vector<double> coeffs, FitDomain domain, double floor)
    : coeffs_(std::move(coeffs)), domain_(domain), floor_(floor) {
    if (coeffs_.size() != static_cast<std::size_t>(kTerms)) throw InputError("sigma surrogate: expected 21 coefficients");
    if (!(floor_ > 0.0)) throw InputError("sigma surrogate: floor must be positive");
}

std::vector<double> SigmaSurrogate::basis(double u, double v) {
    std::vector<double> row;
    row.reserve(kTerms);
    for (int total = 0; total <= kDegree; ++total) {
        for (int j = 0; j <= total; ++j) row.push_back(std::pow(u, total - j) * std::pow(v, j));
    }
    return row;
}

double SigmaSurrogate::raw(double delta_km, double depth_km) const {
    const double u = scale_to_unit(delta_km, domain_.delta_min, domain_.delta_max);
    const double v = scale_to_unit(depth_km, domain_.depth_min, domain_.depth_max);
    const auto row = basis(u, v);
    double s = 0.0;
    for (int k = 0; k < kTerms; ++k) s += coeffs_[k] * row[k];
    return s;
}

double SigmaSurrogate::operator()(double delta_km, double depth_km) const {
    if (!domain_.contains(delta_km, depth_km)) {
        throw OutOfDomainError("travel-time sigma surrogate evaluated outside its fit domain");
    }
    return std::max(floor_, raw(delta_km, depth_km));
}

PolynomialFit fit_sigma_polynomial(std::span<const double> deltas, std::span<const double> depths,
                                   std::span<const double> sigmas, const FitDomain& domain, double floor) {
    const std::size_t n = sigmas.size();
    if (deltas.size() != n || depths.size() != n) throw InputError("sigma fit: sample arrays differ in length");
    if (n < static_cast<std::size_t>(SigmaSurrogate::kTerms)) {
        throw InputError("sigma fit: need at least 21 samples for a degree-5 polynomial");
    }
    Eigen::MatrixXd design(n, SigmaSurrogate::kTerms);
    Eigen::VectorXd rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = SigmaSurrogate::basis(scale_to_unit(deltas[i], domain.delta_min, domain.delta_max),
                                               scale_to_unit(depths[i], domain.depth_min, domain.depth_max));
        for (int k = 0; k < SigmaSurrogate::kTerms; ++k) design(i, k) = row[k];
        rhs(i) = sigmas[i];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < SigmaSurrogate::kTerms) throw NumericalError("sigma fit: degenerate grid (rank-deficient design)");
    const Eigen::VectorXd coeffs = qr.solve(rhs);
    const double rms = std::sqrt((design * coeffs - rhs).squaredNorm() / static_cast<double>(n));
    return {SigmaSurrogate(std::vector<double>(coeffs.data(), coeffs.data() + coeffs.size()), domain, floor), rms};
}

SurrogateFit fit_surrogates(const Ensemble& ens, const FitGrid& grid, double sigma_floor) {
    ens.validate();
    std::vector<double> table, ds, xs, sig;
    for (double d : grid.deltas) {
        for (double x : grid.depths) {
            const auto stats = ensemble_stats(ens, d, x);
            table.push_back(stats.mu);
            ds.push_back(d);
            xs.push_back(x);
            sig.push_back(stats.sigma);
        }
    }
    auto poly = fit_sigma_polynomial(ds, xs, sig, grid.domain(), sigma_floor);
    return {MeanSurrogate(grid, std::move(table)), std::move(poly.surrogate), poly.rms_residual};
}

double kernel_correlation(const CorrelationModel& model, double delta_j, double delta_k) {
    if (model.mode == CorrelationMode::Independent) return delta_j == delta_k ? 1.0 : 0.0;
    const double d = delta_j - delta_k;
    return std::exp(-d * d / (2.0 * model.length_scale_km * model.length_scale_km));
}

Eigen::MatrixXd empirical_correlation(const Ensemble& ens, std::span<const double> deltas,
                                      std::span<const double> depths) {
    ens.validate();
    if (depths.empty()) throw InputError("empirical correlation: no depths");
    const std::size_t n_sta = deltas.size();
    const std::size_t n_mem = ens.size();
    Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(n_sta, n_sta);
    Eigen::MatrixXd dev(n_mem, n_sta);
    for (double x : depths) {
        for (std::size_t j = 0; j < n_sta; ++j) {
            for (std::size_t i = 0; i < n_mem; ++i) dev(i, j) = travel_time(ens.profiles[i], deltas[j], x);
        }
        for (std::size_t j = 0; j < n_sta; ++j) {
            const double mu = dev.col(j).mean();
            dev.col(j).array() -= mu;
            const double sigma = std::sqrt(dev.col(j).squaredNorm() / static_cast<double>(n_mem - 1));
            if (!(sigma > 0.0)) throw NumericalError("empirical correlation: zero travel-time spread at a station");
            dev.col(j) /= sigma;
        }
        gamma += dev.transpose() * dev / static_cast<double>(n_mem - 1);
    }
    gamma /= static_cast<double>(depths.size());
    return gamma;
}

double kernel_misfit(const Eigen::MatrixXd& gamma, std::span<const double> deltas, double length_km) {
    const CorrelationModel model{length_km, CorrelationMode::EpicentralDifference};
    double ss = 0.0;
    for (std::size_t j = 0; j < deltas.size(); ++j) {
        for (std::size_t k = 0; k < deltas.size(); ++k) {
            const double r = gamma(j, k) - kernel_correlation(model, deltas[j], deltas[k]);
            ss += r * r;
        }
    }
    return std::sqrt(ss);
}

CorrelationModel fit_kernel_length(const Eigen::MatrixXd& gamma, std::span<const double> deltas) {
    const auto n = static_cast<Eigen::Index>(deltas.size());
    if (gamma.rows() != n || gamma.cols() != n) throw InputError("kernel fit: matrix size does not match distances");
    if (!gamma.allFinite()) throw InputError("kernel fit: non-finite correlation entries");

    auto objective = [&](double log_l) { return kernel_misfit(gamma, deltas, std::exp(log_l)); };
    const double lo = 0.0, hi = std::log(1e4);

    // Coarse scan to bracket the global minimum, then golden section inside the bracket.
    constexpr int kScan = 200;
    int best_i = 0;
    double best_f = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= kScan; ++i) {
        const double f = objective(lo + (hi - lo) * i / kScan);
        if (f < best_f) {
            best_f = f;
            best_i = i;
        }
    }
    double a = lo + (hi - lo) * std::max(0, best_i - 1) / kScan;
    double b = lo + (hi - lo) * std::min(kScan, best_i + 1) / kScan;
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = objective(c), fd = objective(d);
    while (b - a > 1e-10) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }
    return {std::exp(0.5 * (a + b)), CorrelationMode::EpicentralDifference};
}

}  // namespace netoed
