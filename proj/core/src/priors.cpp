#include "netoed/priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "netoed/error.hpp"
#include "netoed/rng.hpp"
#include "netoed/sobol.hpp"

namespace netoed {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double normal_pdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

double normal_cdf(double x, double mean, double sd) {
    return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
}

// Probability mass of the bivariate normal inside the domain box. Integrates
// the lat marginal times the conditional lon interval probability.
double gaussian_box_mass(const FaultBoxMixture& m, const Domain& d) {
    const double var_lat = m.point_cov[0];
    const double cov = m.point_cov[1];
    const double var_lon = m.point_cov[3];
    const double sd_lat = std::sqrt(var_lat);
    if (cov == 0.0) {
        const double sd_lon = std::sqrt(var_lon);
        return (normal_cdf(d.lat_max, m.point_center.lat, sd_lat) -
                normal_cdf(d.lat_min, m.point_center.lat, sd_lat)) *
               (normal_cdf(d.lon_max, m.point_center.lon, sd_lon) -
                normal_cdf(d.lon_min, m.point_center.lon, sd_lon));
    }
    const double cond_sd = std::sqrt(var_lon - cov * cov / var_lat);
    auto integrand = [&](double lat) {
        const double cond_mean = m.point_center.lon + cov / var_lat * (lat - m.point_center.lat);
        return normal_pdf(lat, m.point_center.lat, sd_lat) *
               (normal_cdf(d.lon_max, cond_mean, cond_sd) - normal_cdf(d.lon_min, cond_mean, cond_sd));
    };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, d.lat_min,
                                                                          d.lat_max, 15, 1e-12);
}

double bivariate_pdf(const GeoPoint& p, const FaultBoxMixture& m) {
    const double a = m.point_cov[0], b = m.point_cov[1], c = m.point_cov[3];
    const double det = a * c - b * b;
    const double x = p.lat - m.point_center.lat;
    const double y = p.lon - m.point_center.lon;
    const double q = (c * x * x - 2.0 * b * x * y + a * y * y) / det;
    return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
}

double log_magnitude_density(double mag, const PriorSpec& spec) {
    if (mag < spec.mag_min) return kNegInf;
    return std::log(spec.mag_rate) - spec.mag_rate * (mag - spec.mag_min);
}

Event draw_depth_mag(GeoPoint loc, const PriorSpec& spec, Rng& rng) {
    const Domain& d = spec.domain;
    Event e;
    e.loc = loc;
    e.depth = d.depth_min + uniform01(rng) * d.depth_range();
    std::exponential_distribution<double> expo(spec.mag_rate);
    e.mag = spec.mag_min + expo(rng);
    return e;
}

}  // namespace

void PriorSpec::validate() const {
    domain.validate();
    if (!(mag_rate > 0.0) || !std::isfinite(mag_rate)) throw InputError("prior: mag_rate must be > 0");
    if (!std::isfinite(mag_min)) throw InputError("prior: mag_min must be finite");
    if (kind == PriorKind::FaultBox) {
        if (!mixture) throw InputError("prior: fault-box prior needs mixture parameters");
        const auto& m = *mixture;
        const double total = m.point_weight + m.strip_weight + m.background_weight;
        if (std::abs(total - 1.0) > 1e-12) throw InputError("prior: mixture weights must sum to 1");
        if (m.point_weight < 0 || m.strip_weight < 0 || m.background_weight < 0) {
            throw InputError("prior: mixture weights must be non-negative");
        }
        if (m.point_cov[1] != m.point_cov[2]) throw InputError("prior: covariance must be symmetric");
        if (!(m.point_cov[0] > 0) || !(m.point_cov[0] * m.point_cov[3] - m.point_cov[1] * m.point_cov[1] > 0)) {
            throw InputError("prior: covariance must be positive definite");
        }
        if (!(m.strip_lon_std > 0)) throw InputError("prior: strip standard deviation must be > 0");
    }
}

PriorSpec PriorSpec::uniform(const Domain& domain) {
    PriorSpec s;
    s.domain = domain;
    s.mag_min = domain.mag_min;
    return s;
}

PriorSpec PriorSpec::fault_box(const Domain& domain, FaultBoxMixture mixture) {
    PriorSpec s = uniform(domain);
    s.kind = PriorKind::FaultBox;
    s.mixture = mixture;
    return s;
}

std::vector<double> WeightedEventSet::weights() const {
    std::vector<double> w(log_weights.size());
    std::transform(log_weights.begin(), log_weights.end(), w.begin(), [](double lw) { return std::exp(lw); });
    return w;
}

WeightedEventSet WeightedEventSet::equal_weights(std::vector<Event> events) {
    if (events.empty()) throw InputError("weighted event set: no events");
    const double lw = -std::log(static_cast<double>(events.size()));
    WeightedEventSet out;
    out.log_weights.assign(events.size(), lw);
    out.events = std::move(events);
    return out;
}

double spatial_density(const GeoPoint& p, const PriorSpec& spec) {
    const Domain& d = spec.domain;
    if (!d.contains(p)) return 0.0;
    const double uniform = 1.0 / d.area_deg2();
    if (spec.kind == PriorKind::Uniform) return uniform;
    const auto& m = *spec.mixture;
    const double point = bivariate_pdf(p, m) / gaussian_box_mass(m, d);
    const double strip_mass = normal_cdf(d.lon_max, m.strip_lon_mean, m.strip_lon_std) -
                              normal_cdf(d.lon_min, m.strip_lon_mean, m.strip_lon_std);
    const double strip =
        normal_pdf(p.lon, m.strip_lon_mean, m.strip_lon_std) / strip_mass / (d.lat_max - d.lat_min);
    return m.point_weight * point + m.strip_weight * strip + m.background_weight * uniform;
}

double log_prior_density(const Event& e, const PriorSpec& spec) {
    const Domain& d = spec.domain;
    if (!d.contains(e.loc) || e.depth < d.depth_min || e.depth > d.depth_max) return kNegInf;
    const double spatial = spatial_density(e.loc, spec);
    if (!(spatial > 0.0)) return kNegInf;
    return std::log(spatial) - std::log(d.depth_range()) + log_magnitude_density(e.mag, spec);
}

WeightedEventSet importance_weights(std::vector<Event> events, const PriorSpec& target,
                                    const PriorSpec& proposal) {
    if (events.empty()) throw InputError("importance_weights: no events");
    std::vector<double> lw(events.size());
    double max_lw = kNegInf;
    for (std::size_t k = 0; k < events.size(); ++k) {
        const double lq = log_prior_density(events[k], proposal);
        if (!std::isfinite(lq)) throw InputError("importance_weights: proposal density is zero at a sample");
        lw[k] = log_prior_density(events[k], target) - lq;
        max_lw = std::max(max_lw, lw[k]);
    }
    if (!std::isfinite(max_lw)) throw InputError("importance_weights: target density is zero at every sample");
    double sum = 0.0;
    for (double v : lw) sum += std::exp(v - max_lw);
    const double log_norm = max_lw + std::log(sum);
    for (double& v : lw) v -= log_norm;
    return WeightedEventSet{std::move(events), std::move(lw)};
}

std::vector<PriorDraw> sample_prior_with_components(const PriorSpec& spec, std::size_t n,
                                                    std::uint64_t seed) {
    spec.validate();
    const Domain& d = spec.domain;
    Rng rng = make_stream(seed, {0x9a10bu});
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto uniform_loc = [&] {
        return GeoPoint{d.lat_min + uniform01(rng) * (d.lat_max - d.lat_min),
                        d.lon_min + uniform01(rng) * (d.lon_max - d.lon_min)};
    };

    std::vector<PriorDraw> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (spec.kind == PriorKind::Uniform) {
            const GeoPoint loc = uniform_loc();
            out.push_back({draw_depth_mag(loc, spec, rng), 2});
            continue;
        }
        const auto& m = *spec.mixture;
        const double u = uniform01(rng);
        GeoPoint loc;
        int component;
        if (u < m.point_weight) {
            component = 0;
            const double l11 = std::sqrt(m.point_cov[0]);
            const double l21 = m.point_cov[1] / l11;
            const double l22 = std::sqrt(m.point_cov[3] - l21 * l21);
            do {
                const double z1 = gauss(rng), z2 = gauss(rng);
                loc = {m.point_center.lat + l11 * z1, m.point_center.lon + l21 * z1 + l22 * z2};
            } while (!d.contains(loc));
        } else if (u < m.point_weight + m.strip_weight) {
            component = 1;
            double lon;
            do {
                lon = m.strip_lon_mean + m.strip_lon_std * gauss(rng);
            } while (lon < d.lon_min || lon > d.lon_max);
            loc = {d.lat_min + uniform01(rng) * (d.lat_max - d.lat_min), lon};
        } else {
            component = 2;
            loc = uniform_loc();
        }
        out.push_back({draw_depth_mag(loc, spec, rng), component});
    }
    return out;
}

std::vector<Event> sample_prior(const PriorSpec& spec, std::size_t n, std::uint64_t seed) {
    std::vector<Event> out;
    out.reserve(n);
    for (auto& draw : sample_prior_with_components(spec, n, seed)) out.push_back(draw.event);
    return out;
}

double magnitude_quantile(double u, const PriorSpec& spec, double upper) {
    const double span = upper - spec.mag_min;
    const double tail = span > 0 ? -std::expm1(-spec.mag_rate * span) : 1.0;
    return spec.mag_min - std::log1p(-u * tail) / spec.mag_rate;
}

std::vector<Event> sobol_events(std::size_t n, const PriorSpec& spec, std::uint64_t seed) {
    if (n == 0) throw InputError("sobol_events: empty event set requested");
    spec.validate();
    const Domain& d = spec.domain;
    SobolSequence seq(4, seed);
    std::vector<Event> events;
    events.reserve(n);
    for (const auto& u : seq.first(n)) {
        Event e = map_unit_to_event(std::span<const double, 4>(u.data(), 4), d);
        e.mag = magnitude_quantile(u[3], spec, d.mag_max);
        events.push_back(e);
    }
    return events;
}

WeightedEventSet build_support(const PriorSpec& spec, std::size_t n, std::uint64_t seed) {
    auto events = sobol_events(n, spec, seed);
    if (spec.kind == PriorKind::Uniform) return WeightedEventSet::equal_weights(std::move(events));
    PriorSpec proposal = spec;
    proposal.kind = PriorKind::Uniform;
    proposal.mixture.reset();
    return importance_weights(std::move(events), spec, proposal);
}

}  // namespace netoed
