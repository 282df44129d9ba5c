#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "netoed/event.hpp"
#include "netoed/geo.hpp"

namespace netoed {

enum class PriorKind { Uniform, FaultBox };

/// Spatial mixture representing a point source, a north-south fault strip and a
/// uniform background. Gaussian components are truncated to the domain box and
/// renormalized there.
struct FaultBoxMixture {
    GeoPoint point_center{40.25, -109.0};
    /// Row-major 2x2 (lat, lon) covariance in degrees^2.
    std::array<double, 4> point_cov{0.125, 0.0, 0.0, 0.125};
    double point_weight = 0.49;

    double strip_lon_mean = -110.19;
    double strip_lon_std = 0.125;
    double strip_weight = 0.49;

    double background_weight = 0.02;
};

struct PriorSpec {
    PriorKind kind = PriorKind::Uniform;
    Domain domain;
    double mag_rate = std::numbers::ln10;  // lambda, per magnitude unit
    double mag_min = 0.5;
    std::optional<FaultBoxMixture> mixture;

    /// Throws InputError on non-positive rate, bad weights or a non-SPD covariance.
    void validate() const;

    static PriorSpec uniform(const Domain& domain);
    static PriorSpec fault_box(const Domain& domain, FaultBoxMixture mixture = {});
};

/// Events with self-normalized importance weights (sum of exp(log_weights) == 1).
struct WeightedEventSet {
    std::vector<Event> events;
    std::vector<double> log_weights;

    std::size_t size() const { return events.size(); }
    std::vector<double> weights() const;

    static WeightedEventSet equal_weights(std::vector<Event> events);
};

/// log p(loc) + log p(depth) + log p(mag); -infinity outside the support.
double log_prior_density(const Event& e, const PriorSpec& spec);

/// Spatial (lat, lon) density per square degree, without the depth/magnitude factors.
double spatial_density(const GeoPoint& p, const PriorSpec& spec);

/// Self-normalized weights proportional to target(theta) / proposal(theta).
WeightedEventSet importance_weights(std::vector<Event> events, const PriorSpec& target,
                                    const PriorSpec& proposal);

struct PriorDraw {
    Event event;
    int component = 0;  // 0 point source, 1 fault strip, 2 background (uniform prior: 2)
};

std::vector<Event> sample_prior(const PriorSpec& spec, std::size_t n, std::uint64_t seed);
std::vector<PriorDraw> sample_prior_with_components(const PriorSpec& spec, std::size_t n,
                                                    std::uint64_t seed);

/// Quantile of the magnitude prior truncated to [mag_min, upper].
double magnitude_quantile(double u, const PriorSpec& spec, double upper);

/// Scrambled-Sobol events for a prior: lat/lon/depth affine over the domain,
/// magnitude through the prior's quantile truncated at domain.mag_max.
std::vector<Event> sobol_events(std::size_t n, const PriorSpec& spec, std::uint64_t seed);

/// Inference grid for a prior: QMC events drawn from the uniform-location
/// proposal and importance-weighted toward the prior.
WeightedEventSet build_support(const PriorSpec& spec, std::size_t n, std::uint64_t seed);

}  // namespace netoed
