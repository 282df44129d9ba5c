#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace netoed {

/// Constant-velocity layer of a 1-D P-wave model.
struct Layer {
    double thickness = 0.0;  // km
    double vp = 0.0;         // km/s
};

/// Stack of layers over a half-space. Velocities must not decrease with depth.
struct VelocityProfile {
    std::vector<Layer> layers;
    double halfspace_vp = 8.0;
    double max_depth = 700.0;  // km, bottom of the modelled half-space

    void validate() const;
};

/// First-arrival P travel time (seconds) for a surface station at epicentral
/// distance `delta_km` from a source at `depth_km`: the faster of a straight
/// direct ray (layer-weighted slowness) and every head wave along an interface
/// below the source, each head wave counted only beyond its critical distance.
double travel_time(const VelocityProfile& profile, double delta_km, double depth_km);

struct Ensemble {
    std::vector<VelocityProfile> profiles;

    std::size_t size() const { return profiles.size(); }
    void validate() const;
};

/// Perturbed two-layer reference crust used to stand in for a catalogue of
/// regional 1-D models.
struct EnsembleSpec {
    std::size_t members = 121;
    double crust_vp_mean = 6.0, crust_vp_sd = 0.25;
    double crust_thickness_mean = 35.0, crust_thickness_sd = 4.0;
    double mantle_vp_mean = 8.0, mantle_vp_sd = 0.15;
};

Ensemble generate_ensemble(const EnsembleSpec& spec, std::uint64_t seed);

struct TravelTimeStats {
    double mu = 0.0;     // s
    double sigma = 0.0;  // s, N-1 denominator
};

TravelTimeStats ensemble_stats(const Ensemble& ens, double delta_km, double depth_km);

/// Rectangular (distance, depth) range a surrogate was fitted on.
struct FitDomain {
    double delta_min = 0.0, delta_max = 600.0;  // km
    double depth_min = 0.0, depth_max = 40.0;   // km

    bool contains(double delta_km, double depth_km) const;
};

/// Tensor grid of (distance, depth) sample axes, both ascending.
struct FitGrid {
    std::vector<double> deltas;
    std::vector<double> depths;

    static FitGrid uniform(const FitDomain& domain, double delta_step, double depth_step);
    FitDomain domain() const;
};

/// Tabulated mean travel time with bilinear interpolation.
class MeanSurrogate {
public:
    MeanSurrogate() = default;
    MeanSurrogate(FitGrid grid, std::vector<double> table);

    double operator()(double delta_km, double depth_km) const;

    const FitGrid& grid() const { return grid_; }
    const std::vector<double>& table() const { return table_; }
    FitDomain domain() const { return grid_.domain(); }

private:
    FitGrid grid_;
    std::vector<double> table_;  // row-major [delta][depth]
};

/// Total-degree-5 bivariate polynomial for the travel-time standard deviation,
/// clipped below at `floor`. Inputs are scaled to [-1, 1] over the fit domain.
class SigmaSurrogate {
public:
    static constexpr int kDegree = 5;
    static constexpr int kTerms = (kDegree + 1) * (kDegree + 2) / 2;

    SigmaSurrogate() = default;
    SigmaSurrogate(std::vector<double> coeffs, FitDomain domain, double floor);

    /// Clipped value; throws OutOfDomainError outside the fit domain.
    double operator()(double delta_km, double depth_km) const;
    double raw(double delta_km, double depth_km) const;

    const std::vector<double>& coeffs() const { return coeffs_; }
    const FitDomain& domain() const { return domain_; }
    double floor() const { return floor_; }

    /// Monomial basis row at a point (scaled coordinates), length kTerms.
    static std::vector<double> basis(double u, double v);

private:
    std::vector<double> coeffs_;
    FitDomain domain_;
    double floor_ = 0.05;
};

struct PolynomialFit {
    SigmaSurrogate surrogate;
    double rms_residual = 0.0;  // s
};

/// Least-squares fit of the degree-5 polynomial to scattered (delta, depth, sigma) samples.
PolynomialFit fit_sigma_polynomial(std::span<const double> deltas, std::span<const double> depths,
                                   std::span<const double> sigmas, const FitDomain& domain,
                                   double floor = 0.05);

struct SurrogateFit {
    MeanSurrogate mean;
    SigmaSurrogate sigma;
    double sigma_rms_residual = 0.0;
};

SurrogateFit fit_surrogates(const Ensemble& ens, const FitGrid& grid, double sigma_floor = 0.05);

enum class CorrelationMode {
    EpicentralDifference,  // |Delta_j - Delta_k| of source-station distances
    StationSeparation,     // great-circle distance between the two stations
    Independent            // identity correlation (zero length-scale limit)
};

struct CorrelationModel {
    double length_scale_km = 147.5;
    CorrelationMode mode = CorrelationMode::EpicentralDifference;
};

/// Squared-exponential kernel exp(-d^2 / (2 l^2)) of a distance difference in km.
double kernel_correlation(const CorrelationModel& model, double delta_j, double delta_k);

/// Depth-averaged inter-station travel-time correlation induced by the ensemble.
Eigen::MatrixXd empirical_correlation(const Ensemble& ens, std::span<const double> deltas,
                                      std::span<const double> depths);

/// Frobenius misfit between gamma and the kernel matrix at a length scale.
double kernel_misfit(const Eigen::MatrixXd& gamma, std::span<const double> deltas, double length_km);

/// Length scale in [1, 1e4] km minimizing kernel_misfit (golden section on log l).
CorrelationModel fit_kernel_length(const Eigen::MatrixXd& gamma, std::span<const double> deltas);

}  // namespace netoed
