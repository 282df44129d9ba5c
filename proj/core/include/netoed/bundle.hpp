#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "netoed/detection.hpp"
#include "netoed/earthmodel.hpp"

namespace netoed {

/// SNR = a * mag - b * ln(distance_km) + c + station offset.
struct SnrModel {
    double a = 1.0;
    double b = 1.2;
    double c = 6.0;
};

/// Pick uncertainty as a function of SNR: sigma0 below t_low, shrink*sigma0
/// above t_high, log-linear in between.
struct PickNoiseModel {
    double sigma0 = 1.0;  // s
    double shrink = 0.1;
    double t_low = 1.0;
    double t_high = 10.0;

    void validate() const;
};

struct FitDiagnostics {
    double sigma_rms_residual = 0.0;       // s
    double fitted_length_scale_km = 0.0;   // kernel fit result before any override
    double detection_loss = 0.0;
    int detection_iterations = 0;
};

/// Everything the likelihood needs: detection model, travel-time surrogates,
/// station correlation and the measurement-noise model.
struct ModelBundle {
    static constexpr int kFormatVersion = 1;

    DetectionModel detection;
    MeanSurrogate mean_tt;
    SigmaSurrogate sigma_tt;
    CorrelationModel correlation;
    SnrModel snr;
    PickNoiseModel pick;
    double nugget = 1e-6;  // s^2 added to the covariance diagonal

    // Likelihood terms can be switched off for detection-only or arrival-only studies.
    bool use_detections = true;
    bool use_arrivals = true;

    std::optional<Ensemble> ensemble;
    FitDiagnostics diagnostics;
};

/// Settings of the travel-time part of a bundle built from a synthetic ensemble.
struct TravelTimeFitSettings {
    EnsembleSpec ensemble;
    FitDomain fit_domain;
    double delta_step_km = 5.0;
    double depth_step_km = 2.0;
    double sigma_floor = 0.05;
    double correlation_spacing_km = 33.0;
    std::size_t correlation_depths = 9;
};

/// Generates the ensemble, fits mean/sigma surrogates and the kernel length.
/// Detection and noise models keep their defaults.
ModelBundle build_travel_time_bundle(const TravelTimeFitSettings& settings, std::uint64_t seed);

nlohmann::json bundle_to_json(const ModelBundle& bundle);
ModelBundle bundle_from_json(const nlohmann::json& j);

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle, const std::string& provenance = {});
ModelBundle load_bundle(const std::filesystem::path& path);

std::string to_string(CorrelationMode mode);
CorrelationMode correlation_mode_from_string(const std::string& s);

}  // namespace netoed
