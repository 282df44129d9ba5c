#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "netoed/error.hpp"
#include "netoed/event.hpp"
#include "netoed/network.hpp"

namespace netoed {

/// Logistic first-P detection model:
///   logit p = alpha * dist_deg + beta * depth_km + gamma_m * mag + delta0
/// Defaults are coefficients fitted to a regional catalogue.
struct DetectionModel {
    double alpha = -2.82;   // per degree of epicentral distance
    double beta = -0.03;    // per km depth
    double gamma_m = 1.14;  // per magnitude unit
    double delta0 = 1.95;   // intercept

    double logit(double dist_deg, double depth_km, double mag) const {
        return alpha * dist_deg + beta * depth_km + gamma_m * mag + delta0;
    }
};

double detection_probability(const DetectionModel& m, const Event& e, const GeoPoint& station);

/// log(1 / (1 + exp(-z))) without overflow; log p(missed) is log_sigmoid(-z).
double log_sigmoid(double z);

/// Sum of per-station Bernoulli log-probabilities.
double detection_loglik(const DetectionModel& m, const DetectionVector& d, const Event& e,
                        const SensorNetwork& net);

/// One event-station pair of a detection catalogue.
struct CatalogRow {
    double dist_deg = 0.0;
    double depth_km = 0.0;
    std::optional<double> mag;  // absent iff mag_missing
    bool detected = false;

    bool mag_missing() const { return !mag.has_value(); }
};

/// Parameters in fit order: alpha, beta, gamma_m, delta0, mag-missing indicator.
using DetectionParams = std::array<double, 5>;

/// Weighted binary cross-entropy (mean over rows); positives weigh `detection_weight`.
double weighted_bce(const DetectionParams& p, std::span<const CatalogRow> rows, double detection_weight);
DetectionParams weighted_bce_gradient(const DetectionParams& p, std::span<const CatalogRow> rows,
                                      double detection_weight);

struct DetectionFit {
    DetectionModel model;
    double mag_missing_coef = 0.0;  // used only during fitting
    int iterations = 0;
    double gradient_norm = 0.0;
    double loss = 0.0;
};

/// Raised when the classes are separable and the likelihood has no finite maximizer.
class SeparableDataError : public NumericalError {
public:
    SeparableDataError(const std::string& what, DetectionFit clamped)
        : NumericalError(what), clamped_(clamped) {}
    const DetectionFit& clamped() const { return clamped_; }

private:
    DetectionFit clamped_;
};

/// Newton iteration on the weighted cross-entropy until the gradient norm drops below 1e-8.
DetectionFit fit_detection_model(std::span<const CatalogRow> rows, double detection_weight = 2.0);

/// Parameters of a synthetic catalogue drawn from a known detection model.
struct CatalogSynthesis {
    double dist_max_deg = 4.0;
    double depth_max_km = 40.0;
    double mag_min = 0.0;
    double mag_rate = 1.3;  // exponential magnitude law above mag_min
    double mag_missing_fraction = 0.0;
    double mag_missing_logit_shift = 0.0;  // true effect of a missing magnitude
};

std::vector<CatalogRow> synthesize_catalog(const DetectionModel& truth, std::size_t n, std::uint64_t seed,
                                           const CatalogSynthesis& params = {});

/// Catalogue CSV: header `dist_deg,depth_km,mag,mag_missing,detected`.
std::vector<CatalogRow> read_catalog_csv(const std::filesystem::path& path);
void write_catalog_csv(const std::filesystem::path& path, std::span<const CatalogRow> rows);

struct ClassificationScores {
    double accuracy = 0.0, precision = 0.0, recall = 0.0;
};

/// Scores of the 0.5-threshold classifier on labelled rows (missing magnitudes use 0).
ClassificationScores classification_scores(const DetectionFit& fit, std::span<const CatalogRow> rows);

}  // namespace netoed
