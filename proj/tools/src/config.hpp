#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include <netoed/bundle.hpp>
#include <netoed/geo.hpp>
#include <netoed/network.hpp>
#include <netoed/optimize.hpp>
#include <netoed/priors.hpp>

namespace netoed::cli {

struct NoiseOverrides {
    std::optional<SnrModel> snr;
    std::optional<PickNoiseModel> pick;
    std::optional<double> nugget;
};

struct CorrelationOverrides {
    std::optional<CorrelationMode> mode;
    std::optional<double> length_scale_km;
};

struct EigConfig {
    std::size_t n_events = 512;
    std::size_t n_realizations = 32;
};

struct OptimizeConfig {
    std::size_t k = 1;
    std::size_t budget = 100;
    std::size_t n_init = 10;
    double snr_offset = 0.0;
    std::optional<PolygonRegion> region;
    ProposalSettings proposal;
};

struct FitConfig {
    TravelTimeFitSettings travel_time;
    double detection_weight = 2.0;
};

/// Parsed and validated run configuration.
struct RunConfig {
    std::uint64_t seed = 0;
    Domain domain;
    PriorSpec prior;
    SensorNetwork network;
    NoiseOverrides noise;
    CorrelationOverrides correlation;
    std::optional<bool> use_detections, use_arrivals;
    EigConfig eig;
    OptimizeConfig optimize;
    FitConfig fit;
    std::filesystem::path output_dir = ".";

    nlohmann::json source;  // the document the config was parsed from, seed applied
};

/// Throws InputError with the offending key on any schema violation.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

/// Stations as `{"stations": [{"lat", "lon", "snr_offset"}]}`.
SensorNetwork parse_network(const nlohmann::json& j);
nlohmann::json network_to_json(const SensorNetwork& net);

/// GeoJSON Polygon geometry; coordinates are [lon, lat] pairs.
PolygonRegion parse_geojson_polygon(const nlohmann::json& j);

/// FNV-1a 64-bit hash of the compact config text, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

/// Applies config overrides for noise, correlation and likelihood switches.
void apply_overrides(const RunConfig& cfg, ModelBundle& bundle);

}  // namespace netoed::cli
