#include "config.hpp"

#include <array>
#include <cstdio>
#include <fstream>

#include <netoed/error.hpp>

namespace netoed::cli {

using nlohmann::json;

namespace {

std::array<double, 2> range(const json& j, const char* key, std::array<double, 2> fallback) {
    if (!j.contains(key)) return fallback;
    const auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != 2) throw InputError(std::string("config: '") + key + "' must be a [min, max] pair");
    return {v[0], v[1]};
}

Domain parse_domain(const json& j) {
    Domain d;
    const auto lat = range(j, "lat", {d.lat_min, d.lat_max});
    const auto lon = range(j, "lon", {d.lon_min, d.lon_max});
    const auto dep = range(j, "depth_km", {d.depth_min, d.depth_max});
    const auto mag = range(j, "mag", {d.mag_min, d.mag_max});
    d = {lat[0], lat[1], lon[0], lon[1], dep[0], dep[1], mag[0], mag[1]};
    d.validate();
    return d;
}

PriorSpec parse_prior(const json& j, const Domain& domain) {
    const std::string kind = j.value("kind", std::string("uniform"));
    PriorSpec spec;
    if (kind == "uniform") {
        spec = PriorSpec::uniform(domain);
    } else if (kind == "fault_box") {
        FaultBoxMixture m;
        if (j.contains("mixture")) {
            const auto& mj = j.at("mixture");
            if (mj.contains("point_center")) {
                const auto c = mj.at("point_center").get<std::vector<double>>();
                if (c.size() != 2) throw InputError("config: prior.mixture.point_center must be [lat, lon]");
                m.point_center = {c[0], c[1]};
            }
            if (mj.contains("point_cov")) {
                const auto c = mj.at("point_cov").get<std::vector<double>>();
                if (c.size() != 4) throw InputError("config: prior.mixture.point_cov must hold 4 entries");
                std::copy(c.begin(), c.end(), m.point_cov.begin());
                // Entries are variances unless the config says they are standard deviations.
                if (!mj.value("covariance_is_variance", true)) {
                    for (auto& v : m.point_cov) v = v * std::abs(v);
                }
            }
            m.point_weight = mj.value("point_weight", m.point_weight);
            m.strip_lon_mean = mj.value("strip_lon_mean", m.strip_lon_mean);
            m.strip_lon_std = mj.value("strip_lon_std", m.strip_lon_std);
            m.strip_weight = mj.value("strip_weight", m.strip_weight);
            m.background_weight = mj.value("background_weight", m.background_weight);
        }
        spec = PriorSpec::fault_box(domain, m);
    } else {
        throw InputError("config: prior.kind must be 'uniform' or 'fault_box', got '" + kind + "'");
    }
    spec.mag_rate = j.value("mag_rate", spec.mag_rate);
    spec.mag_min = j.value("mag_min", domain.mag_min);
    spec.validate();
    return spec;
}

template <class T>
T positive_count(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    const auto v = j.at(key).get<long long>();
    if (v < 0) throw InputError(std::string("config: '") + key + "' must be non-negative");
    return static_cast<T>(v);
}

}  // namespace

SensorNetwork parse_network(const json& j) {
    SensorNetwork net;
    if (!j.contains("stations")) throw InputError("network: missing 'stations' array");
    for (const auto& s : j.at("stations")) {
        Station st{{s.at("lat").get<double>(), s.at("lon").get<double>()}, s.value("snr_offset", 0.0)};
        if (!st.loc.valid()) throw InputError("network: station coordinates out of range");
        net.stations.push_back(st);
    }
    return net;
}

json network_to_json(const SensorNetwork& net) {
    json stations = json::array();
    for (const auto& s : net.stations) {
        stations.push_back({{"lat", s.loc.lat}, {"lon", s.loc.lon}, {"snr_offset", s.snr_offset}});
    }
    return {{"stations", stations}};
}

PolygonRegion parse_geojson_polygon(const json& j) {
    const json* geom = &j;
    if (j.value("type", std::string()) == "Feature") geom = &j.at("geometry");
    if (geom->value("type", std::string()) != "Polygon") throw InputError("region: expected a GeoJSON Polygon");
    std::vector<std::vector<GeoPoint>> rings;
    for (const auto& ring : geom->at("coordinates")) {
        std::vector<GeoPoint> pts;
        for (const auto& c : ring) {
            const auto v = c.get<std::vector<double>>();
            if (v.size() < 2) throw InputError("region: coordinate must be [lon, lat]");
            pts.push_back({v[1], v[0]});
        }
        rings.push_back(std::move(pts));
    }
    return PolygonRegion(std::move(rings));
}

RunConfig parse_config(const json& j) {
    try {
        if (!j.is_object()) throw InputError("config: top level must be an object");
        if (!j.contains("seed")) throw InputError("config: 'seed' is required");
        RunConfig cfg;
        cfg.source = j;
        cfg.seed = j.at("seed").get<std::uint64_t>();
        cfg.domain = parse_domain(j.value("domain", json::object()));
        cfg.prior = parse_prior(j.value("prior", json::object()), cfg.domain);
        if (j.contains("network")) cfg.network = parse_network(j.at("network"));

        if (j.contains("noise")) {
            const auto& n = j.at("noise");
            if (n.contains("snr")) {
                const auto& s = n.at("snr");
                SnrModel m;
                cfg.noise.snr = SnrModel{s.value("a", m.a), s.value("b", m.b), s.value("c", m.c)};
            }
            if (n.contains("pick")) {
                const auto& p = n.at("pick");
                PickNoiseModel m;
                m = {p.value("sigma0", m.sigma0), p.value("shrink", m.shrink), p.value("t_L", m.t_low),
                     p.value("t_U", m.t_high)};
                m.validate();
                cfg.noise.pick = m;
            }
            if (n.contains("nugget_s2")) {
                cfg.noise.nugget = n.at("nugget_s2").get<double>();
                if (!(*cfg.noise.nugget >= 0.0)) throw InputError("config: noise.nugget_s2 must be >= 0");
            }
        }
        if (j.contains("correlation")) {
            const auto& c = j.at("correlation");
            if (c.contains("mode")) cfg.correlation.mode = correlation_mode_from_string(c.at("mode"));
            if (c.contains("length_scale_km")) {
                cfg.correlation.length_scale_km = c.at("length_scale_km").get<double>();
                if (!(*cfg.correlation.length_scale_km > 0.0)) {
                    throw InputError("config: correlation.length_scale_km must be > 0");
                }
            }
        }
        if (j.contains("likelihood")) {
            const auto& l = j.at("likelihood");
            if (l.contains("use_detections")) cfg.use_detections = l.at("use_detections").get<bool>();
            if (l.contains("use_arrivals")) cfg.use_arrivals = l.at("use_arrivals").get<bool>();
        }
        if (j.contains("eig")) {
            const auto& e = j.at("eig");
            cfg.eig.n_events = positive_count(e, "n_events", cfg.eig.n_events);
            cfg.eig.n_realizations = positive_count(e, "n_realizations", cfg.eig.n_realizations);
            if (cfg.eig.n_events == 0 || cfg.eig.n_realizations == 0) {
                throw InputError("config: eig.n_events and eig.n_realizations must be >= 1");
            }
        }
        if (j.contains("optimize")) {
            const auto& o = j.at("optimize");
            cfg.optimize.k = positive_count(o, "k", cfg.optimize.k);
            cfg.optimize.budget = positive_count(o, "budget", cfg.optimize.budget);
            cfg.optimize.n_init = positive_count(o, "n_init", cfg.optimize.n_init);
            cfg.optimize.snr_offset = o.value("snr_offset", 0.0);
            if (o.contains("acquisition")) {
                cfg.optimize.proposal.acquisition = acquisition_from_string(o.at("acquisition").get<std::string>());
            }
            cfg.optimize.proposal.kappa = o.value("kappa", cfg.optimize.proposal.kappa);
            if (!(cfg.optimize.proposal.kappa >= 0.0)) throw InputError("config: optimize.kappa must be >= 0");
            if (o.contains("region")) cfg.optimize.region = parse_geojson_polygon(o.at("region"));
        }
        if (j.contains("ensemble")) {
            const auto& e = j.at("ensemble");
            auto& s = cfg.fit.travel_time.ensemble;
            s.members = positive_count(e, "members", s.members);
            s.crust_vp_mean = e.value("crust_vp_mean", s.crust_vp_mean);
            s.crust_vp_sd = e.value("crust_vp_sd", s.crust_vp_sd);
            s.crust_thickness_mean = e.value("crust_thickness_mean_km", s.crust_thickness_mean);
            s.crust_thickness_sd = e.value("crust_thickness_sd_km", s.crust_thickness_sd);
            s.mantle_vp_mean = e.value("mantle_vp_mean", s.mantle_vp_mean);
            s.mantle_vp_sd = e.value("mantle_vp_sd", s.mantle_vp_sd);
            if (s.members < 3) throw InputError("config: ensemble.members must be >= 3");
        }
        if (j.contains("fit")) {
            const auto& f = j.at("fit");
            auto& t = cfg.fit.travel_time;
            t.delta_step_km = f.value("delta_step_km", t.delta_step_km);
            t.depth_step_km = f.value("depth_step_km", t.depth_step_km);
            t.sigma_floor = f.value("sigma_floor_s", t.sigma_floor);
            t.correlation_spacing_km = f.value("correlation_spacing_km", t.correlation_spacing_km);
            t.correlation_depths = positive_count(f, "correlation_depths", t.correlation_depths);
            cfg.fit.detection_weight = f.value("detection_weight", cfg.fit.detection_weight);
            if (!(cfg.fit.detection_weight > 0.0)) throw InputError("config: fit.detection_weight must be > 0");
        }
        if (j.contains("output")) cfg.output_dir = j.at("output").value("dir", std::string("."));
        return cfg;
    } catch (const json::exception& e) {
        throw InputError(std::string("config: ") + e.what());
    }
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InputError("config " + path.string() + ": " + e.what());
    }
    return parse_config(j);
}

std::string config_hash(const RunConfig& cfg) {
    json j = cfg.source;
    j["seed"] = cfg.seed;
    const std::string text = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void apply_overrides(const RunConfig& cfg, ModelBundle& bundle) {
    if (cfg.noise.snr) bundle.snr = *cfg.noise.snr;
    if (cfg.noise.pick) bundle.pick = *cfg.noise.pick;
    if (cfg.noise.nugget) bundle.nugget = *cfg.noise.nugget;
    if (cfg.correlation.mode) bundle.correlation.mode = *cfg.correlation.mode;
    if (cfg.correlation.length_scale_km) bundle.correlation.length_scale_km = *cfg.correlation.length_scale_km;
    if (cfg.use_detections) bundle.use_detections = *cfg.use_detections;
    if (cfg.use_arrivals) bundle.use_arrivals = *cfg.use_arrivals;
}

}  // namespace netoed::cli
