#include "netoed/bundle.hpp"

#include <cmath>
#include <fstream>

#include "netoed/error.hpp"

namespace netoed {

using nlohmann::json;

void PickNoiseModel::validate() const {
    if (!(sigma0 > 0.0)) throw InputError("pick noise: sigma0 must be > 0");
    if (!(shrink > 0.0 && shrink < 1.0)) throw InputError("pick noise: shrink must lie in (0, 1)");
    if (!(t_low > 0.0 && t_low < t_high)) throw InputError("pick noise: need 0 < t_L < t_U");
}

std::string to_string(CorrelationMode mode) {
    switch (mode) {
        case CorrelationMode::EpicentralDifference: return "epicentral-difference";
        case CorrelationMode::StationSeparation: return "station-separation";
        case CorrelationMode::Independent: return "independent";
    }
    return "unknown";
}

CorrelationMode correlation_mode_from_string(const std::string& s) {
    if (s == "epicentral-difference") return CorrelationMode::EpicentralDifference;
    if (s == "station-separation") return CorrelationMode::StationSeparation;
    if (s == "independent") return CorrelationMode::Independent;
    throw InputError("unknown correlation mode: " + s);
}

ModelBundle build_travel_time_bundle(const TravelTimeFitSettings& s, std::uint64_t seed) {
    ModelBundle bundle;
    Ensemble ens = generate_ensemble(s.ensemble, seed);
    const FitGrid grid = FitGrid::uniform(s.fit_domain, s.delta_step_km, s.depth_step_km);
    SurrogateFit fit = fit_surrogates(ens, grid, s.sigma_floor);
    bundle.mean_tt = std::move(fit.mean);
    bundle.sigma_tt = std::move(fit.sigma);
    bundle.diagnostics.sigma_rms_residual = fit.sigma_rms_residual;

    // Station distances start one spacing away from the source: at zero distance
    // and depth every member predicts the same time and the correlation is undefined.
    std::vector<double> deltas;
    for (double d = std::max(s.fit_domain.delta_min, s.correlation_spacing_km); d <= s.fit_domain.delta_max + 1e-9;
         d += s.correlation_spacing_km) {
        deltas.push_back(d);
    }
    std::vector<double> depths;
    const std::size_t nd = std::max<std::size_t>(s.correlation_depths, 1);
    for (std::size_t i = 0; i < nd; ++i) {
        depths.push_back(nd == 1 ? s.fit_domain.depth_min
                                 : s.fit_domain.depth_min + (s.fit_domain.depth_max - s.fit_domain.depth_min) *
                                                                static_cast<double>(i) / static_cast<double>(nd - 1));
    }
    const Eigen::MatrixXd gamma = empirical_correlation(ens, deltas, depths);
    bundle.correlation = fit_kernel_length(gamma, deltas);
    bundle.diagnostics.fitted_length_scale_km = bundle.correlation.length_scale_km;
    bundle.ensemble = std::move(ens);
    return bundle;
}

json bundle_to_json(const ModelBundle& b) {
    json j;
    j["format"] = "netoed-model-bundle";
    j["version"] = ModelBundle::kFormatVersion;
    j["detection"] = {{"alpha", b.detection.alpha},
                      {"beta", b.detection.beta},
                      {"gamma_m", b.detection.gamma_m},
                      {"delta0", b.detection.delta0}};
    const FitGrid& g = b.mean_tt.grid();
    j["mean_travel_time"] = {{"deltas_km", g.deltas}, {"depths_km", g.depths}, {"table_s", b.mean_tt.table()}};
    const FitDomain& d = b.sigma_tt.domain();
    j["sigma_travel_time"] = {{"degree", SigmaSurrogate::kDegree},
                              {"coeffs", b.sigma_tt.coeffs()},
                              {"floor_s", b.sigma_tt.floor()},
                              {"fit_domain",
                               {{"delta_km", {d.delta_min, d.delta_max}}, {"depth_km", {d.depth_min, d.depth_max}}}}};
    j["correlation"] = {{"length_scale_km", b.correlation.length_scale_km}, {"mode", to_string(b.correlation.mode)}};
    j["noise"] = {{"snr", {{"a", b.snr.a}, {"b", b.snr.b}, {"c", b.snr.c}}},
                  {"pick",
                   {{"sigma0", b.pick.sigma0}, {"shrink", b.pick.shrink}, {"t_L", b.pick.t_low}, {"t_U", b.pick.t_high}}},
                  {"nugget_s2", b.nugget}};
    j["likelihood"] = {{"use_detections", b.use_detections}, {"use_arrivals", b.use_arrivals}};
    if (b.ensemble) {
        json profiles = json::array();
        for (const auto& p : b.ensemble->profiles) {
            json layers = json::array();
            for (const auto& l : p.layers) layers.push_back({{"thickness_km", l.thickness}, {"vp", l.vp}});
            profiles.push_back({{"layers", layers}, {"halfspace_vp", p.halfspace_vp}, {"max_depth_km", p.max_depth}});
        }
        j["ensemble"] = profiles;
    }
    j["diagnostics"] = {{"sigma_rms_residual_s", b.diagnostics.sigma_rms_residual},
                        {"fitted_length_scale_km", b.diagnostics.fitted_length_scale_km},
                        {"detection_loss", b.diagnostics.detection_loss},
                        {"detection_iterations", b.diagnostics.detection_iterations}};
    return j;
}

ModelBundle bundle_from_json(const json& j) {
    try {
        if (j.value("format", std::string()) != "netoed-model-bundle") throw InputError("bundle: not a model bundle file");
        if (j.at("version").get<int>() != ModelBundle::kFormatVersion) throw InputError("bundle: unsupported version");
        ModelBundle b;
        const auto& det = j.at("detection");
        b.detection = {det.at("alpha"), det.at("beta"), det.at("gamma_m"), det.at("delta0")};
        const auto& mt = j.at("mean_travel_time");
        FitGrid grid{mt.at("deltas_km").get<std::vector<double>>(), mt.at("depths_km").get<std::vector<double>>()};
        b.mean_tt = MeanSurrogate(std::move(grid), mt.at("table_s").get<std::vector<double>>());
        const auto& st = j.at("sigma_travel_time");
        if (st.at("degree").get<int>() != SigmaSurrogate::kDegree) throw InputError("bundle: sigma polynomial degree must be 5");
        const auto dr = st.at("fit_domain").at("delta_km").get<std::vector<double>>();
        const auto xr = st.at("fit_domain").at("depth_km").get<std::vector<double>>();
        if (dr.size() != 2 || xr.size() != 2) throw InputError("bundle: malformed fit_domain");
        b.sigma_tt = SigmaSurrogate(st.at("coeffs").get<std::vector<double>>(), FitDomain{dr[0], dr[1], xr[0], xr[1]},
                                    st.at("floor_s").get<double>());
        const auto& c = j.at("correlation");
        b.correlation = {c.at("length_scale_km").get<double>(), correlation_mode_from_string(c.at("mode"))};
        if (j.contains("noise")) {
            const auto& n = j.at("noise");
            b.snr = {n.at("snr").at("a"), n.at("snr").at("b"), n.at("snr").at("c")};
            const auto& p = n.at("pick");
            b.pick = {p.at("sigma0"), p.at("shrink"), p.at("t_L"), p.at("t_U")};
            b.nugget = n.at("nugget_s2");
        }
        if (j.contains("likelihood")) {
            b.use_detections = j.at("likelihood").at("use_detections");
            b.use_arrivals = j.at("likelihood").at("use_arrivals");
        }
        if (j.contains("ensemble")) {
            Ensemble ens;
            for (const auto& pj : j.at("ensemble")) {
                VelocityProfile p;
                for (const auto& lj : pj.at("layers")) p.layers.push_back({lj.at("thickness_km"), lj.at("vp")});
                p.halfspace_vp = pj.at("halfspace_vp");
                p.max_depth = pj.value("max_depth_km", 700.0);
                ens.profiles.push_back(std::move(p));
            }
            b.ensemble = std::move(ens);
        }
        if (j.contains("diagnostics")) {
            const auto& dj = j.at("diagnostics");
            b.diagnostics.sigma_rms_residual = dj.value("sigma_rms_residual_s", 0.0);
            b.diagnostics.fitted_length_scale_km = dj.value("fitted_length_scale_km", 0.0);
            b.diagnostics.detection_loss = dj.value("detection_loss", 0.0);
            b.diagnostics.detection_iterations = dj.value("detection_iterations", 0);
        }
        if (!(b.correlation.length_scale_km > 0)) throw InputError("bundle: length scale must be positive");
        b.pick.validate();
        return b;
    } catch (const json::exception& e) {
        throw InputError(std::string("bundle: ") + e.what());
    }
}

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle, const std::string& provenance) {
    json j = bundle_to_json(bundle);
    if (!provenance.empty()) j["provenance"] = provenance;
    std::ofstream out(path);
    if (!out) throw InputError("cannot write bundle file: " + path.string());
    out << j.dump(2) << '\n';
}

ModelBundle load_bundle(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open bundle file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InputError("bundle " + path.string() + ": " + e.what());
    }
    return bundle_from_json(j);
}

}  // namespace netoed
