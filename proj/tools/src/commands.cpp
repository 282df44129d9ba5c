#include "commands.hpp"

#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include <netoed/csv.hpp>
#include <netoed/detection.hpp>
#include <netoed/eig.hpp>
#include <netoed/error.hpp>
#include <netoed/optimize.hpp>
#include <netoed/synth.hpp>

#include "config.hpp"

namespace netoed::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Context {
    RunConfig cfg;
    std::string hash;
    fs::path out_dir;
};

Context load_context(const Options& opt) {
    if (opt.config.empty()) throw InputError("--config is required");
    Context c{load_config(opt.config), {}, {}};
    if (opt.seed) {
        c.cfg.seed = *opt.seed;
        c.cfg.source["seed"] = *opt.seed;
    }
    c.hash = config_hash(c.cfg);
    c.out_dir = opt.out ? *opt.out : c.cfg.output_dir;
    std::error_code ec;
    fs::create_directories(c.out_dir, ec);
    if (ec) throw InputError("cannot create output directory " + c.out_dir.string() + ": " + ec.message());
    return c;
}

std::vector<std::string> provenance(const Context& c, const char* command) {
    return {std::string("netoed ") + NETOED_VERSION + " " + command, "config_hash " + c.hash,
            "seed " + std::to_string(c.cfg.seed)};
}

void stamp(json& j, const Context& c) {
    j["tool_version"] = NETOED_VERSION;
    j["config_hash"] = c.hash;
    j["seed"] = c.cfg.seed;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write " + path.string());
    return f;
}

ModelBundle obtain_bundle(const Options& opt, const Context& c, std::ostream& err) {
    ModelBundle b;
    if (opt.bundle) {
        b = load_bundle(*opt.bundle);
    } else {
        err << "note: no --bundle given; fitting travel-time surrogates from the configured ensemble\n";
        b = build_travel_time_bundle(c.cfg.fit.travel_time, c.cfg.seed);
    }
    apply_overrides(c.cfg, b);
    return b;
}

Event parse_event(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string field;
    CsvReader dummy(ss, "--event");
    while (std::getline(ss, field, ',')) v.push_back(dummy.to_double(field));
    if (v.size() != 4) throw InputError("--event expects lat,lon,depth_km,mag");
    return Event{{v[0], v[1]}, v[2], v[3]};
}

}  // namespace

int cmd_fit(const Options& opt, std::ostream& out, std::ostream&) {
    const Context c = load_context(opt);
    ModelBundle b = build_travel_time_bundle(c.cfg.fit.travel_time, c.cfg.seed);
    if (opt.catalog) {
        const auto rows = read_catalog_csv(*opt.catalog);
        const DetectionFit fit = fit_detection_model(rows, c.cfg.fit.detection_weight);
        b.detection = fit.model;
        b.diagnostics.detection_loss = fit.loss;
        b.diagnostics.detection_iterations = fit.iterations;
        out << "detection rows " << rows.size() << " iterations " << fit.iterations << " loss "
            << format_double(fit.loss) << '\n';
    }
    apply_overrides(c.cfg, b);
    out << "detection alpha " << format_double(b.detection.alpha) << " beta " << format_double(b.detection.beta)
        << " gamma " << format_double(b.detection.gamma_m) << " delta " << format_double(b.detection.delta0) << '\n';
    out << "sigma_rms_residual_s " << format_double(b.diagnostics.sigma_rms_residual) << '\n';
    out << "length_scale_km " << format_double(b.diagnostics.fitted_length_scale_km) << '\n';
    const fs::path path = opt.bundle ? *opt.bundle : c.out_dir / "bundle.json";
    save_bundle(path, b, "netoed " NETOED_VERSION " fit; config_hash " + c.hash);
    out << "wrote " << path.string() << '\n';
    return kOk;
}

int cmd_analyze(const Options& opt, std::ostream& out, std::ostream& err) {
    const Context c = load_context(opt);
    const ModelBundle b = obtain_bundle(opt, c, err);
    const WeightedEventSet support = build_support(c.cfg.prior, c.cfg.eig.n_events, c.cfg.seed);
    EigSettings es;
    es.n_realizations = c.cfg.eig.n_realizations;
    es.seed = c.cfg.seed;
    const EigReport report = eig_total(support, c.cfg.network, b, es);

    const auto rows = sensitivity_map(report);
    const auto comments = provenance(c, "analyze");
    {
        auto f = open_output(c.out_dir / "sensitivity.csv");
        write_sensitivity_csv(f, rows, comments);
    }
    json j = report_to_json(report);
    stamp(j, c);
    open_output(c.out_dir / "eig_report.json") << j.dump(2) << '\n';

    if (report.skipped * 100 > report.datasets) {
        err << "warning: " << report.skipped << " of " << report.datasets
            << " datasets had no posterior mass on the support and were skipped\n";
    }
    if (report.coarse_grid_warning()) {
        err << "warning: a posterior placed " << format_double(report.max_posterior_mass)
            << " of its mass on one support event; the event grid may be too coarse\n";
    }
    out << "total_eig_nats " << format_double(report.total_eig) << " mc_se_nats "
        << format_double(report.total_std_error) << '\n';
    return kOk;
}

int cmd_optimize(const Options& opt, std::ostream& out, std::ostream& err) {
    const Context c = load_context(opt);
    const auto& oc = c.cfg.optimize;
    OptimizationTrace trace;
    SensorNetwork net = c.cfg.network;
    if (oc.k > 0) {
        const ModelBundle b = obtain_bundle(opt, c, err);
        const WeightedEventSet support = build_support(c.cfg.prior, c.cfg.eig.n_events, c.cfg.seed);
        const PlacementRegion region =
            oc.region ? PlacementRegion(c.cfg.domain, *oc.region) : PlacementRegion(c.cfg.domain);
        GreedySettings gs;
        gs.budget = oc.budget;
        gs.n_init = oc.n_init;
        gs.proposal = oc.proposal;
        gs.eig.n_realizations = c.cfg.eig.n_realizations;
        gs.eig.seed = c.cfg.seed;
        gs.new_station_snr_offset = oc.snr_offset;
        gs.seed = c.cfg.seed;
        PlacementResult res = greedy_place(c.cfg.network, oc.k, region, support, b, gs);
        net = std::move(res.network);
        trace = std::move(res.trace);
    }
    json j = network_to_json(net);
    stamp(j, c);
    open_output(c.out_dir / "network.json") << j.dump(2) << '\n';
    {
        auto f = open_output(c.out_dir / "trace.csv");
        write_trace_csv(f, trace, provenance(c, "optimize"));
    }
    out << "initial_eig_nats " << format_double(trace.initial_eig) << '\n';
    for (const auto& s : trace.steps) {
        out << "sensor " << s.sensor_idx << " lat " << format_double(s.loc.lat) << " lon " << format_double(s.loc.lon)
            << " eig_nats " << format_double(s.eig) << " mc_se_nats " << format_double(s.mc_std_error) << '\n';
    }
    return kOk;
}

int cmd_synth(const Options& opt, std::ostream& out, std::ostream& err) {
    const Context c = load_context(opt);
    if (!opt.event) throw InputError("synth requires --event lat,lon,depth_km,mag");
    const Event e = parse_event(*opt.event);
    if (!c.cfg.domain.contains(e)) throw InputError("--event lies outside the configured domain");
    const ModelBundle b = obtain_bundle(opt, c, err);
    const auto datasets = synth_dataset(e, c.cfg.network, b, c.cfg.eig.n_realizations, c.cfg.seed);
    const auto comments = provenance(c, "synth");
    for (std::size_t r = 0; r < datasets.size(); ++r) {
        char name[32];
        std::snprintf(name, sizeof name, "synth_%04zu.csv", r);
        auto f = open_output(c.out_dir / name);
        for (const auto& line : comments) f << "# " << line << '\n';
        f << "# replicate " << r << '\n';
        f << "station_idx,detected,arrival_s\n";
        const auto& ds = datasets[r];
        std::size_t a = 0;
        for (std::size_t i = 0; i < ds.detections.size(); ++i) {
            const bool hit = ds.detections.flags[i] != 0;
            f << i << ',' << (hit ? 1 : 0) << ',';
            if (hit && a < ds.arrivals.size()) f << format_double(ds.arrivals.times[a++]);
            f << '\n';
        }
    }
    out << "wrote " << datasets.size() << " datasets to " << c.out_dir.string() << '\n';
    return kOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Seismic network design by expected information gain", "netoed"};
    app.set_version_flag("--version", std::string(NETOED_VERSION));
    app.require_subcommand(1);

    Options opt;
    std::string config, bundle, out_dir, catalog, event;
    std::uint64_t seed = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "run configuration (JSON)")->required();
        sub->add_option("--bundle", bundle, "model bundle (JSON)");
        sub->add_option("--seed", seed, "override the configured seed");
        sub->add_option("--out", out_dir, "output directory");
    };
    auto* fit = app.add_subcommand("fit", "fit detection model, travel-time surrogates and kernel length");
    add_common(fit);
    fit->add_option("--catalog", catalog, "detection catalogue CSV");
    auto* analyze = app.add_subcommand("analyze", "expected information gain of the configured network");
    add_common(analyze);
    auto* optimize = app.add_subcommand("optimize", "greedy placement of additional sensors");
    add_common(optimize);
    auto* synth = app.add_subcommand("synth", "synthesize datasets for one event");
    add_common(synth);
    synth->add_option("--event", event, "lat,lon,depth_km,mag")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << NETOED_VERSION << '\n';
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }

    opt.config = config;
    if (!bundle.empty()) opt.bundle = bundle;
    if (!out_dir.empty()) opt.out = out_dir;
    if (!catalog.empty()) opt.catalog = catalog;
    if (!event.empty()) opt.event = event;
    for (auto* sub : {fit, analyze, optimize, synth}) {
        if (sub->get_option("--seed")->count() > 0) opt.seed = seed;
    }

    std::function<int(const Options&, std::ostream&, std::ostream&)> cmd;
    if (*fit) cmd = cmd_fit;
    if (*analyze) cmd = cmd_analyze;
    if (*optimize) cmd = cmd_optimize;
    if (*synth) cmd = cmd_synth;
    try {
        return cmd(opt, out, err);
    } catch (const InfeasibleRegionError& e) {
        err << "error: " << e.what() << '\n';
        return kInfeasible;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"netoed"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace netoed::cli
