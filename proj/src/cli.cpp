#include "oceanfc/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>

#include "oceanfc/calendar.hpp"
#include "oceanfc/config.hpp"
#include "oceanfc/diagnostics.hpp"
#include "oceanfc/error.hpp"
#include "oceanfc/io.hpp"
#include "oceanfc/numeric.hpp"
#include "oceanfc/objective.hpp"
#include "oceanfc/propagators.hpp"
#include "oceanfc/rollout.hpp"
#include "oceanfc/synth.hpp"
#include "oceanfc/train.hpp"

namespace oceanfc {

namespace {

const std::vector<std::string> kArchKeys{"patch",          "embed_dim",        "window", "encoder_depths",
                                         "bottleneck_depth", "heads", "mlp_ratio", "pos_embed", "seed"};

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

std::string flag_name(const std::string& key) {
    std::string s = key;
    std::replace(s.begin(), s.end(), '_', '-');
    return "--" + s;
}

fs::path require_path(const RunConfig& c, const std::string& key) {
    if (!c.has(key)) config_error("missing required " + flag_name(key));
    return c.get(key);
}

fs::path prepare_out(const RunConfig& c) {
    const fs::path out = require_path(c, "out");
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + out.string() + ": " + ec.message());
    c.write(out / "run_config.txt");
    return out;
}

int positive(const RunConfig& c, const std::string& key) {
    const auto v = c.get_int(key);
    if (v < 1) config_error(flag_name(key) + " must be at least 1");
    return static_cast<int>(v);
}

std::array<int, 3> triple(const RunConfig& c, const std::string& key) {
    const auto v = c.get_ints(key);
    if (v.size() != 3) config_error(flag_name(key) + " needs three comma-separated integers");
    return {static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2])};
}

Swin3dConfig swin_config(const RunConfig& c) {
    Swin3dConfig s;
    s.patch = triple(c, "patch");
    s.window = triple(c, "window");
    s.embed_dim = positive(c, "embed_dim");
    s.encoder_depths.clear();
    for (auto d : c.get_ints("encoder_depths")) s.encoder_depths.push_back(static_cast<int>(d));
    s.bottleneck_depth = static_cast<int>(c.get_int("bottleneck_depth"));
    s.heads = positive(c, "heads");
    s.mlp_ratio = positive(c, "mlp_ratio");
    s.pos_embed = c.get_bool("pos_embed");
    s.seed = c.get_u64("seed");
    return s;
}

TrainConfig train_config(const RunConfig& c) {
    TrainConfig t;
    t.lr = c.get_double("lr");
    t.lr_min = c.get_double("lr_min");
    t.cosine_decay = c.get_bool("cosine_decay");
    t.batch_size = positive(c, "batch_size");
    t.stage1_epochs = static_cast<int>(c.get_int("stage1_epochs"));
    t.stage2_epochs = static_cast<int>(c.get_int("stage2_epochs"));
    t.stage1_days = positive(c, "stage1_days");
    t.clip_norm = c.get_double("clip_norm");
    t.seed = c.get_u64("seed");
    t.threads = positive(c, "threads");
    try {
        t.validate();
    } catch (const Error& e) {
        config_error(e.what());
    }
    return t;
}

Grid3DSpec synth_grid(const RunConfig& c) {
    Grid3DSpec g;
    g.n_var = kOceanVars;
    g.n_lat = positive(c, "n_lat");
    g.n_lon = positive(c, "n_lon");
    const double lat_max = c.get_double("lat_max");
    if (!(lat_max > 0 && lat_max <= 90)) config_error("--lat-max must lie in (0, 90]");
    g.d_lat = 2.0 * lat_max / g.n_lat;
    g.lat0 = -lat_max + 0.5 * g.d_lat;
    g.d_lon = 360.0 / g.n_lon;
    g.lon0 = 0.0;
    g.depths = c.get_doubles("depths");
    g.n_depth = static_cast<int>(g.depths.size());
    try {
        g.validate();
    } catch (const Error& e) {
        config_error(e.what());
    }
    return g;
}

struct Dataset {
    DatasetManifest manifest;
    LandSeaMask mask;
    DatasetSplits splits;
};

Dataset load_dataset(const RunConfig& c) {
    Dataset d;
    d.manifest = read_manifest(require_path(c, "data"));
    if (d.manifest.empty()) throw Error(ErrorCode::EmptyManifest, "manifest lists no days");
    if (!d.manifest.train_end_day || !d.manifest.valid_end_day)
        config_error("manifest does not record train_end_day and valid_end_day");
    d.splits = split_dataset(d.manifest, *d.manifest.train_end_day, *d.manifest.valid_end_day);
    if (!d.manifest.mask.empty()) {
        d.mask = read_mask(d.manifest.mask);
    } else {
        OceanState first = read_ocean(d.manifest.entries.front().ocean);
        d.mask = LandSeaMask::all_ocean(first.spec);
    }
    return d;
}

NormStats stats_for(const RunConfig& c, const Dataset& d) {
    if (c.has("stats")) return read_norm_stats(c.get("stats"));
    return compute_norm_stats(d.splits.train, d.mask);
}

Climatology climatology_for(const RunConfig& c, const Dataset& d) {
    if (c.has("clim")) return read_climatology(c.get("clim"));
    const auto window = c.get_int("clim_window");
    if (window < 1 || window % 2 == 0) config_error("--clim-window must be a positive odd number");
    return build_climatology(d.splits.train, d.mask, static_cast<int>(window));
}

void print_report_files(const std::vector<fs::path>& files) {
    for (const auto& f : files) std::cout << "  " << f.generic_string() << '\n';
}

// ---------------------------------------------------------------------------

int cmd_synth(const RunConfig& c) {
    SynthParams p = default_synth_params();
    p.grid = synth_grid(c);
    p.anomaly_amplitude = c.get_double("anomaly_amplitude");
    const double period = c.get_double("anomaly_period");
    if (!(period > 0)) config_error("--anomaly-period must be positive");
    p.phase_speed = p.wavelength / period;
    p.psi0 = c.get_double("psi0");
    p.current_seasonality = c.get_double("current_seasonality");
    p.noise_std = c.get_double("noise_std");
    p.seed = c.get_u64("seed");
    try {
        p.validate();
    } catch (const Error& e) {
        config_error(e.what());
    }
    const int days = positive(c, "days");
    const int train_days = positive(c, "train_days");
    const int valid_days = positive(c, "valid_days");
    if (train_days + valid_days >= days) config_error("--train-days plus --valid-days must leave test days");
    const std::int64_t first = c.get_int("first_day");
    const fs::path out = prepare_out(c);
    const LandSeaMask mask = default_synth_mask(p.grid);
    const auto m = gen_dataset(p, first, days, mask, out, first + train_days - 1, first + train_days + valid_days - 1);
    std::cout << "wrote " << m.size() << " days to " << out.generic_string() << '\n';
    return kExitOk;
}

int cmd_stats(const RunConfig& c) {
    const Dataset d = load_dataset(c);
    const fs::path out = prepare_out(c);
    const NormStats s = compute_norm_stats(d.splits.train, d.mask);
    write_norm_stats(out / "norm_stats.csv", s);
    for (const auto& slice : s.degenerate) std::cout << "degenerate variance: " << slice << " (std set to 1)\n";
    std::cout << "wrote " << (out / "norm_stats.csv").generic_string() << '\n';
    return kExitOk;
}

int cmd_climatology(const RunConfig& c) {
    const Dataset d = load_dataset(c);
    const auto window = c.get_int("clim_window");
    if (window < 1 || window % 2 == 0) config_error("--clim-window must be a positive odd number");
    const fs::path out = prepare_out(c);
    const Climatology clim = build_climatology(d.splits.train, d.mask, static_cast<int>(window));
    write_climatology(out, clim);
    int populated = 0;
    for (int n : clim.sample_count) populated += n > 0;
    std::cout << "climatology: " << populated << " populated slots of " << kClimatologySlots << '\n';
    return kExitOk;
}

int cmd_train(const RunConfig& c) {
    const int lead = static_cast<int>(c.get_int("lead"));
    if (lead < 1) config_error("--lead must be at least 1");
    const Swin3dConfig scfg = swin_config(c);
    const TrainConfig tcfg = train_config(c);
    const Dataset d = load_dataset(c);
    const fs::path out = prepare_out(c);
    const NormStats stats = stats_for(c, d);
    const TrainingSeries series = load_series(d.splits.train);
    const Swin3dModel model(scfg, series.ocean.front().spec);
    std::cout << "parameters: " << model.param_count() << '\n';
    const TrainResult res = train(model, tcfg, series, d.mask, stats, lead, [](const TrainLogEntry& e) {
        std::cout << "epoch " << e.epoch << " stage " << e.stage << " loss " << format_double(e.loss) << std::endl;
    });
    const std::string stem = "fm" + std::to_string(lead);
    write_params(out / (stem + ".ogpw"), res.params);
    {
        RunConfig arch;
        for (const auto& k : kArchKeys) arch.set(k, c.get(k));
        std::ofstream a(out / (stem + ".arch.txt"), std::ios::trunc);
        if (!a) throw Error(ErrorCode::IoFailure, "cannot write architecture file");
        for (const auto& k : kArchKeys) a << k << " = " << arch.get(k) << '\n';
    }
    write_norm_stats(out / "norm_stats.csv", stats);
    write_train_log(out / "train_log.csv", res.log);
    std::cout << "wrote " << (out / (stem + ".ogpw")).generic_string() << '\n';
    return kExitOk;
}

struct LoadedModel {
    std::shared_ptr<const Swin3dModel> model;
    std::shared_ptr<const ParamSet> params;
    std::shared_ptr<const NormStats> stats;
};

LoadedModel load_model(const fs::path& params_path, const RunConfig& c, const Grid3DSpec& grid) {
    fs::path arch_path = params_path;
    arch_path.replace_extension(".arch.txt");
    RunConfig arch;
    if (fs::exists(arch_path)) arch.load_file(arch_path);
    else
        for (const auto& k : kArchKeys) arch.set(k, c.get(k));
    LoadedModel m;
    m.model = std::make_shared<const Swin3dModel>(swin_config(arch), grid);
    m.params = std::make_shared<const ParamSet>(read_params(params_path));
    if (m.params->count() != m.model->param_count())
        throw Error(ErrorCode::ConfigIncompatible, params_path.string() + " does not fit the configured architecture");
    const fs::path stats_path = c.has("stats") ? fs::path(c.get("stats")) : params_path.parent_path() / "norm_stats.csv";
    m.stats = std::make_shared<const NormStats>(read_norm_stats(stats_path));
    return m;
}

std::vector<std::int64_t> init_days_for(const RunConfig& c, const Dataset& d, int horizon) {
    std::vector<std::int64_t> days;
    if (c.get("init_days") == "test") {
        for (const auto& e : d.splits.test.entries)
            if (d.manifest.find(e.day - 1) && d.manifest.find(e.day + horizon)) days.push_back(e.day);
        if (days.empty()) throw Error(ErrorCode::InsufficientData, "test split too short for the horizon");
    } else {
        days = c.get_ints("init_days");
    }
    return days;
}

PropagatorSet build_propagators(const RunConfig& c, const Dataset& d, const Grid3DSpec& grid, int horizon) {
    const std::string kind = c.get("propagator");
    const int fm5_lead = positive(c, "fm5_lead");
    PropagatorSet props;
    if (kind == "persistence") {
        props["fm1"] = make_persistence(1, "fm1");
        props["fm5"] = make_persistence(fm5_lead, "fm5");
    } else if (kind == "advective") {
        AdvectionParams a;
        a.kappa = c.get_double("kappa");
        a.gamma = c.get_double("gamma");
        a.z_ref = c.get_double("z_ref");
        props["fm1"] = make_advective(d.mask, a, 1, "fm1");
        props["fm5"] = make_advective(d.mask, a, fm5_lead, "fm5");
    } else if (kind == "climatology") {
        auto clim = std::make_shared<const Climatology>(climatology_for(c, d));
        const double alpha = c.get_double("nudge_alpha");
        props["fm1"] = make_climatology_nudge(clim, alpha, 1, "fm1");
        props["fm5"] = make_climatology_nudge(clim, alpha, fm5_lead, "fm5");
    } else if (kind == "swin3d") {
        const fs::path fm1 = require_path(c, "fm1");
        const LoadedModel m1 = load_model(fm1, c, grid);
        props["fm1"] = make_swin3d(m1.model, m1.params, m1.stats, 1, "fm1");
        if (horizon > fm5_lead) {
            const LoadedModel m5 = load_model(require_path(c, "fm5"), c, grid);
            props["fm5"] = make_swin3d(m5.model, m5.params, m5.stats, fm5_lead, "fm5");
        }
    } else {
        config_error("--propagator must be swin3d, persistence, advective or climatology");
    }
    return props;
}

int cmd_forecast(const RunConfig& c) {
    const int horizon = static_cast<int>(c.get_int("horizon"));
    if (horizon < 1) config_error("--horizon must be at least 1");
    const Dataset d = load_dataset(c);
    const fs::path out = prepare_out(c);
    const Grid3DSpec grid = read_ocean(d.manifest.entries.front().ocean).spec;
    const PropagatorSet props = build_propagators(c, d, grid, horizon);
    const auto sched = plan_schedule(horizon, 1, positive(c, "fm5_lead"));
    const auto days = init_days_for(c, d, horizon);
    const auto runs = forecast_suite(d.manifest, days, props, sched, &d.mask);
    const auto files = write_forecasts(out, runs);
    std::cout << "wrote " << files.size() << " files for " << runs.size() << " initial days\n";
    return kExitOk;
}

std::vector<ForecastRun> load_runs(const RunConfig& c, const Dataset& d) {
    std::vector<ForecastRun> runs;
    auto truth_state = [&](std::int64_t day) {
        const ManifestEntry* e = d.manifest.find(day);
        if (!e) throw Error(ErrorCode::InsufficientData, "manifest lacks day " + std::to_string(day));
        OceanState s = read_ocean(e->ocean);
        s.time = day;
        apply_mask(s, d.mask);
        return s;
    };
    const std::string src = require_path(c, "forecasts").string();
    if (src == "truth") {
        const int horizon = positive(c, "horizon");
        for (auto day : init_days_for(c, d, horizon)) {
            ForecastRun r;
            r.init_day = day;
            r.forecast.init_day = day;
            for (int l = 0; l <= horizon; ++l) {
                r.truth.emplace(l, truth_state(day + l));
                r.forecast.states.emplace(l, r.truth.at(l));
                r.forecast.provenance.emplace(l, "truth");
            }
            runs.push_back(std::move(r));
        }
        return runs;
    }
    std::map<std::int64_t, ForecastRun> by_init;
    for (const auto& f : read_forecast_manifest(src)) {
        auto& r = by_init[f.init_day];
        r.init_day = f.init_day;
        r.forecast.init_day = f.init_day;
        OceanState s = read_ocean(f.file);
        apply_mask(s, d.mask);
        r.forecast.states.emplace(f.lead, std::move(s));
        r.forecast.provenance.emplace(f.lead, f.source);
    }
    if (by_init.empty()) throw Error(ErrorCode::InsufficientData, "forecast directory lists no forecasts");
    for (auto& [day, r] : by_init) {
        r.forecast.states.emplace(0, truth_state(day));
        for (const auto& [lead, st] : r.forecast.states) r.truth.emplace(lead, truth_state(day + lead));
        runs.push_back(std::move(r));
    }
    return runs;
}

std::vector<ForecastRun> persistence_runs(const std::vector<ForecastRun>& runs) {
    std::vector<ForecastRun> out;
    for (const auto& r : runs) {
        ForecastRun p;
        p.init_day = r.init_day;
        p.truth = r.truth;
        p.forecast.init_day = r.init_day;
        const OceanState& x0 = r.truth.at(0);
        for (const auto& [lead, st] : r.truth) {
            OceanState s = x0;
            s.time = x0.time + lead;
            p.forecast.states.emplace(lead, std::move(s));
            p.forecast.provenance.emplace(lead, "persistence");
        }
        out.push_back(std::move(p));
    }
    return out;
}

void write_comparison(const fs::path& path, const MetricReport& model, const MetricReport& base) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    out << "lead_days,variable,depth_m,model,persistence\n";
    for (const auto& c : model.curves) {
        if (c.family != "rmse") continue;
        auto b = std::find_if(base.curves.begin(), base.curves.end(), [&](const CurveMetric& o) {
            return o.family == c.family && o.variable == c.variable && o.depth_m == c.depth_m;
        });
        if (b == base.curves.end()) continue;
        for (std::size_t n = 0; n < c.x.size(); ++n) {
            auto it = std::find(b->x.begin(), b->x.end(), c.x[n]);
            if (it == b->x.end()) continue;
            out << format_double(c.x[n]) << ',' << c.variable << ',' << (c.depth_m ? format_double(*c.depth_m) : "all")
                << ',' << format_double(c.y[n]) << ',' << format_double(b->y[it - b->x.begin()]) << '\n';
        }
    }
}

int cmd_evaluate(const RunConfig& c) {
    const std::string against = c.get("against");
    if (against != "none" && against != "persistence") config_error("--against must be none or persistence");
    EvaluationOptions opt;
    opt.diag_lead = static_cast<int>(c.get_int("diag_lead"));
    opt.bins.bins = positive(c, "hist_bins");
    opt.bins.max = c.get_double("hist_max");
    opt.ohc_depth = c.get_double("ohc_depth");
    opt.rho = c.get_double("rho");
    opt.cp = c.get_double("cp");
    const Dataset d = load_dataset(c);
    require_path(c, "forecasts");
    const fs::path out = prepare_out(c);
    const Climatology clim = climatology_for(c, d);
    const auto runs = load_runs(c, d);
    const MetricReport rep = evaluate_runs(runs, d.mask, &clim, opt);
    std::cout << "report:\n";
    print_report_files(write_report(rep, out));
    if (against == "persistence") {
        const MetricReport base = evaluate_runs(persistence_runs(runs), d.mask, &clim, opt);
        print_report_files(write_report(base, out / "persistence"));
        write_comparison(out / "rmse_comparison.csv", rep, base);
        std::cout << "  " << (out / "rmse_comparison.csv").generic_string() << '\n';
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    using Handler = int (*)(const RunConfig&);
    const std::vector<std::pair<std::string, Handler>> commands{
        {"synth", cmd_synth},       {"stats", cmd_stats},       {"climatology", cmd_climatology},
        {"train", cmd_train},       {"forecast", cmd_forecast}, {"evaluate", cmd_evaluate},
    };
    const std::map<std::string, std::string> descriptions{
        {"synth", "generate the synthetic dataset"},
        {"stats", "normalisation statistics from the training split"},
        {"climatology", "calendar-slot climatology from the training split"},
        {"train", "train a shifted-window propagator"},
        {"forecast", "roll out forecasts from test-split initial days"},
        {"evaluate", "verify forecasts and write a metric report"},
    };

    CLI::App app{"Ocean-state increment forecasting toolkit", "oceanfc"};
    app.require_subcommand(1);
    std::string config_path;
    std::map<std::string, std::map<std::string, std::string>> flag_values;
    for (const auto& [name, handler] : commands) {
        CLI::App* sub = app.add_subcommand(name, descriptions.at(name));
        sub->add_option("--config", config_path, "key = value configuration file");
        for (const auto& key : config_registry())
            sub->add_option(flag_name(key.name), flag_values[name][key.name], key.help)
                ->default_str(key.default_value);
    }

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        std::cerr << app.help();
        return kExitConfig;
    }

    for (const auto& [name, handler] : commands) {
        CLI::App* sub = app.get_subcommand(name);
        if (!sub->parsed()) continue;
        try {
            RunConfig cfg;
            if (!config_path.empty()) cfg.load_file(config_path);
            for (const auto& key : config_registry())
                if (sub->count(flag_name(key.name)) > 0) cfg.set(key.name, flag_values[name][key.name]);
            return handler(cfg);
        } catch (const Error& e) {
            std::cerr << "error: " << e.what() << '\n';
            if (e.code() == ErrorCode::ConfigError) {
                std::cerr << sub->help();
                return kExitConfig;
            }
            return kExitRuntime;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kExitRuntime;
        }
    }
    return kExitConfig;
}

}  // namespace oceanfc
