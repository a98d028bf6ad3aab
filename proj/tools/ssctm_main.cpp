#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "ssctm/config.hpp"
#include "ssctm/design.hpp"
#include "ssctm/errors.hpp"
#include "ssctm/manifest.hpp"
#include "ssctm/markov.hpp"

namespace fs = std::filesystem;
using namespace ssctm;

namespace {

std::string fmt(double x) {
    char buf[64];
    snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

GridRange parse_range(const std::string& s) {
    GridRange r;
    if (sscanf(s.c_str(), "%lf:%lf:%lf", &r.lo, &r.hi, &r.step) != 3)
        throw ValidationError("grid", "expected lo:hi:step, got '" + s + "'");
    return r;
}

PcWeightMode parse_pc_weights(const std::string& s) {
    if (s == "anchored") return PcWeightMode::LowerAnchored;
    if (s == "printed") return PcWeightMode::PrintedClamped;
    if (s == "printed-raw") return PcWeightMode::PrintedRaw;
    throw ValidationError("pc-weights", "expected anchored|printed|printed-raw");
}

simd::Backend parse_backend(const std::string& s) {
    if (s == "auto") return simd::Backend::Auto;
    if (s == "scalar") return simd::Backend::Scalar;
    if (s == "native") return simd::Backend::Simd;
    throw ValidationError("simd", "expected auto|scalar|native");
}

std::string hour_label(double start_hr, int idx) {
    const int a = static_cast<int>(start_hr) + idx;
    char buf[32];
    snprintf(buf, sizeof buf, "%02d:00-%02d:00", a, a + 1);
    return buf;
}

struct Run {
    std::string outdir;
    RunManifest manifest;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    std::ofstream open(const std::string& name) {
        fs::create_directories(outdir);
        std::ofstream f(fs::path(outdir) / name, std::ios::binary);
        if (!f) throw ValidationError("out-dir", "cannot write " + name);
        return f;
    }
    void record(const std::string& name) {
        const std::string path = (fs::path(outdir) / name).string();
        RunManifest::OutputFile of;
        of.name = name;
        of.bytes = fs::file_size(path);
        of.fnv1a64 = fnv1a64_file(path);
        manifest.outputs.push_back(of);
    }
    void finish() {
        manifest.runtime_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_manifest(manifest, (fs::path(outdir) / "manifest.json").string());
    }
};

using Options = std::map<std::string, std::string>;

double opt_num(const Options& o, const std::string& key, double fallback) {
    auto it = o.find(key);
    return it == o.end() ? fallback : std::stod(it->second);
}

std::string opt_str(const Options& o, const std::string& key, const std::string& fallback) {
    auto it = o.find(key);
    return it == o.end() ? fallback : it->second;
}

Strategy strategy_from(const std::string& name, const LoadedConfig& lc,
                       const GridSpec& grid, const DesignOptions& dopts) {
    const int K = lc.highway.num_cells();
    if (name == "none") return Strategy::none();
    if (name == "policy" || name == "affine") {
        if (!lc.policy) throw ValidationError("strategy", "config has no [policy]");
        Strategy s = Strategy::affine(*lc.policy);
        s.metered.assign(lc.metered.begin(), lc.metered.end());
        return s;
    }
    if (name == "alinea") {
        if (!lc.alinea) throw ValidationError("strategy", "config has no alinea baseline");
        Strategy s;
        s.kind = Strategy::Alinea;
        s.alinea = *lc.alinea;
        s.metered.assign(lc.metered.begin(), lc.metered.end());
        return s;
    }
    if (name == "metaline") {
        if (!lc.metaline) throw ValidationError("strategy", "config has no metaline baseline");
        Strategy s;
        s.kind = Strategy::Metaline;
        s.metaline = *lc.metaline;
        s.metered.assign(lc.metered.begin(), lc.metered.end());
        return s;
    }
    if (name == "local") {
        const HighwayConfig hw = peak_demand_highway(lc);
        const DesignResult r = K == 2 ? design_localized(hw, lc.markov, grid, dopts)
                                      : design_localized_network(hw, lc.markov, grid,
                                                                 lc.metered, dopts);
        Strategy s = Strategy::affine(r.policy);
        s.metered.assign(lc.metered.begin(), lc.metered.end());
        return s;
    }
    if (name == "partial") {
        const HighwayConfig hw = peak_demand_highway(lc);
        DesignResult r;
        try {
            r = design_partial(hw, lc.markov, grid, dopts);
        } catch (const SubproblemInfeasible&) {
            r = design_partial_throughput(hw, lc.markov, grid, dopts);
        }
        Strategy s = Strategy::affine(r.policy);
        s.metered.assign(lc.metered.begin(), lc.metered.end());
        return s;
    }
    if (name == "full") {
        const DesignResult r = design_full(peak_demand_highway(lc), lc.markov, grid, dopts);
        Strategy s = Strategy::affine(r.policy);
        s.metered.assign(lc.metered.begin(), lc.metered.end());
        return s;
    }
    throw ValidationError("strategy", "unknown strategy '" + name + "'");
}

GridSpec grid_from(const Options& o) {
    GridSpec g = GridSpec::defaults();
    if (o.count("grid-u")) g.u = {parse_range(o.at("grid-u"))};
    if (o.count("grid-kappa")) g.kappa = {parse_range(o.at("grid-kappa"))};
    return g;
}

DesignOptions design_opts_from(const Options& o, const LoadedConfig& lc) {
    DesignOptions d;
    d.threads = static_cast<int>(opt_num(o, "threads", 1));
    d.drift.pc_weights = parse_pc_weights(opt_str(o, "pc-weights", "anchored"));
    d.metered = lc.metered;
    return d;
}

void write_metrics_csv(Run& run, const std::string& name, const Metrics& m,
                       double start_hr) {
    auto f = run.open(name);
    f << "hour,queue_mean_veh,vht_veh_hr\n";
    for (size_t h = 0; h < m.per_hour.size(); ++h)
        f << hour_label(start_hr, static_cast<int>(h)) << ","
          << fmt(m.per_hour[h].queue_mean) << "," << fmt(m.per_hour[h].vht) << "\n";
    f << "total," << fmt(m.time_avg_queue_veh) << "," << fmt(m.vht_veh_hr) << "\n";
    f.close();
    run.record(name);
}

int cmd_simulate(const Options& opts, const LoadedConfig& lc, Run& run) {
    SimConfig sim = lc.sim;
    sim.seed = static_cast<uint64_t>(opt_num(opts, "seed", static_cast<double>(sim.seed)));
    sim.horizon_steps =
        static_cast<int64_t>(opt_num(opts, "horizon", static_cast<double>(sim.horizon_steps)));
    validate_sim(lc.highway, lc.markov, sim);
    const Strategy strat = strategy_from(opt_str(opts, "strategy", "policy"), lc,
                                         grid_from(opts), design_opts_from(opts, lc));
    const Trajectory traj = simulate(strat, lc.highway, lc.markov, sim,
                                     parse_backend(opt_str(opts, "simd", "auto")));

    auto f = run.open("trajectory.csv");
    f << "step,mode";
    const int K = traj.K;
    for (int k = 1; k <= K; ++k) f << ",q_" << k;
    for (int k = 1; k <= K; ++k) f << ",n_" << k;
    f << "\n";
    for (int64_t t = 1; t <= traj.steps(); ++t) {
        f << t << "," << traj.modes[t];
        for (int k = 0; k < K; ++k) f << "," << fmt(traj.queues[t * K + k]);
        for (int k = 0; k < K; ++k) f << "," << fmt(traj.densities[t * K + k]);
        f << "\n";
    }
    f.close();
    run.record("trajectory.csv");

    if (opt_str(opts, "flows", "0") == "1") {
        auto g = run.open("flows.csv");
        g << "step";
        for (int k = 1; k <= K; ++k) g << ",r_" << k;
        for (int k = 1; k <= K; ++k) g << ",f_" << k;
        g << "\n";
        for (int64_t t = 0; t < traj.steps(); ++t) {
            g << (t + 1);
            for (int k = 0; k < K; ++k) g << "," << fmt(traj.inflows[t * K + k]);
            for (int k = 0; k < K; ++k) g << "," << fmt(traj.outflows[t * K + k]);
            g << "\n";
        }
        g.close();
        run.record("flows.csv");
    }

    write_metrics_csv(run, "metrics.csv", metrics_of(traj, lc.highway), lc.sim_start_hr);
    run.manifest.seeds = {sim.seed};
    return 0;
}

int cmd_drift(const Options& opts, const LoadedConfig& lc, Run& run) {
    if (!lc.policy) throw ValidationError("drift", "config has no [policy] section");
    const std::string scheme_s = opt_str(opts, "scheme", "local");
    DesignVariant scheme = DesignVariant::Localized;
    if (scheme_s == "full") scheme = DesignVariant::FullyCoordinated;
    else if (scheme_s == "partial") scheme = DesignVariant::PartiallyCoordinated;
    else if (scheme_s != "local") throw ValidationError("scheme", "expected local|full|partial");

    DriftOptions dopts;
    dopts.pc_weights = parse_pc_weights(opt_str(opts, "pc-weights", "anchored"));
    const DriftReport rep = mean_drift(scheme, lc.highway, lc.markov, *lc.policy, dopts);

    {
        auto f = run.open("drift_report.txt");
        f << "scheme: " << to_string(scheme) << "\n";
        f << "mean drift: " << fmt(rep.mean_drift) << " veh/hr\n";
        f << "verdict: " << (rep.stable ? "Stable" : "Unknown") << "\n";
        f << "binding buffer: " << rep.binding_buffer << "\n";
        f << "queue bound proxy (-1/mean drift, up to the criterion constant): "
          << fmt(rep.queue_bound_proxy) << "\n";
        for (size_t k = 0; k < rep.buffer_mean.size(); ++k)
            f << "buffer " << (k + 1) << " mean: " << fmt(rep.buffer_mean[k]) << "\n";
        f.close();
        run.record("drift_report.txt");
    }
    {
        auto f = run.open("drift_report.csv");
        const int K = lc.highway.num_cells();
        f << "buffer,mode,D";
        for (int k = 1; k <= K; ++k) f << ",argmax_q_" << k;
        for (int k = 1; k <= K; ++k) f << ",argmax_n_" << k;
        f << "\n";
        for (int k = 0; k < K; ++k)
            for (int s = 0; s < lc.markov.mode_count; ++s) {
                const DriftEntry& e = rep.per_buffer_mode[k][s];
                f << (k + 1) << "," << (s + 1) << "," << fmt(e.value);
                for (int j = 0; j < K; ++j) f << "," << fmt(e.argmax.queues_veh[j]);
                for (int j = 0; j < K; ++j)
                    f << "," << fmt(e.argmax.densities_veh_per_km[j]);
                f << "\n";
            }
        f.close();
        run.record("drift_report.csv");
    }

    if (opts.count("grid-u") || opts.count("grid-kappa")) {
        if (lc.highway.num_cells() != 2)
            throw TooLarge("drift surface export is defined for the two-cell section");
        DesignOptions d = design_opts_from(opts, lc);
        d.keep_surface = true;
        const DesignResult r = design_localized(lc.highway, lc.markov, grid_from(opts), d);
        auto f = run.open("drift_surface.csv");
        f << "u,kappa,mean_drift,feasible\n";
        for (const CandidatePoint& c : r.surface)
            f << fmt(c.u[0]) << "," << fmt(c.kappa[0]) << "," << fmt(c.objective) << ","
              << (c.feasible ? 1 : 0) << "\n";
        f.close();
        run.record("drift_surface.csv");
    }
    return 0;
}

int cmd_design(const Options& opts, const LoadedConfig& lc, Run& run) {
    const std::string mode = opt_str(opts, "mode", "local");
    const GridSpec grid = grid_from(opts);
    DesignOptions dopts = design_opts_from(opts, lc);
    dopts.keep_surface = opt_str(opts, "surface", "0") == "1";

    DesignResult r;
    const HighwayConfig hw = peak_demand_highway(lc);
    if (mode == "local") {
        r = hw.num_cells() == 2
                ? design_localized(hw, lc.markov, grid, dopts)
                : design_localized_network(hw, lc.markov, grid, lc.metered, dopts);
    } else if (mode == "local-throughput") {
        r = design_localized_throughput(hw, lc.markov, grid, dopts);
    } else if (mode == "full") {
        r = design_full(hw, lc.markov, grid, dopts);
    } else if (mode == "partial") {
        r = design_partial(hw, lc.markov, grid, dopts);
    } else {
        throw ValidationError("mode", "expected local|local-throughput|full|partial");
    }

    {
        auto f = run.open("design_policy.csv");
        f << "ramp,u_veh_per_hr,kappa_kmh\n";
        for (size_t i = 0; i < r.policy.u_veh_per_hr.size(); ++i)
            f << (i + 2) << "," << fmt(r.policy.u_veh_per_hr[i]) << ","
              << fmt(r.policy.kappa_kmh[i]) << "\n";
        f.close();
        run.record("design_policy.csv");
    }
    {
        auto f = run.open("design_summary.csv");
        f << "mode,objective,feasible\n";
        f << mode << "," << fmt(r.objective) << "," << (r.feasible ? 1 : 0) << "\n";
        f.close();
        run.record("design_summary.csv");
    }
    if (dopts.keep_surface) {
        auto f = run.open("design_candidates.csv");
        const size_t nr = r.surface.empty() ? 0 : r.surface[0].u.size();
        f << "objective,feasible";
        for (size_t i = 0; i < nr; ++i) f << ",u_" << (i + 2);
        for (size_t i = 0; i < nr; ++i) f << ",kappa_" << (i + 2);
        f << "\n";
        for (const CandidatePoint& c : r.surface) {
            f << fmt(c.objective) << "," << (c.feasible ? 1 : 0);
            for (double u : c.u) f << "," << fmt(u);
            for (double k : c.kappa) f << "," << fmt(k);
            f << "\n";
        }
        f.close();
        run.record("design_candidates.csv");
    }
    if (!r.feasible && mode != "local-throughput") return 3;
    return 0;
}

int cmd_compare(const Options& opts, const LoadedConfig& lc, Run& run) {
    SimConfig sim = lc.sim;
    sim.seed = static_cast<uint64_t>(opt_num(opts, "seed", static_cast<double>(sim.seed)));
    const int reps = static_cast<int>(opt_num(opts, "replications", 10));
    const int threads = static_cast<int>(opt_num(opts, "threads", 1));
    validate_sim(lc.highway, lc.markov, sim);

    std::vector<NamedStrategy> strategies;
    std::stringstream ss(opt_str(opts, "strategies", "none,policy"));
    std::string tok;
    while (std::getline(ss, tok, ','))
        strategies.push_back(
            {tok, strategy_from(tok, lc, grid_from(opts), design_opts_from(opts, lc))});

    const auto rows =
        compare_strategies(lc.highway, lc.markov, sim, strategies, reps,
                           parse_backend(opt_str(opts, "simd", "auto")), threads);

    const int n_hours = rows.empty() ? 0 : static_cast<int>(rows[0].mean.per_hour.size());
    {
        auto f = run.open("compare_queue.csv");
        f << "strategy";
        for (int h = 0; h < n_hours; ++h) f << "," << hour_label(lc.sim_start_hr, h);
        f << ",mean,se\n";
        for (const CompareRow& r : rows) {
            f << r.name;
            for (int h = 0; h < n_hours; ++h) f << "," << fmt(r.mean.per_hour[h].queue_mean);
            f << "," << fmt(r.mean.time_avg_queue_veh) << ","
              << fmt(r.stderr_.time_avg_queue_veh) << "\n";
        }
        f.close();
        run.record("compare_queue.csv");
    }
    {
        auto f = run.open("compare_vht.csv");
        f << "strategy";
        for (int h = 0; h < n_hours; ++h) f << "," << hour_label(lc.sim_start_hr, h);
        f << ",sum,se\n";
        for (const CompareRow& r : rows) {
            f << r.name;
            for (int h = 0; h < n_hours; ++h) f << "," << fmt(r.mean.per_hour[h].vht);
            f << "," << fmt(r.mean.vht_veh_hr) << "," << fmt(r.stderr_.vht_veh_hr) << "\n";
        }
        f.close();
        run.record("compare_vht.csv");
    }
    {
        auto f = run.open("compare_replications.csv");
        f << "strategy,seed,qhat_veh,vht_veh_hr\n";
        for (const CompareRow& r : rows)
            for (size_t i = 0; i < r.per_seed.size(); ++i)
                f << r.name << "," << (sim.seed + i) << ","
                  << fmt(r.per_seed[i].time_avg_queue_veh) << ","
                  << fmt(r.per_seed[i].vht_veh_hr) << "\n";
        f.close();
        run.record("compare_replications.csv");
    }
    for (int i = 0; i < reps; ++i) run.manifest.seeds.push_back(sim.seed + i);
    return 0;
}

int cmd_export_density_map(const Options& opts, const LoadedConfig& lc, Run& run) {
    SimConfig sim = lc.sim;
    sim.seed = static_cast<uint64_t>(opt_num(opts, "seed", static_cast<double>(sim.seed)));
    sim.horizon_steps =
        static_cast<int64_t>(opt_num(opts, "horizon", static_cast<double>(sim.horizon_steps)));
    const int bin_minutes = static_cast<int>(opt_num(opts, "bin-minutes", 5));
    const Strategy strat = strategy_from(opt_str(opts, "strategy", "policy"), lc,
                                         grid_from(opts), design_opts_from(opts, lc));
    const Trajectory traj = simulate(strat, lc.highway, lc.markov, sim,
                                     parse_backend(opt_str(opts, "simd", "auto")));
    const auto grid = density_map(traj, lc.highway, bin_minutes);

    auto f = run.open("density_map.csv");
    f << "cell";
    const size_t n_bins = grid.empty() ? 0 : grid[0].size();
    for (size_t b = 0; b < n_bins; ++b) f << ",min_" << (b * bin_minutes);
    f << "\n";
    for (size_t k = 0; k < grid.size(); ++k) {
        f << (k + 1);
        for (double x : grid[k]) f << "," << fmt(x);
        f << "\n";
    }
    f.close();
    run.record("density_map.csv");
    run.manifest.seeds = {sim.seed};
    return 0;
}

int dispatch(const std::string& sub, const Options& opts, const std::string& config_text,
             const std::string& outdir) {
    Run run;
    run.outdir = outdir;
    run.manifest.subcommand = sub;
    run.manifest.options = opts;
    run.manifest.config_text = config_text;
    run.manifest.backend =
        opt_str(opts, "simd", "auto") == "scalar"
            ? "scalar"
            : (simd::simd_available() ? simd::simd_name() : "scalar");
    run.manifest.threads = static_cast<int>(opt_num(opts, "threads", 1));

    const LoadedConfig lc = parse_config(config_text);
    int rc = 0;
    if (sub == "simulate") rc = cmd_simulate(opts, lc, run);
    else if (sub == "drift") rc = cmd_drift(opts, lc, run);
    else if (sub == "design") rc = cmd_design(opts, lc, run);
    else if (sub == "compare") rc = cmd_compare(opts, lc, run);
    else if (sub == "export-density-map") rc = cmd_export_density_map(opts, lc, run);
    else throw ValidationError("subcommand", "unknown: " + sub);
    run.finish();
    return rc;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("config", "cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ssctm: stochastic-switching cell-transmission simulation and ramp design"};
    app.require_subcommand(1);

    std::string config_path, outdir = "out";
    std::string strategy = "policy", scheme = "local", mode = "local";
    std::string grid_u, grid_kappa, pc_weights = "anchored", simd_flag = "auto";
    std::string strategies = "none,policy";
    double seed = -1, horizon = -1;
    int replications = 10, threads = 1, bin_minutes = 5;
    bool flows = false, surface = false;

    auto add_common = [&](CLI::App* c) {
        c->add_option("--config", config_path, "config file")->required();
        c->add_option("--out-dir", outdir, "output directory");
        c->add_option("--threads", threads, "worker thread cap");
    };

    CLI::App* sim = app.add_subcommand("simulate", "run one seeded simulation");
    add_common(sim);
    sim->add_option("--strategy", strategy, "none|policy|alinea|metaline|local|partial|full");
    sim->add_option("--seed", seed, "seed override");
    sim->add_option("--horizon", horizon, "horizon override (steps)");
    sim->add_flag("--flows", flows, "also write flows.csv");
    sim->add_option("--simd", simd_flag, "auto|scalar|native");
    sim->add_option("--grid-u", grid_u, "design grid lo:hi:step");
    sim->add_option("--grid-kappa", grid_kappa, "design grid lo:hi:step");

    CLI::App* dr = app.add_subcommand("drift", "stability certificate for the config policy");
    add_common(dr);
    dr->add_option("--scheme", scheme, "local|full|partial");
    dr->add_option("--pc-weights", pc_weights, "anchored|printed|printed-raw");
    dr->add_option("--grid-u", grid_u, "also export the drift surface over this grid");
    dr->add_option("--grid-kappa", grid_kappa, "surface grid lo:hi:step");

    CLI::App* de = app.add_subcommand("design", "synthesize a metering policy");
    add_common(de);
    de->add_option("--mode", mode, "local|local-throughput|full|partial");
    de->add_option("--grid-u", grid_u, "grid lo:hi:step");
    de->add_option("--grid-kappa", grid_kappa, "grid lo:hi:step");
    de->add_option("--pc-weights", pc_weights, "anchored|printed|printed-raw");
    de->add_flag("--surface", surface, "write per-candidate objectives");

    CLI::App* cp = app.add_subcommand("compare", "paired-seed strategy comparison");
    add_common(cp);
    cp->add_option("--strategies", strategies, "comma list");
    cp->add_option("--replications", replications, "number of paired seeds");
    cp->add_option("--seed", seed, "base seed override");
    cp->add_option("--simd", simd_flag, "auto|scalar|native");
    cp->add_option("--grid-u", grid_u, "design grid for designed strategies");
    cp->add_option("--grid-kappa", grid_kappa, "design grid for designed strategies");
    cp->add_option("--pc-weights", pc_weights, "anchored|printed|printed-raw");

    CLI::App* dm = app.add_subcommand("export-density-map", "cell x time-bin density grid");
    add_common(dm);
    dm->add_option("--strategy", strategy, "strategy");
    dm->add_option("--seed", seed, "seed override");
    dm->add_option("--horizon", horizon, "horizon override (steps)");
    dm->add_option("--bin-minutes", bin_minutes, "bin width");
    dm->add_option("--simd", simd_flag, "auto|scalar|native");

    CLI::App* rp = app.add_subcommand("replay", "re-run a recorded manifest");
    std::string manifest_path;
    rp->add_option("manifest", manifest_path, "manifest.json path")->required();
    rp->add_option("--out-dir", outdir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (rp->parsed()) {
            const RunManifest m = read_manifest(manifest_path);
            return dispatch(m.subcommand, m.options, m.config_text, outdir);
        }

        Options opts;
        CLI::App* active = app.get_subcommands().front();
        const std::string sub = active->get_name();
        auto given = [&](const char* flag) {
            const CLI::Option* o = active->get_option_no_throw(flag);
            return o != nullptr && o->count() > 0;
        };
        auto put_if = [&](const char* key, const std::string& val, const char* flag) {
            if (given(flag)) opts[key] = val;
        };
        put_if("strategy", strategy, "--strategy");
        put_if("scheme", scheme, "--scheme");
        put_if("mode", mode, "--mode");
        put_if("grid-u", grid_u, "--grid-u");
        put_if("grid-kappa", grid_kappa, "--grid-kappa");
        put_if("pc-weights", pc_weights, "--pc-weights");
        put_if("simd", simd_flag, "--simd");
        put_if("strategies", strategies, "--strategies");
        put_if("seed", fmt(seed), "--seed");
        put_if("horizon", fmt(horizon), "--horizon");
        put_if("replications", std::to_string(replications), "--replications");
        put_if("bin-minutes", std::to_string(bin_minutes), "--bin-minutes");
        put_if("threads", std::to_string(threads), "--threads");
        if (given("--flows") && flows) opts["flows"] = "1";
        if (given("--surface") && surface) opts["surface"] = "1";

        return dispatch(sub, opts, slurp(config_path), outdir);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const SubproblemInfeasible& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 3;
    } catch (const NoRoot& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 3;
    } catch (const TooLarge& e) {
        std::cerr << "unsupported scale: " << e.what() << "\n";
        return 4;
    } catch (const Unsupported& e) {
        std::cerr << "unsupported: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
