#include "funnel_cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "funnel/funnel.hpp"

namespace funnel::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Globals {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::string format = "csv";
};

/// Loaded configuration plus the list of files written by a command.
struct Context {
    ConfigValues cfg;
    fs::path out_dir;
    std::vector<std::string> outputs;

    std::ofstream create(const std::string& name) {
        outputs.push_back(name);
        return csv::open((out_dir / name).string());
    }
};

// ---------------------------------------------------------------------------
// steady
// ---------------------------------------------------------------------------

struct SteadyArgs {
    std::vector<double> detunings_hz;
};

void cmd_steady(Context& ctx, const SteadyArgs& a) {
    const TrapParams p = to_trap(ctx.cfg);
    const DriveConfig d = to_drive(ctx.cfg);
    const DerivedParams dp = derive_params(p, d);
    std::vector<double> list = a.detunings_hz;
    if (list.empty()) list.push_back(ctx.cfg.detuning_hz);

    auto out = ctx.create("steady.csv");
    out << "detuning_hz,u_m2,amplitude_um,stability,eig1_re,eig1_im,eig2_re,eig2_im\n";
    for (double hz : list) {
        const auto roots = steady_state_roots(units::hz_to_rad(hz), dp.f0_reduced, p.damping, dp.xi);
        for (const auto& r : roots) {
            out << csv::num(hz) << ',' << csv::num(r.u) << ','
                << csv::num(r.amplitude / units::kMicrometer) << ',' << to_string(r.stability);
            for (const auto& e : r.jacobian_eigs) {
                out << ',' << csv::num(e.real()) << ',' << csv::num(e.imag());
            }
            out << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepArgs {
    std::string direction = "both";
    double from_hz = -45e3;
    double to_hz = 5e3;
    double step_hz = 50.0;
    std::string model = "quasi-static";
    double dwell_s = 0.0;
    std::vector<double> drives_zn;
};

void cmd_sweep(Context& ctx, const SweepArgs& a) {
    SweepExperimentConfig sc;
    sc.trap = to_trap(ctx.cfg);
    sc.drive = to_drive(ctx.cfg);
    sc.direction = a.direction == "ascending"    ? SweepDirection::ascending
                   : a.direction == "descending" ? SweepDirection::descending
                                                 : SweepDirection::both;
    sc.delta_min = units::hz_to_rad(std::min(a.from_hz, a.to_hz));
    sc.delta_max = units::hz_to_rad(std::max(a.from_hz, a.to_hz));
    sc.step = units::hz_to_rad(a.step_hz);
    sc.dwell = a.dwell_s;
    sc.model = a.model == "envelope" ? SweepModel::envelope : SweepModel::quasi_static;
    sc.drives.clear();
    std::vector<double> drives = a.drives_zn;
    if (drives.empty()) drives.push_back(ctx.cfg.f0_zn);
    for (double zn : drives) sc.drives.push_back(zn * units::kZeptonewton);
    for (double f : sc.drives) {
        DriveConfig d = sc.drive;
        d.f0_force = f;
        validate(d);
    }

    const SweepExperimentResult res = run_sweep(sc);
    const double xi = duffing_coefficient(sc.trap);

    auto jumps = ctx.create("jumps.csv");
    jumps << "f0_zn,jump_up_hz,jump_down_hz,hysteresis_width_hz,bistable_lower_hz,bistable_upper_hz\n";
    for (std::size_t i = 0; i < res.drives.size(); ++i) {
        const auto& r = res.drives[i];
        const std::string prefix = res.drives.size() == 1 ? "sweep_" : "sweep_" + std::to_string(i) + "_";
        if (sc.direction != SweepDirection::descending) {
            auto f = ctx.create(prefix + "ascending.csv");
            csv::write_sweep(f, r.ascending);
        }
        if (sc.direction != SweepDirection::ascending) {
            auto f = ctx.create(prefix + "descending.csv");
            csv::write_sweep(f, r.descending);
        }
        auto opt = [](const std::optional<double>& v) {
            return v ? csv::num(units::rad_to_hz(*v)) : std::string("nan");
        };
        BistableRegion region;
        if (xi > 0.0) {
            region = bistable_region(reduced_drive(sc.trap, r.f0_force), sc.trap.damping, xi);
        }
        jumps << csv::num(r.f0_force / units::kZeptonewton) << ',' << opt(r.jump_up) << ','
              << opt(r.jump_down) << ',' << csv::num(units::rad_to_hz(r.hysteresis_width())) << ','
              << (region.exists ? csv::num(units::rad_to_hz(region.delta_lower)) : "nan") << ','
              << (region.exists ? csv::num(units::rad_to_hz(region.delta_upper)) : "nan") << '\n';
    }
}

// ---------------------------------------------------------------------------
// vibres
// ---------------------------------------------------------------------------

struct VibresArgs {
    std::string stages = "a,c,e";
    std::optional<double> duration_s;
    std::string detuning = "center";
    std::size_t tune_points = 41;
    double tune_duration_s = 20.0;
};

void cmd_vibres(Context& ctx, const VibresArgs& a) {
    const TrapParams p = to_trap(ctx.cfg);
    DriveConfig d = to_drive(ctx.cfg);
    const CameraConfig cam = to_camera(ctx.cfg);
    const double duration = a.duration_s.value_or(ctx.cfg.duration_s);
    if (a.detuning == "center") d = with_detuning(p, d, window_center_detuning(p, d));

    std::vector<Stage> stages;
    std::stringstream ss(a.stages);
    for (std::string item; std::getline(ss, item, ',');) {
        if (item == "a") stages.push_back(Stage::a);
        else if (item == "c") stages.push_back(Stage::c);
        else if (item == "e") stages.push_back(Stage::e);
        else throw ConfigurationError("unknown stage '" + item + "'");
    }
    const bool want_e = std::find(stages.begin(), stages.end(), Stage::e) != stages.end();

    json summary;
    summary["detuning_hz"] = units::rad_to_hz(detuning(p, d));
    summary["seed"] = cam.seed;
    summary["duration_s"] = duration;
    if (want_e) {
        const OperatingWindow w = operating_window(p, d);
        summary["operating_window_fe_zn"] = {w.fe_lower / units::kZeptonewton,
                                             w.fe_upper / units::kZeptonewton};
        summary["bistable_region_hz"] = {units::rad_to_hz(w.region.delta_lower),
                                         units::rad_to_hz(w.region.delta_upper)};
        if (d.fe_force == 0.0) {
            TuneOptions to;
            to.fe_values = default_enhancement_scan(p, d, a.tune_points);
            to.duration = a.tune_duration_s;
            to.camera = cam;
            to.sample_rate = ctx.cfg.sample_rate_hz;
            const TuneResult tr = tune_enhancement(p, d, to);
            auto f = ctx.create("tune_curve.csv");
            f << "fe_zn,factor,jumps\n";
            for (const auto& pt : tr.curve) {
                f << csv::num(pt.fe_force / units::kZeptonewton) << ',' << csv::num(pt.factor) << ','
                  << pt.jumps << '\n';
            }
            d.fe_force = tr.best_fe;
            summary["tuned_fe_zn"] = tr.best_fe / units::kZeptonewton;
            summary["tune_best_factor"] = tr.best_factor;
        }
    }
    summary["fe_zn"] = d.fe_force / units::kZeptonewton;

    const double fs = units::rad_to_hz(d.omega_s);
    std::map<Stage, StageResult> results;
    for (Stage s : stages) {
        VibresStageConfig sc;
        sc.stage = s;
        sc.trap = p;
        sc.drive = stage_drive(d, s);
        sc.camera = cam;
        sc.duration = duration;
        sc.sample_rate = ctx.cfg.sample_rate_hz;
        sc.radial_noise_rel = s == Stage::a ? 0.0 : ctx.cfg.radial_noise_rel;
        StageResult r = run_vibres_stage(sc);
        const std::string name = std::string("stage_") + to_string(s);
        {
            auto f = ctx.create(name + "_trace.csv");
            csv::write_trace(f, r.trace);
        }
        {
            auto f = ctx.create(name + "_spectrum.csv");
            csv::write_spectrum(f, r.spectrum);
        }
        json js;
        js["peak_nm"] = peak_amplitude(r.spectrum, fs) / units::kNanometer;
        js["noise_floor_nm"] = noise_floor(r.spectrum, fs) / units::kNanometer;
        js["jumps"] = r.truth.jumps.size();
        if (s == Stage::e) js["tuned"] = r.tuned;
        summary["stages"][to_string(s)] = js;
        results.emplace(s, std::move(r));
    }
    auto factor = [&](Stage on, Stage ref, const char* key) {
        if (!results.count(on) || !results.count(ref)) return;
        const auto e = enhancement_factor(results.at(on).spectrum, results.at(ref).spectrum, fs);
        summary["enhancement"][key] = {{"factor", e.factor}, {"floor_limited", e.floor_limited}};
    };
    factor(Stage::e, Stage::a, "e_vs_a");
    factor(Stage::e, Stage::c, "e_vs_c");
    factor(Stage::c, Stage::a, "c_vs_a");

    {
        auto f = ctx.create("config.cfg");
        f << format_config(ctx.cfg);
    }
    auto f = ctx.create("summary.json");
    f << summary.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// integrate
// ---------------------------------------------------------------------------

struct IntegrateArgs {
    std::string model = "envelope";
    double t_end_s = 10e-3;
    std::optional<double> dt_s;
    std::optional<std::size_t> stride;
};

void cmd_integrate(Context& ctx, const IntegrateArgs& a) {
    const TrapParams p = to_trap(ctx.cfg);
    const DriveConfig d = to_drive(ctx.cfg);
    auto out = ctx.create("trajectory.csv");
    if (a.model == "full") {
        IntegrationOptions<FullState> o;
        o.stride = a.stride.value_or(100);
        auto tr = integrate_full(FullState{}, p, d, a.t_end_s, a.dt_s.value_or(max_full_step(p)), o);
        tr.meta.seed = ctx.cfg.seed;
        csv::write_trajectory(out, tr);
    } else {
        IntegrationOptions<EnvelopeState> o;
        o.stride = a.stride.value_or(10);
        auto tr = integrate_envelope(EnvelopeState{}, p, d, a.t_end_s,
                                     a.dt_s.value_or(max_envelope_step(p)), o);
        tr.meta.seed = ctx.cfg.seed;
        csv::write_trajectory(out, tr);
    }
}

// ---------------------------------------------------------------------------
// bistable-map
// ---------------------------------------------------------------------------

struct MapArgs {
    double f0_max_zn = 30.0;
    std::size_t points = 31;
};

void cmd_bistable_map(Context& ctx, const MapArgs& a) {
    const TrapParams p = to_trap(ctx.cfg);
    validate(p);
    const double xi = duffing_coefficient(p);
    auto out = ctx.create("bistable_map.csv");
    out << "f0_zn,exists,delta_lower_hz,delta_upper_hz,width_hz\n";
    for (std::size_t i = 0; i < a.points; ++i) {
        const double zn = a.points == 1 ? a.f0_max_zn
                                        : a.f0_max_zn * static_cast<double>(i) /
                                              static_cast<double>(a.points - 1);
        const BistableRegion r =
            bistable_region(reduced_drive(p, zn * units::kZeptonewton), p.damping, xi);
        out << csv::num(zn) << ',' << (r.exists ? 1 : 0) << ','
            << (r.exists ? csv::num(units::rad_to_hz(r.delta_lower)) : "nan") << ','
            << (r.exists ? csv::num(units::rad_to_hz(r.delta_upper)) : "nan") << ','
            << csv::num(units::rad_to_hz(r.width())) << '\n';
    }
}

// ---------------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------------

/// Arguments minus global flags; this is what a manifest records.
std::vector<std::string> command_args(const std::vector<std::string>& args) {
    static const std::vector<std::string> globals{"--config", "--out", "--seed", "--format",
                                                  "--from-manifest"};
    std::vector<std::string> out;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        bool skip = false;
        for (const auto& g : globals) {
            if (a == g) {
                ++i;  // value follows
                skip = true;
            } else if (a.rfind(g + "=", 0) == 0) {
                skip = true;
            }
        }
        if (!skip) out.push_back(a);
    }
    return out;
}

int dispatch(const std::vector<std::string>& args, const std::optional<std::string>& config_text,
             std::ostream& out, std::ostream& err) {
    CLI::App app{"Funnel-trap Duffing oscillator simulator"};
    app.fallthrough();
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "Parameter file (defaults to built-in paper values)");
    app.add_option("--out", g.out_dir, "Output directory");
    app.add_option("--seed", g.seed, "Override the random seed");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv"}));

    SteadyArgs steady;
    auto* s_steady = app.add_subcommand("steady", "Steady-state roots and stability");
    s_steady->add_option("--detunings-hz", steady.detunings_hz, "Detunings to evaluate")
        ->delimiter(',');

    SweepArgs sweep;
    auto* s_sweep = app.add_subcommand("sweep", "Quasi-static or envelope frequency sweep");
    s_sweep->add_option("--direction", sweep.direction)
        ->check(CLI::IsMember({"ascending", "descending", "both"}));
    s_sweep->add_option("--from-hz", sweep.from_hz);
    s_sweep->add_option("--to-hz", sweep.to_hz);
    s_sweep->add_option("--step-hz", sweep.step_hz);
    s_sweep->add_option("--model", sweep.model)->check(CLI::IsMember({"quasi-static", "envelope"}));
    s_sweep->add_option("--dwell-s", sweep.dwell_s);
    s_sweep->add_option("--drives-zn", sweep.drives_zn)->delimiter(',');

    VibresArgs vib;
    auto* s_vib = app.add_subcommand("vibres", "Three-stage vibrational-resonance experiment");
    s_vib->add_option("--stages", vib.stages);
    s_vib->add_option("--duration-s", vib.duration_s);
    s_vib->add_option("--detuning", vib.detuning)->check(CLI::IsMember({"center", "config"}));
    s_vib->add_option("--tune-points", vib.tune_points);
    s_vib->add_option("--tune-duration-s", vib.tune_duration_s);

    IntegrateArgs integ;
    auto* s_int = app.add_subcommand("integrate", "Time-domain integration");
    s_int->add_option("--model", integ.model)->check(CLI::IsMember({"full", "envelope"}));
    s_int->add_option("--t-end-s", integ.t_end_s);
    s_int->add_option("--dt-s", integ.dt_s);
    s_int->add_option("--stride", integ.stride);

    MapArgs map;
    auto* s_map = app.add_subcommand("bistable-map", "Bistable window versus radial drive");
    s_map->add_option("--f0-max-zn", map.f0_max_zn);
    s_map->add_option("--points", map.points);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }

    const auto start = std::chrono::steady_clock::now();
    Context ctx;
    try {
        if (config_text) {
            ctx.cfg = parse_config(*config_text);
        } else if (!g.config_path.empty()) {
            ctx.cfg = load_config(g.config_path);
        }
        if (g.seed) ctx.cfg.seed = *g.seed;
        ctx.out_dir = g.out_dir;
        fs::create_directories(ctx.out_dir);

        std::string command;
        if (s_steady->parsed()) {
            command = "steady";
            cmd_steady(ctx, steady);
        } else if (s_sweep->parsed()) {
            command = "sweep";
            cmd_sweep(ctx, sweep);
        } else if (s_vib->parsed()) {
            command = "vibres";
            cmd_vibres(ctx, vib);
        } else if (s_int->parsed()) {
            command = "integrate";
            cmd_integrate(ctx, integ);
        } else {
            command = "bistable-map";
            cmd_bistable_map(ctx, map);
        }

        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        json manifest;
        manifest["command"] = command;
        manifest["args"] = command_args(args);
        manifest["config"] = format_config(ctx.cfg);
        manifest["seed"] = ctx.cfg.seed;
        manifest["tool_version"] = kToolVersion;
        manifest["outputs"] = ctx.outputs;
        manifest["wall_clock_s"] = wall;
        std::ofstream mf(ctx.out_dir / "manifest.json", std::ios::binary);
        mf << manifest.dump(2) << '\n';
        out << command << ": wrote " << ctx.outputs.size() << " file(s) to " << ctx.out_dir.string()
            << '\n';
        return kSuccess;
    } catch (const ConfigFileError& e) {
        err << "configuration error";
        if (!e.key().empty()) err << " [" << e.key() << "]";
        err << ": " << e.what() << '\n';
        return kConfigError;
    } catch (const ParameterError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kConfigError;
    } catch (const ConfigurationError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kConfigError;
    } catch (const DivergenceError& e) {
        err << "divergence: " << e.what() << '\n';
        return kRuntimeError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    // --from-manifest PATH replays a recorded command; --out still applies.
    auto it = std::find(args.begin(), args.end(), "--from-manifest");
    if (it == args.end()) return dispatch(args, std::nullopt, out, err);
    if (std::next(it) == args.end()) {
        err << "error: --from-manifest requires a path\n";
        return kConfigError;
    }
    json manifest;
    try {
        std::ifstream in(*std::next(it));
        if (!in) throw std::runtime_error("cannot open manifest '" + *std::next(it) + "'");
        in >> manifest;
    } catch (const std::exception& e) {
        err << "configuration error: " << e.what() << '\n';
        return kConfigError;
    }
    std::vector<std::string> replay = manifest.at("args").get<std::vector<std::string>>();
    for (auto o = args.begin(); o != args.end(); ++o) {
        if (*o == "--out" && std::next(o) != args.end()) {
            replay.push_back("--out");
            replay.push_back(*std::next(o));
        }
    }
    return dispatch(replay, manifest.at("config").get<std::string>(), out, err);
}

}  // namespace funnel::cli
