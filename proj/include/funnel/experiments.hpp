#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "funnel/dynamics.hpp"
#include "funnel/errors.hpp"
#include "funnel/measurement.hpp"
#include "funnel/steady_state.hpp"
#include "funnel/trap_model.hpp"

namespace funnel {

// =============================================================================
// Frequency sweeps
// =============================================================================

enum class SweepDirection { ascending, descending, both };
enum class SweepModel { quasi_static, envelope };

struct SweepExperimentConfig {
    TrapParams trap;
    DriveConfig drive;  // only used for its non-radial fields
    SweepDirection direction = SweepDirection::both;
    double delta_min = units::hz_to_rad(-45e3);  // rad/s
    double delta_max = units::hz_to_rad(5e3);    // rad/s
    double step = units::hz_to_rad(50.0);        // rad/s, magnitude
    double dwell = 0.0;                          // s per step (envelope model); 0 = 20/gamma
    std::vector<double> drives{kRadialForceCap};  // radial force amplitudes F0, N
    SweepModel model = SweepModel::quasi_static;
};

struct DriveSweepResult {
    double f0_force = 0.0;
    SweepRecord ascending;
    SweepRecord descending;
    std::optional<double> jump_up;    // first jump on the ascending trace, rad/s
    std::optional<double> jump_down;  // first jump on the descending trace, rad/s
    double hysteresis_width() const {
        return (jump_up && jump_down) ? std::max(0.0, *jump_up - *jump_down) : 0.0;
    }
};

struct SweepExperimentResult {
    std::vector<DriveSweepResult> drives;
    double log_step_threshold = 0.0;  // jump threshold on |d ln u| per step
};

namespace detail {

inline std::vector<double> sweep_grid(double from, double to, double step) {
    const auto n = static_cast<std::size_t>(std::floor(std::abs(to - from) / step + 1e-9)) + 1;
    std::vector<double> g(n);
    const double s = to >= from ? step : -step;
    for (std::size_t i = 0; i < n; ++i) g[i] = from + static_cast<double>(i) * s;
    return g;
}

/// Stepwise detuning sweep of the envelope system starting at rest. Each
/// point reports |alpha|^2 and z averaged over the last quarter of its dwell.
inline SweepRecord envelope_sweep(const TrapParams& p, const DriveConfig& d,
                                  const std::vector<double>& grid, double dwell) {
    EnvelopeModel model(p, d);
    const double dt_max = max_envelope_step(p);
    const auto steps = static_cast<std::size_t>(std::ceil(dwell / dt_max));
    const double h = dwell / static_cast<double>(steps) / model.time_scale();
    const std::size_t tail = std::max<std::size_t>(1, steps / 4);
    auto f = [&model](double tau, const StateVector<4>& v) { return model.rhs(tau, v); };

    SweepRecord rec;
    StateVector<4> y{};
    double tau = 0.0;
    for (double delta : grid) {
        model.set_detuning(delta);
        double u_acc = 0.0;
        double z_acc = 0.0;
        for (std::size_t i = 0; i < steps; ++i) {
            y = rk4_step(y, tau, h, f);
            tau += h;
            if (!all_finite(y)) {
                throw DivergenceError(tau * model.time_scale(), "envelope sweep diverged");
            }
            if (i + tail >= steps) {
                u_acc += y[0] * y[0] + y[1] * y[1];
                z_acc += y[2];
            }
        }
        const double um = kLengthScale;
        const double u = u_acc / static_cast<double>(tail) * um * um;
        SweepPoint pt;
        pt.detuning = delta;
        pt.u = u;
        pt.amplitude = std::sqrt(u);
        pt.z0 = z_acc / static_cast<double>(tail) * um;
        rec.points.push_back(pt);
    }
    return rec;
}

inline double max_log_step(const SweepRecord& rec) {
    double m = 0.0;
    for (std::size_t i = 1; i < rec.points.size(); ++i) {
        const double a = rec.points[i - 1].u;
        const double b = rec.points[i].u;
        if (a > 0.0 && b > 0.0) m = std::max(m, std::abs(std::log(b / a)));
    }
    return m;
}

/// Marks steps whose |d ln u| exceeds `threshold`, labels branches by
/// segment, and fills `jump_detunings`.
inline void mark_jumps(SweepRecord& rec, double threshold, Branch initial) {
    rec.jump_detunings.clear();
    Branch current = initial;
    for (std::size_t i = 0; i < rec.points.size(); ++i) {
        auto& pt = rec.points[i];
        pt.jumped = false;
        if (i > 0) {
            const double a = rec.points[i - 1].u;
            const double b = pt.u;
            if (a > 0.0 && b > 0.0 && std::abs(std::log(b / a)) > threshold) {
                pt.jumped = true;
                current = b > a ? Branch::upper : Branch::lower;
                rec.jump_detunings.push_back(pt.detuning);
            }
        }
        pt.branch = current;
    }
}

}  // namespace detail

/// Ascending and descending sweeps for every drive in the list, with jump
/// detunings extracted by a threshold on the per-step change in ln u. The
/// threshold is three times the largest continuous change seen on a weak
/// (sub-critical, Lorentzian) reference drive swept over the same grid.
inline SweepExperimentResult run_sweep(const SweepExperimentConfig& cfg) {
    validate(cfg.trap);
    if (!(cfg.step > 0.0) || !(cfg.step < 0.25 * cfg.trap.damping)) {
        throw ConfigurationError("sweep step must be positive and finer than gamma/4");
    }
    if (!(cfg.delta_max > cfg.delta_min)) throw ConfigurationError("empty detuning range");
    const double dwell = cfg.dwell > 0.0 ? cfg.dwell : 20.0 / cfg.trap.damping;
    if (cfg.model == SweepModel::envelope && dwell < 5.0 / cfg.trap.damping) {
        throw ConfigurationError("dwell must be long compared with 1/gamma");
    }

    const double xi = duffing_coefficient(cfg.trap);
    const double weak_force =
        0.1 * radial_force_for(cfg.trap, xi > 0.0 ? critical_drive(cfg.trap.damping, xi) : 1e-3);

    auto sweep = [&](double force, double from, double to) {
        DriveConfig d = cfg.drive;
        d.f0_force = force;
        d.fs_force = 0.0;
        d.fe_force = 0.0;
        d = with_detuning(cfg.trap, d, from);
        if (cfg.model == SweepModel::quasi_static) {
            const double s = to >= from ? cfg.step : -cfg.step;
            return hysteresis_sweep(cfg.trap, d, from, to, s, Branch::lower);
        }
        return detail::envelope_sweep(cfg.trap, d, detail::sweep_grid(from, to, cfg.step), dwell);
    };

    SweepExperimentResult result;
    const SweepRecord weak = sweep(std::min(weak_force, kRadialForceCap), cfg.delta_min, cfg.delta_max);
    result.log_step_threshold = 3.0 * detail::max_log_step(weak);

    for (double force : cfg.drives) {
        DriveSweepResult r;
        r.f0_force = force;
        if (cfg.direction != SweepDirection::descending) {
            r.ascending = sweep(force, cfg.delta_min, cfg.delta_max);
            detail::mark_jumps(r.ascending, result.log_step_threshold, Branch::lower);
            if (!r.ascending.jump_detunings.empty()) r.jump_up = r.ascending.jump_detunings.front();
        }
        if (cfg.direction != SweepDirection::ascending) {
            r.descending = sweep(force, cfg.delta_max, cfg.delta_min);
            // starts on the large-amplitude continuation above the window
            detail::mark_jumps(r.descending, result.log_step_threshold, Branch::upper);
            if (!r.descending.jump_detunings.empty()) {
                r.jump_down = r.descending.jump_detunings.front();
            }
        }
        result.drives.push_back(std::move(r));
    }
    return result;
}

// =============================================================================
// Vibrational-resonance stages
// =============================================================================

enum class Stage { a, c, e };

inline const char* to_string(Stage s) {
    switch (s) {
        case Stage::a: return "a";
        case Stage::c: return "c";
        default: return "e";
    }
}

struct VibresStageConfig {
    Stage stage = Stage::a;
    TrapParams trap;
    DriveConfig drive;
    CameraConfig camera;
    double duration = 120.0;  // s
    Branch preparation = Branch::lower;
    double sample_rate = 4000.0;  // Hz, quasi-static trajectory grid
    /// Optional relative fluctuation of the radial contribution to z, drawn
    /// once per frame. Zero disables it.
    double radial_noise_rel = 0.0;
};

inline void validate(const VibresStageConfig& cfg) {
    validate(cfg.trap);
    validate(cfg.drive);
    validate(cfg.camera);
    const auto& d = cfg.drive;
    switch (cfg.stage) {
        case Stage::a:
            if (d.f0_force != 0.0 || d.fe_force != 0.0) {
                throw ConfigurationError("stage a requires F0 = 0 and F_e = 0");
            }
            break;
        case Stage::c:
            if (d.fe_force != 0.0) throw ConfigurationError("stage c requires F_e = 0");
            break;
        case Stage::e:
            // F_s may be zero: the signal-free control run of stage e
            if (!(d.f0_force > 0.0 && d.fe_force > 0.0)) {
                throw ConfigurationError("stage e requires the radial and enhancement drives");
            }
            break;
    }
    if (!(cfg.duration > 0.0)) throw ConfigurationError("duration must be positive");
    if (!(cfg.sample_rate >= 10.0 * cfg.camera.frame_rate)) {
        throw ConfigurationError("sample_rate must be at least 10x the camera frame rate");
    }
    if (!(cfg.radial_noise_rel >= 0.0)) throw ConfigurationError("radial_noise_rel must be >= 0");
}

/// Drive settings of each stage derived from a fully specified drive.
inline DriveConfig stage_drive(const DriveConfig& full, Stage s) {
    DriveConfig d = full;
    if (s == Stage::a) {
        d.f0_force = 0.0;
        d.fe_force = 0.0;
    } else if (s == Stage::c) {
        d.fe_force = 0.0;
    }
    return d;
}

/// Noise-free quasi-static trajectory of one stage.
struct StageTruth {
    AxialTrace z;
    std::vector<double> radial_z;  // radial contribution to z per sample, m
    std::vector<JumpEvent> jumps;
};

inline StageTruth simulate_stage_truth(const VibresStageConfig& cfg) {
    validate(cfg);
    const TrapParams& p = cfg.trap;
    const DriveConfig& d = cfg.drive;
    const double dt = 1.0 / cfg.sample_rate;
    const auto n = static_cast<std::size_t>(std::llround(cfg.duration * cfg.sample_rate));

    StageTruth truth;
    truth.z.t0 = 0.0;
    truth.z.dt = dt;
    truth.z.z.resize(n);
    truth.radial_z.assign(n, 0.0);

    if (cfg.stage == Stage::a) {
        for (std::size_t i = 0; i < n; ++i) {
            truth.z.z[i] = equilibrium_displacement(p, 0.0, axial_force(d, dt * static_cast<double>(i)));
        }
        return truth;
    }

    const DuffingCoefficients c = duffing_coefficients(p, d);
    const double delta = detuning(p, d);
    BranchTracker tracker(c, delta - detuning_modulation(p, d, 0.0), cfg.preparation);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = dt * static_cast<double>(i);
        if (i > 0) tracker.advance(delta - detuning_modulation(p, d, t), t);
        const double u = tracker.current_u();
        truth.radial_z[i] = equilibrium_displacement(p, u, 0.0);
        truth.z.z[i] = equilibrium_displacement(p, u, axial_force(d, t));
    }
    truth.jumps = tracker.jump_log();
    return truth;
}

struct StageResult {
    SampledTrace trace;
    SpectrumRecord spectrum;
    StageTruth truth;
    /// Stage e only: F_e inside the operating window and switching observed.
    bool tuned = true;
};

/// Camera record and spectrum of a simulated stage.
inline std::pair<SampledTrace, SpectrumRecord> measure_stage(const StageTruth& truth,
                                                             const CameraConfig& camera,
                                                             double radial_noise_rel = 0.0) {
    SampledTrace trace = sample_camera(truth.z, camera);
    if (radial_noise_rel > 0.0) {
        AxialTrace radial{truth.z.t0, truth.z.dt, truth.radial_z};
        CameraConfig exact = camera;
        exact.photons_per_frame = 1.0;
        exact.psf_sigma = 0.0;
        const SampledTrace mean_radial = sample_camera(radial, exact);
        std::mt19937_64 rng(camera.seed ^ 0x9e3779b97f4a7c15ULL);
        std::normal_distribution<double> noise(0.0, 1.0);
        for (std::size_t k = 0; k < trace.z.size(); ++k) {
            trace.z[k] += radial_noise_rel * std::abs(mean_radial.z[k]) * noise(rng);
        }
    }
    SpectrumRecord spectrum = amplitude_spectrum(trace);
    return {std::move(trace), std::move(spectrum)};
}

// -----------------------------------------------------------------------------
// Operating window of the enhancement force
// -----------------------------------------------------------------------------

struct OperatingWindow {
    BistableRegion region;
    double fe_lower = 0.0;  // N
    double fe_upper = 0.0;  // N
    bool empty() const { return !(fe_upper > fe_lower); }
    bool contains(double fe) const { return fe > fe_lower && fe < fe_upper; }
};

/// Range of F_e for which the detuning excursions of F_e alone stop within
/// delta(F_s) of the saddle-node boundaries: switching needs the signal, and
/// the signal phase decides the branch.
///   lower edge: delta_e + delta_s = max(a, b)
///   upper edge: delta_e - delta_s = min(a, b)
/// with a, b the distances from Delta to the upper and lower boundaries.
inline OperatingWindow operating_window(const TrapParams& p, const DriveConfig& d) {
    const DuffingCoefficients c = duffing_coefficients(p, d);
    OperatingWindow w;
    w.region = bistable_region(c.f0_reduced, c.gamma, c.xi);
    if (!w.region.exists) throw ConfigurationError("radial drive is not in the bistable regime");
    const double delta = detuning(p, d);
    const double a = w.region.delta_upper - delta;
    const double b = delta - w.region.delta_lower;
    if (!(a > 0.0 && b > 0.0)) {
        throw ConfigurationError("drive detuning lies outside the bistable window");
    }
    const double ds = detuning_shift_for_force(p, d.fs_force);
    w.fe_lower = force_for_detuning_shift(p, std::max(0.0, std::max(a, b) - ds));
    w.fe_upper = force_for_detuning_shift(p, std::min(a, b) + ds);
    return w;
}

/// Centre of the bistable window for the configured radial drive.
inline double window_center_detuning(const TrapParams& p, const DriveConfig& d) {
    const DuffingCoefficients c = duffing_coefficients(p, d);
    const BistableRegion r = bistable_region(c.f0_reduced, c.gamma, c.xi);
    if (!r.exists) throw ConfigurationError("radial drive is not in the bistable regime");
    return r.center();
}

inline StageResult run_vibres_stage(const VibresStageConfig& cfg) {
    StageResult r;
    r.truth = simulate_stage_truth(cfg);
    auto [trace, spectrum] = measure_stage(r.truth, cfg.camera, cfg.radial_noise_rel);
    r.trace = std::move(trace);
    r.spectrum = std::move(spectrum);
    if (cfg.stage == Stage::e) {
        const OperatingWindow w = operating_window(cfg.trap, cfg.drive);
        r.tuned = w.contains(cfg.drive.fe_force) && !r.truth.jumps.empty();
    }
    return r;
}

// -----------------------------------------------------------------------------
// Enhancement tuning
// -----------------------------------------------------------------------------

struct TunePoint {
    double fe_force = 0.0;
    double factor = 0.0;
    std::size_t jumps = 0;
};

struct TuneResult {
    double best_fe = 0.0;
    double best_factor = 0.0;
    std::vector<TunePoint> curve;
};

struct TuneOptions {
    std::vector<double> fe_values;  // N; empty = default_enhancement_scan
    double duration = 20.0;         // s per scan point
    CameraConfig camera;
    double sample_rate = 4000.0;
};

/// Scan centred on the operating window, two window widths either side.
inline std::vector<double> default_enhancement_scan(const TrapParams& p, const DriveConfig& d,
                                                    std::size_t points = 41) {
    const OperatingWindow w = operating_window(p, d);
    const double centre = 0.5 * (w.fe_lower + w.fe_upper);
    const double half = 2.0 * std::max(w.fe_upper - w.fe_lower, 2.0 * d.fs_force);
    std::vector<double> out(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double x = points == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(points - 1);
        out[i] = std::max(0.0, centre - half + 2.0 * half * x);
    }
    return out;
}

/// Scans F_e with short stage-e runs and returns the amplitude that
/// maximises the signal enhancement over stage a.
inline TuneResult tune_enhancement(const TrapParams& p, const DriveConfig& d,
                                   const TuneOptions& opts = {}) {
    const DuffingCoefficients c = duffing_coefficients(p, d);
    if (!(c.xi > 0.0) || !bistable_region(c.f0_reduced, c.gamma, c.xi).exists) {
        throw ConfigurationError("tune_enhancement requires a bistable radial drive");
    }
    const std::vector<double> scan =
        opts.fe_values.empty() ? default_enhancement_scan(p, d) : opts.fe_values;

    VibresStageConfig ref;
    ref.stage = Stage::a;
    ref.trap = p;
    ref.drive = stage_drive(d, Stage::a);
    ref.camera = opts.camera;
    ref.duration = opts.duration;
    ref.sample_rate = opts.sample_rate;
    const SpectrumRecord ref_spec = measure_stage(simulate_stage_truth(ref), opts.camera).second;
    const double fs = units::rad_to_hz(d.omega_s);

    TuneResult result;
    for (double fe : scan) {
        VibresStageConfig cfg = ref;
        cfg.drive = d;
        cfg.drive.fe_force = fe;
        cfg.stage = fe > 0.0 ? Stage::e : Stage::c;
        const StageTruth truth = simulate_stage_truth(cfg);
        const SpectrumRecord spec = measure_stage(truth, opts.camera).second;
        TunePoint pt{fe, enhancement_factor(spec, ref_spec, fs).factor, truth.jumps.size()};
        result.curve.push_back(pt);
        if (pt.factor > result.best_factor) {
            result.best_factor = pt.factor;
            result.best_fe = fe;
        }
    }
    return result;
}

// -----------------------------------------------------------------------------
// Full three-stage protocol
// -----------------------------------------------------------------------------

struct VibresReport {
    StageResult stage_a;
    StageResult stage_c;
    StageResult stage_e;
    double peak_a = 0.0;  // m, at omega_s
    double peak_c = 0.0;
    double peak_e = 0.0;
    EnhancementResult factor_e_vs_a;
    EnhancementResult factor_e_vs_c;
    EnhancementResult factor_c_vs_a;
    std::size_t jump_count = 0;
};

/// Runs stages a, c and e with a common camera seed. `drive` must carry the
/// radial drive, the signal and the enhancement amplitude.
inline VibresReport run_vibres(const TrapParams& p, const DriveConfig& drive,
                               const CameraConfig& camera, double duration,
                               double sample_rate = 4000.0, double radial_noise_rel = 0.0) {
    auto stage = [&](Stage s) {
        VibresStageConfig cfg;
        cfg.stage = s;
        cfg.trap = p;
        cfg.drive = stage_drive(drive, s);
        cfg.camera = camera;
        cfg.duration = duration;
        cfg.sample_rate = sample_rate;
        cfg.radial_noise_rel = s == Stage::a ? 0.0 : radial_noise_rel;
        return run_vibres_stage(cfg);
    };
    VibresReport rep;
    rep.stage_a = stage(Stage::a);
    rep.stage_c = stage(Stage::c);
    rep.stage_e = stage(Stage::e);
    const double fs = units::rad_to_hz(drive.omega_s);
    rep.peak_a = peak_amplitude(rep.stage_a.spectrum, fs);
    rep.peak_c = peak_amplitude(rep.stage_c.spectrum, fs);
    rep.peak_e = peak_amplitude(rep.stage_e.spectrum, fs);
    rep.factor_e_vs_a = enhancement_factor(rep.stage_e.spectrum, rep.stage_a.spectrum, fs);
    rep.factor_e_vs_c = enhancement_factor(rep.stage_e.spectrum, rep.stage_c.spectrum, fs);
    rep.factor_c_vs_a = enhancement_factor(rep.stage_c.spectrum, rep.stage_a.spectrum, fs);
    rep.jump_count = rep.stage_e.truth.jumps.size();
    return rep;
}

}  // namespace funnel
