#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "funnel/experiments.hpp"
#include "oracles.hpp"

using namespace funnel;

namespace {

constexpr double kTwoPi = 6.283185307179586;

/// Paper drive with the detuning at the centre of the bistable window.
DriveConfig centred_drive() {
    const TrapParams p;
    DriveConfig d;
    d.fs_force = volt_to_force(500e-6);
    return with_detuning(p, d, window_center_detuning(p, d));
}

/// Enhancement amplitude half-way between the lower window edge and the
/// window centre, where F_e alone stays inside the bistable window.
double inner_fe(const TrapParams& p, const DriveConfig& d) {
    const OperatingWindow w = operating_window(p, d);
    return w.fe_lower + 0.25 * (w.fe_upper - w.fe_lower);
}

VibresStageConfig stage(Stage s, const DriveConfig& d, double duration) {
    VibresStageConfig c;
    c.stage = s;
    c.drive = stage_drive(d, s);
    c.duration = duration;
    return c;
}

TEST(Experiments, WeakDriveSweepHasNoJumps) {
    SweepExperimentConfig cfg;
    const double fc = radial_force_for(cfg.trap, critical_drive(cfg.trap.damping, duffing_coefficient(cfg.trap)));
    cfg.drives = {0.5 * fc, 0.9 * fc};
    const auto res = run_sweep(cfg);
    for (const auto& r : res.drives) {
        EXPECT_FALSE(r.jump_up.has_value());
        EXPECT_FALSE(r.jump_down.has_value());
        EXPECT_EQ(r.hysteresis_width(), 0.0);
        const std::size_t n = r.ascending.points.size();
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_NEAR(r.ascending.points[i].u / r.descending.points[n - 1 - i].u, 1.0, 1e-9);
        }
    }
}

TEST(Experiments, StrongDriveJumpsMatchBistableRegion) {
    SweepExperimentConfig cfg;
    cfg.drives = {6e-21, 12e-21, 18e-21, 24e-21, 30e-21};
    const auto res = run_sweep(cfg);
    const double xi = duffing_coefficient(cfg.trap);
    double prev = 0.0;
    for (const auto& r : res.drives) {
        ASSERT_TRUE(r.jump_up && r.jump_down);
        EXPECT_LT(*r.jump_up, 0.0);
        EXPECT_LT(*r.jump_down, *r.jump_up);
        EXPECT_EQ(r.ascending.jump_detunings.size(), 1u);
        EXPECT_EQ(r.descending.jump_detunings.size(), 1u);
        const auto region = bistable_region(reduced_drive(cfg.trap, r.f0_force), cfg.trap.damping, xi);
        EXPECT_LE(std::abs(*r.jump_up - region.delta_upper), cfg.step);
        EXPECT_LE(std::abs(*r.jump_down - region.delta_lower), cfg.step);
        EXPECT_GT(r.hysteresis_width(), prev);
        prev = r.hysteresis_width();
    }
}

TEST(Experiments, EnvelopeSweepAgreesWithQuasiStatic) {
    SweepExperimentConfig cfg;
    cfg.drives = {10e-21};
    cfg.delta_min = -kTwoPi * 6e3;
    cfg.delta_max = kTwoPi * 1e3;
    const auto qs = run_sweep(cfg);
    cfg.model = SweepModel::envelope;
    const auto env = run_sweep(cfg);
    const auto& a = qs.drives[0];
    const auto& b = env.drives[0];
    ASSERT_TRUE(a.jump_up && b.jump_up && a.jump_down && b.jump_down);
    EXPECT_LE(std::abs(*a.jump_up - *b.jump_up), 2.0 * cfg.step);
    EXPECT_LE(std::abs(*a.jump_down - *b.jump_down), 2.0 * cfg.step);

    // away from the jumps the branch values agree
    auto compare = [&](const SweepRecord& x, const SweepRecord& y, double jump) {
        ASSERT_EQ(x.points.size(), y.points.size());
        for (std::size_t i = 0; i < x.points.size(); ++i) {
            if (std::abs(x.points[i].detuning - jump) <= 3.0 * cfg.step) continue;
            EXPECT_NEAR(y.points[i].u / x.points[i].u, 1.0, 0.05) << x.points[i].detuning;
        }
    };
    compare(a.ascending, b.ascending, *a.jump_up);
    compare(a.descending, b.descending, *a.jump_down);

    // axial position from the dynamics lies on the equilibrium parabola
    for (const auto& pt : b.descending.points) {
        const double expect = equilibrium_displacement(cfg.trap, pt.u, 0.0);
        if (std::abs(expect) < 1e-9) continue;
        EXPECT_NEAR(pt.z0 / expect, 1.0, 0.01);
    }
}

TEST(Experiments, SweepConfigurationErrors) {
    SweepExperimentConfig cfg;
    cfg.step = cfg.trap.damping;
    EXPECT_THROW(run_sweep(cfg), ConfigurationError);
    cfg = SweepExperimentConfig{};
    cfg.delta_max = cfg.delta_min;
    EXPECT_THROW(run_sweep(cfg), ConfigurationError);
}

TEST(Experiments, OperatingWindowWidthIsTwiceSignalForce) {
    const TrapParams p;
    const DriveConfig d = centred_drive();
    const OperatingWindow w = operating_window(p, d);
    EXPECT_NEAR((w.fe_upper - w.fe_lower) / (2.0 * d.fs_force), 1.0, 1e-6);
    EXPECT_NEAR(detuning_shift_for_force(p, d.fs_force) / kTwoPi, 28.8, 0.1);

    // scan: switching needs the signal inside the window, happens without it above
    const double step = 0.1 * d.fs_force;
    for (double fe = w.fe_lower - 10 * step; fe <= w.fe_upper + 10 * step; fe += step) {
        DriveConfig on = d;
        on.fe_force = fe;
        DriveConfig off = on;
        off.fs_force = 0.0;
        const std::size_t with_signal = simulate_stage_truth(stage(Stage::e, on, 4.0)).jumps.size();
        const std::size_t without = simulate_stage_truth(stage(Stage::e, off, 4.0)).jumps.size();
        if (w.contains(fe) && fe < 0.5 * (w.fe_lower + w.fe_upper) - 0.5 * step) {
            EXPECT_GT(with_signal, 0u) << fe;
            EXPECT_EQ(without, 0u) << fe;
        }
        if (fe < w.fe_lower - 0.5 * step) EXPECT_EQ(with_signal, 0u) << fe;
        if (fe > w.fe_upper + 0.5 * step) EXPECT_GT(without, 0u) << fe;
    }
}

TEST(Experiments, StageAResponse) {
    const DriveConfig d = centred_drive();
    const StageResult a = run_vibres_stage(stage(Stage::a, d, 120.0));
    double zmax = 0.0;
    for (double z : a.truth.z.z) zmax = std::max(zmax, std::abs(z));
    EXPECT_NEAR(zmax / 45.8e-9, 1.0, 0.02);
    EXPECT_LT(zmax, CameraConfig{}.localization_sigma());
    const double peak = peak_amplitude(a.spectrum, 0.5);
    EXPECT_NEAR(peak / 45.8e-9, 1.0, 0.5);
    EXPECT_TRUE(a.truth.jumps.empty());
}

TEST(Experiments, StageCShowsNoEnhancement) {
    const DriveConfig d = centred_drive();
    const StageResult a = run_vibres_stage(stage(Stage::a, d, 120.0));
    const StageResult c = run_vibres_stage(stage(Stage::c, d, 120.0));
    EXPECT_TRUE(c.truth.jumps.empty());
    const auto e = enhancement_factor(c.spectrum, a.spectrum, 0.5);
    EXPECT_LT(e.factor, 2.0);
    EXPECT_GT(e.factor, 0.5);
}

TEST(Experiments, StageESwitchesPhaseLockedToSignal) {
    const TrapParams p;
    DriveConfig d = centred_drive();
    d.fe_force = inner_fe(p, d);
    const StageResult a = run_vibres_stage(stage(Stage::a, d, 120.0));
    const StageResult e = run_vibres_stage(stage(Stage::e, d, 120.0));
    EXPECT_TRUE(e.tuned);
    const auto& jumps = e.truth.jumps;
    ASSERT_GE(jumps.size(), 100u);
    EXPECT_EQ(jumps.size() % 2, 0u);

    std::vector<double> up, down;
    for (const auto& j : jumps) (j.to == Branch::upper ? up : down).push_back(j.at);
    ASSERT_FALSE(up.empty());
    ASSERT_FALSE(down.empty());
    const double period = 1.0 / 0.5;
    EXPECT_LT(oracle::circular_spread(up, period), 0.05);
    EXPECT_LT(oracle::circular_spread(down, period), 0.05);

    EXPECT_GE(enhancement_factor(e.spectrum, a.spectrum, 0.5).factor, 10.0);

    // dominant sub-Hz component is the signal, not a subharmonic
    std::size_t best = 1;
    for (std::size_t k = 1; k < e.spectrum.frequency.size() && e.spectrum.frequency[k] <= 1.0; ++k) {
        if (e.spectrum.amplitude[k] > e.spectrum.amplitude[best]) best = k;
    }
    EXPECT_NEAR(e.spectrum.frequency[best], 0.5, 1.5 * e.spectrum.bin_spacing());
}

TEST(Experiments, NoSignalNoPeak) {
    const TrapParams p;
    DriveConfig d = centred_drive();
    d.fe_force = inner_fe(p, d);
    d.fs_force = 0.0;
    const StageTruth truth = simulate_stage_truth(stage(Stage::e, d, 120.0));
    EXPECT_TRUE(truth.jumps.empty());
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        CameraConfig cam;
        cam.seed = seed;
        const SpectrumRecord spec = measure_stage(truth, cam).second;
        EXPECT_LT(peak_amplitude(spec, 0.5), 4.0 * noise_floor(spec, 0.5)) << seed;
    }
}

TEST(Experiments, UntunedStageEIsFlagged) {
    const TrapParams p;
    DriveConfig d = centred_drive();
    d.fe_force = 0.5 * operating_window(p, d).fe_lower;
    const StageResult e = run_vibres_stage(stage(Stage::e, d, 20.0));
    EXPECT_TRUE(e.truth.jumps.empty());
    EXPECT_FALSE(e.tuned);
}

TEST(Experiments, TuneCurveLimits) {
    const TrapParams p;
    const DriveConfig d = centred_drive();
    const OperatingWindow w = operating_window(p, d);
    TuneOptions o;
    o.fe_values = {0.0, inner_fe(p, d), w.fe_upper + 4.0 * (w.fe_upper - w.fe_lower)};
    const TuneResult r = tune_enhancement(p, d, o);
    ASSERT_EQ(r.curve.size(), 3u);
    EXPECT_NEAR(r.curve[0].factor, 1.0, 0.3);
    EXPECT_EQ(r.curve[0].jumps, 0u);
    EXPECT_GE(r.curve[1].factor, 10.0);
    // far above the window the oscillator switches at omega_e irrespective of the signal
    EXPECT_LT(r.curve[2].factor, 2.0);
    EXPECT_NEAR(static_cast<double>(r.curve[2].jumps), 2.0 * 50.0 * o.duration, 2.0);
    EXPECT_EQ(r.best_fe, o.fe_values[1]);

    DriveConfig weak = d;
    weak.f0_force = 1e-21;
    EXPECT_THROW(tune_enhancement(p, weak, o), ConfigurationError);
}

TEST(Experiments, DefaultScanBracketsWindow) {
    const TrapParams p;
    const DriveConfig d = centred_drive();
    const auto scan = default_enhancement_scan(p, d);
    const OperatingWindow w = operating_window(p, d);
    EXPECT_EQ(scan.size(), 41u);
    EXPECT_LT(scan.front(), w.fe_lower);
    EXPECT_GT(scan.back(), w.fe_upper);
    EXPECT_GE(std::count_if(scan.begin(), scan.end(), [&](double f) { return w.contains(f); }), 5);
}

TEST(Experiments, StageValidation) {
    DriveConfig d = centred_drive();
    EXPECT_THROW(simulate_stage_truth(stage(Stage::e, d, 10.0)), ConfigurationError);  // F_e = 0
    VibresStageConfig c = stage(Stage::a, d, 10.0);
    c.drive.f0_force = 1e-21;
    EXPECT_THROW(simulate_stage_truth(c), ConfigurationError);
    c = stage(Stage::a, d, 10.0);
    c.sample_rate = 50.0;
    EXPECT_THROW(simulate_stage_truth(c), ConfigurationError);
}

}  // namespace
