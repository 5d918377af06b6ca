#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "funnel/errors.hpp"
#include "funnel/rk4.hpp"
#include "funnel/trap_model.hpp"

namespace funnel {

// =============================================================================
// States and trajectories
// =============================================================================

/// Phase-space point of the exact two-mode model (SI units).
struct FullState {
    double x = 0.0;
    double px = 0.0;
    double z = 0.0;
    double pz = 0.0;
    double t = 0.0;
};

/// Rotating-frame envelope alpha of x = alpha e^{-i omega_0 t} + c.c., plus the axial mode.
struct EnvelopeState {
    double alpha_re = 0.0;
    double alpha_im = 0.0;
    double z = 0.0;
    double vz = 0.0;
    double t = 0.0;

    std::complex<double> alpha() const { return {alpha_re, alpha_im}; }
};

struct TrajectoryMeta {
    std::string model;
    TrapParams trap;
    DriveConfig drive;
    double dt = 0.0;
    std::size_t stride = 1;
    std::uint64_t seed = 0;
};

/// Uniformly decimated integration output; time is stored in each sample.
template <class State>
struct Trajectory {
    std::vector<State> samples;
    TrajectoryMeta meta;

    double sample_interval() const { return meta.dt * static_cast<double>(meta.stride); }
};

template <class State>
struct IntegrationOptions {
    /// Keep every `stride`-th step (the initial state is always kept).
    std::size_t stride = 1;
    /// Called with every step, including the initial state; independent of stride.
    std::function<void(const State&)> observer;
};

// =============================================================================
// Scaled models. Time in units of 1/Omega, lengths in micrometres.
// =============================================================================

namespace detail {

inline constexpr double kLengthScale = units::kMicrometer;

inline std::size_t step_count(double t_end, double dt) {
    return static_cast<std::size_t>(std::floor(t_end / dt + 1e-9));
}

inline double coupling_ratio(const TrapParams& p) {
    // micrometre expressed in funnel lengths; zero for a straight trap
    return std::isinf(p.funnel_length) ? 0.0 : kLengthScale / p.funnel_length;
}

}  // namespace detail

/// Exact equations of motion from the two-mode Hamiltonian plus damping:
///   m x'' = -m wx^2 (1 + 2z/l0) x + F_x(t) - m gamma x'
///   m z'' = -m W^2 z - m wx^2 x^2 / l0 + F_z(t) - m gamma_z z'
class FullModel {
  public:
    FullModel(const TrapParams& p, const DriveConfig& d) : p_(p), d_(d) {
        const double w = p.omega_z;
        ratio2_ = (p.omega_x / w) * (p.omega_x / w);
        coupling_ = detail::coupling_ratio(p);
        force_scale_ = 1.0 / (p.mass * detail::kLengthScale * w * w);
        gamma_x_ = p.damping / w;
        gamma_z_ = p.axial_gamma() / w;
    }

    double time_scale() const { return 1.0 / p_.omega_z; }

    StateVector<4> to_scaled(const FullState& s) const {
        const double v = p_.mass * detail::kLengthScale * p_.omega_z;
        return {s.x / detail::kLengthScale, s.px / v, s.z / detail::kLengthScale, s.pz / v};
    }

    FullState from_scaled(const StateVector<4>& y, double t) const {
        const double v = p_.mass * detail::kLengthScale * p_.omega_z;
        return {y[0] * detail::kLengthScale, y[1] * v, y[2] * detail::kLengthScale, y[3] * v, t};
    }

    StateVector<4> rhs(double tau, const StateVector<4>& y) const {
        const double t = tau * time_scale();
        const double fx = d_.f0_force * std::cos(d_.omega_0 * t + d_.radial_phase);
        const double fz = axial_force(d_, t);
        return {y[1],
                -ratio2_ * (1.0 + 2.0 * coupling_ * y[2]) * y[0] + fx * force_scale_ -
                    gamma_x_ * y[1],
                y[3],
                -y[2] - ratio2_ * coupling_ * y[0] * y[0] + fz * force_scale_ - gamma_z_ * y[3]};
    }

  private:
    TrapParams p_;
    DriveConfig d_;
    double ratio2_ = 0.0;
    double coupling_ = 0.0;
    double force_scale_ = 0.0;
    double gamma_x_ = 0.0;
    double gamma_z_ = 0.0;
};

/// Rotating-wave envelope equations
///   alpha' = i (Delta - wx z / l0) alpha + i f0 e^{-i phi} - (gamma/2) alpha
///   z''    = -W^2 z - (2 wx^2 / l0) |alpha|^2 + F_z(t)/m - gamma_z z'
/// The detuning can be changed between steps (stepwise sweeps).
class EnvelopeModel {
  public:
    EnvelopeModel(const TrapParams& p, const DriveConfig& d) : p_(p), d_(d) {
        const double w = p.omega_z;
        ratio2_ = (p.omega_x / w) * (p.omega_x / w);
        coupling_ = detail::coupling_ratio(p);
        force_scale_ = 1.0 / (p.mass * detail::kLengthScale * w * w);
        half_gamma_ = 0.5 * p.damping / w;
        gamma_z_ = p.axial_gamma() / w;
        const double f = reduced_drive(p, d.f0_force) / (detail::kLengthScale * w);
        drive_re_ = f * std::cos(d.radial_phase);
        drive_im_ = -f * std::sin(d.radial_phase);
        set_detuning(d.omega_0 - p.omega_x);
    }

    void set_detuning(double delta) { detuning_ = delta / p_.omega_z; }
    double detuning() const { return detuning_ * p_.omega_z; }
    double time_scale() const { return 1.0 / p_.omega_z; }

    StateVector<4> to_scaled(const EnvelopeState& s) const {
        return {s.alpha_re / detail::kLengthScale, s.alpha_im / detail::kLengthScale,
                s.z / detail::kLengthScale, s.vz / (detail::kLengthScale * p_.omega_z)};
    }

    EnvelopeState from_scaled(const StateVector<4>& y, double t) const {
        return {y[0] * detail::kLengthScale, y[1] * detail::kLengthScale,
                y[2] * detail::kLengthScale, y[3] * detail::kLengthScale * p_.omega_z, t};
    }

    StateVector<4> rhs(double tau, const StateVector<4>& y) const {
        const double t = tau * time_scale();
        const double c = detuning_ - (p_.omega_x / p_.omega_z) * coupling_ * y[2];
        const double a2 = y[0] * y[0] + y[1] * y[1];
        return {-c * y[1] - drive_im_ - half_gamma_ * y[0],
                c * y[0] + drive_re_ - half_gamma_ * y[1],
                y[3],
                -y[2] - 2.0 * ratio2_ * coupling_ * a2 + axial_force(d_, t) * force_scale_ -
                    gamma_z_ * y[3]};
    }

  private:
    TrapParams p_;
    DriveConfig d_;
    double ratio2_ = 0.0;
    double coupling_ = 0.0;
    double force_scale_ = 0.0;
    double half_gamma_ = 0.0;
    double gamma_z_ = 0.0;
    double drive_re_ = 0.0;
    double drive_im_ = 0.0;
    double detuning_ = 0.0;
};

struct EnvelopeDerivative {
    std::complex<double> dalpha;  // m/s
    double dz = 0.0;              // m/s
    double dvz = 0.0;             // m/s^2
};

/// Right-hand side of the envelope system in SI units.
inline EnvelopeDerivative envelope_rhs(const EnvelopeState& s, const TrapParams& p,
                                       const DriveConfig& d) {
    const double shift = std::isinf(p.funnel_length) ? 0.0 : p.omega_x * s.z / p.funnel_length;
    const std::complex<double> i(0.0, 1.0);
    const std::complex<double> a = s.alpha();
    const double f0 = reduced_drive(p, d.f0_force);
    const std::complex<double> drive = f0 * std::exp(-i * d.radial_phase);
    const double delta = d.omega_0 - p.omega_x;
    EnvelopeDerivative out;
    out.dalpha = i * (delta - shift) * a + i * drive - 0.5 * p.damping * a;
    out.dz = s.vz;
    const double pull = std::isinf(p.funnel_length)
                            ? 0.0
                            : 2.0 * p.omega_x * p.omega_x / p.funnel_length * std::norm(a);
    out.dvz = -p.omega_z * p.omega_z * s.z - pull + axial_force(d, s.t) / p.mass -
              p.axial_gamma() * s.vz;
    return out;
}

/// Hamiltonian of the two-mode model at time t (drive evaluated at t).
inline double hamiltonian(const FullState& s, const TrapParams& p, const DriveConfig& d) {
    const double m = p.mass;
    const double coupling = std::isinf(p.funnel_length) ? 0.0 : 2.0 * s.z / p.funnel_length;
    const double fx = d.f0_force * std::cos(d.omega_0 * s.t + d.radial_phase);
    return (s.px * s.px + s.pz * s.pz) / (2.0 * m) + 0.5 * m * p.omega_z * p.omega_z * s.z * s.z +
           0.5 * m * p.omega_x * p.omega_x * (1.0 + coupling) * s.x * s.x - fx * s.x -
           axial_force(d, s.t) * s.z;
}

// =============================================================================
// Integrators
// =============================================================================

namespace detail {

template <class Model, class State>
Trajectory<State> integrate(const Model& model, const State& s0, double t_end, double dt,
                            const IntegrationOptions<State>& opts, TrajectoryMeta meta) {
    if (opts.stride == 0) throw ConfigurationError("output stride must be positive");
    const std::size_t n = step_count(t_end, dt);
    const double h = dt / model.time_scale();
    const double tau0 = s0.t / model.time_scale();

    Trajectory<State> traj;
    meta.dt = dt;
    meta.stride = opts.stride;
    traj.meta = std::move(meta);
    traj.samples.reserve(n / opts.stride + 1);
    traj.samples.push_back(s0);
    if (opts.observer) opts.observer(s0);

    StateVector<4> y = model.to_scaled(s0);
    auto f = [&model](double tau, const StateVector<4>& v) { return model.rhs(tau, v); };
    for (std::size_t i = 0; i < n; ++i) {
        const double tau = tau0 + static_cast<double>(i) * h;
        StateVector<4> next = rk4_step(y, tau, h, f);
        if (!all_finite(next)) {
            const double t_last = s0.t + static_cast<double>(i) * dt;
            throw DivergenceError(t_last, "integration diverged after t = " +
                                              std::to_string(t_last) + " s");
        }
        y = next;
        const double t = s0.t + static_cast<double>(i + 1) * dt;
        if (opts.observer || (i + 1) % opts.stride == 0) {
            const State s = model.from_scaled(y, t);
            if (opts.observer) opts.observer(s);
            if ((i + 1) % opts.stride == 0) traj.samples.push_back(s);
        }
    }
    return traj;
}

}  // namespace detail

/// Largest admissible step for the full model: 200 steps per radial period.
inline double max_full_step(const TrapParams& p) { return units::kTwoPi / (200.0 * p.omega_x); }

/// Largest admissible step for the envelope model: 50 steps per axial period.
inline double max_envelope_step(const TrapParams& p) {
    return units::kTwoPi / (50.0 * p.omega_z);
}

inline constexpr double kMaxFullDuration = 50e-3;

/// Fixed-step RK4 integration of the exact two-mode dynamics.
inline Trajectory<FullState> integrate_full(const FullState& s0, const TrapParams& p,
                                            const DriveConfig& d, double t_end, double dt,
                                            const IntegrationOptions<FullState>& opts = {}) {
    validate(p);
    validate(d);
    if (!(dt > 0.0) || dt > max_full_step(p) * (1.0 + 1e-12)) {
        throw ConfigurationError("full-model step must satisfy 0 < dt <= 2 pi / (200 omega_x)");
    }
    if (!(t_end >= 0.0) || t_end > kMaxFullDuration * (1.0 + 1e-12)) {
        throw ConfigurationError("full-model duration limited to 50 ms");
    }
    return detail::integrate(FullModel(p, d), s0, t_end, dt, opts,
                             TrajectoryMeta{"full", p, d, dt, opts.stride, 0});
}

/// Fixed-step RK4 integration of the envelope system.
inline Trajectory<EnvelopeState> integrate_envelope(
    const EnvelopeState& s0, const TrapParams& p, const DriveConfig& d, double t_end, double dt,
    const IntegrationOptions<EnvelopeState>& opts = {}) {
    validate(p);
    validate(d);
    if (!(dt > 0.0) || dt > max_envelope_step(p) * (1.0 + 1e-12)) {
        throw ConfigurationError("envelope step must satisfy 0 < dt <= 2 pi / (50 Omega)");
    }
    if (!(t_end >= 0.0)) throw ConfigurationError("t_end must be non-negative");
    return detail::integrate(EnvelopeModel(p, d), s0, t_end, dt, opts,
                             TrajectoryMeta{"envelope", p, d, dt, opts.stride, 0});
}

// =============================================================================
// Reduction accuracy
// =============================================================================

struct AccuracyReport {
    double max_rel_dev_alpha = 0.0;  // max | |alpha_full| - |alpha_env| | / max |alpha_env|
    double max_rel_dev_z = 0.0;      // max | z_full - z_env | / max |z_env|
    double alpha_scale = 0.0;        // max |alpha_env| over the window, m
    double z_scale = 0.0;            // max |z_env| over the window, m
    std::size_t checkpoints = 0;
    std::size_t steps_per_drive_period = 0;
};

/// Runs the full and envelope models from rest over `window` seconds and
/// compares |alpha| and z. The full model is demodulated at omega_0 and both
/// x e^{i omega_0 t} and z are averaged over exactly one drive period
/// (trapezoidal, so the 2 omega_0 component cancels), then compared with the
/// envelope state at the centre of that period.
inline AccuracyReport envelope_accuracy_check(const TrapParams& p, const DriveConfig& d,
                                              double window) {
    validate(p);
    validate(d);
    const double delta = detuning(p, d);
    if (!(std::abs(delta) < 0.25 * p.omega_z)) {
        throw ConfigurationError("accuracy check requires |Delta| << Omega (|Delta| < Omega/4)");
    }
    const double period = units::kTwoPi / d.omega_0;
    std::size_t m = 200;
    while (period / static_cast<double>(m) > max_full_step(p)) m += 10;
    const double dt_full = period / static_cast<double>(m);
    const std::size_t env_per_period = 10;
    const double dt_env = period / static_cast<double>(env_per_period);
    const auto periods = static_cast<std::size_t>(std::floor(window / period));
    if (periods < 2) throw ConfigurationError("window must span at least two drive periods");
    if (window > kMaxFullDuration) throw ConfigurationError("window limited to 50 ms");

    const auto env = integrate_envelope(EnvelopeState{}, p, d,
                                        static_cast<double>(periods) * period, dt_env);

    // Trapezoidal one-period averages of x e^{i omega_0 t} and z.
    std::vector<double> full_alpha, full_z;
    std::complex<double> acc = 0.0;
    double zacc = 0.0;
    std::size_t step = 0;
    IntegrationOptions<FullState> opts;
    opts.stride = periods * m;
    opts.observer = [&](const FullState& s) {
        const std::complex<double> c = s.x * std::exp(std::complex<double>(0.0, d.omega_0 * s.t));
        const std::size_t phase = step % m;
        if (step > 0 && phase == 0) {
            acc += 0.5 * c;
            zacc += 0.5 * s.z;
            full_alpha.push_back(std::abs(acc) / static_cast<double>(m));
            full_z.push_back(zacc / static_cast<double>(m));
            acc = 0.5 * c;
            zacc = 0.5 * s.z;
        } else if (phase == 0) {
            acc = 0.5 * c;
            zacc = 0.5 * s.z;
        } else {
            acc += c;
            zacc += s.z;
        }
        ++step;
    };
    integrate_full(FullState{}, p, d, static_cast<double>(periods * m) * dt_full, dt_full, opts);

    AccuracyReport report;
    report.steps_per_drive_period = m;
    for (const auto& e : env.samples) {
        report.alpha_scale = std::max(report.alpha_scale, std::abs(e.alpha()));
        report.z_scale = std::max(report.z_scale, std::abs(e.z));
    }
    for (std::size_t j = 0; j < full_alpha.size(); ++j) {
        const std::size_t idx = j * env_per_period + env_per_period / 2;
        if (idx >= env.samples.size()) break;
        const auto& e = env.samples[idx];
        if (report.alpha_scale > 0.0) {
            report.max_rel_dev_alpha =
                std::max(report.max_rel_dev_alpha,
                         std::abs(full_alpha[j] - std::abs(e.alpha())) / report.alpha_scale);
        }
        if (report.z_scale > 0.0) {
            report.max_rel_dev_z =
                std::max(report.max_rel_dev_z, std::abs(full_z[j] - e.z) / report.z_scale);
        }
        ++report.checkpoints;
    }
    return report;
}

}  // namespace funnel
