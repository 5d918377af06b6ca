#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "funnel/errors.hpp"
#include "funnel/units.hpp"

namespace funnel {

// =============================================================================
// Parameters
// =============================================================================

/// Trap and particle constants. Frequencies are angular (rad/s).
struct TrapParams {
    double mass = 40.0 * units::kAtomicMassUnit;
    double omega_x = units::hz_to_rad(1.14e6);
    double omega_y = units::hz_to_rad(1.15e6);
    double omega_z = units::hz_to_rad(100e3);  // axial secular frequency
    double funnel_length = 1.81e-3;            // may be +inf (straight trap)
    double damping = units::hz_to_rad(250.0);
    /// Axial damping override; unset means the radial rate applies to both modes.
    std::optional<double> axial_damping;

    double axial_gamma() const { return axial_damping.value_or(damping); }
};

/// Radial drive F_x = F0 cos(omega_0 t + radial_phase) and the two axial
/// channels F_s cos(omega_s t), F_e cos(omega_e t).
struct DriveConfig {
    double f0_force = 30.0 * units::kZeptonewton;
    double omega_0 = units::hz_to_rad(1.14e6);
    double fs_force = 0.0;
    double omega_s = units::hz_to_rad(0.5);
    double fe_force = 0.0;
    double omega_e = units::hz_to_rad(50.0);
    double radial_phase = 0.0;
};

/// Closed-form quantities derived from TrapParams and DriveConfig.
struct DerivedParams {
    double xi = 0.0;          // Duffing coefficient, rad/s per m^2
    double f0_reduced = 0.0;  // m/s
    double zpf_axial = 0.0;   // m
};

/// Radial force ceiling set by saturation of the cooling transition.
inline constexpr double kRadialForceCap = 30.0 * units::kZeptonewton;

/// Endcap calibration: 1.2 zN force amplitude per 500 uV voltage amplitude.
inline constexpr double kVoltToForce = 1.2 * units::kZeptonewton / (500.0 * units::kMicrovolt);

// =============================================================================
// Validation
// =============================================================================

inline void validate(const TrapParams& p) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || std::isnan(v)) {
            throw ParameterError(std::string(name) + " must be strictly positive");
        }
    };
    auto finite_positive = [&](double v, const char* name) {
        positive(v, name);
        if (!std::isfinite(v)) throw ParameterError(std::string(name) + " must be finite");
    };
    finite_positive(p.mass, "mass");
    finite_positive(p.omega_x, "omega_x");
    finite_positive(p.omega_y, "omega_y");
    finite_positive(p.omega_z, "omega_z");
    positive(p.funnel_length, "funnel_length");
    finite_positive(p.damping, "damping");
    if (p.axial_damping) finite_positive(*p.axial_damping, "axial_damping");
    if (!(p.omega_z < p.omega_x)) {
        throw ParameterError("omega_z must be below omega_x (axial mode must be the slow mode)");
    }
    if (!(p.damping < p.omega_z) || !(p.axial_gamma() < p.omega_z)) {
        throw ParameterError("damping must be below omega_z (underdamped axial mode)");
    }
}

inline void validate(const DriveConfig& d) {
    auto nonneg = [](double v, const char* name) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ParameterError(std::string(name) + " must be finite and non-negative");
        }
    };
    nonneg(d.f0_force, "f0_force");
    nonneg(d.fs_force, "fs_force");
    nonneg(d.fe_force, "fe_force");
    nonneg(d.omega_0, "omega_0");
    nonneg(d.omega_s, "omega_s");
    nonneg(d.omega_e, "omega_e");
    if (d.f0_force > kRadialForceCap * (1.0 + 1e-12)) {
        throw ParameterError("f0_force exceeds the 30 zN radial saturation limit");
    }
    const bool all_active = d.f0_force > 0.0 && d.fs_force > 0.0 && d.fe_force > 0.0;
    if (all_active && !(d.omega_s < d.omega_e && d.omega_e < d.omega_0)) {
        throw ParameterError("drive frequencies must satisfy omega_s < omega_e < omega_0");
    }
}

// =============================================================================
// Closed forms
// =============================================================================

inline double detuning(const TrapParams& p, const DriveConfig& d) { return d.omega_0 - p.omega_x; }

inline DriveConfig with_detuning(const TrapParams& p, DriveConfig d, double delta) {
    d.omega_0 = p.omega_x + delta;
    return d;
}

/// xi = 2 omega_x^3 / (Omega^2 l0^2).
inline double duffing_coefficient(const TrapParams& p) {
    const double l = p.funnel_length;
    return 2.0 * p.omega_x * p.omega_x * p.omega_x / (p.omega_z * p.omega_z * l * l);
}

/// f0 = F0 / (4 m omega_x).
inline double reduced_drive(const TrapParams& p, double f0_force) {
    return f0_force / (4.0 * p.mass * p.omega_x);
}

/// Inverse of reduced_drive.
inline double radial_force_for(const TrapParams& p, double f0_reduced) {
    return f0_reduced * 4.0 * p.mass * p.omega_x;
}

/// Axial zero-point length sqrt(hbar / 2 m Omega).
inline double axial_zero_point_length(const TrapParams& p) {
    return std::sqrt(units::kHbar / (2.0 * p.mass * p.omega_z));
}

inline DerivedParams derive_params(const TrapParams& p, const DriveConfig& d) {
    validate(p);
    validate(d);
    return DerivedParams{duffing_coefficient(p), reduced_drive(p, d.f0_force),
                         axial_zero_point_length(p)};
}

enum class RadialAxis { x, y };

struct LocalFrequency {
    double omega = 0.0;
    /// False when |z / l0| >= 0.5, where the linearised funnel is not trustworthy.
    bool within_validity = true;
};

/// omega_axis (1 + z / l0).
inline LocalFrequency local_radial_frequency(const TrapParams& p, double z, RadialAxis axis) {
    const double base = axis == RadialAxis::x ? p.omega_x : p.omega_y;
    const double ratio = z / p.funnel_length;
    return {base * (1.0 + ratio), std::abs(ratio) < 0.5};
}

/// F_z(t) = F_e cos(omega_e t) + F_s cos(omega_s t).
inline double axial_force(const DriveConfig& d, double t) {
    return d.fe_force * std::cos(d.omega_e * t) + d.fs_force * std::cos(d.omega_s * t);
}

/// delta shift of the radial resonance produced by an axial force.
inline double detuning_shift_for_force(const TrapParams& p, double fz) {
    return p.omega_x * fz / (p.mass * p.funnel_length * p.omega_z * p.omega_z);
}

/// Axial force that shifts the radial resonance by `delta`.
inline double force_for_detuning_shift(const TrapParams& p, double delta) {
    return delta * p.mass * p.funnel_length * p.omega_z * p.omega_z / p.omega_x;
}

/// delta(t) = omega_x F_z(t) / (m l0 Omega^2).
inline double detuning_modulation(const TrapParams& p, const DriveConfig& d, double t) {
    return detuning_shift_for_force(p, axial_force(d, t));
}

/// Instantaneous axial equilibrium
/// z0 = -2 (omega_x^2 / Omega^2) |alpha|^2 / l0 + F_z / (m Omega^2).
inline double equilibrium_displacement(const TrapParams& p, double alpha_sq, double fz) {
    if (alpha_sq < 0.0) throw DomainError("alpha_sq must be non-negative");
    const double w2 = p.omega_z * p.omega_z;
    return -2.0 * (p.omega_x * p.omega_x / w2) * alpha_sq / p.funnel_length +
           fz / (p.mass * w2);
}

/// Endcap voltage amplitude to axial force amplitude.
inline double volt_to_force(double volts) {
    if (volts < 0.0) throw DomainError("voltage amplitude must be non-negative");
    return kVoltToForce * volts;
}

inline double force_to_volt(double newtons) { return newtons / kVoltToForce; }

}  // namespace funnel
