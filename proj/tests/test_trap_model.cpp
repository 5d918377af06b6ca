#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "funnel/trap_model.hpp"

using namespace funnel;

namespace {

constexpr double kTwoPi = 6.283185307179586;

// Paper constants written out independently of the library defaults.
constexpr double kMass = 40.0 * 1.66053906660e-27;
constexpr double kOmegaX = kTwoPi * 1.14e6;
constexpr double kOmegaZ = kTwoPi * 100e3;
constexpr double kL0 = 1.81e-3;

TEST(TrapModel, DuffingCoefficientMatchesPaperValue) {
    TrapParams p;
    const double xi_hz = duffing_coefficient(p) / kTwoPi;
    EXPECT_NEAR(xi_hz / 9.04e13, 1.0, 5e-3);
    // same quantity evaluated from the constants above
    const double direct = 2.0 * std::pow(kOmegaX, 3) / (kOmegaZ * kOmegaZ * kL0 * kL0);
    EXPECT_NEAR(duffing_coefficient(p) / direct, 1.0, 1e-12);
}

TEST(TrapModel, AxialZeroPointLength) {
    TrapParams p;
    p.mass = 6.642e-26;
    EXPECT_NEAR(axial_zero_point_length(p), 36e-9, 1e-9);
}

TEST(TrapModel, StraightTrapHasNoNonlinearity) {
    TrapParams p;
    p.funnel_length = std::numeric_limits<double>::infinity();
    EXPECT_EQ(duffing_coefficient(p), 0.0);
    EXPECT_NO_THROW(validate(p));
}

TEST(TrapModel, ReducedDriveAtSaturationForce) {
    TrapParams p;
    const double f0 = reduced_drive(p, 30e-21);
    EXPECT_NEAR(f0, 30e-21 / (4.0 * kMass * kOmegaX), 1e-15);
    EXPECT_NEAR(f0, 1.58e-2, 0.01 * 1.58e-2);
    EXPECT_NEAR(radial_force_for(p, f0), 30e-21, 1e-33);
}

TEST(TrapModel, DeriveParamsRejectsInvalidTraps) {
    DriveConfig d;
    TrapParams p;
    p.omega_z = p.omega_x * 2.0;
    EXPECT_THROW(derive_params(p, d), ParameterError);
    p = TrapParams{};
    p.damping = p.omega_z;
    EXPECT_THROW(derive_params(p, d), ParameterError);
    p = TrapParams{};
    p.mass = -1.0;
    EXPECT_THROW(derive_params(p, d), ParameterError);
    p = TrapParams{};
    p.funnel_length = 0.0;
    EXPECT_THROW(derive_params(p, d), ParameterError);
}

TEST(TrapModel, DriveValidation) {
    DriveConfig d;
    d.f0_force = 31e-21;
    EXPECT_THROW(validate(d), ParameterError);
    d.f0_force = 30e-21;
    EXPECT_NO_THROW(validate(d));
    d.fs_force = 1e-21;
    d.fe_force = 1e-21;
    d.omega_e = d.omega_s / 2.0;
    EXPECT_THROW(validate(d), ParameterError);
}

TEST(TrapModel, LocalRadialFrequency) {
    TrapParams p;
    EXPECT_DOUBLE_EQ(local_radial_frequency(p, 0.0, RadialAxis::x).omega, p.omega_x);
    EXPECT_NEAR(local_radial_frequency(p, -p.funnel_length / 100.0, RadialAxis::x).omega,
                0.99 * p.omega_x, 1e-9 * p.omega_x);
    const auto shift = local_radial_frequency(p, -14.4e-6, RadialAxis::x).omega - p.omega_x;
    EXPECT_NEAR(shift / kTwoPi, -9.07e3, 0.05e3);
    EXPECT_DOUBLE_EQ(local_radial_frequency(p, 0.0, RadialAxis::y).omega, p.omega_y);
    EXPECT_FALSE(local_radial_frequency(p, 0.6 * p.funnel_length, RadialAxis::x).within_validity);
}

TEST(TrapModel, AxialForce) {
    DriveConfig d;
    d.fs_force = 1.2e-21;
    EXPECT_DOUBLE_EQ(axial_force(d, 0.0), 1.2e-21);
    EXPECT_NEAR(axial_force(d, 1.0), -1.2e-21, 1e-33);
    d.fs_force = 0.0;
    for (double t : {0.0, 0.3, 7.1}) EXPECT_EQ(axial_force(d, t), 0.0);
}

TEST(TrapModel, DetuningModulation) {
    TrapParams p;
    DriveConfig d;
    EXPECT_EQ(detuning_modulation(p, d, 0.0), 0.0);
    d.fs_force = 1.2e-21;
    const double expect = kOmegaX * 1.2e-21 / (kMass * kL0 * kOmegaZ * kOmegaZ);
    EXPECT_NEAR(detuning_modulation(p, d, 0.0), expect, 1e-9 * expect);
    EXPECT_NEAR(expect, 181.0, 1.0);
    EXPECT_NEAR(expect / kTwoPi, 28.8, 0.1);
    EXPECT_NEAR(force_for_detuning_shift(p, expect), 1.2e-21, 1e-33);
}

TEST(TrapModel, EquilibriumDisplacement) {
    TrapParams p;
    EXPECT_EQ(equilibrium_displacement(p, 0.0, 0.0), 0.0);
    // 1.2 zN static force on the axial spring
    const double z = equilibrium_displacement(p, 0.0, 1.2e-21);
    EXPECT_NEAR(z, 1.2e-21 / (kMass * kOmegaZ * kOmegaZ), 1e-15);
    EXPECT_NEAR(std::abs(z) / 45.8e-9, 1.0, 0.02);
    const double pulled = equilibrium_displacement(p, 1e-10, 0.0);
    EXPECT_NEAR(pulled, -2.0 * (kOmegaX * kOmegaX) / (kOmegaZ * kOmegaZ) * 1e-10 / kL0, 1e-12);
    EXPECT_NEAR(pulled, -14.4e-6, 0.1e-6);
    EXPECT_THROW(equilibrium_displacement(p, -1e-12, 0.0), DomainError);
}

TEST(TrapModel, VoltToForce) {
    EXPECT_NEAR(volt_to_force(500e-6), 1.2e-21, 1e-33);
    EXPECT_EQ(volt_to_force(0.0), 0.0);
    EXPECT_NEAR(volt_to_force(250e-6), 0.6e-21, 1e-33);
    EXPECT_NEAR(force_to_volt(1.2e-21), 500e-6, 1e-15);
    EXPECT_THROW(volt_to_force(-1e-6), DomainError);
}

}  // namespace
