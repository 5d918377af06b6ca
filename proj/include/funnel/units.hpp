#pragma once

#include <numbers>

// SI internally, angular frequencies in rad/s. Conversions happen only at the
// I/O boundary.
namespace funnel::units {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double kHbar = 1.054571817e-34;              // J s
inline constexpr double kAtomicMassUnit = 1.66053906660e-27;  // kg

inline constexpr double kZeptonewton = 1e-21;
inline constexpr double kMicrometer = 1e-6;
inline constexpr double kNanometer = 1e-9;
inline constexpr double kMicrovolt = 1e-6;

constexpr double hz_to_rad(double hz) { return kTwoPi * hz; }
constexpr double rad_to_hz(double rad_per_s) { return rad_per_s / kTwoPi; }

}  // namespace funnel::units
