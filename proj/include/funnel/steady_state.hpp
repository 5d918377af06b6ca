#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "funnel/errors.hpp"
#include "funnel/trap_model.hpp"

namespace funnel {

// Steady states of the driven Duffing envelope
//
//   d(alpha)/dt = i (D + xi |alpha|^2) alpha + i f0 - (gamma/2) alpha,
//
// with effective detuning D = Delta - delta(t). Writing u = |alpha|^2, fixed
// points satisfy
//
//   u [(D + xi u)^2 + gamma^2/4] = f0^2.
//
// The solver works with eta = xi u / gamma, d = D / gamma, k = xi f0^2 / gamma^3:
//
//   P(eta) = eta^3 + 2 d eta^2 + (d^2 + 1/4) eta - k,
//
// which keeps all coefficients O(1..1e6) for realistic trap parameters.

enum class Stability { stable, unstable };
enum class Branch { lower, upper };

inline const char* to_string(Stability s) { return s == Stability::stable ? "stable" : "unstable"; }
inline const char* to_string(Branch b) { return b == Branch::lower ? "lower" : "upper"; }

struct SteadyStateSolution {
    double u = 0.0;          // m^2
    double amplitude = 0.0;  // m
    Stability stability = Stability::stable;
    std::array<std::complex<double>, 2> jacobian_eigs{};
    /// Merged saddle-node pair (roots within the merge tolerance).
    bool degenerate = false;
};

struct StabilityResult {
    Stability stability = Stability::stable;
    std::array<std::complex<double>, 2> eigenvalues{};
};

/// Roots closer than this (relative in u) are reported once, as a saddle-node pair.
inline constexpr double kRootMergeTolerance = 1e-6;

namespace detail {

inline double cubic_value(double eta, double d, double k) {
    return ((eta + 2.0 * d) * eta + (d * d + 0.25)) * eta - k;
}

inline double cubic_slope(double eta, double d) {
    return (3.0 * eta + 4.0 * d) * eta + d * d + 0.25;
}

/// Newton polish that only accepts steps which reduce |P|.
inline double polish(double eta, double d, double k) {
    double f = cubic_value(eta, d, k);
    for (int it = 0; it < 8 && f != 0.0; ++it) {
        const double fp = cubic_slope(eta, d);
        if (fp == 0.0) break;
        const double next = eta - f / fp;
        const double fn = cubic_value(next, d, k);
        if (!(std::abs(fn) < std::abs(f))) break;
        eta = next;
        f = fn;
    }
    return eta;
}

/// Real roots of P, ascending, before merging. Trigonometric/hyperbolic
/// forms of the depressed cubic t^3 + p t + q = 0 with eta = t - 2d/3.
inline std::vector<double> cubic_real_roots(double d, double k) {
    const double shift = -2.0 * d / 3.0;
    const double p = 0.25 - d * d / 3.0;
    const double q = -2.0 * d * d * d / 27.0 - d / 6.0 - k;
    std::vector<double> roots;
    const double disc = 4.0 * p * p * p + 27.0 * q * q;  // < 0 => three real roots
    if (p < 0.0 && disc <= 0.0) {
        const double m = 2.0 * std::sqrt(-p / 3.0);
        const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
        const double theta = std::acos(arg) / 3.0;
        for (int j = 0; j < 3; ++j) {
            roots.push_back(m * std::cos(theta - units::kTwoPi * j / 3.0) + shift);
        }
    } else if (p < 0.0) {
        const double m = 2.0 * std::sqrt(-p / 3.0);
        const double arg = std::max(1.0, std::abs(3.0 * q / (p * m)));
        const double t = -std::copysign(1.0, q) * m * std::cosh(std::acosh(arg) / 3.0);
        roots.push_back(t + shift);
    } else if (p > 0.0) {
        const double m = 2.0 * std::sqrt(p / 3.0);
        const double t = -m * std::sinh(std::asinh(3.0 * q / (p * m)) / 3.0);
        roots.push_back(t + shift);
    } else {
        roots.push_back(std::cbrt(-q) + shift);
    }
    for (double& r : roots) r = polish(r, d, k);
    std::sort(roots.begin(), roots.end());
    return roots;
}

inline std::array<std::complex<double>, 2> jacobian_eigenvalues(double u, double delta_eff,
                                                                double gamma, double xi) {
    // Real 2x2 flow: trace = -gamma, det = gamma^2/4 + (D + xi u)(D + 3 xi u).
    const double s = delta_eff + xi * u;
    const double disc = -s * (delta_eff + 3.0 * xi * u);
    const double half = 0.5 * gamma;
    if (disc >= 0.0) {
        const double r = std::sqrt(disc);
        return {std::complex<double>(-half - r, 0.0), std::complex<double>(-half + r, 0.0)};
    }
    const double w = std::sqrt(-disc);
    return {std::complex<double>(-half, -w), std::complex<double>(-half, w)};
}

inline Stability stability_of(const std::array<std::complex<double>, 2>& eigs) {
    return (eigs[0].real() < 0.0 && eigs[1].real() < 0.0) ? Stability::stable
                                                          : Stability::unstable;
}

inline SteadyStateSolution make_solution(double u, double delta_eff, double gamma, double xi,
                                         bool degenerate) {
    SteadyStateSolution s;
    s.u = u;
    s.amplitude = std::sqrt(u);
    s.jacobian_eigs = jacobian_eigenvalues(u, delta_eff, gamma, xi);
    s.stability = stability_of(s.jacobian_eigs);
    s.degenerate = degenerate;
    return s;
}

}  // namespace detail

/// Relative residual |u[(D+xi u)^2 + gamma^2/4] - f0^2| / f0^2.
inline double steady_state_residual(double u, double delta_eff, double f0_reduced, double gamma,
                                    double xi) {
    const double s = delta_eff + xi * u;
    const double lhs = u * (s * s + 0.25 * gamma * gamma);
    const double f2 = f0_reduced * f0_reduced;
    if (f2 == 0.0) return std::abs(lhs);
    return std::abs(lhs - f2) / f2;
}

/// All real non-negative roots, ascending in u, each with its linear
/// stability. One root outside the bistable window, three inside, two
/// exactly at a saddle node (the merged pair flagged `degenerate`).
inline std::vector<SteadyStateSolution> steady_state_roots(double delta_eff, double f0_reduced,
                                                           double gamma, double xi) {
    if (!(gamma > 0.0)) throw ParameterError("gamma must be positive");
    if (!(xi >= 0.0)) throw ParameterError("xi must be non-negative");
    if (!(f0_reduced >= 0.0)) throw ParameterError("f0_reduced must be non-negative");

    std::vector<SteadyStateSolution> out;
    if (f0_reduced == 0.0) {
        out.push_back(detail::make_solution(0.0, delta_eff, gamma, xi, false));
        return out;
    }
    if (xi == 0.0) {
        const double u = f0_reduced * f0_reduced / (delta_eff * delta_eff + 0.25 * gamma * gamma);
        out.push_back(detail::make_solution(u, delta_eff, gamma, xi, false));
        return out;
    }

    const double d = delta_eff / gamma;
    const double k = xi * f0_reduced * f0_reduced / (gamma * gamma * gamma);
    const std::vector<double> etas = detail::cubic_real_roots(d, k);

    // Merge near-coincident roots into a single degenerate entry.
    std::vector<std::pair<double, bool>> merged;
    for (double eta : etas) {
        if (!merged.empty()) {
            auto& last = merged.back();
            const double scale = std::max(std::abs(eta), std::abs(last.first));
            if (std::abs(eta - last.first) <= kRootMergeTolerance * scale) {
                last.first = 0.5 * (last.first + eta);
                last.second = true;
                continue;
            }
        }
        merged.emplace_back(eta, false);
    }
    for (const auto& [eta, degenerate] : merged) {
        const double u = std::max(0.0, eta * gamma / xi);
        out.push_back(detail::make_solution(u, delta_eff, gamma, xi, degenerate));
    }
    return out;
}

/// Linearisation of the envelope flow at a fixed point. Throws DomainError if
/// `u` is not a steady state (relative residual above 1e-6).
inline StabilityResult classify_stability(double u, double delta_eff, double f0_reduced,
                                          double gamma, double xi) {
    if (!(u >= 0.0)) throw DomainError("u must be non-negative");
    if (steady_state_residual(u, delta_eff, f0_reduced, gamma, xi) > 1e-6) {
        throw DomainError("u is not a steady state of the envelope equation");
    }
    const auto eigs = detail::jacobian_eigenvalues(u, delta_eff, gamma, xi);
    return {detail::stability_of(eigs), eigs};
}

// =============================================================================
// Bistable window
// =============================================================================

struct BistableRegion {
    double delta_lower = 0.0;  // rad/s
    double delta_upper = 0.0;  // rad/s
    bool exists = false;

    double width() const { return exists ? delta_upper - delta_lower : 0.0; }
    double center() const { return 0.5 * (delta_lower + delta_upper); }
};

/// Smallest drive f0 for which three steady states exist:
/// xi f0^2 = 8 (gamma/2)^3 / (3 sqrt 3), reached at D = -(sqrt 3 / 2) gamma.
inline double critical_drive(double gamma, double xi) {
    const double g = 0.5 * gamma;
    return std::sqrt(8.0 * g * g * g / (3.0 * std::sqrt(3.0) * xi));
}

namespace detail {

inline std::size_t root_count(double delta_eff, double f0, double gamma, double xi) {
    return steady_state_roots(delta_eff, f0, gamma, xi).size();
}

/// Scaled detuning d < -sqrt(3)/2 at which the inflection point of P sits on
/// the drive level: (-2d/3)(d^2/9 + 1/4) = k. Always inside the window when
/// k exceeds its critical value.
inline double window_interior(double k) {
    auto g = [](double d) { return (-2.0 * d / 3.0) * (d * d / 9.0 + 0.25); };
    double hi = -std::sqrt(3.0) / 2.0;
    double lo = 2.0 * hi;
    while (g(lo) < k) lo *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::abs(lo); ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) < k ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Detuning interval with three steady states, located by bisection on the
/// root count to a resolution of 1e-3 gamma.
inline BistableRegion bistable_region(double f0_reduced, double gamma, double xi) {
    if (!(xi > 0.0)) throw ParameterError("bistable_region requires xi > 0");
    if (!(gamma > 0.0)) throw ParameterError("gamma must be positive");
    BistableRegion region;
    const double k = xi * f0_reduced * f0_reduced / (gamma * gamma * gamma);
    const double k_crit = 1.0 / (3.0 * std::sqrt(3.0));
    if (!(k > k_crit)) return region;

    const double interior = detail::window_interior(k) * gamma;
    if (detail::root_count(interior, f0_reduced, gamma, xi) < 3) return region;

    const double resolution = 1e-3 * gamma;
    auto boundary = [&](double inside, double outside) {
        while (std::abs(outside - inside) > resolution) {
            const double mid = 0.5 * (inside + outside);
            (detail::root_count(mid, f0_reduced, gamma, xi) >= 2 ? inside : outside) = mid;
        }
        return 0.5 * (inside + outside);
    };

    // All roots obey xi u <= k gamma^3 / (gamma/2)^2, so well below that the
    // window has closed again.
    double far = -(4.0 * k + 2.0) * gamma;
    while (detail::root_count(far, f0_reduced, gamma, xi) != 1) far *= 2.0;
    const double near = -0.5 * std::sqrt(3.0) * gamma;

    region.delta_lower = boundary(interior, far);
    region.delta_upper = boundary(interior, near);
    region.exists = true;
    return region;
}

// =============================================================================
// Quasi-static branch tracking
// =============================================================================

struct JumpEvent {
    double at = 0.0;         // time or detuning tag supplied by the caller
    double delta_eff = 0.0;  // rad/s
    double from_u = 0.0;
    double to_u = 0.0;
    Branch to = Branch::lower;
};

/// Coefficients of the quasi-static Duffing problem (fixed while tracking).
struct DuffingCoefficients {
    double f0_reduced = 0.0;
    double gamma = 0.0;
    double xi = 0.0;
};

/// Follows the occupied stable branch as the effective detuning changes.
/// Single owner; copy to fork a history.
class BranchTracker {
  public:
    BranchTracker(const DuffingCoefficients& c, double delta_eff, Branch preparation)
        : coeffs_(c) {
        if (c.xi > 0.0) {
            region_ = bistable_region(c.f0_reduced, c.gamma, c.xi);
        }
        pivot_ = region_.exists ? region_.center() : -0.5 * std::sqrt(3.0) * c.gamma;
        label_ = preparation;
        settle(delta_eff, delta_eff, /*log_jump=*/false);
    }

    double current_u() const { return current_u_; }
    Branch branch_label() const { return label_; }
    double delta_eff() const { return delta_eff_; }
    const std::vector<JumpEvent>& jump_log() const { return jumps_; }
    const BistableRegion& region() const { return region_; }
    const DuffingCoefficients& coefficients() const { return coeffs_; }

    /// Move to a new effective detuning. Returns true if a jump occurred.
    bool advance(double delta_eff, double tag) { return settle(delta_eff, tag, true); }
    bool advance(double delta_eff) { return advance(delta_eff, delta_eff); }

  private:
    bool settle(double delta_eff, double tag, bool log_jump) {
        const auto roots =
            steady_state_roots(delta_eff, coeffs_.f0_reduced, coeffs_.gamma, coeffs_.xi);
        std::vector<const SteadyStateSolution*> stable;
        for (const auto& r : roots) {
            if (!r.degenerate && r.stability == Stability::stable) stable.push_back(&r);
        }
        if (stable.empty()) {
            throw DomainError("no stable steady state at this detuning");
        }

        Branch next;
        const SteadyStateSolution* chosen;
        if (stable.size() >= 2) {
            next = label_;
            chosen = label_ == Branch::lower ? stable.front() : stable.back();
        } else {
            chosen = stable.front();
            if (roots.size() >= 2) {
                // Saddle-node pair present: the survivor sits on the other side of it.
                const bool survivor_is_smallest = chosen == &roots.front();
                next = survivor_is_smallest ? Branch::lower : Branch::upper;
            } else {
                next = delta_eff < pivot_ ? Branch::lower : Branch::upper;
            }
        }

        const double from = current_u_;
        const bool jumped = log_jump && region_.exists && next != label_;
        if (jumped) {
            jumps_.push_back({tag, delta_eff, from, chosen->u, next});
        }
        label_ = next;
        current_u_ = chosen->u;
        delta_eff_ = delta_eff;
        return jumped;
    }

    DuffingCoefficients coeffs_;
    BistableRegion region_;
    double pivot_ = 0.0;
    Branch label_ = Branch::lower;
    double current_u_ = 0.0;
    double delta_eff_ = 0.0;
    std::vector<JumpEvent> jumps_;
};

/// Value-semantics wrapper: returns the tracker advanced to `delta_eff`.
inline BranchTracker track_branch(BranchTracker tracker, double delta_eff) {
    tracker.advance(delta_eff);
    return tracker;
}

inline DuffingCoefficients duffing_coefficients(const TrapParams& p, const DriveConfig& d) {
    const DerivedParams dp = derive_params(p, d);
    return {dp.f0_reduced, p.damping, dp.xi};
}

// =============================================================================
// Quasi-static detuning sweep
// =============================================================================

struct SweepPoint {
    double detuning = 0.0;  // rad/s
    double u = 0.0;         // m^2
    double amplitude = 0.0; // m
    Branch branch = Branch::lower;
    bool jumped = false;
    double z0 = 0.0;  // m
};

struct SweepRecord {
    std::vector<SweepPoint> points;
    std::vector<double> jump_detunings;  // rad/s
};

/// Quasi-static sweep of the drive detuning from `delta_start` towards
/// `delta_end` in increments of `step` (sign gives the direction).
inline SweepRecord hysteresis_sweep(const TrapParams& p, const DriveConfig& d, double delta_start,
                                    double delta_end, double step,
                                    Branch preparation = Branch::lower) {
    if (step == 0.0 || (delta_end - delta_start) * step < 0.0) {
        throw ConfigurationError("sweep step sign must match the sweep direction");
    }
    if (!(std::abs(step) < 0.25 * p.damping)) {
        throw ConfigurationError("sweep step must be finer than gamma/4");
    }
    const DuffingCoefficients c = duffing_coefficients(p, d);
    const auto n = static_cast<std::size_t>(std::floor((delta_end - delta_start) / step + 1e-9)) + 1;

    SweepRecord rec;
    rec.points.reserve(n);
    BranchTracker tracker(c, delta_start, preparation);
    for (std::size_t i = 0; i < n; ++i) {
        const double delta = delta_start + static_cast<double>(i) * step;
        const bool jumped = i > 0 && tracker.advance(delta);
        if (jumped) rec.jump_detunings.push_back(delta);
        const double u = tracker.current_u();
        rec.points.push_back({delta, u, std::sqrt(u), tracker.branch_label(), jumped,
                              equilibrium_displacement(p, u, 0.0)});
    }
    return rec;
}

}  // namespace funnel
