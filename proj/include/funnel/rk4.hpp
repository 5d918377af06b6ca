#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace funnel {

template <std::size_t N>
using StateVector = std::array<double, N>;

template <std::size_t N>
inline StateVector<N> axpy(const StateVector<N>& y, double a, const StateVector<N>& x) {
    StateVector<N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = y[i] + a * x[i];
    return out;
}

/// One classical fourth-order Runge-Kutta step of dy/dt = f(t, y).
template <std::size_t N, class Rhs>
StateVector<N> rk4_step(const StateVector<N>& y, double t, double h, Rhs&& f) {
    const StateVector<N> k1 = f(t, y);
    const StateVector<N> k2 = f(t + 0.5 * h, axpy(y, 0.5 * h, k1));
    const StateVector<N> k3 = f(t + 0.5 * h, axpy(y, 0.5 * h, k2));
    const StateVector<N> k4 = f(t + h, axpy(y, h, k3));
    StateVector<N> out;
    for (std::size_t i = 0; i < N; ++i) {
        out[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return out;
}

template <std::size_t N>
inline bool all_finite(const StateVector<N>& y) {
    for (double v : y) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace funnel
