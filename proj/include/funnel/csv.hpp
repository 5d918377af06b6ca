#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "funnel/dynamics.hpp"
#include "funnel/errors.hpp"
#include "funnel/measurement.hpp"
#include "funnel/steady_state.hpp"
#include "funnel/units.hpp"

namespace funnel::csv {

/// Six significant digits, scientific beyond that, '.' decimal point.
inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

inline void write_sweep(std::ostream& out, const SweepRecord& rec) {
    out << "detuning_hz,u_m2,amplitude_um,branch,jumped,z0_um\n";
    for (const auto& p : rec.points) {
        out << num(units::rad_to_hz(p.detuning)) << ',' << num(p.u) << ','
            << num(p.amplitude / units::kMicrometer) << ',' << to_string(p.branch) << ','
            << (p.jumped ? 1 : 0) << ',' << num(p.z0 / units::kMicrometer) << '\n';
    }
}

inline void write_trace(std::ostream& out, const SampledTrace& trace) {
    out << "t_s,z_um_measured\n";
    for (std::size_t i = 0; i < trace.z.size(); ++i) {
        out << num(trace.t[i]) << ',' << num(trace.z[i] / units::kMicrometer) << '\n';
    }
}

inline void write_spectrum(std::ostream& out, const SpectrumRecord& spec) {
    out << "freq_hz,amplitude_um\n";
    for (std::size_t i = 0; i < spec.amplitude.size(); ++i) {
        out << num(spec.frequency[i]) << ',' << num(spec.amplitude[i] / units::kMicrometer) << '\n';
    }
}

inline void write_metadata(std::ostream& out, const TrajectoryMeta& m) {
    out << "# model: " << m.model << '\n'
        << "# mass_kg: " << num(m.trap.mass) << '\n'
        << "# omega_x_hz: " << num(units::rad_to_hz(m.trap.omega_x)) << '\n'
        << "# omega_z_hz: " << num(units::rad_to_hz(m.trap.omega_z)) << '\n'
        << "# funnel_length_m: " << num(m.trap.funnel_length) << '\n'
        << "# gamma_hz: " << num(units::rad_to_hz(m.trap.damping)) << '\n'
        << "# f0_zn: " << num(m.drive.f0_force / units::kZeptonewton) << '\n'
        << "# detuning_hz: " << num(units::rad_to_hz(m.drive.omega_0 - m.trap.omega_x)) << '\n'
        << "# fs_zn: " << num(m.drive.fs_force / units::kZeptonewton) << '\n'
        << "# fe_zn: " << num(m.drive.fe_force / units::kZeptonewton) << '\n'
        << "# dt_s: " << num(m.dt) << '\n'
        << "# stride: " << m.stride << '\n'
        << "# seed: " << m.seed << '\n';
}

inline void write_trajectory(std::ostream& out, const Trajectory<FullState>& tr) {
    write_metadata(out, tr.meta);
    out << "t_s,x_um,z_um\n";
    for (const auto& s : tr.samples) {
        out << num(s.t) << ',' << num(s.x / units::kMicrometer) << ','
            << num(s.z / units::kMicrometer) << '\n';
    }
}

inline void write_trajectory(std::ostream& out, const Trajectory<EnvelopeState>& tr) {
    write_metadata(out, tr.meta);
    out << "t_s,alpha_abs_um,z_um\n";
    for (const auto& s : tr.samples) {
        out << num(s.t) << ',' << num(std::abs(s.alpha()) / units::kMicrometer) << ','
            << num(s.z / units::kMicrometer) << '\n';
    }
}

/// Opens `path` for writing or throws std::runtime_error.
inline std::ofstream open(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    return out;
}

}  // namespace funnel::csv
