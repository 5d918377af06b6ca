#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "funnel/errors.hpp"
#include "funnel/measurement.hpp"
#include "funnel/trap_model.hpp"
#include "funnel/units.hpp"

namespace funnel {

// Flat key-value parameter file, in laboratory units:
//
//   # comment
//   mass_u = 40
//   omega_x_hz = 1.14e6
//   ...
//
// Frequencies are ordinary frequencies (Hz); forces in zN.

/// Parameter file contents in file units. Values round-trip exactly through
/// format_config / parse_config.
struct ConfigValues {
    double mass_u = 40.0;
    double omega_x_hz = 1.14e6;
    double omega_z_hz = 100e3;
    double funnel_length_m = 1.81e-3;
    double gamma_hz = 250.0;
    double f0_zn = 30.0;
    double detuning_hz = -5e3;
    double fs_zn = 1.2;
    double fs_hz = 0.5;
    double fe_zn = 0.0;  // 0: tune automatically where an enhancement force is needed
    double fe_hz = 50.0;
    std::uint64_t seed = 1;

    // optional keys
    double omega_y_hz = 1.15e6;
    std::optional<double> axial_gamma_hz;
    double frame_rate_hz = 8.0;
    double exposure_s = 0.1;
    double photons_per_frame = 240.0;
    double psf_sigma_um = 1.64;
    double duration_s = 120.0;
    double sample_rate_hz = 4000.0;
    double radial_noise_rel = 0.0;
};

inline const std::vector<std::string>& required_config_keys() {
    static const std::vector<std::string> keys{
        "mass_u", "omega_x_hz", "omega_z_hz", "funnel_length_m", "gamma_hz", "f0_zn",
        "detuning_hz", "fs_zn", "fs_hz", "fe_zn", "fe_hz", "seed"};
    return keys;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, std::string_view text) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw ConfigFileError(key, "invalid number for key '" + key + "': '" + std::string(text) + "'");
    }
    return v;
}

inline std::uint64_t parse_u64(const std::string& key, std::string_view text) {
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw ConfigFileError(key, "invalid integer for key '" + key + "': '" + std::string(text) + "'");
    }
    return v;
}

/// Shortest representation that parses back to the same double.
inline std::string exact(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace detail

inline ConfigValues parse_config(std::string_view text) {
    std::map<std::string, std::string> entries;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigFileError(std::string(line),
                                  "line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        std::string key(detail::trim(line.substr(0, eq)));
        std::string value(detail::trim(line.substr(eq + 1)));
        if (key.empty()) {
            throw ConfigFileError("", "line " + std::to_string(line_no) + ": empty key");
        }
        if (!entries.emplace(key, value).second) {
            throw ConfigFileError(key, "duplicate key '" + key + "'");
        }
    }

    for (const auto& k : required_config_keys()) {
        if (!entries.count(k)) throw ConfigFileError(k, "missing required key '" + k + "'");
    }

    ConfigValues c;
    const std::map<std::string, double*> doubles{
        {"mass_u", &c.mass_u},
        {"omega_x_hz", &c.omega_x_hz},
        {"omega_z_hz", &c.omega_z_hz},
        {"funnel_length_m", &c.funnel_length_m},
        {"gamma_hz", &c.gamma_hz},
        {"f0_zn", &c.f0_zn},
        {"detuning_hz", &c.detuning_hz},
        {"fs_zn", &c.fs_zn},
        {"fs_hz", &c.fs_hz},
        {"fe_zn", &c.fe_zn},
        {"fe_hz", &c.fe_hz},
        {"omega_y_hz", &c.omega_y_hz},
        {"frame_rate_hz", &c.frame_rate_hz},
        {"exposure_s", &c.exposure_s},
        {"photons_per_frame", &c.photons_per_frame},
        {"psf_sigma_um", &c.psf_sigma_um},
        {"duration_s", &c.duration_s},
        {"sample_rate_hz", &c.sample_rate_hz},
        {"radial_noise_rel", &c.radial_noise_rel},
    };
    for (const auto& [key, value] : entries) {
        if (key == "seed") {
            c.seed = detail::parse_u64(key, value);
        } else if (key == "axial_gamma_hz") {
            c.axial_gamma_hz = detail::parse_double(key, value);
        } else if (auto it = doubles.find(key); it != doubles.end()) {
            *it->second = detail::parse_double(key, value);
        } else {
            throw ConfigFileError(key, "unknown key '" + key + "'");
        }
    }
    return c;
}

inline ConfigValues load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigFileError("", "cannot open parameter file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

inline std::string format_config(const ConfigValues& c) {
    std::ostringstream out;
    auto put = [&out](const char* key, double v) { out << key << " = " << detail::exact(v) << '\n'; };
    put("mass_u", c.mass_u);
    put("omega_x_hz", c.omega_x_hz);
    put("omega_y_hz", c.omega_y_hz);
    put("omega_z_hz", c.omega_z_hz);
    put("funnel_length_m", c.funnel_length_m);
    put("gamma_hz", c.gamma_hz);
    if (c.axial_gamma_hz) put("axial_gamma_hz", *c.axial_gamma_hz);
    put("f0_zn", c.f0_zn);
    put("detuning_hz", c.detuning_hz);
    put("fs_zn", c.fs_zn);
    put("fs_hz", c.fs_hz);
    put("fe_zn", c.fe_zn);
    put("fe_hz", c.fe_hz);
    out << "seed = " << c.seed << '\n';
    put("frame_rate_hz", c.frame_rate_hz);
    put("exposure_s", c.exposure_s);
    put("photons_per_frame", c.photons_per_frame);
    put("psf_sigma_um", c.psf_sigma_um);
    put("duration_s", c.duration_s);
    put("sample_rate_hz", c.sample_rate_hz);
    put("radial_noise_rel", c.radial_noise_rel);
    return out.str();
}

// Conversion to SI at the boundary.

inline TrapParams to_trap(const ConfigValues& c) {
    TrapParams p;
    p.mass = c.mass_u * units::kAtomicMassUnit;
    p.omega_x = units::hz_to_rad(c.omega_x_hz);
    p.omega_y = units::hz_to_rad(c.omega_y_hz);
    p.omega_z = units::hz_to_rad(c.omega_z_hz);
    p.funnel_length = c.funnel_length_m;
    p.damping = units::hz_to_rad(c.gamma_hz);
    if (c.axial_gamma_hz) p.axial_damping = units::hz_to_rad(*c.axial_gamma_hz);
    return p;
}

inline DriveConfig to_drive(const ConfigValues& c) {
    DriveConfig d;
    d.f0_force = c.f0_zn * units::kZeptonewton;
    d.omega_0 = units::hz_to_rad(c.omega_x_hz + c.detuning_hz);
    d.fs_force = c.fs_zn * units::kZeptonewton;
    d.omega_s = units::hz_to_rad(c.fs_hz);
    d.fe_force = c.fe_zn * units::kZeptonewton;
    d.omega_e = units::hz_to_rad(c.fe_hz);
    return d;
}

inline CameraConfig to_camera(const ConfigValues& c) {
    CameraConfig cam;
    cam.frame_rate = c.frame_rate_hz;
    cam.exposure = c.exposure_s;
    cam.photons_per_frame = c.photons_per_frame;
    cam.psf_sigma = c.psf_sigma_um * units::kMicrometer;
    cam.seed = c.seed;
    return cam;
}

}  // namespace funnel
