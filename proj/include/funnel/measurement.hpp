#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "funnel/errors.hpp"
#include "funnel/units.hpp"

namespace funnel {

// =============================================================================
// Camera model
// =============================================================================

struct CameraConfig {
    double frame_rate = 8.0;             // Hz
    double exposure = 0.1;               // s
    double photons_per_frame = 240.0;    // detected photons N
    double psf_sigma = 1.64e-6;          // axial spread sigma_0, m
    std::uint64_t seed = 1;

    /// Localisation limit sigma_0 / sqrt(N).
    double localization_sigma() const { return psf_sigma / std::sqrt(photons_per_frame); }
};

inline void validate(const CameraConfig& c) {
    if (!(c.frame_rate > 0.0)) throw ParameterError("frame_rate must be positive");
    if (!(c.exposure > 0.0) || c.exposure > 1.0 / c.frame_rate * (1.0 + 1e-12)) {
        throw ParameterError("exposure must be positive and no longer than the frame period");
    }
    if (!(c.photons_per_frame >= 1.0)) throw ParameterError("photons_per_frame must be >= 1");
    if (!(c.psf_sigma >= 0.0)) throw ParameterError("psf_sigma must be non-negative");
}

/// Uniformly sampled true axial position.
struct AxialTrace {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<double> z;  // m

    double duration() const { return dt * static_cast<double>(z.size()); }
    double time(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
};

/// Camera-rate localisation record.
struct SampledTrace {
    std::vector<double> t;      // frame start times, s
    std::vector<double> z;      // measured positions, m
    std::vector<double> sigma;  // per-frame localisation sigma, m
};

/// Number of complete frames (start + exposure) that fit in `duration`.
inline std::size_t frames_in(double duration, const CameraConfig& c) {
    if (duration < c.exposure) return 0;
    return static_cast<std::size_t>(std::floor((duration - c.exposure) * c.frame_rate + 1e-9)) + 1;
}

/// Exposure-averaged, noisy camera samples of a true trajectory. Frame k
/// averages the samples in [k/rate, k/rate + exposure) and adds a normal
/// localisation error with sigma sigma_0/sqrt(N). `frames` = 0 takes all
/// complete frames.
inline SampledTrace sample_camera(const AxialTrace& truth, const CameraConfig& c,
                                  std::size_t frames = 0) {
    validate(c);
    if (!(truth.dt > 0.0) || truth.z.empty()) throw InputError("empty trajectory");
    if (truth.dt > 1.0 / (10.0 * c.frame_rate) * (1.0 + 1e-12)) {
        throw InputError("trajectory must be sampled at least 10x faster than the camera");
    }
    const std::size_t available = frames_in(truth.duration(), c);
    if (frames == 0) frames = available;
    if (frames > available || frames == 0) {
        throw RangeError("trajectory too short for the requested frames");
    }

    std::mt19937_64 rng(c.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    const double sigma = c.localization_sigma();

    SampledTrace out;
    out.t.reserve(frames);
    out.z.reserve(frames);
    out.sigma.assign(frames, sigma);
    for (std::size_t k = 0; k < frames; ++k) {
        const double start = static_cast<double>(k) / c.frame_rate;
        const auto first = static_cast<std::size_t>(std::ceil(start / truth.dt - 1e-9));
        auto last = static_cast<std::size_t>(std::ceil((start + c.exposure) / truth.dt - 1e-9));
        last = std::min(last, truth.z.size());
        double acc = 0.0;
        for (std::size_t i = first; i < last; ++i) acc += truth.z[i];
        const double mean = acc / static_cast<double>(last - first);
        out.t.push_back(truth.t0 + start);
        out.z.push_back(mean + sigma * noise(rng));
    }
    return out;
}

// =============================================================================
// Spectral analysis
// =============================================================================

/// Single-sided amplitude spectrum.
struct SpectrumRecord {
    std::vector<double> frequency;  // Hz
    std::vector<double> amplitude;  // m
    std::size_t record_length = 0;  // samples
    double duration = 0.0;          // record duration N * dt, s
    std::string window = "hann";

    double bin_spacing() const { return 1.0 / duration; }
};

inline constexpr std::size_t kMinSpectrumFrames = 32;

/// Periodic Hann window, sum w_n = N/2.
inline std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 * (1.0 - std::cos(units::kTwoPi * static_cast<double>(i) / static_cast<double>(n)));
    }
    return w;
}

/// Mean-removed, Hann-windowed DFT normalised so that a sinusoid of
/// amplitude A centred on a bin reports A in that bin.
inline SpectrumRecord amplitude_spectrum(const SampledTrace& trace) {
    const std::size_t n = trace.z.size();
    if (n < kMinSpectrumFrames) throw InputError("amplitude_spectrum needs at least 32 frames");
    if (trace.t.size() != n) throw InputError("time and position columns differ in length");
    const double dt = (trace.t.back() - trace.t.front()) / static_cast<double>(n - 1);
    if (!(dt > 0.0)) throw InputError("frame times must increase");
    for (std::size_t i = 1; i < n; ++i) {
        if (std::abs(trace.t[i] - trace.t[i - 1] - dt) > 1e-6 * dt) {
            throw InputError("frame spacing is not uniform");
        }
    }

    double mean = 0.0;
    for (double v : trace.z) mean += v;
    mean /= static_cast<double>(n);

    const std::vector<double> w = hann_window(n);
    double wsum = 0.0;
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = w[i] * (trace.z[i] - mean);
        wsum += w[i];
    }
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spectrum;
    fft.fwd(spectrum, xs);

    SpectrumRecord rec;
    rec.record_length = n;
    rec.duration = dt * static_cast<double>(n);
    const std::size_t bins = n / 2 + 1;
    rec.frequency.resize(bins);
    rec.amplitude.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
        rec.frequency[k] = static_cast<double>(k) / rec.duration;
        rec.amplitude[k] = (edge ? 1.0 : 2.0) * std::abs(spectrum[k]) / wsum;
    }
    return rec;
}

namespace detail {

inline std::size_t nearest_bin(const SpectrumRecord& spec, double f) {
    if (spec.amplitude.empty()) throw InputError("empty spectrum");
    const double fmax = spec.frequency.back();
    if (!(f >= 0.0) || f > fmax + 0.5 * spec.bin_spacing()) {
        throw RangeError("frequency outside the spectral range");
    }
    const auto k = static_cast<std::size_t>(std::llround(f / spec.bin_spacing()));
    return std::min(k, spec.amplitude.size() - 1);
}

}  // namespace detail

/// Amplitude at the bin nearest `f`, maximised over +-1 bin.
inline double peak_amplitude(const SpectrumRecord& spec, double f) {
    const std::size_t k = detail::nearest_bin(spec, f);
    const std::size_t lo = k == 0 ? 0 : k - 1;
    const std::size_t hi = std::min(k + 1, spec.amplitude.size() - 1);
    double best = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) best = std::max(best, spec.amplitude[i]);
    return best;
}

/// RMS bin amplitude away from DC, Nyquist and +-2 bins around `f`.
inline double noise_floor(const SpectrumRecord& spec, double f) {
    const std::size_t k = detail::nearest_bin(spec, f);
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 1; i + 1 < spec.amplitude.size(); ++i) {
        if (i + 2 >= k && i <= k + 2) continue;
        acc += spec.amplitude[i] * spec.amplitude[i];
        ++count;
    }
    return count == 0 ? 0.0 : std::sqrt(acc / static_cast<double>(count));
}

struct EnhancementResult {
    double factor = 0.0;
    /// Reference peak was below the noise floor; `factor` is then computed
    /// against the floor and is a lower bound.
    bool floor_limited = false;
};

/// peak_amplitude(on, f) / peak_amplitude(ref, f).
inline EnhancementResult enhancement_factor(const SpectrumRecord& on, const SpectrumRecord& ref,
                                            double f) {
    if (on.record_length != ref.record_length || on.window != ref.window ||
        std::abs(on.duration - ref.duration) > 1e-9 * ref.duration) {
        throw InputError("spectra must share record length and window");
    }
    const double num = peak_amplitude(on, f);
    const double den = peak_amplitude(ref, f);
    const double floor = noise_floor(ref, f);
    EnhancementResult r;
    if (den < floor) {
        r.floor_limited = true;
        r.factor = floor > 0.0 ? num / floor : 0.0;
    } else {
        r.factor = den > 0.0 ? num / den : 0.0;
    }
    return r;
}

}  // namespace funnel
