#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "funnel/measurement.hpp"
#include "oracles.hpp"

using namespace funnel;

namespace {

constexpr double kTwoPi = 6.283185307179586;

AxialTrace sine_truth(double amplitude, double f, double duration, double rate = 4000.0,
                      double offset = 0.0) {
    AxialTrace tr;
    tr.dt = 1.0 / rate;
    const auto n = static_cast<std::size_t>(std::llround(duration * rate));
    tr.z.resize(n);
    for (std::size_t i = 0; i < n; ++i) tr.z[i] = offset + amplitude * std::sin(kTwoPi * f * tr.time(i));
    return tr;
}

SampledTrace direct_trace(const std::vector<double>& z, double rate = 8.0) {
    SampledTrace s;
    for (std::size_t i = 0; i < z.size(); ++i) {
        s.t.push_back(static_cast<double>(i) / rate);
        s.z.push_back(z[i]);
        s.sigma.push_back(0.0);
    }
    return s;
}

CameraConfig noiseless() {
    CameraConfig c;
    c.psf_sigma = 0.0;
    return c;
}

TEST(Measurement, NoiselessConstantTrace) {
    const AxialTrace tr = sine_truth(0.0, 1.0, 10.0, 4000.0, 3.5e-6);
    const SampledTrace s = sample_camera(tr, noiseless());
    EXPECT_EQ(s.z.size(), frames_in(10.0, noiseless()));
    for (double z : s.z) EXPECT_NEAR(z, 3.5e-6, 1e-18);
    const SpectrumRecord spec = amplitude_spectrum(s);
    for (double a : spec.amplitude) EXPECT_LT(a, 1e-18);
}

TEST(Measurement, LocalisationSigma) {
    const CameraConfig c;
    EXPECT_NEAR(c.localization_sigma(), 106e-9, 0.5e-9);
    const SampledTrace s = sample_camera(sine_truth(0.0, 1.0, 1300.0, 100.0), c);
    ASSERT_GE(s.z.size(), 10000u);
    for (double sg : s.sigma) EXPECT_EQ(sg, c.localization_sigma());
    const double mean = std::accumulate(s.z.begin(), s.z.end(), 0.0) / s.z.size();
    double var = 0.0;
    for (double z : s.z) var += (z - mean) * (z - mean);
    const double sd = std::sqrt(var / (s.z.size() - 1));
    EXPECT_NEAR(sd / c.localization_sigma(), 1.0, 0.05);
}

TEST(Measurement, ExposureAttenuation) {
    // 0.5 Hz sine, 256 frames at 8 Hz: 0.5 Hz sits on bin 16
    const AxialTrace tr = sine_truth(1e-6, 0.5, 32.2);
    const SampledTrace s = sample_camera(tr, noiseless(), 256);
    const SpectrumRecord spec = amplitude_spectrum(s);
    const double expect = 1e-6 * oracle::exposure_attenuation(0.5, 0.1);
    EXPECT_NEAR(expect / 1e-6, 0.996, 0.001);
    EXPECT_NEAR(peak_amplitude(spec, 0.5) / expect, 1.0, 2e-3);
    // frame k is the exposure-window mean of the sine
    for (std::size_t k = 0; k < s.z.size(); k += 17) {
        const double mid = s.t[k] + 0.05;
        EXPECT_NEAR(s.z[k], expect * std::sin(kTwoPi * 0.5 * mid), 2e-9);
    }
}

TEST(Measurement, OnBinToneAmplitude) {
    std::vector<double> z(512);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = 1e-6 * std::cos(kTwoPi * 20.0 * i / 512.0 + 0.3);
    const SpectrumRecord spec = amplitude_spectrum(direct_trace(z));
    const double f = 20.0 * spec.bin_spacing();
    EXPECT_NEAR(peak_amplitude(spec, f), 1e-6, 1e-8);
    EXPECT_NEAR(spec.bin_spacing(), 1.0 / spec.duration, 1e-15);
    EXPECT_NEAR(spec.duration, 64.0, 1e-12);
    // query midway between bins still finds the tone
    EXPECT_GE(peak_amplitude(spec, f + 0.5 * spec.bin_spacing()), 0.6e-6);
    // tone midway between bins
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = 1e-6 * std::cos(kTwoPi * 20.5 * i / 512.0);
    const SpectrumRecord mid = amplitude_spectrum(direct_trace(z));
    EXPECT_GE(peak_amplitude(mid, 20.5 * mid.bin_spacing()), 0.6e-6);
    EXPECT_LE(peak_amplitude(mid, 20.5 * mid.bin_spacing()), 1e-6);
}

TEST(Measurement, SpectrumMatchesDirectDft) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1e-7);
    std::vector<double> z(300);
    for (double& v : z) v = g(rng);
    const SpectrumRecord spec = amplitude_spectrum(direct_trace(z));
    ASSERT_EQ(spec.amplitude.size(), 151u);
    for (std::size_t k = 1; k < 150; ++k) {
        EXPECT_NEAR(spec.amplitude[k], oracle::dft_amplitude(z, k), 1e-12 * 1e-7);
    }
}

TEST(Measurement, NoiseFloorStatistics) {
    const CameraConfig c;
    const double sigma = c.localization_sigma();
    const std::size_t n = 512;
    double lib = 0.0, direct = 0.0;
    const int seeds = 50;
    for (int s = 0; s < seeds; ++s) {
        CameraConfig cs = c;
        cs.seed = 1000 + s;
        const SampledTrace tr = sample_camera(sine_truth(0.0, 1.0, 70.0, 100.0), cs, n);
        const SpectrumRecord spec = amplitude_spectrum(tr);
        lib += noise_floor(spec, 0.5);
        double acc = 0.0;
        for (std::size_t k = 1; k < n / 2; ++k) acc += std::pow(oracle::dft_amplitude(tr.z, k), 2);
        direct += std::sqrt(acc / (n / 2 - 1));
    }
    lib /= seeds;
    direct /= seeds;
    // rms per-bin amplitude of white noise under a Hann window: sigma sqrt(2/N) * sqrt(3)
    const double expect = sigma * std::sqrt(2.0 / n) * std::sqrt(3.0);
    EXPECT_NEAR(direct / expect, 1.0, 0.2);
    EXPECT_NEAR(lib / expect, 1.0, 0.2);
    EXPECT_NEAR(lib / direct, 1.0, 0.02);
}

TEST(Measurement, NoiseOnlyPeakConsistentWithFloor) {
    double ratio = 0.0;
    for (int s = 0; s < 50; ++s) {
        CameraConfig c;
        c.seed = 77 + s;
        const SpectrumRecord spec = amplitude_spectrum(sample_camera(sine_truth(0.0, 1.0, 121.0, 100.0), c));
        ratio += peak_amplitude(spec, 0.5) / noise_floor(spec, 0.5);
    }
    ratio /= 50.0;
    EXPECT_GT(ratio, 0.8);
    EXPECT_LT(ratio, 2.5);
}

TEST(Measurement, SeededReproducibility) {
    const AxialTrace tr = sine_truth(50e-9, 0.5, 20.0);
    CameraConfig c;
    const auto a = sample_camera(tr, c);
    const auto b = sample_camera(tr, c);
    EXPECT_EQ(a.z, b.z);
    c.seed = 2;
    const auto other = sample_camera(tr, c);
    EXPECT_NE(a.z, other.z);
}

TEST(Measurement, EnhancementFactor) {
    std::vector<double> z(256);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = 1e-7 * std::sin(kTwoPi * 0.5 * i / 8.0);
    const SpectrumRecord ref = amplitude_spectrum(direct_trace(z));
    for (double& v : z) v *= 2.0;
    const SpectrumRecord on = amplitude_spectrum(direct_trace(z));
    EXPECT_NEAR(enhancement_factor(ref, ref, 0.5).factor, 1.0, 1e-12);
    EXPECT_NEAR(enhancement_factor(on, ref, 0.5).factor, 2.0, 1e-9);
    EXPECT_FALSE(enhancement_factor(on, ref, 0.5).floor_limited);

    // reference buried under noise: factor against the floor, flagged
    CameraConfig c;
    const SpectrumRecord buried = amplitude_spectrum(sample_camera(sine_truth(1e-9, 0.5, 33.0), c, 256));
    const auto e = enhancement_factor(on, buried, 0.5);
    if (peak_amplitude(buried, 0.5) < noise_floor(buried, 0.5)) {
        EXPECT_TRUE(e.floor_limited);
        EXPECT_NEAR(e.factor, peak_amplitude(on, 0.5) / noise_floor(buried, 0.5), 1e-12);
    }
    const SpectrumRecord shorter = amplitude_spectrum(direct_trace(std::vector<double>(z.begin(), z.begin() + 128)));
    EXPECT_THROW(enhancement_factor(on, shorter, 0.5), InputError);
}

TEST(Measurement, InputErrors) {
    const CameraConfig c;
    EXPECT_THROW(sample_camera(sine_truth(0.0, 1.0, 1.0), c, 100), RangeError);
    EXPECT_THROW(sample_camera(sine_truth(0.0, 1.0, 10.0, 50.0), c), InputError);
    EXPECT_THROW(amplitude_spectrum(direct_trace(std::vector<double>(20, 0.0))), InputError);
    SampledTrace uneven = direct_trace(std::vector<double>(64, 0.0));
    uneven.t[10] += 0.01;
    EXPECT_THROW(amplitude_spectrum(uneven), InputError);
    const SpectrumRecord spec = amplitude_spectrum(direct_trace(std::vector<double>(64, 0.0)));
    EXPECT_THROW(peak_amplitude(spec, 100.0), RangeError);
    CameraConfig bad;
    bad.exposure = 0.2;
    EXPECT_THROW(validate(bad), ParameterError);
}

}  // namespace
