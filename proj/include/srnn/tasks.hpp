#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "srnn/codecs.hpp"
#include "srnn/dataset.hpp"
#include "srnn/error.hpp"
#include "srnn/rng.hpp"

namespace srnn {

struct PatternTaskSpec {
    std::size_t classes = 4;
    std::size_t steps = 50;
    std::size_t channels = 20;
    double jitter_std = 1.0;
    std::size_t samples_per_class = 100;
    double rate = 0.06;  // expected spikes per channel per step in a template
    std::uint64_t seed = 0;
};

// Class templates share each channel's spike count and differ only in spike timing, so
// the class is carried by spike order rather than by input totals.
struct PatternTemplates {
    std::vector<Matrix> rasters;                     // one T x N raster per class
    std::vector<std::vector<std::vector<int>>> times;  // [class][channel] spike times
};

inline void validate(const PatternTaskSpec& s) {
    if (s.classes < 1 || s.steps < 1 || s.channels < 1) throw ConfigError("pattern task: sizes must be positive");
    if (!(s.jitter_std >= 0)) throw ConfigError("pattern task: jitter_std must be >= 0");
    if (!(s.rate > 0 && s.rate <= 1)) throw ConfigError("pattern task: rate must lie in (0, 1]");
}

inline PatternTemplates pattern_templates(const PatternTaskSpec& spec) {
    validate(spec);
    Rng rng(Rng::mix(spec.seed, 0));
    std::vector<std::size_t> counts(spec.channels);
    for (auto& c : counts)
        c = std::clamp<std::size_t>(static_cast<std::size_t>(rng.poisson(spec.rate * static_cast<double>(spec.steps))), 1,
                                    spec.steps);
    PatternTemplates tpl;
    std::vector<int> slots(spec.steps);
    for (std::size_t k = 0; k < spec.classes; ++k) {
        Matrix raster(spec.steps, spec.channels);
        std::vector<std::vector<int>> times(spec.channels);
        for (std::size_t c = 0; c < spec.channels; ++c) {
            std::iota(slots.begin(), slots.end(), 0);
            rng.shuffle(std::span<int>(slots));
            times[c].assign(slots.begin(), slots.begin() + static_cast<std::ptrdiff_t>(counts[c]));
            std::sort(times[c].begin(), times[c].end());
            for (int t : times[c]) raster(static_cast<std::size_t>(t), c) = 1;
        }
        tpl.rasters.push_back(std::move(raster));
        tpl.times.push_back(std::move(times));
    }
    return tpl;
}

// Samples cycle through the classes; sample i draws its jitter from its own stream.
inline Dataset gen_pattern_classification(const PatternTaskSpec& spec) {
    const PatternTemplates tpl = pattern_templates(spec);
    Dataset d{TaskKind::sequence_classification, spec.steps, spec.channels, spec.classes, {}};
    const std::size_t n = spec.classes * spec.samples_per_class;
    const int last = static_cast<int>(spec.steps) - 1;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = i % spec.classes;
        Rng rng(Rng::mix(spec.seed, 1000 + i));
        Sample s{Matrix(spec.steps, spec.channels), {}};
        s.target.label = static_cast<int>(k);
        for (std::size_t c = 0; c < spec.channels; ++c)
            for (int t : tpl.times[k][c]) {
                const int shifted = spec.jitter_std > 0 ? t + static_cast<int>(std::lround(rng.normal() * spec.jitter_std)) : t;
                s.input(static_cast<std::size_t>(std::clamp(shifted, 0, last)), c) = 1;
            }
        d.samples.push_back(std::move(s));
    }
    return d;
}

inline Dataset gen_pattern_classification(std::size_t classes, std::size_t steps, std::size_t channels,
                                          double jitter_std, std::uint64_t seed) {
    PatternTaskSpec spec;
    spec.classes = classes;
    spec.steps = steps;
    spec.channels = channels;
    spec.jitter_std = jitter_std;
    spec.seed = seed;
    return gen_pattern_classification(spec);
}

struct WaveformTaskSpec {
    std::size_t classes = 3;  // K distinct waveforms, at most kWaveformCount
    std::size_t segment_len = 40;
    std::size_t segments_per_sample = 5;
    double noise_std = 0.05;
    std::size_t samples = 200;
    std::uint64_t seed = 0;
};

inline constexpr std::size_t kWaveformCount = 6;

// Waveform k evaluated `t` steps into its segment.
inline double waveform(std::size_t k, std::size_t t) {
    constexpr double pi = 3.14159265358979323846;
    const double x = static_cast<double>(t);
    switch (k) {
        case 0: return 0.4 * static_cast<double>(t % 5);         // rising sawtooth
        case 1: return -0.4 * static_cast<double>(t % 5);        // falling sawtooth
        case 2: return (t / 2) % 2 == 0 ? 0.8 : -0.8;            // square wave, half period 2
        case 3: return std::sin(2 * pi * x / 8);                 // sine, period 8
        case 4: return 0.25 * std::abs(static_cast<double>(t % 12) - 6.0);  // triangle, period 12
        case 5: return (t % 10) < 3 ? 1.2 : 0.0;                 // pulse train
        default: throw std::out_of_range("waveform: index " + std::to_string(k));
    }
}

inline void validate(const WaveformTaskSpec& s) {
    if (s.classes < 1 || s.classes > kWaveformCount)
        throw ConfigError("waveform task: classes must lie in [1, " + std::to_string(kWaveformCount) + "]");
    if (s.segment_len < 1 || s.segments_per_sample < 1) throw ConfigError("waveform task: lengths must be positive");
    if (!(s.noise_std >= 0)) throw ConfigError("waveform task: noise_std must be >= 0");
}

// One analog channel made of randomly chosen waveform segments, labelled per step.
inline Dataset gen_streaming_waveform(const WaveformTaskSpec& spec) {
    validate(spec);
    const std::size_t steps = spec.segment_len * spec.segments_per_sample;
    Dataset d{TaskKind::streaming, steps, 1, spec.classes, {}};
    for (std::size_t i = 0; i < spec.samples; ++i) {
        Rng rng(Rng::mix(spec.seed, i));
        Sample s{Matrix(steps, 1), {}};
        s.target.step_labels.resize(steps);
        for (std::size_t seg = 0; seg < spec.segments_per_sample; ++seg) {
            const std::size_t k = static_cast<std::size_t>(rng.below(spec.classes));
            for (std::size_t t = 0; t < spec.segment_len; ++t) {
                const std::size_t at = seg * spec.segment_len + t;
                s.input(at, 0) = waveform(k, t) + (spec.noise_std > 0 ? spec.noise_std * rng.normal() : 0.0);
                s.target.step_labels[at] = static_cast<int>(k);
            }
        }
        d.samples.push_back(std::move(s));
    }
    return d;
}

inline Dataset gen_streaming_waveform(std::size_t classes, std::size_t segment_len, std::size_t segments_per_sample,
                                      double noise_std, std::uint64_t seed) {
    WaveformTaskSpec spec;
    spec.classes = classes;
    spec.segment_len = segment_len;
    spec.segments_per_sample = segments_per_sample;
    spec.noise_std = noise_std;
    spec.seed = seed;
    return gen_streaming_waveform(spec);
}

struct Splits {
    Dataset train;
    Dataset val;
    Dataset test;
};

// Sizes are round(r_train n) and round(r_val n); the test split takes the rest.
inline Splits split(const Dataset& d, std::array<double, 3> ratios, std::uint64_t seed) {
    for (double r : ratios)
        if (!(r >= 0)) throw ConfigError("split ratios must be non-negative");
    if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
    const std::size_t n = d.size();
    const auto n_train = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(n)));
    const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n))));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
    auto take = [&](std::size_t begin, std::size_t end) {
        std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                     order.begin() + static_cast<std::ptrdiff_t>(end));
        std::sort(idx.begin(), idx.end());
        return d.subset(idx);
    };
    return {take(0, n_train), take(n_train, n_train + n_val), take(n_train + n_val, n)};
}

struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

inline ChannelStats channel_stats(const Dataset& d) {
    ChannelStats s{std::vector<double>(d.channels, 0.0), std::vector<double>(d.channels, 0.0)};
    double count = 0;
    for (const auto& sample : d.samples) {
        for (std::size_t t = 0; t < sample.input.rows(); ++t)
            for (std::size_t c = 0; c < d.channels; ++c) s.mean[c] += sample.input(t, c);
        count += static_cast<double>(sample.input.rows());
    }
    if (count == 0) throw ShapeError("channel_stats: empty dataset");
    for (double& m : s.mean) m /= count;
    for (const auto& sample : d.samples)
        for (std::size_t t = 0; t < sample.input.rows(); ++t)
            for (std::size_t c = 0; c < d.channels; ++c) {
                const double e = sample.input(t, c) - s.mean[c];
                s.stddev[c] += e * e;
            }
    for (double& v : s.stddev) v = std::sqrt(v / count);
    return s;
}

// Channels with zero spread are only centred.
inline Dataset zscore(Dataset d, const ChannelStats& s) {
    require_shape(s.mean.size() == d.channels && s.stddev.size() == d.channels, "zscore: statistics width mismatch");
    for (auto& sample : d.samples)
        for (std::size_t t = 0; t < sample.input.rows(); ++t)
            for (std::size_t c = 0; c < d.channels; ++c) {
                const double sd = s.stddev[c] > 0 ? s.stddev[c] : 1.0;
                sample.input(t, c) = (sample.input(t, c) - s.mean[c]) / sd;
            }
    return d;
}

// Analog channel c becomes spike channels 2c (up) and 2c+1 (down).
inline Dataset encode_level_crossing(const Dataset& d, double l_plus = 0.3, double l_minus = 0.3) {
    Dataset out{d.kind, d.steps, 2 * d.channels, d.classes, {}};
    out.samples.reserve(d.size());
    for (const auto& s : d.samples) out.samples.push_back({level_crossing_encode(s.input, l_plus, l_minus).spikes, s.target});
    return out;
}

}  // namespace srnn
