#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <vector>

#include "srnn/error.hpp"
#include "srnn/matrix.hpp"
#include "srnn/network.hpp"

namespace srnn {

// T x N binary matrix stored as doubles (0/1) so it can be fed straight into the network.
struct SpikeRaster {
    Matrix spikes;
    std::vector<std::string> channels;

    std::size_t steps() const noexcept { return spikes.rows(); }
    std::size_t width() const noexcept { return spikes.cols(); }
};

template <std::floating_point Real>
std::vector<Real> softmax(std::span<const Real> z) {
    std::vector<Real> p(z.begin(), z.end());
    if (p.empty()) return p;
    const Real m = *std::max_element(p.begin(), p.end());
    Real sum = 0;
    for (Real& v : p) sum += (v = std::exp(v - m));
    for (Real& v : p) v /= sum;
    return p;
}

template <std::floating_point Real>
std::size_t argmax(std::span<const Real> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// Level-crossing (delta) encoding of one analog series into an up and a down channel.
// The first sample has no predecessor and never spikes.
inline SpikeRaster level_crossing_encode(std::span<const double> x, double l_plus = 0.3, double l_minus = 0.3) {
    if (x.empty()) throw std::invalid_argument("level_crossing_encode: empty series");
    if (!(l_plus > 0) || !(l_minus > 0)) throw std::invalid_argument("level_crossing_encode: thresholds must be positive");
    SpikeRaster r;
    r.spikes = Matrix(x.size(), 2);
    r.channels = {"up", "down"};
    for (std::size_t t = 0; t < x.size(); ++t) {
        if (!std::isfinite(x[t]))
            throw std::domain_error("level_crossing_encode: non-finite sample at t=" + std::to_string(t));
        if (t == 0) continue;
        if (x[t] - x[t - 1] >= l_plus) r.spikes(t, 0) = 1;
        if (x[t - 1] - x[t] >= l_minus) r.spikes(t, 1) = 1;
    }
    return r;
}

// Multi-channel variant: analog channel c becomes spike channels 2c (up) and 2c+1 (down).
inline SpikeRaster level_crossing_encode(const Matrix& series, double l_plus = 0.3, double l_minus = 0.3) {
    SpikeRaster r;
    r.spikes = Matrix(series.rows(), 2 * series.cols());
    std::vector<double> column(series.rows());
    for (std::size_t c = 0; c < series.cols(); ++c) {
        for (std::size_t t = 0; t < series.rows(); ++t) column[t] = series(t, c);
        const SpikeRaster one = level_crossing_encode(column, l_plus, l_minus);
        for (std::size_t t = 0; t < series.rows(); ++t) {
            r.spikes(t, 2 * c) = one.spikes(t, 0);
            r.spikes(t, 2 * c + 1) = one.spikes(t, 1);
        }
        r.channels.push_back("ch" + std::to_string(c) + "_up");
        r.channels.push_back("ch" + std::to_string(c) + "_down");
    }
    return r;
}

// Frames of `size` consecutive samples, one frame per output step.
inline Matrix sliding_window(std::span<const double> series, std::size_t size = 4, std::size_t stride = 1) {
    if (size == 0 || stride == 0) throw std::invalid_argument("sliding_window: size and stride must be positive");
    if (series.size() < size)
        throw std::invalid_argument("sliding_window: series of length " + std::to_string(series.size()) +
                                    " is shorter than the window " + std::to_string(size));
    const std::size_t frames = (series.size() - size) / stride + 1;
    Matrix out(frames, size);
    for (std::size_t f = 0; f < frames; ++f)
        std::copy_n(series.begin() + static_cast<std::ptrdiff_t>(f * stride), size, out.row(f).begin());
    return out;
}

template <std::floating_point Real>
std::vector<Real> decode_spike_count(const BasicMatrix<Real>& raster) {
    std::vector<Real> counts(raster.cols(), Real(0));
    for (std::size_t t = 0; t < raster.rows(); ++t)
        for (std::size_t c = 0; c < raster.cols(); ++c) counts[c] += raster(t, c);
    return softmax<Real>(counts);
}

template <std::floating_point Real>
std::vector<Real> decode_membrane(std::span<const Real> u) {
    return softmax<Real>(u);
}

// Class probabilities after the whole sequence. Membrane decoders average the per-step
// softmax over time.
template <std::floating_point Real>
std::vector<Real> decode_sequence(const BasicMatrix<Real>& out_u, const BasicMatrix<Real>& out_spikes, DecodeMode mode) {
    if (mode == DecodeMode::spike_count) return decode_spike_count(out_spikes);
    std::vector<Real> mean(out_u.cols(), Real(0));
    if (out_u.rows() == 0) return softmax<Real>(mean);
    for (std::size_t t = 0; t < out_u.rows(); ++t) {
        const auto p = decode_membrane<Real>(out_u.row(t));
        for (std::size_t c = 0; c < p.size(); ++c) mean[c] += p[c];
    }
    for (Real& v : mean) v /= static_cast<Real>(out_u.rows());
    return mean;
}

// Row t holds the prediction available after reading steps 0..t: cumulative spike counts,
// the running mean of membrane softmaxes, or (streaming) the step-t softmax alone.
inline Matrix anytime_probabilities(const Matrix& out_u, const Matrix& out_spikes, DecodeMode mode, bool streaming) {
    const std::size_t steps = out_u.rows(), classes = out_u.cols();
    Matrix probs(steps, classes);
    std::vector<double> acc(classes, 0.0);
    for (std::size_t t = 0; t < steps; ++t) {
        std::vector<double> p;
        if (streaming) {
            p = decode_membrane<double>(out_u.row(t));
        } else if (mode == DecodeMode::spike_count) {
            for (std::size_t c = 0; c < classes; ++c) acc[c] += out_spikes(t, c);
            p = softmax<double>(acc);
        } else {
            const auto step = decode_membrane<double>(out_u.row(t));
            for (std::size_t c = 0; c < classes; ++c) acc[c] += step[c];
            p.resize(classes);
            for (std::size_t c = 0; c < classes; ++c) p[c] = acc[c] / static_cast<double>(t + 1);
        }
        std::copy(p.begin(), p.end(), probs.row(t).begin());
    }
    return probs;
}

// Accuracy as a function of time, averaged over samples. `labels[i]` holds one label per
// step (streaming) or a single label used for every step.
inline std::vector<double> anytime_curve(std::span<const Matrix> per_step_probs,
                                         std::span<const std::vector<int>> labels) {
    require_shape(per_step_probs.size() == labels.size(), "anytime_curve: probability/label count mismatch");
    if (per_step_probs.empty()) return {};
    const std::size_t horizon = per_step_probs.front().rows();
    std::vector<double> curve(horizon, 0.0);
    for (std::size_t i = 0; i < per_step_probs.size(); ++i) {
        const Matrix& p = per_step_probs[i];
        require_shape(p.rows() == horizon, "anytime_curve: ragged horizons");
        const auto& y = labels[i];
        require_shape(y.size() == 1 || y.size() == horizon, "anytime_curve: label length mismatch");
        for (std::size_t t = 0; t < horizon; ++t) {
            const int target = y.size() == 1 ? y[0] : y[t];
            if (static_cast<int>(argmax<double>(p.row(t))) == target) curve[t] += 1.0;
        }
    }
    for (double& v : curve) v /= static_cast<double>(per_step_probs.size());
    return curve;
}

}  // namespace srnn
