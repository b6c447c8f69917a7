#pragma once

#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <vector>

#include "srnn/codecs.hpp"
#include "srnn/error.hpp"
#include "srnn/forward.hpp"
#include "srnn/network.hpp"

namespace srnn {

// One label for the whole sequence, or one per timestep for streaming tasks.
struct Target {
    int label = -1;
    std::vector<int> step_labels;

    bool streaming() const noexcept { return !step_labels.empty(); }
};

// Cross-entropy -log y_hat[y] of a probability vector.
template <std::floating_point Real = double>
Real loss_classification(std::span<const Real> y_hat, int y) {
    if (y < 0 || static_cast<std::size_t>(y) >= y_hat.size())
        throw std::out_of_range("loss_classification: label " + std::to_string(y) + " outside [0, " +
                                std::to_string(y_hat.size()) + ")");
    Real sum = 0;
    for (Real p : y_hat) sum += p;
    if (std::abs(static_cast<double>(sum) - 1.0) > 1e-6)
        throw std::invalid_argument("loss_classification: probabilities sum to " + std::to_string(static_cast<double>(sum)));
    return -std::log(y_hat[static_cast<std::size_t>(y)]);
}

template <std::floating_point Real = double>
Real loss_streaming(std::span<const std::vector<Real>> y_hat, std::span<const int> y) {
    require_shape(y_hat.size() == y.size(), "loss_streaming: prediction/label length mismatch");
    Real total = 0;
    for (std::size_t t = 0; t < y.size(); ++t) total += loss_classification<Real>(y_hat[t], y[t]);
    return total;
}

namespace detail {

template <std::floating_point Real>
Real log_softmax_at(std::span<const Real> z, std::size_t k) {
    Real m = z[0];
    for (Real v : z) m = std::max(m, v);
    Real sum = 0;
    for (Real v : z) sum += std::exp(v - m);
    return z[k] - m - std::log(sum);
}

inline void check_target(const Target& target, std::size_t classes, std::size_t steps) {
    auto check = [&](int y) {
        if (y < 0 || static_cast<std::size_t>(y) >= classes)
            throw std::out_of_range("label " + std::to_string(y) + " outside [0, " + std::to_string(classes) + ")");
    };
    if (target.streaming()) {
        require_shape(target.step_labels.size() == steps, "streaming target has " +
                                                              std::to_string(target.step_labels.size()) +
                                                              " labels for " + std::to_string(steps) + " steps");
        for (int y : target.step_labels) check(y);
    } else {
        check(target.label);
    }
}

}  // namespace detail

// Loss of one forward pass under the network's decode mode.
template <std::floating_point Real>
Real sample_loss(const BasicNetwork<Real>& net, const BasicForwardTrace<Real>& trace, const Target& target) {
    const auto& out = trace.output();
    const std::size_t steps = trace.steps();
    detail::check_target(target, net.output_layer().size, steps);
    if (target.streaming()) {
        if (net.spec.decode == DecodeMode::spike_count)
            throw ConfigError("streaming targets need a membrane decoder, not SpikeCount");
        Real total = 0;
        for (std::size_t t = 0; t < steps; ++t)
            total -= detail::log_softmax_at<Real>(out.u.row(t), static_cast<std::size_t>(target.step_labels[t]));
        return total;
    }
    const auto p = decode_sequence(out.u, out.out, net.spec.decode);
    return -std::log(p[static_cast<std::size_t>(target.label)]);
}

// dL/du and dL/d(out) of the output layer at every step.
struct OutputGradient {
    Matrix d_u;
    Matrix d_out;
};

inline OutputGradient output_gradient(const Network& net, const ForwardTrace& trace, const Target& target) {
    const auto& out = trace.output();
    const std::size_t steps = trace.steps(), classes = net.output_layer().size;
    detail::check_target(target, classes, steps);
    OutputGradient g{Matrix(steps, classes), Matrix(steps, classes)};
    if (target.streaming()) {
        if (net.spec.decode == DecodeMode::spike_count)
            throw ConfigError("streaming targets need a membrane decoder, not SpikeCount");
        for (std::size_t t = 0; t < steps; ++t) {
            const auto p = decode_membrane<double>(out.u.row(t));
            for (std::size_t c = 0; c < classes; ++c)
                g.d_u(t, c) = p[c] - (static_cast<int>(c) == target.step_labels[t] ? 1.0 : 0.0);
        }
        return g;
    }
    const auto y = static_cast<std::size_t>(target.label);
    if (net.spec.decode == DecodeMode::spike_count) {
        const auto p = decode_spike_count(out.out);
        for (std::size_t t = 0; t < steps; ++t)
            for (std::size_t c = 0; c < classes; ++c) g.d_out(t, c) = p[c] - (c == y ? 1.0 : 0.0);
        return g;
    }
    // L = -log( (1/T) sum_t softmax(u_t)[y] )
    const auto mean = decode_sequence(out.u, out.out, net.spec.decode);
    const double scale = -1.0 / (static_cast<double>(steps) * mean[y]);
    for (std::size_t t = 0; t < steps; ++t) {
        const auto p = decode_membrane<double>(out.u.row(t));
        for (std::size_t k = 0; k < classes; ++k) g.d_u(t, k) = scale * p[y] * ((k == y ? 1.0 : 0.0) - p[k]);
    }
    return g;
}

}  // namespace srnn
