#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "srnn/backward.hpp"
#include "srnn/forward.hpp"
#include "srnn/loss.hpp"
#include "srnn/network.hpp"
#include "srnn/surrogate.hpp"
#include "srnn/verify/unrolled_graph.hpp"

namespace srnn {

enum class GradCheckMode { relu_exact, surrogate_consistency };

struct GradCheckResult {
    GradCheckMode mode = GradCheckMode::relu_exact;
    double max_error = 0;          // relative (relu_exact) or absolute (surrogate_consistency)
    std::size_t checked = 0;       // parameters compared
    std::size_t skipped_kinks = 0; // relu_exact: a ReLU gate flipped inside the stencil
    std::string worst;             // location of max_error
};

namespace detail {

// Loss evaluated in extended precision; also returns every ReLU gate so that stencils
// straddling a kink can be recognised.
inline long double extended_loss(const BasicNetwork<long double>& net, const Matrix& input, const Target& target,
                                 std::vector<bool>* gates) {
    const auto trace = forward_sequence(net, input);
    if (gates) {
        gates->clear();
        auto collect = [&](const std::vector<BasicLayerTrace<long double>>& layers, const auto& stack) {
            for (std::size_t l = 0; l < layers.size(); ++l)
                if (stack[l].kind == NeuronKind::relu)
                    for (long double v : layers[l].out.data()) gates->push_back(v > 0);
        };
        collect(trace.layers, net.layers);
        collect(trace.reverse_layers, net.reverse_layers);
    }
    return sample_loss(net, trace, target);
}

inline std::string param_label(std::size_t layer, bool reverse, ParamGroup group, std::size_t index) {
    return std::string(reverse ? "reverse_layers[" : "layers[") + std::to_string(layer) + "]." + to_string(group) +
           "[" + std::to_string(index) + "]";
}

}  // namespace detail

// Central finite differences on a network without spiking units. Gradients below 1e-8 in
// both estimates are ignored; a parameter whose stencil flips a ReLU gate is retried with a
// step ten times smaller and skipped if the gate still flips.
inline GradCheckResult grad_check_relu_exact(const Network& net, const Matrix& input, const Target& target,
                                             double step = 1e-5) {
    for (const auto& l : net.layers)
        if (is_spiking(l.kind)) throw ConfigError("relu_exact grad check needs a network without spiking layers");
    for (const auto& l : net.reverse_layers)
        if (is_spiking(l.kind)) throw ConfigError("relu_exact grad check needs a network without spiking layers");

    const auto trace = forward_sequence(net, input);
    const GradientSet analytic = backward(net, trace, target, MultiGaussian{});

    std::vector<std::span<const double>> grads;
    analytic.for_each([&](ParamGroup, std::span<const double> v) { grads.push_back(v); });

    BasicNetwork<long double> probe = net.cast<long double>();
    std::vector<bool> gates_ref, gates_plus, gates_minus;
    detail::extended_loss(probe, input, target, &gates_ref);

    GradCheckResult r;
    r.mode = GradCheckMode::relu_exact;
    std::size_t array = 0;
    const std::size_t per_layer = 5;
    for_each_parameter(probe, [&](ParamGroup group, auto values, auto&) {
        const std::size_t layer = array / per_layer;
        const bool reverse = layer >= probe.layers.size();
        const std::size_t layer_index = reverse ? layer - probe.layers.size() : layer;
        const auto& g = grads[array++];
        for (std::size_t i = 0; i < values.size(); ++i) {
            const long double original = values[i];
            long double h = step;
            long double fd = 0;
            bool kink = true;
            for (int attempt = 0; attempt < 2 && kink; ++attempt, h /= 10) {
                values[i] = original + h;
                const long double lp = detail::extended_loss(probe, input, target, &gates_plus);
                values[i] = original - h;
                const long double lm = detail::extended_loss(probe, input, target, &gates_minus);
                values[i] = original;
                kink = gates_plus != gates_ref || gates_minus != gates_ref;
                fd = (lp - lm) / (2 * h);
            }
            if (kink) {
                ++r.skipped_kinks;
                continue;
            }
            const double numeric = static_cast<double>(fd);
            const double denom = std::max(std::abs(numeric), std::abs(g[i]));
            if (denom <= 1e-8) continue;
            ++r.checked;
            const double err = std::abs(numeric - g[i]) / denom;
            if (err > r.max_error || r.worst.empty()) {
                r.max_error = std::max(r.max_error, err);
                r.worst = detail::param_label(layer_index, reverse, group, i);
            }
        }
    });
    return r;
}

// Vectorized backward against the unrolled-graph accumulator with the same surrogate.
// `reference_surrogate` defaults to the one under test; passing a different one models a
// corrupted implementation.
inline GradCheckResult grad_check_surrogate_consistency(const Network& net, const Matrix& input, const Target& target,
                                                        const SurrogateKind& surrogate,
                                                        const SurrogateKind* reference_surrogate = nullptr) {
    const auto trace = forward_sequence(net, input);
    const GradientSet fast = backward(net, trace, target, surrogate);
    const auto naive = verify::naive_gradients(net, input, target, reference_surrogate ? *reference_surrogate : surrogate);

    std::vector<std::span<const double>> ref;
    naive.grads.for_each([&](ParamGroup, std::span<const double> v) { ref.push_back(v); });
    GradCheckResult r;
    r.mode = GradCheckMode::surrogate_consistency;
    std::size_t array = 0;
    const std::size_t per_layer = 5;
    fast.for_each([&](ParamGroup group, std::span<const double> v) {
        const std::size_t layer = array / per_layer;
        const bool reverse = layer >= net.layers.size();
        const auto& other = ref[array++];
        for (std::size_t i = 0; i < v.size(); ++i) {
            ++r.checked;
            const double err = std::abs(v[i] - other[i]);
            if (err > r.max_error || r.worst.empty()) {
                r.max_error = std::max(r.max_error, err);
                r.worst = detail::param_label(reverse ? layer - net.layers.size() : layer, reverse, group, i);
            }
        }
    });
    return r;
}

inline GradCheckResult grad_check(const Network& net, const Matrix& input, const Target& target, GradCheckMode mode,
                                  const SurrogateKind& surrogate = MultiGaussian{}) {
    return mode == GradCheckMode::relu_exact ? grad_check_relu_exact(net, input, target)
                                             : grad_check_surrogate_consistency(net, input, target, surrogate);
}

}  // namespace srnn
