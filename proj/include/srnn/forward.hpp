#pragma once

#include <concepts>
#include <span>
#include <vector>

#include "srnn/matrix.hpp"
#include "srnn/network.hpp"
#include "srnn/neuron.hpp"

namespace srnn {

// Everything the backward pass needs for one layer, one row per timestep.
template <std::floating_point Real>
struct BasicLayerTrace {
    BasicMatrix<Real> drive;
    BasicMatrix<Real> u;
    BasicMatrix<Real> eta;  // adaptive kinds only
    BasicMatrix<Real> out;  // spikes (0/1), ReLU activations, or the readout membrane

    std::size_t steps() const noexcept { return u.rows(); }
};

// `reverse_layers` rows are in the order the reverse stack consumed them (reversed time).
// `head_input` holds the readout input of a bidirectional network.
template <std::floating_point Real>
struct BasicForwardTrace {
    Matrix input;
    std::vector<BasicLayerTrace<Real>> layers;
    std::vector<BasicLayerTrace<Real>> reverse_layers;
    BasicMatrix<Real> head_input;

    std::size_t steps() const noexcept { return input.rows(); }
    const BasicLayerTrace<Real>& output() const { return layers.back(); }
};

using LayerTrace = BasicLayerTrace<double>;
using ForwardTrace = BasicForwardTrace<double>;

template <std::floating_point Real>
struct BasicLayerState {
    std::vector<Real> u;
    std::vector<Real> eta;
    std::vector<Real> out;  // previous step output, feeds recurrence and resets
};

template <std::floating_point Real>
struct BasicNetworkState {
    std::vector<BasicLayerState<Real>> layers;
};

using NetworkState = BasicNetworkState<double>;

template <std::floating_point Real>
BasicLayerState<Real> initial_state(const BasicLayer<Real>& l) {
    BasicLayerState<Real> s;
    s.u = l.u0;
    s.out.assign(l.size, Real(0));
    if (has_adaptation(l.kind)) s.eta.assign(l.size, Real(0));
    return s;
}

template <std::floating_point Real>
BasicNetworkState<Real> initial_state(const BasicNetwork<Real>& net) {
    BasicNetworkState<Real> s;
    for (const auto& l : net.layers) s.layers.push_back(initial_state(l));
    return s;
}

namespace detail {

// Per-neuron decay factors, evaluated once per sequence.
template <std::floating_point Real>
struct LayerCoefficients {
    std::vector<AlifCoefficients<Real>> adaptive;
    std::vector<LifParams<Real>> leaky;

    explicit LayerCoefficients(const BasicLayer<Real>& l) {
        if (has_adaptation(l.kind)) {
            adaptive.reserve(l.size);
            for (std::size_t j = 0; j < l.size; ++j)
                adaptive.push_back(AlifCoefficients<Real>::from(
                    {l.tau_m[j], l.tau_adp[j], l.b_0, l.beta, l.r_m, l.dt}));
        } else {
            leaky.reserve(l.size);
            for (std::size_t j = 0; j < l.size; ++j)
                leaky.push_back({l.tau_m[j], l.r_m, l.u_r, l.theta, l.dt, l.reset});
        }
    }
};

// drive = bias + W_in^T x + W_rec^T out_prev. Zero presynaptic entries are skipped, which
// makes the spiking case event driven.
template <std::floating_point Real>
void compute_drive(const BasicLayer<Real>& l, std::span<const Real> x, std::span<const Real> out_prev,
                   std::span<Real> drive) {
    std::copy(l.bias.begin(), l.bias.end(), drive.begin());
    for (std::size_t i = 0; i < l.fan_in; ++i)
        if (x[i] != 0) axpy<Real>(x[i], l.w_in.row(i), drive);
    if (l.recurrent())
        for (std::size_t i = 0; i < l.size; ++i)
            if (out_prev[i] != 0) axpy<Real>(out_prev[i], l.w_rec.row(i), drive);
}

template <std::floating_point Real>
void advance_layer(const BasicLayer<Real>& l, const LayerCoefficients<Real>& c, std::span<const Real> x,
                   BasicLayerState<Real>& s, std::span<Real> drive) {
    compute_drive<Real>(l, x, s.out, drive);
    for (std::size_t j = 0; j < l.size; ++j) {
        switch (l.kind) {
            case NeuronKind::lif: {
                const auto next = lif_step<Real>({s.u[j], s.out[j] != 0}, drive[j], c.leaky[j]);
                s.u[j] = next.u;
                s.out[j] = next.spike ? Real(1) : Real(0);
                break;
            }
            case NeuronKind::alif:
            case NeuronKind::spiking_output: {
                const auto next = alif_step<Real>({s.u[j], s.eta[j], s.out[j] != 0}, drive[j], c.adaptive[j]);
                s.u[j] = next.u;
                s.eta[j] = next.eta;
                s.out[j] = next.spike ? Real(1) : Real(0);
                break;
            }
            case NeuronKind::relu: {
                const auto next = relu_step<Real>({s.u[j], s.eta[j], s.out[j]}, drive[j], c.adaptive[j]);
                s.u[j] = next.u;
                s.eta[j] = next.eta;
                s.out[j] = next.out;
                break;
            }
            case NeuronKind::readout:
                s.u[j] = readout_step<Real>(s.u[j], drive[j], c.leaky[j]);
                s.out[j] = s.u[j];
                break;
        }
    }
}

template <std::floating_point Real>
BasicLayerTrace<Real> make_trace(const BasicLayer<Real>& l, std::size_t steps) {
    BasicLayerTrace<Real> t;
    t.drive = BasicMatrix<Real>(steps, l.size);
    t.u = BasicMatrix<Real>(steps, l.size);
    t.out = BasicMatrix<Real>(steps, l.size);
    if (has_adaptation(l.kind)) t.eta = BasicMatrix<Real>(steps, l.size);
    return t;
}

template <std::floating_point Real>
void record(const BasicLayerState<Real>& s, BasicLayerTrace<Real>& t, std::size_t step) {
    std::copy(s.u.begin(), s.u.end(), t.u.row(step).begin());
    std::copy(s.out.begin(), s.out.end(), t.out.row(step).begin());
    if (!s.eta.empty()) std::copy(s.eta.begin(), s.eta.end(), t.eta.row(step).begin());
}

// Runs a stack of layers over `input` (steps x fan_in of the first layer), reading the
// input rows in reverse when `reversed` is set.
template <std::floating_point Real>
std::vector<BasicLayerTrace<Real>> run_stack(std::span<const BasicLayer<Real>> stack, const BasicMatrix<Real>& input,
                                             bool reversed) {
    const std::size_t steps = input.rows();
    std::vector<LayerCoefficients<Real>> coeffs;
    std::vector<BasicLayerState<Real>> states;
    std::vector<BasicLayerTrace<Real>> traces;
    for (const auto& l : stack) {
        coeffs.emplace_back(l);
        states.push_back(initial_state(l));
        traces.push_back(make_trace(l, steps));
    }
    for (std::size_t t = 0; t < steps; ++t) {
        std::span<const Real> x = input.row(reversed ? steps - 1 - t : t);
        for (std::size_t k = 0; k < stack.size(); ++k) {
            advance_layer<Real>(stack[k], coeffs[k], x, states[k], traces[k].drive.row(t));
            record(states[k], traces[k], t);
            x = traces[k].out.row(t);
        }
    }
    return traces;
}

}  // namespace detail

// One step of a unidirectional network. Returns each layer's output for this step.
template <std::floating_point Real>
std::vector<std::vector<Real>> forward_step(const BasicNetwork<Real>& net, std::span<const Real> x,
                                            BasicNetworkState<Real>& state) {
    require_shape(!net.bidirectional(), "forward_step: bidirectional networks are not causal");
    require_shape(x.size() == net.spec.input_size, "forward_step: input length " + std::to_string(x.size()) +
                                                      " != input_size " + std::to_string(net.spec.input_size));
    require_shape(state.layers.size() == net.layers.size(), "forward_step: state does not match network");
    std::vector<std::vector<Real>> outputs;
    std::span<const Real> in = x;
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        const auto& l = net.layers[k];
        std::vector<Real> drive(l.size);
        detail::advance_layer<Real>(l, detail::LayerCoefficients<Real>(l), in, state.layers[k], drive);
        outputs.push_back(state.layers[k].out);
        in = outputs.back();
    }
    return outputs;
}

template <std::floating_point Real>
BasicForwardTrace<Real> forward_bidirectional(const BasicNetwork<Real>& net, const Matrix& input) {
    require_shape(net.bidirectional(), "forward_bidirectional: network has no reverse stack");
    require_shape(input.cols() == net.spec.input_size, "forward: input has " + std::to_string(input.cols()) +
                                                          " channels, network expects " +
                                                          std::to_string(net.spec.input_size));
    BasicForwardTrace<Real> trace;
    trace.input = input;
    const BasicMatrix<Real> x = input.template cast<Real>();
    const std::size_t steps = input.rows();
    std::span<const BasicLayer<Real>> fwd(net.layers.data(), net.layers.size() - 1);
    trace.layers = detail::run_stack<Real>(fwd, x, false);
    trace.reverse_layers = detail::run_stack<Real>(net.reverse_layers, x, true);
    const auto& top_f = trace.layers.back().out;
    const auto& top_b = trace.reverse_layers.back().out;
    trace.head_input = BasicMatrix<Real>(steps, top_f.cols());
    for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t j = 0; j < top_f.cols(); ++j)
            trace.head_input(t, j) = (top_f(t, j) + top_b(steps - 1 - t, j)) / Real(2);
    auto head = detail::run_stack<Real>(std::span<const BasicLayer<Real>>(&net.layers.back(), 1), trace.head_input,
                                        false);
    trace.layers.push_back(std::move(head.front()));
    return trace;
}

template <std::floating_point Real>
BasicForwardTrace<Real> forward_sequence(const BasicNetwork<Real>& net, const Matrix& input) {
    if (net.bidirectional()) return forward_bidirectional(net, input);
    require_shape(input.cols() == net.spec.input_size, "forward: input has " + std::to_string(input.cols()) +
                                                          " channels, network expects " +
                                                          std::to_string(net.spec.input_size));
    BasicForwardTrace<Real> trace;
    trace.input = input;
    trace.layers = detail::run_stack<Real>(net.layers, input.template cast<Real>(), false);
    return trace;
}

}  // namespace srnn
