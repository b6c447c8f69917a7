#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <string>
#include <vector>

#include "srnn/error.hpp"
#include "srnn/matrix.hpp"
#include "srnn/neuron.hpp"
#include "srnn/rng.hpp"

namespace srnn {

enum class NeuronKind { lif, alif, relu, readout, spiking_output };

enum class DecodeMode { spike_count, membrane_softmax, spiking_membrane_softmax };

constexpr bool is_spiking(NeuronKind k) noexcept {
    return k == NeuronKind::lif || k == NeuronKind::alif || k == NeuronKind::spiking_output;
}

// Kinds whose membrane follows the exponential (alpha/rho) form and carry tau_adp.
constexpr bool has_adaptation(NeuronKind k) noexcept {
    return k == NeuronKind::alif || k == NeuronKind::spiking_output || k == NeuronKind::relu;
}

struct TauInit {
    double mean = 20.0;
    double stddev = 5.0;

    friend bool operator==(const TauInit&, const TauInit&) = default;
};

struct LayerSpec {
    std::size_t size = 1;
    NeuronKind neuron = NeuronKind::alif;
    bool recurrent = true;
    TauInit tau_m_init{20.0, 5.0};
    TauInit tau_adp_init{150.0, 10.0};
    double theta = 1.0;  // LIF / readout threshold, also the membrane init range
    double u_r = 0.0;
    double b_0 = 1.0;
    double beta = 1.8;
    double r_m = 1.0;
    double dt = 1.0;
    ResetMode reset = ResetMode::to_potential;  // LIF only

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct NetworkSpec {
    std::size_t input_size = 1;
    std::vector<LayerSpec> layers;
    DecodeMode decode = DecodeMode::membrane_softmax;
    bool bidirectional = false;
    std::uint64_t seed = 0;
    bool zero_init_membrane = false;

    std::size_t output_size() const { return layers.empty() ? 0 : layers.back().size; }

    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

inline constexpr double kTauMaxFactor = 1e4;

template <std::floating_point Real>
struct BasicLayer {
    NeuronKind kind = NeuronKind::alif;
    std::size_t fan_in = 0;
    std::size_t size = 0;
    BasicMatrix<Real> w_in;   // fan_in x size, row i holds presynaptic neuron i's fan-out
    BasicMatrix<Real> w_rec;  // size x size, empty when not recurrent
    std::vector<Real> bias;
    std::vector<Real> tau_m;
    std::vector<Real> tau_adp;  // empty unless has_adaptation(kind)
    std::vector<Real> u0;       // initial membrane potentials
    Real theta = 1;
    Real u_r = 0;
    Real b_0 = 1;
    Real beta = Real(1.8);
    Real r_m = 1;
    Real dt = 1;
    ResetMode reset = ResetMode::to_potential;

    bool recurrent() const noexcept { return !w_rec.empty(); }

    template <std::floating_point Other>
    BasicLayer<Other> cast() const {
        BasicLayer<Other> out;
        out.kind = kind;
        out.fan_in = fan_in;
        out.size = size;
        out.w_in = w_in.template cast<Other>();
        out.w_rec = w_rec.template cast<Other>();
        auto conv = [](const std::vector<Real>& v) { return std::vector<Other>(v.begin(), v.end()); };
        out.bias = conv(bias);
        out.tau_m = conv(tau_m);
        out.tau_adp = conv(tau_adp);
        out.u0 = conv(u0);
        out.theta = static_cast<Other>(theta);
        out.u_r = static_cast<Other>(u_r);
        out.b_0 = static_cast<Other>(b_0);
        out.beta = static_cast<Other>(beta);
        out.r_m = static_cast<Other>(r_m);
        out.dt = static_cast<Other>(dt);
        out.reset = reset;
        return out;
    }

    friend bool operator==(const BasicLayer&, const BasicLayer&) = default;
};

// A unidirectional network is `layers`, applied in order, the last one being the output
// layer. A bidirectional network runs `layers[0..n-2]` forward in time and
// `reverse_layers` (same shapes) on the time-reversed input; the mean of the two top
// hidden outputs drives the readout integrator `layers.back()`.
template <std::floating_point Real>
struct BasicNetwork {
    NetworkSpec spec;
    std::vector<BasicLayer<Real>> layers;
    std::vector<BasicLayer<Real>> reverse_layers;

    bool bidirectional() const noexcept { return !reverse_layers.empty(); }
    const BasicLayer<Real>& output_layer() const { return layers.back(); }

    template <std::floating_point Other>
    BasicNetwork<Other> cast() const {
        BasicNetwork<Other> out;
        out.spec = spec;
        for (const auto& l : layers) out.layers.push_back(l.template cast<Other>());
        for (const auto& l : reverse_layers) out.reverse_layers.push_back(l.template cast<Other>());
        return out;
    }

    friend bool operator==(const BasicNetwork&, const BasicNetwork&) = default;
};

using Layer = BasicLayer<double>;
using Network = BasicNetwork<double>;

inline std::string to_string(NeuronKind k) {
    switch (k) {
        case NeuronKind::lif: return "LIF";
        case NeuronKind::alif: return "ALIF";
        case NeuronKind::relu: return "ReLU";
        case NeuronKind::readout: return "Readout";
        case NeuronKind::spiking_output: return "SpikingOutput";
    }
    return "?";
}

inline std::string to_string(DecodeMode m) {
    switch (m) {
        case DecodeMode::spike_count: return "SpikeCount";
        case DecodeMode::membrane_softmax: return "MembraneSoftmax";
        case DecodeMode::spiking_membrane_softmax: return "SpikingMembraneSoftmax";
    }
    return "?";
}

inline void validate(const NetworkSpec& spec) {
    auto fail = [](const std::string& m) { throw ConfigError("network: " + m); };
    if (spec.input_size < 1) fail("input_size must be >= 1");
    if (spec.layers.empty()) fail("at least one layer is required");
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        const std::string at = "layers[" + std::to_string(i) + "]: ";
        if (l.size < 1) fail(at + "size must be >= 1");
        if (!(l.dt > 0) || !std::isfinite(l.dt)) fail(at + "dt must be positive");
        if (!(l.tau_m_init.mean > 0) || !(l.tau_m_init.stddev >= 0)) fail(at + "tau_m_init needs mean > 0, std >= 0");
        if (has_adaptation(l.neuron) && (!(l.tau_adp_init.mean > 0) || !(l.tau_adp_init.stddev >= 0)))
            fail(at + "tau_adp_init needs mean > 0, std >= 0");
        if (!std::isfinite(l.r_m)) fail(at + "r_m must be finite");
        if (l.neuron == NeuronKind::lif && !(l.theta > l.u_r)) fail(at + "theta must exceed u_r");
        if (!(l.theta > 0)) fail(at + "theta must be positive");
        if (has_adaptation(l.neuron) && !(l.b_0 > 0)) fail(at + "b_0 must be positive");
        if (!(l.beta >= 0)) fail(at + "beta must be >= 0");
        if (l.neuron == NeuronKind::readout) {
            if (i + 1 != spec.layers.size()) fail(at + "a Readout layer can only be the last layer");
            if (l.recurrent) fail(at + "a Readout layer cannot be recurrent");
        }
    }
    const NeuronKind out = spec.layers.back().neuron;
    switch (spec.decode) {
        case DecodeMode::spike_count:
            if (!is_spiking(out)) fail("SpikeCount decoding needs a spiking output layer");
            break;
        case DecodeMode::membrane_softmax:
            if (out != NeuronKind::readout) fail("MembraneSoftmax decoding needs a Readout output layer");
            break;
        case DecodeMode::spiking_membrane_softmax:
            if (out != NeuronKind::spiking_output && out != NeuronKind::alif)
                fail("SpikingMembraneSoftmax decoding needs an ALIF/SpikingOutput output layer");
            break;
    }
    if (spec.bidirectional) {
        if (spec.layers.size() < 2) fail("a bidirectional network needs hidden layers and an integrator");
        if (out != NeuronKind::readout) fail("a bidirectional network ends in a Readout integrator");
    }
}

namespace detail {

inline double clamp_tau(double tau, double dt) { return std::clamp(tau, dt, kTauMaxFactor * dt); }

inline Matrix xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_in, fan_out);
    for (double& v : w.data()) v = rng.uniform(-a, a);
    return w;
}

// Q factor of a Gaussian matrix via modified Gram-Schmidt, with the column signs fixed
// by diag(R) so the result is Haar distributed.
inline Matrix orthogonal(std::size_t n, Rng& rng) {
    std::vector<std::vector<double>> cols(n, std::vector<double>(n));
    for (auto& c : cols)
        for (double& v : c) v = rng.normal();
    for (std::size_t j = 0; j < n; ++j) {
        auto& q = cols[j];
        for (std::size_t k = 0; k < j; ++k) {
            const double r = dot<double>(cols[k], q);
            axpy<double>(-r, cols[k], q);
        }
        double norm = std::sqrt(dot<double>(q, q));
        if (norm < 1e-12) {  // degenerate draw; vanishingly unlikely
            std::fill(q.begin(), q.end(), 0.0);
            q[j] = 1.0;
            norm = 1.0;
        }
        for (double& v : q) v /= norm;
    }
    Matrix w(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) w(i, j) = cols[j][i];
    return w;
}

inline Layer init_layer(const LayerSpec& s, std::size_t fan_in, bool zero_membrane, Rng& rng) {
    Layer l;
    l.kind = s.neuron;
    l.fan_in = fan_in;
    l.size = s.size;
    l.theta = s.theta;
    l.u_r = s.u_r;
    l.b_0 = s.b_0;
    l.beta = s.beta;
    l.r_m = s.r_m;
    l.dt = s.dt;
    l.reset = s.reset;
    l.w_in = xavier_uniform(fan_in, s.size, rng);
    if (s.recurrent) l.w_rec = orthogonal(s.size, rng);
    l.bias.assign(s.size, 0.0);
    l.tau_m.resize(s.size);
    for (double& t : l.tau_m) t = clamp_tau(rng.normal(s.tau_m_init.mean, s.tau_m_init.stddev), s.dt);
    if (has_adaptation(s.neuron)) {
        l.tau_adp.resize(s.size);
        for (double& t : l.tau_adp) t = clamp_tau(rng.normal(s.tau_adp_init.mean, s.tau_adp_init.stddev), s.dt);
    }
    const double top = has_adaptation(s.neuron) && s.neuron != NeuronKind::relu ? s.b_0 : s.theta;
    l.u0.assign(s.size, 0.0);
    if (!zero_membrane)
        for (double& u : l.u0) u = rng.uniform(0.0, top);
    return l;
}

}  // namespace detail

// Xavier-uniform feed-forward weights, orthogonal recurrent weights, zero biases,
// normally distributed time constants clamped to [dt, 1e4 dt], membranes uniform on
// [0, threshold]. Deterministic in `seed`.
inline Network init_network(const NetworkSpec& spec, std::uint64_t seed) {
    validate(spec);
    Network net;
    net.spec = spec;
    net.spec.seed = seed;
    Rng rng(seed);
    const std::size_t n = spec.layers.size();
    const std::size_t hidden = spec.bidirectional ? n - 1 : n;
    std::size_t fan_in = spec.input_size;
    for (std::size_t i = 0; i < hidden; ++i) {
        net.layers.push_back(detail::init_layer(spec.layers[i], fan_in, spec.zero_init_membrane, rng));
        fan_in = spec.layers[i].size;
    }
    if (spec.bidirectional) {
        std::size_t rev_in = spec.input_size;
        for (std::size_t i = 0; i < hidden; ++i) {
            net.reverse_layers.push_back(detail::init_layer(spec.layers[i], rev_in, spec.zero_init_membrane, rng));
            rev_in = spec.layers[i].size;
        }
        net.layers.push_back(detail::init_layer(spec.layers.back(), fan_in, spec.zero_init_membrane, rng));
    }
    return net;
}

// Structural check for networks that did not come from init_network (e.g. loaded files).
template <std::floating_point Real>
void validate(const BasicNetwork<Real>& net) {
    validate(net.spec);
    auto check_stack = [](const std::vector<BasicLayer<Real>>& stack, std::size_t input, const char* name) {
        std::size_t fan_in = input;
        for (std::size_t i = 0; i < stack.size(); ++i) {
            const auto& l = stack[i];
            const std::string at = std::string(name) + "[" + std::to_string(i) + "]: ";
            require_shape(l.fan_in == fan_in && l.w_in.rows() == fan_in && l.w_in.cols() == l.size,
                          at + "w_in shape mismatch");
            require_shape(l.w_rec.empty() || (l.w_rec.rows() == l.size && l.w_rec.cols() == l.size),
                          at + "w_rec shape mismatch");
            require_shape(l.bias.size() == l.size && l.tau_m.size() == l.size && l.u0.size() == l.size,
                          at + "per-neuron vector length mismatch");
            require_shape(has_adaptation(l.kind) ? l.tau_adp.size() == l.size : l.tau_adp.empty(),
                          at + "tau_adp length mismatch");
            fan_in = l.size;
        }
        return fan_in;
    };
    const std::size_t n = net.spec.layers.size();
    require_shape(net.layers.size() == n, "network: layer count does not match spec");
    if (net.spec.bidirectional) {
        require_shape(net.reverse_layers.size() == n - 1, "network: reverse stack depth mismatch");
        std::vector<BasicLayer<Real>> fwd(net.layers.begin(), net.layers.end() - 1);
        const std::size_t top = check_stack(fwd, net.spec.input_size, "layers");
        require_shape(check_stack(net.reverse_layers, net.spec.input_size, "reverse_layers") == top,
                      "network: reverse stack width mismatch");
        check_stack({net.layers.back()}, top, "readout");
    } else {
        require_shape(net.reverse_layers.empty(), "network: unexpected reverse stack");
        check_stack(net.layers, net.spec.input_size, "layers");
    }
}

}  // namespace srnn
