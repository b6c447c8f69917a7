#pragma once

#include <string>
#include <vector>

#include "srnn/error.hpp"
#include "srnn/forward.hpp"
#include "srnn/network.hpp"

namespace srnn {

enum class ArchKind { dense, vanilla_rnn, gru, lstm, lif, alif, readout_lif };

inline std::string to_string(ArchKind k) {
    constexpr const char* names[] = {"Dense", "VanillaRNN", "GRU", "LSTM", "LIF", "ALIF", "ReadoutLIF"};
    return names[static_cast<int>(k)];
}

inline bool is_snn(ArchKind k) { return k == ArchKind::lif || k == ArchKind::alif || k == ArchKind::readout_lif; }

struct ArchLayer {
    ArchKind kind = ArchKind::alif;
    std::size_t fan_in = 0;
    std::size_t size = 0;
    bool recurrent = false;
    unsigned directions = 1;  // 2 for a bidirectional pair with independent weights

    std::size_t output_width() const { return size * directions; }
    friend bool operator==(const ArchLayer&, const ArchLayer&) = default;
};

struct ArchDescription {
    std::size_t input_size = 0;
    std::vector<ArchLayer> layers;

    friend bool operator==(const ArchDescription&, const ArchDescription&) = default;
};

inline void validate(const ArchDescription& arch) {
    if (arch.layers.empty()) throw ConfigError("architecture has no layers");
    std::size_t width = arch.input_size;
    for (std::size_t l = 0; l < arch.layers.size(); ++l) {
        const ArchLayer& a = arch.layers[l];
        const std::string where = "architecture layer " + std::to_string(l) + " (" + to_string(a.kind) + "): ";
        if (a.size == 0) throw ConfigError(where + "size must be positive");
        if (a.directions != 1 && a.directions != 2) throw ConfigError(where + "directions must be 1 or 2");
        // below a bidirectional pair a layer either sees both directions concatenated or,
        // for independent stacks and mean-merged readouts, one direction's width
        const bool per_direction = l > 0 && arch.layers[l - 1].directions == 2 && a.fan_in == arch.layers[l - 1].size;
        if (a.fan_in != width && !per_direction)
            throw ConfigError(where + "fan_in " + std::to_string(a.fan_in) + " does not match the width " +
                              std::to_string(width) + " below it");
        width = a.output_width();
    }
}

// Synapses feeding one layer (all directions).
inline std::size_t synapse_count(const ArchLayer& a) {
    return a.directions * (a.fan_in * a.size + (a.recurrent ? a.size * a.size : 0));
}

inline std::size_t synapse_count(const ArchDescription& arch) {
    std::size_t n = 0;
    for (const auto& a : arch.layers) n += synapse_count(a);
    return n;
}

struct StepCost {
    double mac = 0;
    double ac = 0;
};

// Per-neuron multiplies of the spiking units: ALIF decays its membrane and its threshold
// and recomposes the threshold; LIF and the readout only decay the membrane. Synaptic
// events are accumulates, fired at rate `fr`.
inline StepCost snn_cost_per_step(const ArchDescription& arch, double fr) {
    validate(arch);
    if (!(fr >= 0 && fr <= 1)) throw ConfigError("firing rate must lie in [0, 1]");
    StepCost c;
    for (const auto& a : arch.layers) {
        if (!is_snn(a.kind)) throw ConfigError("snn_cost_per_step: " + to_string(a.kind) + " is not a spiking layer");
        const double per_neuron = a.kind == ArchKind::alif ? 3.0 : 1.0;
        c.mac += per_neuron * static_cast<double>(a.size * a.directions);
        c.ac += fr * static_cast<double>(synapse_count(a));
    }
    return c;
}

inline double ann_layer_mac(const ArchLayer& a) {
    const double in = static_cast<double>(a.fan_in), n = static_cast<double>(a.size);
    double mac = 0;
    switch (a.kind) {
        case ArchKind::dense: mac = in * n; break;
        case ArchKind::vanilla_rnn: mac = (in + n) * n; break;
        case ArchKind::gru: mac = 3 * (in + n) * n + 3 * n; break;
        case ArchKind::lstm: mac = 4 * (in + n) * n + 4 * n; break;
        default: throw ConfigError("ann_cost_per_step: " + to_string(a.kind) + " is not a conventional layer");
    }
    return mac * a.directions;
}

inline double ann_cost_per_step(const ArchDescription& arch) {
    validate(arch);
    double mac = 0;
    for (const auto& a : arch.layers) mac += ann_layer_mac(a);
    return mac;
}

// Mixed architectures: conventional layers cost MACs only, spiking layers as above.
inline StepCost cost_per_step(const ArchDescription& arch, double fr) {
    validate(arch);
    if (!(fr >= 0 && fr <= 1)) throw ConfigError("firing rate must lie in [0, 1]");
    StepCost total;
    for (const auto& a : arch.layers) {
        if (is_snn(a.kind)) {
            ArchDescription one{a.fan_in, {a}};
            const StepCost c = snn_cost_per_step(one, fr);
            total.mac += c.mac;
            total.ac += c.ac;
        } else {
            total.mac += ann_layer_mac(a);
        }
    }
    return total;
}

inline constexpr double kMacEnergyPj = 3.1;
inline constexpr double kAcEnergyPj = 0.1;

inline double energy_per_step(double mac, double ac) {
    if (!(mac >= 0) || !(ac >= 0)) throw std::invalid_argument("energy_per_step: negative operation count");
    return kMacEnergyPj * mac + kAcEnergyPj * ac;
}

struct FiringStats {
    std::vector<std::vector<double>> per_neuron;  // one entry per spiking layer, forward stack first
    double spikes = 0;
    double neuron_steps = 0;

    double mean() const { return neuron_steps > 0 ? spikes / neuron_steps : 0.0; }
};

inline FiringStats firing_rate(const Network& net, const ForwardTrace& trace) {
    FiringStats f;
    const std::size_t steps = trace.steps();
    auto visit = [&](const std::vector<Layer>& stack, const std::vector<LayerTrace>& traces) {
        for (std::size_t l = 0; l < traces.size(); ++l) {
            if (!is_spiking(stack[l].kind)) continue;
            std::vector<double> rate(stack[l].size, 0.0);
            for (std::size_t t = 0; t < steps; ++t)
                for (std::size_t j = 0; j < rate.size(); ++j) rate[j] += traces[l].out(t, j);
            for (double& r : rate) {
                f.spikes += r;
                r = steps ? r / static_cast<double>(steps) : 0.0;
            }
            f.neuron_steps += static_cast<double>(steps * stack[l].size);
            f.per_neuron.push_back(std::move(rate));
        }
    };
    visit(net.layers, trace.layers);
    visit(net.reverse_layers, trace.reverse_layers);
    return f;
}

// Synaptic targets of each neuron in layer `l` of a stack: its own recurrent row plus the
// layer above (for a bidirectional top layer, the readout).
inline std::size_t fan_out(const Network& net, bool reverse, std::size_t l) {
    const auto& stack = reverse ? net.reverse_layers : net.layers;
    const std::size_t top = net.bidirectional() ? net.layers.size() - 1 : stack.size();
    std::size_t n = stack[l].recurrent() ? stack[l].size : 0;
    if (l + 1 < top)
        n += stack[l + 1].size;
    else if (l + 1 == top && net.bidirectional())
        n += net.layers.back().size;
    return n;
}

struct SopCount {
    double total = 0;
    double per_step = 0;
};

// Each spike emitted by the network reaches every synaptic target of its neuron.
inline SopCount sop_count(const Network& net, const ForwardTrace& trace) {
    SopCount c;
    auto visit = [&](bool reverse) {
        const auto& stack = reverse ? net.reverse_layers : net.layers;
        const auto& traces = reverse ? trace.reverse_layers : trace.layers;
        for (std::size_t l = 0; l < traces.size(); ++l) {
            if (!is_spiking(stack[l].kind)) continue;
            double spikes = 0;
            for (double s : traces[l].out.data()) spikes += s;
            c.total += spikes * static_cast<double>(fan_out(net, reverse, l));
        }
    };
    visit(false);
    visit(true);
    c.per_step = trace.steps() ? c.total / static_cast<double>(trace.steps()) : 0.0;
    return c;
}

inline ArchKind arch_kind(NeuronKind k, bool recurrent) {
    switch (k) {
        case NeuronKind::lif: return ArchKind::lif;
        case NeuronKind::alif:
        case NeuronKind::spiking_output: return ArchKind::alif;
        case NeuronKind::readout: return ArchKind::readout_lif;
        case NeuronKind::relu: return recurrent ? ArchKind::vanilla_rnn : ArchKind::dense;
    }
    return ArchKind::dense;
}

inline ArchDescription arch_from_network(const Network& net) {
    ArchDescription arch;
    arch.input_size = net.spec.input_size;
    const std::size_t hidden = net.bidirectional() ? net.layers.size() - 1 : net.layers.size();
    const unsigned dirs = net.bidirectional() ? 2 : 1;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const Layer& layer = net.layers[l];
        ArchLayer a;
        a.kind = arch_kind(layer.kind, layer.recurrent());
        a.recurrent = layer.recurrent();
        a.size = layer.size;
        a.directions = l < hidden ? dirs : 1;
        a.fan_in = layer.fan_in;
        arch.layers.push_back(a);
    }
    return arch;
}

struct CostReport {
    double mac_per_step = 0;
    double ac_per_step = 0;
    double energy_per_step_pj = 0;
    double sops_total = 0;
    double sops_per_step = 0;
    double fr_mean = 0;
    std::size_t synapses = 0;
};

inline CostReport cost_report(const ArchDescription& arch, double fr, SopCount sops = {}) {
    const StepCost c = cost_per_step(arch, fr);
    CostReport r;
    r.mac_per_step = c.mac;
    r.ac_per_step = c.ac;
    r.energy_per_step_pj = energy_per_step(c.mac, c.ac);
    r.sops_total = sops.total;
    r.sops_per_step = sops.per_step;
    r.fr_mean = fr;
    r.synapses = synapse_count(arch);
    return r;
}

struct EfficiencyRatio {
    double energy_ratio = 1;
    double error_ratio = 1;
    double efficiency = 1;
};

// How many times more energy and error `a` incurs than `b`, and their product.
inline EfficiencyRatio efficiency_ratio(const CostReport& a, const CostReport& b, double err_a, double err_b) {
    if (!(b.energy_per_step_pj > 0) || !(err_b > 0)) throw std::invalid_argument("efficiency_ratio: zero reference");
    EfficiencyRatio r;
    r.energy_ratio = a.energy_per_step_pj / b.energy_per_step_pj;
    r.error_ratio = err_a / err_b;
    r.efficiency = r.energy_ratio * r.error_ratio;
    return r;
}

}  // namespace srnn
