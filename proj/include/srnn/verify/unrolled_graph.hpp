#pragma once

// Reference gradients from an explicitly unrolled scalar computation graph.
//
// Every membrane update, every synaptic edge and every spike of the forward pass becomes
// a node with its local partial derivatives; a reverse sweep over the node list then
// accumulates adjoints edge by edge. Nothing here shares code with backward.hpp, so the
// two can be compared against each other.

#include <cmath>
#include <cstddef>
#include <vector>

#include "srnn/backward.hpp"
#include "srnn/loss.hpp"
#include "srnn/network.hpp"
#include "srnn/surrogate.hpp"

namespace srnn::verify {

class Tape {
public:
    using Id = std::size_t;

    Id constant(double v) { return push(v, {}); }
    Id leaf(double v) { return push(v, {}); }

    Id add(Id a, Id b) { return push(value(a) + value(b), {{a, 1.0}, {b, 1.0}}); }
    Id sub(Id a, Id b) { return push(value(a) - value(b), {{a, 1.0}, {b, -1.0}}); }
    Id mul(Id a, Id b) { return push(value(a) * value(b), {{a, value(b)}, {b, value(a)}}); }
    Id div(Id a, Id b) {
        const double vb = value(b);
        return push(value(a) / vb, {{a, 1.0 / vb}, {b, -value(a) / (vb * vb)}});
    }
    Id scale(Id a, double c) { return push(c * value(a), {{a, c}}); }
    Id exp(Id a) {
        const double e = std::exp(value(a));
        return push(e, {{a, e}});
    }
    Id log(Id a) { return push(std::log(value(a)), {{a, 1.0 / value(a)}}); }
    Id relu(Id a) { return push(value(a) > 0 ? value(a) : 0.0, {{a, value(a) > 0 ? 1.0 : 0.0}}); }
    // Heaviside forward; the surrogate stands in for its derivative in u and theta.
    Id spike(Id u, Id theta, const SurrogateKind& surrogate) {
        const double fp = surrogate_grad(surrogate, value(u), value(theta));
        return push(value(u) >= value(theta) ? 1.0 : 0.0, {{u, fp}, {theta, -fp}});
    }
    // Same value, no gradient path.
    Id detach(Id a) { return constant(value(a)); }

    double value(Id a) const { return nodes_[a].value; }
    std::size_t size() const { return nodes_.size(); }

    std::vector<double> adjoints(Id output) const {
        std::vector<double> adj(nodes_.size(), 0.0);
        adj[output] = 1.0;
        for (std::size_t i = output + 1; i-- > 0;)
            for (const auto& e : nodes_[i].edges) adj[e.parent] += e.partial * adj[i];
        return adj;
    }

private:
    struct Edge {
        Id parent;
        double partial;
    };
    struct Node {
        double value;
        std::vector<Edge> edges;
    };

    Id push(double v, std::vector<Edge> edges) {
        nodes_.push_back({v, std::move(edges)});
        return nodes_.size() - 1;
    }

    std::vector<Node> nodes_;
};

namespace detail {

struct LayerNodes {
    std::vector<Tape::Id> w_in, w_rec, bias, tau_m, tau_adp;
};

inline LayerNodes register_layer(Tape& tape, const Layer& l) {
    LayerNodes n;
    for (double v : l.w_in.data()) n.w_in.push_back(tape.leaf(v));
    for (double v : l.w_rec.data()) n.w_rec.push_back(tape.leaf(v));
    for (double v : l.bias) n.bias.push_back(tape.leaf(v));
    for (double v : l.tau_m) n.tau_m.push_back(tape.leaf(v));
    for (double v : l.tau_adp) n.tau_adp.push_back(tape.leaf(v));
    return n;
}

using Sequence = std::vector<std::vector<Tape::Id>>;  // [step][channel]

// Unrolls one stack; returns the per-step outputs of every layer.
inline std::vector<Sequence> unroll_stack(Tape& tape, const std::vector<Layer>& stack,
                                          const std::vector<LayerNodes>& params, const Sequence& input,
                                          const SurrogateKind& surrogate, std::vector<Sequence>* membranes) {
    const std::size_t steps = input.size();
    std::vector<Sequence> outputs;
    Sequence x = input;
    for (std::size_t li = 0; li < stack.size(); ++li) {
        const Layer& L = stack[li];
        const LayerNodes& P = params[li];
        const Tape::Id one = tape.constant(1.0);
        const Tape::Id dt = tape.constant(L.dt);
        const Tape::Id r_m = tape.constant(L.r_m);
        std::vector<Tape::Id> decay(L.size), adapt(L.size), k(L.size);
        for (std::size_t j = 0; j < L.size; ++j) {
            const Tape::Id ratio = tape.div(dt, P.tau_m[j]);
            k[j] = ratio;
            decay[j] = tape.exp(tape.scale(ratio, -1.0));
            if (has_adaptation(L.kind)) adapt[j] = tape.exp(tape.scale(tape.div(dt, P.tau_adp[j]), -1.0));
        }
        std::vector<Tape::Id> u(L.size), eta(L.size), out(L.size);
        for (std::size_t j = 0; j < L.size; ++j) {
            u[j] = tape.constant(L.u0[j]);
            eta[j] = tape.constant(0.0);
            out[j] = tape.constant(0.0);
        }
        Sequence layer_out(steps), layer_u(steps);
        for (std::size_t t = 0; t < steps; ++t) {
            std::vector<Tape::Id> next_u(L.size), next_eta(L.size), next_out(L.size);
            for (std::size_t j = 0; j < L.size; ++j) {
                Tape::Id drive = P.bias[j];
                for (std::size_t i = 0; i < L.fan_in; ++i)
                    drive = tape.add(drive, tape.mul(x[t][i], P.w_in[i * L.size + j]));
                if (L.recurrent())
                    for (std::size_t i = 0; i < L.size; ++i)
                        drive = tape.add(drive, tape.mul(out[i], P.w_rec[i * L.size + j]));
                const Tape::Id input_term = tape.mul(r_m, drive);
                switch (L.kind) {
                    case NeuronKind::lif: {
                        const Tape::Id s_prev = tape.detach(out[j]);
                        Tape::Id base = u[j];
                        if (L.reset == ResetMode::to_potential)
                            base = tape.add(tape.mul(u[j], tape.sub(one, s_prev)),
                                            tape.scale(s_prev, L.u_r));
                        Tape::Id v = tape.add(tape.mul(base, tape.sub(one, k[j])), tape.mul(input_term, k[j]));
                        if (L.reset == ResetMode::subtract_threshold) v = tape.sub(v, tape.scale(s_prev, L.theta));
                        next_u[j] = v;
                        next_out[j] = tape.spike(v, tape.constant(L.theta), surrogate);
                        break;
                    }
                    case NeuronKind::alif:
                    case NeuronKind::spiking_output: {
                        const Tape::Id theta_prev =
                            tape.detach(tape.add(tape.constant(L.b_0), tape.scale(eta[j], L.beta)));
                        const Tape::Id reset = tape.mul(theta_prev, tape.detach(out[j]));
                        const Tape::Id v = tape.sub(
                            tape.add(tape.mul(decay[j], u[j]), tape.mul(tape.sub(one, decay[j]), input_term)), reset);
                        const Tape::Id e =
                            tape.add(tape.mul(adapt[j], eta[j]), tape.mul(tape.sub(one, adapt[j]), out[j]));
                        const Tape::Id theta = tape.add(tape.constant(L.b_0), tape.scale(e, L.beta));
                        next_u[j] = v;
                        next_eta[j] = e;
                        next_out[j] = tape.spike(v, theta, surrogate);
                        break;
                    }
                    case NeuronKind::relu: {
                        const Tape::Id v =
                            tape.add(tape.mul(decay[j], u[j]), tape.mul(tape.sub(one, decay[j]), input_term));
                        const Tape::Id e =
                            tape.add(tape.mul(adapt[j], eta[j]), tape.mul(tape.sub(one, adapt[j]), out[j]));
                        next_u[j] = v;
                        next_eta[j] = e;
                        next_out[j] = tape.relu(tape.sub(v, tape.scale(e, L.beta)));
                        break;
                    }
                    case NeuronKind::readout: {
                        const Tape::Id v =
                            tape.add(tape.mul(u[j], tape.sub(one, k[j])), tape.mul(input_term, k[j]));
                        next_u[j] = v;
                        next_out[j] = v;
                        break;
                    }
                }
            }
            u = next_u;
            eta = next_eta;
            out = next_out;
            layer_out[t] = out;
            layer_u[t] = u;
        }
        outputs.push_back(layer_out);
        if (membranes) membranes->push_back(layer_u);
        x = layer_out;
    }
    return outputs;
}

inline Tape::Id log_softmax_at(Tape& tape, const std::vector<Tape::Id>& z, std::size_t k) {
    double m = tape.value(z[0]);
    for (auto id : z) m = std::max(m, tape.value(id));
    const Tape::Id shift = tape.constant(m);
    Tape::Id sum = tape.constant(0.0);
    for (auto id : z) sum = tape.add(sum, tape.exp(tape.sub(id, shift)));
    return tape.sub(tape.sub(z[k], shift), tape.log(sum));
}

inline std::vector<Tape::Id> softmax(Tape& tape, const std::vector<Tape::Id>& z) {
    double m = tape.value(z[0]);
    for (auto id : z) m = std::max(m, tape.value(id));
    const Tape::Id shift = tape.constant(m);
    std::vector<Tape::Id> e;
    Tape::Id sum = tape.constant(0.0);
    for (auto id : z) {
        e.push_back(tape.exp(tape.sub(id, shift)));
        sum = tape.add(sum, e.back());
    }
    for (auto& id : e) id = tape.div(id, sum);
    return e;
}

}  // namespace detail

struct NaiveResult {
    double loss = 0;
    GradientSet grads;
    std::size_t nodes = 0;
};

// Loss and gradients of one sample computed on the unrolled graph.
inline NaiveResult naive_gradients(const Network& net, const Matrix& input, const Target& target,
                                   const SurrogateKind& surrogate) {
    validate(net);
    Tape tape;
    std::vector<detail::LayerNodes> params, rev_params;
    for (const auto& l : net.layers) params.push_back(detail::register_layer(tape, l));
    for (const auto& l : net.reverse_layers) rev_params.push_back(detail::register_layer(tape, l));

    const std::size_t steps = input.rows();
    detail::Sequence x(steps);
    for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t i = 0; i < input.cols(); ++i) x[t].push_back(tape.constant(input(t, i)));

    std::vector<detail::Sequence> membranes;
    detail::Sequence out_spikes, out_u;
    if (!net.bidirectional()) {
        auto outs = detail::unroll_stack(tape, net.layers, params, x, surrogate, &membranes);
        out_spikes = outs.back();
        out_u = membranes.back();
    } else {
        std::vector<Layer> fwd(net.layers.begin(), net.layers.end() - 1);
        std::vector<detail::LayerNodes> fwd_p(params.begin(), params.end() - 1);
        detail::Sequence rx(x.rbegin(), x.rend());
        auto f = detail::unroll_stack(tape, fwd, fwd_p, x, surrogate, nullptr);
        auto b = detail::unroll_stack(tape, net.reverse_layers, rev_params, rx, surrogate, nullptr);
        detail::Sequence mean(steps);
        for (std::size_t t = 0; t < steps; ++t)
            for (std::size_t j = 0; j < f.back()[t].size(); ++j)
                mean[t].push_back(tape.scale(tape.add(f.back()[t][j], b.back()[steps - 1 - t][j]), 0.5));
        auto head = detail::unroll_stack(tape, {net.layers.back()}, {params.back()}, mean, surrogate, &membranes);
        out_spikes = head.back();
        out_u = membranes.back();
    }

    const std::size_t classes = net.output_layer().size;
    Tape::Id loss = tape.constant(0.0);
    if (target.streaming()) {
        for (std::size_t t = 0; t < steps; ++t)
            loss = tape.sub(loss, detail::log_softmax_at(tape, out_u[t], static_cast<std::size_t>(target.step_labels[t])));
    } else if (net.spec.decode == DecodeMode::spike_count) {
        std::vector<Tape::Id> counts(classes, tape.constant(0.0));
        for (std::size_t t = 0; t < steps; ++t)
            for (std::size_t c = 0; c < classes; ++c) counts[c] = tape.add(counts[c], out_spikes[t][c]);
        loss = tape.scale(detail::log_softmax_at(tape, counts, static_cast<std::size_t>(target.label)), -1.0);
    } else {
        Tape::Id acc = tape.constant(0.0);
        for (std::size_t t = 0; t < steps; ++t)
            acc = tape.add(acc, detail::softmax(tape, out_u[t])[static_cast<std::size_t>(target.label)]);
        loss = tape.scale(tape.log(tape.scale(acc, 1.0 / static_cast<double>(steps))), -1.0);
    }

    const auto adj = tape.adjoints(loss);
    NaiveResult r;
    r.loss = tape.value(loss);
    r.nodes = tape.size();
    r.grads = GradientSet::zeros_like(net);
    auto fill = [&](LayerGrad& g, const detail::LayerNodes& p) {
        for (std::size_t i = 0; i < p.w_in.size(); ++i) g.d_w_in.data()[i] = adj[p.w_in[i]];
        for (std::size_t i = 0; i < p.w_rec.size(); ++i) g.d_w_rec.data()[i] = adj[p.w_rec[i]];
        for (std::size_t i = 0; i < p.bias.size(); ++i) g.d_bias[i] = adj[p.bias[i]];
        for (std::size_t i = 0; i < p.tau_m.size(); ++i) g.d_tau_m[i] = adj[p.tau_m[i]];
        for (std::size_t i = 0; i < p.tau_adp.size(); ++i) g.d_tau_adp[i] = adj[p.tau_adp[i]];
    };
    for (std::size_t l = 0; l < params.size(); ++l) fill(r.grads.layers[l], params[l]);
    for (std::size_t l = 0; l < rev_params.size(); ++l) fill(r.grads.reverse_layers[l], rev_params[l]);
    return r;
}

}  // namespace srnn::verify
