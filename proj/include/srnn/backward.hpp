#pragma once

// Backpropagation through time over the fully unrolled sequence.
//
// Per neuron and step, with g the gradient arriving at the neuron's output and the
// primed quantities carried back from step t+1:
//   ALIF   du = g f'(u - theta) + a du'        dtheta = -g f'(u - theta)
//          deta = beta dtheta + rho deta'      g also receives (1 - rho) deta'
//   ReLU   same with f' replaced by the rectifier gate and theta by beta eta
//   LIF    du = g f'(u - theta) + (1 - k)(1 - s) du'
//   Readout du = (1 - k) du'
// where f' is the surrogate derivative. The reset terms (the (1 - s) factor of the LIF
// and the -theta s subtraction of the ALIF) are treated as constants.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "srnn/forward.hpp"
#include "srnn/loss.hpp"
#include "srnn/network.hpp"
#include "srnn/surrogate.hpp"

namespace srnn {

struct LayerGrad {
    Matrix d_w_in;
    Matrix d_w_rec;
    std::vector<double> d_bias;
    std::vector<double> d_tau_m;
    std::vector<double> d_tau_adp;

    friend bool operator==(const LayerGrad&, const LayerGrad&) = default;
};

enum class ParamGroup { w_in, w_rec, bias, tau_m, tau_adp };

inline const char* to_string(ParamGroup g) {
    constexpr const char* names[] = {"w_in", "w_rec", "bias", "tau_m", "tau_adp"};
    return names[static_cast<int>(g)];
}

struct GradientSet {
    std::vector<LayerGrad> layers;
    std::vector<LayerGrad> reverse_layers;

    static GradientSet zeros_like(const Network& net) {
        auto make = [](const Layer& l) {
            LayerGrad g;
            g.d_w_in = Matrix(l.w_in.rows(), l.w_in.cols());
            g.d_w_rec = Matrix(l.w_rec.rows(), l.w_rec.cols());
            g.d_bias.assign(l.bias.size(), 0.0);
            g.d_tau_m.assign(l.tau_m.size(), 0.0);
            g.d_tau_adp.assign(l.tau_adp.size(), 0.0);
            return g;
        };
        GradientSet gs;
        for (const auto& l : net.layers) gs.layers.push_back(make(l));
        for (const auto& l : net.reverse_layers) gs.reverse_layers.push_back(make(l));
        return gs;
    }

    // fn(ParamGroup, std::span<double>) over every array, in a fixed order.
    template <typename Fn>
    void for_each(Fn&& fn) {
        auto visit = [&](LayerGrad& g) {
            fn(ParamGroup::w_in, std::span<double>(g.d_w_in.data()));
            fn(ParamGroup::w_rec, std::span<double>(g.d_w_rec.data()));
            fn(ParamGroup::bias, std::span<double>(g.d_bias));
            fn(ParamGroup::tau_m, std::span<double>(g.d_tau_m));
            fn(ParamGroup::tau_adp, std::span<double>(g.d_tau_adp));
        };
        for (auto& g : layers) visit(g);
        for (auto& g : reverse_layers) visit(g);
    }

    template <typename Fn>
    void for_each(Fn&& fn) const {
        const_cast<GradientSet*>(this)->for_each(
            [&](ParamGroup p, std::span<double> v) { fn(p, std::span<const double>(v)); });
    }

    // Element-wise sum in a fixed order; shapes must agree.
    GradientSet& operator+=(const GradientSet& other) {
        std::vector<std::span<const double>> rhs;
        other.for_each([&](ParamGroup, std::span<const double> v) { rhs.push_back(v); });
        std::size_t k = 0;
        for_each([&](ParamGroup, std::span<double> v) {
            require_shape(k < rhs.size() && rhs[k].size() == v.size(), "GradientSet: shape mismatch");
            for (std::size_t i = 0; i < v.size(); ++i) v[i] += rhs[k][i];
            ++k;
        });
        return *this;
    }

    GradientSet& operator*=(double s) {
        for_each([&](ParamGroup, std::span<double> v) {
            for (double& x : v) x *= s;
        });
        return *this;
    }

    void zero(ParamGroup group) {
        for_each([&](ParamGroup p, std::span<double> v) {
            if (p == group) std::fill(v.begin(), v.end(), 0.0);
        });
    }

    bool all_finite() const {
        bool ok = true;
        for_each([&](ParamGroup, std::span<const double> v) {
            for (double x : v) ok = ok && std::isfinite(x);
        });
        return ok;
    }

    double max_abs() const {
        double m = 0;
        for_each([&](ParamGroup, std::span<const double> v) {
            for (double x : v) m = std::max(m, std::abs(x));
        });
        return m;
    }

    friend bool operator==(const GradientSet&, const GradientSet&) = default;
};

// Parameters of `net` visited in the same order as GradientSet::for_each.
template <typename Net, typename Fn>
void for_each_parameter(Net& net, Fn&& fn) {
    auto visit = [&](auto& l) {
        fn(ParamGroup::w_in, std::span(l.w_in.data()), l);
        fn(ParamGroup::w_rec, std::span(l.w_rec.data()), l);
        fn(ParamGroup::bias, std::span(l.bias), l);
        fn(ParamGroup::tau_m, std::span(l.tau_m), l);
        fn(ParamGroup::tau_adp, std::span(l.tau_adp), l);
    };
    for (auto& l : net.layers) visit(l);
    for (auto& l : net.reverse_layers) visit(l);
}

namespace detail {

struct StackGradientInput {
    const Matrix* d_u = nullptr;    // top layer membrane
    const Matrix* d_out = nullptr;  // top layer output
    bool reversed = false;          // row t of d_u/d_out belongs to stack step T-1-t
};

// Reverse sweep over one stack. `input` is the stack's input in the order the stack saw
// it. Writes dL/d(input) into d_input when given.
inline void backprop_stack(std::span<const Layer> stack, std::span<const LayerTrace> traces, const Matrix& input,
                           const StackGradientInput& ext, const SurrogateKind& surrogate, std::span<LayerGrad> grads,
                           Matrix* d_input) {
    const std::size_t depth = stack.size();
    const std::size_t steps = input.rows();
    if (d_input) *d_input = Matrix(steps, input.cols());

    struct Carry {
        std::vector<double> du, deta, dd, g_out, coef_a, coef_r, k;
    };
    std::vector<Carry> carry(depth);
    for (std::size_t l = 0; l < depth; ++l) {
        const Layer& L = stack[l];
        Carry& c = carry[l];
        c.du.assign(L.size, 0.0);
        c.deta.assign(L.size, 0.0);
        c.dd.assign(L.size, 0.0);
        c.g_out.assign(L.size, 0.0);
        c.coef_a.resize(L.size);
        c.coef_r.resize(L.size);
        c.k.resize(L.size);
        for (std::size_t j = 0; j < L.size; ++j) {
            c.k[j] = L.dt / L.tau_m[j];
            c.coef_a[j] = std::exp(-L.dt / L.tau_m[j]);
            c.coef_r[j] = has_adaptation(L.kind) ? std::exp(-L.dt / L.tau_adp[j]) : 0.0;
        }
    }

    std::vector<double> g(0), du(0), deta(0), dd(0);
    for (std::size_t step = steps; step-- > 0;) {
        for (std::size_t l = depth; l-- > 0;) {
            const Layer& L = stack[l];
            const LayerTrace& tr = traces[l];
            LayerGrad& G = grads[l];
            Carry& c = carry[l];
            const std::size_t n = L.size;
            std::span<const double> x = l == 0 ? input.row(step) : traces[l - 1].out.row(step);
            const bool top = l + 1 == depth;
            const std::size_t ext_row = ext.reversed ? steps - 1 - step : step;

            g.assign(c.g_out.begin(), c.g_out.end());
            std::fill(c.g_out.begin(), c.g_out.end(), 0.0);
            if (top && ext.d_out)
                for (std::size_t j = 0; j < n; ++j) g[j] += (*ext.d_out)(ext_row, j);
            if (L.recurrent())
                for (std::size_t i = 0; i < n; ++i) g[i] += dot<double>(L.w_rec.row(i), c.dd);

            du.assign(n, 0.0);
            deta.assign(n, 0.0);
            dd.assign(n, 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                const double u = tr.u(step, j);
                const double u_prev = step > 0 ? tr.u(step - 1, j) : L.u0[j];
                const double out_prev = step > 0 ? tr.out(step - 1, j) : 0.0;
                const double d = tr.drive(step, j);
                const double ext_u = top && ext.d_u ? (*ext.d_u)(ext_row, j) : 0.0;
                const double tau = L.tau_m[j];
                switch (L.kind) {
                    case NeuronKind::lif: {
                        const double k = c.k[j];
                        const double fp = surrogate_grad(surrogate, u, L.theta);
                        const double s = tr.out(step, j);
                        const double keep = L.reset == ResetMode::to_potential ? (1 - k) * (1 - s) : (1 - k);
                        du[j] = g[j] * fp + ext_u + keep * c.du[j];
                        dd[j] = du[j] * L.r_m * k;
                        const double reset_prev = L.reset == ResetMode::to_potential
                                                      ? u_prev * (1 - out_prev) + L.u_r * out_prev
                                                      : u_prev;
                        G.d_tau_m[j] += du[j] * (reset_prev - L.r_m * d) * L.dt / (tau * tau);
                        break;
                    }
                    case NeuronKind::alif:
                    case NeuronKind::spiking_output:
                    case NeuronKind::relu: {
                        const double a = c.coef_a[j], r = c.coef_r[j];
                        const double eta = tr.eta(step, j);
                        const double eta_prev = step > 0 ? tr.eta(step - 1, j) : 0.0;
                        // the output at this step feeds eta at the next one
                        const double g_total = g[j] + (1 - r) * c.deta[j];
                        double d_theta;
                        if (L.kind == NeuronKind::relu) {
                            const double gate = u - L.beta * eta > 0 ? 1.0 : 0.0;
                            du[j] = g_total * gate + ext_u + a * c.du[j];
                            d_theta = -g_total * gate;  // w.r.t. the offset beta*eta
                        } else {
                            const double fp = surrogate_grad(surrogate, u, L.b_0 + L.beta * eta);
                            du[j] = g_total * fp + ext_u + a * c.du[j];
                            d_theta = -g_total * fp;
                        }
                        deta[j] = L.beta * d_theta + r * c.deta[j];
                        dd[j] = du[j] * (1 - a) * L.r_m;
                        G.d_tau_m[j] += du[j] * (u_prev - L.r_m * d) * a * L.dt / (tau * tau);
                        const double ta = L.tau_adp[j];
                        G.d_tau_adp[j] += deta[j] * (eta_prev - out_prev) * r * L.dt / (ta * ta);
                        break;
                    }
                    case NeuronKind::readout: {
                        const double k = c.k[j];
                        du[j] = ext_u + (1 - k) * c.du[j];
                        dd[j] = du[j] * L.r_m * k;
                        G.d_tau_m[j] += du[j] * (u_prev - L.r_m * d) * L.dt / (tau * tau);
                        break;
                    }
                }
            }

            for (std::size_t j = 0; j < n; ++j) G.d_bias[j] += dd[j];
            for (std::size_t i = 0; i < L.fan_in; ++i)
                if (x[i] != 0) axpy<double>(x[i], dd, G.d_w_in.row(i));
            if (L.recurrent() && step > 0) {
                std::span<const double> prev = tr.out.row(step - 1);
                for (std::size_t i = 0; i < n; ++i)
                    if (prev[i] != 0) axpy<double>(prev[i], dd, G.d_w_rec.row(i));
            }
            if (l > 0) {
                auto& below = carry[l - 1].g_out;
                for (std::size_t i = 0; i < L.fan_in; ++i) below[i] = dot<double>(L.w_in.row(i), dd);
            } else if (d_input) {
                for (std::size_t i = 0; i < L.fan_in; ++i) (*d_input)(step, i) = dot<double>(L.w_in.row(i), dd);
            }
            c.du.swap(du);
            c.deta.swap(deta);
            c.dd.swap(dd);
        }
    }
}

}  // namespace detail

// Gradient of the sample loss with respect to every parameter, with the surrogate
// standing in for dS/du at each spike.
inline GradientSet backward(const Network& net, const ForwardTrace& trace, const Target& target,
                            const SurrogateKind& surrogate) {
    require_shape(trace.layers.size() == net.layers.size() && trace.reverse_layers.size() == net.reverse_layers.size(),
                  "backward: trace was not produced by this network");
    for (std::size_t l = 0; l < net.layers.size(); ++l)
        require_shape(trace.layers[l].u.cols() == net.layers[l].size && trace.layers[l].steps() == trace.steps(),
                      "backward: trace layer " + std::to_string(l) + " does not match the network");
    GradientSet grads = GradientSet::zeros_like(net);
    const OutputGradient out = output_gradient(net, trace, target);
    if (!net.bidirectional()) {
        detail::backprop_stack(net.layers, trace.layers, trace.input, {&out.d_u, &out.d_out, false}, surrogate,
                               grads.layers, nullptr);
        return grads;
    }
    const std::size_t hidden = net.layers.size() - 1;
    Matrix d_head;
    detail::backprop_stack(std::span<const Layer>(&net.layers.back(), 1),
                           std::span<const LayerTrace>(&trace.layers.back(), 1), trace.head_input,
                           {&out.d_u, &out.d_out, false}, surrogate, std::span<LayerGrad>(&grads.layers.back(), 1),
                           &d_head);
    for (double& v : d_head.data()) v *= 0.5;
    detail::backprop_stack(std::span<const Layer>(net.layers.data(), hidden),
                           std::span<const LayerTrace>(trace.layers.data(), hidden), trace.input,
                           {nullptr, &d_head, false}, surrogate, std::span<LayerGrad>(grads.layers.data(), hidden),
                           nullptr);
    Matrix reversed_input(trace.input.rows(), trace.input.cols());
    for (std::size_t t = 0; t < trace.input.rows(); ++t) {
        auto src = trace.input.row(trace.input.rows() - 1 - t);
        std::copy(src.begin(), src.end(), reversed_input.row(t).begin());
    }
    detail::backprop_stack(net.reverse_layers, trace.reverse_layers, reversed_input, {nullptr, &d_head, true},
                           surrogate, grads.reverse_layers, nullptr);
    return grads;
}

}  // namespace srnn
