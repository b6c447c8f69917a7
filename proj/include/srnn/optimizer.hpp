#pragma once

#include <cmath>
#include <string>
#include <variant>

#include "srnn/backward.hpp"
#include "srnn/error.hpp"
#include "srnn/network.hpp"

namespace srnn {

struct ConstantLr {};

// lr = base * factor^floor(epoch / every)
struct StepDecay {
    double factor = 0.5;
    int every = 50;
};

// lr falls linearly from base at epoch 0 to zero at `epochs`.
struct LinearToZero {
    int epochs = 100;
};

using LrSchedule = std::variant<ConstantLr, StepDecay, LinearToZero>;

inline double lr_at(const LrSchedule& schedule, double base_lr, int epoch) {
    if (epoch < 0) throw std::invalid_argument("lr_at: negative epoch");
    return std::visit(
        [&](const auto& s) -> double {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, ConstantLr>) {
                return base_lr;
            } else if constexpr (std::is_same_v<S, StepDecay>) {
                if (s.every <= 0) throw ConfigError("step decay needs every >= 1");
                return base_lr * std::pow(s.factor, epoch / s.every);
            } else {
                if (s.epochs <= 0) throw ConfigError("linear decay needs epochs >= 1");
                return base_lr * std::max(0.0, 1.0 - static_cast<double>(epoch) / s.epochs);
            }
        },
        schedule);
}

struct AdamState {
    GradientSet m;
    GradientSet v;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState for_network(const Network& net) {
        AdamState s;
        s.m = GradientSet::zeros_like(net);
        s.v = GradientSet::zeros_like(net);
        return s;
    }
};

// Bias-corrected Adam; time constants are clamped to [dt, 1e4 dt] afterwards.
inline void adam_step(Network& net, const GradientSet& grads, AdamState& state, double lr) {
    if (!(lr >= 0)) throw ConfigError("adam_step: learning rate must be non-negative");
    if (!grads.all_finite()) throw NumericError("adam_step: non-finite gradient");
    std::vector<std::span<const double>> g;
    std::vector<std::span<double>> m, v;
    grads.for_each([&](ParamGroup, std::span<const double> s) { g.push_back(s); });
    state.m.for_each([&](ParamGroup, std::span<double> s) { m.push_back(s); });
    state.v.for_each([&](ParamGroup, std::span<double> s) { v.push_back(s); });
    ++state.step;
    const double c1 = 1 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1 - std::pow(state.beta2, static_cast<double>(state.step));
    std::size_t k = 0;
    for_each_parameter(net, [&](ParamGroup group, std::span<double> p, Layer& layer) {
        require_shape(k < g.size() && g[k].size() == p.size() && m[k].size() == p.size(),
                      "adam_step: gradient does not match network");
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[k][i] = state.beta1 * m[k][i] + (1 - state.beta1) * g[k][i];
            v[k][i] = state.beta2 * v[k][i] + (1 - state.beta2) * g[k][i] * g[k][i];
            p[i] -= lr * (m[k][i] / c1) / (std::sqrt(v[k][i] / c2) + state.epsilon);
            if (group == ParamGroup::tau_m || group == ParamGroup::tau_adp) p[i] = detail::clamp_tau(p[i], layer.dt);
        }
        ++k;
    });
}

}  // namespace srnn
