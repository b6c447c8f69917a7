#pragma once

// Per-timestep state transitions for the neuron models used in the network:
//   LIF      reset to u_r when the previous step spiked, then leak with 1 - dt/tau_m
//   ALIF     exponential leak alpha = exp(-dt/tau_m), soft reset by the previous threshold,
//            threshold b_0 + beta * eta where eta low-passes the spike train with rho
//   ReLU     ALIF membrane without spiking; emits max(0, u - beta * eta)
//   Readout  LIF membrane that never spikes or resets
// All functions are pure and evaluate one neuron.

#include <cmath>
#include <concepts>
#include <string>

#include "srnn/error.hpp"

namespace srnn {

template <std::floating_point Real>
Real decay_coefficient(Real tau, Real dt) {
    if (!(tau > 0) || !(dt > 0))
        throw std::domain_error("decay_coefficient: tau and dt must be positive (tau=" +
                                std::to_string(static_cast<double>(tau)) +
                                ", dt=" + std::to_string(static_cast<double>(dt)) + ")");
    return std::exp(-dt / tau);
}

enum class ResetMode {
    to_potential,       // u <- u(1 - s) + u_r s before the leak
    subtract_threshold  // u <- (leaked u) - theta s, the ALIF convention
};

template <std::floating_point Real = double>
struct LifParams {
    Real tau_m = 20;
    Real r_m = 1;
    Real u_r = 0;
    Real theta = 1;
    Real dt = 1;
    ResetMode reset = ResetMode::to_potential;
};

template <std::floating_point Real = double>
struct AlifParams {
    Real tau_m = 20;
    Real tau_adp = 150;
    Real b_0 = 1;
    Real beta = Real(1.8);
    Real r_m = 1;
    Real dt = 1;
};

template <std::floating_point Real = double>
struct LifState {
    Real u = 0;
    bool spike = false;  // spike emitted by the step that produced this state
};

template <std::floating_point Real = double>
struct AlifState {
    Real u = 0;
    Real eta = 0;
    bool spike = false;
};

template <std::floating_point Real = double>
struct ReluState {
    Real u = 0;
    Real eta = 0;
    Real out = 0;
};

// Precomputed per-neuron constants; the forward kernel evaluates the exponentials
// once per sequence instead of once per step.
template <std::floating_point Real = double>
struct AlifCoefficients {
    Real alpha;
    Real rho;
    Real b_0;
    Real beta;
    Real r_m;

    static AlifCoefficients from(const AlifParams<Real>& p) {
        return {decay_coefficient(p.tau_m, p.dt), decay_coefficient(p.tau_adp, p.dt), p.b_0, p.beta, p.r_m};
    }

    Real threshold(Real eta) const noexcept { return b_0 + beta * eta; }
};

template <std::floating_point Real>
LifState<Real> lif_step(LifState<Real> s, Real drive, const LifParams<Real>& p) {
    const Real k = p.dt / p.tau_m;
    const Real prev = s.spike ? Real(1) : Real(0);
    Real u;
    if (p.reset == ResetMode::to_potential) {
        const Real reset = s.u * (1 - prev) + p.u_r * prev;
        u = reset * (1 - k) + p.r_m * drive * k;
    } else {
        u = s.u * (1 - k) + p.r_m * drive * k - p.theta * prev;
    }
    return {u, u >= p.theta};
}

template <std::floating_point Real>
AlifState<Real> alif_step(AlifState<Real> s, Real drive, const AlifCoefficients<Real>& c) {
    const Real prev = s.spike ? Real(1) : Real(0);
    const Real theta_prev = c.threshold(s.eta);
    const Real u = c.alpha * s.u + (1 - c.alpha) * c.r_m * drive - theta_prev * prev;
    const Real eta = c.rho * s.eta + (1 - c.rho) * prev;
    return {u, eta, u >= c.threshold(eta)};
}

template <std::floating_point Real>
AlifState<Real> alif_step(AlifState<Real> s, Real drive, const AlifParams<Real>& p) {
    return alif_step(s, drive, AlifCoefficients<Real>::from(p));
}

template <std::floating_point Real>
Real alif_threshold(const AlifState<Real>& s, const AlifParams<Real>& p) {
    return p.b_0 + p.beta * s.eta;
}

// eta follows the previous activation the way ALIF's eta follows the previous spike,
// so tau_adp stays a live, differentiable parameter in non-spiking networks.
template <std::floating_point Real>
ReluState<Real> relu_step(ReluState<Real> s, Real drive, const AlifCoefficients<Real>& c) {
    const Real u = c.alpha * s.u + (1 - c.alpha) * c.r_m * drive;
    const Real eta = c.rho * s.eta + (1 - c.rho) * s.out;
    const Real pre = u - c.beta * eta;
    return {u, eta, pre > 0 ? pre : Real(0)};
}

template <std::floating_point Real>
ReluState<Real> relu_step(ReluState<Real> s, Real drive, const AlifParams<Real>& p) {
    return relu_step(s, drive, AlifCoefficients<Real>::from(p));
}

template <std::floating_point Real>
Real readout_step(Real u, Real drive, const LifParams<Real>& p) {
    const Real k = p.dt / p.tau_m;
    return u * (1 - k) + p.r_m * drive * k;
}

}  // namespace srnn
