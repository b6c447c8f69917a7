#pragma once

// Pseudo-derivatives dS/du substituted for the Heaviside derivative in the backward pass.
// Every function takes the membrane potential and the threshold and depends only on
// x = u - theta.

#include <cmath>
#include <concepts>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>

namespace srnn {

template <std::floating_point Real>
Real normal_pdf(Real x, Real mean, Real stddev) {
    const Real z = (x - mean) / stddev;
    return std::exp(Real(-0.5) * z * z) / (stddev * std::sqrt(2 * std::numbers::pi_v<Real>));
}

struct MultiGaussian {
    double h = 0.15;
    double s = 6.0;
    double sigma = 0.5;
};

struct GaussianSurrogate {
    double sigma = 0.5;
};

struct LinearSurrogate {
    double alpha = 1.0;
};

struct SLayerSurrogate {
    double alpha = 5.0;
};

using SurrogateKind = std::variant<MultiGaussian, GaussianSurrogate, LinearSurrogate, SLayerSurrogate>;

inline double mg_grad(double u, double theta, double h, double s, double sigma) {
    const double x = u - theta;
    return (1 + h) * normal_pdf(x, 0.0, sigma) - h * normal_pdf(x, sigma, s * sigma) -
           h * normal_pdf(x, -sigma, s * sigma);
}

inline double linear_grad(double u, double theta, double alpha) {
    const double v = 1 - alpha * std::abs(u - theta);
    return v > 0 ? v : 0.0;
}

inline double slayer_grad(double u, double theta, double alpha) {
    return std::exp(-alpha * std::abs(u - theta));
}

inline double gaussian_grad(double u, double theta, double sigma) {
    return normal_pdf(u - theta, 0.0, sigma);
}

inline double surrogate_grad(const SurrogateKind& kind, double u, double theta) {
    struct Visitor {
        double u, theta;
        double operator()(const MultiGaussian& k) const { return mg_grad(u, theta, k.h, k.s, k.sigma); }
        double operator()(const GaussianSurrogate& k) const { return gaussian_grad(u, theta, k.sigma); }
        double operator()(const LinearSurrogate& k) const { return linear_grad(u, theta, k.alpha); }
        double operator()(const SLayerSurrogate& k) const { return slayer_grad(u, theta, k.alpha); }
    };
    return std::visit(Visitor{u, theta}, kind);
}

inline void validate(const SurrogateKind& kind) {
    struct Visitor {
        void operator()(const MultiGaussian& k) const {
            if (!(k.h > 0 && k.sigma > 0)) throw std::invalid_argument("multi-gaussian: h and sigma must be positive");
            if (!(k.s > 1)) throw std::invalid_argument("multi-gaussian: s must exceed 1");
        }
        void operator()(const GaussianSurrogate& k) const {
            if (!(k.sigma > 0)) throw std::invalid_argument("gaussian surrogate: sigma must be positive");
        }
        void operator()(const LinearSurrogate& k) const {
            if (!(k.alpha > 0)) throw std::invalid_argument("linear surrogate: alpha must be positive");
        }
        void operator()(const SLayerSurrogate& k) const {
            if (!(k.alpha > 0)) throw std::invalid_argument("slayer surrogate: alpha must be positive");
        }
    };
    std::visit(Visitor{}, kind);
}

inline std::string surrogate_name(const SurrogateKind& kind) {
    constexpr const char* names[] = {"multi_gaussian", "gaussian", "linear", "slayer"};
    return names[kind.index()];
}

}  // namespace srnn
