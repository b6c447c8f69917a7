#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "srnn/surrogate.hpp"

namespace srnn {
namespace {

const SurrogateKind kAll[] = {MultiGaussian{}, GaussianSurrogate{}, LinearSurrogate{}, SLayerSurrogate{}};

TEST(MultiGaussian, ValueAtThreshold) {
    EXPECT_NEAR(mg_grad(1.0, 1.0, 0.15, 6, 0.5), 0.878223, 1e-6);
}

TEST(MultiGaussian, NegativeLobes) {
    EXPECT_NEAR(mg_grad(3.0, 0.0, 0.15, 6, 0.5), -0.0242, 1e-4);
    for (double x = 3.0; x <= 10.0; x += 0.25) {
        EXPECT_LT(mg_grad(x, 0.0, 0.15, 6, 0.5), 0.0);
        EXPECT_LT(mg_grad(-x, 0.0, 0.15, 6, 0.5), 0.0);
    }
}

TEST(MultiGaussian, SignChangesOncePerSide) {
    int changes = 0;
    double prev = mg_grad(-5.0, 0.0, 0.15, 6, 0.5);
    for (int i = 1; i <= 10000; ++i) {
        const double v = mg_grad(-5.0 + i * 1e-3, 0.0, 0.15, 6, 0.5);
        if ((v < 0) != (prev < 0)) ++changes;
        prev = v;
    }
    EXPECT_EQ(changes, 2);
}

TEST(MultiGaussian, IntegratesToOneMinusH) {
    // composite Simpson on [-25, 25] (50 sigma)
    const int n = 200000;
    const double a = -25, b = 25, h = (b - a) / n;
    double sum = mg_grad(a, 0, 0.15, 6, 0.5) + mg_grad(b, 0, 0.15, 6, 0.5);
    for (int i = 1; i < n; ++i) sum += (i % 2 ? 4 : 2) * mg_grad(a + i * h, 0, 0.15, 6, 0.5);
    EXPECT_NEAR(sum * h / 3, 0.85, 1e-3);
}

TEST(LinearSurrogate, Examples) {
    EXPECT_DOUBLE_EQ(linear_grad(1.0, 1.0, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(linear_grad(2.0, 1.0, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(linear_grad(0.0, 1.0, 1.0), 0.0);
    EXPECT_NEAR(linear_grad(1.25, 1.0, 1.0), 0.75, 1e-12);
}

TEST(SLayerSurrogate, Examples) {
    EXPECT_DOUBLE_EQ(slayer_grad(1.0, 1.0, 5.0), 1.0);
    EXPECT_NEAR(slayer_grad(1.2, 1.0, 5.0), 0.367879, 1e-6);
    EXPECT_DOUBLE_EQ(slayer_grad(0.8, 1.0, 5.0), slayer_grad(1.2, 1.0, 5.0));
}

TEST(GaussianSurrogate, Examples) {
    EXPECT_NEAR(gaussian_grad(1.0, 1.0, 0.5), 0.797885, 1e-6);
    EXPECT_NEAR(gaussian_grad(1.5, 1.0, 0.5), 0.483941, 1e-6);
    for (double x = -10; x <= 10; x += 0.5) EXPECT_GT(gaussian_grad(x, 0.0, 0.5), 0.0);
}

TEST(SurrogateDispatch, RoutesToVariant) {
    EXPECT_DOUBLE_EQ(surrogate_grad(MultiGaussian{}, 0.3, 1.0), mg_grad(0.3, 1.0, 0.15, 6, 0.5));
    EXPECT_DOUBLE_EQ(surrogate_grad(GaussianSurrogate{}, 0.3, 1.0), gaussian_grad(0.3, 1.0, 0.5));
    EXPECT_DOUBLE_EQ(surrogate_grad(LinearSurrogate{}, 0.3, 1.0), linear_grad(0.3, 1.0, 1.0));
    EXPECT_DOUBLE_EQ(surrogate_grad(SLayerSurrogate{}, 0.3, 1.0), slayer_grad(0.3, 1.0, 5.0));
    EXPECT_DOUBLE_EQ(surrogate_grad(LinearSurrogate{0.5}, 2.0, 1.0), 0.5);
}

TEST(SurrogateProperties, EvenAndPeakedAtThreshold) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> dist(-6, 6);
    for (const auto& kind : kAll) {
        const double peak = surrogate_grad(kind, 0.0, 0.0);
        for (int i = 0; i < 1000; ++i) {
            const double x = dist(gen);
            EXPECT_NEAR(surrogate_grad(kind, x, 0.0), surrogate_grad(kind, -x, 0.0), 1e-12);
            EXPECT_LE(surrogate_grad(kind, x, 0.0), peak);
        }
    }
}

TEST(SurrogateProperties, OnlyMultiGaussianGoesNegative) {
    for (const auto& kind : kAll) {
        double lowest = 0;
        for (double x = -10; x <= 10; x += 1e-2) lowest = std::min(lowest, surrogate_grad(kind, x, 0.0));
        if (std::holds_alternative<MultiGaussian>(kind))
            EXPECT_LT(lowest, 0.0);
        else
            EXPECT_GE(lowest, 0.0);
    }
}

TEST(SurrogateValidation, RejectsBadParameters) {
    EXPECT_THROW(validate(SurrogateKind{MultiGaussian{0.15, 1.0, 0.5}}), std::invalid_argument);
    EXPECT_THROW(validate(SurrogateKind{MultiGaussian{0.15, 6, -1}}), std::invalid_argument);
    EXPECT_THROW(validate(SurrogateKind{LinearSurrogate{0}}), std::invalid_argument);
    EXPECT_NO_THROW(validate(SurrogateKind{SLayerSurrogate{}}));
}

}  // namespace
}  // namespace srnn
