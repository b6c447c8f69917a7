#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "srnn/neuron.hpp"

namespace srnn {
namespace {

TEST(DecayCoefficient, MatchesExponential) {
    EXPECT_NEAR(decay_coefficient(20.0, 1.0), 0.951229, 1e-6);
    EXPECT_NEAR(decay_coefficient(150.0, 1.0), 0.993356, 1e-6);
    EXPECT_NEAR(decay_coefficient(1e12, 1.0), 1.0, 1e-9);
}

TEST(DecayCoefficient, RejectsNonPositiveArguments) {
    EXPECT_THROW(decay_coefficient(0.0, 1.0), std::domain_error);
    EXPECT_THROW(decay_coefficient(-5.0, 1.0), std::domain_error);
    EXPECT_THROW(decay_coefficient(20.0, 0.0), std::domain_error);
}

TEST(LifStep, SubthresholdIntegration) {
    const auto s = lif_step<double>({0.5, false}, 1.0, {});
    EXPECT_NEAR(s.u, 0.525, 1e-12);
    EXPECT_FALSE(s.spike);
}

TEST(LifStep, ResetZeroesPotential) {
    const auto s = lif_step<double>({5.0, true}, 0.0, {});
    EXPECT_EQ(s.u, 0.0);
    EXPECT_FALSE(s.spike);
}

TEST(LifStep, StrongDriveFires) {
    const auto s = lif_step<double>({0.99, false}, 20.0, {});
    EXPECT_NEAR(s.u, 1.9405, 1e-12);
    EXPECT_TRUE(s.spike);
}

TEST(LifStep, FiresAtExactThreshold) {
    LifParams<double> p;
    p.tau_m = 1;  // full replacement: u = drive
    EXPECT_TRUE(lif_step<double>({0.0, false}, 1.0, p).spike);
}

TEST(AlifStep, MembraneIntegration) {
    const auto s = alif_step<double>({0, 0, false}, 1.0, AlifParams<double>{});
    EXPECT_NEAR(s.u, 0.048771, 1e-6);
    EXPECT_FALSE(s.spike);
}

TEST(AlifStep, ThresholdAdaptsAfterSpike) {
    AlifParams<double> p;
    p.tau_adp = 150;
    const auto s = alif_step<double>({0, 0, true}, 0.0, p);
    EXPECT_NEAR(s.eta, 0.006644, 1e-6);
    EXPECT_NEAR(alif_threshold(s, p), 1.011960, 1e-6);
    // soft reset subtracted the previous threshold b_0
    EXPECT_NEAR(s.u, -1.0, 1e-12);
}

TEST(AlifStep, RestIsFixedPoint) {
    const auto s = alif_step<double>({0, 0, false}, 0.0, AlifParams<double>{});
    EXPECT_EQ(s.u, 0.0);
    EXPECT_EQ(s.eta, 0.0);
    EXPECT_FALSE(s.spike);
}

TEST(ReluStep, Examples) {
    const AlifParams<double> p;
    auto s = relu_step<double>({0, 0, 0}, 1.0, p);
    EXPECT_NEAR(s.u, 0.048771, 1e-6);
    EXPECT_NEAR(s.out, 0.048771, 1e-6);
    s = relu_step<double>({-0.3, 0, 0}, 0.0, p);
    EXPECT_EQ(s.out, 0.0);
    s = relu_step<double>({0.5, 0, 0}, 0.0, p);
    EXPECT_NEAR(s.u, 0.475615, 1e-6);
    EXPECT_NEAR(s.out, 0.475615, 1e-6);
}

TEST(ReadoutStep, Examples) {
    const LifParams<double> p;
    EXPECT_NEAR(readout_step(0.0, 1.0, p), 0.05, 1e-12);
    EXPECT_NEAR(readout_step(1.0, 0.0, p), 0.95, 1e-12);
    LifParams<double> full;
    full.tau_m = 1;
    EXPECT_EQ(readout_step(0.7, 3.25, full), 3.25);
}

TEST(NeuronProperties, GeometricDecayWithoutInput) {
    LifState<double> lif{1.3, false};
    AlifState<double> alif{-0.8, 0, false};
    LifParams<double> lp;
    lp.theta = 1e9;
    const AlifParams<double> ap;
    const double a = std::exp(-1.0 / 20);
    for (int t = 1; t <= 100; ++t) {
        lif = lif_step(lif, 0.0, lp);
        alif = alif_step(alif, 0.0, ap);
        EXPECT_NEAR(lif.u, 1.3 * std::pow(1 - 1.0 / 20, t), 1e-12);
        EXPECT_NEAR(alif.u, -0.8 * std::pow(a, t), 1e-12);
    }
}

TEST(NeuronProperties, AdaptiveThresholdApproachesCeiling) {
    AlifParams<double> p;
    p.tau_adp = 100;
    AlifState<double> s;
    double prev_theta = p.b_0;
    for (int t = 0; t < 1000; ++t) {
        s = alif_step(s, 1e6, p);
        ASSERT_TRUE(s.spike);
        const double theta = alif_threshold(s, p);
        ASSERT_GE(theta, p.b_0);
        ASSERT_GE(theta, prev_theta);
        prev_theta = theta;
    }
    EXPECT_LT(p.b_0 + p.beta - prev_theta, 1e-3);
}

TEST(NeuronProperties, SpikesAreBinaryAndEtaStaysInUnitInterval) {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> drive(-5, 40), eta0(0, 1), tau(1, 300);
    for (int trial = 0; trial < 200; ++trial) {
        AlifParams<double> p;
        p.tau_m = tau(gen);
        p.tau_adp = tau(gen);
        AlifState<double> s{0, eta0(gen), false};
        for (int t = 0; t < 50; ++t) {
            s = alif_step(s, drive(gen), p);
            ASSERT_GE(s.eta, 0.0);
            ASSERT_LE(s.eta, 1.0);
            ASSERT_GE(alif_threshold(s, p), p.b_0);
        }
    }
}

TEST(NeuronProperties, AlifWithoutAdaptationMatchesSubtractiveLif) {
    // alpha = 15/16 exactly on both sides
    LifParams<double> lp;
    lp.tau_m = 16;
    lp.reset = ResetMode::subtract_threshold;
    lp.theta = 1.0;
    const AlifCoefficients<double> ac{15.0 / 16.0, 0.9, 1.0, 0.0, 1.0};
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> drive(-2, 30);
    LifState<double> lif;
    AlifState<double> alif;
    int spikes = 0;
    for (int t = 0; t < 1000; ++t) {
        const double d = drive(gen);
        lif = lif_step(lif, d, lp);
        alif = alif_step(alif, d, ac);
        ASSERT_EQ(lif.spike, alif.spike) << "step " << t;
        ASSERT_EQ(lif.u, alif.u) << "step " << t;
        spikes += lif.spike;
    }
    EXPECT_GT(spikes, 10);
    EXPECT_LT(spikes, 990);
}

}  // namespace
}  // namespace srnn
