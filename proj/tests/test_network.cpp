#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "srnn/forward.hpp"
#include "srnn/network.hpp"

namespace srnn {
namespace {

NetworkSpec small_spec(NeuronKind hidden = NeuronKind::alif, bool bidirectional = false) {
    NetworkSpec spec;
    spec.input_size = 3;
    LayerSpec h;
    h.size = 6;
    h.neuron = hidden;
    LayerSpec h2 = h;
    h2.size = 5;
    LayerSpec out;
    out.size = 4;
    out.neuron = NeuronKind::readout;
    out.recurrent = false;
    spec.layers = {h, h2, out};
    spec.decode = DecodeMode::membrane_softmax;
    spec.bidirectional = bidirectional;
    return spec;
}

Matrix random_input(std::size_t steps, std::size_t width, std::uint64_t seed, double scale = 3.0) {
    Rng rng(seed);
    Matrix x(steps, width);
    for (double& v : x.data()) v = rng.uniform(-scale, scale);
    return x;
}

TEST(InitNetwork, DeterministicForSeed) {
    const auto a = init_network(small_spec(), 42);
    const auto b = init_network(small_spec(), 42);
    const auto c = init_network(small_spec(), 43);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
}

TEST(InitNetwork, ShapesAndZeroBiases) {
    const auto net = init_network(small_spec(), 1);
    ASSERT_EQ(net.layers.size(), 3u);
    EXPECT_EQ(net.layers[0].w_in.rows(), 3u);
    EXPECT_EQ(net.layers[0].w_in.cols(), 6u);
    EXPECT_EQ(net.layers[1].w_in.rows(), 6u);
    EXPECT_EQ(net.layers[1].w_rec.rows(), 5u);
    EXPECT_TRUE(net.layers[2].w_rec.empty());
    EXPECT_TRUE(net.layers[2].tau_adp.empty());
    for (const auto& l : net.layers)
        for (double b : l.bias) EXPECT_EQ(b, 0.0);
    EXPECT_NO_THROW(validate(net));
}

TEST(InitNetwork, RecurrentWeightsAreOrthogonal) {
    NetworkSpec spec = small_spec();
    spec.layers[0].size = 40;
    const auto net = init_network(spec, 5);
    const Matrix& w = net.layers[0].w_rec;
    for (std::size_t i = 0; i < 40; ++i)
        for (std::size_t j = 0; j < 40; ++j) {
            double s = 0;
            for (std::size_t k = 0; k < 40; ++k) s += w(i, k) * w(j, k);
            EXPECT_NEAR(s, i == j ? 1.0 : 0.0, 1e-6);
        }
}

TEST(InitNetwork, XavierBounds) {
    const auto net = init_network(small_spec(), 9);
    const double a = std::sqrt(6.0 / (3 + 6));
    for (double v : net.layers[0].w_in.data()) {
        EXPECT_LE(std::abs(v), a);
    }
}

TEST(InitNetwork, TimeConstantSampleMean) {
    NetworkSpec spec;
    spec.input_size = 1;
    LayerSpec l;
    l.size = 10000;
    l.neuron = NeuronKind::spiking_output;
    l.recurrent = false;
    l.tau_m_init = {20, 5};
    spec.layers = {l};
    spec.decode = DecodeMode::spike_count;
    const auto net = init_network(spec, 2024);
    double mean = 0;
    for (double t : net.layers[0].tau_m) mean += t;
    mean /= 10000;
    EXPECT_GE(mean, 19.8);
    EXPECT_LE(mean, 20.2);
}

TEST(InitNetwork, TimeConstantsClampedToDt) {
    NetworkSpec spec = small_spec();
    spec.layers[0].tau_m_init = {1.0, 5.0};
    const auto net = init_network(spec, 3);
    for (double t : net.layers[0].tau_m) EXPECT_GE(t, 1.0);
}

TEST(InitNetwork, MembranesWithinThresholdOrZero) {
    auto net = init_network(small_spec(), 4);
    for (double u : net.layers[0].u0) {
        EXPECT_GE(u, 0.0);
        EXPECT_LE(u, 1.0);
    }
    NetworkSpec spec = small_spec();
    spec.zero_init_membrane = true;
    net = init_network(spec, 4);
    for (const auto& l : net.layers)
        for (double u : l.u0) EXPECT_EQ(u, 0.0);
}

TEST(InitNetwork, RejectsInvalidSpecs) {
    NetworkSpec spec = small_spec();
    spec.layers[1].size = 0;
    EXPECT_THROW(init_network(spec, 0), ConfigError);
    spec = small_spec();
    spec.decode = DecodeMode::spike_count;
    EXPECT_THROW(init_network(spec, 0), ConfigError);
    spec = small_spec();
    std::swap(spec.layers[0], spec.layers[2]);
    EXPECT_THROW(init_network(spec, 0), ConfigError);
    spec = small_spec();
    spec.layers[0].neuron = NeuronKind::lif;
    spec.layers[0].u_r = 2.0;
    EXPECT_THROW(init_network(spec, 0), ConfigError);
}

Network single_lif(double w_in, double w_rec, double tau = 20) {
    NetworkSpec spec;
    spec.input_size = 1;
    LayerSpec l;
    l.size = 1;
    l.neuron = NeuronKind::lif;
    l.recurrent = w_rec != 0;
    l.tau_m_init = {tau, 0};
    spec.layers = {l};
    spec.decode = DecodeMode::spike_count;
    spec.zero_init_membrane = true;
    auto net = init_network(spec, 0);
    net.layers[0].w_in(0, 0) = w_in;
    if (l.recurrent) net.layers[0].w_rec(0, 0) = w_rec;
    return net;
}

TEST(ForwardStep, ZeroWeightsGiveNoActivity) {
    NetworkSpec spec = small_spec(NeuronKind::lif);
    spec.zero_init_membrane = true;
    auto net = init_network(spec, 1);
    for (auto& l : net.layers) {
        l.w_in.fill(0);
        l.w_rec.fill(0);
    }
    auto state = initial_state(net);
    const std::vector<double> x{5, -2, 7};
    for (int t = 0; t < 5; ++t) {
        const auto outs = forward_step<double>(net, x, state);
        for (const auto& o : outs)
            for (double v : o) EXPECT_EQ(v, 0.0);
    }
}

TEST(ForwardStep, InputPulseFiresImmediately) {
    const auto net = single_lif(1.0, 0.0);
    Matrix x(3, 1);
    x(0, 0) = 20;
    const auto trace = forward_sequence(net, x);
    EXPECT_NEAR(trace.layers[0].u(0, 0), 1.0, 1e-12);
    EXPECT_EQ(trace.layers[0].out(0, 0), 1.0);
    EXPECT_EQ(trace.layers[0].out(1, 0), 0.0);
}

TEST(ForwardStep, SelfExcitationSustainsFiring) {
    // w = theta * tau_m / R_m lifts the reset membrane exactly back to threshold
    const auto net = single_lif(1.0, 20.0);
    Matrix x(10, 1);
    x(0, 0) = 20;
    const auto trace = forward_sequence(net, x);
    for (std::size_t t = 0; t < 10; ++t) EXPECT_EQ(trace.layers[0].out(t, 0), 1.0) << t;
}

TEST(ForwardStep, RejectsWrongInputLength) {
    const auto net = init_network(small_spec(), 1);
    auto state = initial_state(net);
    const std::vector<double> x{1, 2};
    EXPECT_THROW(forward_step<double>(net, x, state), ShapeError);
    EXPECT_THROW(forward_sequence(net, Matrix(4, 2)), ShapeError);
}

TEST(ForwardSequence, EmptyInputGivesEmptyTrace) {
    const auto net = init_network(small_spec(), 1);
    const auto trace = forward_sequence(net, Matrix(0, 3));
    EXPECT_EQ(trace.steps(), 0u);
    ASSERT_EQ(trace.layers.size(), 3u);
    EXPECT_EQ(trace.layers[0].u.rows(), 0u);
}

TEST(ForwardSequence, ConstantInputConvergesToFixedPoint) {
    const auto net = single_lif(1.0, 0.0, 10.0);
    Matrix x(200, 1, 0.8);
    const auto trace = forward_sequence(net, x);
    EXPECT_NEAR(trace.layers[0].u(199, 0), 0.8, 1e-6);
    for (std::size_t t = 0; t < 200; ++t) EXPECT_EQ(trace.layers[0].out(t, 0), 0.0);
}

TEST(ForwardSequence, MatchesStepwiseEvaluation) {
    auto spec = small_spec();
    spec.layers[2].neuron = NeuronKind::spiking_output;
    spec.decode = DecodeMode::spike_count;
    const auto net = init_network(spec, 8);
    const Matrix x = random_input(30, 3, 1);
    const auto trace = forward_sequence(net, x);
    auto state = initial_state(net);
    for (std::size_t t = 0; t < 30; ++t) {
        const auto outs = forward_step<double>(net, x.row(t), state);
        for (std::size_t l = 0; l < outs.size(); ++l)
            for (std::size_t j = 0; j < outs[l].size(); ++j) ASSERT_EQ(outs[l][j], trace.layers[l].out(t, j));
    }
}

TEST(ForwardSequence, ReplayReproducesTrace) {
    for (auto kind : {NeuronKind::lif, NeuronKind::alif, NeuronKind::relu}) {
        const auto net = init_network(small_spec(kind), 12);
        const Matrix x = random_input(40, 3, 2);
        const auto a = forward_sequence(net, x);
        const auto b = forward_sequence(net, x);
        for (std::size_t l = 0; l < a.layers.size(); ++l) {
            EXPECT_EQ(a.layers[l].u, b.layers[l].u);
            EXPECT_EQ(a.layers[l].out, b.layers[l].out);
        }
        // feed the recorded drives back through the scalar step functions
        const Layer& L = net.layers[0];
        const auto& tr = a.layers[0];
        for (std::size_t j = 0; j < L.size; ++j) {
            double u = L.u0[j], eta = 0, out = 0;
            for (std::size_t t = 0; t < 40; ++t) {
                const double d = tr.drive(t, j);
                if (kind == NeuronKind::lif) {
                    const auto s = lif_step<double>({u, out != 0}, d, {L.tau_m[j], L.r_m, L.u_r, L.theta, L.dt});
                    u = s.u;
                    out = s.spike;
                } else if (kind == NeuronKind::alif) {
                    const auto s = alif_step<double>({u, eta, out != 0}, d,
                                                     AlifParams<double>{L.tau_m[j], L.tau_adp[j], L.b_0, L.beta, L.r_m, L.dt});
                    u = s.u;
                    eta = s.eta;
                    out = s.spike;
                } else {
                    const auto s = relu_step<double>({u, eta, out}, d,
                                                     AlifParams<double>{L.tau_m[j], L.tau_adp[j], L.b_0, L.beta, L.r_m, L.dt});
                    u = s.u;
                    eta = s.eta;
                    out = s.out;
                }
                ASSERT_EQ(u, tr.u(t, j));
                ASSERT_EQ(out, tr.out(t, j));
            }
        }
    }
}

TEST(ForwardSequence, CausalInTime) {
    const auto net = init_network(small_spec(NeuronKind::alif), 21);
    Matrix x = random_input(30, 3, 4);
    const auto a = forward_sequence(net, x);
    x(17, 1) += 5.0;
    const auto b = forward_sequence(net, x);
    for (std::size_t l = 0; l < a.layers.size(); ++l)
        for (std::size_t t = 0; t < 17; ++t)
            for (std::size_t j = 0; j < a.layers[l].u.cols(); ++j) ASSERT_EQ(a.layers[l].u(t, j), b.layers[l].u(t, j));
}

TEST(ForwardSequence, UnreachableThresholdSilencesNetwork) {
    NetworkSpec spec = small_spec(NeuronKind::lif);
    for (auto& l : spec.layers) l.theta = 1e9;
    const auto net = init_network(spec, 6);
    const auto trace = forward_sequence(net, random_input(50, 3, 5));
    for (std::size_t l = 0; l < 2; ++l)
        for (double s : trace.layers[l].out.data()) EXPECT_EQ(s, 0.0);
    // readout sees zero drive and only leaks
    const Layer& R = net.layers[2];
    for (std::size_t j = 0; j < R.size; ++j) {
        double u = R.u0[j];
        for (std::size_t t = 0; t < 50; ++t) {
            u *= 1 - R.dt / R.tau_m[j];
            EXPECT_NEAR(trace.layers[2].u(t, j), u, 1e-12);
        }
    }
}

Network mirrored(const NetworkSpec& spec, std::uint64_t seed) {
    auto net = init_network(spec, seed);
    for (std::size_t l = 0; l + 1 < net.layers.size(); ++l) net.reverse_layers[l] = net.layers[l];
    return net;
}

TEST(ForwardBidirectional, PalindromeGivesMatchingTraces) {
    const auto net = mirrored(small_spec(NeuronKind::alif, true), 3);
    Matrix x = random_input(21, 3, 6);
    for (std::size_t t = 0; t < 10; ++t)
        for (std::size_t i = 0; i < 3; ++i) x(20 - t, i) = x(t, i);
    const auto trace = forward_bidirectional(net, x);
    for (std::size_t l = 0; l < 2; ++l) {
        EXPECT_EQ(trace.layers[l].u, trace.reverse_layers[l].u);
        EXPECT_EQ(trace.layers[l].out, trace.reverse_layers[l].out);
    }
}

TEST(ForwardBidirectional, SilentReverseStackHalvesReadoutDrive) {
    NetworkSpec spec = small_spec(NeuronKind::relu, true);
    spec.zero_init_membrane = true;
    auto bi = init_network(spec, 10);
    for (auto& l : bi.reverse_layers) {
        l.w_in.fill(0);
        l.w_rec.fill(0);
    }
    NetworkSpec uni_spec = spec;
    uni_spec.bidirectional = false;
    Network uni;
    uni.spec = uni_spec;
    uni.layers = bi.layers;
    const Matrix x = random_input(25, 3, 7);
    const auto tb = forward_sequence(bi, x);
    const auto tu = forward_sequence(uni, x);
    for (std::size_t t = 0; t < 25; ++t)
        for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(tb.layers[2].drive(t, j), 0.5 * tu.layers[2].drive(t, j), 1e-12);
}

// Two explicit passes written against the scalar step functions.
TEST(ForwardBidirectional, MatchesTwoPassReference) {
    NetworkSpec spec = small_spec(NeuronKind::alif, true);
    const auto net = init_network(spec, 77);
    const std::size_t steps = 30;
    const Matrix x = random_input(steps, 3, 8);

    auto run = [&](const std::vector<Layer>& stack, bool reversed) {
        std::vector<Matrix> outs;
        Matrix in(steps, 3);
        for (std::size_t t = 0; t < steps; ++t)
            for (std::size_t i = 0; i < 3; ++i) in(t, i) = x(reversed ? steps - 1 - t : t, i);
        for (std::size_t l = 0; l + (stack.size() == net.layers.size() ? 1 : 0) < stack.size(); ++l) {
            const Layer& L = stack[l];
            Matrix out(steps, L.size);
            std::vector<double> u = L.u0, eta(L.size, 0), s(L.size, 0);
            for (std::size_t t = 0; t < steps; ++t) {
                std::vector<double> next_s(L.size);
                for (std::size_t j = 0; j < L.size; ++j) {
                    double d = L.bias[j];
                    for (std::size_t i = 0; i < L.fan_in; ++i) d += in(t, i) * L.w_in(i, j);
                    for (std::size_t i = 0; i < L.size; ++i) d += s[i] * L.w_rec(i, j);
                    const auto st = alif_step<double>({u[j], eta[j], s[j] != 0}, d,
                                                      AlifParams<double>{L.tau_m[j], L.tau_adp[j], L.b_0, L.beta, L.r_m, L.dt});
                    u[j] = st.u;
                    eta[j] = st.eta;
                    next_s[j] = st.spike;
                    out(t, j) = st.spike;
                }
                s = next_s;
            }
            outs.push_back(out);
            in = out;
        }
        return outs;
    };
    const auto f = run(net.layers, false);
    const auto b = run(net.reverse_layers, true);
    const auto trace = forward_bidirectional(net, x);
    const Layer& R = net.layers.back();
    for (std::size_t j = 0; j < R.size; ++j) {
        double u = R.u0[j];
        for (std::size_t t = 0; t < steps; ++t) {
            double d = R.bias[j];
            for (std::size_t i = 0; i < R.fan_in; ++i) d += 0.5 * (f.back()(t, i) + b.back()(steps - 1 - t, i)) * R.w_in(i, j);
            u = readout_step<double>(u, d, {R.tau_m[j], R.r_m, 0, 1, R.dt});
            EXPECT_NEAR(trace.layers.back().u(t, j), u, 1e-12);
        }
    }
}

}  // namespace
}  // namespace srnn
