#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "srnn/accounting.hpp"
#include "srnn/backward.hpp"
#include "srnn/codecs.hpp"
#include "srnn/dataset.hpp"
#include "srnn/forward.hpp"
#include "srnn/log.hpp"
#include "srnn/loss.hpp"
#include "srnn/network.hpp"
#include "srnn/optimizer.hpp"
#include "srnn/parallel.hpp"
#include "srnn/rng.hpp"
#include "srnn/surrogate.hpp"

namespace srnn {

struct TrainingConfig {
    double lr = 1e-2;
    LrSchedule schedule = ConstantLr{};
    int epochs = 10;
    std::size_t minibatch = 16;
    SurrogateKind surrogate = MultiGaussian{};
    std::uint64_t seed = 0;
    bool freeze_tau_m = false;
    bool freeze_tau_adp = false;
    unsigned threads = 1;
};

inline void validate(const TrainingConfig& c) {
    if (!(c.lr > 0) || !std::isfinite(c.lr)) throw ConfigError("training: lr must be positive");
    if (c.epochs < 0) throw ConfigError("training: epochs must be >= 0");
    if (c.minibatch < 1) throw ConfigError("training: minibatch must be >= 1");
    validate(c.surrogate);
    if (const auto* s = std::get_if<StepDecay>(&c.schedule); s && (s->every < 1 || !(s->factor > 0)))
        throw ConfigError("training: step decay needs every >= 1 and factor > 0");
    if (const auto* s = std::get_if<LinearToZero>(&c.schedule); s && s->epochs < 1)
        throw ConfigError("training: linear decay needs epochs >= 1");
}

inline void check_compatible(const Network& net, const Dataset& data) {
    if (net.spec.input_size != data.channels)
        throw ShapeError("network expects " + std::to_string(net.spec.input_size) + " input channels, dataset has " +
                         std::to_string(data.channels));
    if (net.output_layer().size != data.classes)
        throw ShapeError("network has " + std::to_string(net.output_layer().size) + " outputs, dataset has " +
                         std::to_string(data.classes) + " classes");
    if (data.kind == TaskKind::streaming && net.spec.decode == DecodeMode::spike_count)
        throw ConfigError("streaming tasks need a membrane decoder, not SpikeCount");
}

// Per-sample quantities; summed over samples in index order.
struct SampleStats {
    double loss = 0;
    double correct = 0;  // steps (streaming) or samples classified correctly
    double counted = 0;
    double spikes = 0;
    double neuron_steps = 0;
    double sops = 0;
    double steps = 0;

    SampleStats& operator+=(const SampleStats& o) {
        loss += o.loss;
        correct += o.correct;
        counted += o.counted;
        spikes += o.spikes;
        neuron_steps += o.neuron_steps;
        sops += o.sops;
        steps += o.steps;
        return *this;
    }
};

namespace detail {

inline SampleStats sample_stats(const Network& net, const ForwardTrace& trace, const Target& target) {
    SampleStats s;
    s.loss = sample_loss(net, trace, target);
    const auto& out = trace.output();
    if (target.streaming()) {
        for (std::size_t t = 0; t < trace.steps(); ++t)
            if (static_cast<int>(argmax<double>(out.u.row(t))) == target.step_labels[t]) s.correct += 1;
        s.counted = static_cast<double>(trace.steps());
    } else {
        const auto p = decode_sequence(out.u, out.out, net.spec.decode);
        s.correct = static_cast<int>(argmax<double>(p)) == target.label ? 1 : 0;
        s.counted = 1;
    }
    const FiringStats f = firing_rate(net, trace);
    s.spikes = f.spikes;
    s.neuron_steps = f.neuron_steps;
    s.sops = sop_count(net, trace).total;
    s.steps = static_cast<double>(trace.steps());
    return s;
}

}  // namespace detail

struct BatchResult {
    GradientSet grad;  // mean over the batch
    SampleStats stats;
};

// Mean gradient over `indices`. Samples are reduced in ascending dataset index, so any
// permutation of the same batch and any thread count give bit-identical results.
inline BatchResult minibatch_gradient(const Network& net, const Dataset& data, std::span<const std::size_t> indices,
                                      const SurrogateKind& surrogate, unsigned threads = 1) {
    std::vector<std::size_t> order(indices.begin(), indices.end());
    std::sort(order.begin(), order.end());
    std::vector<GradientSet> grads(order.size());
    std::vector<SampleStats> stats(order.size());
    parallel_for(order.size(), threads, [&](std::size_t k) {
        const Sample& s = data.samples.at(order[k]);
        const auto trace = forward_sequence(net, s.input);
        grads[k] = backward(net, trace, s.target, surrogate);
        stats[k] = detail::sample_stats(net, trace, s.target);
    });
    BatchResult r{GradientSet::zeros_like(net), {}};
    for (std::size_t k = 0; k < order.size(); ++k) {
        r.grad += grads[k];
        r.stats += stats[k];
    }
    if (!order.empty()) r.grad *= 1.0 / static_cast<double>(order.size());
    return r;
}

struct EvalResult {
    double loss = 0;      // mean per sample
    double accuracy = 0;  // per step for streaming tasks
    double mean_firing_rate = 0;
    double sops_per_sample = 0;
    double sops_per_step = 0;
    std::size_t samples = 0;
};

inline EvalResult summarize(const SampleStats& s, std::size_t samples) {
    EvalResult r;
    r.samples = samples;
    if (samples == 0) return r;
    r.loss = s.loss / static_cast<double>(samples);
    r.accuracy = s.counted > 0 ? s.correct / s.counted : 0.0;
    r.mean_firing_rate = s.neuron_steps > 0 ? s.spikes / s.neuron_steps : 0.0;
    r.sops_per_sample = s.sops / static_cast<double>(samples);
    r.sops_per_step = s.steps > 0 ? s.sops / s.steps : 0.0;
    return r;
}

inline EvalResult evaluate(const Network& net, const Dataset& data, unsigned threads = 1) {
    check_compatible(net, data);
    std::vector<SampleStats> stats(data.size());
    parallel_for(data.size(), threads, [&](std::size_t i) {
        const Sample& s = data.samples[i];
        stats[i] = detail::sample_stats(net, forward_sequence(net, s.input), s.target);
    });
    SampleStats total;
    for (const auto& s : stats) total += s;
    return summarize(total, data.size());
}

// Row t: class probabilities available after reading steps 0..t.
inline Matrix predict(const Network& net, const Matrix& input, bool streaming) {
    const auto trace = forward_sequence(net, input);
    return anytime_probabilities(trace.output().u, trace.output().out, net.spec.decode, streaming);
}

// Accuracy after each step, averaged over the dataset.
inline std::vector<double> anytime_accuracy(const Network& net, const Dataset& data, unsigned threads = 1) {
    check_compatible(net, data);
    const bool streaming = data.kind == TaskKind::streaming;
    std::vector<Matrix> probs(data.size());
    parallel_for(data.size(), threads, [&](std::size_t i) { probs[i] = predict(net, data.samples[i].input, streaming); });
    std::vector<std::vector<int>> labels;
    for (const auto& s : data.samples) labels.push_back(streaming ? s.target.step_labels : std::vector<int>{s.target.label});
    return anytime_curve(probs, labels);
}

struct EpochMetrics {
    int epoch = 0;
    std::string split;
    double loss = 0;
    double accuracy = 0;
    double mean_firing_rate = 0;
    double lr = 0;

    friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

struct MetricsLog {
    std::vector<EpochMetrics> rows;

    std::string to_csv() const {
        std::string out = "epoch,split,loss,accuracy,mean_firing_rate,lr\n";
        char line[256];
        for (const auto& r : rows) {
            std::snprintf(line, sizeof line, "%d,%s,%.9f,%.6f,%.6f,%.9g\n", r.epoch, r.split.c_str(), r.loss, r.accuracy,
                          r.mean_firing_rate, r.lr);
            out += line;
        }
        return out;
    }

    void write_csv(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + path);
        f << to_csv();
    }

    friend bool operator==(const MetricsLog&, const MetricsLog&) = default;
};

struct FitResult {
    Network net;
    MetricsLog log;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

// Minibatch Adam over `train`, logging the running training metrics of each epoch and,
// when `val` is non-empty, a validation pass after it. Epochs are 1-based in the log.
inline FitResult fit(Network net, const Dataset& train, const Dataset& val, const TrainingConfig& config,
                     const EpochCallback& on_epoch = {}) {
    validate(config);
    validate(net);
    check_compatible(net, train);
    if (!val.empty()) check_compatible(net, val);
    FitResult result{std::move(net), {}};
    Network& model = result.net;
    if (train.empty() || config.epochs == 0) return result;

    AdamState adam = AdamState::for_network(model);
    std::vector<std::size_t> order(train.size());
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng rng(Rng::mix(config.seed, static_cast<std::uint64_t>(epoch)));
        rng.shuffle(std::span<std::size_t>(order));
        const double lr = lr_at(config.schedule, config.lr, epoch);
        SampleStats running;
        for (std::size_t begin = 0; begin < order.size(); begin += config.minibatch) {
            const std::size_t end = std::min(order.size(), begin + config.minibatch);
            BatchResult batch = minibatch_gradient(model, train, std::span(order).subspan(begin, end - begin),
                                                   config.surrogate, config.threads);
            if (!std::isfinite(batch.stats.loss) || !batch.grad.all_finite())
                throw NumericError("training diverged in epoch " + std::to_string(epoch + 1) +
                                   " (non-finite loss or gradient)");
            if (config.freeze_tau_m) batch.grad.zero(ParamGroup::tau_m);
            if (config.freeze_tau_adp) batch.grad.zero(ParamGroup::tau_adp);
            adam_step(model, batch.grad, adam, lr);
            running += batch.stats;
        }
        const EvalResult tr = summarize(running, train.size());
        EpochMetrics row{epoch + 1, "train", tr.loss, tr.accuracy, tr.mean_firing_rate, lr};
        result.log.rows.push_back(row);
        if (on_epoch) on_epoch(row);
        if (!val.empty()) {
            const EvalResult v = evaluate(model, val, config.threads);
            EpochMetrics vrow{epoch + 1, "val", v.loss, v.accuracy, v.mean_firing_rate, lr};
            result.log.rows.push_back(vrow);
            if (on_epoch) on_epoch(vrow);
        }
    }
    return result;
}

inline FitResult fit(const NetworkSpec& spec, const Dataset& train, const Dataset& val, const TrainingConfig& config,
                     const EpochCallback& on_epoch = {}) {
    return fit(init_network(spec, config.seed), train, val, config, on_epoch);
}

struct GridPoint {
    double h = 0;
    double s = 0;
    double val_accuracy = 0;
    double val_loss = 0;
};

// Trains one model per Multi-Gaussian (h, s) pair from the same initial network and
// reports validation accuracy, e.g. to map the surrogate's sensitivity.
inline std::vector<GridPoint> surrogate_grid_search(const NetworkSpec& spec, const Dataset& train, const Dataset& val,
                                                    TrainingConfig config, std::span<const double> hs,
                                                    std::span<const double> ss) {
    if (val.empty()) throw ConfigError("surrogate grid search needs a validation set");
    const Network init = init_network(spec, config.seed);
    const double sigma = std::holds_alternative<MultiGaussian>(config.surrogate)
                             ? std::get<MultiGaussian>(config.surrogate).sigma
                             : MultiGaussian{}.sigma;
    std::vector<GridPoint> out;
    for (double h : hs)
        for (double s : ss) {
            config.surrogate = MultiGaussian{h, s, sigma};
            const auto fitted = fit(init, train, val, config);
            const EvalResult r = evaluate(fitted.net, val, config.threads);
            out.push_back({h, s, r.accuracy, r.loss});
            log::info("grid h=", h, " s=", s, " val_accuracy=", r.accuracy);
        }
    return out;
}

}  // namespace srnn
