#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "srnn/accounting.hpp"
#include "srnn/error.hpp"
#include "srnn/io.hpp"
#include "srnn/network.hpp"
#include "srnn/tasks.hpp"
#include "srnn/trainer.hpp"

namespace srnn {

using Json = nlohmann::ordered_json;

inline constexpr const char* kConfigFormat = "srnn-config/1";
inline constexpr const char* kModelFormat = "srnn-model/1";
inline constexpr const char* kArchFormat = "srnn-arch/1";

namespace detail {

inline void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items())
        if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

template <typename T>
T get_required(const Json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    return get_or<T>(j, key, T{}, where);
}

inline NeuronKind parse_neuron(const std::string& s, const std::string& where) {
    if (s == "LIF") return NeuronKind::lif;
    if (s == "ALIF") return NeuronKind::alif;
    if (s == "ReLU") return NeuronKind::relu;
    if (s == "Readout") return NeuronKind::readout;
    if (s == "SpikingOutput") return NeuronKind::spiking_output;
    throw ConfigError(where + ": unknown neuron kind '" + s + "' (LIF, ALIF, ReLU, Readout, SpikingOutput)");
}

inline DecodeMode parse_decode(const std::string& s, const std::string& where) {
    if (s == "SpikeCount") return DecodeMode::spike_count;
    if (s == "MembraneSoftmax") return DecodeMode::membrane_softmax;
    if (s == "SpikingMembraneSoftmax") return DecodeMode::spiking_membrane_softmax;
    throw ConfigError(where + ": unknown decode mode '" + s + "'");
}

inline Json tau_json(const TauInit& t) { return Json{{"mean", t.mean}, {"std", t.stddev}}; }

inline TauInit parse_tau(const Json& j, TauInit fallback, const std::string& where) {
    check_keys(j, {"mean", "std"}, where);
    return {get_or(j, "mean", fallback.mean, where), get_or(j, "std", fallback.stddev, where)};
}

}  // namespace detail

inline Json to_json(const LayerSpec& l) {
    return Json{{"size", l.size},
                {"neuron", to_string(l.neuron)},
                {"recurrent", l.recurrent},
                {"tau_m", detail::tau_json(l.tau_m_init)},
                {"tau_adp", detail::tau_json(l.tau_adp_init)},
                {"theta", l.theta},
                {"u_r", l.u_r},
                {"b_0", l.b_0},
                {"beta", l.beta},
                {"r_m", l.r_m},
                {"dt", l.dt},
                {"reset", l.reset == ResetMode::subtract_threshold ? "subtract_threshold" : "to_potential"}};
}

inline LayerSpec layer_spec_from_json(const Json& j, const std::string& where) {
    detail::check_keys(j, {"size", "neuron", "recurrent", "tau_m", "tau_adp", "theta", "u_r", "b_0", "beta", "r_m", "dt", "reset"},
                       where);
    LayerSpec l;
    l.size = detail::get_required<std::size_t>(j, "size", where);
    l.neuron = detail::parse_neuron(detail::get_required<std::string>(j, "neuron", where), where);
    l.recurrent = detail::get_or(j, "recurrent", l.neuron != NeuronKind::readout && l.neuron != NeuronKind::spiking_output,
                                 where);
    if (j.contains("tau_m")) l.tau_m_init = detail::parse_tau(j["tau_m"], l.tau_m_init, where + ".tau_m");
    if (j.contains("tau_adp")) l.tau_adp_init = detail::parse_tau(j["tau_adp"], l.tau_adp_init, where + ".tau_adp");
    l.theta = detail::get_or(j, "theta", l.theta, where);
    l.u_r = detail::get_or(j, "u_r", l.u_r, where);
    l.b_0 = detail::get_or(j, "b_0", l.b_0, where);
    l.beta = detail::get_or(j, "beta", l.beta, where);
    l.r_m = detail::get_or(j, "r_m", l.r_m, where);
    l.dt = detail::get_or(j, "dt", l.dt, where);
    const std::string reset = detail::get_or<std::string>(j, "reset", "to_potential", where);
    if (reset == "subtract_threshold")
        l.reset = ResetMode::subtract_threshold;
    else if (reset != "to_potential")
        throw ConfigError(where + ".reset: expected 'to_potential' or 'subtract_threshold'");
    return l;
}

inline Json to_json(const NetworkSpec& s) {
    Json layers = Json::array();
    for (const auto& l : s.layers) layers.push_back(to_json(l));
    return Json{{"input_size", s.input_size},
                {"decode", to_string(s.decode)},
                {"bidirectional", s.bidirectional},
                {"zero_init_membrane", s.zero_init_membrane},
                {"layers", layers}};
}

// `input_size` may be omitted when the task determines it.
inline NetworkSpec network_spec_from_json(const Json& j, const std::string& where = "network") {
    detail::check_keys(j, {"input_size", "decode", "bidirectional", "zero_init_membrane", "layers"}, where);
    NetworkSpec s;
    s.input_size = detail::get_or<std::size_t>(j, "input_size", 0, where);
    s.decode = detail::parse_decode(detail::get_or<std::string>(j, "decode", "MembraneSoftmax", where), where);
    s.bidirectional = detail::get_or(j, "bidirectional", false, where);
    s.zero_init_membrane = detail::get_or(j, "zero_init_membrane", false, where);
    if (!j.contains("layers") || !j["layers"].is_array()) throw ConfigError(where + ": 'layers' must be an array");
    for (std::size_t i = 0; i < j["layers"].size(); ++i)
        s.layers.push_back(layer_spec_from_json(j["layers"][i], where + ".layers[" + std::to_string(i) + "]"));
    return s;
}

inline Json to_json(const SurrogateKind& k) {
    return std::visit(
        [](const auto& s) -> Json {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, MultiGaussian>)
                return Json{{"kind", "MultiGaussian"}, {"h", s.h}, {"s", s.s}, {"sigma", s.sigma}};
            else if constexpr (std::is_same_v<S, GaussianSurrogate>)
                return Json{{"kind", "Gaussian"}, {"sigma", s.sigma}};
            else if constexpr (std::is_same_v<S, LinearSurrogate>)
                return Json{{"kind", "Linear"}, {"alpha", s.alpha}};
            else
                return Json{{"kind", "SLayer"}, {"alpha", s.alpha}};
        },
        k);
}

inline SurrogateKind surrogate_from_json(const Json& j, const std::string& where) {
    const std::string kind = detail::get_required<std::string>(j, "kind", where);
    SurrogateKind out;
    if (kind == "MultiGaussian") {
        detail::check_keys(j, {"kind", "h", "s", "sigma"}, where);
        MultiGaussian m;
        out = MultiGaussian{detail::get_or(j, "h", m.h, where), detail::get_or(j, "s", m.s, where),
                            detail::get_or(j, "sigma", m.sigma, where)};
    } else if (kind == "Gaussian") {
        detail::check_keys(j, {"kind", "sigma"}, where);
        out = GaussianSurrogate{detail::get_or(j, "sigma", GaussianSurrogate{}.sigma, where)};
    } else if (kind == "Linear") {
        detail::check_keys(j, {"kind", "alpha"}, where);
        out = LinearSurrogate{detail::get_or(j, "alpha", LinearSurrogate{}.alpha, where)};
    } else if (kind == "SLayer") {
        detail::check_keys(j, {"kind", "alpha"}, where);
        out = SLayerSurrogate{detail::get_or(j, "alpha", SLayerSurrogate{}.alpha, where)};
    } else {
        throw ConfigError(where + ": unknown surrogate '" + kind + "' (MultiGaussian, Gaussian, Linear, SLayer)");
    }
    try {
        validate(out);
    } catch (const std::exception& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return out;
}

inline Json to_json(const LrSchedule& s) {
    return std::visit(
        [](const auto& v) -> Json {
            using S = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<S, ConstantLr>)
                return Json{{"type", "constant"}};
            else if constexpr (std::is_same_v<S, StepDecay>)
                return Json{{"type", "step"}, {"factor", v.factor}, {"every", v.every}};
            else
                return Json{{"type", "linear_to_zero"}, {"epochs", v.epochs}};
        },
        s);
}

inline LrSchedule schedule_from_json(const Json& j, int epochs, const std::string& where) {
    const std::string type = detail::get_required<std::string>(j, "type", where);
    if (type == "constant") {
        detail::check_keys(j, {"type"}, where);
        return ConstantLr{};
    }
    if (type == "step") {
        detail::check_keys(j, {"type", "factor", "every"}, where);
        return StepDecay{detail::get_required<double>(j, "factor", where), detail::get_required<int>(j, "every", where)};
    }
    if (type == "linear_to_zero") {
        detail::check_keys(j, {"type", "epochs"}, where);
        return LinearToZero{detail::get_or(j, "epochs", std::max(epochs, 1), where)};
    }
    throw ConfigError(where + ": unknown schedule '" + type + "' (constant, step, linear_to_zero)");
}

inline Json to_json(const TrainingConfig& c) {
    return Json{{"lr", c.lr},
                {"schedule", to_json(c.schedule)},
                {"epochs", c.epochs},
                {"minibatch", c.minibatch},
                {"surrogate", to_json(c.surrogate)},
                {"freeze_tau_m", c.freeze_tau_m},
                {"freeze_tau_adp", c.freeze_tau_adp}};
}

// `loss` is checked against the task kind by the caller.
inline TrainingConfig training_from_json(const Json& j, std::string* loss = nullptr, const std::string& where = "training") {
    detail::check_keys(j, {"lr", "schedule", "epochs", "minibatch", "loss", "surrogate", "freeze_tau_m", "freeze_tau_adp"},
                       where);
    TrainingConfig c;
    c.lr = detail::get_or(j, "lr", c.lr, where);
    c.epochs = detail::get_or(j, "epochs", c.epochs, where);
    c.minibatch = detail::get_or(j, "minibatch", c.minibatch, where);
    if (j.contains("schedule")) c.schedule = schedule_from_json(j["schedule"], c.epochs, where + ".schedule");
    if (j.contains("surrogate")) c.surrogate = surrogate_from_json(j["surrogate"], where + ".surrogate");
    c.freeze_tau_m = detail::get_or(j, "freeze_tau_m", false, where);
    c.freeze_tau_adp = detail::get_or(j, "freeze_tau_adp", false, where);
    const std::string l = detail::get_or<std::string>(j, "loss", "", where);
    if (!l.empty() && l != "CE" && l != "NLL-streaming")
        throw ConfigError(where + ".loss: expected 'CE' or 'NLL-streaming'");
    if (loss) *loss = l;
    validate(c);
    return c;
}

// Where the data of a run comes from and how it is prepared.
struct TaskConfig {
    enum class Source { pattern, waveform, files, idx } source = Source::pattern;
    PatternTaskSpec pattern;
    WaveformTaskSpec waveform;
    std::string manifest;  // files
    std::string idx_images, idx_labels;
    std::size_t idx_limit = 0;
    std::array<double, 3> split{0.72, 0.08, 0.20};
    std::uint64_t split_seed = 0;
    bool zscore = false;
    std::optional<std::pair<double, double>> level_crossing;  // (L+, L-)
};

inline TaskConfig task_from_json(const Json& j, const std::string& where = "task") {
    TaskConfig t;
    const std::string gen = detail::get_required<std::string>(j, "source", where);
    auto common = [&](std::initializer_list<const char*> extra) {
        std::vector<const char*> keys{"source", "split", "split_seed", "zscore", "level_crossing"};
        keys.insert(keys.end(), extra.begin(), extra.end());
        const std::set<std::string> ok(keys.begin(), keys.end());
        for (const auto& [key, _] : j.items())
            if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    };
    if (gen == "pattern_classification") {
        common({"classes", "steps", "channels", "jitter_std", "samples_per_class", "rate", "seed"});
        t.source = TaskConfig::Source::pattern;
        auto& p = t.pattern;
        p.classes = detail::get_or(j, "classes", p.classes, where);
        p.steps = detail::get_or(j, "steps", p.steps, where);
        p.channels = detail::get_or(j, "channels", p.channels, where);
        p.jitter_std = detail::get_or(j, "jitter_std", p.jitter_std, where);
        p.samples_per_class = detail::get_or(j, "samples_per_class", p.samples_per_class, where);
        p.rate = detail::get_or(j, "rate", p.rate, where);
        p.seed = detail::get_or(j, "seed", p.seed, where);
        validate(p);
    } else if (gen == "streaming_waveform") {
        common({"classes", "segment_len", "segments_per_sample", "noise_std", "samples", "seed"});
        t.source = TaskConfig::Source::waveform;
        auto& w = t.waveform;
        w.classes = detail::get_or(j, "classes", w.classes, where);
        w.segment_len = detail::get_or(j, "segment_len", w.segment_len, where);
        w.segments_per_sample = detail::get_or(j, "segments_per_sample", w.segments_per_sample, where);
        w.noise_std = detail::get_or(j, "noise_std", w.noise_std, where);
        w.samples = detail::get_or(j, "samples", w.samples, where);
        w.seed = detail::get_or(j, "seed", w.seed, where);
        validate(w);
    } else if (gen == "files") {
        common({"manifest"});
        t.source = TaskConfig::Source::files;
        t.manifest = detail::get_required<std::string>(j, "manifest", where);
    } else if (gen == "idx") {
        common({"images", "labels", "limit"});
        t.source = TaskConfig::Source::idx;
        t.idx_images = detail::get_required<std::string>(j, "images", where);
        t.idx_labels = detail::get_required<std::string>(j, "labels", where);
        t.idx_limit = detail::get_or<std::size_t>(j, "limit", 0, where);
    } else {
        throw ConfigError(where + ".source: unknown source '" + gen +
                          "' (pattern_classification, streaming_waveform, files, idx)");
    }
    if (j.contains("split")) {
        const auto v = detail::get_or<std::vector<double>>(j, "split", {}, where);
        if (v.size() != 3) throw ConfigError(where + ".split: expected three ratios");
        t.split = {v[0], v[1], v[2]};
    }
    t.split_seed = detail::get_or(j, "split_seed", t.split_seed, where);
    t.zscore = detail::get_or(j, "zscore", false, where);
    if (j.contains("level_crossing")) {
        const Json& lc = j["level_crossing"];
        detail::check_keys(lc, {"l_plus", "l_minus"}, where + ".level_crossing");
        t.level_crossing = std::pair{detail::get_or(lc, "l_plus", 0.3, where), detail::get_or(lc, "l_minus", 0.3, where)};
    }
    return t;
}

inline Dataset generate(const TaskConfig& t) {
    switch (t.source) {
        case TaskConfig::Source::pattern: return gen_pattern_classification(t.pattern);
        case TaskConfig::Source::waveform: return gen_streaming_waveform(t.waveform);
        case TaskConfig::Source::files: return load_dataset(t.manifest);
        case TaskConfig::Source::idx: return load_idx(t.idx_images, t.idx_labels, t.idx_limit);
    }
    throw ConfigError("unknown task source");
}

// Split, then normalise with training-split statistics and encode every split.
inline Splits prepare(const Dataset& raw, const TaskConfig& t) {
    Splits s = split(raw, t.split, t.split_seed);
    if (t.zscore && !s.train.empty()) {
        const ChannelStats stats = channel_stats(s.train);
        s.train = zscore(std::move(s.train), stats);
        s.val = zscore(std::move(s.val), stats);
        s.test = zscore(std::move(s.test), stats);
    }
    if (t.level_crossing) {
        const auto [lp, lm] = *t.level_crossing;
        s.train = encode_level_crossing(s.train, lp, lm);
        s.val = encode_level_crossing(s.val, lp, lm);
        s.test = encode_level_crossing(s.test, lp, lm);
    }
    return s;
}

struct GradcheckConfig {
    std::size_t steps = 12;
    std::vector<std::size_t> hidden{8, 8};
    std::size_t inputs = 3;
    std::size_t classes = 3;
    double input_scale = 2.0;
    bool corrupt_surrogate = false;
    bool zero_weights = false;
};

struct RunConfig {
    std::uint64_t seed = 0;
    NetworkSpec network;
    TrainingConfig training;
    std::string loss;
    std::optional<TaskConfig> task;
    std::string output_dir = "run";
    GradcheckConfig gradcheck;
};

inline GradcheckConfig gradcheck_from_json(const Json& j, const std::string& where = "gradcheck") {
    detail::check_keys(j, {"steps", "hidden", "inputs", "classes", "input_scale", "corrupt_surrogate", "zero_weights"}, where);
    GradcheckConfig g;
    g.steps = detail::get_or(j, "steps", g.steps, where);
    g.hidden = detail::get_or(j, "hidden", g.hidden, where);
    g.inputs = detail::get_or(j, "inputs", g.inputs, where);
    g.classes = detail::get_or(j, "classes", g.classes, where);
    g.input_scale = detail::get_or(j, "input_scale", g.input_scale, where);
    g.corrupt_surrogate = detail::get_or(j, "corrupt_surrogate", false, where);
    g.zero_weights = detail::get_or(j, "zero_weights", false, where);
    if (g.steps < 1 || g.hidden.empty() || g.inputs < 1 || g.classes < 1)
        throw ConfigError(where + ": steps, hidden, inputs and classes must be non-empty/positive");
    return g;
}

inline RunConfig run_config_from_json(const Json& j) {
    detail::check_keys(j, {"format", "seed", "network", "training", "task", "outputs", "gradcheck"}, "config");
    if (detail::get_required<std::string>(j, "format", "config") != kConfigFormat)
        throw ConfigError(std::string("config: format must be '") + kConfigFormat + "'");
    RunConfig c;
    c.seed = detail::get_or<std::uint64_t>(j, "seed", 0, "config");
    if (j.contains("network")) c.network = network_spec_from_json(j["network"]);
    if (j.contains("training")) c.training = training_from_json(j["training"], &c.loss);
    c.training.seed = c.seed;
    if (j.contains("task")) c.task = task_from_json(j["task"]);
    if (j.contains("outputs")) {
        detail::check_keys(j["outputs"], {"directory"}, "outputs");
        c.output_dir = detail::get_or<std::string>(j["outputs"], "directory", c.output_dir, "outputs");
    }
    if (j.contains("gradcheck")) c.gradcheck = gradcheck_from_json(j["gradcheck"]);
    return c;
}

inline Json parse_json_file(const std::string& path) {
    try {
        return Json::parse(detail::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path, 0, e.what());
    }
}

inline RunConfig load_run_config(const std::string& path) {
    const Json j = parse_json_file(path);
    try {
        return run_config_from_json(j);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

namespace detail {

inline Json matrix_json(const Matrix& m) {
    Json rows = Json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
    return rows;
}

inline Matrix matrix_from_json(const Json& j, std::size_t rows, std::size_t cols, const std::string& where) {
    if (!j.is_array() || j.size() != rows) throw ConfigError(where + ": expected " + std::to_string(rows) + " rows");
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto row = j[r].get<std::vector<double>>();
        if (row.size() != cols) throw ConfigError(where + ": expected " + std::to_string(cols) + " columns");
        std::copy(row.begin(), row.end(), m.row(r).begin());
    }
    return m;
}

inline Json layer_json(const Layer& l) {
    return Json{{"w_in", matrix_json(l.w_in)},
                {"w_rec", matrix_json(l.w_rec)},
                {"bias", l.bias},
                {"tau_m", l.tau_m},
                {"tau_adp", l.tau_adp},
                {"u0", l.u0}};
}

inline void fill_layer(Layer& l, const Json& j, const std::string& where) {
    check_keys(j, {"w_in", "w_rec", "bias", "tau_m", "tau_adp", "u0"}, where);
    auto vec = [&](const char* key, std::size_t n) {
        auto v = get_required<std::vector<double>>(j, key, where);
        if (v.size() != n) throw ConfigError(where + "." + key + ": expected " + std::to_string(n) + " values");
        return v;
    };
    l.w_in = matrix_from_json(j.at("w_in"), l.w_in.rows(), l.w_in.cols(), where + ".w_in");
    l.w_rec = matrix_from_json(j.at("w_rec"), l.w_rec.rows(), l.w_rec.cols(), where + ".w_rec");
    l.bias = vec("bias", l.size);
    l.tau_m = vec("tau_m", l.size);
    l.tau_adp = vec("tau_adp", l.tau_adp.size());
    l.u0 = vec("u0", l.size);
}

}  // namespace detail

inline Json to_json(const Network& net) {
    Json layers = Json::array(), reverse = Json::array();
    for (const auto& l : net.layers) layers.push_back(detail::layer_json(l));
    for (const auto& l : net.reverse_layers) reverse.push_back(detail::layer_json(l));
    return Json{{"format", kModelFormat}, {"seed", net.spec.seed}, {"spec", to_json(net.spec)}, {"layers", layers}, {"reverse_layers", reverse}};
}

inline Network network_from_json(const Json& j) {
    detail::check_keys(j, {"format", "seed", "spec", "layers", "reverse_layers"}, "model");
    if (detail::get_required<std::string>(j, "format", "model") != kModelFormat)
        throw ConfigError(std::string("model: format must be '") + kModelFormat + "'");
    const NetworkSpec spec = network_spec_from_json(j.at("spec"), "model.spec");
    Network net = init_network(spec, detail::get_or<std::uint64_t>(j, "seed", 0, "model"));  // shapes; arrays overwritten below
    const Json& layers = j.at("layers");
    const Json& reverse = j.contains("reverse_layers") ? j.at("reverse_layers") : Json::array();
    if (layers.size() != net.layers.size() || reverse.size() != net.reverse_layers.size())
        throw ConfigError("model: layer count does not match spec");
    for (std::size_t l = 0; l < net.layers.size(); ++l)
        detail::fill_layer(net.layers[l], layers[l], "model.layers[" + std::to_string(l) + "]");
    for (std::size_t l = 0; l < net.reverse_layers.size(); ++l)
        detail::fill_layer(net.reverse_layers[l], reverse[l], "model.reverse_layers[" + std::to_string(l) + "]");
    validate(net);
    return net;
}

inline void save_network(const std::string& path, const Network& net) { detail::write_file(path, to_json(net).dump() + "\n"); }

inline Network load_network(const std::string& path) {
    const Json j = parse_json_file(path);
    try {
        return network_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

inline ArchKind parse_arch_kind(const std::string& s, const std::string& where) {
    for (int k = 0; k <= static_cast<int>(ArchKind::readout_lif); ++k)
        if (to_string(static_cast<ArchKind>(k)) == s) return static_cast<ArchKind>(k);
    throw ConfigError(where + ": unknown layer kind '" + s + "' (Dense, VanillaRNN, GRU, LSTM, LIF, ALIF, ReadoutLIF)");
}

inline Json to_json(const ArchDescription& a) {
    Json layers = Json::array();
    for (const auto& l : a.layers)
        layers.push_back(Json{{"kind", to_string(l.kind)},
                              {"fan_in", l.fan_in},
                              {"size", l.size},
                              {"recurrent", l.recurrent},
                              {"directions", l.directions}});
    return Json{{"format", kArchFormat}, {"input_size", a.input_size}, {"layers", layers}};
}

// fan_in defaults to the width below; `recurrent` defaults to true for recurrent kinds.
inline ArchDescription arch_from_json(const Json& j) {
    detail::check_keys(j, {"format", "name", "input_size", "layers"}, "arch");
    if (detail::get_required<std::string>(j, "format", "arch") != kArchFormat)
        throw ConfigError(std::string("arch: format must be '") + kArchFormat + "'");
    ArchDescription a;
    a.input_size = detail::get_required<std::size_t>(j, "input_size", "arch");
    std::size_t width = a.input_size;
    if (!j.contains("layers") || !j["layers"].is_array()) throw ConfigError("arch: 'layers' must be an array");
    for (std::size_t i = 0; i < j["layers"].size(); ++i) {
        const Json& lj = j["layers"][i];
        const std::string where = "arch.layers[" + std::to_string(i) + "]";
        detail::check_keys(lj, {"kind", "fan_in", "size", "recurrent", "directions"}, where);
        ArchLayer l;
        l.kind = parse_arch_kind(detail::get_required<std::string>(lj, "kind", where), where);
        l.size = detail::get_required<std::size_t>(lj, "size", where);
        l.fan_in = detail::get_or(lj, "fan_in", width, where);
        const bool recurrent_kind = l.kind != ArchKind::dense && l.kind != ArchKind::readout_lif;
        l.recurrent = detail::get_or(lj, "recurrent", recurrent_kind, where);
        l.directions = detail::get_or(lj, "directions", 1u, where);
        width = l.output_width();
        a.layers.push_back(l);
    }
    validate(a);
    return a;
}

}  // namespace srnn
