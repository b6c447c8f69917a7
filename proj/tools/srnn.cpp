#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "srnn/accounting.hpp"
#include "srnn/gradcheck.hpp"
#include "srnn/io.hpp"
#include "srnn/log.hpp"
#include "srnn/serialize.hpp"
#include "srnn/tasks.hpp"
#include "srnn/trainer.hpp"

namespace fs = std::filesystem;
using namespace srnn;

namespace {

constexpr int kOk = 0;
constexpr int kNumeric = 1;
constexpr int kUsage = 2;

struct Options {
    std::string config, model, data, arch, out;
    std::optional<double> fr;
    std::optional<std::uint64_t> seed;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    bool csv = false;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path.string());
    f << text;
}

std::string manifest_path(const std::string& p) {
    return fs::is_directory(p) ? (fs::path(p) / "manifest.json").string() : p;
}

RunConfig load_config(const Options& o) {
    if (o.config.empty()) throw ConfigError("--config is required");
    if (!fs::exists(o.config)) throw ConfigError("config file not found: " + o.config);
    RunConfig c = load_run_config(o.config);
    if (o.seed) c.seed = c.training.seed = *o.seed;
    c.training.threads = o.threads;
    return c;
}

Network load_model(const std::string& path) {
    if (path.empty()) throw ConfigError("--model is required");
    if (!fs::exists(path)) throw ConfigError("model file not found: " + path);
    return load_network(path);
}

Dataset load_data(const std::string& path) {
    if (path.empty()) throw ConfigError("--data is required");
    const std::string m = manifest_path(path);
    if (!fs::exists(m)) throw ConfigError("dataset manifest not found: " + m);
    return load_dataset(m);
}

bool is_binary(const Dataset& d) {
    for (const auto& s : d.samples)
        for (double v : s.input.data())
            if (v != 0 && v != 1) return false;
    return true;
}

// One row per layer plus a total.
struct CostTable {
    std::vector<std::string> names;
    std::vector<ArchLayer> layers;
    std::vector<StepCost> costs;
    CostReport total;
};

CostTable cost_table(const ArchDescription& arch, double fr, SopCount sops) {
    validate(arch);
    CostTable t;
    for (std::size_t i = 0; i < arch.layers.size(); ++i) {
        const ArchLayer& l = arch.layers[i];
        t.names.push_back(std::to_string(i));
        t.layers.push_back(l);
        t.costs.push_back(cost_per_step({l.fan_in, {l}}, fr));
    }
    t.total = cost_report(arch, fr, sops);
    return t;
}

std::string cost_csv(const CostTable& t) {
    std::string out = "layer,kind,size,directions,synapses,mac_per_step,ac_per_step,energy_pj_per_step\n";
    for (std::size_t i = 0; i < t.layers.size(); ++i) {
        const auto& l = t.layers[i];
        out += t.names[i] + "," + to_string(l.kind) + "," + std::to_string(l.size) + "," + std::to_string(l.directions) +
               "," + std::to_string(synapse_count({l.fan_in, {l}})) + "," + fmt("%.10g", t.costs[i].mac) + "," +
               fmt("%.10g", t.costs[i].ac) + "," + fmt("%.10g", energy_per_step(t.costs[i].mac, t.costs[i].ac)) + "\n";
    }
    const auto& r = t.total;
    out += "total,,,," + std::to_string(r.synapses) + "," + fmt("%.10g", r.mac_per_step) + "," + fmt("%.10g", r.ac_per_step) +
           "," + fmt("%.10g", r.energy_per_step_pj) + "\n";
    return out;
}

std::string cost_text(const CostTable& t) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-6s %-10s %6s %4s %10s %14s %14s %16s\n", "layer", "kind", "size", "dirs", "synapses",
                  "MAC/step", "AC/step", "energy pJ/step");
    out += line;
    for (std::size_t i = 0; i < t.layers.size(); ++i) {
        const auto& l = t.layers[i];
        std::snprintf(line, sizeof line, "%-6s %-10s %6zu %4zu %10zu %14.1f %14.1f %16.1f\n", t.names[i].c_str(),
                      to_string(l.kind).c_str(), l.size, l.directions, synapse_count({l.fan_in, {l}}), t.costs[i].mac,
                      t.costs[i].ac, energy_per_step(t.costs[i].mac, t.costs[i].ac));
        out += line;
    }
    const auto& r = t.total;
    std::snprintf(line, sizeof line, "%-6s %-10s %6s %4s %10zu %14.1f %14.1f %16.1f\n", "total", "", "", "", r.synapses,
                  r.mac_per_step, r.ac_per_step, r.energy_per_step_pj);
    out += line;
    std::snprintf(line, sizeof line, "firing rate %.6f  SOPs/step %.1f  energy %.4f nJ/step\n", r.fr_mean, r.sops_per_step,
                  r.energy_per_step_pj / 1000);
    out += line;
    return out;
}

std::string anytime_csv(const std::vector<double>& curve) {
    std::string out = "step,accuracy\n";
    for (std::size_t t = 0; t < curve.size(); ++t) out += std::to_string(t + 1) + fmt(",%.6f", curve[t]) + "\n";
    return out;
}

void check_loss(const std::string& loss, TaskKind kind) {
    if (loss.empty()) return;
    const bool streaming = loss == "NLL-streaming";
    if (streaming != (kind == TaskKind::streaming))
        throw ConfigError("training.loss '" + loss + "' does not match a " + to_string(kind) + " task");
}

int cmd_train(const Options& o) {
    RunConfig c = load_config(o);
    if (!c.task) throw ConfigError(o.config + ": train needs a 'task' section");
    if (c.network.layers.empty()) throw ConfigError(o.config + ": train needs a 'network' section with layers");
    const Splits s = prepare(generate(*c.task), *c.task);
    if (s.train.empty()) throw ConfigError("training split is empty");
    check_loss(c.loss, s.train.kind);
    if (c.network.input_size == 0) c.network.input_size = s.train.channels;

    const fs::path dir = o.out.empty() ? fs::path(c.output_dir) : fs::path(o.out);
    fs::create_directories(dir);
    log::info("train ", s.train.size(), " val ", s.val.size(), " test ", s.test.size(), " samples, T=", s.train.steps,
              " N=", s.train.channels, " threads ", c.training.threads);

    const FitResult r = fit(c.network, s.train, s.val, c.training, [](const EpochMetrics& m) {
        log::info("epoch ", m.epoch, " ", m.split, " loss ", fmt("%.5f", m.loss), " acc ", fmt("%.4f", m.accuracy), " fr ",
                  fmt("%.4f", m.mean_firing_rate));
    });

    save_network((dir / "model.json").string(), r.net);
    r.log.write_csv((dir / "metrics.csv").string());

    const Dataset& held_out = !s.test.empty() ? s.test : !s.val.empty() ? s.val : s.train;
    const EvalResult e = evaluate(r.net, held_out, c.training.threads);
    write_text(dir / "anytime.csv", anytime_csv(anytime_accuracy(r.net, held_out, c.training.threads)));

    const CostTable t = cost_table(arch_from_network(r.net), e.mean_firing_rate, {e.sops_per_sample, e.sops_per_step});
    write_text(dir / "cost_report.txt", cost_text(t));
    write_text(dir / "cost_report.csv", cost_csv(t));

    std::cout << "test_accuracy " << fmt("%.6f", e.accuracy) << "\n"
              << "test_loss " << fmt("%.6f", e.loss) << "\n"
              << "mean_firing_rate " << fmt("%.6f", e.mean_firing_rate) << "\n"
              << "outputs " << dir.string() << "\n";
    return kOk;
}

int cmd_eval(const Options& o) {
    const Network net = load_model(o.model);
    const Dataset d = load_data(o.data);
    const EvalResult e = evaluate(net, d, o.threads);
    std::cout << "samples " << e.samples << "\n"
              << "accuracy " << fmt("%.6f", e.accuracy) << "\n"
              << "loss " << fmt("%.6f", e.loss) << "\n"
              << "mean_firing_rate " << fmt("%.6f", e.mean_firing_rate) << "\n"
              << "sops_per_sample " << fmt("%.1f", e.sops_per_sample) << "\n"
              << "sops_per_step " << fmt("%.3f", e.sops_per_step) << "\n";
    if (d.kind == TaskKind::streaming) {
        const std::string path = o.out.empty() ? "predictions.csv" : o.out;
        std::string out = "sample,step,label,prediction";
        for (std::size_t k = 0; k < d.classes; ++k) out += ",p" + std::to_string(k);
        out += "\n";
        for (std::size_t i = 0; i < d.size(); ++i) {
            const Matrix p = predict(net, d.samples[i].input, true);
            for (std::size_t t = 0; t < p.rows(); ++t) {
                const auto row = p.row(t);
                const auto pred = std::max_element(row.begin(), row.end()) - row.begin();
                out += std::to_string(i) + "," + std::to_string(t) + "," + std::to_string(d.samples[i].target.step_labels[t]) +
                       "," + std::to_string(pred);
                for (double v : row) out += fmt(",%.6f", v);
                out += "\n";
            }
        }
        write_text(path, out);
        std::cout << "predictions " << path << "\n";
    }
    return kOk;
}

int cmd_energy(const Options& o) {
    if (o.fr && !(*o.fr >= 0 && *o.fr <= 1)) throw ConfigError("--fr must lie in [0, 1]");
    if (o.arch.empty() && o.model.empty()) throw ConfigError("energy needs --arch or --model");
    CostTable t;
    if (!o.arch.empty()) {
        if (!fs::exists(o.arch)) throw ConfigError("architecture file not found: " + o.arch);
        const ArchDescription arch = arch_from_json(parse_json_file(o.arch));
        t = cost_table(arch, o.fr.value_or(0.0), {});
    } else {
        const Network net = load_model(o.model);
        if (!o.data.empty()) {
            const EvalResult e = evaluate(net, load_data(o.data), o.threads);
            t = cost_table(arch_from_network(net), o.fr.value_or(e.mean_firing_rate), {e.sops_per_sample, e.sops_per_step});
        } else {
            if (!o.fr) throw ConfigError("energy with --model needs --data or --fr");
            t = cost_table(arch_from_network(net), *o.fr, {});
        }
    }
    std::cout << (o.csv ? cost_csv(t) : cost_text(t));
    return kOk;
}

NetworkSpec gradcheck_spec(const GradcheckConfig& g, NeuronKind hidden) {
    NetworkSpec spec;
    spec.input_size = g.inputs;
    for (std::size_t n : g.hidden) {
        LayerSpec l;
        l.size = n;
        l.neuron = hidden;
        if (hidden != NeuronKind::relu) {
            l.tau_m_init = {4, 1};
            l.r_m = 3;
        }
        spec.layers.push_back(l);
    }
    LayerSpec out;
    out.size = g.classes;
    out.neuron = NeuronKind::readout;
    out.recurrent = false;
    spec.layers.push_back(out);
    return spec;
}

SurrogateKind corrupted(const SurrogateKind& s) {
    return std::visit(
        [](auto v) -> SurrogateKind {
            if constexpr (std::is_same_v<decltype(v), MultiGaussian> || std::is_same_v<decltype(v), GaussianSurrogate>)
                v.sigma *= 1.2;
            else
                v.alpha *= 1.2;
            return v;
        },
        s);
}

int cmd_gradcheck(const Options& o) {
    const RunConfig c = load_config(o);
    const GradcheckConfig& g = c.gradcheck;
    Rng rng(Rng::mix(c.seed, 77));
    Matrix x(g.steps, g.inputs);
    for (double& v : x.data()) v = rng.uniform(-g.input_scale, g.input_scale);
    Target y;
    y.label = static_cast<int>(c.seed % g.classes);

    auto prepare_net = [&](NeuronKind kind, std::uint64_t salt) {
        Network net = init_network(gradcheck_spec(g, kind), Rng::mix(c.seed, salt));
        if (g.zero_weights)
            for (auto* stack : {&net.layers, &net.reverse_layers})
                for (auto& l : *stack) {
                    l.w_in.fill(0);
                    l.w_rec.fill(0);
                }
        return net;
    };

    const auto relu = grad_check_relu_exact(prepare_net(NeuronKind::relu, 1), x, y);
    const SurrogateKind& reference = c.training.surrogate;
    const SurrogateKind used = g.corrupt_surrogate ? corrupted(reference) : reference;
    const auto surr = grad_check_surrogate_consistency(prepare_net(NeuronKind::alif, 2), x, y, used, &reference);

    const bool relu_ok = relu.max_error < 1e-4, surr_ok = surr.max_error < 1e-8;
    std::printf("relu_exact max_rel_error %.3e checked %zu skipped_kinks %zu threshold 1e-4 %s\n", relu.max_error, relu.checked,
                relu.skipped_kinks, relu_ok ? "PASS" : "FAIL");
    std::printf("surrogate_consistency max_abs_error %.3e checked %zu threshold 1e-8 %s\n", surr.max_error, surr.checked,
                surr_ok ? "PASS" : "FAIL");
    if (!relu_ok) log::error("worst relu_exact parameter ", relu.worst);
    if (!surr_ok) log::error("worst surrogate_consistency parameter ", surr.worst);
    return relu_ok && surr_ok ? kOk : kNumeric;
}

int cmd_gen(const Options& o) {
    RunConfig c = load_config(o);
    if (!c.task) throw ConfigError(o.config + ": gen needs a 'task' section");
    TaskConfig task = *c.task;
    if (o.seed) task.pattern.seed = task.waveform.seed = *o.seed;
    const Splits s = prepare(generate(task), task);
    const fs::path dir = o.out.empty() ? fs::path(c.output_dir) / "data" : fs::path(o.out);
    for (const auto& [name, part] : {std::pair{"train", &s.train}, {"val", &s.val}, {"test", &s.test}}) {
        if (part->empty()) continue;
        save_dataset((dir / name).string(), *part, is_binary(*part) ? SampleEncoding::events : SampleEncoding::dense);
        std::cout << name << " " << part->size() << " " << (dir / name / "manifest.json").string() << "\n";
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spiking recurrent network training, evaluation and cost accounting"};
    app.require_subcommand(1);
    Options o;

    auto threads = [&](CLI::App* a) { a->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber); };
    auto seed = [&](CLI::App* a) { a->add_option("--seed", o.seed, "overrides the config seed"); };

    auto* train = app.add_subcommand("train", "train a network from a run config");
    train->add_option("--config", o.config)->required();
    train->add_option("--out", o.out, "output directory (default: outputs.directory)");
    threads(train);
    seed(train);

    auto* eval = app.add_subcommand("eval", "evaluate a saved model on a dataset");
    eval->add_option("--model", o.model)->required();
    eval->add_option("--data", o.data, "dataset manifest or its directory")->required();
    eval->add_option("--out", o.out, "per-step prediction CSV for streaming data");
    threads(eval);

    auto* energy = app.add_subcommand("energy", "operation counts and energy per step");
    energy->add_option("--arch", o.arch, "architecture JSON");
    energy->add_option("--model", o.model, "model JSON");
    energy->add_option("--data", o.data, "dataset used to measure the firing rate");
    energy->add_option("--fr", o.fr, "mean firing rate");
    energy->add_flag("--csv", o.csv, "CSV instead of a table");
    threads(energy);

    auto* grad = app.add_subcommand("gradcheck", "compare BPTT against finite differences and the unrolled graph");
    grad->add_option("--config", o.config)->required();
    seed(grad);

    auto* gen = app.add_subcommand("gen", "write a synthetic task to disk");
    gen->add_option("--config", o.config)->required();
    gen->add_option("--out", o.out, "output directory");
    seed(gen);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*train) return cmd_train(o);
        if (*eval) return cmd_eval(o);
        if (*energy) return cmd_energy(o);
        if (*grad) return cmd_gradcheck(o);
        if (*gen) return cmd_gen(o);
    } catch (const NumericError& e) {
        log::error(e.what());
        return kNumeric;
    } catch (const ConfigError& e) {
        log::error(e.what());
        return kUsage;
    } catch (const ParseError& e) {
        log::error(e.what());
        return kUsage;
    } catch (const ShapeError& e) {
        log::error(e.what());
        return kUsage;
    } catch (const std::exception& e) {
        log::error(e.what());
        return kNumeric;
    }
    return kUsage;
}
