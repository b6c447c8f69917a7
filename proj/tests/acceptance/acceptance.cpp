// One line per criterion: "criterion N: PASS|FAIL <detail>". Exit status is 0 iff every
// requested criterion passed. Usage: acceptance [N ...] (default: all).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "srnn/accounting.hpp"
#include "srnn/codecs.hpp"
#include "srnn/gradcheck.hpp"
#include "srnn/io.hpp"
#include "srnn/serialize.hpp"
#include "srnn/tasks.hpp"
#include "srnn/trainer.hpp"

namespace fs = std::filesystem;
using namespace srnn;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

fs::path source_dir() { return SRNN_SOURCE_DIR; }

fs::path work_dir(const std::string& name) {
    const fs::path p = fs::path(SRNN_BINARY_DIR) / "acceptance_out" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// Direct substitution into the update equations, long double, no shared helpers.
struct OracleLif {
    long double u, tau, r, ur, theta, dt;
    bool prev;
    bool subtract;
    std::pair<long double, bool> step(long double drive) const {
        long double next;
        if (!subtract)
            next = (prev ? ur : u) + (dt / tau) * (-(prev ? ur : u) + r * drive);
        else
            next = u + (dt / tau) * (-u + r * drive) - (prev ? theta : 0.0L);
        return {next, next >= theta};
    }
};

struct OracleAlif {
    long double u, eta, tau_m, tau_adp, b0, beta, r, dt;
    bool prev;
    std::tuple<long double, long double, bool> step(long double drive) const {
        const long double alpha = std::exp(-dt / tau_m);
        const long double rho = std::exp(-dt / tau_adp);
        const long double s = prev ? 1.0L : 0.0L;
        const long double theta_prev = b0 + beta * eta;
        const long double eta_next = rho * eta + (1 - rho) * s;
        const long double u_next = alpha * u + (1 - alpha) * r * drive - theta_prev * s;
        return {u_next, eta_next, u_next >= b0 + beta * eta_next};
    }
};

Outcome criterion_1() {
    const auto t0 = Clock::now();
    Rng rng(2024);
    double worst = 0;
    std::size_t mismatched_spikes = 0, near_threshold = 0;
    const std::size_t trials = 100000;
    auto close = [&](long double ref, double got) {
        const double err = static_cast<double>(std::fabs(ref - got) / std::max(1.0L, std::fabs(ref)));
        worst = std::max(worst, err);
    };
    for (std::size_t i = 0; i < trials; ++i) {
        const double u = rng.uniform(-3, 3), drive = rng.uniform(-5, 5), tau = rng.uniform(1, 200);
        const double dt = rng.uniform(0.1, 1.0), r = rng.uniform(0.5, 3), theta = rng.uniform(0.3, 2);
        const double eta = rng.uniform(0, 2), tau_adp = rng.uniform(1, 1000), beta = rng.uniform(0, 3);
        const bool prev = rng.uniform() < 0.5, subtract = rng.uniform() < 0.5;
        const double ur = rng.uniform(-0.5, 0.5);

        LifParams<double> lp{tau, r, ur, theta, dt, subtract ? ResetMode::subtract_threshold : ResetMode::to_potential};
        const LifState<double> lifs = lif_step(LifState<double>{u, prev}, drive, lp);
        const auto [lu, ls] = OracleLif{u, tau, r, ur, theta, dt, prev, subtract}.step(drive);
        close(lu, lifs.u);
        if (std::fabs(lu - theta) < 1e-12L) ++near_threshold;
        else if (ls != lifs.spike) ++mismatched_spikes;

        AlifParams<double> ap{tau, tau_adp, theta, beta, r, dt};
        const AlifState<double> as = alif_step(AlifState<double>{u, eta, prev}, drive, ap);
        const auto [au, aeta, aspike] = OracleAlif{u, eta, tau, tau_adp, theta, beta, r, dt, prev}.step(drive);
        close(au, as.u);
        close(aeta, as.eta);
        if (std::fabs(au - (theta + beta * aeta)) < 1e-12L) ++near_threshold;
        else if (aspike != as.spike) ++mismatched_spikes;
    }
    const double elapsed = seconds_since(t0);
    const bool pass = worst <= 1e-12 && mismatched_spikes == 0 && elapsed < 10;
    return {pass, std::to_string(trials) + " LIF+ALIF triples, max err " + fmt("%.2e", worst) + " (tol 1e-12), spike mismatches " +
                      std::to_string(mismatched_spikes) + ", " + fmt("%.2f", elapsed) + " s (limit 10 s)"};
}

Outcome criterion_2() {
    const auto t0 = Clock::now();
    Rng rng(77);
    double worst = 0;
    std::size_t checked = 0, kinks = 0;
    bool tau_families = true;
    for (int n = 0; n < 20; ++n) {
        NetworkSpec spec;
        spec.input_size = 1 + rng.below(4);
        for (int l = 0; l < 2; ++l) {
            LayerSpec h;
            h.size = 2 + rng.below(15);
            h.neuron = NeuronKind::relu;
            h.tau_m_init = {8, 2};
            h.tau_adp_init = {20, 5};
            spec.layers.push_back(h);
        }
        LayerSpec out;
        out.size = 2 + rng.below(3);
        out.neuron = NeuronKind::readout;
        out.recurrent = false;
        spec.layers.push_back(out);
        const std::size_t steps = 5 + rng.below(21);
        const Network net = init_network(spec, 1000 + static_cast<std::uint64_t>(n));
        Matrix x(steps, spec.input_size);
        for (double& v : x.data()) v = rng.uniform(-1.5, 1.5);
        Target y;
        if (n % 2 == 0) {
            y.label = static_cast<int>(rng.below(out.size));
        } else {
            for (std::size_t t = 0; t < steps; ++t) y.step_labels.push_back(static_cast<int>(rng.below(out.size)));
        }
        const auto r = grad_check_relu_exact(net, x, y);
        worst = std::max(worst, r.max_error);
        checked += r.checked;
        kinks += r.skipped_kinks;
        const GradientSet g = backward(net, forward_sequence(net, x), y, MultiGaussian{});
        for (std::size_t l = 0; l < 2; ++l) {
            const auto nonzero = [](const std::vector<double>& v) {
                return std::any_of(v.begin(), v.end(), [](double d) { return d != 0; });
            };
            tau_families = tau_families && nonzero(g.layers[l].d_tau_m) && nonzero(g.layers[l].d_tau_adp);
        }
    }
    const double elapsed = seconds_since(t0);
    const bool pass = worst < 1e-4 && tau_families && elapsed < 120;
    return {pass, "20 ReLU nets, " + std::to_string(checked) + " parameters, max rel err " + fmt("%.2e", worst) +
                      " (tol 1e-4), kinks skipped " + std::to_string(kinks) + ", tau_m/tau_adp gradients present " +
                      (tau_families ? "yes" : "no") + ", " + fmt("%.1f", elapsed) + " s (limit 120 s)"};
}

Outcome criterion_3() {
    const auto t0 = Clock::now();
    const std::vector<SurrogateKind> kinds{MultiGaussian{}, GaussianSurrogate{}, LinearSurrogate{}, SLayerSurrogate{}};
    double worst = 0;
    std::size_t nets = 0;
    double min_rate = 1;
    Rng rng(31);
    for (const auto& kind : kinds)
        for (int n = 0; n < 3; ++n) {
            NetworkSpec spec;
            spec.input_size = 4;
            spec.bidirectional = n == 2;
            for (int l = 0; l < 2; ++l) {
                LayerSpec h;
                h.size = 10;
                h.tau_m_init = {4, 1};
                h.r_m = 3;
                spec.layers.push_back(h);
            }
            LayerSpec out;
            out.size = 3;
            out.recurrent = false;
            out.neuron = n == 1 ? NeuronKind::spiking_output : NeuronKind::readout;
            out.r_m = 3;
            spec.layers.push_back(out);
            spec.decode = n == 1 ? DecodeMode::spike_count : DecodeMode::membrane_softmax;
            const Network net = init_network(spec, 50 + nets);
            Matrix x(30, 4);
            for (double& v : x.data()) v = rng.uniform(-3, 3);
            Target y;
            y.label = static_cast<int>(nets % 3);
            const auto trace = forward_sequence(net, x);
            min_rate = std::min(min_rate, firing_rate(net, trace).mean());
            worst = std::max(worst, grad_check_surrogate_consistency(net, x, y, kind).max_error);
            ++nets;
        }
    const double elapsed = seconds_since(t0);
    const bool pass = worst < 1e-8 && min_rate > 0 && elapsed < 60;
    return {pass, std::to_string(nets) + " spiking ALIF nets over 4 surrogates, max abs diff " + fmt("%.2e", worst) +
                      " (tol 1e-8), min firing rate " + fmt("%.3f", min_rate) + ", " + fmt("%.2f", elapsed) + " s (limit 60 s)"};
}

Outcome criterion_4() {
    const double mg0 = mg_grad(0, 0, 0.15, 6, 0.5), g0 = gaussian_grad(0, 0, 0.5);
    const double lin1 = std::max(linear_grad(1, 0, 1), linear_grad(-1, 0, 1)), sl = slayer_grad(0.2, 0, 5);
    bool negative = true;
    for (double x = 3; x <= 20; x += 0.01) negative = negative && mg_grad(x, 0, 0.15, 6, 0.5) < 0 && mg_grad(-x, 0, 0.15, 6, 0.5) < 0;
    const bool pass = std::fabs(mg0 - 0.878223) < 1e-6 && std::fabs(g0 - 0.797885) < 1e-6 && lin1 == 0 &&
                      std::fabs(sl - 0.367879) < 1e-6 && negative;
    return {pass, "mg(0)=" + fmt("%.6f", mg0) + " gaussian(0)=" + fmt("%.6f", g0) + " linear(|1|)=" + fmt("%.1f", lin1) +
                      " slayer(0.2)=" + fmt("%.6f", sl) + " mg<0 on 3<=|x|<=20 " + (negative ? "yes" : "no")};
}

Outcome criterion_5() {
    const auto t0 = Clock::now();
    const ArchDescription shd = arch_from_json(parse_json_file((source_dir() / "configs/shd_srnn_arch.json").string()));
    const ArchDescription bilstm = arch_from_json(parse_json_file((source_dir() / "configs/shd_bilstm_arch.json").string()));
    const ArchDescription soli{
        512, {{ArchKind::alif, 512, 512, true, 1}, {ArchKind::alif, 512, 512, true, 1}, {ArchKind::readout_lif, 512, 12, false, 1}}};
    const double shd_mac = snn_cost_per_step(shd, 0.0757).mac;
    const double soli_mac = snn_cost_per_step(soli, 0.1).mac;
    const double e = energy_per_step(788, 10700);
    const double ratio = cost_report(bilstm, 0).energy_per_step_pj / cost_report(shd, 0.0757).energy_per_step_pj;
    const bool mac_ok = shd_mac == 788, soli_ok = std::fabs(soli_mac - 3100) <= 50;
    const bool energy_ok = std::fabs(e - 3512.8) < 1e-9 && std::fabs(e / 3515.7 - 1) <= 1e-3;
    const bool ratio_ok = std::fabs(ratio / 1700 - 1) <= 0.30;
    const double elapsed = seconds_since(t0);
    return {mac_ok && soli_ok && energy_ok && ratio_ok && elapsed < 1,
            "SHD MAC " + fmt("%.0f", shd_mac) + (mac_ok ? " ok" : " BAD") + ", SoLi MAC " + fmt("%.0f", soli_mac) +
                (soli_ok ? " ok" : " BAD") + ", energy(788,10700) " + fmt("%.1f", e) + " pJ" + (energy_ok ? " ok" : " BAD") +
                ", Bi-LSTM/SRNN energy ratio " + fmt("%.0f", ratio) + "x vs 1700x +-30%" + (ratio_ok ? " ok" : " BAD")};
}

struct PatternRun {
    RunConfig config;
    Splits splits;
};

PatternRun pattern_setup(std::size_t samples_per_class, int epochs) {
    PatternRun r{load_run_config((source_dir() / "configs/pattern_alif.json").string()), {}};
    if (samples_per_class) r.config.task->pattern.samples_per_class = samples_per_class;
    if (epochs) {
        r.config.training.epochs = epochs;
        r.config.training.schedule = LinearToZero{epochs};
    }
    r.splits = prepare(generate(*r.config.task), *r.config.task);
    r.config.network.input_size = r.splits.train.channels;
    return r;
}

Outcome criterion_6() {
    const auto t0 = Clock::now();
    const PatternRun run = pattern_setup(0, 0);
    const auto& t = *run.config.task;
    const FitResult r = fit(run.config.network, run.splits.train, run.splits.val, run.config.training);
    const EvalResult e = evaluate(r.net, run.splits.test);
    const double elapsed = seconds_since(t0);
    const bool pass = e.accuracy >= 0.95 && e.mean_firing_rate < 0.3 && run.config.training.epochs <= 100 && elapsed < 300;
    return {pass, "pattern task C=" + std::to_string(t.pattern.classes) + " T=" + std::to_string(t.pattern.steps) +
                      " channels=" + std::to_string(t.pattern.channels) + ", " + std::to_string(run.config.training.epochs) +
                      " epochs, test acc " + fmt("%.4f", e.accuracy) + " (>= 0.95), fr " + fmt("%.4f", e.mean_firing_rate) +
                      " (< 0.3), " + fmt("%.0f", elapsed) + " s (limit 300 s)"};
}

double population_std(const std::vector<double>& v) {
    double mean = 0, sq = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    for (double x : v) sq += (x - mean) * (x - mean);
    return std::sqrt(sq / static_cast<double>(v.size()));
}

std::vector<double> hidden_tau_m(const Network& net) {
    std::vector<double> v;
    for (std::size_t l = 0; l + 1 < net.layers.size(); ++l) v.insert(v.end(), net.layers[l].tau_m.begin(), net.layers[l].tau_m.end());
    return v;
}

Outcome criterion_7() {
    const auto t0 = Clock::now();
    const PatternRun run = pattern_setup(0, 0);
    double trained = 0, frozen = 0, std_init = 0, std_final = 0;
    bool spread = true;
    std::string per_seed;
    const std::vector<std::uint64_t> seeds{11, 12, 13, 14, 15};
    for (std::uint64_t seed : seeds) {
        TrainingConfig c = run.config.training;
        c.seed = seed;
        const Network init = init_network(run.config.network, seed);
        const FitResult a = fit(init, run.splits.train, run.splits.val, c);
        c.freeze_tau_m = c.freeze_tau_adp = true;
        const FitResult b = fit(init, run.splits.train, run.splits.val, c);
        const double acc_a = evaluate(a.net, run.splits.test).accuracy, acc_b = evaluate(b.net, run.splits.test).accuracy;
        const double s0 = population_std(hidden_tau_m(init)), s1 = population_std(hidden_tau_m(a.net));
        std_init += s0 / static_cast<double>(seeds.size());
        std_final += s1 / static_cast<double>(seeds.size());
        trained += acc_a;
        frozen += acc_b;
        spread = spread && s1 > s0;
        per_seed += " [" + fmt("%.3f", acc_a) + "/" + fmt("%.3f", acc_b) + " std " + fmt("%.3f", s0) + "->" + fmt("%.3f", s1) + "]";
    }
    trained /= static_cast<double>(seeds.size());
    frozen /= static_cast<double>(seeds.size());
    const bool pass = trained >= frozen && spread;
    return {pass, "5 seeds, mean test acc trained tau " + fmt("%.4f", trained) + " vs frozen " + fmt("%.4f", frozen) +
                      ", tau_m std increased in every seed " + (spread ? "yes" : "no") + " (mean " + fmt("%.4f", std_init) +
                      " -> " + fmt("%.4f", std_final) + "), " + fmt("%.0f", seconds_since(t0)) +
                      " s; trained/frozen per seed" + per_seed};
}

// Accuracy folded over the position inside a segment: label changes happen only at segment
// boundaries, so the anytime mechanism shows up as accuracy rising with time since the change.
struct Monotonicity {
    double slope = 0, early = 0, late = 0;
    bool ok() const { return slope > 0 && late >= early; }
};

Monotonicity fold_curve(const std::vector<double>& curve, std::size_t segment_len) {
    std::vector<double> folded(segment_len, 0.0);
    std::vector<double> count(segment_len, 0.0);
    for (std::size_t t = 0; t < curve.size(); ++t) folded[t % segment_len] += curve[t], count[t % segment_len] += 1;
    for (std::size_t k = 0; k < segment_len; ++k) folded[k] /= count[k];
    Monotonicity m;
    const double n = static_cast<double>(segment_len), xbar = (n - 1) / 2;
    double ybar = 0;
    for (double v : folded) ybar += v;
    ybar /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t k = 0; k < segment_len; ++k) {
        sxy += (static_cast<double>(k) - xbar) * (folded[k] - ybar);
        sxx += (static_cast<double>(k) - xbar) * (static_cast<double>(k) - xbar);
        (k < segment_len / 2 ? m.early : m.late) += folded[k] / static_cast<double>(segment_len / 2);
    }
    m.slope = sxy / sxx;
    return m;
}

Outcome criterion_8() {
    const auto t0 = Clock::now();
    RunConfig c = load_run_config((source_dir() / "configs/streaming_waveform.json").string());
    const Splits s = prepare(generate(*c.task), *c.task);
    c.network.input_size = s.train.channels;
    const FitResult r = fit(c.network, s.train, s.val, c.training);
    const EvalResult e = evaluate(r.net, s.test);
    const auto curve = anytime_accuracy(r.net, s.test);
    const fs::path csv = work_dir("streaming") / "anytime.csv";
    {
        std::ofstream f(csv);
        f << "step,accuracy\n";
        for (std::size_t t = 0; t < curve.size(); ++t) f << t + 1 << "," << fmt("%.6f", curve[t]) << "\n";
    }
    const Monotonicity m = fold_curve(curve, c.task->waveform.segment_len);
    const double elapsed = seconds_since(t0);
    const bool pass = e.accuracy >= 0.85 && m.ok() && fs::file_size(csv) > 0 && elapsed < 300;
    return {pass, "streaming K=" + std::to_string(c.task->waveform.classes) + " level-crossing input, per-step test acc " +
                      fmt("%.4f", e.accuracy) + " (>= 0.85), in-segment accuracy slope " + fmt("%.4f", m.slope) +
                      " first/second half " + fmt("%.3f", m.early) + "/" + fmt("%.3f", m.late) + ", curve " + csv.string() +
                      ", " + fmt("%.0f", elapsed) + " s (limit 300 s)"};
}

Outcome criterion_9() {
    const auto r = level_crossing_encode(std::vector<double>{0, 0.35, 0.20, -0.20});
    bool example = true;
    const double up[] = {0, 1, 0, 0}, down[] = {0, 0, 0, 1};
    for (std::size_t t = 0; t < 4; ++t) example = example && r.spikes(t, 0) == up[t] && r.spikes(t, 1) == down[t];
    Rng rng(99);
    std::size_t violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 10 + rng.below(91);
        std::vector<double> x(n), y(n);
        const double shift = std::round(rng.uniform(-1000, 1000));
        for (std::size_t t = 0; t < n; ++t) {
            x[t] = std::round(rng.normal() * 16) / 32;
            y[t] = x[t] + shift;
        }
        if (!(level_crossing_encode(x).spikes == level_crossing_encode(y).spikes)) ++violations;
    }
    return {example && violations == 0, std::string("worked example ") + (example ? "exact" : "WRONG") +
                                              ", translation invariance violations " + std::to_string(violations) + "/1000"};
}

std::string read_bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Outcome criterion_10() {
    const fs::path dir = work_dir("determinism");
    const std::string config = (source_dir() / "configs/determinism.json").string();
    auto run = [&](const std::string& name, int threads) {
        const std::string cmd = std::string("\"") + SRNN_CLI + "\" train --config \"" + config + "\" --threads " +
                                std::to_string(threads) + " --out \"" + (dir / name).string() + "\" > /dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    const int a = run("t1", 1), b = run("t8", 8), c = run("t8_again", 8);
    const std::string ma = read_bytes(dir / "t1/metrics.csv"), mb = read_bytes(dir / "t8/metrics.csv"),
                      mc = read_bytes(dir / "t8_again/metrics.csv");
    const std::string model_a = read_bytes(dir / "t1/model.json"), model_b = read_bytes(dir / "t8/model.json");
    const bool pass = a == 0 && b == 0 && c == 0 && !ma.empty() && ma == mb && mb == mc && model_a == model_b;
    return {pass, "CLI train --threads 1 vs 8: metrics.csv " + std::string(ma == mb ? "identical" : "DIFFERENT") + " (" +
                      std::to_string(ma.size()) + " bytes), model.json " + (model_a == model_b ? "identical" : "DIFFERENT") +
                      ", repeat run " + (mb == mc ? "identical" : "DIFFERENT")};
}

}  // namespace

int main(int argc, char** argv) {
    const std::map<int, std::function<Outcome()>> criteria{
        {1, criterion_1}, {2, criterion_2}, {3, criterion_3}, {4, criterion_4},  {5, criterion_5},
        {6, criterion_6}, {7, criterion_7}, {8, criterion_8}, {9, criterion_9}, {10, criterion_10}};
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
    if (selected.empty())
        for (const auto& [k, _] : criteria) selected.push_back(k);
    bool all = true;
    for (int k : selected) {
        const auto it = criteria.find(k);
        if (it == criteria.end()) {
            std::printf("criterion %d: FAIL unknown criterion\n", k);
            all = false;
            continue;
        }
        Outcome o;
        try {
            o = it->second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %d: %s %s\n", k, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
