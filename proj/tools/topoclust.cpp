// topoclust: generate synthetic data, train gradient-based competitive layers,
// evaluate, plot and sweep.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <topoclust/topoclust.hpp>

namespace fs = std::filesystem;
using namespace topoclust;

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto dots = item.find("..");
        try {
            if (dots == std::string::npos) {
                seeds.push_back(std::stoull(item));
            } else {
                const auto lo = std::stoull(item.substr(0, dots));
                const auto hi = std::stoull(item.substr(dots + 2));
                if (hi < lo) throw std::invalid_argument("descending range");
                for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
            }
        } catch (const std::exception&) {
            throw CLI::ValidationError("--seeds", "bad seed list item '" + item + "' (use 0..9 or 1,2,3)");
        }
    }
    if (seeds.empty()) throw CLI::ValidationError("--seeds", "empty seed list");
    return seeds;
}

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& flag) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t pos = 0;
            out.push_back(std::stoull(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw CLI::ValidationError(flag, "bad count '" + item + "'");
        }
    }
    return out;
}

Dataset load_dataset(const std::string& path, bool standardize_data) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read dataset " + path);
    Dataset ds = read_dataset_csv(is, fs::path(path).stem().string());
    return standardize_data ? standardize(ds) : ds;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

struct GenOptions {
    std::string name;
    std::size_t n = 500;
    std::optional<double> noise;
    double factor = defaults::circles_factor;
    std::size_t ns = 100;
    std::size_t nf = 1000;
    std::size_t clusters_per_class = defaults::clusters_per_class;
    double class_sep = defaults::class_sep;
    std::uint64_t seed = 0;
    std::string out;
};

int run_gen(const GenOptions& o) {
    Rng rng(o.seed);
    Dataset ds;
    if (o.name == "spiral")
        ds = gen_spiral(o.n, o.noise.value_or(defaults::spiral_noise), rng);
    else if (o.name == "moons")
        ds = gen_moons(o.n, o.noise.value_or(defaults::moons_noise), rng);
    else if (o.name == "circles")
        ds = gen_circles(o.n, o.factor, o.noise.value_or(defaults::circles_noise), rng);
    else if (o.name == "hypercube")
        ds = gen_hypercube_clusters(o.ns, o.nf, o.clusters_per_class, o.class_sep, rng);
    else
        throw std::invalid_argument("unknown dataset '" + o.name + "' (expected spiral, moons, circles, hypercube)");

    std::ostringstream csv;
    write_dataset_csv(ds, csv);
    write_text(o.out, csv.str());
    std::cout << ds.name << ": " << ds.samples() << "x" << ds.features() << ", " << ds.n_classes()
              << " classes -> " << o.out << '\n';
    return 0;
}

// ---------------------------------------------------------------------------

struct TrainOptions {
    std::string data;
    std::string arch = "dgbc";
    std::size_t k = 30;
    std::optional<double> lr;
    double lambda = 0.01;
    std::size_t epochs = 400;
    std::string seeds = "0";
    std::string hidden = "10,10";
    std::size_t steps_per_epoch = 0;
    std::string out_dir;
    bool no_standardize = false;
};

nlohmann::json config_json(const TrainConfig& cfg) {
    return {{"architecture", std::string(to_string(cfg.architecture))},
            {"epochs", cfg.epochs},
            {"lr", cfg.lr},
            {"lambda", cfg.lambda},
            {"k", cfg.k},
            {"hidden_sizes", cfg.hidden_sizes},
            {"steps_per_epoch", cfg.steps_per_epoch}};
}

int run_train(const TrainOptions& o) {
    const Dataset ds = load_dataset(o.data, !o.no_standardize);
    TrainConfig cfg = TrainConfig::defaults(parse_architecture(o.arch));
    cfg.k = o.k;
    if (o.lr) cfg.lr = *o.lr;
    cfg.lambda = o.lambda;
    cfg.epochs = o.epochs;
    cfg.steps_per_epoch = o.steps_per_epoch;
    cfg.hidden_sizes = parse_size_list(o.hidden, "--hidden");
    cfg.validate();
    const auto seeds = parse_seed_list(o.seeds);

    fs::create_directories(o.out_dir);
    nlohmann::json manifest;
    manifest["command"] = "train";
    manifest["config"] = config_json(cfg);
    manifest["dataset"] = {{"path", o.data},
                           {"fingerprint", file_fingerprint(o.data)},
                           {"samples", ds.samples()},
                           {"features", ds.features()},
                           {"standardized", !o.no_standardize}};
    manifest["seeds"] = seeds;
    manifest["runs"] = nlohmann::json::array();

    int failures = 0;
    for (std::uint64_t seed : seeds) {
        TrainConfig run_cfg = cfg;
        run_cfg.seed = seed;
        const auto t0 = std::chrono::steady_clock::now();
        nlohmann::json run{{"seed", seed}};
        try {
            const TrainResult res = train(run_cfg, ds);
            const fs::path model_path = fs::path(o.out_dir) / ("model_seed" + std::to_string(seed) + ".json");
            const fs::path trace_path = fs::path(o.out_dir) / ("trace_seed" + std::to_string(seed) + ".csv");
            save_model(model_path.string(), res.model, ds.features(), ds.samples());
            std::ostringstream trace;
            write_trace_csv(res.trace, trace);
            write_text(trace_path, trace.str());
            run["status"] = "ok";
            run["model"] = model_path.string();
            run["trace"] = trace_path.string();
            run["final_quantization_error"] = res.trace.back().quantization_error;
            std::cout << "seed " << seed << ": Q=" << res.trace.back().quantization_error
                      << " valid=" << res.trace.back().valid_prototypes << '\n';
        } catch (const std::exception& e) {
            ++failures;
            run["status"] = "failed";
            run["error"] = e.what();
            std::cerr << "seed " << seed << " failed: " << e.what() << '\n';
        }
        run["wall_clock_s"] = seconds_since(t0);
        manifest["runs"].push_back(std::move(run));
    }
    write_file_atomic(fs::path(o.out_dir) / "manifest.json", manifest.dump(2) + "\n");
    if (failures > 0) std::cerr << failures << " of " << seeds.size() << " runs failed\n";
    return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct ModelOnData {
    Dataset ds;
    PrototypeSet ps;
};

ModelOnData load_model_on_data(const std::string& data, const std::string& model_path, bool no_standardize) {
    ModelOnData out{load_dataset(data, !no_standardize), {}};
    const LoadedModel lm = load_model(model_path);
    if (lm.d != out.ds.features())
        throw DimensionError("model expects " + std::to_string(lm.d) + " features, data has " +
                             std::to_string(out.ds.features()));
    if (architecture_of(lm.model) != Architecture::gbc && lm.n != out.ds.samples())
        throw DimensionError("dual model expects " + std::to_string(lm.n) + " samples, data has " +
                             std::to_string(out.ds.samples()));
    out.ps.P = model_prototypes(lm.model, out.ds.X);
    out.ps.mask = chl_edges(out.ds.X, out.ps.P);
    return out;
}

int run_eval(const std::string& data, const std::string& model, bool no_standardize) {
    const auto m = load_model_on_data(data, model, no_standardize);
    write_report(evaluate(m.ds.X, m.ds.labels, m.ps), std::cout);
    return 0;
}

int run_plot(const std::string& data, const std::string& model, const std::string& out, bool no_standardize) {
    const auto m = load_model_on_data(data, model, no_standardize);
    if (m.ds.features() != 2)
        throw DimensionError("plot needs 2-D data, got " + std::to_string(m.ds.features()) +
                             " features; use the trace CSV from `train` instead");
    write_text(out, render_svg(m.ds.X, m.ds.labels, m.ps, prune(m.ds.X, m.ps)));
    std::cout << "wrote " << out << '\n';
    return 0;
}

// ---------------------------------------------------------------------------

struct SweepOptions {
    std::string nf_list = "1000";
    std::string ns_list = "100";
    std::string archs = "gbc,dgbc,deep_dgbc";
    std::string seeds = "0..9";
    std::size_t epochs = 400;
    double lambda = 0.01;
    std::string hidden = "10,10";
    std::optional<double> lr_base;
    std::optional<double> lr_dual;
    std::size_t steps_per_epoch = 0;
    std::size_t clusters_per_class = defaults::clusters_per_class;
    double class_sep = defaults::class_sep;
    std::uint64_t data_seed = 0;
    std::string out;
};

int run_sweep(const SweepOptions& o) {
    const auto nfs = parse_size_list(o.nf_list, "--nf-list");
    const auto nss = parse_size_list(o.ns_list, "--ns-list");
    if (nfs.empty() || nss.empty()) throw CLI::ValidationError("--nf-list/--ns-list", "empty list");
    std::vector<Architecture> archs;
    std::stringstream ss(o.archs);
    for (std::string a; std::getline(ss, a, ',');)
        if (!a.empty()) archs.push_back(parse_architecture(a));
    const auto seeds = parse_seed_list(o.seeds);
    const auto hidden = parse_size_list(o.hidden, "--hidden");

    std::ostringstream csv;
    csv << "nf,ns,arch,seed,accuracy,runtime_s\n";
    int failures = 0;
    for (std::size_t nf : nfs) {
        for (std::size_t ns : nss) {
            Rng data_rng(o.data_seed);
            const Dataset ds = standardize(gen_hypercube_clusters(ns, nf, o.clusters_per_class, o.class_sep, data_rng));
            const std::size_t k = std::max<std::size_t>(2, ns / 10);
            for (Architecture arch : archs) {
                TrainConfig cfg = TrainConfig::defaults(arch);
                cfg.k = k;
                cfg.epochs = o.epochs;
                cfg.lambda = o.lambda;
                cfg.hidden_sizes = hidden;
                cfg.steps_per_epoch = o.steps_per_epoch;
                cfg.lr = arch == Architecture::gbc ? o.lr_base.value_or(kBaseLearningRate)
                                                   : o.lr_dual.value_or(scaled_dual_learning_rate(ns, nf));
                double sum = 0.0;
                std::size_t ok = 0;
                for (std::uint64_t seed : seeds) {
                    cfg.seed = seed;
                    const auto t0 = std::chrono::steady_clock::now();
                    csv << nf << ',' << ns << ',' << to_string(arch) << ',' << seed << ',';
                    try {
                        const TrainResult res = train(cfg, ds);
                        const double acc = cluster_accuracy(prune(ds.X, res.prototypes), ds.labels);
                        sum += acc;
                        ++ok;
                        csv << detail::format_double(acc);
                    } catch (const std::exception& e) {
                        ++failures;
                        csv << "failed";
                        std::cerr << "nf=" << nf << " ns=" << ns << " arch=" << to_string(arch) << " seed=" << seed
                                  << " failed: " << e.what() << '\n';
                    }
                    csv << ',' << detail::format_double(seconds_since(t0)) << '\n';
                }
                std::cout << "nf=" << nf << " ns=" << ns << " k=" << k << " arch=" << to_string(arch)
                          << " mean_accuracy=" << detail::format_double(ok ? sum / static_cast<double>(ok) : 0.0) << " (" << ok << "/"
                          << seeds.size() << " runs)\n";
            }
        }
    }
    write_text(o.out, csv.str());
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gradient-based competitive and topological clustering"};
    app.require_subcommand(1);

    GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic dataset as CSV");
    gen_cmd->add_option("name", gen.name, "spiral | moons | circles | hypercube")->required();
    gen_cmd->add_option("--n", gen.n, "Samples (spiral, moons, circles)");
    gen_cmd->add_option("--noise", gen.noise, "Gaussian noise sd (default 0.02 spiral, 0.05 moons/circles)");
    gen_cmd->add_option("--factor", gen.factor, "Inner radius for circles");
    gen_cmd->add_option("--ns", gen.ns, "Samples (hypercube)");
    gen_cmd->add_option("--nf", gen.nf, "Features (hypercube)");
    gen_cmd->add_option("--clusters-per-class", gen.clusters_per_class, "Hypercube clusters per class");
    gen_cmd->add_option("--class-sep", gen.class_sep, "Hypercube vertex half-width");
    gen_cmd->add_option("--seed", gen.seed, "Random seed");
    gen_cmd->add_option("--out", gen.out, "Output CSV path")->required();

    TrainOptions tr;
    auto* train_cmd = app.add_subcommand("train", "Train one model per seed");
    train_cmd->add_option("--data", tr.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--arch", tr.arch, "gbc | dgbc | deep_dgbc");
    train_cmd->add_option("--k", tr.k, "Number of prototypes");
    train_cmd->add_option("--lr", tr.lr, "Learning rate (default 0.008 gbc, 0.0008 dual)");
    train_cmd->add_option("--lambda", tr.lambda, "Edge-norm multiplier");
    train_cmd->add_option("--epochs", tr.epochs, "Epochs");
    train_cmd->add_option("--seeds", tr.seeds, "Seeds, e.g. 0..9 or 1,4,7");
    train_cmd->add_option("--hidden", tr.hidden, "Hidden widths for deep_dgbc, e.g. 10,10");
    train_cmd->add_option("--steps-per-epoch", tr.steps_per_epoch, "Gradient steps per epoch (0 = ceil(n/32))");
    train_cmd->add_option("--out-dir", tr.out_dir, "Output directory")->required();
    train_cmd->add_flag("--no-standardize", tr.no_standardize, "Train on raw features");

    std::string eval_data, eval_model;
    bool eval_raw = false;
    auto* eval_cmd = app.add_subcommand("eval", "Prune, find components and report accuracy");
    eval_cmd->add_option("--data", eval_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--model", eval_model, "Model JSON")->required()->check(CLI::ExistingFile);
    eval_cmd->add_flag("--no-standardize", eval_raw, "Data was not standardized for training");

    std::string plot_data, plot_model, plot_out;
    bool plot_raw = false;
    auto* plot_cmd = app.add_subcommand("plot", "Render a 2-D solution as SVG");
    plot_cmd->add_option("--data", plot_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
    plot_cmd->add_option("--model", plot_model, "Model JSON")->required()->check(CLI::ExistingFile);
    plot_cmd->add_option("--out", plot_out, "Output SVG path")->required();
    plot_cmd->add_flag("--no-standardize", plot_raw, "Data was not standardized for training");

    SweepOptions sw;
    auto* sweep_cmd = app.add_subcommand("sweep", "Hypercube accuracy over feature/sample counts (k = ns/10)");
    sweep_cmd->add_option("--nf-list", sw.nf_list, "Feature counts, e.g. 1000,2000,3000");
    sweep_cmd->add_option("--ns-list", sw.ns_list, "Sample counts, e.g. 100,1000");
    sweep_cmd->add_option("--archs", sw.archs, "Architectures");
    sweep_cmd->add_option("--seeds", sw.seeds, "Seeds");
    sweep_cmd->add_option("--epochs", sw.epochs, "Epochs");
    sweep_cmd->add_option("--lambda", sw.lambda, "Edge-norm multiplier");
    sweep_cmd->add_option("--hidden", sw.hidden, "Hidden widths for deep_dgbc");
    sweep_cmd->add_option("--lr-base", sw.lr_base, "GBC learning rate (default 0.008)");
    sweep_cmd->add_option("--lr-dual", sw.lr_dual, "Dual learning rate (default 0.8/(ns*nf))");
    sweep_cmd->add_option("--steps-per-epoch", sw.steps_per_epoch, "Gradient steps per epoch (0 = ceil(n/32))");
    sweep_cmd->add_option("--clusters-per-class", sw.clusters_per_class, "Hypercube clusters per class");
    sweep_cmd->add_option("--class-sep", sw.class_sep, "Hypercube vertex half-width");
    sweep_cmd->add_option("--data-seed", sw.data_seed, "Seed for dataset generation");
    sweep_cmd->add_option("--out", sw.out, "Summary CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen_cmd) return run_gen(gen);
        if (*train_cmd) return run_train(tr);
        if (*eval_cmd) return run_eval(eval_data, eval_model, eval_raw);
        if (*plot_cmd) return run_plot(plot_data, plot_model, plot_out, plot_raw);
        if (*sweep_cmd) return run_sweep(sw);
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
