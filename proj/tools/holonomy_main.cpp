#include "holonomy/errors.hpp"
#include "holonomy/experiments.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <variant>

namespace {

using holonomy::ExperimentConfig;

struct CommonOptions {
    std::string out_dir;
    std::size_t samples = 0;
    bool emit_svg = false;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

std::string short_number(const holonomy::Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", *d);
        return buf;
    }
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    if (const auto* s = std::get_if<std::string>(&c)) return *s;
    return {};
}

void print_row(const holonomy::ResultTable& t, std::size_t r) {
    std::string line = "[" + std::to_string(r) + "]";
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        const std::string v = short_number(t.rows[r][i]);
        if (!v.empty()) line += " " + t.header[i] + "=" + v;
    }
    std::cout << line << '\n';
}

void apply(const CommonOptions& o, ExperimentConfig& cfg) {
    if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
    if (o.samples != 0) {
        if (o.samples < holonomy::kMinLoopSamples) {
            throw holonomy::Error(holonomy::ErrorKind::ConfigInvalid, "--samples must be at least 16");
        }
        cfg.numerics.n_samples = o.samples;
    }
    if (o.emit_svg) cfg.emit_svg = true;
    if (o.seed_given) cfg.seed = o.seed;
}

int execute(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const holonomy::ResultTable table = holonomy::run_experiment(cfg, print_row);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const holonomy::RunFiles files = holonomy::write_outputs(cfg, table, elapsed);
    std::cout << "wrote " << files.csv;
    if (!files.svg.empty()) std::cout << ", " << files.svg;
    std::cout << ", " << files.meta << '\n';
    return 0;
}

int report(const std::string& kind, const std::string& message, int code) {
    nlohmann::json rec = {{"error", kind}, {"message", message}};
    std::cerr << rec.dump() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Berry phases and Hannay angles by loop holonomy"};
    app.require_subcommand(1);
    CommonOptions opts;
    auto* seed = app.add_option("--seed", opts.seed, "Seed for randomized helpers (recorded in run_meta.json)");

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", opts.out_dir, "Output directory");
        sub->add_option("--samples", opts.samples, "Loop samples per period");
        sub->add_flag("--emit-svg", opts.emit_svg, "Also write an SVG chart");
    };

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
    run->add_option("config", config_path, "Config file")->required();
    add_common(run);

    auto* fig1 = app.add_subcommand("fig1", "Ground-state Berry phase against coupling K");
    add_common(fig1);
    auto* fig2 = app.add_subcommand("fig2", "Hannay-angle coupling correction against K");
    add_common(fig2);

    std::string oracle_kind;
    double slowness = 1000.0;
    auto* oracle = app.add_subcommand("oracle", "Time-domain adiabatic oracle against quadrature");
    oracle->add_option("kind", oracle_kind, "quantum or classical")
        ->required()
        ->check(CLI::IsMember({"quantum", "classical"}));
    oracle->add_option("--slowness", slowness, "Time dilation of the loop")->check(CLI::PositiveNumber);
    add_common(oracle);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    opts.seed_given = seed->count() > 0;

    try {
        ExperimentConfig cfg;
        if (run->parsed()) {
            cfg = holonomy::load_config(config_path);
        } else if (fig1->parsed()) {
            cfg = holonomy::figure_config(holonomy::Experiment::Fig1);
        } else if (fig2->parsed()) {
            cfg = holonomy::figure_config(holonomy::Experiment::Fig2);
        } else {
            cfg.experiment = oracle_kind == "quantum" ? holonomy::Experiment::OracleQuantum
                                                      : holonomy::Experiment::OracleClassical;
            cfg.numerics.slowness = slowness;
            if (cfg.experiment == holonomy::Experiment::OracleClassical) {
                cfg.model.standard.epsilon = std::sqrt(3.0) / 2.0;
            }
        }
        apply(opts, cfg);
        return execute(cfg);
    } catch (const holonomy::Error& e) {
        const int code = e.kind() == holonomy::ErrorKind::ConfigInvalid ? 2 : 3;
        return report(std::string(holonomy::to_string(e.kind())), e.what(), code);
    } catch (const std::exception& e) {
        return report("InternalError", e.what(), 4);
    }
}
