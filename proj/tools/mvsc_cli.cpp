#include "mvsc/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    using namespace mvsc;
    CLI::App app{"Maxwell inverse medium scattering: forward solves, CGO, source-condition checks and inversion"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config, out;
    std::uint64_t seed = 0;
    int threads = 0;
    app.add_option("--config", config, "INI experiment configuration")->check(CLI::ExistingFile);
    app.add_option("--out", out, "output directory (overrides the config)");
    app.add_option("--seed", seed, "random seed (overrides the config)");
    app.add_option("--threads", threads, "worker threads (overrides the config)")->check(CLI::PositiveNumber);

    const std::vector<std::pair<std::string, std::string>> subs{
        {"forward", "solve one scattering problem and store the fields"},
        {"nearfield", "near-field data on the measurement spheres"},
        {"farfield", "far-field pattern data"},
        {"cgo", "complex geometrical optics pair for one frequency"},
        {"vsc-check", "fit the variational source condition over a family"},
        {"invert", "Tikhonov reconstruction from synthetic or stored data"},
        {"rates", "convergence-rate study over a noise sweep"},
        {"near2far", "near field from far-field coefficients against direct data"}};
    for (const auto& [name, help] : subs) app.add_subcommand(name, help);

    CLI11_PARSE(app, argc, argv);

    try {
        const std::string name = app.get_subcommands().front()->get_name();
        ExperimentConfig cfg = config.empty() ? parse_config("") : load_config(config);
        cfg.kind = parse_experiment(name);
        if (!out.empty()) cfg.out = out;
        if (app.count("--seed")) cfg.seed = seed;
        if (threads > 0) cfg.threads = threads;
        const RunResult r = run_experiment(cfg);
        std::cout << r.summary.dump(2) << "\n" << "manifest: " << r.manifest.string() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
