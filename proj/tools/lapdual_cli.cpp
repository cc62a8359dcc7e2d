// Command-line runner: run / list / validate / show.

#include "lapdual/runner.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

using namespace lapdual;

namespace {

// A path on disk, else a catalog name.
ExperimentConfig resolve(const std::string& where, const std::vector<std::string>& overrides) {
    if (!std::filesystem::exists(where))
        if (const auto* entry = find_in_catalog(where)) return parse_config(dump_config(*entry), overrides);
    return load_config(where, overrides);
}

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
    }
    return kExitConfigError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Laplace duality simulation and verification runner"};
    app.require_subcommand(1);

    std::string config;
    std::vector<std::string> overrides;
    bool plot = false;

    auto* run = app.add_subcommand("run", "run an experiment config (file path or catalog name)");
    run->add_option("config", config, "config file or catalog name")->required();
    run->add_option("--set", overrides, "override a config key, e.g. --set sim.seed=7");
    run->add_flag("--plot", plot, "also write <prefix>_plot.svg");

    auto* list = app.add_subcommand("list", "list the built-in acceptance configs");

    auto* validate = app.add_subcommand("validate", "parse and validate a config without running it");
    validate->add_option("config", config, "config file or catalog name")->required();
    validate->add_option("--set", overrides, "override a config key");

    auto* show = app.add_subcommand("show", "print a config as JSON after overrides");
    show->add_option("config", config, "config file or catalog name")->required();
    show->add_option("--set", overrides, "override a config key");

    CLI11_PARSE(app, argc, argv);

    if (*list) {
        for (const auto& c : catalog()) std::cout << c.name << "  [" << experiment_name(c.experiment) << "]  " << c.description << '\n';
        return kExitPass;
    }
    if (*validate) {
        return guarded([&] {
            const auto c = resolve(config, overrides);
            std::cout << c.name << ": ok\n";
            return kExitPass;
        });
    }
    if (*show) {
        return guarded([&] {
            std::cout << dump_config(resolve(config, overrides));
            return kExitPass;
        });
    }
    return guarded([&] {
        const auto c = resolve(config, overrides);
        const RunOutcome outcome = run_experiment(c, plot);
        for (const auto& path : write_outcome(c, outcome)) std::cerr << "wrote " << path << '\n';
        std::cout << outcome.summary;
        return outcome.pass ? kExitPass : kExitStatFail;
    });
}
