// Batch CLI: generate | stats | centrality | simulate | evaluate | gbt | all
#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "mlepi/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"multiplex-network epidemic pipeline"};
    app.require_subcommand(1);

    mlepi::RunOptions opts;
    std::string subcommand;

    for (const char* name : {"generate", "stats", "centrality", "simulate",
                             "evaluate", "gbt", "all"}) {
        auto* sub = app.add_subcommand(name);
        sub->callback([&subcommand, name] { subcommand = name; });
        sub->add_option("--config", opts.config_path, "pipeline config file");
        sub->add_option("--seed", opts.seed, "master seed (overrides run.master_seed)")
            ->each([&opts](const std::string&) { opts.seed_set = true; });
        sub->add_option("--threads", opts.threads, "worker cap")
            ->each([&opts](const std::string&) { opts.threads_set = true; });
        sub->add_option("--output", opts.output_dir, "output directory")
            ->each([&opts](const std::string&) { opts.output_set = true; });
        sub->add_option("--set", opts.overrides,
                        "config override, section.key=value (repeatable)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : mlepi::exit_config_error;
    }

    return mlepi::run_pipeline(subcommand, opts, std::cout);
}
