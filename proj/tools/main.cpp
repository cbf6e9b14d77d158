#include <CLI11.hpp>

#include "dualtake/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"dualtake: cross-mobility takeover prediction workbench"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool have_seed = false;
    bool overwrite = false;

    const char* commands[] = {"generate", "extract",  "train",
                              "evaluate", "report", "manifest"};
    const char* descriptions[] = {
        "synthesize the session cohort",
        "extract labeled feature windows from sessions",
        "train forest, MLP, and TrAdaBoost models",
        "run the grouped cross-domain evaluation",
        "render the human-readable summary and plot tables",
        "write the feature layout manifest"};

    std::vector<CLI::App*> subs;
    for (int i = 0; i < 6; ++i) {
        CLI::App* sub = app.add_subcommand(commands[i], descriptions[i]);
        sub->add_option("--config", config_path, "run configuration (JSON)")
            ->required();
        sub->add_option("--out", out_dir, "output directory")->required();
        sub->add_option("--seed", seed, "override cohort.master_seed")
            ->each([&](const std::string&) { have_seed = true; });
        sub->add_flag("--overwrite", overwrite, "clobber existing outputs");
        subs.push_back(sub);
    }

    CLI11_PARSE(app, argc, argv);

    dualtake::runner::RunOptions opt;
    opt.out_dir = out_dir;
    opt.overwrite = overwrite;
    if (have_seed) opt.seed_override = seed;

    for (int i = 0; i < 6; ++i) {
        if (subs[i]->parsed()) {
            return dualtake::runner::run_command(commands[i], config_path, opt);
        }
    }
    return dualtake::runner::kRuntimeFailure;
}
