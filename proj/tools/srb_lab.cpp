#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "srb/runner.hpp"
#include "srb/systems.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int workers = 0;
    std::string out_dir;
};

void attach_common(CLI::App* cmd, CommonFlags* flags) {
    cmd->add_option("--config", flags->config_path, "experiment config JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", flags->seed, "RNG seed (overrides config)")
        ->envname("SRB_LAB_SEED");
    cmd->add_option("--workers", flags->workers, "worker count (overrides config)")
        ->envname("SRB_LAB_WORKERS");
    cmd->add_option("--out", flags->out_dir, "output directory (overrides config)")
        ->envname("SRB_LAB_OUT");
}

int run_kind(const std::string& kind, const CommonFlags& flags, const CLI::App* cmd) {
    nlohmann::json raw;
    {
        std::ifstream in(flags.config_path);
        if (!in) {
            std::cerr << "cannot read config file: " << flags.config_path << "\n";
            return 2;
        }
        try {
            in >> raw;
        } catch (const std::exception& e) {
            std::cerr << "config parse error: " << e.what() << "\n";
            return 2;
        }
    }

    srb::ExperimentConfig cfg = srb::ExperimentConfig::from_json(raw);
    cfg.kind = kind; // the subcommand pins the experiment kind
    if (cmd->count("--seed") > 0) {
        cfg.seed = flags.seed;
        cfg.has_seed = true;
    }
    if (cmd->count("--workers") > 0) cfg.workers = flags.workers;
    if (cmd->count("--out") > 0) cfg.out_dir = flags.out_dir;

    int code = srb::run(cfg);
    if (code != 0) {
        std::cerr << "run failed with exit code " << code
                  << "; see manifest.json in " << cfg.out_dir << "\n";
    }
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"srb-lab: numerical laboratory for SRB/physical measures"};
    app.require_subcommand(1);

    std::vector<std::pair<CLI::App*, CommonFlags>> commands;
    commands.reserve(srb::experiment_kinds().size());
    for (const std::string& kind : srb::experiment_kinds()) {
        CLI::App* cmd = app.add_subcommand(kind, "run a " + kind + " experiment");
        commands.emplace_back(cmd, CommonFlags{});
    }
    for (std::size_t i = 0; i < commands.size(); ++i) {
        attach_common(commands[i].first, &commands[i].second);
    }

    CLI::App* list_cmd =
        app.add_subcommand("list-systems", "print known systems and their schemas");

    CLI11_PARSE(app, argc, argv);

    if (list_cmd->parsed()) {
        std::cout << srb::list_systems().dump(2) << "\n";
        return 0;
    }
    for (std::size_t i = 0; i < commands.size(); ++i) {
        if (commands[i].first->parsed()) {
            return run_kind(srb::experiment_kinds()[i], commands[i].second,
                            commands[i].first);
        }
    }
    return 2;
}
