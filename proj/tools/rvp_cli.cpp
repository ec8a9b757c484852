#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rvp/errors.hpp"
#include "rvp/experiment.hpp"
#include "rvp/parallel.hpp"

namespace {

struct Flags {
    std::string config;
    std::string out;
    int threads = 0;
    std::uint64_t seed = 0;
    bool dry_run = false;
    CLI::Option* seed_opt = nullptr;
};

int run(const std::string& command, const Flags& flags)
{
    auto cfg = flags.config.empty() ? rvp::ExperimentConfig{} : rvp::ExperimentConfig::load(flags.config);
    if (!flags.out.empty()) cfg.out_dir = flags.out;
    if (flags.threads > 0) cfg.threads = flags.threads;
    if (flags.seed_opt && flags.seed_opt->count() > 0) cfg.seed = flags.seed;
    cfg.validate();
    rvp::set_thread_count(cfg.threads);
    if (flags.dry_run) {
        std::cout << command << ": config ok, hash " << cfg.hash() << '\n';
        return rvp::kExitOk;
    }
    if (command == "steady") return rvp::cmd_steady(cfg);
    if (command == "evolve") return rvp::cmd_evolve(cfg);
    if (command == "gamma-study") return rvp::cmd_gamma_study(cfg);
    if (command == "kandrup") return rvp::cmd_kandrup(cfg);
    return rvp::cmd_verify(cfg);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spherically symmetric relativistic Vlasov-Poisson laboratory"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(rvp::kVersion));
    Flags flags;
    const std::pair<const char*, const char*> commands[] = {
        {"steady", "steady-state atlas over (k, u0, gamma)"},
        {"evolve", "evolve a steady, perturbed or cold-shell initial state"},
        {"gamma-study", "convergence of the potential as gamma -> 0"},
        {"kandrup", "Kandrup-type bound on seeded random test functions"},
        {"verify", "run the acceptance criteria"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", flags.config, "JSON experiment config")->check(CLI::ExistingFile);
        sub->add_option("--out", flags.out, "output directory");
        sub->add_option("--threads", flags.threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--seed", flags.seed, "seed for randomized test functions");
        sub->add_flag("--dry-run", flags.dry_run, "validate the config and exit");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : rvp::kExitConfig;
    }
    auto* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();
    flags.seed_opt = sub->get_option("--seed");
    try {
        return run(command, flags);
    } catch (const rvp::ConfigError& e) {
        std::cerr << command << ": config error: " << e.what() << '\n';
        return rvp::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << command << ": " << e.what() << '\n';
        return rvp::kExitNumerical;
    }
}
