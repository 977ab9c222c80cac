#include <kbl/cli.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"killed Brownian particle system: simulation, limits, rate certificates"};
    app.require_subcommand(1);

    struct Cmd {
        const char* name;
        const char* help;
    };
    const Cmd cmds[] = {
        {"lln-check", "compare replica mass paths against the deterministic limit"},
        {"simulate", "run the particle system and write mass/kill-time records"},
        {"fixed-point", "solve the self-consistent hazard for a sampled path law"},
        {"rate-frontier", "cost/observable certificates for a control family"},
        {"laplace-compare", "Monte Carlo Laplace functional vs variational upper bound"},
        {"varrep-check", "single-particle variational identity on quadrature"},
    };

    kbl::CliOptions opts;
    uint64_t seed = 0;
    bool seed_set = false;
    for (const Cmd& c : cmds) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("-c,--config", opts.config_path, "config file (defaults used if omitted)")
            ->check(CLI::ExistingFile);
        sub->add_option("-s,--seed", seed, "override run.seed")->each([&](const std::string&) {
            seed_set = true;
        });
        sub->add_option("-o,--out", opts.out_dir, "output directory for CSV files");
        sub->add_flag("--dry-run", opts.dry_run, "print the resolved plan and exit");
        sub->callback([&opts, name = c.name] { opts.command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    if (seed_set) opts.seed = seed;

    return kbl::cli_main(opts, std::cout, std::cerr);
}
