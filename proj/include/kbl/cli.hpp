#pragma once

#include <kbl/config.hpp>

#include <iosfwd>
#include <optional>
#include <string>

namespace kbl {

struct CliOptions {
    std::string command;
    std::string config_path; // empty: built-in defaults
    std::optional<uint64_t> seed;
    std::string out_dir = ".";
    bool dry_run = false;
};

// Dispatch a subcommand.  Returns 0 when all of the command's checks pass
// and 1 when one fails; configuration and numeric problems are thrown.
int run_command(const CliOptions& opts, std::ostream& log);

// run_command plus the exit-code contract: 0 ok, 1 check failed,
// 2 config error, 3 numeric error.
int cli_main(const CliOptions& opts, std::ostream& log, std::ostream& err);

// Worker count after the KBL_WORKERS environment override.
int resolve_workers(int configured);

} // namespace kbl
