#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "crmac/csv.hpp"
#include "crmac/experiments.hpp"

namespace crmac {

/// Exit statuses of the command-line front end.
enum ExitStatus : int {
  kExitOk = 0,
  kExitFailure = 1,  ///< a row failed or a comparison exceeded tolerance
  kExitUsage = 2,    ///< bad arguments or invalid parameters
};

/// Runs `crmac <subcommand> ...` with `args` excluding the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

CsvTable sweep_table(const SweepResult& result);
CsvTable validation_table(const ValidationReport& report);

/// key = value lines ('#' and ';' start comments) as --key=value tokens.
std::vector<std::string> config_file_tokens(const std::string& path);

}  // namespace crmac
