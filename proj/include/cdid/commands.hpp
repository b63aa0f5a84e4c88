#pragma once

#include <ostream>

#include "cdid/config.hpp"

namespace cdid {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumeric = 4,
};

// Command bodies. They write artifacts under config.out, print a short
// report to `log`, and throw ConfigError / DataError / NumericError.
void cmd_estimate(const RunConfig& config, std::ostream& log);
void cmd_band(const RunConfig& config, std::ostream& log);
void cmd_simulate(const RunConfig& config, std::ostream& log);
void cmd_probe(const RunConfig& config, std::ostream& log);

// Dispatches on config.command and maps exceptions to exit codes, printing
// "error: ..." to `err`.
int run_command(const RunConfig& config, std::ostream& log, std::ostream& err);

}  // namespace cdid
