#pragma once

#include <exception>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "boocap/pipeline/config.hpp"

namespace boocap::pipeline {

struct Invocation {
  std::string command;
  Config config;  // file, flags and overrides already applied
  bool force = false;
  /// Command-specific options, e.g. {"kind", "frequency"} for `repr`.
  std::map<std::string, std::string> options;
};

const std::vector<std::string>& command_names();

/// Runs one subcommand against the output directory `paths.out`. Progress and
/// warnings go to `log`; errors are thrown.
void run_command(const Invocation& inv, std::ostream& log);

/// 2 for configuration errors, 3 for invalid data, 4 for numeric failures, 1 otherwise.
int exit_code(const std::exception& e);

}  // namespace boocap::pipeline
