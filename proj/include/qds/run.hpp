#pragma once

// Command dispatch for the qds tool.

#include "qds/report.hpp"
#include "qds/scenario.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace qds::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInconclusive = 2;

struct RunOptions {
  std::string command;  // simulate, stationary, certify, distance, lasalle, reproduce
  std::string target;   // reproduce: example1, example2, example3, all
  std::filesystem::path scenario;
  std::filesystem::path out = ".";
  Overrides overrides;
};

struct RunResult {
  int exit_code = kExitOk;
  Report report;
};

/// Location of the shipped example scenarios.
std::filesystem::path scenario_dir();

/// Runs one command and writes its artifacts under options.out. Module
/// errors propagate as exceptions.
RunResult execute(const RunOptions& options);

/// execute() with errors reported on `err` and mapped to exit code 1.
int run(const RunOptions& options, std::ostream& err);

}  // namespace qds::cli
