#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ellopt/config.hpp"

namespace ellopt {

enum ExitCode : int {
  exit_ok = 0,
  exit_failed_check = 1,
  exit_config = 2,
  exit_solver = 3,
  exit_io = 4,
};

struct CheckLine {
  std::string criterion;
  bool pass = false;
  std::string detail;
};

struct RunResult {
  int exit_code = exit_ok;
  std::filesystem::path output_dir;
  std::string summary;            ///< contents of summary.txt
  std::vector<CheckLine> checks;  ///< acceptance lines of named presets
  std::string error;              ///< set for exit codes 2, 3, 4
};

/// Output directory used when cfg.output_dir is empty.
std::filesystem::path default_output_dir(const ExperimentConfig& cfg);

/// Validates, solves, and writes fields (CSV and VTK), config.toml, and
/// summary.txt. Presets whose name matches a known preset also get PASS/FAIL
/// lines. Never throws; failures map to the exit codes above, and a failed
/// PASS/FAIL line on an otherwise clean run gives exit_failed_check.
RunResult run(const ExperimentConfig& cfg);

}  // namespace ellopt
