#pragma once

#include <string>
#include <vector>

#include "config.h"
#include "json.hpp"
#include "spdekit/admissibility.h"
#include "spdekit/common.h"

namespace spdekit::cli {

enum ExitCode {
  kExitOk = 0,
  kExitNumeric = 1,
  kExitConfig = 2,
  kExitInadmissible = 3,
};

int ExitCodeFor(ErrorCode code);

const std::vector<std::string>& CommandNames();

struct RunResult {
  int exit_code = kExitOk;
  std::string message;
  std::vector<std::string> files;  // written, manifest last
};

// Runs one subcommand and writes <out>/<command>*.csv, <command>.json and
// <command>.manifest.json. Module errors are caught and mapped to exit codes.
RunResult Run(const std::string& command, const ExperimentConfig& config);

nlohmann::json AdmissibilityJson(const AdmissibilityReport& report);

}  // namespace spdekit::cli
