// Command line driver: one subcommand per experiment, configured by a JSON
// file or a named preset.
//
//   spdekit uniqueness --preset heat-m1 --out runs/heat --threads 4
//   spdekit admissible --config my.json
//
// Exit codes: 0 success, 1 numeric failure, 2 bad configuration, 3 the
// declared statement does not cover the configuration.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.h"
#include "config.h"

namespace {

std::string Join(const std::vector<std::string>& v) {
  std::string out;
  for (const std::string& s : v) out += (out.empty() ? "" : ", ") + s;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace spdekit::cli;
  CLI::App app{"Spectral Galerkin experiments for semilinear SPDEs"};
  std::string command, config_path, preset, out;
  uint64_t seed = 0;
  int threads = 0;
  bool dump = false;
  app.add_option("command", command, "one of: " + Join(CommandNames()))
      ->required();
  auto* config_opt = app.add_option("--config", config_path, "JSON config file");
  auto* preset_opt = app.add_option("--preset", preset,
                                    "named preset: " + Join(PresetNames()));
  config_opt->excludes(preset_opt);
  auto* out_opt = app.add_option("--out", out, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
  auto* threads_opt = app.add_option("--threads", threads, "worker count")
                          ->check(CLI::PositiveNumber);
  app.add_flag("--dump-config", dump, "print the resolved config and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  ExperimentConfig config;
  try {
    if (!config_path.empty()) {
      config = LoadConfig(config_path);
    } else if (!preset.empty()) {
      config = Preset(preset);
    } else {
      std::cerr << "error: give --config or --preset\n";
      return kExitConfig;
    }
    if (*out_opt) config.out = out;
    if (*seed_opt) config.seed = seed;
    if (*threads_opt) {
      config.threads = threads;
    } else if (std::getenv("SPDEKIT_THREADS") != nullptr) {
      config.threads = spdekit::DefaultThreadCount();
    }
    config.Validate();
  } catch (const spdekit::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ExitCodeFor(e.code());
  }

  if (dump) {
    std::cout << ToJson(config).dump(2) << '\n';
    return kExitOk;
  }
  const RunResult r = Run(command, config);
  for (const std::string& f : r.files) std::cout << f << '\n';
  if (r.exit_code != kExitOk) std::cerr << "error: " << r.message << '\n';
  return r.exit_code;
}
