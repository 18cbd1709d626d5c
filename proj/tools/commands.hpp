#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace glyco::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kRuntimeError = 3 };

struct SimulateArgs {
  std::string config;
  std::string out;
  unsigned jobs = 0;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> protocols;  ///< overrides the config's list when non-empty
};

struct RetroArgs {
  std::string data;
  std::vector<std::string> protocols;
  std::string out;
  std::string config;  ///< optional retro settings
  unsigned jobs = 0;
};

struct FitArgs {
  std::string bg;
  std::string insulin;
  std::string nutrition;
  double window = 24.0;
  std::optional<std::uint64_t> seed;
};

int cmd_simulate(const SimulateArgs& args);
int cmd_retro(const RetroArgs& args);
int cmd_fit(const FitArgs& args);

}  // namespace glyco::cli
