#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace glyco::cli;
  spdlog::set_default_logger(spdlog::stderr_color_mt("glyco"));
  spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");

  CLI::App app{"Glycemic control trials: MSG-model LQG controller versus table protocols"};
  app.require_subcommand(1);
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run the simulated trial for every configured protocol");
  simulate->add_option("--config", sim.config, "Trial config (TOML)")->required();
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_option("--jobs", sim.jobs, "Worker threads (default: available cores)");
  simulate->add_option("--seed", sim.seed, "Root seed, overrides the config");
  simulate->add_option("--protocol", sim.protocols, "Protocol file(s), override the config");

  RetroArgs retro;
  auto* retro_cmd = app.add_subcommand("retro", "Replay recorded patients and classify advice before adverse events");
  retro_cmd->add_option("--data", retro.data, "Directory with bg.csv, insulin.csv, nutrition.csv")->required();
  retro_cmd->add_option("--protocol", retro.protocols, "Protocol file(s)")->required();
  retro_cmd->add_option("--out", retro.out, "Output directory")->required();
  retro_cmd->add_option("--config", retro.config, "Retro settings (TOML)");
  retro_cmd->add_option("--jobs", retro.jobs, "Worker threads (default: available cores)");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the stochastic glucose model to one patient and print JSON");
  fit_cmd->add_option("--bg", fit.bg, "BG CSV")->required();
  fit_cmd->add_option("--insulin", fit.insulin, "Insulin CSV")->required();
  fit_cmd->add_option("--nutrition", fit.nutrition, "Nutrition CSV");
  fit_cmd->add_option("--window", fit.window, "Hours from the first measurement to fit on")->capture_default_str();
  fit_cmd->add_option("--seed", fit.seed, "Restart seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);
  if (quiet) spdlog::set_level(spdlog::level::warn);

  if (*simulate) return cmd_simulate(sim);
  if (*retro_cmd) return cmd_retro(retro);
  return cmd_fit(fit);
}
