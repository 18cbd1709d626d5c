#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "glyco/identification.hpp"
#include "glyco/lqg.hpp"
#include "glyco/virtual_patient.hpp"

namespace glyco {

inline constexpr int kConfigSchemaVersion = 1;

/// Which point of the protocol's target range the LQG arm tracks.
enum class TargetSelection { upper, midpoint, lower };

/// Piecewise-constant schedule generator: lognormal interval lengths, uniform rates.
struct ScheduleDistribution {
  IntervalDistribution interval;
  Bounds rate;
};

struct TrialConfig {
  int schema_version = kConfigSchemaVersion;
  int n_patients = 200;
  int m_schedules = 20;
  double ttw_hours = 24.0;
  double etw_hours = 24.0;
  std::uint64_t seed = 20240611;
  /// Protocol files, resolved against the config file's directory.
  std::vector<std::filesystem::path> protocol_paths;

  ControllerConfig controller;
  TargetSelection target = TargetSelection::upper;
  FitConfig fit;
  /// Restarts for refits after the first one, which warm-start from the previous estimate.
  int refit_restarts = 2;

  PatientBox patients;
  Bounds initial_bg{120.0, 220.0};
  SimOptions sim;

  IntervalDistribution measurement;
  double measurement_noise_sd = 2.0;

  ScheduleDistribution nutrition{{6.0, 0.5, 1.0, 24.0}, {1.0, 8.0}};
  ScheduleDistribution insulin{{3.0, 0.5, 0.5, 12.0}, {0.0, 6.0}};

  /// Throws ConfigError on inconsistent values.
  void validate() const;

  double t_end() const { return ttw_hours + etw_hours; }
  double lqg_target(double target_lo, double target_hi) const;
};

/// Settings for retrospective replay.
struct RetroConfig {
  ControllerConfig controller;
  FitConfig fit;
  double window_hours = 24.0;
  double rate_tolerance = 0.05;  ///< |a - b| <= tol counts as equal, U/hr
  bool include_mild = false;     ///< also evaluate events in the mild bands
  std::uint64_t seed = 7;

  void validate() const;
};

TrialConfig parse_trial_config(std::string_view toml_text, const std::filesystem::path& base_dir = {},
                               const std::string& source = "config");
TrialConfig load_trial_config(const std::filesystem::path& path);

RetroConfig parse_retro_config(std::string_view toml_text, const std::string& source = "config");
RetroConfig load_retro_config(const std::filesystem::path& path);

}  // namespace glyco
