#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "glyco/retro.hpp"
#include "glyco/stats.hpp"
#include "glyco/trial.hpp"

namespace glyco {

inline constexpr int kReportSchemaVersion = 1;

/// Library version string.
const char* version();

/// Lower-case hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Current UTC time as ISO 8601.
std::string utc_timestamp();

/// Writes `contents` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

struct RunManifest {
  std::string command;
  std::string config_path;
  std::string config_sha256;
  std::uint64_t root_seed = 0;
  std::string version;
  std::string started_at;
  std::vector<std::string> outputs;  ///< file names relative to the output directory
};

void write_manifest(const std::filesystem::path& out_dir, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

struct TrialReportInfo {
  std::uint64_t root_seed = 0;
  std::string config_sha256;
  int n_patients = 0;
  int m_schedules = 0;
};

/// summary.json, boxplot_data.csv and records.json for a simulated trial.
std::vector<std::string> trial_report_files();
void write_trial_report(const std::filesystem::path& out_dir, const TrialResult& result,
                        const std::vector<PairedSummary>& summaries, const TrialReportInfo& info);

/// Parses the per-protocol summaries back out of summary.json.
std::vector<PairedSummary> read_summary(const std::filesystem::path& path);

/// events.csv and table4_counts.csv for retrospective replays.
std::vector<std::string> retro_report_files();
void write_retro_report(const std::filesystem::path& out_dir, const std::vector<RetroResult>& results);

}  // namespace glyco
