#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "glyco/config.hpp"
#include "glyco/protocol.hpp"
#include "glyco/schedule.hpp"
#include "glyco/stats.hpp"

namespace glyco {

/// One patient's recorded data. Times are hours from the start of the record.
struct PatientRecord {
  std::string patient_id;
  GlucoseTrace bg;
  std::vector<double> insulin_times;  ///< recorded IV rate settings, ascending
  std::vector<double> insulin_rates;  ///< U/hr set at each time
  RateSchedule insulin;               ///< zero before the first setting
  RateSchedule nutrition;             ///< zero before the first setting, or everywhere if none recorded
};

/// Reads bg.csv, insulin.csv and nutrition.csv from `dir`:
///   bg.csv         patient_id,time_hr,bg_mgdl
///   insulin.csv    patient_id,time_hr,rate_u_per_hr
///   nutrition.csv  patient_id,time_hr,rate_units_per_hr
/// Files that are missing or hold only a header contribute no rows. Records
/// come out in order of first appearance in bg.csv. Records with fewer than two
/// insulin settings are skipped with a warning. Throws ParseError naming the
/// file and line on malformed input.
std::vector<PatientRecord> ingest(const std::filesystem::path& dir);

/// Same as ingest() for explicit files; every given path must exist (ConfigError
/// otherwise) and an empty nutrition path means no nutrition. Records with fewer
/// than `min_insulin_settings` insulin rows are skipped.
std::vector<PatientRecord> ingest_files(const std::filesystem::path& bg, const std::filesystem::path& insulin,
                                        const std::filesystem::path& nutrition, std::size_t min_insulin_settings = 2);

enum class EventKind { hypoglycemia, hyperglycemia };
const char* to_string(EventKind k);

/// Outcome groups for comparing recommended rates against the delivered one.
enum class Category {
  both_appropriate,    ///< blue
  protocol_better,     ///< yellow
  lqg_better,          ///< green
  both_inappropriate,  ///< red
  all_inappropriate,   ///< purple
  all_appropriate,     ///< teal
};

inline constexpr Category kAllCategories[] = {Category::both_appropriate,   Category::protocol_better,
                                              Category::lqg_better,         Category::both_inappropriate,
                                              Category::all_inappropriate,  Category::all_appropriate};

const char* to_string(Category c);
const char* describe(Category c);

/// Rates within `tolerance` of each other compare equal.
Category classify(double i_real, double i_protocol, double i_lqg, EventKind kind, double tolerance = 0.05);

struct AdverseEvent {
  std::string patient_id;
  double time = 0.0;
  double bg = 0.0;
  EventKind kind = EventKind::hypoglycemia;
  Region region = Region::target;
  double intervention_time = 0.0;
  double i_real = 0.0;
  double i_protocol = 0.0;
  double i_lqg = 0.0;
  bool evaluable = false;
  std::string note;  ///< why the event could not be evaluated
  Category category = Category::both_appropriate;
};

/// BG measurements in the adverse bands taken between the second and the last
/// insulin setting, each tied to the latest setting strictly before it.
/// With include_mild the mild bands count too.
std::vector<AdverseEvent> find_events(const PatientRecord& record, const GlycemicRegions& regions,
                                      bool include_mild = false);

/// Fills i_protocol, i_lqg, evaluable and category for `event`.
void counterfactuals(const PatientRecord& record, AdverseEvent& event, const ProtocolSpec& spec,
                     const RetroConfig& config);

struct CategoryCounts {
  std::array<std::size_t, 6> hypo{};
  std::array<std::size_t, 6> hyper{};
  std::size_t unevaluable_hypo = 0;
  std::size_t unevaluable_hyper = 0;

  std::size_t total_hypo() const;
  std::size_t total_hyper() const;
};

struct RetroResult {
  std::string protocol;
  std::vector<AdverseEvent> events;
  CategoryCounts counts;
};

CategoryCounts tally(const std::vector<AdverseEvent>& events);

/// Finds and evaluates every event in `records` on `jobs` threads; event order
/// follows record order.
RetroResult replay(const std::vector<PatientRecord>& records, const ProtocolSpec& spec, const RetroConfig& config,
                   unsigned jobs = 1);

}  // namespace glyco
