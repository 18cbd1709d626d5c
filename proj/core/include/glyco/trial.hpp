#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "glyco/config.hpp"
#include "glyco/identification.hpp"
#include "glyco/protocol.hpp"
#include "glyco/schedule.hpp"
#include "glyco/virtual_patient.hpp"

namespace glyco {

/// Hours of schedule kept past the end of the evaluation window so the last
/// measurement after an intervention can land beyond it.
inline constexpr double kScheduleTail = 24.0;

struct ScheduleSet {
  RateSchedule nutrition;  ///< covers the whole horizon
  RateSchedule insulin;    ///< training window only; zero afterwards
};

struct CohortPatient {
  int id = 0;
  VirtualPatient model;
  SimState initial;
  std::size_t schedule = 0;  ///< index into Cohort::schedules
  GlucoseTrace ttw_trace;    ///< measured BG over the training window, ending at its last instant
  SimState ttw_end;          ///< true state at the end of the training window
  double ttw_last_rate = 0.0;
};

struct Cohort {
  std::vector<CohortPatient> patients;
  std::vector<ScheduleSet> schedules;
  double horizon = 0.0;
};

enum class Arm { protocol, lqg };
const char* to_string(Arm a);

struct InterventionRecord {
  double time = 0.0;
  double bg = 0.0;    ///< measurement the decision used, mg/dL
  double rate = 0.0;  ///< chosen IV rate, U/hr
  std::string rule_id;
  bool nutrition_change = false;  ///< fired only because nutrition changed
  bool fit_failed = false;        ///< previous model parameters were reused

  friend bool operator==(const InterventionRecord&, const InterventionRecord&) = default;
};

struct PatientRunRecord {
  int patient_id = 0;
  Arm arm = Arm::protocol;
  std::string protocol;
  std::vector<InterventionRecord> interventions;
  GlucoseTrace etw_bg;  ///< evaluation measurements, one after each intervention
  std::vector<FitResult> fit_history;
  int fit_failures = 0;

  friend bool operator==(const PatientRunRecord&, const PatientRunRecord&) = default;
};

struct ArmPair {
  PatientRunRecord protocol;
  PatientRunRecord lqg;
};

struct ProtocolRun {
  ProtocolSpec spec;
  std::vector<ArmPair> pairs;  ///< ordered by patient id
};

struct TrialResult {
  std::vector<ProtocolRun> runs;
};

/// Patients, schedule pairs, random pairing and simulated training-window data.
Cohort generate_cohort(const TrialConfig& config);

/// Algorithm: decide, hold the rate until the row's next check, measure, repeat
/// while the intervention time lies within the evaluation window.
PatientRunRecord run_protocol_arm(const CohortPatient& patient, const ScheduleSet& schedules, const ProtocolSpec& spec,
                                  const TrialConfig& config, double horizon, std::size_t protocol_index = 0);

/// Intervenes at the protocol's times plus nutrition change times in the
/// evaluation window. Each intervention refits the model on the trailing
/// training-window-length of this arm's own data, filters the state, and
/// applies the LQG rate tracking the protocol's upper target.
PatientRunRecord run_lqg_arm(const CohortPatient& patient, const ScheduleSet& schedules,
                             const PatientRunRecord& protocol_record, const ProtocolSpec& spec,
                             const TrialConfig& config, double horizon, std::size_t protocol_index = 0);

/// Runs both arms for every protocol and patient on `jobs` worker threads.
/// The result does not depend on `jobs`.
TrialResult run_trial(const TrialConfig& config, const std::vector<ProtocolSpec>& protocols, unsigned jobs);

}  // namespace glyco
