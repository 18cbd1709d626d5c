#include "glyco/trial.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include <spdlog/spdlog.h>

#include "glyco/errors.hpp"
#include "glyco/lqg.hpp"
#include "glyco/seeding.hpp"

namespace glyco {

namespace {

constexpr double kTimeEps = 1e-9;
constexpr double kMinMeasuredBg = 1.0;

RateSchedule draw_schedule(const ScheduleDistribution& dist, double t0, double t1, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> bps;
  std::vector<double> rates;
  double t = t0;
  while (t < t1 - kTimeEps) {
    bps.push_back(t);
    rates.push_back(dist.rate.lo + (dist.rate.hi - dist.rate.lo) * unit(rng));
    t += dist.interval.sample(rng);
  }
  return RateSchedule(std::move(bps), std::move(rates), t1);
}

// Training-window insulin followed by zero up to the horizon.
RateSchedule draw_insulin(const ScheduleDistribution& dist, double ttw, double horizon, std::mt19937_64& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    RateSchedule s = draw_schedule(dist, 0.0, ttw, rng);
    if (!s.any_positive(0.0, ttw)) continue;
    s.set_rate_from(ttw, 0.0, horizon);
    return s;
  }
  throw InvalidArgument("insulin schedule: could not draw a positive rate");
}

double rate_before(const RateSchedule& s, double t) {
  const auto bps = s.breakpoints();
  const auto rates = s.rates();
  double r = rates.empty() ? 0.0 : rates.front();
  for (std::size_t i = 0; i < bps.size() && bps[i] < t; ++i) r = rates[i];
  return r;
}

std::uint64_t arm_tag(std::size_t protocol_index, Arm arm) {
  return 1 + 2 * static_cast<std::uint64_t>(protocol_index) + (arm == Arm::lqg ? 1 : 0);
}

double measure(double truth, double noise_sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  return std::max(kMinMeasuredBg, truth + noise_sd * noise(rng));
}

SimOptions options_for(const TrialConfig& config, int patient_id) {
  SimOptions o = config.sim;
  o.patient_id = patient_id;
  return o;
}

}  // namespace

const char* to_string(Arm a) { return a == Arm::protocol ? "protocol" : "lqg"; }

Cohort generate_cohort(const TrialConfig& config) {
  config.validate();
  Cohort cohort;
  const double ttw = config.ttw_hours;
  cohort.horizon = config.t_end() + kScheduleTail;

  for (int m = 0; m < config.m_schedules; ++m) {
    std::mt19937_64 rng(derive_seed(config.seed, {stream::kSchedule, static_cast<std::uint64_t>(m)}));
    ScheduleSet set;
    set.nutrition = draw_schedule(config.nutrition, 0.0, cohort.horizon, rng);
    set.insulin = draw_insulin(config.insulin, ttw, cohort.horizon, rng);
    cohort.schedules.push_back(std::move(set));
  }

  std::vector<int> order(static_cast<std::size_t>(config.n_patients));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 pair_rng(derive_seed(config.seed, {stream::kPairing}));
  std::shuffle(order.begin(), order.end(), pair_rng);
  const int group = config.n_patients / config.m_schedules;
  std::vector<std::size_t> assignment(order.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos)
    assignment[static_cast<std::size_t>(order[pos])] = pos / static_cast<std::size_t>(group);

  for (int id = 0; id < config.n_patients; ++id) {
    const auto pid = static_cast<std::uint64_t>(id);
    CohortPatient p;
    p.id = id;
    p.model = sample_patient(config.patients, derive_seed(config.seed, {stream::kPatient, pid}));
    p.schedule = assignment[static_cast<std::size_t>(id)];

    std::mt19937_64 init_rng(derive_seed(config.seed, {stream::kInitialState, pid}));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double g0 = config.initial_bg.lo + (config.initial_bg.hi - config.initial_bg.lo) * unit(init_rng);
    p.initial = {g0, 0.0, p.model.i_b,
                 config.sim.secretion ? p.model.gamma_sec * std::max(0.0, g0 - p.model.h_thresh) / p.model.n_clear
                                      : 0.0,
                 0.0};

    const ScheduleSet& s = cohort.schedules[p.schedule];
    const Trajectory traj = simulate(p.model, p.initial, ttw, s.insulin, s.nutrition, options_for(config, id));
    auto times = sample_measurement_times(0.0, ttw, derive_seed(config.seed, {stream::kMeasurementTimes, pid}),
                                          config.measurement);
    times.push_back(ttw);
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double y = measure(traj.glucose_at(times[k]), config.measurement_noise_sd,
                               derive_seed(config.seed, {stream::kMeasurementNoise, pid, 0, k}));
      p.ttw_trace.push_back(times[k], y);
    }
    p.ttw_end = traj.back();
    p.ttw_last_rate = rate_before(s.insulin, ttw);
    cohort.patients.push_back(std::move(p));
  }
  return cohort;
}

PatientRunRecord run_protocol_arm(const CohortPatient& patient, const ScheduleSet& schedules, const ProtocolSpec& spec,
                                  const TrialConfig& config, double horizon, std::size_t protocol_index) {
  const auto pid = static_cast<std::uint64_t>(patient.id);
  const std::uint64_t tag = arm_tag(protocol_index, Arm::protocol);
  PatientRunRecord rec;
  rec.patient_id = patient.id;
  rec.arm = Arm::protocol;
  rec.protocol = spec.name;

  const auto& tr = patient.ttw_trace;
  double t = config.ttw_hours;
  double bg_now = tr.values.back();
  std::optional<double> bg_prev;
  if (tr.size() >= 2) bg_prev = tr.values[tr.size() - 2];
  double rate = patient.ttw_last_rate;
  RateSchedule insulin = schedules.insulin.restricted(0.0, t);
  SimState state = patient.ttw_end;

  for (std::uint64_t k = 0; t <= config.t_end() + kTimeEps; ++k) {
    const ProtocolDecision d = decide(spec, bg_now, bg_prev, rate);
    rec.interventions.push_back({t, bg_now, d.new_rate, d.rule_id, false, false});
    const double t_next = t + d.next_check;
    if (t_next > horizon) throw InvalidArgument("run_protocol_arm: next check beyond the schedule horizon");
    insulin.set_rate_from(t, d.new_rate, horizon);
    const Trajectory traj = simulate(patient.model, state, t_next, insulin, schedules.nutrition,
                                     options_for(config, patient.id));
    state = traj.back();
    const double y =
        measure(state.g, config.measurement_noise_sd, derive_seed(config.seed, {stream::kMeasurementNoise, pid, tag, k}));
    rec.etw_bg.push_back(t_next, y);
    bg_prev = bg_now;
    bg_now = y;
    rate = d.new_rate;
    t = t_next;
  }
  return rec;
}

PatientRunRecord run_lqg_arm(const CohortPatient& patient, const ScheduleSet& schedules,
                             const PatientRunRecord& protocol_record, const ProtocolSpec& spec,
                             const TrialConfig& config, double horizon, std::size_t protocol_index) {
  if (protocol_record.interventions.empty() || protocol_record.etw_bg.empty())
    throw InvalidArgument("run_lqg_arm: protocol record has no interventions");
  const auto pid = static_cast<std::uint64_t>(patient.id);
  const std::uint64_t tag = arm_tag(protocol_index, Arm::lqg);
  const double ttw = config.ttw_hours;
  const double window = config.ttw_hours;

  // Intervention times: protocol times united with nutrition changes in the evaluation window.
  struct Slot {
    double time;
    bool nutrition_only;
  };
  std::vector<Slot> slots;
  for (const auto& iv : protocol_record.interventions) slots.push_back({iv.time, false});
  for (double tc : schedules.nutrition.change_times(ttw, config.t_end())) {
    const bool dup = std::any_of(slots.begin(), slots.end(), [&](const Slot& s) { return std::abs(s.time - tc) < kTimeEps; });
    if (!dup) slots.push_back({tc, true});
  }
  std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) { return a.time < b.time; });
  const double final_eval = protocol_record.etw_bg.times.back();

  PatientRunRecord rec;
  rec.patient_id = patient.id;
  rec.arm = Arm::lqg;
  rec.protocol = spec.name;

  GlucoseTrace history = patient.ttw_trace;
  RateSchedule insulin = schedules.insulin.restricted(0.0, ttw);
  SimState state = patient.ttw_end;
  double rate = patient.ttw_last_rate;
  std::optional<MsgParams> params;
  std::uint64_t k = 0;

  auto advance_and_measure = [&](double t_next) {
    const Trajectory traj = simulate(patient.model, state, t_next, insulin, schedules.nutrition,
                                     options_for(config, patient.id));
    state = traj.back();
    const double y =
        measure(state.g, config.measurement_noise_sd, derive_seed(config.seed, {stream::kMeasurementNoise, pid, tag, k}));
    history.push_back(t_next, y);
    rec.etw_bg.push_back(t_next, y);
    ++k;
  };

  for (std::size_t i = 0; i < slots.size(); ++i) {
    const double t = slots[i].time;
    if (i > 0) advance_and_measure(t);
    const double bg = history.values.back();

    const double t0 = std::max(0.0, t - window);
    TrainingWindow w{history.slice(t0, t), insulin.restricted(t0, t), schedules.nutrition.restricted(t0, t), t0, t};
    FitConfig fc = config.fit;
    fc.seed = derive_seed(config.seed, {stream::kFit, pid, tag, i});
    if (params) {
      fc.warm_start = params;
      fc.restarts = config.refit_restarts;
    }
    InterventionRecord iv{t, bg, rate, "lqg", slots[i].nutrition_only, false};
    try {
      const FitResult fr = fit(w, fc);
      params = fr.params;
      rec.fit_history.push_back(fr);
    } catch (const Error& e) {
      iv.fit_failed = true;
      ++rec.fit_failures;
      spdlog::debug("patient {}: fit failed at t={:.2f} ({}), reusing previous parameters", patient.id, t, e.what());
    }

    if (params) {
      const double x_r = config.lqg_target(spec.target_lo, spec.target_hi);
      const double nutrition = schedules.nutrition.rate_at(t);
      const ControllerState est = estimate_state(*params, w.trace, w.insulin, w.nutrition);
      try {
        const LqgGains gains = design_controller(*params, config.controller, x_r, nutrition);
        rate = suggest_rate(est, gains, config.controller.u_max);
      } catch (const NoInsulinAuthority&) {
        rate = equilibrium(*params, 0.0, nutrition) > x_r ? config.controller.u_max : 0.0;
      } catch (const Uncontrollable&) {
        rate = equilibrium(*params, 0.0, nutrition) > x_r ? config.controller.u_max : 0.0;
      }
    }
    iv.rate = rate;
    rec.interventions.push_back(iv);
    insulin.set_rate_from(t, rate, horizon);
  }
  advance_and_measure(final_eval);
  return rec;
}

TrialResult run_trial(const TrialConfig& config, const std::vector<ProtocolSpec>& protocols, unsigned jobs) {
  const Cohort cohort = generate_cohort(config);
  TrialResult result;
  for (const auto& spec : protocols) result.runs.push_back({spec, std::vector<ArmPair>(cohort.patients.size())});

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const std::size_t n = cohort.patients.size();

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      try {
        const CohortPatient& p = cohort.patients[i];
        const ScheduleSet& s = cohort.schedules[p.schedule];
        for (std::size_t j = 0; j < protocols.size(); ++j) {
          ArmPair pair;
          pair.protocol = run_protocol_arm(p, s, protocols[j], config, cohort.horizon, j);
          pair.lqg = run_lqg_arm(p, s, pair.protocol, protocols[j], config, cohort.horizon, j);
          result.runs[j].pairs[i] = std::move(pair);
        }
        const std::size_t finished = done.fetch_add(1) + 1;
        if (finished % 20 == 0 || finished == n) spdlog::info("trial: {}/{} patients done", finished, n);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  jobs = std::max(1u, jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return result;
}

}  // namespace glyco
