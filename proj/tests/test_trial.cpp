#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "glyco/config.hpp"
#include "glyco/protocol.hpp"
#include "glyco/trial.hpp"

using namespace glyco;

namespace {

const std::string kDir = std::string(GLYCO_SOURCE_DIR) + "/configs";

TrialConfig small_config(int n = 4, int m = 2) {
  TrialConfig c = load_trial_config(kDir + "/trial.toml");
  c.n_patients = n;
  c.m_schedules = m;
  c.fit.restarts = 3;
  return c;
}

ProtocolSpec protocol_a() { return load_protocol(kDir + "/protocol_a.toml"); }

bool has_time(const PatientRunRecord& r, double t) {
  return std::any_of(r.interventions.begin(), r.interventions.end(),
                     [&](const InterventionRecord& iv) { return std::abs(iv.time - t) < 1e-9; });
}

}  // namespace

TEST_SUITE("trial") {

TEST_CASE("patients are split into equal schedule groups") {
  TrialConfig c = load_trial_config(kDir + "/trial.toml");
  const Cohort cohort = generate_cohort(c);
  CHECK(cohort.patients.size() == 200);
  CHECK(cohort.schedules.size() == 20);
  std::map<std::size_t, int> groups;
  for (const auto& p : cohort.patients) ++groups[p.schedule];
  CHECK(groups.size() == 20);
  for (const auto& [s, count] : groups) CHECK(count == 10);
  for (const auto& p : cohort.patients) {
    CHECK(p.ttw_trace.times.front() == 0.0);
    CHECK(p.ttw_trace.times.back() == c.ttw_hours);
    CHECK(p.initial.g >= c.initial_bg.lo);
    CHECK(p.initial.g <= c.initial_bg.hi);
  }
  for (const auto& s : cohort.schedules) {
    CHECK(s.nutrition.covers(0.0, cohort.horizon));
    CHECK(s.insulin.covers(0.0, c.ttw_hours));
  }
}

TEST_CASE("protocol arm intervenes inside the evaluation window") {
  const TrialConfig c = small_config();
  const Cohort cohort = generate_cohort(c);
  const auto spec = protocol_a();
  for (const auto& p : cohort.patients) {
    const auto r = run_protocol_arm(p, cohort.schedules[p.schedule], spec, c, cohort.horizon);
    REQUIRE_FALSE(r.interventions.empty());
    CHECK(r.interventions.front().time == c.ttw_hours);
    CHECK(r.etw_bg.size() == r.interventions.size());
    for (std::size_t i = 0; i < r.interventions.size(); ++i) {
      const auto& iv = r.interventions[i];
      CHECK(iv.time <= c.t_end());
      CHECK(iv.rate >= 0.0);
      CHECK(iv.rate <= spec.max_rate);
      CHECK(r.etw_bg.times[i] > iv.time);
      CHECK(r.etw_bg.values[i] >= 1.0);
    }
  }
}

TEST_CASE("LQG arm adds nutrition change times and caps its rates") {
  const TrialConfig c = small_config();
  const Cohort cohort = generate_cohort(c);
  const auto spec = protocol_a();
  for (const auto& p : cohort.patients) {
    const auto& sched = cohort.schedules[p.schedule];
    const auto pr = run_protocol_arm(p, sched, spec, c, cohort.horizon);
    const auto lr = run_lqg_arm(p, sched, pr, spec, c, cohort.horizon);
    for (const auto& iv : pr.interventions) CHECK(has_time(lr, iv.time));
    for (double tc : sched.nutrition.change_times(c.ttw_hours, c.t_end())) CHECK(has_time(lr, tc));
    for (const auto& iv : lr.interventions) {
      CHECK(iv.rate >= 0.0);
      CHECK(iv.rate <= c.controller.u_max);
    }
    CHECK(lr.etw_bg.times.back() == doctest::Approx(pr.etw_bg.times.back()));
    CHECK(lr.fit_history.size() + static_cast<std::size_t>(lr.fit_failures) == lr.interventions.size());
  }
}

TEST_CASE("constant nutrition leaves the protocol's times unchanged") {
  const TrialConfig c = small_config();
  const Cohort cohort = generate_cohort(c);
  const auto spec = protocol_a();
  const auto& p = cohort.patients.front();
  ScheduleSet sched = cohort.schedules[p.schedule];
  sched.nutrition = RateSchedule::constant(0.0, 4.0, cohort.horizon);
  const auto pr = run_protocol_arm(p, sched, spec, c, cohort.horizon);
  const auto lr = run_lqg_arm(p, sched, pr, spec, c, cohort.horizon);
  REQUIRE(lr.interventions.size() == pr.interventions.size());
  for (std::size_t i = 0; i < pr.interventions.size(); ++i)
    CHECK(lr.interventions[i].time == pr.interventions[i].time);

  SUBCASE("a nutrition drop adds an intervention at that instant") {
    const double drop = 31.3;
    ScheduleSet changed = sched;
    changed.nutrition = RateSchedule({0.0, drop}, {4.0, 1.0}, cohort.horizon);
    const auto pr2 = run_protocol_arm(p, changed, spec, c, cohort.horizon);
    const auto lr2 = run_lqg_arm(p, changed, pr2, spec, c, cohort.horizon);
    const auto it = std::find_if(lr2.interventions.begin(), lr2.interventions.end(),
                                 [&](const InterventionRecord& iv) { return iv.time == drop; });
    REQUIRE(it != lr2.interventions.end());
    CHECK(it->nutrition_change == !has_time(pr2, drop));
  }
}

TEST_CASE("LQG arm reads only the protocol's intervention times") {
  const TrialConfig c = small_config();
  const Cohort cohort = generate_cohort(c);
  const auto spec = protocol_a();
  const auto& p = cohort.patients[1];
  const auto& sched = cohort.schedules[p.schedule];
  const auto pr = run_protocol_arm(p, sched, spec, c, cohort.horizon);
  PatientRunRecord scrambled = pr;
  for (auto& v : scrambled.etw_bg.values) v = 1000.0 - v;
  for (auto& iv : scrambled.interventions) {
    iv.bg = 0.0;
    iv.rate = 99.0;
  }
  CHECK(run_lqg_arm(p, sched, pr, spec, c, cohort.horizon) == run_lqg_arm(p, sched, scrambled, spec, c, cohort.horizon));
}

TEST_CASE("trial results are identical across runs and worker counts") {
  const TrialConfig c = small_config(6, 3);
  const std::vector<ProtocolSpec> specs{protocol_a()};
  const auto a = run_trial(c, specs, 1);
  const auto b = run_trial(c, specs, 3);
  REQUIRE(a.runs.size() == 1);
  REQUIRE(a.runs[0].pairs.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(a.runs[0].pairs[i].protocol == b.runs[0].pairs[i].protocol);
    CHECK(a.runs[0].pairs[i].lqg == b.runs[0].pairs[i].lqg);
    CHECK(a.runs[0].pairs[i].protocol.patient_id == static_cast<int>(i));
  }
}

TEST_CASE("a model without insulin authority degrades to the limit rule") {
  TrialConfig c = small_config(2, 1);
  c.fit.box.beta_i = {0.0, 0.0};
  const Cohort cohort = generate_cohort(c);
  const auto spec = protocol_a();
  const auto& p = cohort.patients.front();
  const auto& sched = cohort.schedules[p.schedule];
  const auto pr = run_protocol_arm(p, sched, spec, c, cohort.horizon);
  PatientRunRecord lr;
  REQUIRE_NOTHROW(lr = run_lqg_arm(p, sched, pr, spec, c, cohort.horizon));
  for (const auto& iv : lr.interventions) {
    if (iv.fit_failed) continue;
    CHECK((iv.rate == 0.0 || iv.rate == c.controller.u_max));
  }
}

}
