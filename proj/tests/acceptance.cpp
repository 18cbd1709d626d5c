// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "glyco/config.hpp"
#include "glyco/identification.hpp"
#include "glyco/lqg.hpp"
#include "glyco/msg_model.hpp"
#include "glyco/protocol.hpp"
#include "glyco/retro.hpp"
#include "glyco/stats.hpp"
#include "glyco/trial.hpp"
#include "oracles.hpp"

using namespace glyco;
namespace fs = std::filesystem;

namespace {

const std::string kRoot = GLYCO_SOURCE_DIR;

// Tolerances.
constexpr double kLqgMaxBg = 260.0;
constexpr double kLqgMaxShare = 0.95;
constexpr double kLqrSlack = 1e-6;
constexpr double kMcSigmas = 3.0;
constexpr double kEquilibriumRel = 0.05;
constexpr double kEquilibriumShare = 0.90;
constexpr double kStatsTol = 1e-6;

std::string sci(double x) {
  std::ostringstream o;
  o << std::scientific << std::setprecision(3) << x;
  return o.str();
}

unsigned jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

// 1-3 share one full trial.
struct TrialChecks {
  std::vector<std::string> names;
  std::vector<std::size_t> below70;  // both arms
  std::vector<PairedSummary> summaries;
  std::vector<double> lqg_max_share;
};

TrialChecks run_full_trial() {
  const TrialConfig c = load_trial_config(kRoot + "/configs/trial.toml");
  std::vector<ProtocolSpec> specs;
  for (const auto& p : c.protocol_paths) specs.push_back(load_protocol(p));
  const TrialResult r = run_trial(c, specs, jobs());
  TrialChecks out;
  for (const auto& run : r.runs) {
    out.names.push_back(run.spec.name);
    std::size_t below = 0, under = 0, n = 0;
    for (const auto& pair : run.pairs) {
      for (const auto* rec : {&pair.protocol, &pair.lqg})
        for (double v : rec->etw_bg.values) below += v < 70.0;
      if (pair.lqg.etw_bg.empty()) continue;
      ++n;
      under += summarize_trace(pair.lqg.etw_bg).max < kLqgMaxBg;
    }
    out.below70.push_back(below);
    out.summaries.push_back(summarize(run.spec.name, run.pairs));
    out.lqg_max_share.push_back(n ? static_cast<double>(under) / static_cast<double>(n) : 0.0);
  }
  return out;
}

Outcome lqr_optimality() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = -1.0;
  for (int s = 0; s < 100; ++s) {
    const double a = -2.0 + 4.0 * u(rng);
    const double b = (u(rng) < 0.5 ? -1.0 : 1.0) * (0.2 + 3.0 * u(rng));
    const double q = 0.1 + 5.0 * u(rng);
    const double r = 0.05 + 5.0 * u(rng);
    const double k = lqr_gain({a, b, 1.0, 0.0, 0.0}, q, r);
    const double best = oracle::closed_loop_cost(a, b, q, r, k, 1.0, 50.0);
    for (int j = 0; j < 50; ++j) {
      // Random stabilizing gains on either side of the optimum.
      const double kj = k * (0.1 + 3.0 * u(rng));
      if (a - b * kj >= 0.0) continue;
      const double cost = oracle::closed_loop_cost(a, b, q, r, kj, 1.0, 50.0);
      worst = std::max(worst, best / cost - 1.0);
    }
  }
  return {worst <= kLqrSlack, "max relative excess of optimum over random gain " + sci(worst)};
}

Outcome transition_monte_carlo() {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  struct Draw {
    MsgParams p;
    double g0, dt, ins, nut;
  };
  std::vector<Draw> draws;
  for (int i = 0; i < 20; ++i) {
    Draw d;
    d.p = {0.05 + 1.0 * u(rng), 90.0 + 80.0 * u(rng), 6.0 * u(rng), 10.0 * u(rng), 2.0 + 18.0 * u(rng), 0.0};
    // Keep gamma * dt modest so 100 coarse steps resolve the decay.
    d.dt = std::min(0.25 + 4.0 * u(rng), 1.5 / d.p.gamma);
    d.g0 = 60.0 + 240.0 * u(rng);
    d.ins = 8.0 * u(rng);
    d.nut = 8.0 * u(rng);
    draws.push_back(d);
  }
  std::vector<std::future<std::pair<double, double>>> futures;
  for (std::size_t i = 0; i < draws.size(); ++i)
    futures.push_back(std::async(std::launch::async, [&, i] {
      const Draw& d = draws[i];
      const Moments m = transition(d.p, d.g0, d.dt, d.ins, d.nut);
      const auto mc = oracle::euler_maruyama(d.p, d.g0, d.dt, d.ins, d.nut, 1000000, 100, 9000 + i);
      return std::pair{std::abs(m.mean - mc.mean) / mc.se_mean, std::abs(m.var - mc.var) / mc.se_var};
    }));
  double worst_mean = 0.0, worst_var = 0.0;
  for (auto& f : futures) {
    const auto [zm, zv] = f.get();
    worst_mean = std::max(worst_mean, zm);
    worst_var = std::max(worst_var, zv);
  }
  std::ostringstream d;
  d << "worst |z| mean " << worst_mean << ", variance " << worst_var;
  return {worst_mean < kMcSigmas && worst_var < kMcSigmas, d.str()};
}

Outcome fit_equilibrium() {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  struct Case {
    MsgParams truth;
    TrainingWindow w;
    double ins_avg, nut_avg;
  };
  std::vector<Case> cases;
  for (int c = 0; c < 50; ++c) {
    const MsgParams truth{0.2 + 0.8 * u(rng), 90.0 + 70.0 * u(rng), 2.0 + 6.0 * u(rng), 3.0 + 9.0 * u(rng),
                          2.0 + 6.0 * u(rng), 2.0 + 8.0 * u(rng)};
    std::vector<double> bp{0.0}, ri{0.5 + 5.0 * u(rng)}, rn{1.0 + 7.0 * u(rng)};
    for (double t = 6.0; t < 24.0; t += 6.0) {
      bp.push_back(t);
      ri.push_back(0.5 + 5.0 * u(rng));
      rn.push_back(1.0 + 7.0 * u(rng));
    }
    const RateSchedule ins(bp, ri, 24.0), nut(bp, rn, 24.0);
    std::vector<double> times;
    for (int i = 1; i < 40; ++i) times.push_back(24.0 * i / 39.0);
    const double g0 = 120.0 + 100.0 * u(rng);
    const auto tr = simulate_path(truth, {0.0, g0}, times, ins, nut, 7000 + static_cast<std::uint64_t>(c));
    GlucoseTrace full;
    full.push_back(0.0, g0);
    for (std::size_t i = 0; i < tr.size(); ++i) full.push_back(tr.times[i], tr.values[i]);
    double ia = 0.0, na = 0.0;
    for (std::size_t i = 0; i < bp.size(); ++i) {
      const double len = (i + 1 < bp.size() ? bp[i + 1] : 24.0) - bp[i];
      ia += ri[i] * len / 24.0;
      na += rn[i] * len / 24.0;
    }
    cases.push_back({truth, {full, ins, nut, 0.0, 24.0}, ia, na});
  }
  std::vector<std::future<bool>> futures;
  for (std::size_t c = 0; c < cases.size(); ++c)
    futures.push_back(std::async(std::launch::async, [&, c] {
      FitConfig cfg;
      cfg.seed = 100 + c;
      const auto r = fit(cases[c].w, cfg);
      const double want = equilibrium(cases[c].truth, cases[c].ins_avg, cases[c].nut_avg);
      const double got = equilibrium(r.params, cases[c].ins_avg, cases[c].nut_avg);
      return std::abs(got - want) <= kEquilibriumRel * std::abs(want);
    }));
  int ok = 0;
  for (auto& f : futures) ok += f.get();
  const double share = ok / 50.0;
  return {share >= kEquilibriumShare, std::to_string(ok) + "/50 within 5%"};
}

// Parses an ordering such as "L=P<R" into levels for L, P and R.
std::map<char, int> levels(const std::string& order) {
  std::map<char, int> out;
  int level = 0;
  for (char ch : order) {
    if (ch == '<') ++level;
    else if (ch != '=') out[ch] = level;
  }
  return out;
}

Outcome category_table() {
  struct Row {
    Category cat;
    std::vector<std::string> hypo, hyper;
  };
  const std::vector<Row> table{
      {Category::both_appropriate, {"L=P<R", "L<P<R", "P<L<R"}, {"R<L=P", "R<L<P", "R<P<L"}},
      {Category::protocol_better, {"P<R=L", "P<R<L", "P=R<L"}, {"L=R<P", "L<R<P", "L<R=P"}},
      {Category::lqg_better, {"L<R=P", "L<R<P", "L=R<P"}, {"P=R<L", "P<R<L", "P<R=L"}},
      {Category::both_inappropriate, {"R<L=P", "R<L<P", "R<P<L"}, {"L=P<R", "L<P<R", "P<L<R"}},
  };
  int checked = 0, wrong = 0;
  std::string first_wrong;
  auto expect = [&](double r, double p, double l, EventKind k, Category want, const std::string& label) {
    ++checked;
    if (classify(r, p, l, k) != want) {
      ++wrong;
      if (first_wrong.empty()) first_wrong = label;
    }
  };
  for (const auto& row : table)
    for (int kind = 0; kind < 2; ++kind)
      for (const auto& order : kind == 0 ? row.hypo : row.hyper)
        for (double base : {0.0, 1.0}) {
          auto lv = levels(order);
          expect(base + lv['R'], base + lv['P'], base + lv['L'],
                 kind == 0 ? EventKind::hypoglycemia : EventKind::hyperglycemia, row.cat, order);
        }
  expect(0.0, 0.0, 0.0, EventKind::hypoglycemia, Category::all_appropriate, "hypo all zero");
  expect(2.0, 2.0, 2.0, EventKind::hypoglycemia, Category::all_inappropriate, "hypo all positive");
  expect(0.0, 0.0, 0.0, EventKind::hyperglycemia, Category::all_inappropriate, "hyper all zero");
  expect(2.0, 2.0, 2.0, EventKind::hyperglycemia, Category::all_inappropriate, "hyper all positive");
  std::string d = std::to_string(checked - wrong) + "/" + std::to_string(checked) + " cells";
  if (wrong) d += ", first mismatch " + first_wrong;
  return {wrong == 0, d};
}

Outcome deterministic_simulate() {
  const auto base = fs::temp_directory_path() / "glyco_acceptance_determinism";
  fs::remove_all(base);
  nlohmann::json docs[2];
  for (int i = 0; i < 2; ++i) {
    cli::SimulateArgs a;
    a.config = kRoot + "/configs/trial_smoke.toml";
    a.out = (base / std::to_string(i)).string();
    a.jobs = i == 0 ? 1 : jobs();
    if (cli::cmd_simulate(a) != cli::kOk) return {false, "simulate failed"};
    std::ifstream in(base / std::to_string(i) / "summary.json");
    docs[i] = nlohmann::json::parse(in);
    docs[i].erase("generated_at");
  }
  return {docs[0] == docs[1], docs[0] == docs[1] ? "summary.json identical" : "summary.json differs"};
}

Outcome fixture_tallies() {
  const auto records = ingest(kRoot + "/data/retro_fixture");
  const auto spec = load_protocol(kRoot + "/configs/protocol_a.toml");
  const auto r = replay(records, spec, RetroConfig{}, jobs());
  const auto hypo = r.counts.total_hypo(), hyper = r.counts.total_hyper();
  return {hypo == 19 && hyper == 107, std::to_string(hypo) + " hypo, " + std::to_string(hyper) + " hyper"};
}

Outcome statistics_agree() {
  std::mt19937_64 rng(1010);
  std::normal_distribution<double> z(0.3, 1.7);
  std::exponential_distribution<double> e(0.5);
  double worst = 0.0;
  for (int c = 0; c < 20; ++c) {
    std::vector<double> x(8 + 19 * c);
    for (auto& v : x) v = c % 2 ? z(rng) : e(rng);
    const auto t = paired_ttest(x);
    const auto to = oracle::ttest(x);
    const auto k = ks_normality(x);
    const auto ko = oracle::ks_normal(x);
    for (double diff : {std::abs(t.t - to.t) / std::max(1.0, std::abs(to.t)), std::abs(t.p - to.p),
                        std::abs(t.ci_lo - to.ci_lo) / std::max(1.0, std::abs(to.ci_lo)),
                        std::abs(t.ci_hi - to.ci_hi) / std::max(1.0, std::abs(to.ci_hi)), std::abs(k.d - ko.d),
                        std::abs(k.p - ko.p)})
      worst = std::max(worst, diff);
  }
  return {worst <= kStatsTol, "max discrepancy " + sci(worst)};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::off);
  int failures = 0;
  auto report = [&](int id, const std::string& name, const Outcome& o) {
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  };

  const TrialChecks trial = run_full_trial();
  {
    std::size_t below = 0;
    for (auto b : trial.below70) below += b;
    report(1, "no evaluation BG below 70 in any arm", {below == 0, std::to_string(below) + " readings below 70"});
  }
  {
    bool ok = !trial.summaries.empty();
    std::ostringstream d;
    for (const auto& s : trial.summaries) {
      ok = ok && s.min.ttest.ci_lo > 0.0 && s.max.ttest.ci_hi < 0.0;
      d << s.protocol << ": min CI [" << s.min.ttest.ci_lo << ", " << s.min.ttest.ci_hi << "], max CI ["
        << s.max.ttest.ci_lo << ", " << s.max.ttest.ci_hi << "]; ";
    }
    report(2, "LQG raises the minimum and lowers the maximum", {ok, d.str()});
  }
  {
    bool ok = !trial.lqg_max_share.empty();
    std::ostringstream d;
    for (std::size_t i = 0; i < trial.lqg_max_share.size(); ++i) {
      ok = ok && trial.lqg_max_share[i] >= kLqgMaxShare;
      d << trial.names[i] << ": " << 100.0 * trial.lqg_max_share[i] << "% ";
    }
    report(3, "LQG maximum below 260 for most patients", {ok, d.str()});
  }
  report(4, "LQR gain is optimal among random gains", lqr_optimality());
  report(5, "transition moments match Monte Carlo", transition_monte_carlo());
  report(6, "fitted equilibria match the truth", fit_equilibrium());
  report(7, "category truth table", category_table());
  report(8, "simulate is deterministic", deterministic_simulate());
  report(9, "fixture event tallies", fixture_tallies());
  report(10, "statistics agree with the reference", statistics_agree());
  return failures ? 1 : 0;
}
