#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "glyco/errors.hpp"
#include "glyco/msg_model.hpp"
#include "glyco/retro.hpp"

using namespace glyco;
namespace fs = std::filesystem;

namespace {

const std::string kRoot = GLYCO_SOURCE_DIR;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("glyco_retro_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

PatientRecord record_from(const std::string& bg, const std::string& ins, const std::string& nut = "") {
  const auto dir = scratch("record");
  write(dir / "bg.csv", "patient_id,time_hr,bg_mgdl\n" + bg);
  write(dir / "insulin.csv", "patient_id,time_hr,rate_u_per_hr\n" + ins);
  write(dir / "nutrition.csv", "patient_id,time_hr,rate_units_per_hr\n" + nut);
  const auto recs = ingest(dir);
  REQUIRE(recs.size() == 1);
  return recs.front();
}

std::size_t parse_error_line(const std::string& bg) {
  const auto dir = scratch("bad");
  write(dir / "bg.csv", bg);
  write(dir / "insulin.csv", "patient_id,time_hr,rate_u_per_hr\np,0,1\np,1,2\n");
  try {
    ingest(dir);
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("bg.csv") != std::string::npos);
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_SUITE("retro") {

TEST_CASE("table examples") {
  // Before hyperglycemia: protocol below the delivered rate, LQG above it.
  CHECK(classify(3, 2, 4, EventKind::hyperglycemia) == Category::lqg_better);
  // Both advisors above the delivered rate.
  CHECK(classify(2, 3, 4, EventKind::hyperglycemia) == Category::both_appropriate);
  CHECK(classify(0, 0, 0, EventKind::hypoglycemia) == Category::all_appropriate);
  CHECK(classify(4, 2, 2, EventKind::hypoglycemia) == Category::both_appropriate);
  CHECK(classify(3, 3, 3, EventKind::hypoglycemia) == Category::all_inappropriate);
  CHECK(classify(0, 0, 0, EventKind::hyperglycemia) == Category::all_inappropriate);
  CHECK(classify(2.0, 2.03, 1.98, EventKind::hyperglycemia) == Category::all_inappropriate);
  CHECK_THROWS_AS(classify(-1, 0, 0, EventKind::hypoglycemia), InvalidArgument);
}

TEST_CASE("classification is total and swapping advisors swaps the verdict") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> level(0, 3);
  auto swapped = [](Category c) {
    if (c == Category::protocol_better) return Category::lqg_better;
    if (c == Category::lqg_better) return Category::protocol_better;
    return c;
  };
  for (int i = 0; i < 5000; ++i) {
    const double r = level(rng), p = level(rng), l = level(rng);
    for (EventKind k : {EventKind::hypoglycemia, EventKind::hyperglycemia}) {
      const Category c = classify(r, p, l, k);
      CHECK(classify(r, l, p, k) == swapped(c));
      if (k == EventKind::hyperglycemia) CHECK(c != Category::all_appropriate);
    }
  }
}

TEST_CASE("events are tied to the latest earlier insulin change") {
  const auto rec = record_from("p,0,150\np,1,300\np,2,120\np,3,65\np,4,180\np,5,260\np,6,200\n",
                               "p,0,1\np,1.5,2\np,3.5,4\np,5.5,0.5\n");
  const auto events = find_events(rec, GlycemicRegions::for_target(140.0, 180.0));
  // 300 at t=1 precedes the second change and 120 is mild.
  REQUIRE(events.size() == 2);
  CHECK(events[0].kind == EventKind::hypoglycemia);
  CHECK(events[0].time == 3.0);
  CHECK(events[0].intervention_time == 1.5);
  CHECK(events[0].i_real == 2.0);
  CHECK(events[0].region == Region::moderate_hypo);
  CHECK(events[1].kind == EventKind::hyperglycemia);
  CHECK(events[1].intervention_time == 3.5);
  CHECK(events[1].i_real == 4.0);

  const auto mild = find_events(rec, GlycemicRegions::for_target(140.0, 180.0), true);
  CHECK(mild.size() > events.size());
}

TEST_CASE("ingest edge cases") {
  const auto empty = scratch("empty");
  write(empty / "bg.csv", "patient_id,time_hr,bg_mgdl\n");
  write(empty / "insulin.csv", "patient_id,time_hr,rate_u_per_hr\n");
  CHECK(ingest(empty).empty());

  const auto single = scratch("single");
  write(single / "bg.csv", "patient_id,time_hr,bg_mgdl\na,0,100\na,1,110\nb,0,120\n");
  write(single / "insulin.csv", "patient_id,time_hr,rate_u_per_hr\na,0,1\nb,0,1\nb,2,2\n");
  const auto recs = ingest(single);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].patient_id == "b");
  CHECK(recs[0].insulin.rate_at(1.0) == 1.0);
  CHECK(recs[0].nutrition.rate_at(1.0) == 0.0);

  CHECK_THROWS_AS(ingest("/nonexistent/dir"), ConfigError);
}

TEST_CASE("malformed CSV rows are reported with their line") {
  CHECK(parse_error_line("patient,time,bg\np,0,1\n") == 1);
  CHECK(parse_error_line("patient_id,time_hr,bg_mgdl\np,0,100\np,1\n") == 3);
  CHECK(parse_error_line("patient_id,time_hr,bg_mgdl\np,0,100\np,1,abc\n") == 3);
  CHECK(parse_error_line("patient_id,time_hr,bg_mgdl\np,0,100\np,2,110\np,1,120\n") == 4);
  CHECK(parse_error_line("patient_id,time_hr,bg_mgdl\np,0,-5\n") == 2);
  CHECK(parse_error_line("patient_id,time_hr,bg_mgdl\n,0,100\n") == 2);
}

TEST_CASE("LQG advice rises when the delivered rate leaves BG above target") {
  // Equilibrium at the delivered 1 U/hr is 180 + (6*5 - 8*1)/0.4 = 235.
  const MsgParams truth{0.4, 180.0, 6.0, 8.0, 3.0, 4.0};
  const RateSchedule ins({0.0, 8.0, 16.0, 24.0}, {2.0, 1.5, 1.0, 1.0}, 40.0);
  const RateSchedule nut = RateSchedule::constant(0.0, 5.0, 40.0);
  std::vector<double> times;
  for (double t = 0.75; t < 30.0; t += 0.75) times.push_back(t);
  const auto tr = simulate_path(truth, {0.0, 240.0}, times, ins, nut, 77);
  std::string bg = "p,0,240\n";
  for (std::size_t i = 0; i < tr.size(); ++i) bg += "p," + std::to_string(tr.times[i]) + "," + std::to_string(tr.values[i]) + "\n";
  bg += "p,30.5,320\n";
  const auto rec = record_from(bg, "p,0,2\np,8,1.5\np,16,1\np,24,1\np,31,1\n", "p,0,5\n");
  const auto spec = load_protocol(kRoot + "/configs/protocol_a.toml");
  auto events = find_events(rec, GlycemicRegions::for_protocol(spec));
  REQUIRE_FALSE(events.empty());
  auto& e = events.back();
  CHECK(e.kind == EventKind::hyperglycemia);
  CHECK(equilibrium(truth, e.i_real, 5.0) > spec.target_hi);
  counterfactuals(rec, e, spec, RetroConfig{});
  REQUIRE(e.evaluable);
  CHECK(e.i_lqg >= e.i_real);
}

TEST_CASE("protocol keeps the delivered rate when BG sits in target") {
  std::string bg;
  for (int h = 0; h <= 8; ++h) bg += "p," + std::to_string(h) + "," + std::to_string(190 - 7 * h) + "\n";
  bg += "p,9,133\np,10,135\np,12,300\n";
  const auto rec = record_from(bg, "p,0,4\np,10.5,5\np,14,5\n", "p,0,3\n");
  const auto spec = load_protocol(kRoot + "/configs/protocol_a.toml");
  auto events = find_events(rec, GlycemicRegions::for_protocol(spec));
  REQUIRE(events.size() == 1);
  CHECK(events[0].intervention_time == 10.5);
  AdverseEvent again = events[0];
  counterfactuals(rec, events[0], spec, RetroConfig{});
  counterfactuals(rec, again, spec, RetroConfig{});
  REQUIRE(events[0].evaluable);
  CHECK(events[0].i_protocol == 4.0);
  CHECK(again.i_lqg == events[0].i_lqg);
  CHECK(again.category == events[0].category);
}

TEST_CASE("shipped fixture holds 19 hypoglycemic and 107 hyperglycemic events") {
  const auto recs = ingest(kRoot + "/data/retro_fixture");
  CHECK(recs.size() == 23);
  const auto spec = load_protocol(kRoot + "/configs/protocol_a.toml");
  std::size_t hypo = 0, hyper = 0;
  for (const auto& r : recs) {
    const auto ev = find_events(r, GlycemicRegions::for_protocol(spec));
    CHECK_FALSE(ev.empty());
    for (const auto& e : ev) {
      CHECK(e.intervention_time < e.time);
      (e.kind == EventKind::hypoglycemia ? hypo : hyper) += 1;
    }
  }
  CHECK(hypo == 19);
  CHECK(hyper == 107);
}

TEST_CASE("tallies add up") {
  std::vector<AdverseEvent> ev(4);
  ev[0].kind = EventKind::hypoglycemia;
  ev[0].evaluable = true;
  ev[0].category = Category::lqg_better;
  ev[1].kind = EventKind::hyperglycemia;
  ev[1].evaluable = true;
  ev[1].category = Category::both_inappropriate;
  ev[2].kind = EventKind::hyperglycemia;
  ev[3].kind = EventKind::hypoglycemia;
  ev[3].evaluable = true;
  ev[3].category = Category::lqg_better;
  const auto c = tally(ev);
  CHECK(c.hypo[static_cast<std::size_t>(Category::lqg_better)] == 2);
  CHECK(c.hyper[static_cast<std::size_t>(Category::both_inappropriate)] == 1);
  CHECK(c.unevaluable_hyper == 1);
  CHECK(c.total_hypo() == 2);
  CHECK(c.total_hyper() == 2);
}

}
