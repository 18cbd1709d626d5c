#include "glyco/retro.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "glyco/errors.hpp"
#include "glyco/identification.hpp"
#include "glyco/lqg.hpp"
#include "glyco/seeding.hpp"

namespace glyco {

namespace {

struct Row {
  std::string id;
  double time;
  double value;
  std::size_t line;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(std::string_view s, const std::string& file, std::size_t line, const char* column) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
    throw ParseError(file + ": invalid " + column + " '" + std::string(s) + "'", line);
  return v;
}

// Reads a three-column CSV. Per patient, times must strictly increase.
std::vector<Row> read_csv(const std::filesystem::path& path, const char* value_column, bool positive) {
  std::vector<Row> rows;
  std::ifstream in(path);
  if (!in) return rows;
  const std::string file = path.filename().string();
  std::string line;
  std::size_t n = 0;
  bool header = false;
  std::map<std::string, std::pair<double, std::size_t>> last;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    const auto cols = split(line);
    if (!header) {
      if (cols.size() != 3 || cols[0] != "patient_id" || cols[1] != "time_hr" || cols[2] != value_column)
        throw ParseError(file + ": expected header 'patient_id,time_hr," + value_column + "'", n);
      header = true;
      continue;
    }
    if (cols.size() != 3) throw ParseError(file + ": expected 3 columns, found " + std::to_string(cols.size()), n);
    if (cols[0].empty()) throw ParseError(file + ": empty patient_id", n);
    Row r{std::string(cols[0]), parse_number(cols[1], file, n, "time_hr"), parse_number(cols[2], file, n, value_column),
          n};
    if (r.value < 0.0 || (positive && r.value == 0.0))
      throw ParseError(file + ": " + value_column + " out of range", n);
    auto it = last.find(r.id);
    if (it != last.end() && !(r.time > it->second.first))
      throw ParseError(file + ": time_hr for patient " + r.id + " does not increase (previous row on line " +
                           std::to_string(it->second.second) + ")",
                       n);
    last[r.id] = {r.time, n};
    rows.push_back(std::move(r));
  }
  return rows;
}

RateSchedule build_schedule(const std::vector<double>& times, const std::vector<double>& rates, double start,
                            double horizon) {
  std::vector<double> bps;
  std::vector<double> rs;
  if (times.empty() || times.front() > start) {
    bps.push_back(start);
    rs.push_back(0.0);
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    bps.push_back(times[i]);
    rs.push_back(rates[i]);
  }
  return RateSchedule(std::move(bps), std::move(rs), horizon);
}

int tolerant_sign(double x, double tol) {
  if (x > tol) return 1;
  if (x < -tol) return -1;
  return 0;
}

Category classify_hypo(int s_lqg, int s_protocol) {
  if (s_lqg < 0 && s_protocol < 0) return Category::both_appropriate;
  if (s_lqg > 0 && s_protocol > 0) return Category::both_inappropriate;
  if (s_lqg < 0 || (s_lqg == 0 && s_protocol > 0)) return Category::lqg_better;
  return Category::protocol_better;
}

std::vector<PatientRecord> build_records(const std::vector<Row>& bg, const std::vector<Row>& ins,
                                         const std::vector<Row>& nut, std::size_t min_insulin_settings);

}  // namespace

const char* to_string(EventKind k) { return k == EventKind::hypoglycemia ? "hypoglycemia" : "hyperglycemia"; }

const char* to_string(Category c) {
  switch (c) {
    case Category::both_appropriate: return "both_appropriate";
    case Category::protocol_better: return "protocol_better";
    case Category::lqg_better: return "lqg_better";
    case Category::both_inappropriate: return "both_inappropriate";
    case Category::all_inappropriate: return "all_inappropriate";
    case Category::all_appropriate: return "all_appropriate";
  }
  return "?";
}

const char* describe(Category c) {
  switch (c) {
    case Category::both_appropriate: return "Both the LQG controller and the protocol gave appropriate advice";
    case Category::protocol_better: return "The protocol gave more appropriate advice than the LQG controller";
    case Category::lqg_better: return "The LQG controller gave more appropriate advice than the protocol";
    case Category::both_inappropriate: return "Both the LQG controller and the protocol gave inappropriate advice";
    case Category::all_inappropriate: return "The LQG controller, protocol and real insulin rates were inappropriate";
    case Category::all_appropriate: return "The LQG controller, protocol and real insulin rates were appropriate";
  }
  return "?";
}

Category classify(double i_real, double i_protocol, double i_lqg, EventKind kind, double tolerance) {
  if (!(i_real >= 0.0) || !(i_protocol >= 0.0) || !(i_lqg >= 0.0))
    throw InvalidArgument("classify: rates must be non-negative");
  const int s_lqg = tolerant_sign(i_lqg - i_real, tolerance);
  const int s_protocol = tolerant_sign(i_protocol - i_real, tolerance);
  if (s_lqg == 0 && s_protocol == 0) {
    if (kind == EventKind::hypoglycemia && i_real <= tolerance) return Category::all_appropriate;
    return Category::all_inappropriate;
  }
  // Before hyperglycemia more insulin is the appropriate direction: mirror the rates.
  if (kind == EventKind::hyperglycemia) return classify_hypo(-s_lqg, -s_protocol);
  return classify_hypo(s_lqg, s_protocol);
}

std::vector<PatientRecord> ingest(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("data directory '" + dir.string() + "' not found");
  return build_records(read_csv(dir / "bg.csv", "bg_mgdl", true), read_csv(dir / "insulin.csv", "rate_u_per_hr", false),
                       read_csv(dir / "nutrition.csv", "rate_units_per_hr", false), 2);
}

std::vector<PatientRecord> ingest_files(const std::filesystem::path& bg, const std::filesystem::path& insulin,
                                        const std::filesystem::path& nutrition, std::size_t min_insulin_settings) {
  for (const auto* p : {&bg, &insulin, &nutrition}) {
    if (p->empty()) continue;
    std::ifstream probe(*p);
    if (!probe) throw ConfigError("cannot open '" + p->string() + "'");
  }
  return build_records(read_csv(bg, "bg_mgdl", true), read_csv(insulin, "rate_u_per_hr", false),
                       nutrition.empty() ? std::vector<Row>{} : read_csv(nutrition, "rate_units_per_hr", false),
                       min_insulin_settings);
}

namespace {

std::vector<PatientRecord> build_records(const std::vector<Row>& bg, const std::vector<Row>& ins,
                                         const std::vector<Row>& nut, std::size_t min_insulin_settings) {
  std::vector<std::string> order;
  std::map<std::string, PatientRecord> by_id;
  for (const auto& r : bg) {
    auto [it, fresh] = by_id.try_emplace(r.id);
    if (fresh) {
      order.push_back(r.id);
      it->second.patient_id = r.id;
    }
    it->second.bg.push_back(r.time, r.value);
  }
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> nutrition;
  for (const auto& r : ins) {
    auto it = by_id.find(r.id);
    if (it == by_id.end()) {
      spdlog::warn("insulin.csv line {}: patient {} has no BG rows, ignored", r.line, r.id);
      continue;
    }
    it->second.insulin_times.push_back(r.time);
    it->second.insulin_rates.push_back(r.value);
  }
  for (const auto& r : nut) {
    nutrition[r.id].first.push_back(r.time);
    nutrition[r.id].second.push_back(r.value);
  }

  std::vector<PatientRecord> out;
  for (const auto& id : order) {
    PatientRecord& rec = by_id.at(id);
    if (rec.insulin_times.size() < std::max<std::size_t>(min_insulin_settings, 1)) {
      spdlog::warn("patient {}: {} insulin setting(s), need at least {}; record skipped", id, rec.insulin_times.size(),
                   std::max<std::size_t>(min_insulin_settings, 1));
      continue;
    }
    const auto& nt = nutrition[id];
    double start = std::min(rec.bg.times.front(), rec.insulin_times.front());
    double end = std::max(rec.bg.times.back(), rec.insulin_times.back());
    if (!nt.first.empty()) {
      start = std::min(start, nt.first.front());
      end = std::max(end, nt.first.back());
    }
    const double horizon = end + 1.0;
    rec.insulin = build_schedule(rec.insulin_times, rec.insulin_rates, start, horizon);
    rec.nutrition = build_schedule(nt.first, nt.second, start, horizon);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

std::vector<AdverseEvent> find_events(const PatientRecord& record, const GlycemicRegions& regions,
                                      bool include_mild) {
  std::vector<AdverseEvent> events;
  const auto& ts = record.insulin_times;
  if (ts.size() < 2) return events;
  const double first = ts[1];
  const double last = ts.back();
  for (std::size_t i = 0; i < record.bg.size(); ++i) {
    const double t = record.bg.times[i];
    if (t < first || t > last) continue;
    const double bg = record.bg.values[i];
    const Region region = classify_bg(bg, regions);
    const bool hypo = region == Region::severe_hypo || region == Region::moderate_hypo ||
                      (include_mild && region == Region::mild_hypo);
    const bool hyper = region == Region::severe_hyper || region == Region::moderate_hyper ||
                       (include_mild && region == Region::mild_hyper);
    if (!hypo && !hyper) continue;
    const auto it = std::lower_bound(ts.begin(), ts.end(), t);
    const auto k = static_cast<std::size_t>(it - ts.begin()) - 1;
    AdverseEvent e;
    e.patient_id = record.patient_id;
    e.time = t;
    e.bg = bg;
    e.kind = hypo ? EventKind::hypoglycemia : EventKind::hyperglycemia;
    e.region = region;
    e.intervention_time = ts[k];
    e.i_real = record.insulin_rates[k];
    events.push_back(std::move(e));
  }
  return events;
}

void counterfactuals(const PatientRecord& record, AdverseEvent& event, const ProtocolSpec& spec,
                     const RetroConfig& config) {
  const double t = event.intervention_time;
  const auto& ts = record.insulin_times;
  const auto it = std::lower_bound(ts.begin(), ts.end(), t);
  const auto k = static_cast<std::size_t>(it - ts.begin());
  const double rate_before = k == 0 ? 0.0 : record.insulin_rates[k - 1];

  const GlucoseTrace seen = record.bg.slice(record.bg.times.front(), t);
  if (seen.empty()) {
    event.evaluable = false;
    event.note = "no BG measurement before the intervention";
    return;
  }
  std::optional<double> bg_prev;
  if (seen.size() >= 2) bg_prev = seen.values[seen.size() - 2];
  event.i_protocol = decide(spec, seen.values.back(), bg_prev, rate_before).new_rate;

  const double t0 = std::max(record.bg.times.front(), t - config.window_hours);
  TrainingWindow w{record.bg.slice(t0, t), record.insulin.restricted(t0, t),
                   record.nutrition.restricted(t0, t), t0, t};
  FitConfig fc = config.fit;
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : record.patient_id) h = (h ^ c) * 1099511628211ull;
  fc.seed = derive_seed(config.seed, {stream::kFit, h, static_cast<std::uint64_t>(std::llround(t * 3600.0))});
  try {
    const FitResult fr = fit(w, fc);
    const double nutrition = record.nutrition.rate_at(t);
    const ControllerState est = estimate_state(fr.params, w.trace, w.insulin, w.nutrition);
    try {
      const LqgGains gains = design_controller(fr.params, config.controller, spec.target_hi, nutrition);
      event.i_lqg = suggest_rate(est, gains, config.controller.u_max);
    } catch (const NoInsulinAuthority&) {
      event.i_lqg = equilibrium(fr.params, 0.0, nutrition) > spec.target_hi ? config.controller.u_max : 0.0;
    } catch (const Uncontrollable&) {
      event.i_lqg = equilibrium(fr.params, 0.0, nutrition) > spec.target_hi ? config.controller.u_max : 0.0;
    }
  } catch (const Error& e) {
    event.evaluable = false;
    event.note = e.what();
    return;
  }
  event.evaluable = true;
  event.note.clear();
  event.category = classify(event.i_real, event.i_protocol, event.i_lqg, event.kind, config.rate_tolerance);
}

std::size_t CategoryCounts::total_hypo() const {
  std::size_t s = unevaluable_hypo;
  for (auto v : hypo) s += v;
  return s;
}

std::size_t CategoryCounts::total_hyper() const {
  std::size_t s = unevaluable_hyper;
  for (auto v : hyper) s += v;
  return s;
}

CategoryCounts tally(const std::vector<AdverseEvent>& events) {
  CategoryCounts c;
  for (const auto& e : events) {
    const bool hypo = e.kind == EventKind::hypoglycemia;
    if (!e.evaluable) {
      ++(hypo ? c.unevaluable_hypo : c.unevaluable_hyper);
      continue;
    }
    ++(hypo ? c.hypo : c.hyper)[static_cast<std::size_t>(e.category)];
  }
  return c;
}

RetroResult replay(const std::vector<PatientRecord>& records, const ProtocolSpec& spec, const RetroConfig& config,
                   unsigned jobs) {
  config.validate();
  const GlycemicRegions regions = GlycemicRegions::for_protocol(spec);
  std::vector<std::vector<AdverseEvent>> per_record(records.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= records.size()) return;
      try {
        auto events = find_events(records[i], regions, config.include_mild);
        for (auto& e : events) {
          counterfactuals(records[i], e, spec, config);
          if (!e.evaluable) spdlog::warn("patient {}: event at t={:.2f} not evaluable: {}", e.patient_id, e.time, e.note);
        }
        per_record[i] = std::move(events);
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

  RetroResult result;
  result.protocol = spec.name;
  for (auto& v : per_record)
    for (auto& e : v) result.events.push_back(std::move(e));
  result.counts = tally(result.events);
  return result;
}

}  // namespace glyco
