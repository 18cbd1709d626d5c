#include "glyco/report.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>
#include <spdlog/fmt/fmt.h>

#include "glyco/errors.hpp"

#ifndef GLYCO_VERSION
#define GLYCO_VERSION "0.0.0"
#endif

namespace glyco {

namespace {

using nlohmann::json;

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double num_from(const json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

std::string csv_num(double x) { return fmt::format("{}", x); }

json to_json(const TraceSummary& s) { return {{"min", num(s.min)}, {"max", num(s.max)}, {"avg", num(s.avg)}, {"n", s.n}}; }

TraceSummary trace_summary_from(const json& j) {
  return {num_from(j.at("min")), num_from(j.at("max")), num_from(j.at("avg")), j.at("n").get<std::size_t>()};
}

json to_json(const MetricComparison& m) {
  const auto& t = m.ttest;
  const auto& k = m.normality;
  return {{"differences", m.diffs},
          {"ttest",
           {{"n", t.n},
            {"mean", num(t.mean)},
            {"sd", num(t.sd)},
            {"t", num(t.t)},
            {"df", num(t.df)},
            {"p", num(t.p)},
            {"ci95", {num(t.ci_lo), num(t.ci_hi)}},
            {"degenerate", t.degenerate}}},
          {"normality", {{"n", k.n}, {"ks_d", num(k.d)}, {"p", num(k.p)}, {"degenerate", k.degenerate}}}};
}

MetricComparison comparison_from(const json& j) {
  MetricComparison m;
  m.diffs = j.at("differences").get<std::vector<double>>();
  const json& t = j.at("ttest");
  m.ttest.n = t.at("n").get<std::size_t>();
  m.ttest.mean = num_from(t.at("mean"));
  m.ttest.sd = num_from(t.at("sd"));
  m.ttest.t = num_from(t.at("t"));
  m.ttest.df = num_from(t.at("df"));
  m.ttest.p = num_from(t.at("p"));
  m.ttest.ci_lo = num_from(t.at("ci95").at(0));
  m.ttest.ci_hi = num_from(t.at("ci95").at(1));
  m.ttest.degenerate = t.at("degenerate").get<bool>();
  const json& k = j.at("normality");
  m.normality.n = k.at("n").get<std::size_t>();
  m.normality.d = num_from(k.at("ks_d"));
  m.normality.p = num_from(k.at("p"));
  m.normality.degenerate = k.at("degenerate").get<bool>();
  return m;
}

json to_json(const GlucoseTrace& tr) { return {{"times", tr.times}, {"values", tr.values}}; }

json to_json(const PatientRunRecord& r) {
  json ivs = json::array();
  for (const auto& iv : r.interventions)
    ivs.push_back({{"time", iv.time},
                   {"bg", iv.bg},
                   {"rate", iv.rate},
                   {"rule_id", iv.rule_id},
                   {"nutrition_change", iv.nutrition_change},
                   {"fit_failed", iv.fit_failed}});
  json fits = json::array();
  for (const auto& f : r.fit_history) {
    const auto& p = f.params;
    fits.push_back({{"gamma", p.gamma},
                    {"g_b", p.g_b},
                    {"beta_n", p.beta_n},
                    {"beta_i", p.beta_i},
                    {"sigma", p.sigma},
                    {"r_meas", p.r_meas},
                    {"neg_log_likelihood", num(f.neg_log_likelihood)},
                    {"converged", f.converged}});
  }
  return {{"patient_id", r.patient_id},
          {"arm", to_string(r.arm)},
          {"interventions", ivs},
          {"etw_bg", to_json(r.etw_bg)},
          {"fit_history", fits},
          {"fit_failures", r.fit_failures}};
}

std::size_t count_below(const GlucoseTrace& tr, double threshold) {
  std::size_t n = 0;
  for (double v : tr.values)
    if (v < threshold) ++n;
  return n;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

const char* version() { return GLYCO_VERSION; }

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256: digest failed");
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw Error("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot move '" + tmp.string() + "' into place: " + ec.message());
}

void write_manifest(const std::filesystem::path& out_dir, const RunManifest& m) {
  const json j = {{"schema_version", kReportSchemaVersion},
                  {"command", m.command},
                  {"config_path", m.config_path},
                  {"config_sha256", m.config_sha256},
                  {"root_seed", m.root_seed},
                  {"version", m.version},
                  {"started_at", m.started_at},
                  {"outputs", m.outputs}};
  write_file_atomic(out_dir / "manifest.json", j.dump(2) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& path) {
  const json j = json::parse(read_text(path));
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.config_path = j.at("config_path").get<std::string>();
  m.config_sha256 = j.at("config_sha256").get<std::string>();
  m.root_seed = j.at("root_seed").get<std::uint64_t>();
  m.version = j.at("version").get<std::string>();
  m.started_at = j.at("started_at").get<std::string>();
  m.outputs = j.at("outputs").get<std::vector<std::string>>();
  return m;
}

std::vector<std::string> trial_report_files() { return {"summary.json", "boxplot_data.csv", "records.json"}; }

void write_trial_report(const std::filesystem::path& out_dir, const TrialResult& result,
                        const std::vector<PairedSummary>& summaries, const TrialReportInfo& info) {
  if (summaries.size() != result.runs.size()) throw InvalidArgument("write_trial_report: one summary per protocol");

  json protocols = json::array();
  std::ostringstream box;
  box << "protocol,arm,patient_id,statistic,time_hr,bg_mgdl,region\n";
  json records = json::array();

  for (std::size_t j = 0; j < result.runs.size(); ++j) {
    const ProtocolRun& run = result.runs[j];
    const PairedSummary& s = summaries[j];
    const GlycemicRegions regions = GlycemicRegions::for_protocol(run.spec);

    json patients = json::array();
    for (std::size_t i = 0; i < s.patient_ids.size(); ++i)
      patients.push_back({{"id", s.patient_ids[i]}, {"protocol", to_json(s.protocol_arm[i])}, {"lqg", to_json(s.lqg_arm[i])}});

    std::size_t below_p = 0, below_l = 0, fit_failures = 0, interventions = 0;
    double max_rate = 0.0;
    json run_records = json::array();
    for (const auto& pair : run.pairs) {
      below_p += count_below(pair.protocol.etw_bg, 70.0);
      below_l += count_below(pair.lqg.etw_bg, 70.0);
      fit_failures += static_cast<std::size_t>(pair.lqg.fit_failures);
      interventions += pair.lqg.interventions.size();
      for (const auto& iv : pair.lqg.interventions) max_rate = std::max(max_rate, iv.rate);
      run_records.push_back(to_json(pair.protocol));
      run_records.push_back(to_json(pair.lqg));
    }

    protocols.push_back({{"protocol", s.protocol},
                         {"target_range", {run.spec.target_lo, run.spec.target_hi}},
                         {"n_patients", s.patient_ids.size()},
                         {"excluded", s.excluded},
                         {"etw_bg_below_70", {{"protocol", below_p}, {"lqg", below_l}}},
                         {"lqg_interventions", interventions},
                         {"lqg_fit_failures", fit_failures},
                         {"lqg_max_rate", max_rate},
                         {"patients", patients},
                         {"comparisons", {{"min", to_json(s.min)}, {"max", to_json(s.max)}, {"avg", to_json(s.avg)}}}});
    records.push_back({{"protocol", run.spec.name}, {"records", run_records}});

    for (const auto& pair : run.pairs) {
      for (const PatientRunRecord* rec : {&pair.protocol, &pair.lqg}) {
        if (rec->etw_bg.empty()) continue;
        const TraceSummary ts = summarize_trace(rec->etw_bg);
        const std::string prefix = "\"" + run.spec.name + "\"," + to_string(rec->arm) + "," + std::to_string(rec->patient_id) + ",";
        for (const auto& [stat, v] : {std::pair{"min", ts.min}, std::pair{"max", ts.max}, std::pair{"avg", ts.avg}})
          box << prefix << stat << ",," << csv_num(v) << "," << to_string(classify_bg(v, regions)) << "\n";
        for (std::size_t k = 0; k < rec->etw_bg.size(); ++k) {
          const double v = rec->etw_bg.values[k];
          box << prefix << "value," << csv_num(rec->etw_bg.times[k]) << "," << csv_num(v) << ","
              << to_string(classify_bg(v, regions)) << "\n";
        }
      }
    }
  }

  const json summary = {{"schema_version", kReportSchemaVersion},
                        {"generated_at", utc_timestamp()},
                        {"version", version()},
                        {"root_seed", info.root_seed},
                        {"config_sha256", info.config_sha256},
                        {"n_patients", info.n_patients},
                        {"m_schedules", info.m_schedules},
                        {"protocols", protocols}};
  write_file_atomic(out_dir / "summary.json", summary.dump(2) + "\n");
  write_file_atomic(out_dir / "boxplot_data.csv", box.str());
  const json rec_doc = {{"schema_version", kReportSchemaVersion}, {"runs", records}};
  write_file_atomic(out_dir / "records.json", rec_doc.dump() + "\n");
}

std::vector<PairedSummary> read_summary(const std::filesystem::path& path) {
  std::vector<PairedSummary> out;
  try {
    const json j = json::parse(read_text(path));
    if (j.at("schema_version").get<int>() != kReportSchemaVersion) throw Error("unsupported summary schema");
    for (const auto& p : j.at("protocols")) {
      PairedSummary s;
      s.protocol = p.at("protocol").get<std::string>();
      s.excluded = p.at("excluded").get<std::size_t>();
      for (const auto& pt : p.at("patients")) {
        s.patient_ids.push_back(pt.at("id").get<int>());
        s.protocol_arm.push_back(trace_summary_from(pt.at("protocol")));
        s.lqg_arm.push_back(trace_summary_from(pt.at("lqg")));
      }
      const json& c = p.at("comparisons");
      s.min = comparison_from(c.at("min"));
      s.max = comparison_from(c.at("max"));
      s.avg = comparison_from(c.at("avg"));
      out.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
  return out;
}

std::vector<std::string> retro_report_files() { return {"events.csv", "table4_counts.csv"}; }

void write_retro_report(const std::filesystem::path& out_dir, const std::vector<RetroResult>& results) {
  std::ostringstream ev;
  ev << "protocol,patient_id,time_hr,bg_mgdl,kind,region,intervention_time_hr,i_real,i_protocol,i_lqg,evaluable,"
        "category,note\n";
  std::ostringstream counts;
  counts << "protocol,category,description,hypoglycemia,hyperglycemia\n";
  for (const auto& r : results) {
    const std::string proto = "\"" + r.protocol + "\"";
    for (const auto& e : r.events) {
      std::string note = e.note;
      for (char& c : note)
        if (c == '"' || c == '\n') c = '\'';
      ev << proto << "," << e.patient_id << "," << csv_num(e.time) << "," << csv_num(e.bg) << "," << to_string(e.kind)
         << "," << to_string(e.region) << "," << csv_num(e.intervention_time) << "," << csv_num(e.i_real) << ","
         << (e.evaluable ? csv_num(e.i_protocol) : "") << "," << (e.evaluable ? csv_num(e.i_lqg) : "") << ","
         << (e.evaluable ? "true" : "false") << "," << (e.evaluable ? to_string(e.category) : "") << ",\"" << note
         << "\"\n";
    }
    const CategoryCounts& c = r.counts;
    for (Category cat : kAllCategories) {
      const auto k = static_cast<std::size_t>(cat);
      counts << proto << "," << to_string(cat) << ",\"" << describe(cat) << "\"," << c.hypo[k] << ","
             << (cat == Category::all_appropriate ? std::string("N/A") : std::to_string(c.hyper[k])) << "\n";
    }
    counts << proto << ",unevaluable,\"Not enough data to evaluate\"," << c.unevaluable_hypo << ","
           << c.unevaluable_hyper << "\n";
    counts << proto << ",total,\"All events\"," << c.total_hypo() << "," << c.total_hyper() << "\n";
  }
  write_file_atomic(out_dir / "events.csv", ev.str());
  write_file_atomic(out_dir / "table4_counts.csv", counts.str());
}

}  // namespace glyco
