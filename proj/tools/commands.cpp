#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "glyco/config.hpp"
#include "glyco/errors.hpp"
#include "glyco/identification.hpp"
#include "glyco/report.hpp"
#include "glyco/retro.hpp"
#include "glyco/stats.hpp"
#include "glyco/trial.hpp"

namespace glyco::cli {

namespace {

namespace fs = std::filesystem;

template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kRuntimeError;
  }
}

std::string read_config_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

unsigned resolve_jobs(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

void make_out_dir(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error("cannot create output directory '" + out.string() + "': " + ec.message());
}

}  // namespace

int cmd_simulate(const SimulateArgs& args) {
  return guarded([&] {
    const fs::path config_path(args.config);
    const std::string text = read_config_text(config_path);
    TrialConfig config = parse_trial_config(text, config_path.parent_path(), config_path.string());
    if (args.seed) config.seed = *args.seed;
    if (!args.protocols.empty()) {
      config.protocol_paths.clear();
      for (const auto& p : args.protocols) config.protocol_paths.emplace_back(p);
    }
    std::vector<ProtocolSpec> protocols;
    for (const auto& p : config.protocol_paths) protocols.push_back(load_protocol(p));

    const fs::path out(args.out);
    make_out_dir(out);
    RunManifest manifest;
    manifest.command = "simulate";
    manifest.config_path = config_path.string();
    manifest.config_sha256 = sha256_hex(text);
    manifest.root_seed = config.seed;
    manifest.version = version();
    manifest.started_at = utc_timestamp();
    manifest.outputs = trial_report_files();
    write_manifest(out, manifest);

    const unsigned jobs = resolve_jobs(args.jobs);
    spdlog::info("simulate: {} patients, {} schedule pairs, {} protocol(s), {} job(s)", config.n_patients,
                 config.m_schedules, protocols.size(), jobs);
    const TrialResult result = run_trial(config, protocols, jobs);

    std::vector<PairedSummary> summaries;
    for (const auto& run : result.runs) {
      summaries.push_back(summarize(run.spec.name, run.pairs));
      const auto& s = summaries.back();
      spdlog::info("{}: min diff {:.2f} [{:.2f}, {:.2f}], max diff {:.2f} [{:.2f}, {:.2f}]", s.protocol,
                   s.min.ttest.mean, s.min.ttest.ci_lo, s.min.ttest.ci_hi, s.max.ttest.mean, s.max.ttest.ci_lo,
                   s.max.ttest.ci_hi);
    }
    write_trial_report(out, result, summaries, {config.seed, manifest.config_sha256, config.n_patients, config.m_schedules});
    spdlog::info("simulate: wrote {}", out.string());
    return static_cast<int>(kOk);
  });
}

int cmd_retro(const RetroArgs& args) {
  return guarded([&] {
    RetroConfig config;
    std::string hash;
    if (!args.config.empty()) {
      const std::string text = read_config_text(args.config);
      config = parse_retro_config(text, args.config);
      hash = sha256_hex(text);
    }
    std::vector<ProtocolSpec> protocols;
    for (const auto& p : args.protocols) protocols.push_back(load_protocol(p));

    const fs::path out(args.out);
    make_out_dir(out);
    RunManifest manifest;
    manifest.command = "retro";
    manifest.config_path = args.config;
    manifest.config_sha256 = hash;
    manifest.root_seed = config.seed;
    manifest.version = version();
    manifest.started_at = utc_timestamp();
    manifest.outputs = retro_report_files();
    write_manifest(out, manifest);

    const std::vector<PatientRecord> records = ingest(args.data);
    spdlog::info("retro: {} record(s) from {}", records.size(), args.data);
    std::vector<RetroResult> results;
    for (const auto& spec : protocols) {
      results.push_back(replay(records, spec, config, resolve_jobs(args.jobs)));
      const auto& c = results.back().counts;
      spdlog::info("{}: {} hypoglycemic and {} hyperglycemic events", spec.name, c.total_hypo(), c.total_hyper());
    }
    write_retro_report(out, results);
    return static_cast<int>(kOk);
  });
}

int cmd_fit(const FitArgs& args) {
  return guarded([&] {
    if (!(args.window > 0.0)) throw ConfigError("--window must be positive");
    const auto records = ingest_files(args.bg, args.insulin, args.nutrition, 1);
    if (records.size() != 1)
      throw ConfigError("fit expects exactly one patient with insulin data, found " + std::to_string(records.size()));
    const PatientRecord& rec = records.front();
    const double t0 = rec.bg.times.front();
    const double t1 = std::min(t0 + args.window, rec.insulin.horizon());
    TrainingWindow w{rec.bg.slice(t0, t1), rec.insulin.restricted(t0, t1), rec.nutrition.restricted(t0, t1), t0, t1};
    FitConfig fc;
    if (args.seed) fc.seed = *args.seed;
    const FitResult r = fit(w, fc);
    const auto& p = r.params;
    const nlohmann::json j = {{"patient_id", rec.patient_id},
                              {"window", {t0, t1}},
                              {"n_measurements", w.trace.size()},
                              {"params",
                               {{"gamma", p.gamma},
                                {"g_b", p.g_b},
                                {"beta_n", p.beta_n},
                                {"beta_i", p.beta_i},
                                {"sigma", p.sigma},
                                {"r_meas", p.r_meas}}},
                              {"neg_log_likelihood", r.neg_log_likelihood},
                              {"converged", r.converged},
                              {"iterations", r.iterations},
                              {"restarts_used", r.restarts_used}};
    std::cout << j.dump(2) << std::endl;
    return static_cast<int>(kOk);
  });
}

}  // namespace glyco::cli
