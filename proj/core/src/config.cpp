#include "glyco/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fields.hpp"
#include "glyco/errors.hpp"
#include "toml_reader.hpp"

namespace glyco {

namespace {

using detail::Fields;

nlohmann::json parse_doc(std::string_view text, const std::string& source) {
  try {
    return detail::parse_toml(text);
  } catch (const ParseError& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void read_controller(Fields f, ControllerConfig& c, TargetSelection* target) {
  f.number("u_max", c.u_max);
  f.number("q_cost", c.q_cost);
  f.number("r_cost", c.r_cost);
  if (target && f.has("target")) {
    const std::string t = f.string("target");
    if (t == "upper") {
      *target = TargetSelection::upper;
    } else if (t == "midpoint") {
      *target = TargetSelection::midpoint;
    } else if (t == "lower") {
      *target = TargetSelection::lower;
    } else {
      f.fail("'target' must be upper, midpoint or lower");
    }
  }
  f.finish();
}

void read_param_box(Fields f, ParamBox& b) {
  f.bounds("gamma", b.gamma);
  f.bounds("g_b", b.g_b);
  f.bounds("beta_n", b.beta_n);
  f.bounds("beta_i", b.beta_i);
  f.bounds("sigma", b.sigma);
  f.bounds("r_meas", b.r_meas);
  f.finish();
}

void read_fit(Fields f, FitConfig& c, int* refit_restarts) {
  f.integer("restarts", c.restarts);
  if (refit_restarts) f.integer("refit_restarts", *refit_restarts);
  f.number("tolerance", c.tolerance);
  f.integer("max_iterations", c.max_iterations);
  f.integer("min_measurements", c.min_measurements);
  f.boolean("require_insulin_exposure", c.require_insulin_exposure);
  if (f.has("fixed_r_meas")) c.fixed_r_meas = f.number("fixed_r_meas");
  if (f.has("box")) read_param_box(f.table("box"), c.box);
  f.finish();
}

void read_interval(Fields& f, IntervalDistribution& d) {
  f.number("median", d.median);
  f.number("log_sd", d.log_sd);
  f.number("min_gap", d.min_gap);
  f.number("max_gap", d.max_gap);
}

void read_schedule(Fields f, ScheduleDistribution& d) {
  read_interval(f, d.interval);
  f.bounds("rate", d.rate);
  f.finish();
}

void read_patients(Fields f, PatientBox& b, Bounds& initial_bg) {
  f.bounds("initial_bg", initial_bg);
  f.bounds("p1", b.p1);
  f.bounds("p2", b.p2);
  f.bounds("p3", b.p3);
  f.bounds("n_clear", b.n_clear);
  f.bounds("gamma_sec", b.gamma_sec);
  f.bounds("h_thresh", b.h_thresh);
  f.bounds("v_g", b.v_g);
  f.bounds("v_i", b.v_i);
  f.bounds("g_b", b.g_b);
  f.bounds("i_b", b.i_b);
  f.finish();
}

void check(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void validate_controller(const ControllerConfig& c) {
  check(c.u_max > 0.0 && std::isfinite(c.u_max), "controller.u_max must be positive");
  check(c.q_cost >= 0.0, "controller.q_cost must be non-negative");
  check(c.r_cost > 0.0, "controller.r_cost must be positive");
}

void validate_fit(const FitConfig& c) {
  check(c.restarts >= 1, "fit.restarts must be at least 1");
  check(c.tolerance > 0.0, "fit.tolerance must be positive");
  check(c.max_iterations >= 1, "fit.max_iterations must be at least 1");
  if (c.fixed_r_meas) check(*c.fixed_r_meas >= 0.0, "fit.fixed_r_meas must be non-negative");
  try {
    c.box.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("fit.box: ") + e.what());
  }
}

}  // namespace

void TrialConfig::validate() const {
  check(schema_version == kConfigSchemaVersion,
        "unsupported schema_version " + std::to_string(schema_version) + " (expected " +
            std::to_string(kConfigSchemaVersion) + ")");
  check(n_patients >= 1, "n_patients must be positive");
  check(m_schedules >= 1, "m_schedules must be positive");
  check(n_patients % m_schedules == 0, "m_schedules must divide n_patients");
  check(ttw_hours > 0.0 && etw_hours > 0.0, "ttw_hours and etw_hours must be positive");
  check(!protocol_paths.empty(), "at least one protocol is required");
  check(refit_restarts >= 1, "fit.refit_restarts must be at least 1");
  validate_controller(controller);
  validate_fit(fit);
  check(initial_bg.lo > 0.0 && initial_bg.hi >= initial_bg.lo, "patients.initial_bg must be a positive range");
  check(measurement_noise_sd >= 0.0, "measurement.noise_sd must be non-negative");
  check(sim.step > 0.0 && sim.carb_unit_mg >= 0.0, "simulation.step must be positive");
  check(nutrition.rate.lo >= 0.0 && nutrition.rate.hi >= nutrition.rate.lo, "nutrition.rate must be a range >= 0");
  check(insulin.rate.lo >= 0.0 && insulin.rate.hi > 0.0 && insulin.rate.hi >= insulin.rate.lo,
        "insulin.rate must be a range >= 0 with a positive upper end");
  try {
    patients.validate();
    measurement.validate();
    nutrition.interval.validate();
    insulin.interval.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

double TrialConfig::lqg_target(double target_lo, double target_hi) const {
  switch (target) {
    case TargetSelection::upper: return target_hi;
    case TargetSelection::midpoint: return 0.5 * (target_lo + target_hi);
    case TargetSelection::lower: return target_lo;
  }
  return target_hi;
}

void RetroConfig::validate() const {
  validate_controller(controller);
  validate_fit(fit);
  check(window_hours > 0.0, "retro.window_hours must be positive");
  check(rate_tolerance >= 0.0, "retro.rate_tolerance must be non-negative");
}

TrialConfig parse_trial_config(std::string_view toml_text, const std::filesystem::path& base_dir,
                               const std::string& source) {
  const nlohmann::json doc = parse_doc(toml_text, source);
  Fields f(doc, source);
  TrialConfig c;
  c.schema_version = static_cast<int>(f.integer("schema_version"));
  f.integer("n_patients", c.n_patients);
  f.integer("m_schedules", c.m_schedules);
  f.number("ttw_hours", c.ttw_hours);
  f.number("etw_hours", c.etw_hours);
  if (f.has("seed")) {
    const long s = f.integer("seed");
    if (s < 0) f.fail("'seed' must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  const auto& protocols = f.raw("protocols");
  if (!protocols.is_array()) f.fail("'protocols' must be an array of paths");
  for (const auto& p : protocols) {
    if (!p.is_string()) f.fail("'protocols' entries must be strings");
    std::filesystem::path path(p.get<std::string>());
    c.protocol_paths.push_back(path.is_absolute() || base_dir.empty() ? path : base_dir / path);
  }
  if (f.has("controller")) read_controller(f.table("controller"), c.controller, &c.target);
  if (f.has("fit")) read_fit(f.table("fit"), c.fit, &c.refit_restarts);
  if (f.has("patients")) read_patients(f.table("patients"), c.patients, c.initial_bg);
  if (f.has("simulation")) {
    Fields s = f.table("simulation");
    s.number("step", c.sim.step);
    s.number("carb_unit_mg", c.sim.carb_unit_mg);
    s.boolean("secretion", c.sim.secretion);
    s.finish();
  }
  if (f.has("measurement")) {
    Fields m = f.table("measurement");
    read_interval(m, c.measurement);
    m.number("noise_sd", c.measurement_noise_sd);
    m.finish();
  }
  if (f.has("nutrition")) read_schedule(f.table("nutrition"), c.nutrition);
  if (f.has("insulin")) read_schedule(f.table("insulin"), c.insulin);
  f.finish();
  c.validate();
  return c;
}

TrialConfig load_trial_config(const std::filesystem::path& path) {
  return parse_trial_config(slurp(path), path.parent_path(), path.string());
}

RetroConfig parse_retro_config(std::string_view toml_text, const std::string& source) {
  const nlohmann::json doc = parse_doc(toml_text, source);
  Fields f(doc, source);
  RetroConfig c;
  const long version = f.integer("schema_version");
  if (version != kConfigSchemaVersion) f.fail("unsupported schema_version " + std::to_string(version));
  if (f.has("controller")) read_controller(f.table("controller"), c.controller, nullptr);
  if (f.has("fit")) read_fit(f.table("fit"), c.fit, nullptr);
  if (f.has("retro")) {
    Fields r = f.table("retro");
    r.number("window_hours", c.window_hours);
    r.number("rate_tolerance", c.rate_tolerance);
    r.boolean("include_mild", c.include_mild);
    if (r.has("seed")) c.seed = static_cast<std::uint64_t>(r.integer("seed"));
    r.finish();
  }
  f.finish();
  c.validate();
  return c;
}

RetroConfig load_retro_config(const std::filesystem::path& path) { return parse_retro_config(slurp(path), path.string()); }

}  // namespace glyco
