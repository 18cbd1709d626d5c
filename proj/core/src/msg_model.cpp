#include "glyco/msg_model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "glyco/errors.hpp"

namespace glyco {

namespace {

// Fraction of the gap to equilibrium that survives dt.
double decay(double gamma, double dt) { return std::exp(-gamma * dt); }

// Stationary-variance fraction accumulated over dt: 1 - exp(-2 gamma dt).
double accumulated(double gamma, double dt) { return -std::expm1(-2.0 * gamma * dt); }

void check_bounds(const Bounds& b, const char* name) {
  if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || b.lo > b.hi)
    throw InvalidArgument(std::string("parameter box: invalid bounds for ") + name);
}

void check_times(std::span<const double> times, double t0) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i])) throw InvalidArgument("prediction times must be finite");
    if (i == 0 && times[i] < t0) throw InvalidArgument("prediction times precede the anchor");
    if (i > 0 && times[i] < times[i - 1]) throw InvalidArgument("prediction times are not sorted");
  }
}

}  // namespace

bool ParamBox::contains(const MsgParams& p) const {
  const auto v = p.to_array();
  const auto b = to_array();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!b[i].contains(v[i])) return false;
  return true;
}

void ParamBox::validate() const {
  check_bounds(gamma, "gamma");
  check_bounds(g_b, "g_b");
  check_bounds(beta_n, "beta_n");
  check_bounds(beta_i, "beta_i");
  check_bounds(sigma, "sigma");
  check_bounds(r_meas, "r_meas");
  if (gamma.lo <= 0.0) throw InvalidArgument("parameter box: gamma must be bounded away from zero");
  if (sigma.lo < 0.0 || r_meas.lo < 0.0 || beta_i.lo < 0.0 || beta_n.lo < 0.0)
    throw InvalidArgument("parameter box: gains and noise levels must be non-negative");
}

void validate(const MsgParams& p) {
  for (double v : p.to_array())
    if (!std::isfinite(v)) throw InvalidArgument("MSG parameters must be finite");
  if (!(p.gamma > 0.0)) throw InvalidArgument("MSG parameters: gamma must be positive");
  if (p.sigma < 0.0) throw InvalidArgument("MSG parameters: sigma must be non-negative");
  if (p.r_meas < 0.0) throw InvalidArgument("MSG parameters: r_meas must be non-negative");
}

double equilibrium(const MsgParams& p, double insulin_rate, double nutrition_rate) {
  return p.g_b + (p.beta_n * nutrition_rate - p.beta_i * insulin_rate) / p.gamma;
}

Moments propagate(const MsgParams& p, Moments m, double dt, double insulin_rate, double nutrition_rate) {
  if (!(dt >= 0.0)) throw InvalidArgument("transition: negative time step");
  if (dt == 0.0) return m;
  const double eq = equilibrium(p, insulin_rate, nutrition_rate);
  const double d = decay(p.gamma, dt);
  const double stationary = p.sigma * p.sigma / (2.0 * p.gamma);
  return {eq + (m.mean - eq) * d, m.var * d * d + stationary * accumulated(p.gamma, dt)};
}

Moments transition(const MsgParams& p, double g0, double dt, double insulin_rate, double nutrition_rate) {
  return propagate(p, {g0, 0.0}, dt, insulin_rate, nutrition_rate);
}

GaussianPrediction predict_joint(const MsgParams& p, Anchor anchor, std::span<const double> times,
                                 const RateSchedule& insulin, const RateSchedule& nutrition) {
  validate(p);
  check_times(times, anchor.time);
  const std::size_t n = times.size();

  GaussianPrediction out;
  out.times.assign(times.begin(), times.end());
  out.mean.resize(static_cast<Eigen::Index>(n));
  out.cov.setZero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  if (n == 0) return out;

  Moments m{anchor.glucose, 0.0};
  double t = anchor.time;
  std::vector<double> latent_var(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& seg : forcing_segments(insulin, nutrition, t, times[i]))
      m = propagate(p, m, seg.end - seg.begin, seg.insulin, seg.nutrition);
    t = times[i];
    out.mean[static_cast<Eigen::Index>(i)] = m.mean;
    latent_var[i] = m.var;
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out.cov(ii, ii) = latent_var[i] + p.r_meas;
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double c = latent_var[i] * decay(p.gamma, times[j] - times[i]);
      out.cov(ii, jj) = c;
      out.cov(jj, ii) = c;
    }
  }
  return out;
}

GlucoseTrace simulate_path(const MsgParams& p, Anchor anchor, std::span<const double> times,
                           const RateSchedule& insulin, const RateSchedule& nutrition, std::uint64_t seed) {
  validate(p);
  check_times(times, anchor.time);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  GlucoseTrace out;
  double g = anchor.glucose;
  double t = anchor.time;
  const double meas_sd = std::sqrt(p.r_meas);
  for (double target : times) {
    for (const auto& seg : forcing_segments(insulin, nutrition, t, target)) {
      const Moments m = transition(p, g, seg.end - seg.begin, seg.insulin, seg.nutrition);
      const double z = normal(rng);
      g = m.var > 0.0 ? m.mean + std::sqrt(m.var) * z : m.mean;
    }
    t = target;
    const double z = normal(rng);
    out.push_back(target, meas_sd > 0.0 ? g + meas_sd * z : g);
  }
  return out;
}

}  // namespace glyco
