#include "glyco/lqg.hpp"

#include <algorithm>
#include <cmath>

namespace glyco {

namespace {

// Positive root of 2 a X - k X^2 + q = 0 with k > 0, q >= 0. Written to avoid
// cancellation when a < 0.
double riccati_root(double a, double k, double q) {
  const double disc = std::sqrt(a * a + k * q);
  if (a <= 0.0) {
    const double denom = disc - a;
    return denom > 0.0 ? q / denom : 0.0;
  }
  return (a + disc) / k;
}

}  // namespace

LinearSystem linear_system(const MsgParams& p) {
  return {-p.gamma, -p.beta_i, 1.0, p.sigma * p.sigma, p.r_meas};
}

double lqr_gain(const LinearSystem& sys, double q_cost, double r_cost) {
  if (!(r_cost > 0.0)) throw InvalidArgument("lqr_gain: r_cost must be positive");
  if (!(q_cost >= 0.0)) throw InvalidArgument("lqr_gain: q_cost must be non-negative");
  if (sys.b == 0.0) throw Uncontrollable("lqr_gain: input coefficient b is zero");
  const double p = riccati_root(sys.a, sys.b * sys.b / r_cost, q_cost);
  return sys.b * p / r_cost;
}

ObserverGain kalman_gain(const LinearSystem& sys) {
  if (sys.c == 0.0) throw InvalidArgument("kalman_gain: observation coefficient c is zero");
  if (!(sys.q_noise >= 0.0) || !(sys.r_noise >= 0.0)) throw InvalidArgument("kalman_gain: negative noise level");
  if (sys.r_noise == 0.0) return {0.0, 0.0, true};
  const double s = riccati_root(sys.a, sys.c * sys.c / sys.r_noise, sys.q_noise);
  return {s * sys.c / sys.r_noise, s, false};
}

double reference_shift(const MsgParams& p, double x_r, double nutrition_rate, double u_max) {
  if (!(p.beta_i > 0.0)) throw NoInsulinAuthority("reference_shift: beta_i is zero, insulin cannot move the equilibrium");
  const double u = (p.beta_n * nutrition_rate + p.gamma * (p.g_b - x_r)) / p.beta_i;
  return std::clamp(u, 0.0, u_max);
}

double suggest_rate(const ControllerState& state, const LqgGains& gains, double u_max) {
  const double u = -gains.k_c * (state.x_hat - gains.x_r) + gains.u_r;
  return std::clamp(u, 0.0, u_max);
}

ControllerState filter_predict(const ControllerState& state, const LinearSystem& sys, double drift_target, double dt) {
  if (!(dt >= 0.0)) throw InvalidArgument("filter_predict: negative time step");
  ControllerState out = state;
  out.last_update = state.last_update + dt;
  if (dt == 0.0) return out;
  const double phi = std::exp(sys.a * dt);
  out.x_hat = drift_target + (state.x_hat - drift_target) * phi;
  const double noise = sys.a != 0.0 ? sys.q_noise * std::expm1(2.0 * sys.a * dt) / (2.0 * sys.a) : sys.q_noise * dt;
  out.p_cov = state.p_cov * phi * phi + noise;
  return out;
}

ControllerState filter_correct(const ControllerState& state, const LinearSystem& sys, double y) {
  ControllerState out = state;
  if (sys.r_noise == 0.0) {
    out.x_hat = y / sys.c;
    out.p_cov = 0.0;
    return out;
  }
  const double s = sys.c * sys.c * state.p_cov + sys.r_noise;
  const double k = state.p_cov * sys.c / s;
  out.x_hat = state.x_hat + k * (y - sys.c * state.x_hat);
  out.p_cov = state.p_cov * sys.r_noise / s;
  return out;
}

ControllerState filter_update(const ControllerState& state, const LinearSystem& sys, double drift_target, double y,
                              double dt) {
  return filter_correct(filter_predict(state, sys, drift_target, dt), sys, y);
}

ControllerState estimate_state(const MsgParams& p, const GlucoseTrace& trace, const RateSchedule& insulin,
                               const RateSchedule& nutrition) {
  if (trace.empty()) throw InsufficientData("estimate_state: empty trace");
  const LinearSystem sys = linear_system(p);
  ControllerState st{trace.values.front(), p.r_meas, trace.times.front()};
  for (std::size_t i = 1; i < trace.size(); ++i) {
    for (const auto& seg : forcing_segments(insulin, nutrition, trace.times[i - 1], trace.times[i]))
      st = filter_predict(st, sys, equilibrium(p, seg.insulin, seg.nutrition), seg.end - seg.begin);
    st.last_update = trace.times[i];
    st = filter_correct(st, sys, trace.values[i]);
  }
  return st;
}

LqgGains design_controller(const MsgParams& p, const ControllerConfig& config, double x_r, double nutrition_rate) {
  const LinearSystem sys = linear_system(p);
  LqgGains g;
  g.k_c = lqr_gain(sys, config.q_cost, config.r_cost);
  g.k_f = kalman_gain(sys).gain;
  g.x_r = x_r;
  g.u_r = reference_shift(p, x_r, nutrition_rate, config.u_max);
  return g;
}

}  // namespace glyco
