#pragma once

#include "glyco/errors.hpp"
#include "glyco/msg_model.hpp"

namespace glyco {

/// Scalar system  x' = a x + b u + xi,  y = c x + eta,
/// with Var(xi) intensity q_noise and Var(eta) = r_noise.
struct LinearSystem {
  double a = 0.0;
  double b = 0.0;
  double c = 1.0;
  double q_noise = 0.0;
  double r_noise = 0.0;
};

/// Linearization of the stochastic glucose model around its drift:
/// a = -gamma, b = -beta_i, c = 1, q_noise = sigma^2, r_noise = r_meas.
LinearSystem linear_system(const MsgParams& p);

/// Observer gain. When r_noise == 0 the estimator reduces to direct
/// substitution x_hat = y / c, flagged by `direct_substitution` (gain is then
/// unbounded and reported as 0).
struct ObserverGain {
  double gain = 0.0;
  double variance = 0.0;  ///< stationary estimation error variance S
  bool direct_substitution = false;
};

struct LqgGains {
  double k_c = 0.0;  ///< state-feedback gain, u = -k_c (x_hat - x_r) + u_r
  double k_f = 0.0;  ///< stationary observer gain
  double x_r = 0.0;  ///< reference BG, mg/dL
  double u_r = 0.0;  ///< feed-forward insulin rate, U/hr
};

struct ControllerState {
  double x_hat = 0.0;  ///< estimated BG, mg/dL
  double p_cov = 0.0;  ///< estimate variance, (mg/dL)^2
  double last_update = 0.0;
};

struct ControllerConfig {
  double u_max = 25.0;
  double q_cost = 1.0;
  double r_cost = 0.05;
};

/// Raised when the model carries no insulin effect (beta_i == 0).
class NoInsulinAuthority : public Error {
public:
  using Error::Error;
};

/// Positive root P of 2aP - b^2 P^2 / r + q = 0; returns k_c = b P / r_cost.
double lqr_gain(const LinearSystem& sys, double q_cost, double r_cost);

/// Stationary Kalman-Bucy gain from 2aS - c^2 S^2 / r + q = 0, k_f = S c / r.
ObserverGain kalman_gain(const LinearSystem& sys);

/// Insulin rate whose model equilibrium equals x_r at the given nutrition,
/// clamped to [0, u_max].
double reference_shift(const MsgParams& p, double x_r, double nutrition_rate, double u_max);

/// u = clamp(-k_c (x_hat - x_r) + u_r, 0, u_max).
double suggest_rate(const ControllerState& state, const LqgGains& gains, double u_max);

/// Predict over dt with the exact OU discretization toward `drift_target`
/// (the model equilibrium under the held inputs), then update on y.
ControllerState filter_predict(const ControllerState& state, const LinearSystem& sys, double drift_target, double dt);
ControllerState filter_correct(const ControllerState& state, const LinearSystem& sys, double y);
ControllerState filter_update(const ControllerState& state, const LinearSystem& sys, double drift_target, double y,
                              double dt);

/// Filter a measured trace under the model: starts at the first value with
/// variance r_meas, then predicts across each constant-forcing piece and
/// corrects on every later measurement. Returns the estimate at the last one.
ControllerState estimate_state(const MsgParams& p, const GlucoseTrace& trace, const RateSchedule& insulin,
                               const RateSchedule& nutrition);

/// Gains for tracking x_r with the given model and nutrition rate.
LqgGains design_controller(const MsgParams& p, const ControllerConfig& config, double x_r, double nutrition_rate);

}  // namespace glyco
