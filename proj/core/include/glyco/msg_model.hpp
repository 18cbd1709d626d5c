#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "glyco/schedule.hpp"

namespace glyco {

/// Parameters of the stochastic glucose model
///
///   dG = [-gamma (G - g_b) + beta_n N(t) - beta_i I(t)] dt + sigma dW,
///   y  = G + eta,  eta ~ N(0, r_meas).
///
/// Under constant forcing the drift settles at
/// g_b + (beta_n N - beta_i I) / gamma; see equilibrium().
struct MsgParams {
  double gamma = 0.5;   ///< mean-reversion rate, 1/hr
  double g_b = 120.0;   ///< basal glucose, mg/dL
  double beta_n = 0.0;  ///< nutrition gain, mg/dL/hr per carb-unit/hr
  double beta_i = 0.0;  ///< insulin gain, mg/dL/hr per U/hr
  double sigma = 0.0;   ///< diffusion amplitude, mg/dL/sqrt(hr)
  double r_meas = 0.0;  ///< measurement noise variance, (mg/dL)^2

  static constexpr std::size_t kCount = 6;

  std::array<double, kCount> to_array() const { return {gamma, g_b, beta_n, beta_i, sigma, r_meas}; }
  static MsgParams from_array(const std::array<double, kCount>& a) { return {a[0], a[1], a[2], a[3], a[4], a[5]}; }

  friend bool operator==(const MsgParams&, const MsgParams&) = default;
};

struct Bounds {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
  friend bool operator==(const Bounds&, const Bounds&) = default;
};

/// Admissible parameter box.
struct ParamBox {
  Bounds gamma{0.01, 3.0};
  Bounds g_b{40.0, 400.0};
  Bounds beta_n{0.0, 50.0};
  Bounds beta_i{0.0, 50.0};
  Bounds sigma{0.0, 60.0};
  Bounds r_meas{0.0, 400.0};

  std::array<Bounds, MsgParams::kCount> to_array() const { return {gamma, g_b, beta_n, beta_i, sigma, r_meas}; }
  bool contains(const MsgParams& p) const;
  void validate() const;

  friend bool operator==(const ParamBox&, const ParamBox&) = default;
};

/// Throws InvalidArgument unless gamma > 0, sigma >= 0, r_meas >= 0 and all fields are finite.
void validate(const MsgParams& p);

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

/// Initial condition of a prediction: latent glucose known exactly at `time`.
struct Anchor {
  double time = 0.0;
  double glucose = 0.0;
};

/// Joint Gaussian of the measurements y(times).
struct GaussianPrediction {
  std::vector<double> times;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Fixed point of the drift under constant insulin/nutrition rates.
double equilibrium(const MsgParams& p, double insulin_rate, double nutrition_rate);

/// Exact law of G(dt) given G(0) = g0 under constant forcing.
Moments transition(const MsgParams& p, double g0, double dt, double insulin_rate, double nutrition_rate);

/// Propagate a Gaussian (mean, var) of G over dt under constant forcing.
Moments propagate(const MsgParams& p, Moments m, double dt, double insulin_rate, double nutrition_rate);

/// Joint distribution of measurements at `times` (ascending, >= anchor.time).
GaussianPrediction predict_joint(const MsgParams& p, Anchor anchor, std::span<const double> times,
                                 const RateSchedule& insulin, const RateSchedule& nutrition);

/// One exact sample path observed at `times`, measurement noise included.
GlucoseTrace simulate_path(const MsgParams& p, Anchor anchor, std::span<const double> times,
                           const RateSchedule& insulin, const RateSchedule& nutrition, std::uint64_t seed);

}  // namespace glyco
