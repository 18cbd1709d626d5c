#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "glyco/msg_model.hpp"
#include "glyco/schedule.hpp"

namespace glyco {

/// Parameters of the nonlinear glucose-insulin ODE used as ground truth for
/// virtual patients:
///
///   G'  = -(p1 + X) G + p1 g_b + Ra(t) / v_g
///   X'  = -p2 X + p3 (I1 - i_b)
///   I1' = -n_clear (I1 - i_b) + max(0, I2) / v_i + u_iv(t) / v_i
///   I2' = gamma_sec max(0, G - h_thresh) - n_clear I2
///
/// Ra is nutrition converted to mg/hr (see SimOptions::carb_unit_mg), u_iv is
/// IV insulin in uU/hr, I2 is the endogenous secretion rate in uU/hr.
struct VirtualPatient {
  double p1 = 0.2;             ///< glucose effectiveness, 1/hr
  double p2 = 1.5;             ///< remote insulin decay, 1/hr
  double p3 = 0.003;           ///< insulin action gain, 1/hr^2 per uU/mL
  double n_clear = 8.0;        ///< insulin clearance, 1/hr
  double gamma_sec = 30000.0;  ///< secretion gain, uU/hr^2 per mg/dL
  double h_thresh = 140.0;     ///< secretion threshold, mg/dL
  double v_g = 130.0;          ///< glucose distribution volume, dL
  double v_i = 12000.0;        ///< insulin distribution volume, mL
  double g_b = 95.0;           ///< basal glucose, mg/dL
  double i_b = 10.0;           ///< basal plasma insulin, uU/mL

  friend bool operator==(const VirtualPatient&, const VirtualPatient&) = default;
};

/// Uniform sampling ranges for each VirtualPatient field.
struct PatientBox {
  Bounds p1{0.15, 0.30};
  Bounds p2{1.2, 1.8};
  Bounds p3{0.0015, 0.0030};
  Bounds n_clear{7.0, 9.0};
  Bounds gamma_sec{20000.0, 50000.0};
  Bounds h_thresh{130.0, 160.0};
  Bounds v_g{110.0, 150.0};
  Bounds v_i{10000.0, 14000.0};
  Bounds g_b{80.0, 110.0};
  Bounds i_b{5.0, 15.0};

  void validate() const;
  bool contains(const VirtualPatient& p) const;
};

struct SimState {
  double g = 0.0;         ///< BG, mg/dL
  double x_remote = 0.0;  ///< remote insulin action, 1/hr
  double i1 = 0.0;        ///< plasma insulin, uU/mL
  double i2 = 0.0;        ///< secretion state, uU/hr
  double t = 0.0;         ///< hr

  friend bool operator==(const SimState&, const SimState&) = default;
};

struct SimOptions {
  double step = 0.01;            ///< RK4 step, hr (shortened to land on breakpoints)
  double carb_unit_mg = 1000.0;  ///< mg glucose appearing per carb-unit of nutrition
  bool secretion = true;
  long patient_id = -1;          ///< reported in integration errors
};

/// Dense RK4 solution with cubic Hermite interpolation between steps.
class Trajectory {
public:
  double start() const { return times_.front(); }
  double end() const { return times_.back(); }
  const SimState& back() const { return states_.back(); }
  std::size_t steps() const { return times_.size() - 1; }

  /// State at any t in [start, end].
  SimState at(double t) const;
  double glucose_at(double t) const { return at(t).g; }

  /// Number of times the glucose floor was applied.
  int floor_hits() const { return floor_hits_; }

private:
  friend Trajectory simulate(const VirtualPatient&, const SimState&, double, const RateSchedule&,
                             const RateSchedule&, const SimOptions&);
  std::vector<double> times_;
  std::vector<SimState> states_;
  std::vector<SimState> d_left_;   // derivative at the left node of each interval
  std::vector<SimState> d_right_;  // derivative at the right node, same forcing
  int floor_hits_ = 0;
};

VirtualPatient sample_patient(const PatientBox& box, std::uint64_t seed);

/// Basal equilibrium under zero forcing (requires g_b <= h_thresh for I2 = 0).
SimState basal_state(const VirtualPatient& p, double t);

/// Integrate from state0 to `until` under the given schedules.
Trajectory simulate(const VirtualPatient& patient, const SimState& state0, double until, const RateSchedule& insulin,
                    const RateSchedule& nutrition, const SimOptions& options = {});

/// Lognormal inter-measurement gap, clipped to [min_gap, max_gap].
struct IntervalDistribution {
  double median = 1.5;
  double log_sd = 0.5;
  double min_gap = 0.25;
  double max_gap = 6.0;

  double sample(std::mt19937_64& rng) const;
  void validate() const;
};

/// t0 followed by cumulative gaps strictly inside (t0, t1).
std::vector<double> sample_measurement_times(double t0, double t1, std::uint64_t seed,
                                             const IntervalDistribution& dist);

}  // namespace glyco
