#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace glyco {

/// Timestamped BG measurements (hours, mg/dL), strictly increasing in time.
struct GlucoseTrace {
  std::vector<double> times;
  std::vector<double> values;

  std::size_t size() const noexcept { return times.size(); }
  bool empty() const noexcept { return times.empty(); }

  void push_back(double t, double bg);

  /// Measurements with t0 <= t <= t1.
  GlucoseTrace slice(double t0, double t1) const;

  /// Throws InvalidArgument unless sizes agree, times strictly increase and all values are finite.
  void validate() const;

  friend bool operator==(const GlucoseTrace&, const GlucoseTrace&) = default;
};

/// Right-continuous piecewise-constant rate function on [start, horizon].
///
/// Interval i is [breakpoints[i], breakpoints[i+1]) with the last one closed by
/// the horizon. Evaluating exactly at the horizon returns the last rate so that
/// integrators may query the right end of their span.
class RateSchedule {
public:
  RateSchedule() = default;
  RateSchedule(std::vector<double> breakpoints, std::vector<double> rates, double horizon);

  static RateSchedule constant(double start, double rate, double horizon);

  double start() const noexcept { return breakpoints_.empty() ? 0.0 : breakpoints_.front(); }
  double horizon() const noexcept { return horizon_; }
  bool empty() const noexcept { return breakpoints_.empty(); }
  std::span<const double> breakpoints() const noexcept { return breakpoints_; }
  std::span<const double> rates() const noexcept { return rates_; }

  bool covers(double t0, double t1) const noexcept;
  double rate_at(double t) const;

  /// Times in (t0, t1] where the rate actually changes value.
  std::vector<double> change_times(double t0, double t1) const;

  /// Whether any interval overlapping [t0, t1) carries a strictly positive rate.
  bool any_positive(double t0, double t1) const;

  /// Replace everything from t onward by a single interval [t, until) at `rate`.
  /// t must lie in [start, horizon]; an empty schedule starts at t.
  void set_rate_from(double t, double rate, double until);

  /// Restriction to [t0, t1]; requires covers(t0, t1).
  RateSchedule restricted(double t0, double t1) const;

  friend bool operator==(const RateSchedule&, const RateSchedule&) = default;

private:
  std::vector<double> breakpoints_;
  std::vector<double> rates_;
  double horizon_ = 0.0;
};

/// One constant-forcing piece of a pair of schedules.
struct ForcingSegment {
  double begin;
  double end;
  double insulin;
  double nutrition;
};

/// Split [t0, t1] at every breakpoint of either schedule. Throws ScheduleGap if
/// either schedule fails to cover the span.
std::vector<ForcingSegment> forcing_segments(const RateSchedule& insulin, const RateSchedule& nutrition,
                                             double t0, double t1);

}  // namespace glyco
