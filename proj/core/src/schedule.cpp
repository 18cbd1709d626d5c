#include "glyco/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "glyco/errors.hpp"

namespace glyco {

void GlucoseTrace::push_back(double t, double bg) {
  times.push_back(t);
  values.push_back(bg);
}

GlucoseTrace GlucoseTrace::slice(double t0, double t1) const {
  GlucoseTrace out;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] >= t0 && times[i] <= t1) out.push_back(times[i], values[i]);
  }
  return out;
}

void GlucoseTrace::validate() const {
  if (times.size() != values.size()) throw InvalidArgument("glucose trace: times/values size mismatch");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || !std::isfinite(values[i]))
      throw InvalidArgument("glucose trace: non-finite entry at index " + std::to_string(i));
    if (i > 0 && !(times[i] > times[i - 1]))
      throw InvalidArgument("glucose trace: times not strictly increasing at index " + std::to_string(i));
  }
}

RateSchedule::RateSchedule(std::vector<double> breakpoints, std::vector<double> rates, double horizon)
    : breakpoints_(std::move(breakpoints)), rates_(std::move(rates)), horizon_(horizon) {
  if (breakpoints_.size() != rates_.size()) throw InvalidArgument("rate schedule: breakpoints/rates size mismatch");
  if (breakpoints_.empty()) throw InvalidArgument("rate schedule: needs at least one interval");
  for (std::size_t i = 0; i < rates_.size(); ++i) {
    if (!std::isfinite(rates_[i]) || rates_[i] < 0.0)
      throw InvalidArgument("rate schedule: rate " + std::to_string(i) + " is negative or non-finite");
    if (!std::isfinite(breakpoints_[i])) throw InvalidArgument("rate schedule: non-finite breakpoint");
    if (i > 0 && !(breakpoints_[i] > breakpoints_[i - 1]))
      throw InvalidArgument("rate schedule: breakpoints not strictly increasing at index " + std::to_string(i));
  }
  if (!(horizon_ >= breakpoints_.back())) throw InvalidArgument("rate schedule: horizon precedes last breakpoint");
}

RateSchedule RateSchedule::constant(double start, double rate, double horizon) {
  return RateSchedule({start}, {rate}, horizon);
}

bool RateSchedule::covers(double t0, double t1) const noexcept {
  return !breakpoints_.empty() && t0 >= breakpoints_.front() && t1 <= horizon_ && t0 <= t1;
}

double RateSchedule::rate_at(double t) const {
  if (breakpoints_.empty() || t < breakpoints_.front() || t > horizon_)
    throw ScheduleGap("rate schedule queried at t=" + std::to_string(t) + " outside its span");
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  return rates_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

std::vector<double> RateSchedule::change_times(double t0, double t1) const {
  std::vector<double> out;
  for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
    if (breakpoints_[i] > t0 && breakpoints_[i] <= t1 && rates_[i] != rates_[i - 1]) out.push_back(breakpoints_[i]);
  }
  return out;
}

bool RateSchedule::any_positive(double t0, double t1) const {
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    const double b = breakpoints_[i];
    const double e = i + 1 < breakpoints_.size() ? breakpoints_[i + 1] : horizon_;
    if (e > t0 && b < t1 && rates_[i] > 0.0) return true;
  }
  return false;
}

void RateSchedule::set_rate_from(double t, double rate, double until) {
  if (!std::isfinite(rate) || rate < 0.0) throw InvalidArgument("rate schedule: negative or non-finite rate");
  if (!(until >= t)) throw InvalidArgument("rate schedule: 'until' precedes 't'");
  if (!breakpoints_.empty()) {
    if (t < breakpoints_.front() || t > horizon_)
      throw ScheduleGap("rate schedule: set_rate_from outside current span");
    while (!breakpoints_.empty() && breakpoints_.back() >= t) {
      breakpoints_.pop_back();
      rates_.pop_back();
    }
  }
  breakpoints_.push_back(t);
  rates_.push_back(rate);
  horizon_ = until;
}

RateSchedule RateSchedule::restricted(double t0, double t1) const {
  if (!covers(t0, t1)) throw ScheduleGap("rate schedule: restriction outside span");
  std::vector<double> bp{t0};
  std::vector<double> r{rate_at(t0)};
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    if (breakpoints_[i] > t0 && breakpoints_[i] < t1) {
      bp.push_back(breakpoints_[i]);
      r.push_back(rates_[i]);
    }
  }
  return RateSchedule(std::move(bp), std::move(r), t1);
}

std::vector<ForcingSegment> forcing_segments(const RateSchedule& insulin, const RateSchedule& nutrition,
                                             double t0, double t1) {
  if (!insulin.covers(t0, t1))
    throw ScheduleGap("insulin schedule does not cover [" + std::to_string(t0) + ", " + std::to_string(t1) + "]");
  if (!nutrition.covers(t0, t1))
    throw ScheduleGap("nutrition schedule does not cover [" + std::to_string(t0) + ", " + std::to_string(t1) + "]");

  std::vector<double> cuts{t0};
  for (double b : insulin.breakpoints())
    if (b > t0 && b < t1) cuts.push_back(b);
  for (double b : nutrition.breakpoints())
    if (b > t0 && b < t1) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  cuts.push_back(t1);

  std::vector<ForcingSegment> out;
  out.reserve(cuts.size());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (!(cuts[i + 1] > cuts[i])) continue;
    out.push_back({cuts[i], cuts[i + 1], insulin.rate_at(cuts[i]), nutrition.rate_at(cuts[i])});
  }
  return out;
}

}  // namespace glyco
