#include "glyco/virtual_patient.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

#include "glyco/errors.hpp"

namespace glyco {

namespace {

using Vec = std::array<double, 4>;

constexpr double kGlucoseFloor = 1.0;
constexpr double kMicroUnitsPerUnit = 1e6;

Vec to_vec(const SimState& s) { return {s.g, s.x_remote, s.i1, s.i2}; }
SimState to_state(const Vec& v, double t) { return {v[0], v[1], v[2], v[3], t}; }

struct Rhs {
  const VirtualPatient& p;
  double ra_per_dl;    // nutrition appearance, mg/dL/hr
  double insulin_in;   // IV insulin, uU/mL/hr
  bool secretion;

  Vec operator()(const Vec& y) const {
    const double g = y[0], x = y[1], i1 = y[2], i2 = y[3];
    Vec d;
    d[0] = -(p.p1 + x) * g + p.p1 * p.g_b + ra_per_dl;
    d[1] = -p.p2 * x + p.p3 * (i1 - p.i_b);
    d[2] = -p.n_clear * (i1 - p.i_b) + std::max(0.0, i2) / p.v_i + insulin_in;
    d[3] = (secretion ? p.gamma_sec * std::max(0.0, g - p.h_thresh) : 0.0) - p.n_clear * i2;
    return d;
  }
};

Vec axpy(const Vec& y, double h, const Vec& k) {
  return {y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2], y[3] + h * k[3]};
}

double hermite(double y0, double y1, double d0, double d1, double h, double s) {
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * d1;
}

void check_bounds(const Bounds& b, const char* name) {
  if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || b.lo > b.hi || b.lo <= 0.0)
    throw InvalidArgument(std::string("patient box: invalid range for ") + name);
}

}  // namespace

void PatientBox::validate() const {
  check_bounds(p1, "p1");
  check_bounds(p2, "p2");
  check_bounds(p3, "p3");
  check_bounds(n_clear, "n_clear");
  check_bounds(gamma_sec, "gamma_sec");
  check_bounds(h_thresh, "h_thresh");
  check_bounds(v_g, "v_g");
  check_bounds(v_i, "v_i");
  check_bounds(g_b, "g_b");
  check_bounds(i_b, "i_b");
}

bool PatientBox::contains(const VirtualPatient& p) const {
  return p1.contains(p.p1) && p2.contains(p.p2) && p3.contains(p.p3) && n_clear.contains(p.n_clear) &&
         gamma_sec.contains(p.gamma_sec) && h_thresh.contains(p.h_thresh) && v_g.contains(p.v_g) &&
         v_i.contains(p.v_i) && g_b.contains(p.g_b) && i_b.contains(p.i_b);
}

VirtualPatient sample_patient(const PatientBox& box, std::uint64_t seed) {
  box.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](const Bounds& b) { return b.lo + (b.hi - b.lo) * unit(rng); };
  VirtualPatient p;
  p.p1 = draw(box.p1);
  p.p2 = draw(box.p2);
  p.p3 = draw(box.p3);
  p.n_clear = draw(box.n_clear);
  p.gamma_sec = draw(box.gamma_sec);
  p.h_thresh = draw(box.h_thresh);
  p.v_g = draw(box.v_g);
  p.v_i = draw(box.v_i);
  p.g_b = draw(box.g_b);
  p.i_b = draw(box.i_b);
  return p;
}

SimState basal_state(const VirtualPatient& p, double t) { return {p.g_b, 0.0, p.i_b, 0.0, t}; }

SimState Trajectory::at(double t) const {
  if (times_.empty() || t < times_.front() || t > times_.back())
    throw InvalidArgument("trajectory queried outside its span");
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  std::size_t k = static_cast<std::size_t>(it - times_.begin());
  if (k == times_.size()) return states_.back();
  k -= 1;
  const double h = times_[k + 1] - times_[k];
  const double s = h > 0.0 ? (t - times_[k]) / h : 0.0;
  const Vec y0 = to_vec(states_[k]), y1 = to_vec(states_[k + 1]);
  const Vec d0 = to_vec(d_left_[k]), d1 = to_vec(d_right_[k]);
  Vec out;
  for (std::size_t c = 0; c < 4; ++c) out[c] = hermite(y0[c], y1[c], d0[c], d1[c], h, s);
  return to_state(out, t);
}

Trajectory simulate(const VirtualPatient& patient, const SimState& state0, double until, const RateSchedule& insulin,
                    const RateSchedule& nutrition, const SimOptions& options) {
  if (!(options.step > 0.0)) throw InvalidArgument("simulate: step must be positive");
  if (!(until >= state0.t)) throw InvalidArgument("simulate: 'until' precedes the initial state");

  Trajectory traj;
  traj.times_.push_back(state0.t);
  traj.states_.push_back(state0);
  Vec y = to_vec(state0);

  for (const auto& seg : forcing_segments(insulin, nutrition, state0.t, until)) {
    const Rhs f{patient, options.carb_unit_mg * seg.nutrition / patient.v_g,
                kMicroUnitsPerUnit * seg.insulin / patient.v_i, options.secretion};
    const double span = seg.end - seg.begin;
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(span / options.step - 1e-9)));
    const double h = span / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec k1 = f(y);
      const Vec k2 = f(axpy(y, 0.5 * h, k1));
      const Vec k3 = f(axpy(y, 0.5 * h, k2));
      const Vec k4 = f(axpy(y, h, k3));
      Vec next;
      for (std::size_t c = 0; c < 4; ++c) next[c] = y[c] + h / 6.0 * (k1[c] + 2 * k2[c] + 2 * k3[c] + k4[c]);
      const double t = i + 1 == n ? seg.end : seg.begin + h * static_cast<double>(i + 1);

      for (double v : next) {
        if (!std::isfinite(v)) {
          std::ostringstream msg;
          msg << "simulate: non-finite state for patient " << options.patient_id << " at t=" << t << " hr";
          throw SimulationError(msg.str());
        }
      }
      if (next[0] < kGlucoseFloor) {
        if (traj.floor_hits_ == 0)
          spdlog::warn("patient {}: glucose fell below {} mg/dL at t={:.2f} hr, flooring", options.patient_id,
                       kGlucoseFloor, t);
        ++traj.floor_hits_;
        next[0] = kGlucoseFloor;
      }

      traj.d_left_.push_back(to_state(k1, traj.times_.back()));
      traj.d_right_.push_back(to_state(f(next), t));
      traj.times_.push_back(t);
      traj.states_.push_back(to_state(next, t));
      y = next;
    }
  }
  return traj;
}

double IntervalDistribution::sample(std::mt19937_64& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double gap = median * std::exp(log_sd * normal(rng));
  return std::clamp(gap, min_gap, max_gap);
}

void IntervalDistribution::validate() const {
  if (!(median > 0.0) || !(log_sd >= 0.0) || !(min_gap > 0.0) || !(max_gap >= min_gap))
    throw InvalidArgument("interval distribution: invalid parameters");
}

std::vector<double> sample_measurement_times(double t0, double t1, std::uint64_t seed,
                                             const IntervalDistribution& dist) {
  if (!(t1 > t0)) throw InvalidArgument("sample_measurement_times: empty window");
  dist.validate();
  std::mt19937_64 rng(seed);
  std::vector<double> out{t0};
  double t = t0;
  while (true) {
    t += dist.sample(rng);
    if (!(t < t1)) break;
    out.push_back(t);
  }
  return out;
}

}  // namespace glyco
