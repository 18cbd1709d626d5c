#include "glyco/identification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include "glyco/nelder_mead.hpp"

namespace glyco {

namespace {

constexpr double kLogitEdge = 1e-6;

double sigmoid(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

double logit(double u) {
  u = std::clamp(u, kLogitEdge, 1.0 - kLogitEdge);
  return std::log(u / (1.0 - u));
}

// Maps unconstrained coordinates onto the free dimensions of the box.
struct BoxMap {
  std::array<Bounds, MsgParams::kCount> bounds;
  std::array<double, MsgParams::kCount> fixed{};
  std::vector<std::size_t> free;

  BoxMap(const ParamBox& box, const std::optional<double>& fixed_r) : bounds(box.to_array()) {
    for (std::size_t i = 0; i < bounds.size(); ++i) {
      const bool pinned_r = i == 5 && fixed_r.has_value();
      if (pinned_r) {
        fixed[i] = *fixed_r;
      } else if (bounds[i].hi > bounds[i].lo) {
        free.push_back(i);
      } else {
        fixed[i] = bounds[i].lo;
      }
    }
  }

  MsgParams to_params(const std::vector<double>& z) const {
    auto a = fixed;
    for (std::size_t k = 0; k < free.size(); ++k) {
      const Bounds& b = bounds[free[k]];
      a[free[k]] = b.lo + (b.hi - b.lo) * sigmoid(z[k]);
    }
    return MsgParams::from_array(a);
  }

  std::vector<double> to_coords(const MsgParams& p) const {
    const auto a = p.to_array();
    std::vector<double> z(free.size());
    for (std::size_t k = 0; k < free.size(); ++k) {
      const Bounds& b = bounds[free[k]];
      z[k] = logit((a[free[k]] - b.lo) / (b.hi - b.lo));
    }
    return z;
  }
};

std::vector<std::vector<double>> latin_hypercube(std::size_t points, std::size_t dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> out(points, std::vector<double>(dims));
  std::vector<std::size_t> perm(points);
  for (std::size_t d = 0; d < dims; ++d) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t p = 0; p < points; ++p)
      out[p][d] = logit((static_cast<double>(perm[p]) + unit(rng)) / static_cast<double>(points));
  }
  return out;
}

// Constant-forcing pieces between consecutive measurements; `observe` marks
// the piece that ends on measurement index `observe`.
struct Step {
  double dt;
  double insulin;
  double nutrition;
  std::size_t observe;  // 0 = no measurement at the end of this piece
};

std::vector<Step> forcing_steps(const TrainingWindow& w) {
  std::vector<Step> steps;
  const auto& tr = w.trace;
  for (std::size_t i = 1; i < tr.size(); ++i) {
    const auto segs = forcing_segments(w.insulin, w.nutrition, tr.times[i - 1], tr.times[i]);
    for (std::size_t k = 0; k < segs.size(); ++k)
      steps.push_back({segs[k].end - segs[k].begin, segs[k].insulin, segs[k].nutrition, k + 1 == segs.size() ? i : 0});
    if (segs.empty()) steps.push_back({0.0, 0.0, 0.0, i});
  }
  return steps;
}

double innovation_nll(const MsgParams& params, const std::vector<Step>& steps, const GlucoseTrace& tr) {
  const double r = params.r_meas + kCovarianceJitter;
  Moments state{tr.values[0], 0.0};
  double nll = 0.0;
  for (const Step& st : steps) {
    state = propagate(params, state, st.dt, st.insulin, st.nutrition);
    if (st.observe == 0) continue;
    const double s = state.var + r;
    if (!(s > 0.0) || !std::isfinite(s)) throw DegenerateParameters("innovation variance collapsed");
    const double e = tr.values[st.observe] - state.mean;
    nll += 0.5 * (std::log(2.0 * std::numbers::pi * s) + e * e / s);
    const double gain = state.var / s;
    state.mean += gain * e;
    state.var *= r / s;
  }
  if (!std::isfinite(nll)) throw DegenerateParameters("non-finite likelihood");
  return nll;
}

}  // namespace

void validate_window(const TrainingWindow& w, const FitConfig& config) {
  w.trace.validate();
  if (!(w.t_end > w.t_start)) throw InvalidArgument("training window: t_end must exceed t_start");
  if (w.trace.size() < std::max<std::size_t>(config.min_measurements, 2))
    throw InsufficientData("training window: " + std::to_string(w.trace.size()) + " measurements, need at least " +
                           std::to_string(std::max<std::size_t>(config.min_measurements, 2)));
  if (w.trace.times.front() < w.t_start || w.trace.times.back() > w.t_end)
    throw InvalidArgument("training window: measurements outside [t_start, t_end]");
  const double t0 = w.trace.times.front();
  const double t1 = w.trace.times.back();
  if (!w.insulin.covers(t0, t1)) throw ScheduleGap("training window: insulin schedule does not cover measurements");
  if (!w.nutrition.covers(t0, t1))
    throw ScheduleGap("training window: nutrition schedule does not cover measurements");
  if (config.require_insulin_exposure && !w.insulin.any_positive(t0, t1))
    throw InsufficientData("training window: no insulin administered, insulin effect is not identifiable");
}

double neg_log_likelihood(const MsgParams& params, const TrainingWindow& window) {
  validate(params);
  if (window.trace.size() < 2) throw InsufficientData("likelihood needs at least two measurements");
  return innovation_nll(params, forcing_steps(window), window.trace);
}

FitResult fit(const TrainingWindow& window, const FitConfig& config) {
  config.box.validate();
  if (config.restarts < 1) throw InvalidArgument("fit: need at least one restart");
  if (config.fixed_r_meas && !(*config.fixed_r_meas >= 0.0)) throw InvalidArgument("fit: fixed r_meas must be >= 0");
  validate_window(window, config);

  const BoxMap map(config.box, config.fixed_r_meas);
  const auto steps = forcing_steps(window);
  auto objective = [&](const std::vector<double>& z) {
    try {
      return innovation_nll(map.to_params(z), steps, window.trace);
    } catch (const DegenerateParameters&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  std::vector<std::vector<double>> starts;
  if (config.warm_start) {
    starts = latin_hypercube(static_cast<std::size_t>(config.restarts - 1), map.free.size(), config.seed);
    starts.insert(starts.begin(), map.to_coords(*config.warm_start));
  } else {
    starts = latin_hypercube(static_cast<std::size_t>(config.restarts), map.free.size(), config.seed);
  }
  NelderMeadOptions opts;
  opts.size_tolerance = config.tolerance;
  opts.max_iterations = config.max_iterations;

  std::optional<NelderMeadResult> best;
  int used = 0;
  for (const auto& z0 : starts) {
    auto res = nelder_mead(objective, z0, opts);
    if (!std::isfinite(res.value)) continue;
    ++used;
    // Ties resolve to the earliest restart.
    if (!best || res.value < best->value) best = std::move(res);
  }
  if (!best) {
    const auto guess = starts.empty() ? std::vector<double>{} : starts.front();
    throw FitFailed("fit: every restart diverged", map.to_params(guess));
  }

  FitResult out;
  out.params = map.to_params(best->x);
  out.neg_log_likelihood = best->value;
  out.converged = best->converged;
  out.iterations = best->iterations;
  out.restarts_used = used;
  return out;
}

}  // namespace glyco
