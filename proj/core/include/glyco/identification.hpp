#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "glyco/errors.hpp"
#include "glyco/msg_model.hpp"
#include "glyco/schedule.hpp"

namespace glyco {

/// Diagonal jitter added to the measurement covariance before factorization.
inline constexpr double kCovarianceJitter = 1e-9;

/// Measurements plus the forcing that produced them over [t_start, t_end].
struct TrainingWindow {
  GlucoseTrace trace;
  RateSchedule insulin;
  RateSchedule nutrition;
  double t_start = 0.0;
  double t_end = 24.0;
};

struct FitConfig {
  ParamBox box;
  int restarts = 8;
  double tolerance = 1e-8;
  int max_iterations = 2000;
  std::optional<double> fixed_r_meas;  ///< pin measurement noise instead of fitting it
  std::size_t min_measurements = 4;
  bool require_insulin_exposure = true;
  std::uint64_t seed = 0;
  /// When set, the first restart starts here (projected into the box) and
  /// the remaining restarts - 1 come from the Latin hypercube.
  std::optional<MsgParams> warm_start;
};

struct FitResult {
  MsgParams params;
  double neg_log_likelihood = 0.0;
  bool converged = false;
  int iterations = 0;
  int restarts_used = 0;

  friend bool operator==(const FitResult&, const FitResult&) = default;
};

/// Every restart failed to produce a finite likelihood. Carries the best
/// parameters seen (possibly the initial guess) for diagnostics.
class FitFailed : public Error {
public:
  FitFailed(const std::string& what, MsgParams best) : Error(what), best_(best) {}
  const MsgParams& best_effort() const noexcept { return best_; }

private:
  MsgParams best_;
};

/// Throws InvalidArgument / InsufficientData / ScheduleGap when the window
/// cannot be fitted under `config`.
void validate_window(const TrainingWindow& window, const FitConfig& config);

/// Gaussian negative log-likelihood of trace values 1..K given the first
/// measurement as the exact initial glucose:
///   1/2 log det S + 1/2 r' S^-1 r + K/2 log(2 pi),  S = Sigma(theta) + jitter I.
/// Evaluated in O(K) through the innovation (prediction-error) decomposition.
double neg_log_likelihood(const MsgParams& params, const TrainingWindow& window);

/// Multi-start box-constrained maximum-likelihood fit (Nelder-Mead on logit
/// coordinates, Latin-hypercube starts). Deterministic for a fixed config.seed.
FitResult fit(const TrainingWindow& window, const FitConfig& config);

}  // namespace glyco
