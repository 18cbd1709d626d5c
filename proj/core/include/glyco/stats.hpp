#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "glyco/protocol.hpp"
#include "glyco/schedule.hpp"
#include "glyco/trial.hpp"

namespace glyco {

enum class Region { severe_hypo, moderate_hypo, mild_hypo, target, mild_hyper, moderate_hyper, severe_hyper };

inline constexpr Region kAllRegions[] = {Region::severe_hypo,    Region::moderate_hypo, Region::mild_hypo,
                                         Region::target,         Region::mild_hyper,    Region::moderate_hyper,
                                         Region::severe_hyper};

const char* to_string(Region r);

/// Band edges in mg/dL:
///   severe hypo [0, 40), moderate hypo [40, 70), mild hypo [70, target_lo),
///   target [target_lo, target_hi], mild hyper (target_hi, 250],
///   moderate hyper (250, 400], severe hyper (400, inf).
struct GlycemicRegions {
  double severe_hypo_below = 40.0;
  double moderate_hypo_below = 70.0;
  double target_lo = 140.0;
  double target_hi = 180.0;
  double mild_hyper_upto = 250.0;
  double moderate_hyper_upto = 400.0;

  static GlycemicRegions for_target(double lo, double hi);
  static GlycemicRegions for_protocol(const ProtocolSpec& spec) { return for_target(spec.target_lo, spec.target_hi); }

  /// Throws InvalidArgument unless the edges increase.
  void validate() const;
};

Region classify_bg(double bg, const GlycemicRegions& regions);

/// True for the moderate and severe bands on either side.
bool is_adverse(Region r);

struct TraceSummary {
  double min = 0.0;
  double max = 0.0;
  double avg = 0.0;
  std::size_t n = 0;

  friend bool operator==(const TraceSummary&, const TraceSummary&) = default;
};

/// Throws InvalidArgument on an empty trace.
TraceSummary summarize_trace(const GlucoseTrace& trace);

struct TTestResult {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  ///< two-sided
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool degenerate = false;  ///< zero variance; t and p are not meaningful
};

struct KsResult {
  std::size_t n = 0;
  double d = 0.0;
  double p = 1.0;
  bool degenerate = false;  ///< zero variance; reported as rejected (p = 0)
};

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);

/// Student t cumulative distribution.
double student_t_cdf(double t, double df);

/// Inverse of student_t_cdf for p in (0, 1).
double student_t_quantile(double p, double df);

/// Two-sided one-sample t test of mean zero with a `confidence` interval for the mean.
TTestResult paired_ttest(std::span<const double> diffs, double confidence = 0.95);

/// Survival function of the Kolmogorov distribution, Q(lambda) = P(K > lambda),
/// from the alternating series 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

/// One-sample Kolmogorov-Smirnov test against a normal with the sample mean and
/// standard deviation; p from the asymptotic distribution (no Lilliefors correction).
KsResult ks_normality(std::span<const double> sample);

struct MetricComparison {
  std::vector<double> diffs;  ///< lqg - protocol, by patient
  TTestResult ttest;
  KsResult normality;
};

struct PairedSummary {
  std::string protocol;
  std::vector<int> patient_ids;
  std::vector<TraceSummary> protocol_arm;
  std::vector<TraceSummary> lqg_arm;
  MetricComparison min;
  MetricComparison max;
  MetricComparison avg;
  std::size_t excluded = 0;  ///< patients missing evaluation data in either arm
};

/// Per-patient min/max/avg of evaluation BG in each arm and paired tests of
/// the differences. Tests are left default-constructed (degenerate) when fewer
/// than two patients remain, normality when fewer than five.
PairedSummary summarize(const std::string& protocol, std::span<const ArmPair> pairs);

}  // namespace glyco
