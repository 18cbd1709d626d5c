#include "glyco/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "glyco/errors.hpp"

namespace glyco {

namespace {

constexpr double kCfEps = 1e-16;
constexpr double kCfTiny = 1e-300;
constexpr int kCfMaxIter = 10000;

// Continued fraction for I_x(a, b), modified Lentz.
double beta_cf(double a, double b, double x) {
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kCfTiny) d = kCfTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kCfMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kCfTiny) d = kCfTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kCfTiny) c = kCfTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kCfTiny) d = kCfTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kCfTiny) c = kCfTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kCfEps) return h;
  }
  return h;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

struct MeanSd {
  double mean;
  double sd;
};

MeanSd mean_sd(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return {mean, x.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
}

MetricComparison compare(std::vector<double> diffs) {
  MetricComparison m;
  m.diffs = std::move(diffs);
  if (m.diffs.size() >= 2) {
    m.ttest = paired_ttest(m.diffs);
  } else {
    m.ttest.n = m.diffs.size();
    m.ttest.degenerate = true;
  }
  if (m.diffs.size() >= 5) {
    m.normality = ks_normality(m.diffs);
  } else {
    m.normality.n = m.diffs.size();
    m.normality.degenerate = true;
  }
  return m;
}

}  // namespace

const char* to_string(Region r) {
  switch (r) {
    case Region::severe_hypo: return "severe_hypoglycemia";
    case Region::moderate_hypo: return "moderate_hypoglycemia";
    case Region::mild_hypo: return "mild_hypoglycemia";
    case Region::target: return "target";
    case Region::mild_hyper: return "mild_hyperglycemia";
    case Region::moderate_hyper: return "moderate_hyperglycemia";
    case Region::severe_hyper: return "severe_hyperglycemia";
  }
  return "?";
}

GlycemicRegions GlycemicRegions::for_target(double lo, double hi) {
  GlycemicRegions r;
  r.target_lo = lo;
  r.target_hi = hi;
  r.validate();
  return r;
}

void GlycemicRegions::validate() const {
  if (!(0.0 < severe_hypo_below && severe_hypo_below < moderate_hypo_below && moderate_hypo_below <= target_lo &&
        target_lo < target_hi && target_hi <= mild_hyper_upto && mild_hyper_upto < moderate_hyper_upto))
    throw InvalidArgument("glycemic regions: band edges must increase");
}

Region classify_bg(double bg, const GlycemicRegions& r) {
  if (!(bg >= 0.0)) throw InvalidArgument("classify_bg: BG must be non-negative");
  if (bg < r.severe_hypo_below) return Region::severe_hypo;
  if (bg < r.moderate_hypo_below) return Region::moderate_hypo;
  if (bg < r.target_lo) return Region::mild_hypo;
  if (bg <= r.target_hi) return Region::target;
  if (bg <= r.mild_hyper_upto) return Region::mild_hyper;
  if (bg <= r.moderate_hyper_upto) return Region::moderate_hyper;
  return Region::severe_hyper;
}

bool is_adverse(Region r) {
  return r == Region::severe_hypo || r == Region::moderate_hypo || r == Region::moderate_hyper ||
         r == Region::severe_hyper;
}

TraceSummary summarize_trace(const GlucoseTrace& trace) {
  if (trace.empty()) throw InvalidArgument("summarize_trace: empty trace");
  const auto [lo, hi] = std::minmax_element(trace.values.begin(), trace.values.end());
  const double sum = std::accumulate(trace.values.begin(), trace.values.end(), 0.0);
  return {*lo, *hi, sum / static_cast<double>(trace.size()), trace.size()};
}

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("incomplete_beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("incomplete_beta: x must lie in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw InvalidArgument("student_t_cdf: df must be positive");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
  return t > 0.0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("student_t_quantile: p must lie in (0, 1)");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -student_t_quantile(1.0 - p, df);
  double lo = 0.0, hi = 1.0;
  while (student_t_cdf(hi, df) < p) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (student_t_cdf(mid, df) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

TTestResult paired_ttest(std::span<const double> diffs, double confidence) {
  if (diffs.size() < 2) throw InvalidArgument("paired_ttest: need at least two differences");
  if (!(confidence > 0.0 && confidence < 1.0)) throw InvalidArgument("paired_ttest: confidence must lie in (0, 1)");
  TTestResult r;
  r.n = diffs.size();
  r.df = static_cast<double>(r.n) - 1.0;
  const auto [mean, sd] = mean_sd(diffs);
  r.mean = mean;
  r.sd = sd;
  if (!(sd > 0.0)) {
    r.degenerate = true;
    r.t = mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), mean);
    r.p = mean == 0.0 ? 1.0 : 0.0;
    r.ci_lo = r.ci_hi = mean;
    return r;
  }
  const double se = sd / std::sqrt(static_cast<double>(r.n));
  r.t = mean / se;
  r.p = incomplete_beta(0.5 * r.df, 0.5, r.df / (r.df + r.t * r.t));
  const double q = student_t_quantile(0.5 + 0.5 * confidence, r.df);
  r.ci_lo = mean - q * se;
  r.ci_hi = mean + q * se;
  return r;
}

double kolmogorov_q(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 1000; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_normality(std::span<const double> sample) {
  if (sample.size() < 5) throw InvalidArgument("ks_normality: need at least five observations");
  KsResult r;
  r.n = sample.size();
  const auto [mean, sd] = mean_sd(sample);
  if (!(sd > 0.0)) {
    r.degenerate = true;
    r.d = 1.0;
    r.p = 0.0;
    return r;
  }
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = normal_cdf((x[i] - mean) / sd);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  r.d = d;
  r.p = kolmogorov_q(std::sqrt(n) * d);
  return r;
}

PairedSummary summarize(const std::string& protocol, std::span<const ArmPair> pairs) {
  PairedSummary s;
  s.protocol = protocol;
  std::vector<double> dmin, dmax, davg;
  for (const auto& pair : pairs) {
    if (pair.protocol.etw_bg.empty() || pair.lqg.etw_bg.empty() || pair.protocol.patient_id != pair.lqg.patient_id) {
      ++s.excluded;
      continue;
    }
    const TraceSummary a = summarize_trace(pair.protocol.etw_bg);
    const TraceSummary b = summarize_trace(pair.lqg.etw_bg);
    s.patient_ids.push_back(pair.protocol.patient_id);
    s.protocol_arm.push_back(a);
    s.lqg_arm.push_back(b);
    dmin.push_back(b.min - a.min);
    dmax.push_back(b.max - a.max);
    davg.push_back(b.avg - a.avg);
  }
  s.min = compare(std::move(dmin));
  s.max = compare(std::move(dmax));
  s.avg = compare(std::move(davg));
  return s;
}

}  // namespace glyco
