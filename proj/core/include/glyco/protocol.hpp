#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace glyco {

enum class Trend { falling, stable, rising, any };

const char* to_string(Trend t);
Trend parse_trend(std::string_view s);

enum class ActionKind { set, scale, delta };

/// How a fired row changes the current IV rate (U/hr).
struct RateAction {
  ActionKind kind = ActionKind::set;
  double value = 0.0;

  double apply(double current_rate) const;
};

/// One rule: BG in [band_lo, band_hi) with the given trend fires `action`.
struct ProtocolRow {
  std::string id;
  double band_lo = 0.0;
  double band_hi = std::numeric_limits<double>::infinity();
  Trend trend = Trend::any;
  RateAction action;
  double next_check = 1.0;  ///< hr
};

struct ProtocolSpec {
  std::string name;
  double target_lo = 0.0;
  double target_hi = 0.0;
  double max_rate = 25.0;
  double rising_threshold = 10.0;   ///< bg_now - bg_prev above this is rising
  double falling_threshold = 10.0;  ///< bg_prev - bg_now above this is falling
  Trend first_trend = Trend::stable;
  std::vector<ProtocolRow> rows;

  /// Checks ranges and that the bands partition [0, inf) for every trend.
  /// Throws ConfigError naming the offending rows.
  void validate() const;
};

struct ProtocolDecision {
  double new_rate = 0.0;
  double next_check = 0.0;
  std::string rule_id;

  friend bool operator==(const ProtocolDecision&, const ProtocolDecision&) = default;
};

ProtocolSpec parse_protocol(std::string_view toml_text, const std::string& source = "protocol");
ProtocolSpec load_protocol(const std::filesystem::path& path);

Trend classify_trend(const ProtocolSpec& spec, double bg_now, std::optional<double> bg_prev);

/// Fires the unique row matching (bg_now, trend) and clamps the result to [0, max_rate].
ProtocolDecision decide(const ProtocolSpec& spec, double bg_now, std::optional<double> bg_prev, double current_rate);

}  // namespace glyco
