#include "glyco/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fields.hpp"
#include "glyco/errors.hpp"
#include "toml_reader.hpp"

namespace glyco {

namespace {

constexpr Trend kConcreteTrends[] = {Trend::falling, Trend::stable, Trend::rising};

bool row_applies(const ProtocolRow& row, Trend t) { return row.trend == Trend::any || row.trend == t; }

std::string band_text(const ProtocolRow& r) {
  std::ostringstream s;
  s << "[" << r.band_lo << ", ";
  if (std::isinf(r.band_hi)) {
    s << "inf";
  } else {
    s << r.band_hi;
  }
  s << ")";
  return s.str();
}

ActionKind parse_action(const std::string& s, const detail::Fields& f) {
  if (s == "set") return ActionKind::set;
  if (s == "scale") return ActionKind::scale;
  if (s == "delta") return ActionKind::delta;
  f.fail("unknown action '" + s + "' (expected set, scale or delta)");
}

}  // namespace

const char* to_string(Trend t) {
  switch (t) {
    case Trend::falling: return "falling";
    case Trend::stable: return "stable";
    case Trend::rising: return "rising";
    case Trend::any: return "any";
  }
  return "?";
}

Trend parse_trend(std::string_view s) {
  if (s == "falling") return Trend::falling;
  if (s == "stable") return Trend::stable;
  if (s == "rising") return Trend::rising;
  if (s == "any") return Trend::any;
  throw InvalidArgument("unknown trend '" + std::string(s) + "'");
}

double RateAction::apply(double current_rate) const {
  switch (kind) {
    case ActionKind::set: return value;
    case ActionKind::scale: return current_rate * value;
    case ActionKind::delta: return current_rate + value;
  }
  return current_rate;
}

void ProtocolSpec::validate() const {
  auto fail = [&](const std::string& what) { throw ConfigError("protocol '" + name + "': " + what); };
  if (!(target_lo > 0.0) || !(target_hi > target_lo)) fail("target_range must satisfy 0 < lo < hi");
  if (!(max_rate > 0.0) || !std::isfinite(max_rate)) fail("max_rate must be positive and finite");
  if (!(rising_threshold >= 0.0) || !(falling_threshold >= 0.0)) fail("trend thresholds must be non-negative");
  if (first_trend == Trend::any) fail("first_trend must be falling, stable or rising");
  if (rows.empty()) fail("no rows");

  for (const auto& r : rows) {
    if (!(r.band_lo >= 0.0) || !(r.band_hi > r.band_lo)) fail("row " + r.id + " has an empty or negative band");
    if (!(r.next_check > 0.0) || !std::isfinite(r.next_check)) fail("row " + r.id + " needs next_check > 0");
    if (!std::isfinite(r.action.value)) fail("row " + r.id + " has a non-finite action value");
    if (r.action.kind == ActionKind::scale && r.action.value < 0.0) fail("row " + r.id + " scales by a negative factor");
  }

  for (Trend t : kConcreteTrends) {
    std::vector<const ProtocolRow*> cover;
    for (const auto& r : rows)
      if (row_applies(r, t)) cover.push_back(&r);
    const std::string tn = to_string(t);
    if (cover.empty()) fail("no rows apply to trend '" + tn + "'");
    std::stable_sort(cover.begin(), cover.end(),
                     [](const ProtocolRow* a, const ProtocolRow* b) { return a->band_lo < b->band_lo; });
    if (cover.front()->band_lo != 0.0)
      fail("trend '" + tn + "': gap [0, " + std::to_string(cover.front()->band_lo) + ") before row " +
           cover.front()->id);
    for (std::size_t i = 1; i < cover.size(); ++i) {
      const ProtocolRow& a = *cover[i - 1];
      const ProtocolRow& b = *cover[i];
      if (b.band_lo < a.band_hi)
        fail("trend '" + tn + "': rows " + a.id + " " + band_text(a) + " and " + b.id + " " + band_text(b) +
             " overlap");
      if (b.band_lo > a.band_hi)
        fail("trend '" + tn + "': gap between row " + a.id + " " + band_text(a) + " and row " + b.id + " " +
             band_text(b));
    }
    if (!std::isinf(cover.back()->band_hi))
      fail("trend '" + tn + "': nothing covers BG above row " + cover.back()->id + " " + band_text(*cover.back()));
  }
}

ProtocolSpec parse_protocol(std::string_view toml_text, const std::string& source) {
  nlohmann::json doc;
  try {
    doc = detail::parse_toml(toml_text);
  } catch (const ParseError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  detail::Fields f(doc, source);
  ProtocolSpec spec;
  spec.name = f.string("name");
  const Bounds target = f.bounds("target_range");
  spec.target_lo = target.lo;
  spec.target_hi = target.hi;
  f.number("max_rate", spec.max_rate);
  f.number("rising_threshold", spec.rising_threshold);
  f.number("falling_threshold", spec.falling_threshold);
  if (f.has("first_trend")) {
    try {
      spec.first_trend = parse_trend(f.string("first_trend"));
    } catch (const InvalidArgument& e) {
      f.fail(e.what());
    }
  }
  const auto& rows = f.raw("rows");
  if (!rows.is_array()) f.fail("'rows' must be an array of tables");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    detail::Fields rf(rows[i], source + ".rows[" + std::to_string(i) + "]");
    ProtocolRow row;
    row.id = "row" + std::to_string(i + 1);
    rf.string("id", row.id);
    const Bounds band = rf.bounds("band");
    row.band_lo = band.lo;
    row.band_hi = band.hi;
    if (rf.has("trend")) {
      try {
        row.trend = parse_trend(rf.string("trend"));
      } catch (const InvalidArgument& e) {
        rf.fail(e.what());
      }
    }
    row.action.kind = parse_action(rf.string("action"), rf);
    row.action.value = rf.number("value");
    rf.number("next_check", row.next_check);
    rf.finish();
    spec.rows.push_back(std::move(row));
  }
  f.finish();
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return spec;
}

ProtocolSpec load_protocol(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open protocol file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_protocol(buf.str(), path.string());
}

Trend classify_trend(const ProtocolSpec& spec, double bg_now, std::optional<double> bg_prev) {
  if (!bg_prev) return spec.first_trend;
  const double d = bg_now - *bg_prev;
  if (d > spec.rising_threshold) return Trend::rising;
  if (-d > spec.falling_threshold) return Trend::falling;
  return Trend::stable;
}

ProtocolDecision decide(const ProtocolSpec& spec, double bg_now, std::optional<double> bg_prev, double current_rate) {
  if (!(bg_now > 0.0) || !std::isfinite(bg_now)) throw InvalidArgument("decide: bg_now must be positive");
  if (!(current_rate >= 0.0)) throw InvalidArgument("decide: current_rate must be non-negative");
  const Trend t = classify_trend(spec, bg_now, bg_prev);
  for (const auto& row : spec.rows) {
    if (row_applies(row, t) && bg_now >= row.band_lo && bg_now < row.band_hi) {
      const double rate = std::clamp(row.action.apply(current_rate), 0.0, spec.max_rate);
      return {rate, row.next_check, row.id};
    }
  }
  throw InvalidArgument("decide: no row matches; protocol '" + spec.name + "' was not validated");
}

}  // namespace glyco
