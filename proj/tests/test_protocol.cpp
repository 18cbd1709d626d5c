#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "glyco/errors.hpp"
#include "glyco/protocol.hpp"

using namespace glyco;

namespace {

ProtocolSpec shipped(const char* name) { return load_protocol(std::string(GLYCO_SOURCE_DIR) + "/configs/" + name); }

const char* kMinimal = R"(
name = "mini"
target_range = [100, 150]
[[rows]]
id = "low"
band = [0, 100]
action = "set"
value = 0
next_check = 1
[[rows]]
id = "high"
band = [100, inf]
action = "delta"
value = 1
next_check = 2
)";

}  // namespace

TEST_SUITE("protocol") {

TEST_CASE("shipped tables load with their target ranges") {
  const auto a = shipped("protocol_a.toml");
  const auto b = shipped("protocol_b.toml");
  CHECK(a.target_lo == 120.0);
  CHECK(a.target_hi == 150.0);
  CHECK(b.target_lo == 140.0);
  CHECK(b.target_hi == 180.0);
  CHECK(a.max_rate == 25.0);
  CHECK_NOTHROW(a.validate());
  CHECK_NOTHROW(b.validate());
}

TEST_CASE("every BG and trend fires exactly one row") {
  for (const char* f : {"protocol_a.toml", "protocol_b.toml"}) {
    const auto spec = shipped(f);
    for (Trend tr : {Trend::falling, Trend::stable, Trend::rising}) {
      for (double bg = 0.0; bg <= 600.0; bg += 0.25) {
        int hits = 0;
        for (const auto& row : spec.rows)
          if ((row.trend == tr || row.trend == Trend::any) && bg >= row.band_lo && bg < row.band_hi) ++hits;
        CHECK(hits == 1);
      }
    }
  }
}

TEST_CASE("hypoglycemia stops insulin in both shipped tables") {
  for (const char* f : {"protocol_a.toml", "protocol_b.toml"}) {
    const auto spec = shipped(f);
    for (double bg : {20.0, 45.0, 69.9}) {
      for (std::optional<double> prev : {std::optional<double>{}, std::optional<double>{bg + 30.0},
                                         std::optional<double>{bg - 30.0}}) {
        CHECK(decide(spec, bg, prev, 12.0).new_rate == 0.0);
      }
    }
  }
}

TEST_CASE("rates do not decrease with BG or with the trend") {
  for (const char* f : {"protocol_a.toml", "protocol_b.toml"}) {
    const auto spec = shipped(f);
    for (double rate : {0.0, 1.0, 4.0, 24.0}) {
      double prev_stable = 0.0;
      for (double bg = 1.0; bg <= 500.0; bg += 1.0) {
        const double fall = decide(spec, bg, bg + 20.0, rate).new_rate;
        const double stable = decide(spec, bg, bg, rate).new_rate;
        const double rise = decide(spec, bg, bg - 20.0, rate).new_rate;
        CHECK(fall <= stable);
        CHECK(stable <= rise);
        CHECK(stable >= prev_stable);
        prev_stable = stable;
      }
    }
  }
}

TEST_CASE("trend thresholds are strict") {
  const auto spec = shipped("protocol_a.toml");
  CHECK(classify_trend(spec, 150.0, std::nullopt) == spec.first_trend);
  CHECK(classify_trend(spec, 160.0, 150.0) == Trend::stable);
  CHECK(classify_trend(spec, 160.01, 150.0) == Trend::rising);
  CHECK(classify_trend(spec, 140.0, 150.0) == Trend::stable);
  CHECK(classify_trend(spec, 139.99, 150.0) == Trend::falling);
}

TEST_CASE("decision snapshot for protocol A") {
  const auto a = shipped("protocol_a.toml");
  CHECK(decide(a, 65.0, std::nullopt, 3.0) == ProtocolDecision{0.0, 0.5, "A1"});
  CHECK(decide(a, 110.0, 130.0, 4.0) == ProtocolDecision{2.0, 1.0, "A3"});
  CHECK(decide(a, 135.0, 133.0, 4.0) == ProtocolDecision{4.0, 2.0, "A7"});
  CHECK(decide(a, 135.0, 120.0, 4.0) == ProtocolDecision{4.5, 1.0, "A8"});
  CHECK(decide(a, 220.0, std::nullopt, 2.0) == ProtocolDecision{4.0, 1.0, "A13"});
  CHECK(decide(a, 300.0, 280.0, 24.0) == ProtocolDecision{25.0, 1.0, "A17"});
}

TEST_CASE("decision snapshot for protocol B") {
  const auto b = shipped("protocol_b.toml");
  CHECK(decide(b, 69.0, std::nullopt, 3.0).rule_id == "B1");
  CHECK(decide(b, 150.0, 150.0, 4.0) == ProtocolDecision{4.0, 2.0, "B7"});
  CHECK(decide(b, 200.0, 200.0, 4.0) == ProtocolDecision{5.0, 1.0, "B10"});
  CHECK(decide(b, 300.0, 300.0, 4.0) == ProtocolDecision{7.0, 1.0, "B16"});
}

TEST_CASE("actions") {
  CHECK(RateAction{ActionKind::set, 3.0}.apply(9.0) == 3.0);
  CHECK(RateAction{ActionKind::scale, 0.5}.apply(9.0) == 4.5);
  CHECK(RateAction{ActionKind::delta, -2.0}.apply(9.0) == 7.0);
  CHECK(parse_trend("rising") == Trend::rising);
  CHECK(std::string(to_string(Trend::falling)) == "falling");
  CHECK_THROWS_AS(parse_trend("sideways"), InvalidArgument);
}

TEST_CASE("a minimal table parses and applies the cap") {
  const auto spec = parse_protocol(kMinimal);
  CHECK(spec.rows.size() == 2);
  CHECK(spec.rows[1].band_hi == INFINITY);
  CHECK(decide(spec, 120.0, std::nullopt, 25.0).new_rate == 25.0);
  CHECK(decide(spec, 120.0, std::nullopt, 3.0).next_check == 2.0);
}

TEST_CASE("tables with gaps or overlaps name the rows") {
  std::string gap = kMinimal;
  gap.replace(gap.find("band = [100, inf]"), 17, "band = [110, inf]");
  try {
    parse_protocol(gap, "gap.toml");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("gap.toml") != std::string::npos);
    CHECK(msg.find("low") != std::string::npos);
  }
  std::string overlap = kMinimal;
  overlap.replace(overlap.find("band = [100, inf]"), 17, "band = [90, inf]");
  CHECK_THROWS_AS(parse_protocol(overlap), ConfigError);
}

TEST_CASE("malformed tables are rejected") {
  std::string bad_action = kMinimal;
  bad_action.replace(bad_action.find("\"delta\""), 7, "\"double\"");
  CHECK_THROWS_AS(parse_protocol(bad_action), ConfigError);

  std::string unknown = kMinimal;
  unknown.insert(unknown.find("[[rows]]"), "colour = \"red\"\n");
  CHECK_THROWS_AS(parse_protocol(unknown), ConfigError);

  std::string no_rows = "name = \"x\"\ntarget_range = [100, 150]\n";
  CHECK_THROWS_AS(parse_protocol(no_rows), ConfigError);

  std::string inverted = kMinimal;
  inverted.replace(inverted.find("[100, 150]"), 10, "[150, 100]");
  CHECK_THROWS_AS(parse_protocol(inverted), ConfigError);

  CHECK_THROWS_AS(load_protocol("/nonexistent/protocol.toml"), ConfigError);
}

}
