#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "commands.hpp"
#include "glyco/report.hpp"

using namespace glyco;
namespace fs = std::filesystem;

namespace {

const std::string kRoot = GLYCO_SOURCE_DIR;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("glyco_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("a missing config is a configuration error") {
  cli::SimulateArgs a;
  a.config = "/nonexistent/trial.toml";
  a.out = scratch("missing").string();
  CHECK(cli::cmd_simulate(a) == cli::kConfigError);

  cli::RetroArgs r;
  r.data = (kRoot + "/data/retro_fixture");
  r.protocols = {"/nonexistent/protocol.toml"};
  r.out = scratch("missing_protocol").string();
  CHECK(cli::cmd_retro(r) == cli::kConfigError);
}

TEST_CASE("corrupt retro data is a runtime error") {
  const auto dir = scratch("corrupt");
  write(dir / "bg.csv", "patient_id,time_hr,bg_mgdl\np,0,100\np,1,oops\n");
  write(dir / "insulin.csv", "patient_id,time_hr,rate_u_per_hr\np,0,1\np,1,2\n");
  cli::RetroArgs r;
  r.data = dir.string();
  r.protocols = {kRoot + "/configs/protocol_a.toml"};
  r.out = (dir / "out").string();
  CHECK(cli::cmd_retro(r) == cli::kRuntimeError);
}

TEST_CASE("fit reads one patient") {
  const auto dir = scratch("fit");
  cli::FitArgs f;
  f.bg = (dir / "absent.csv").string();
  f.insulin = (dir / "absent.csv").string();
  CHECK(cli::cmd_fit(f) == cli::kConfigError);

  std::string bg = "patient_id,time_hr,bg_mgdl\n";
  for (int i = 0; i <= 24; ++i) bg += "p," + std::to_string(i) + "," + std::to_string(180 - 2 * i + (i % 3) * 4) + "\n";
  write(dir / "bg.csv", bg);
  write(dir / "insulin.csv", "patient_id,time_hr,rate_u_per_hr\np,0,2\np,8,3\np,16,1\np,30,1\n");
  write(dir / "nutrition.csv", "patient_id,time_hr,rate_units_per_hr\np,0,4\n");
  f.bg = (dir / "bg.csv").string();
  f.insulin = (dir / "insulin.csv").string();
  f.nutrition = (dir / "nutrition.csv").string();
  f.seed = 5;
  CHECK(cli::cmd_fit(f) == cli::kOk);
  f.window = 0.0;
  CHECK(cli::cmd_fit(f) == cli::kConfigError);
}

TEST_CASE("simulate writes its reports and manifest") {
  const auto dir = scratch("simulate");
  write(dir / "tiny.toml", "schema_version = 1\nprotocols = [\"" + kRoot +
                               "/configs/protocol_a.toml\"]\nn_patients = 2\nm_schedules = 1\n[fit]\nrestarts = 2\n");
  cli::SimulateArgs a;
  a.config = (dir / "tiny.toml").string();
  a.out = (dir / "out").string();
  a.jobs = 2;
  a.seed = 99;
  REQUIRE(cli::cmd_simulate(a) == cli::kOk);
  for (const auto& f : trial_report_files()) CHECK(fs::exists(dir / "out" / f));
  const auto m = read_manifest(dir / "out" / "manifest.json");
  CHECK(m.command == "simulate");
  CHECK(m.root_seed == 99);
  CHECK(read_summary(dir / "out" / "summary.json").size() == 1);
}

}
