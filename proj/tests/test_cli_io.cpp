#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "siv/cli.hpp"
#include "siv/config.hpp"
#include "siv/results_io.hpp"

using namespace siv;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sivsim_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(std::initializer_list<const char*> args) {
  std::vector<const char*> argv = {"siv_sim"};
  argv.insert(argv.end(), args.begin(), args.end());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("empty config yields the measured default parameters") {
  const LoadedConfig cfg = config_from_json_text("");
  CHECK(cfg.params.delta_g == doctest::Approx(two_pi * 48e9).epsilon(1e-14));
  CHECK(cfg.params.delta_e == doctest::Approx(two_pi * 259e9).epsilon(1e-14));
  CHECK(cfg.params.temperature == 5.0);
  CHECK(cfg.params.gamma_pure == doctest::Approx(two_pi * 160e6).epsilon(1e-14));
  CHECK(cfg.observables.t1_orbit == doctest::Approx(35e-9).epsilon(1e-14));
  CHECK(cfg.seq.rep_rate == doctest::Approx(80e6).epsilon(1e-14));
  CHECK(cfg.resolved_json.find("\"delta_g_ghz\": 48.0") != std::string::npos);
}

TEST_CASE("raman experiments default to the pulse-picked repetition rate") {
  const LoadedConfig cfg =
      config_from_json_text(R"({"run": {"experiment": "raman-rabi"}})");
  CHECK(cfg.seq.rep_rate == doctest::Approx(1e6).epsilon(1e-14));
}

TEST_CASE("negative splitting is rejected") {
  CHECK_THROWS_AS(
      static_cast<void>(config_from_json_text(R"({"model": {"delta_g_ghz": -1}})")),
      ValidationError);
}

TEST_CASE("unknown keys list the valid alternatives") {
  CHECK_THROWS_WITH_AS(
      static_cast<void>(config_from_json_text(R"({"model": {"delta_g_hz": 48}})")),
      doctest::Contains("delta_g_ghz"), ConfigError);
  CHECK_THROWS_AS(static_cast<void>(config_from_json_text(R"({"nonsense": {}})")),
                  ConfigError);
}

TEST_CASE("echoed config reloads to the identical resolved document") {
  const LoadedConfig cfg = config_from_json_text(
      R"({"model": {"temperature_k": 4.2}, "run": {"experiment": "ramsey",
          "transition": "B", "sweep": "40:2000:25"}})");
  const LoadedConfig again = config_from_json_text(cfg.resolved_json);
  CHECK(again.resolved_json == cfg.resolved_json);
  CHECK(again.config_hash == cfg.config_hash);
}

TEST_CASE("sweep grammar") {
  const SweepSpec s = SweepSpec::parse("0:10pi:101");
  REQUIRE(s.count == 101);
  CHECK(s.values.front() == 0.0);
  CHECK(s.values.back() == doctest::Approx(10.0 * pi).epsilon(1e-14));
  CHECK(s.values[50] == doctest::Approx(5.0 * pi).epsilon(1e-14));

  const SweepSpec pi_only = SweepSpec::parse("pi:2pi:3");
  CHECK(pi_only.values.front() == doctest::Approx(pi).epsilon(1e-14));

  const SweepSpec list = SweepSpec::parse("1.5, 2.5, 10");
  CHECK(list.explicit_list);
  REQUIRE(list.values.size() == 3);
  CHECK(list.values[2] == 10.0);

  CHECK_THROWS_AS(static_cast<void>(SweepSpec::parse("0:1:1")), ConfigError);
  CHECK_THROWS_AS(static_cast<void>(SweepSpec::parse("0:x:5")), ConfigError);
  CHECK_THROWS_AS(static_cast<void>(SweepSpec::parse("7")), ConfigError);
}

TEST_CASE("result files: schema, plot data and determinism") {
  ExperimentResult res;
  res.experiment = "ramsey";
  res.columns = {"delay_ps", "upper_counts", "lower_counts", "visibility"};
  res.data = {{40.0, 80.0, 120.0},
              {1.25, 1.0, 0.75},
              {0.25, 0.375, 0.5},
              {0.6666, 0.45, 0.2}};
  res.derived["t2_star_ps"] = 578.0;
  Curve trace;
  trace.name = "readout trace";
  trace.x = {0.0, 1.0};
  trace.y = {0.5, 0.25};
  res.extras.push_back(trace);

  const LoadedConfig cfg = config_from_json_text("");
  const fs::path dir = temp_dir("results");
  const OutputFiles files = write_results(res, dir, cfg.resolved_json);

  const CsvTable table = read_csv(files.csv);
  REQUIRE(table.columns.size() == 4);
  CHECK(table.columns[0] == "delay_ps");
  CHECK(table.data[0].size() == 3);
  CHECK(table.data[3][0] == doctest::Approx(0.6666));
  CHECK(table.column_index("visibility") == 3);

  CHECK(slurp(files.derived_json).find("t2_star_ps") != std::string::npos);
  CHECK(slurp(files.derived_json).find(cfg.config_hash) != std::string::npos);
  CHECK(slurp(files.config_echo) == cfg.resolved_json);
  REQUIRE(files.plot_files.size() == 4);  // three observable columns + extra curve

  // Byte-identical on a second write.
  const fs::path dir2 = temp_dir("results2");
  const OutputFiles files2 = write_results(res, dir2, cfg.resolved_json);
  CHECK(slurp(files2.csv) == slurp(files.csv));
  CHECK(slurp(files2.derived_json) == slurp(files.derived_json));
}

TEST_CASE("cli runs a small sweep end to end") {
  const fs::path dir = temp_dir("cli_rabi");
  const int rc = cli({"rabi", "--transition", "C", "--sweep", "0:2pi:5",
                      "--single-shot", "--out", dir.string().c_str()});
  CHECK(rc == 0);
  const CsvTable table = read_csv(dir / "rabi.csv");
  CHECK(table.columns.front() == "area_rad");
  CHECK(table.data[0].size() == 5);
  CHECK(fs::exists(dir / "config_resolved.json"));
  CHECK(fs::exists(dir / "derived.json"));
}

TEST_CASE("cli rejects unknown flags with exit code 1") {
  CHECK(cli({"rabi", "--no-such-flag"}) == 1);
}

TEST_CASE("cli maps config errors to exit code 1") {
  const fs::path dir = temp_dir("cli_badcfg");
  const fs::path cfg_path = dir / "bad.json";
  std::ofstream(cfg_path) << R"({"model": {"delta_g_ghz": -4}})";
  CHECK(cli({"rabi", "--config", cfg_path.string().c_str(), "--out",
             dir.string().c_str()}) == 1);
}

TEST_CASE("cli maps numerical sweep failures to exit code 2") {
  const fs::path dir = temp_dir("cli_numfail");
  // A 2 us delay cannot fit into the 1 us Raman repetition frame; the error
  // surfaces from inside the sweep with the point index attached.
  CHECK(cli({"raman-ramsey", "--sweep", "0:2000000:5", "--out",
             dir.string().c_str()}) == 2);
}

TEST_CASE("cli requires a subcommand") { CHECK(cli({}) == 1); }
