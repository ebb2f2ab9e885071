#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "cavsim/csv.hpp"

using namespace cavsim;

namespace {

const std::string kCli = CAVSIM_CLI_PATH;
const std::string kConfig = std::string(CAVSIM_DATA_DIR) + "/demo.cfg";
const std::string kData = CAVSIM_DATA_DIR;

int run(const std::string& args) {
  const std::string cmd = kCli + " --config " + kConfig + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("sweep command writes the documented columns and metadata") {
  std::filesystem::remove_all("/tmp/cli_sweep");
  REQUIRE(run("--out /tmp/cli_sweep --seed 5 sweep --mode resonant --span-ghz 10 --points 9") ==
          0);
  const CsvTable t = read_csv("/tmp/cli_sweep/sweep_resonant.csv");
  CHECK(t.header ==
        std::vector<std::string>{"detuning_ghz", "counts_per_pulse", "lifetime_ns",
                                 "lifetime_err_ns"});
  CHECK(t.rows.size() == 9);
  CHECK(t.meta("seed") == "5");
  CHECK(t.has_meta("config_hash"));
  CHECK(t.has_meta("quadrature_order"));  // defaulted tolerances are echoed
  CHECK(t.has_meta("fit_window_ns"));
}

TEST_CASE("byte-identical outputs for identical config and seed") {
  std::filesystem::remove_all("/tmp/cli_rep1");
  std::filesystem::remove_all("/tmp/cli_rep2");
  REQUIRE(run("--out /tmp/cli_rep1 --seed 11 synth --kind sweep --mode resonant --points 9 "
              "--pulses 200000") == 0);
  REQUIRE(run("--out /tmp/cli_rep2 --seed 11 synth --kind sweep --mode resonant --points 9 "
              "--pulses 200000") == 0);
  CHECK(slurp("/tmp/cli_rep1/sweep_resonant.csv") == slurp("/tmp/cli_rep2/sweep_resonant.csv"));

  // a different seed changes the payload
  std::filesystem::remove_all("/tmp/cli_rep3");
  REQUIRE(run("--out /tmp/cli_rep3 --seed 12 synth --kind sweep --mode resonant --points 9 "
              "--pulses 200000") == 0);
  CHECK(slurp("/tmp/cli_rep1/sweep_resonant.csv") != slurp("/tmp/cli_rep3/sweep_resonant.csv"));
}

TEST_CASE("fit command on the bundled dataset emits JSON and residuals") {
  std::filesystem::remove_all("/tmp/cli_fit");
  REQUIRE(run("--out /tmp/cli_fit fit --dataset " + kData + "/samples/sweep_resonant.csv") == 0);
  CHECK(std::filesystem::exists("/tmp/cli_fit/fit.json"));
  const CsvTable res = read_csv("/tmp/cli_fit/fit_residuals.csv");
  CHECK(res.rows.size() == 21);
  const std::string json = slurp("/tmp/cli_fit/fit.json");
  CHECK(json.find("f_beta0_eff") != std::string::npos);
  CHECK(json.find("covariance") != std::string::npos);
}

TEST_CASE("empty dataset: exit code 2 and no partial output") {
  std::filesystem::create_directories("/tmp/cli_bad");
  {
    std::ofstream out("/tmp/cli_bad/empty.csv");
    out << "# excitation: resonant\n";
    out << "detuning_ghz,counts_per_pulse,counts_err,lifetime_ns,lifetime_err_ns\n";
  }
  std::filesystem::remove_all("/tmp/cli_bad_out");
  CHECK(run("--out /tmp/cli_bad_out fit --dataset /tmp/cli_bad/empty.csv") == 2);
  CHECK_FALSE(std::filesystem::exists("/tmp/cli_bad_out/fit.json"));

  // malformed schema: missing columns
  {
    std::ofstream out("/tmp/cli_bad/cols.csv");
    out << "x,y\n1,2\n";
  }
  CHECK(run("--out /tmp/cli_bad_out fit --dataset /tmp/cli_bad/cols.csv") == 2);

  // unknown config path
  const int code = std::system((kCli + " --config /no/such.cfg --out /tmp/cli_bad_out budget "
                                       "> /dev/null 2>&1")
                                   .c_str());
  CHECK(WEXITSTATUS(code) == 2);
}

TEST_CASE("budget presets produce ledger, table and finesse sweep files") {
  std::filesystem::remove_all("/tmp/cli_budget");
  REQUIRE(run("--out /tmp/cli_budget budget") == 0);
  CHECK(std::filesystem::exists("/tmp/cli_budget/budget.json"));
  CHECK(std::filesystem::exists("/tmp/cli_budget/budget_ledger.csv"));
  REQUIRE(run("--out /tmp/cli_budget budget --table1") == 0);
  const CsvTable t1 = read_csv("/tmp/cli_budget/budget_table1.csv");
  REQUIRE(t1.rows.size() == 5);
  const int disp = t1.column("display_percent");
  CHECK(t1.rows[0][disp] == doctest::Approx(0.2));
  CHECK(t1.rows[4][disp] == doctest::Approx(20.0));
  REQUIRE(run("--out /tmp/cli_budget budget --fig7") == 0);
  const CsvTable f7 = read_csv("/tmp/cli_budget/budget_fig7.csv");
  CHECK(f7.rows.size() > 10);
}

TEST_CASE("project command applies a scenario file") {
  std::filesystem::remove_all("/tmp/cli_project");
  REQUIRE(run("--out /tmp/cli_project project --scenario " + kData +
              "/scenarios/upgrades.cfg") == 0);
  const CsvTable t = read_csv("/tmp/cli_project/projection.csv");
  REQUIRE(t.rows.size() == 5);
  REQUIRE(run("--out /tmp/cli_project project --scenario " + kData +
              "/scenarios/vibration_model.cfg") == 0);
  const CsvTable v = read_csv("/tmp/cli_project/projection.csv");
  REQUIRE(v.rows.size() == 1);
  const double model_factor = v.rows[0][v.column("model_factor")];
  CHECK(std::abs(model_factor - 16.0) / 16.0 < 0.25);
}

TEST_CASE("ple and g2 commands run on the bundled samples") {
  std::filesystem::remove_all("/tmp/cli_ple");
  REQUIRE(run("--out /tmp/cli_ple ple --traces " + kData + "/samples/ple") == 0);
  const std::string json = slurp("/tmp/cli_ple/ple.json");
  CHECK(json.find("raw_fwhm_mhz") != std::string::npos);

  std::filesystem::remove_all("/tmp/cli_g2");
  REQUIRE(run("--out /tmp/cli_g2 g2 --histogram " + kData +
              "/samples/g2_resonant.csv --model bunching") == 0);
  CHECK(slurp("/tmp/cli_g2/g2.json").find("g2_zero_corrected") != std::string::npos);
}

TEST_CASE("dispersion command") {
  std::filesystem::remove_all("/tmp/cli_disp");
  REQUIRE(run("--out /tmp/cli_disp dispersion --gap-min 7.25 --gap-max 7.4 --gap-steps 3 "
              "--freq-lo 467 --freq-hi 475") == 0);
  const CsvTable t = read_csv("/tmp/cli_disp/dispersion.csv");
  CHECK(t.header == std::vector<std::string>{"air_gap_um", "frequency_THz", "kappa_GHz",
                                             "finesse", "mode_character"});
  CHECK(t.rows.size() >= 3);
}
