#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cavsim/config.hpp"
#include "cavsim/csv.hpp"

using namespace cavsim;

namespace {
const std::string kDemoConfig = std::string(CAVSIM_DATA_DIR) + "/demo.cfg";
}

TEST_CASE("config parsing: sections, comments, repeated keys, errors") {
  const Config cfg = Config::parse_string(
      "# comment\n"
      "[a]\n"
      "x = 1.5  # trailing comment\n"
      "name = hello\n"
      "layer = 2.41 100 first\n"
      "layer = 1.46 200 second\n"
      "[b]\n"
      "flag = true\n");
  CHECK(cfg.number("a", "x") == doctest::Approx(1.5));
  CHECK(cfg.text("a", "name") == "hello");
  CHECK(cfg.list("a", "layer").size() == 2);
  CHECK(cfg.flag_or("b", "flag", false));
  CHECK(cfg.number_or("b", "missing", 7.0) == doctest::Approx(7.0));
  CHECK_THROWS_AS(cfg.number("a", "name"), validation_error);
  CHECK_THROWS_AS(cfg.text("zz", "x"), validation_error);

  // parse errors carry the line number
  try {
    Config::parse_string("[a]\nbroken line\n", "test.cfg");
    CHECK(false);
  } catch (const validation_error& e) {
    CHECK(std::string(e.what()).find("test.cfg:2") != std::string::npos);
  }
  CHECK_THROWS_AS(Config::parse_string("[unterminated\n"), validation_error);
  CHECK_THROWS_AS(Config::parse_file("/nonexistent/path.cfg"), validation_error);
}

TEST_CASE("bundled config assembles every model block") {
  const Config cfg = Config::parse_file(kDemoConfig);
  CHECK_FALSE(cfg.fingerprint().empty());

  const CavityGeometry g = geometry_from_config(cfg);
  CHECK(g.air_gap_um == doctest::Approx(7.3));
  CHECK(g.diamond.refractive_index == doctest::Approx(2.41));

  const EmitterParams em = emitter_from_config(cfg);
  CHECK(em.tau0_ns == doctest::Approx(10.9));
  CHECK(em.beta0 == doctest::Approx(0.0255));

  const CavityCoupling coupling = coupling_from_config(cfg);
  CHECK(coupling.kappa_ghz == doctest::Approx(2.228));

  const VibrationSpec vib = vibration_from_config(cfg);
  CHECK(vib.sigma_nm == doctest::Approx(0.18));
  CHECK(vib.quadrature_order == 64);

  const SweepModelContext ctx = sweep_context_from_config(cfg);
  CHECK(ctx.slope_ghz_per_nm == doctest::Approx(-17.15));

  const BudgetSystem budget = budget_from_config(cfg);
  CHECK(budget.y0 == doctest::Approx(0.2195));
  CHECK(budget.chain.eta_int0 ==
        doctest::Approx(internal_efficiency(0.9354, 1.670)).epsilon(1e-12));
}

TEST_CASE("dbr mirror config") {
  const Config cfg = Config::parse_string(
      "[flat_mirror]\n"
      "kind = dbr_stack\n"
      "stopband_center_thz = 470.4\n"
      "layer = 2.1 75.8 high\n"
      "layer = 1.46 109.0 low\n"
      "layer = 2.1 75.8 high\n"
      "[fiber_mirror]\n"
      "kind = lumped\n"
      "transmission_ppm = 60\n"
      "loss_ppm = 73\n"
      "[geometry]\n"
      "air_gap_um = 7.3\n"
      "fiber_roc_um = 28\n"
      "fiber_mirror_diameter_um = 7.52\n"
      "diamond_thickness_nm = 5800\n");
  const CavityGeometry g = geometry_from_config(cfg);
  CHECK(g.flat_mirror.kind == MirrorSpec::Kind::dbr_stack);
  CHECK(g.flat_mirror.layers.size() == 3);
  CHECK(g.flat_mirror.layers[1].thickness_nm == doctest::Approx(109.0));
}

TEST_CASE("scenario config") {
  const Config cfg = Config::parse_string(
      "[scenario]\n"
      "baseline_per_pulse = 9.3e-5\n"
      "step1 = one | factor 20\n"
      "step2 = two | sigma_nm 0.01\n");
  const ImprovementScenario sc = scenario_from_config(cfg);
  CHECK(sc.steps.size() == 2);
  CHECK(sc.steps[0].factor == doctest::Approx(20.0));
  CHECK(sc.steps[1].sigma_nm.value() == doctest::Approx(0.01));
  CHECK(sc.steps[1].factor == 0.0);
}

TEST_CASE("csv round trip with metadata, atomic write") {
  CsvTable table;
  table.metadata = {{"tool", "cavsim test"}, {"seed", "42"}};
  table.header = {"a", "b"};
  table.rows = {{1.0, 2.5}, {-3.25e-7, 4e12}};

  const std::string path = "/tmp/cavsim_test_io/table.csv";
  write_csv(path, table);
  CHECK_FALSE(std::filesystem::exists(path + ".tmp"));

  const CsvTable back = read_csv(path);
  CHECK(back.meta("seed") == "42");
  CHECK(back.header == table.header);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[1][0] == doctest::Approx(-3.25e-7).epsilon(1e-12));
  CHECK(back.column("b") == 1);
  CHECK(back.column("zz") == -1);

  // byte-identical rewrite
  write_csv(path + "2", back);
  std::ifstream f1(path), f2(path + "2");
  const std::string c1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string c2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(c1 == c2);
}

TEST_CASE("csv schema errors carry line numbers") {
  const std::string path = "/tmp/cavsim_test_io/bad.csv";
  {
    std::ofstream out(path);
    out << "a,b\n1,2\n3\n";
  }
  try {
    read_csv(path);
    CHECK(false);
  } catch (const validation_error& e) {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
  {
    std::ofstream out(path);
    out << "a,b\n1,zebra\n";
  }
  CHECK_THROWS_AS(read_csv(path), validation_error);
  CHECK_THROWS_AS(read_csv("/nonexistent.csv"), validation_error);
}
