// Regression anchors: analyses of the bundled synthetic datasets must keep
// reproducing the reference values they were built to.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include "cavsim/config.hpp"
#include "cavsim/csv.hpp"
#include "cavsim/inference.hpp"
#include "cavsim/photon_budget.hpp"
#include "cavsim/vibration.hpp"

using namespace cavsim;

namespace {

const std::string kData = CAVSIM_DATA_DIR;

SweepDataset load_sweep(const std::string& path) {
  const CsvTable table = read_csv(path);
  SweepDataset data;
  data.excitation = table.meta("excitation") == "offresonant"
                        ? SweepDataset::Excitation::offresonant
                        : SweepDataset::Excitation::resonant;
  const int c_s = table.column("session");
  for (const auto& row : table.rows) {
    SweepObservation obs;
    obs.detuning_ghz = row[0];
    obs.counts = row[1];
    obs.counts_err = row[2];
    obs.lifetime_ns = row[3];
    obs.lifetime_err_ns = row[4];
    obs.session = c_s >= 0 ? static_cast<int>(row[c_s]) : 0;
    data.points.push_back(obs);
  }
  data.validate();
  return data;
}

DecayHistogram load_decay(const std::string& path) {
  const CsvTable table = read_csv(path);
  DecayHistogram hist;
  hist.bin_width_ns = std::stod(table.meta("bin_width_ns"));
  hist.n_pulses = std::stoll(table.meta("n_pulses"));
  for (const auto& row : table.rows) {
    hist.t_ns.push_back(row[0]);
    hist.counts.push_back(row[1]);
  }
  return hist;
}

}  // namespace

TEST_CASE("resonant sweep fit recovers the reference parameters") {
  const SweepDataset data = load_sweep(kData + "/samples/sweep_resonant.csv");
  const Config config = Config::parse_file(kData + "/demo.cfg");
  const FitResult fit = fit_sweep_joint(data, sweep_context_from_config(config));
  REQUIRE(fit.converged);
  // targets (7.0 +- 3.4)%, 10.9 +- 0.2 ns, 0.18 +- 0.02 nm
  CHECK(std::abs(fit.value("f_beta0_eff") - 0.070) <= 0.034);
  CHECK(std::abs(fit.value("tau0_ns") - 10.9) <= 0.2);
  CHECK(std::abs(fit.value("sigma_nm") - 0.18) <= 0.02);
}

TEST_CASE("off-resonant two-session sweep fit recovers the reference parameters") {
  const SweepDataset data = load_sweep(kData + "/samples/sweep_offresonant.csv");
  CHECK(data.n_sessions() == 2);
  const Config config = Config::parse_file(kData + "/demo.cfg");
  const FitResult fit = fit_sweep_joint(data, sweep_context_from_config(config));
  REQUIRE(fit.converged);
  // targets (7.9 +- 2.2)%, 11.8 +- 0.2 ns; the drift offset of 1.5 GHz
  CHECK(std::abs(fit.value("f_beta0_eff") - 0.079) <= 0.022);
  CHECK(std::abs(fit.value("tau0_ns") - 11.8) <= 0.2);
  CHECK(std::abs(fit.value("session1_offset_ghz") - 1.5) <=
        3.0 * fit.sigma("session1_offset_ghz") + 0.05);
}

TEST_CASE("bundled PLE traces give raw 224 and centered 190 MHz shapes") {
  std::vector<PLETrace> traces;
  for (int i = 0; i < 17; ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "/samples/ple/trace_%02d.csv", i);
    const CsvTable table = read_csv(kData + name);
    PLETrace trace;
    trace.scan_index = i;
    trace.bin_width_mhz = std::stod(table.meta("bin_width_mhz"));
    for (const auto& row : table.rows) {
      trace.freq_ghz.push_back(row[0]);
      trace.counts.push_back(row[1]);
    }
    traces.push_back(std::move(trace));
  }
  const PLEAnalysis analysis = ple_analyze(traces);
  CHECK(analysis.excluded.empty());
  CHECK(std::abs(analysis.raw_fwhm_mhz - 224.0) <= 10.0);
  CHECK(std::abs(analysis.centered_fwhm_mhz - 190.0) <= 9.0);
  CHECK(analysis.centered_fwhm_mhz < analysis.raw_fwhm_mhz);
}

TEST_CASE("bundled g2 histograms reproduce the reference zero-delay values") {
  const auto load = [](const std::string& path) {
    const CsvTable table = read_csv(path);
    G2Histogram hist;
    hist.train_length = std::stoi(table.meta("train_length"));
    for (const auto& row : table.rows) {
      hist.pulse_index.push_back(static_cast<int>(row[0]));
      hist.coincidences.push_back(row[1]);
      hist.background.push_back(row[2]);
    }
    return hist;
  };

  const G2Result off = g2_analyze(load(kData + "/samples/g2_offresonant.csv"),
                                  G2Model::bunching);
  CHECK(std::abs(off.g2_zero - 0.58) <= 0.05);
  CHECK(std::abs(off.g2_zero_corrected - 0.54) <= 0.05);
  CHECK(off.g2_zero > 0.5);  // several emitters

  const G2Result res = g2_analyze(load(kData + "/samples/g2_resonant.csv"), G2Model::bunching);
  CHECK(std::abs(res.g2_zero - 0.19) <= 0.09);
  CHECK(std::abs(res.g2_zero_corrected - 0.16) <= 0.07);
  CHECK(res.g2_zero < 0.5);  // a single emitter
}

TEST_CASE("bundled decay histograms extrapolate to the reference count rates") {
  const LifetimeFitResult zpl =
      fit_exponential_lifetime(load_decay(kData + "/samples/decay_zpl.csv"), 2.5, 45.0);
  CHECK(std::abs(zpl.total_per_pulse - 9.3e-5) <= 0.2e-5);

  const LifetimeFitResult psb =
      fit_exponential_lifetime(load_decay(kData + "/samples/decay_psb.csv"), 2.5, 45.0);
  CHECK(std::abs(psb.total_per_pulse - 4.6e-4) <= 0.1e-4);

  // same emitter: equal lifetimes within joint uncertainty
  CHECK(std::abs(zpl.tau_ns - psb.tau_ns) <= 3.0 * std::hypot(zpl.tau_err_ns, psb.tau_err_ns));
}

TEST_CASE("bundled timestamps give the low/high vibration statistics") {
  const CsvTable table = read_csv(kData + "/samples/timestamps.csv");
  const int sync_channel = std::stoi(table.meta("sync_channel"));
  std::vector<PhotonRecord> records;
  for (const auto& row : table.rows)
    records.push_back({static_cast<int>(row[0]), static_cast<long long>(row[1])});

  CryostatPhaseProfile profile;
  profile.period_s = 1.0;
  profile.phase_s = {0.0, 0.25, 0.5, 0.75};
  profile.sigma_nm = {0.1, 0.1, 0.3, 0.3};
  profile.windows = {{"low", 0.0, 0.45}, {"high", 0.5, 0.95}};

  const auto stats = phase_resolved_stats(records, sync_channel, 100.0, profile, 1.0, 40.0,
                                          500);
  REQUIRE(stats.size() == 2);
  const PhaseWindowStats& low = stats[0];
  const PhaseWindowStats& high = stats[1];
  CHECK(std::abs(low.lifetime_ns - 9.77) <= 0.08 + 2.0 * low.lifetime_err_ns);
  CHECK(std::abs(high.lifetime_ns - 10.02) <= 0.12 + 2.0 * high.lifetime_err_ns);
  CHECK(std::abs(low.counts_per_pulse - 5.8e-4) <= 0.2e-4);
  CHECK(std::abs(high.counts_per_pulse - 2.5e-4) <= 0.1e-4);
  CHECK(low.lifetime_ns < high.lifetime_ns);
  CHECK(low.counts_per_pulse > high.counts_per_pulse);
}

TEST_CASE("bundled session parameters reproduce the internal-efficiency range") {
  const CsvTable table = read_csv(kData + "/sessions.csv");
  double lo = 1.0, hi = 0.0;
  for (const auto& row : table.rows) {
    const double eta = internal_efficiency(row[0], row[1]);
    CHECK(eta >= 0.0499);
    CHECK(eta <= 0.1701);
    lo = std::min(lo, eta);
    hi = std::max(hi, eta);
  }
  CHECK(lo == doctest::Approx(0.05).epsilon(0.02));
  CHECK(hi == doctest::Approx(0.17).epsilon(0.02));
}

TEST_CASE("excitation-corrected counts sit at the SIL benchmark ratio") {
  // correcting the bundled ZPL rate by the backed-out excitation probability
  const Config config = Config::parse_file(kData + "/demo.cfg");
  const BudgetSystem sys = budget_from_config(config);
  const BackoutResult backout = excitation_backout(9.3e-5, BackoutChannel::zpl, sys);
  const double corrected = 9.3e-5 / backout.p_ex_low;
  const SilComparison cmp = sil_benchmark(corrected);
  CHECK(cmp.ratio > 2.0);  // well above the solid-immersion-lens reference
  CHECK(sil_benchmark(2.0e-3).ratio == doctest::Approx(4.0));
}
