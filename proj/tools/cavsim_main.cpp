// cavsim: simulate, fit and budget a diamond fiber-cavity emitter system.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cavsim/config.hpp"
#include "cavsim/csv.hpp"
#include "cavsim/inference.hpp"
#include "cavsim/layered_cavity.hpp"
#include "cavsim/photon_budget.hpp"
#include "cavsim/rng.hpp"
#include "cavsim/vibration.hpp"

using nlohmann::json;
using namespace cavsim;

namespace {

constexpr const char* kVersion = "0.1.0";

struct GlobalOptions {
  std::string config_path;
  std::string out_dir = ".";
  uint64_t seed = 1;
  int quad_order = 0;        // 0 = take from config
  double sigma_nm = -1.0;    // < 0 = take from config
  int threads = 1;
};

Config load_config(const GlobalOptions& global) {
  std::string path = global.config_path;
  if (path.empty()) {
    const char* dir = std::getenv("CAVSIM_CONFIG_DIR");
    if (!dir)
      throw validation_error("no --config given and CAVSIM_CONFIG_DIR is not set");
    path = std::string(dir) + "/demo.cfg";
  }
  return Config::parse_file(path);
}

std::vector<std::pair<std::string, std::string>> base_metadata(const GlobalOptions& global,
                                                               const Config& config,
                                                               const std::string& command) {
  std::vector<std::pair<std::string, std::string>> meta;
  meta.emplace_back("tool", std::string("cavsim ") + kVersion);
  meta.emplace_back("command", command);
  meta.emplace_back("config", config.source());
  meta.emplace_back("config_hash", config.fingerprint());
  meta.emplace_back("seed", std::to_string(global.seed));
  meta.emplace_back("threads", std::to_string(global.threads));
  return meta;
}

void echo_sweep_defaults(std::vector<std::pair<std::string, std::string>>& meta,
                         const SweepConfig& cfg) {
  meta.emplace_back("sigma_nm", std::to_string(cfg.vibration.sigma_nm));
  meta.emplace_back("quadrature_order", std::to_string(cfg.vibration.quadrature_order));
  meta.emplace_back("truncation", std::to_string(cfg.vibration.truncation));
  meta.emplace_back("fit_window_ns", std::to_string(cfg.fit_window_lo_ns) + " to " +
                                         std::to_string(cfg.fit_window_hi_ns));
  meta.emplace_back("slope_ghz_per_nm", std::to_string(cfg.dispersion.slope_ghz_per_nm()));
}

void write_json(const std::string& path, const json& value) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string temp = path + ".tmp";
  {
    std::ofstream out(temp, std::ios::trunc);
    if (!out) throw numeric_error("cannot write '" + temp + "'");
    out << value.dump(2) << "\n";
  }
  std::filesystem::rename(temp, path);
}

json metadata_json(const std::vector<std::pair<std::string, std::string>>& meta) {
  json j = json::object();
  for (const auto& [k, v] : meta) j[k] = v;
  return j;
}

SweepConfig sweep_config_from(const Config& config, const GlobalOptions& global) {
  SweepConfig cfg;
  cfg.emitter = emitter_from_config(config);
  cfg.coupling = coupling_from_config(config);
  cfg.vibration = vibration_from_config(config);
  cfg.ensemble = ensemble_from_config(config);
  cfg.dispersion = DispersionMap::linear(config.number("coupling", "slope_ghz_per_nm"));
  cfg.p_ex_offresonant = config.number_or("sweep", "p_ex_offresonant", 0.02);
  cfg.fit_window_lo_ns = config.number_or("sweep", "fit_window_lo_ns", 1.0);
  cfg.fit_window_hi_ns = config.number_or("sweep", "fit_window_hi_ns", 40.0);
  if (global.quad_order > 0) cfg.vibration.quadrature_order = global.quad_order;
  if (global.sigma_nm >= 0.0) cfg.vibration.sigma_nm = global.sigma_nm;
  return cfg;
}

// --- subcommand bodies -------------------------------------------------------

void run_dispersion(const GlobalOptions& global, double gap_lo, double gap_hi, int gap_steps,
                    double freq_lo, double freq_hi) {
  const Config config = load_config(global);
  const CavityGeometry geometry = geometry_from_config(config);
  std::vector<double> gaps;
  for (int i = 0; i < gap_steps; ++i)
    gaps.push_back(gap_lo + (gap_hi - gap_lo) * i / std::max(1, gap_steps - 1));

  const std::vector<DispersionPoint> table =
      dispersion_diagram(geometry, gaps, freq_lo, freq_hi);

  CsvTable csv;
  csv.metadata = base_metadata(global, config, "dispersion");
  csv.metadata.emplace_back("freq_window_thz",
                            std::to_string(freq_lo) + " to " + std::to_string(freq_hi));
  csv.header = {"air_gap_um", "frequency_THz", "kappa_GHz", "finesse", "mode_character"};
  for (const DispersionPoint& p : table)
    csv.rows.push_back({p.air_gap_um, p.resonance.frequency_thz, p.resonance.kappa_ghz,
                        p.resonance.finesse, p.resonance.mode_character});
  write_csv(global.out_dir + "/dispersion.csv", csv);
  std::cout << "dispersion: " << table.size() << " resonances over " << gaps.size()
            << " gaps -> " << global.out_dir << "/dispersion.csv\n";
}

void run_sweep(const GlobalOptions& global, const std::string& mode, double span_ghz,
               int points) {
  const Config config = load_config(global);
  SweepConfig cfg = sweep_config_from(config, global);

  std::vector<double> lengths;
  const double slope = cfg.dispersion.slope_ghz_per_nm();
  for (int i = 0; i < points; ++i) {
    const double delta = -span_ghz + 2.0 * span_ghz * i / (points - 1);
    lengths.push_back(delta / slope);
  }
  const bool resonant = mode == "resonant";
  const SweepCurves curves =
      resonant ? resonant_sweep(cfg, lengths) : offresonant_sweep(cfg, lengths);

  CsvTable csv;
  csv.metadata = base_metadata(global, config, "sweep --mode " + mode);
  echo_sweep_defaults(csv.metadata, cfg);
  csv.metadata.emplace_back("channel", resonant ? "psb" : "zpl");
  csv.header = {"detuning_ghz", "counts_per_pulse", "lifetime_ns", "lifetime_err_ns"};
  for (const SweepPoint& p : curves.points)
    csv.rows.push_back({p.detuning_ghz, resonant ? p.counts_psb : p.counts_zpl, p.lifetime_ns,
                        p.lifetime_err_ns});
  write_csv(global.out_dir + "/sweep_" + mode + ".csv", csv);
  std::cout << "sweep: " << points << " points -> " << global.out_dir << "/sweep_" << mode
            << ".csv\n";
}

SweepDataset dataset_from_csv(const CsvTable& table) {
  SweepDataset data;
  const std::string mode = table.has_meta("excitation") ? table.meta("excitation") : "resonant";
  data.excitation = mode == "offresonant" ? SweepDataset::Excitation::offresonant
                                          : SweepDataset::Excitation::resonant;
  const int c_det = table.column("detuning_ghz");
  const int c_counts = table.column("counts_per_pulse");
  const int c_cerr = table.column("counts_err");
  const int c_tau = table.column("lifetime_ns");
  const int c_terr = table.column("lifetime_err_ns");
  const int c_session = table.column("session");
  if (c_det < 0 || c_counts < 0 || c_cerr < 0 || c_tau < 0 || c_terr < 0)
    throw validation_error(
        "dataset needs columns detuning_ghz, counts_per_pulse, counts_err, lifetime_ns, "
        "lifetime_err_ns");
  for (const auto& row : table.rows) {
    SweepObservation obs;
    obs.detuning_ghz = row[c_det];
    obs.counts = row[c_counts];
    obs.counts_err = row[c_cerr];
    obs.lifetime_ns = row[c_tau];
    obs.lifetime_err_ns = row[c_terr];
    obs.session = c_session >= 0 ? static_cast<int>(row[c_session]) : 0;
    data.points.push_back(obs);
  }
  data.validate();
  return data;
}

void run_fit(const GlobalOptions& global, const std::string& dataset_path) {
  const Config config = load_config(global);
  const CsvTable table = read_csv(dataset_path);
  const SweepDataset data = dataset_from_csv(table);
  SweepModelContext ctx = sweep_context_from_config(config);
  if (global.quad_order > 0) ctx.quadrature_order = global.quad_order;

  const FitResult fit = fit_sweep_joint(data, ctx);

  json out;
  out["metadata"] = metadata_json(base_metadata(global, config, "fit " + dataset_path));
  out["converged"] = fit.converged;
  out["message"] = fit.message;
  out["n_iterations"] = fit.n_iterations;
  out["n_points"] = fit.n_points;
  out["chi2"] = fit.chi2;
  out["reduced_chi2"] = fit.reduced_chi2();
  json params = json::object();
  for (size_t i = 0; i < fit.names.size(); ++i) {
    params[fit.names[i]] = {{"value", fit.params(static_cast<int>(i))},
                            {"sigma", fit.uncertainties(static_cast<int>(i))},
                            {"at_bound", static_cast<bool>(fit.at_bound[i])}};
  }
  out["parameters"] = params;
  json cov = json::array();
  for (int r = 0; r < fit.covariance.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < fit.covariance.cols(); ++c) row.push_back(fit.covariance(r, c));
    cov.push_back(row);
  }
  out["covariance"] = cov;
  write_json(global.out_dir + "/fit.json", out);

  // residual curves at the fitted parameters
  const SweepConfig cfg = ctx.sweep_config(fit.params(0), fit.params(1), fit.params(2));
  const bool resonant = data.excitation == SweepDataset::Excitation::resonant;
  std::vector<double> lengths{0.0};
  for (const SweepObservation& obs : data.points) {
    const double offset =
        fit.params(4) + (obs.session > 0 ? fit.params(5 + obs.session - 1) : 0.0);
    lengths.push_back((obs.detuning_ghz - offset) / ctx.slope_ghz_per_nm);
  }
  const SweepCurves curves =
      resonant ? resonant_sweep(cfg, lengths) : offresonant_sweep(cfg, lengths);
  const double peak = resonant ? curves.points[0].counts_psb : curves.points[0].counts_zpl;

  CsvTable residuals;
  residuals.metadata = base_metadata(global, config, "fit " + dataset_path);
  residuals.header = {"detuning_ghz", "counts_per_pulse", "counts_model", "counts_residual",
                      "lifetime_ns", "lifetime_model_ns", "lifetime_residual", "session"};
  for (size_t i = 0; i < data.points.size(); ++i) {
    const SweepObservation& obs = data.points[i];
    const SweepPoint& model = curves.points[i + 1];
    const double counts_model =
        fit.params(3) * (resonant ? model.counts_psb : model.counts_zpl) / peak;
    residuals.rows.push_back({obs.detuning_ghz, obs.counts, counts_model,
                              (obs.counts - counts_model) / obs.counts_err, obs.lifetime_ns,
                              model.lifetime_ns,
                              (obs.lifetime_ns - model.lifetime_ns) / obs.lifetime_err_ns,
                              double(obs.session)});
  }
  write_csv(global.out_dir + "/fit_residuals.csv", residuals);
  std::cout << "fit: converged=" << fit.converged << " chi2r=" << fit.reduced_chi2() << " -> "
            << global.out_dir << "/fit.json\n";
}

void run_ple(const GlobalOptions& global, const std::string& traces_dir) {
  const Config config = load_config(global);
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(traces_dir))
    if (entry.path().extension() == ".csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw validation_error("ple: no .csv traces in '" + traces_dir + "'");

  std::vector<PLETrace> traces;
  for (const auto& file : files) {
    const CsvTable table = read_csv(file.string());
    PLETrace trace;
    trace.scan_index = static_cast<int>(traces.size());
    if (table.has_meta("bin_width_mhz")) trace.bin_width_mhz = std::stod(table.meta("bin_width_mhz"));
    const int c_f = table.column("freq_ghz");
    const int c_c = table.column("counts");
    if (c_f < 0 || c_c < 0)
      throw validation_error(file.string() + ": needs columns freq_ghz, counts");
    for (const auto& row : table.rows) {
      trace.freq_ghz.push_back(row[c_f]);
      trace.counts.push_back(row[c_c]);
    }
    traces.push_back(std::move(trace));
  }

  const PLEAnalysis analysis = ple_analyze(traces);

  json out;
  out["metadata"] = metadata_json(base_metadata(global, config, "ple " + traces_dir));
  out["n_traces"] = traces.size();
  out["excluded"] = analysis.excluded;
  out["raw_fwhm_mhz"] = analysis.raw_fwhm_mhz;
  out["raw_fwhm_err_mhz"] = analysis.raw_fwhm_err_mhz;
  out["centered_fwhm_mhz"] = analysis.centered_fwhm_mhz;
  out["centered_fwhm_err_mhz"] = analysis.centered_fwhm_err_mhz;
  json per_trace = json::array();
  for (const PLETraceFit& f : analysis.traces)
    per_trace.push_back({{"ok", f.ok},
                         {"center_ghz", f.center_ghz},
                         {"center_err_ghz", f.center_err_ghz},
                         {"fwhm_mhz", f.fwhm_mhz},
                         {"fwhm_err_mhz", f.fwhm_err_mhz}});
  out["traces"] = per_trace;
  write_json(global.out_dir + "/ple.json", out);

  CsvTable avg;
  avg.metadata = base_metadata(global, config, "ple " + traces_dir);
  avg.header = {"freq_ghz", "raw_average", "centered_average"};
  for (size_t i = 0; i < analysis.grid_ghz.size(); ++i)
    avg.rows.push_back(
        {analysis.grid_ghz[i], analysis.raw_average[i], analysis.centered_average[i]});
  write_csv(global.out_dir + "/ple_average.csv", avg);
  std::cout << "ple: raw " << analysis.raw_fwhm_mhz << " MHz, centered "
            << analysis.centered_fwhm_mhz << " MHz -> " << global.out_dir << "/ple.json\n";
}

void run_g2(const GlobalOptions& global, const std::string& histogram_path,
            const std::string& model) {
  const Config config = load_config(global);
  const CsvTable table = read_csv(histogram_path);
  G2Histogram hist;
  const int c_k = table.column("pulse_index");
  const int c_c = table.column("coincidences");
  const int c_b = table.column("background");
  if (c_k < 0 || c_c < 0)
    throw validation_error(histogram_path + ": needs columns pulse_index, coincidences");
  if (table.has_meta("train_length")) hist.train_length = std::stoi(table.meta("train_length"));
  for (const auto& row : table.rows) {
    hist.pulse_index.push_back(static_cast<int>(row[c_k]));
    hist.coincidences.push_back(row[c_c]);
    if (c_b >= 0) hist.background.push_back(row[c_b]);
  }

  const G2Result res = g2_analyze(hist, model == "bunching" ? G2Model::bunching : G2Model::flat);
  json out;
  out["metadata"] = metadata_json(base_metadata(global, config, "g2 " + histogram_path));
  out["model"] = model;
  out["g2_zero"] = res.g2_zero;
  out["g2_zero_err"] = res.g2_zero_err;
  out["g2_zero_corrected"] = res.g2_zero_corrected;
  out["g2_zero_corrected_err"] = res.g2_zero_corrected_err;
  out["plateau"] = res.plateau;
  out["bunching_amplitude"] = res.bunching_amplitude;
  out["bunching_amplitude_err"] = res.bunching_amplitude_err;
  out["bunching_decay_pulses"] = res.bunching_decay_pulses;
  out["reduced_chi2"] = res.reduced_chi2;
  write_json(global.out_dir + "/g2.json", out);
  std::cout << "g2(0) = " << res.g2_zero << " (corrected " << res.g2_zero_corrected << ") -> "
            << global.out_dir << "/g2.json\n";
}

void run_budget(const GlobalOptions& global, bool fig5b, bool table1, bool fig7) {
  const Config config = load_config(global);
  BudgetSystem sys = budget_from_config(config);
  if (global.sigma_nm >= 0.0) sys.sigma_nm = global.sigma_nm;
  if (global.quad_order > 0) sys.quadrature_order = global.quad_order;

  const LossLedger ledger = budget_decompose(sys);
  const ZeroVibrationResult cf = zero_vibration_counterfactual(sys);

  const auto category_name = [](LossCategory c) {
    switch (c) {
      case LossCategory::excitation: return "excitation";
      case LossCategory::collection: return "collection";
      case LossCategory::zpl_branching: return "zpl_branching";
    }
    return "?";
  };

  if (!table1 && !fig7) {
    // default output: the ledger (fig5b is a stylistic alias)
    CsvTable csv;
    csv.metadata = base_metadata(global, config, fig5b ? "budget --fig5b" : "budget");
    csv.metadata.emplace_back("sigma_nm", std::to_string(sys.sigma_nm));
    csv.metadata.emplace_back("detected_zpl_per_pulse",
                              std::to_string(ledger.detected_zpl_per_pulse));
    csv.metadata.emplace_back("zero_vibration_detected",
                              std::to_string(cf.detected_zpl_per_pulse));
    csv.header = {"category", "vibration_caused", "db", "linear"};
    // categories encoded numerically: 0 excitation, 1 collection, 2 branching
    for (const LossEntry& e : ledger.entries)
      csv.rows.push_back({double(static_cast<int>(e.category)),
                          e.cause == LossCause::vibration ? 1.0 : 0.0, e.db, e.linear});
    write_csv(global.out_dir + "/budget_ledger.csv", csv);

    json out;
    out["metadata"] = metadata_json(base_metadata(global, config, "budget"));
    out["detected_zpl_per_pulse"] = ledger.detected_zpl_per_pulse;
    out["total_db"] = ledger.total_db();
    out["vibration_db"] = ledger.vibration_db();
    json cats = json::object();
    for (LossCategory c : {LossCategory::excitation, LossCategory::collection,
                           LossCategory::zpl_branching})
      cats[category_name(c)] = ledger.category_db(c);
    out["category_db"] = cats;
    out["zero_vibration"] = {{"zpl_fraction", cf.zpl_fraction},
                             {"detected_zpl_per_pulse", cf.detected_zpl_per_pulse},
                             {"db_gap", cf.db_gap}};
    json entries = json::array();
    for (const LossEntry& e : ledger.entries)
      entries.push_back({{"label", e.label},
                         {"category", category_name(e.category)},
                         {"cause", e.cause == LossCause::vibration ? "vibration" : "internal"},
                         {"db", e.db},
                         {"linear", e.linear}});
    out["entries"] = entries;
    write_json(global.out_dir + "/budget.json", out);
    std::cout << "budget: total " << ledger.total_db() << " dB, vibration "
              << ledger.vibration_db() << " dB -> " << global.out_dir << "/budget.json\n";
  }

  if (table1) {
    const auto rows = project_improvements(sys, demo_improvement_scenario());
    CsvTable csv;
    csv.metadata = base_metadata(global, config, "budget --table1");
    csv.header = {"step", "factor", "cumulative", "cumulative_percent", "display_percent"};
    for (size_t i = 0; i < rows.size(); ++i)
      csv.rows.push_back({double(i + 1), rows[i].step_factor, rows[i].cumulative,
                          rows[i].cumulative_percent, rows[i].display_percent});
    write_csv(global.out_dir + "/budget_table1.csv", csv);
    std::cout << "budget --table1 -> " << global.out_dir << "/budget_table1.csv\n";
  }

  if (fig7) {
    std::vector<double> grid;
    for (double f = 500.0; f <= 6200.0; f += 100.0) grid.push_back(f);
    CsvTable csv;
    csv.metadata = base_metadata(global, config, "budget --fig7");
    csv.header = {"finesse", "zpl_fraction_current_vib", "outcoupled_current_vib",
                  "zpl_fraction_low_vib", "outcoupled_low_vib"};
    const auto current = finesse_sweep(sys, 0.2, grid);
    const auto low = finesse_sweep(sys, 0.01, grid);
    for (size_t i = 0; i < grid.size(); ++i)
      csv.rows.push_back({grid[i], current[i].zpl_fraction, current[i].outcoupled_fraction,
                          low[i].zpl_fraction, low[i].outcoupled_fraction});
    write_csv(global.out_dir + "/budget_fig7.csv", csv);
    std::cout << "budget --fig7 -> " << global.out_dir << "/budget_fig7.csv\n";
  }
}

void run_project(const GlobalOptions& global, const std::string& scenario_path) {
  const Config config = load_config(global);
  const Config scenario_cfg = Config::parse_file(scenario_path);
  const ImprovementScenario scenario = scenario_from_config(scenario_cfg);
  BudgetSystem sys = budget_from_config(config);
  if (global.quad_order > 0) sys.quadrature_order = global.quad_order;

  const auto rows = project_improvements(sys, scenario);
  CsvTable csv;
  csv.metadata = base_metadata(global, config, "project " + scenario_path);
  csv.metadata.emplace_back("scenario_hash", scenario_cfg.fingerprint());
  csv.metadata.emplace_back("baseline_per_pulse", std::to_string(scenario.baseline_per_pulse));
  csv.header = {"step", "factor", "model_factor", "cumulative", "cumulative_percent",
                "display_percent", "capped"};
  for (size_t i = 0; i < rows.size(); ++i)
    csv.rows.push_back({double(i + 1), rows[i].step_factor, rows[i].model_factor,
                        rows[i].cumulative, rows[i].cumulative_percent, rows[i].display_percent,
                        rows[i].capped ? 1.0 : 0.0});
  write_csv(global.out_dir + "/projection.csv", csv);
  std::cout << "project: " << rows.size() << " steps -> " << global.out_dir
            << "/projection.csv\n";
}

struct SynthOptions {
  std::string kind = "sweep";
  std::string mode = "resonant";
  double y_eff = 0.07, tau0 = 10.9, sigma = 0.18, amplitude = 4.6e-4;
  double span_ghz = 18.0;
  int points = 17;
  long long pulses = 3'000'000;
  int sessions = 1;
  double session_offset_ghz = 4.0;
  // ple
  int traces = 17;
  double fwhm_mhz = 190.0, trace_amplitude = 120.0, trace_background = 6.0;
  double bin_mhz = 50.0, trace_span_ghz = 1.2;
  std::string drift = "random_walk";
  double drift_mhz = 22.0;
  // g2
  int emitters = 1, train_length = 200, max_separation = 30;
  long long trains = 20000;
  double detection = 0.05, g2_background = 0.0, bright_to_dark = 0.0, dark_to_bright = 0.0;
  // decay
  double counts_per_pulse = 9.3e-5, decay_tau = 9.87, bin_ns = 0.128, tmax_ns = 60.0,
         mask_ns = 2.0, background_per_bin = 1.0;
  long long decay_pulses = 50'000'000;
  // timestamps
  int periods = 8;
  double period_s = 1.0, pulse_ns = 100.0;
  double low_tau = 9.77, low_counts = 5.8e-4, high_tau = 10.02, high_counts = 2.5e-4;
};

void run_synth(const GlobalOptions& global, const SynthOptions& opt) {
  const Config config = load_config(global);
  auto meta = base_metadata(global, config, "synth --kind " + opt.kind);

  if (opt.kind == "sweep") {
    SweepModelContext ctx = sweep_context_from_config(config);
    if (global.quad_order > 0) ctx.quadrature_order = global.quad_order;
    SweepTruth truth;
    truth.y_eff = opt.y_eff;
    truth.tau0_ns = opt.tau0;
    truth.sigma_nm = opt.sigma;
    truth.amplitude = opt.amplitude;
    for (int s = 1; s < opt.sessions; ++s)
      truth.session_offsets_ghz.push_back(opt.session_offset_ghz * s);
    std::vector<double> detunings;
    for (int i = 0; i < opt.points; ++i)
      detunings.push_back(-opt.span_ghz + 2.0 * opt.span_ghz * i / (opt.points - 1));
    const auto excitation = opt.mode == "offresonant" ? SweepDataset::Excitation::offresonant
                                                      : SweepDataset::Excitation::resonant;
    const SweepDataset data =
        synth_sweep(ctx, excitation, truth, detunings, opt.pulses, global.seed);

    CsvTable csv;
    csv.metadata = meta;
    csv.metadata.emplace_back("excitation", opt.mode);
    csv.metadata.emplace_back("truth",
                              "y_eff " + std::to_string(opt.y_eff) + ", tau0 " +
                                  std::to_string(opt.tau0) + " ns, sigma " +
                                  std::to_string(opt.sigma) + " nm");
    csv.metadata.emplace_back("pulses_per_point", std::to_string(opt.pulses));
    csv.header = {"detuning_ghz", "counts_per_pulse", "counts_err", "lifetime_ns",
                  "lifetime_err_ns", "session"};
    for (const SweepObservation& p : data.points)
      csv.rows.push_back({p.detuning_ghz, p.counts, p.counts_err, p.lifetime_ns,
                          p.lifetime_err_ns, double(p.session)});
    write_csv(global.out_dir + "/sweep_" + opt.mode + ".csv", csv);
    std::cout << "synth sweep -> " << global.out_dir << "/sweep_" << opt.mode << ".csv\n";
  } else if (opt.kind == "ple") {
    PLEDriftSpec drift;
    drift.kind = opt.drift == "linear"      ? PLEDriftSpec::Kind::linear
                 : opt.drift == "none"      ? PLEDriftSpec::Kind::none
                                            : PLEDriftSpec::Kind::random_walk;
    drift.scale_mhz = opt.drift_mhz;
    const std::vector<PLETrace> traces =
        synth_ple_traces(opt.traces, opt.fwhm_mhz, opt.trace_amplitude, opt.trace_background,
                         opt.bin_mhz, opt.trace_span_ghz, drift, global.seed);
    for (const PLETrace& trace : traces) {
      CsvTable csv;
      csv.metadata = meta;
      csv.metadata.emplace_back("scan_index", std::to_string(trace.scan_index));
      csv.metadata.emplace_back("bin_width_mhz", std::to_string(trace.bin_width_mhz));
      csv.header = {"freq_ghz", "counts"};
      for (size_t i = 0; i < trace.freq_ghz.size(); ++i)
        csv.rows.push_back({trace.freq_ghz[i], trace.counts[i]});
      char name[64];
      std::snprintf(name, sizeof name, "/trace_%02d.csv", trace.scan_index);
      write_csv(global.out_dir + name, csv);
    }
    std::cout << "synth ple -> " << global.out_dir << "/trace_XX.csv (x" << opt.traces << ")\n";
  } else if (opt.kind == "g2") {
    G2SynthSpec spec;
    spec.n_emitters = opt.emitters;
    spec.detection_prob = opt.detection;
    spec.background_prob = opt.g2_background;
    spec.train_length = opt.train_length;
    spec.n_trains = opt.trains;
    spec.bright_to_dark = opt.bright_to_dark;
    spec.dark_to_bright = opt.dark_to_bright;
    spec.max_separation = opt.max_separation;
    const G2Histogram hist = synth_g2(spec, global.seed);
    CsvTable csv;
    csv.metadata = meta;
    csv.metadata.emplace_back("train_length", std::to_string(hist.train_length));
    csv.header = {"pulse_index", "coincidences", "background"};
    for (size_t i = 0; i < hist.pulse_index.size(); ++i)
      csv.rows.push_back({double(hist.pulse_index[i]), hist.coincidences[i],
                          hist.background.empty() ? 0.0 : hist.background[i]});
    write_csv(global.out_dir + "/g2_" + opt.mode + ".csv", csv);
    std::cout << "synth g2 -> " << global.out_dir << "/g2_" << opt.mode << ".csv\n";
  } else if (opt.kind == "decay") {
    const DecayHistogram hist =
        synth_decay(opt.counts_per_pulse, opt.decay_tau, opt.decay_pulses, opt.bin_ns,
                    opt.tmax_ns, opt.mask_ns, opt.background_per_bin, global.seed);
    CsvTable csv;
    csv.metadata = meta;
    csv.metadata.emplace_back("n_pulses", std::to_string(hist.n_pulses));
    csv.metadata.emplace_back("bin_width_ns", std::to_string(hist.bin_width_ns));
    csv.metadata.emplace_back("mask_ns", std::to_string(opt.mask_ns));
    csv.header = {"t_ns", "counts"};
    for (size_t i = 0; i < hist.t_ns.size(); ++i)
      csv.rows.push_back({hist.t_ns[i], hist.counts[i]});
    write_csv(global.out_dir + "/decay_" + opt.mode + ".csv", csv);
    std::cout << "synth decay -> " << global.out_dir << "/decay_" << opt.mode << ".csv\n";
  } else if (opt.kind == "timestamps") {
    Rng rng(global.seed);
    CsvTable csv;
    csv.metadata = meta;
    csv.metadata.emplace_back("sync_channel", "9");
    csv.metadata.emplace_back("pulse_period_ns", std::to_string(opt.pulse_ns));
    csv.metadata.emplace_back("period_s", std::to_string(opt.period_s));
    csv.metadata.emplace_back("windows", "low 0.00-0.45, high 0.50-0.95");
    csv.header = {"channel", "time_ps"};
    const long long pulses_per_period =
        static_cast<long long>(opt.period_s * 1e9 / opt.pulse_ns);
    for (int per = 0; per <= opt.periods; ++per) {
      const long long t_sync = static_cast<long long>(per * opt.period_s * 1e12);
      csv.rows.push_back({9.0, double(t_sync)});
      if (per == opt.periods) break;
      for (long long k = 0; k < pulses_per_period; ++k) {
        const double phase = k * opt.pulse_ns * 1e-9;
        double tau = 0.0, counts = 0.0;
        if (phase >= 0.0 && phase < 0.45) {
          tau = opt.low_tau;
          counts = opt.low_counts;
        } else if (phase >= 0.5 && phase < 0.95) {
          tau = opt.high_tau;
          counts = opt.high_counts;
        } else {
          continue;
        }
        if (rng.uniform() < counts) {
          const double t_decay = rng.exponential(tau);
          if (t_decay < opt.pulse_ns)
            csv.rows.push_back(
                {1.0, double(t_sync) + (k * opt.pulse_ns + t_decay) * 1e3});
        }
      }
    }
    write_csv(global.out_dir + "/timestamps.csv", csv);
    std::cout << "synth timestamps -> " << global.out_dir << "/timestamps.csv ("
              << csv.rows.size() << " records)\n";
  } else {
    throw validation_error("synth: unknown kind '" + opt.kind + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cavsim: fiber-cavity emitter simulation, fitting and photon budgeting"};
  app.set_version_flag("--version", std::string(kVersion));

  GlobalOptions global;
  app.add_option("--config", global.config_path, "configuration file")
      ->envname("CAVSIM_CONFIG");
  app.add_option("--out", global.out_dir, "output directory");
  app.add_option("--seed", global.seed, "random seed recorded in outputs");
  app.add_option("--quad-order", global.quad_order, "override quadrature order");
  app.add_option("--sigma-nm", global.sigma_nm, "override rms vibration amplitude");
  app.add_option("--threads", global.threads, "worker threads (outputs stay deterministic)");

  // dispersion
  auto* disp = app.add_subcommand("dispersion", "resonance branches vs air gap");
  double gap_lo = 5.0, gap_hi = 7.5, freq_lo = 465.0, freq_hi = 476.0;
  int gap_steps = 26;
  disp->add_option("--gap-min", gap_lo);
  disp->add_option("--gap-max", gap_hi);
  disp->add_option("--gap-steps", gap_steps);
  disp->add_option("--freq-lo", freq_lo);
  disp->add_option("--freq-hi", freq_hi);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "model detuning sweep");
  std::string sweep_mode = "resonant";
  double span_ghz = 18.0;
  int sweep_points = 41;
  sweep->add_option("--mode", sweep_mode)->check(CLI::IsMember({"offresonant", "resonant"}));
  sweep->add_option("--span-ghz", span_ghz);
  sweep->add_option("--points", sweep_points);

  // fit
  auto* fit = app.add_subcommand("fit", "joint counts+lifetime sweep fit");
  std::string dataset_path;
  fit->add_option("--dataset", dataset_path)->required();

  // ple
  auto* ple = app.add_subcommand("ple", "PLE trace analysis with drift centering");
  std::string traces_dir;
  ple->add_option("--traces", traces_dir)->required();

  // g2
  auto* g2 = app.add_subcommand("g2", "pulsed autocorrelation analysis");
  std::string histogram_path, g2_model = "bunching";
  g2->add_option("--histogram", histogram_path)->required();
  g2->add_option("--model", g2_model)->check(CLI::IsMember({"flat", "bunching"}));

  // budget
  auto* budget = app.add_subcommand("budget", "photon-loss ledger and projections");
  bool fig5b = false, table1 = false, fig7 = false;
  budget->add_flag("--fig5b", fig5b, "loss breakdown by category and cause");
  budget->add_flag("--table1", table1, "preset improvement table");
  budget->add_flag("--fig7", fig7, "finesse sweeps at two vibration levels");

  // project
  auto* project = app.add_subcommand("project", "apply an improvement scenario");
  std::string scenario_path;
  project->add_option("--scenario", scenario_path)->required();

  // synth
  auto* synth = app.add_subcommand("synth", "generate synthetic datasets");
  SynthOptions sopt;
  synth->add_option("--kind", sopt.kind)
      ->check(CLI::IsMember({"sweep", "ple", "g2", "decay", "timestamps"}));
  synth->add_option("--mode", sopt.mode);
  synth->add_option("--y-eff", sopt.y_eff);
  synth->add_option("--tau0", sopt.tau0);
  synth->add_option("--sigma", sopt.sigma);
  synth->add_option("--amplitude", sopt.amplitude);
  synth->add_option("--span-ghz", sopt.span_ghz);
  synth->add_option("--points", sopt.points);
  synth->add_option("--pulses", sopt.pulses);
  synth->add_option("--sessions", sopt.sessions);
  synth->add_option("--session-offset-ghz", sopt.session_offset_ghz);
  synth->add_option("--traces", sopt.traces);
  synth->add_option("--fwhm-mhz", sopt.fwhm_mhz);
  synth->add_option("--trace-amplitude", sopt.trace_amplitude);
  synth->add_option("--trace-background", sopt.trace_background);
  synth->add_option("--bin-mhz", sopt.bin_mhz);
  synth->add_option("--trace-span-ghz", sopt.trace_span_ghz);
  synth->add_option("--drift", sopt.drift)->check(CLI::IsMember({"none", "linear", "random_walk"}));
  synth->add_option("--drift-mhz", sopt.drift_mhz);
  synth->add_option("--emitters", sopt.emitters);
  synth->add_option("--train-length", sopt.train_length);
  synth->add_option("--max-separation", sopt.max_separation);
  synth->add_option("--trains", sopt.trains);
  synth->add_option("--detection", sopt.detection);
  synth->add_option("--g2-background", sopt.g2_background);
  synth->add_option("--bright-to-dark", sopt.bright_to_dark);
  synth->add_option("--dark-to-bright", sopt.dark_to_bright);
  synth->add_option("--counts-per-pulse", sopt.counts_per_pulse);
  synth->add_option("--decay-tau", sopt.decay_tau);
  synth->add_option("--decay-pulses", sopt.decay_pulses);
  synth->add_option("--bin-ns", sopt.bin_ns);
  synth->add_option("--tmax-ns", sopt.tmax_ns);
  synth->add_option("--mask-ns", sopt.mask_ns);
  synth->add_option("--background-per-bin", sopt.background_per_bin);
  synth->add_option("--periods", sopt.periods);
  synth->add_option("--period-s", sopt.period_s);
  synth->add_option("--pulse-ns", sopt.pulse_ns);
  synth->add_option("--low-tau", sopt.low_tau);
  synth->add_option("--low-counts", sopt.low_counts);
  synth->add_option("--high-tau", sopt.high_tau);
  synth->add_option("--high-counts", sopt.high_counts);

  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*disp) run_dispersion(global, gap_lo, gap_hi, gap_steps, freq_lo, freq_hi);
    if (*sweep) run_sweep(global, sweep_mode, span_ghz, sweep_points);
    if (*fit) run_fit(global, dataset_path);
    if (*ple) run_ple(global, traces_dir);
    if (*g2) run_g2(global, histogram_path, g2_model);
    if (*budget) run_budget(global, fig5b, table1, fig7);
    if (*project) run_project(global, scenario_path);
    if (*synth) run_synth(global, sopt);
  } catch (const validation_error& e) {
    std::cerr << "error (input): " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
