#include "cavsim/photon_budget.hpp"

#include <algorithm>
#include <cmath>

namespace cavsim {

void EfficiencyChain::validate() const {
  const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(eta_int0) || !in_unit(eta_ext) || !in_unit(eta_psb_low) ||
      !in_unit(eta_psb_high) || !in_unit(incoupling))
    throw validation_error("EfficiencyChain: efficiencies must be in [0,1]");
  if (eta_psb_high < eta_psb_low)
    throw validation_error("EfficiencyChain: eta_psb bounds out of order");
  if (nd_filter_db < 0.0) throw validation_error("EfficiencyChain: ND filter must be >= 0 dB");
}

void BudgetSystem::validate() const {
  emitter.validate();
  chain.validate();
  if (!(y0 > 0.0)) throw validation_error("BudgetSystem: y0 must be > 0");
  if (!(kappa_ghz > 0.0) || !(kappa_fs_ghz > 0.0) || kappa_fs_ghz > kappa_ghz)
    throw validation_error("BudgetSystem: need 0 < kappa_fs <= kappa");
  if (slope_ghz_per_nm == 0.0) throw validation_error("BudgetSystem: slope must be nonzero");
  if (sigma_nm < 0.0) throw validation_error("BudgetSystem: sigma must be >= 0");
  if (!(fsr_local_thz > 0.0)) throw validation_error("BudgetSystem: FSR must be > 0");
  if (quadrature_order < 16) throw validation_error("BudgetSystem: quadrature order >= 16");
}

BudgetSystem demo_budget_system() {
  BudgetSystem sys;
  sys.emitter = EmitterParams::from_lifetime(10.9, 0.0255);
  sys.emitter.p_in = 1.0;
  sys.emitter.phi_p0 = 0.14548;
  sys.y0 = 0.2195;
  sys.kappa_ghz = 1.670;
  sys.kappa_fs_ghz = 0.9354;
  sys.fsr_local_thz = 6.914;
  sys.slope_ghz_per_nm = -43.35;
  sys.sigma_nm = 0.20;
  sys.chain.eta_int0 = internal_efficiency(sys.kappa_fs_ghz, sys.kappa_ghz);
  sys.chain.eta_ext = 0.22228;
  return sys;
}

double internal_efficiency(double kappa_fs_ghz, double kappa_ghz) {
  if (!(kappa_fs_ghz > 0.0) || !(kappa_ghz > 0.0))
    throw validation_error("internal_efficiency: rates must be > 0");
  if (kappa_fs_ghz > kappa_ghz)
    throw validation_error("internal_efficiency: kappa_fs cannot exceed kappa");
  return kappa_fs_ghz / kappa_ghz;
}

namespace {

LengthRule budget_rule(const BudgetSystem& sys, double sigma_nm) {
  const double core_nm = sys.kappa_ghz / std::abs(sys.slope_ghz_per_nm);
  return LengthRule::build(sigma_nm, sys.quadrature_order, 6.0, core_nm);
}

struct ChainAverages {
  double detection_weight;  // < sqrt(T) * branching * T >
  double branching;         // < branching >
  double mean_t;            // < T >
  double psb_branching;     // < (1 - beta) branching >
};

ChainAverages chain_averages(const BudgetSystem& sys, double sigma_nm) {
  const LengthRule rule = budget_rule(sys, sigma_nm);
  const double f0 = sys.purcell0();
  ChainAverages avg{0.0, 0.0, 0.0, 0.0};
  for (size_t i = 0; i < rule.offsets_nm.size(); ++i) {
    const double delta = rule.offsets_nm[i] * sys.slope_ghz_per_nm;
    const double t = lorentzian_transmission(delta, sys.kappa_ghz);
    const double f = (f0 - 1.0) * t + 1.0;
    const double b = zpl_cavity_branching(f, sys.emitter);
    const double w = rule.weights[i];
    avg.detection_weight += w * std::sqrt(t) * b * t;
    avg.branching += w * b;
    avg.mean_t += w * t;
    avg.psb_branching += w * psb_branching(f, sys.emitter);
  }
  return avg;
}

}  // namespace

BudgetEvaluation evaluate_budget(const BudgetSystem& system) {
  system.validate();
  const ChainAverages at_sigma = chain_averages(system, system.sigma_nm);
  const ChainAverages at_zero = chain_averages(system, 0.0);

  const double excitation_scale = system.emitter.p_in * system.emitter.phi_p0 / 2.0;
  const double collection = system.chain.eta_int0 * system.chain.eta_ext;

  BudgetEvaluation eval;
  eval.detected_per_pulse = excitation_scale * collection * at_sigma.detection_weight;
  eval.detected_sigma0 = excitation_scale * collection * at_zero.detection_weight;
  eval.vibration_db = db_from_probability(eval.detected_per_pulse / eval.detected_sigma0);
  eval.zpl_fraction = at_sigma.branching;
  eval.zpl_fraction_sigma0 = at_zero.branching;
  eval.mean_transmission = at_sigma.mean_t;
  eval.psb_branching = at_sigma.psb_branching;
  return eval;
}

double LossLedger::total_db() const {
  double sum = 0.0;
  for (const LossEntry& e : entries) sum += e.db;
  return sum;
}

double LossLedger::category_db(LossCategory category) const {
  double sum = 0.0;
  for (const LossEntry& e : entries)
    if (e.category == category) sum += e.db;
  return sum;
}

double LossLedger::vibration_db() const {
  double sum = 0.0;
  for (const LossEntry& e : entries)
    if (e.cause == LossCause::vibration) sum += e.db;
  return sum;
}

double LossLedger::end_to_end_probability() const {
  double product = 1.0;
  for (const LossEntry& e : entries) product *= e.linear;
  return product;
}

LossLedger budget_decompose(const BudgetSystem& system) {
  const BudgetEvaluation eval = evaluate_budget(system);
  const double v = eval.vibration_db;
  // exponent shares of the T^(5/2) weight
  const double v_excitation = v * 0.5 / 2.5;
  const double v_branching = v * 1.0 / 2.5;
  const double v_collection = v * 1.0 / 2.5;

  const auto entry = [](std::string label, LossCategory cat, LossCause cause, double db) {
    return LossEntry{std::move(label), cat, cause, db, probability_from_db(db)};
  };

  LossLedger ledger;
  const double excitation_scale = system.emitter.p_in * system.emitter.phi_p0 / 2.0;
  ledger.entries.push_back(entry("pulse area and initialization", LossCategory::excitation,
                                 LossCause::internal, db_from_probability(excitation_scale)));
  ledger.entries.push_back(entry("vibrations (excitation share)", LossCategory::excitation,
                                 LossCause::vibration, v_excitation));
  ledger.entries.push_back(entry("emission outside the cavity ZPL channel",
                                 LossCategory::zpl_branching, LossCause::internal,
                                 db_from_probability(eval.zpl_fraction_sigma0)));
  ledger.entries.push_back(entry("vibrations (branching share)", LossCategory::zpl_branching,
                                 LossCause::vibration, v_branching));
  ledger.entries.push_back(entry("internal collection", LossCategory::collection,
                                 LossCause::internal,
                                 db_from_probability(system.chain.eta_int0)));
  ledger.entries.push_back(entry("external path and detector", LossCategory::collection,
                                 LossCause::internal,
                                 db_from_probability(system.chain.eta_ext)));
  ledger.entries.push_back(entry("vibrations (collection share)", LossCategory::collection,
                                 LossCause::vibration, v_collection));
  ledger.detected_zpl_per_pulse = eval.detected_per_pulse;
  ledger.detected_zpl_sigma0 = eval.detected_sigma0;
  return ledger;
}

ZeroVibrationResult zero_vibration_counterfactual(const BudgetSystem& system) {
  const BudgetEvaluation eval = evaluate_budget(system);
  ZeroVibrationResult out;
  out.zpl_fraction = eval.zpl_fraction_sigma0;
  out.detected_zpl_per_pulse = eval.detected_sigma0;
  out.db_gap = eval.vibration_db;
  return out;
}

BackoutResult excitation_backout(double measured_per_pulse, BackoutChannel channel,
                                 const BudgetSystem& system) {
  if (!(measured_per_pulse > 0.0))
    throw validation_error("excitation_backout: counts must be > 0");
  const BudgetEvaluation eval = evaluate_budget(system);

  BackoutResult out;
  if (channel == BackoutChannel::zpl) {
    // vibration-inclusive effective branching and collection from the ledger's
    // exponent shares
    const double v = eval.vibration_db;
    const double b_eff = eval.zpl_fraction_sigma0 * probability_from_db(v * 0.4);
    const double eta_int_eff = system.chain.eta_int0 * probability_from_db(v * 0.4);
    const double expected = b_eff * eta_int_eff * system.chain.eta_ext;
    if (!(expected > 0.0)) throw validation_error("excitation_backout: zero efficiency");
    out.expected_per_pulse_low = out.expected_per_pulse_high = expected;
    out.p_ex_low = out.p_ex_high = measured_per_pulse / expected;
  } else {
    const double b_psb = eval.psb_branching;
    const double lo = b_psb * system.chain.eta_psb_low;
    const double hi = b_psb * system.chain.eta_psb_high;
    if (!(lo > 0.0)) throw validation_error("excitation_backout: zero PSB efficiency");
    out.expected_per_pulse_low = lo;
    out.expected_per_pulse_high = hi;
    out.p_ex_low = measured_per_pulse / hi;
    out.p_ex_high = measured_per_pulse / lo;
  }
  return out;
}

SilComparison sil_benchmark(double corrected_counts_per_pulse) {
  if (corrected_counts_per_pulse < 0.0)
    throw validation_error("sil_benchmark: counts must be >= 0");
  SilComparison cmp;
  cmp.corrected_counts_per_pulse = corrected_counts_per_pulse;
  cmp.ratio = corrected_counts_per_pulse / cmp.reference_per_pulse;
  return cmp;
}

double round_to_one_significant(double value) {
  if (value == 0.0) return 0.0;
  const double mag = std::pow(10.0, std::floor(std::log10(std::abs(value))));
  return std::round(value / mag) * mag;
}

namespace {

BudgetSystem apply_overrides(const BudgetSystem& base, const ImprovementStep& step) {
  BudgetSystem sys = base;
  if (step.sigma_nm) sys.sigma_nm = *step.sigma_nm;
  if (step.finesse) {
    // fixed mirror design: kappa rescales with finesse, the coupling follows
    // 4g^2/(kappa gamma) and the outcoupling follows kappa_fs/kappa
    const double kappa_new = ghz_from_thz(base.fsr_local_thz) / *step.finesse;
    sys.y0 = base.y0 * base.kappa_ghz / kappa_new;
    sys.kappa_ghz = kappa_new;
    sys.chain.eta_int0 = internal_efficiency(sys.kappa_fs_ghz, sys.kappa_ghz);
  }
  if (step.coupling_gain) sys.y0 *= *step.coupling_gain;
  if (step.excitation_gain) {
    sys.emitter.phi_p0 *= *step.excitation_gain;
    // keep the weak-limit bookkeeping: excitation scale enters linearly
  }
  return sys;
}

}  // namespace

std::vector<ProjectionRow> project_improvements(const BudgetSystem& system,
                                                const ImprovementScenario& scenario) {
  system.validate();
  if (!(scenario.baseline_per_pulse > 0.0))
    throw validation_error("project_improvements: baseline must be > 0");

  std::vector<ProjectionRow> rows;
  double cumulative = scenario.baseline_per_pulse;
  BudgetSystem current = system;
  double model_prev = evaluate_budget(current).detected_per_pulse;

  for (const ImprovementStep& step : scenario.steps) {
    const bool has_override =
        step.sigma_nm || step.finesse || step.coupling_gain || step.excitation_gain;
    if (step.factor > 0.0 && has_override)
      throw validation_error("project_improvements: step '" + step.label +
                             "' mixes a factor with parameter overrides");
    if (!(step.factor > 0.0) && !has_override)
      throw validation_error("project_improvements: step '" + step.label + "' does nothing");

    ProjectionRow row;
    row.label = step.label;

    if (has_override) {
      const BudgetSystem next = apply_overrides(current, step);
      const double model_next = evaluate_budget(next).detected_per_pulse;
      row.model_factor = model_next / model_prev;
      row.step_factor = row.model_factor;
      current = next;
      model_prev = model_next;
    } else {
      row.step_factor = step.factor;
      // a factor step may still correspond to a physical override elsewhere;
      // the model column stays empty here
      row.model_factor = 0.0;
    }

    cumulative *= row.step_factor;
    if (cumulative > 1.0) {
      cumulative = 1.0;
      row.capped = true;
    }
    row.cumulative = cumulative;
    row.cumulative_percent = 100.0 * cumulative;
    row.display_percent = round_to_one_significant(row.cumulative_percent);
    rows.push_back(row);
  }
  return rows;
}

ImprovementScenario demo_improvement_scenario() {
  ImprovementScenario scenario;
  scenario.baseline_per_pulse = 9.3e-5;
  scenario.steps = {
      {"spin pump / resonant repump", 20.0, {}, {}, {}, {}},
      {"20x vibration reduction", 16.0, {}, {}, {}, {}},
      {"finesse limited by mirror coatings (6000)", 3.0, {}, {}, {}, {}},
      {"higher finesse (11000)", 1.2, {}, {}, {}, {}},
      {"diamond-like mode", 2.0, {}, {}, {}, {}},
  };
  return scenario;
}

std::vector<FinesseSweepPoint> finesse_sweep(const BudgetSystem& system, double sigma_nm,
                                             std::span<const double> finesse_grid) {
  system.validate();
  if (finesse_grid.empty()) throw validation_error("finesse_sweep: empty grid");
  const double max_finesse = ghz_from_thz(system.fsr_local_thz) / system.kappa_fs_ghz;

  std::vector<FinesseSweepPoint> sweep;
  for (const double finesse : finesse_grid) {
    if (!(finesse > 0.0) || finesse > max_finesse)
      throw validation_error("finesse_sweep: finesse outside (0, FSR/kappa_fs]");
    BudgetSystem sys = system;
    sys.sigma_nm = sigma_nm;
    const double kappa_new = ghz_from_thz(system.fsr_local_thz) / finesse;
    sys.y0 = system.y0 * system.kappa_ghz / kappa_new;
    sys.kappa_ghz = kappa_new;
    sys.chain.eta_int0 = internal_efficiency(sys.kappa_fs_ghz, sys.kappa_ghz);

    const LengthRule rule = budget_rule(sys, sigma_nm);
    const double f0 = sys.purcell0();
    double branching = 0.0, outcoupled = 0.0;
    for (size_t i = 0; i < rule.offsets_nm.size(); ++i) {
      const double delta = rule.offsets_nm[i] * sys.slope_ghz_per_nm;
      const double t = lorentzian_transmission(delta, sys.kappa_ghz);
      const double f = (f0 - 1.0) * t + 1.0;
      const double b = zpl_cavity_branching(f, sys.emitter);
      branching += rule.weights[i] * b;
      outcoupled += rule.weights[i] * b * t;
    }
    sweep.push_back({finesse, branching, outcoupled * sys.chain.eta_int0});
  }
  return sweep;
}

}  // namespace cavsim
