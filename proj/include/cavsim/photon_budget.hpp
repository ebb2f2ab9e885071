#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cavsim/emitter.hpp"
#include "cavsim/vibration.hpp"

namespace cavsim {

/// Detection-path efficiencies.  The internal/external split of the joint
/// collection is not separately measured; the chain keeps both the jointentry
/// and the assumed split.
struct EfficiencyChain {
  double eta_int0 = 0.5601;  // zero-vibration internal collection kappa_fs/kappa
  double eta_ext = 0.22228;  // external optics and detector
  double eta_psb_low = 0.004;
  double eta_psb_high = 0.012;
  double incoupling = 0.028; // fiber-side incoupling (bookkeeping)
  double nd_filter_db = 8.6; // attenuation in the ZPL path during measurement

  double eta_psb_mid() const { return 0.5 * (eta_psb_low + eta_psb_high); }
  void validate() const;
};

/// Everything the loss budget needs about the operating point.
struct BudgetSystem {
  EmitterParams emitter;          // tau0, beta0, phi_p0, p_in
  double y0 = 0.2195;             // zero-vibration on-resonance (F0-1) beta0
  double kappa_ghz = 1.670;
  double kappa_fs_ghz = 0.9354;   // flat-mirror transmission rate
  double fsr_local_thz = 6.914;   // local mode spacing at the operating point
  double slope_ghz_per_nm = -43.35;
  double sigma_nm = 0.20;
  int quadrature_order = 96;
  EfficiencyChain chain;

  double purcell0() const { return y0 / emitter.beta0 + 1.0; }
  double finesse() const { return ghz_from_thz(fsr_local_thz) / kappa_ghz; }
  void validate() const;
};

/// Bundled operating point matching the demonstration system's measured
/// anchors (see the provenance notes under data/).
BudgetSystem demo_budget_system();

/// eta_int = kappa_fs / kappa.
double internal_efficiency(double kappa_fs_ghz, double kappa_ghz);

enum class LossCategory { excitation, collection, zpl_branching };
enum class LossCause { internal, vibration };

struct LossEntry {
  std::string label;
  LossCategory category;
  LossCause cause;
  double db = 0.0;
  double linear = 1.0;  // transmitted fraction, 10^(-db/10)
};

struct LossLedger {
  std::vector<LossEntry> entries;
  double detected_zpl_per_pulse = 0.0;   // model prediction at the operating sigma
  double detected_zpl_sigma0 = 0.0;

  double total_db() const;
  double category_db(LossCategory category) const;
  double vibration_db() const;
  double end_to_end_probability() const;  // product over entries
};

/// Core model evaluation: vibration-averaged detected-ZPL probability and the
/// pieces the ledger and back-outs reuse.
struct BudgetEvaluation {
  double detected_per_pulse = 0.0;   // at the configured sigma
  double detected_sigma0 = 0.0;
  double vibration_db = 0.0;
  double zpl_fraction = 0.0;         // <branching> at sigma
  double zpl_fraction_sigma0 = 0.0;
  double mean_transmission = 0.0;    // <T> at sigma
  double psb_branching = 0.0;        // <PSB branching> at sigma
};

BudgetEvaluation evaluate_budget(const BudgetSystem& system);

/// Categorized dB ledger.  Vibration losses are attributed by the exponent
/// shares of the T^(5/2) integrand: 1/2 excitation, 1 branching, 1 collection.
LossLedger budget_decompose(const BudgetSystem& system);

struct ZeroVibrationResult {
  double zpl_fraction = 0.0;
  double detected_zpl_per_pulse = 0.0;
  double db_gap = 0.0;  // vs the vibrated case
};

ZeroVibrationResult zero_vibration_counterfactual(const BudgetSystem& system);

enum class BackoutChannel { zpl, psb };

struct BackoutResult {
  double p_ex_low = 0.0;   // equal bounds on the ZPL route
  double p_ex_high = 0.0;
  double expected_per_pulse_low = 0.0;   // perfect-initialization expectation
  double expected_per_pulse_high = 0.0;
};

/// Excitation probability implied by measured counts and the chain's
/// vibration-inclusive effective efficiencies.  The PSB route returns an
/// interval from the eta_psb bounds.
BackoutResult excitation_backout(double measured_per_pulse, BackoutChannel channel,
                                 const BudgetSystem& system);

struct SilComparison {
  double corrected_counts_per_pulse = 0.0;
  double reference_per_pulse = 5e-4;
  double ratio = 0.0;
};

/// Ratio of excitation-corrected ZPL detection to the solid-immersion-lens
/// benchmark of 5e-4 coherent photons per pulse.
SilComparison sil_benchmark(double corrected_counts_per_pulse);

struct ImprovementStep {
  std::string label;
  double factor = 0.0;  // factor mode when > 0; otherwise overrides apply
  std::optional<double> sigma_nm;          // vibration reduction
  std::optional<double> finesse;           // achieved finesse (kappa rescales)
  std::optional<double> coupling_gain;     // multiplicative on y0 (mode character)
  std::optional<double> excitation_gain;   // multiplicative on p_in * phi/2
};

struct ImprovementScenario {
  double baseline_per_pulse = 9.3e-5;
  std::vector<ImprovementStep> steps;
};

struct ProjectionRow {
  std::string label;
  double step_factor = 0.0;        // factor applied in this row
  double cumulative = 0.0;         // baseline x product of factors
  double cumulative_percent = 0.0;
  double display_percent = 0.0;    // rounded to one significant digit
  double model_factor = 0.0;       // model-recomputed ratio (0 when not physical)
  bool capped = false;             // cumulative clipped at probability 1
};

std::vector<ProjectionRow> project_improvements(const BudgetSystem& system,
                                                const ImprovementScenario& scenario);

/// Table-style preset of the suggested upgrades.
ImprovementScenario demo_improvement_scenario();

struct FinesseSweepPoint {
  double finesse = 0.0;
  double zpl_fraction = 0.0;
  double outcoupled_fraction = 0.0;
};

/// ZPL emission and outcoupled fractions vs achieved finesse at fixed mirror
/// design, for a given vibration level.
std::vector<FinesseSweepPoint> finesse_sweep(const BudgetSystem& system, double sigma_nm,
                                             std::span<const double> finesse_grid);

/// Round to one significant digit (the display convention of the projection
/// table).
double round_to_one_significant(double value);

}  // namespace cavsim
