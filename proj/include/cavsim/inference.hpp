#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cavsim/fit.hpp"
#include "cavsim/vibration.hpp"

namespace cavsim {

// --- datasets ---------------------------------------------------------------

struct SweepObservation {
  double detuning_ghz = 0.0;
  double counts = 0.0;          // per pulse
  double counts_err = 0.0;
  double lifetime_ns = 0.0;
  double lifetime_err_ns = 0.0;
  int session = 0;              // day/session tag
};

struct SweepDataset {
  enum class Excitation { offresonant, resonant };
  Excitation excitation = Excitation::offresonant;
  std::vector<SweepObservation> points;

  int n_sessions() const;
  void validate() const;  // positive errors; detunings strictly monotone per session
};

struct PLETrace {
  int scan_index = 0;
  double bin_width_mhz = 50.0;
  std::vector<double> freq_ghz;  // offsets from the reference transition frequency
  std::vector<double> counts;

  void validate() const;
};

/// Folded pulsed coincidence histogram: bins are |pulse separation|; k > 0
/// bins contain both time orders, the k = 0 bin the single same-pulse
/// combination.
struct G2Histogram {
  std::vector<int> pulse_index;      // pulse separation k, including 0
  std::vector<double> coincidences;
  std::vector<double> background;    // measured background level per bin
  int train_length = 0;              // pulses per applied train (0 = infinite)

  void validate() const;
};

struct DecayHistogram {
  std::vector<double> t_ns;      // bin centers
  std::vector<double> counts;
  double bin_width_ns = 0.128;
  long long n_pulses = 1;

  void validate() const;
};

// --- model description shared by synth and fits ------------------------------

/// Physics context for a detuning sweep: everything except the parameters
/// that the joint fit floats.
struct SweepModelContext {
  double kappa_ghz = 2.228;
  double slope_ghz_per_nm = -17.15;
  double beta0 = 0.0255;
  double gamma_mhz = 13.0;       // lifetime-limited linewidth for g back-out
  double eta_zpl0 = 0.12;
  double eta_psb = 0.008;
  double p_in = 1.0;
  double phi_p0 = 0.15;          // resonant pulse area
  double p_ex_offresonant = 0.02;
  int quadrature_order = 64;
  double fit_window_lo_ns = 1.0;
  double fit_window_hi_ns = 40.0;

  /// Effective (F-1)beta0 reported by fits: y_eff = y0 <T>_sigma.  The
  /// conversion and its inverse live here so every consumer agrees.
  double mean_transmission(double sigma_nm) const;
  double y0_from_effective(double y_eff, double sigma_nm) const;
  double effective_from_y0(double y0, double sigma_nm) const;

  /// Assemble the forward sweep configuration for given floated parameters.
  SweepConfig sweep_config(double y_eff, double tau0_ns, double sigma_nm) const;
};

struct SweepTruth {
  double y_eff = 0.07;           // effective (F-1)beta0
  double tau0_ns = 10.9;
  double sigma_nm = 0.18;
  double amplitude = 1.0;        // peak counts per pulse of the detected channel
  double center_offset_ghz = 0.0;
  std::vector<double> session_offsets_ghz;  // offsets of sessions 1..S-1
};

// --- synthetic experiment generators -----------------------------------------

/// Poisson-sampled detuning sweep from the forward model.  Lifetimes are
/// extracted per point from a sampled decay histogram, exactly as the
/// analysis pipeline would.
SweepDataset synth_sweep(const SweepModelContext& context, SweepDataset::Excitation excitation,
                         const SweepTruth& truth, std::span<const double> detunings_ghz,
                         long long pulses_per_point, uint64_t seed);

struct PLEDriftSpec {
  enum class Kind { none, linear, random_walk };
  Kind kind = Kind::none;
  double scale_mhz = 0.0;  // total linear drift, or per-step walk sigma
};

/// Consecutive PLE traces of a Gaussian line with center drift and Poisson
/// counting noise.
std::vector<PLETrace> synth_ple_traces(int n_traces, double intrinsic_fwhm_mhz,
                                       double amplitude_counts, double background_counts,
                                       double bin_width_mhz, double span_ghz,
                                       const PLEDriftSpec& drift, uint64_t seed);

struct G2SynthSpec {
  int n_emitters = 1;
  double detection_prob = 0.05;    // per emitter per pulse, summed over both detectors
  double background_prob = 0.0;    // uncorrelated background per detector per pulse
  int train_length = 200;
  long long n_trains = 2000;
  double bright_to_dark = 0.0;     // per-pulse switching probabilities of the
  double dark_to_bright = 0.0;     // blinking (bunching) two-state chain
  int max_separation = 30;
};

/// Pulsed two-detector coincidence histogram from a blinking-emitter model.
G2Histogram synth_g2(const G2SynthSpec& spec, uint64_t seed);

/// Exponential decay histogram with Poisson noise; early bins below mask_ns
/// are zeroed (excitation-pulse region).
DecayHistogram synth_decay(double counts_per_pulse, double tau_ns, long long n_pulses,
                           double bin_width_ns, double t_max_ns, double mask_ns,
                           double background_per_bin, uint64_t seed);

// --- analyses -----------------------------------------------------------------

/// Joint weighted fit of counts and lifetime curves with parameters
/// {(F-1)beta0_eff, tau0, sigma_vib, amplitude, center, session offsets}.
FitResult fit_sweep_joint(const SweepDataset& dataset, const SweepModelContext& context,
                          const SweepTruth& initial_guess = {});

struct LifetimeFitResult {
  double tau_ns = 0.0;
  double tau_err_ns = 0.0;
  double amplitude = 0.0;        // background-subtracted counts per bin at t = 0
  double background_per_bin = 0.0;
  double total_counts = 0.0;     // analytic integral from t = 0
  double total_per_pulse = 0.0;
  double total_per_pulse_err = 0.0;
};

/// Background-subtracted exponential fit with extrapolation through the
/// obscured early-time region.  Background comes from the given level or
/// from the bins beyond the fit window.
LifetimeFitResult fit_exponential_lifetime(const DecayHistogram& histogram, double fit_lo_ns,
                                           double fit_hi_ns,
                                           std::optional<double> background_per_bin = {});

struct PLETraceFit {
  double center_ghz = 0.0;
  double center_err_ghz = 0.0;
  double fwhm_mhz = 0.0;
  double fwhm_err_mhz = 0.0;
  double amplitude = 0.0;
  double offset = 0.0;
  bool ok = false;
};

struct PLEAnalysis {
  std::vector<PLETraceFit> traces;
  std::vector<int> excluded;     // indices of peakless traces
  std::vector<double> grid_ghz;
  std::vector<double> raw_average;
  std::vector<double> centered_average;
  double raw_fwhm_mhz = 0.0;
  double raw_fwhm_err_mhz = 0.0;
  double centered_fwhm_mhz = 0.0;
  double centered_fwhm_err_mhz = 0.0;
};

/// Per-trace Gaussian fits, drift-corrected and raw averages, and their
/// fitted linewidths.
PLEAnalysis ple_analyze(const std::vector<PLETrace>& traces);

struct G2Result {
  double g2_zero = 0.0;
  double g2_zero_err = 0.0;
  double g2_zero_corrected = 0.0;
  double g2_zero_corrected_err = 0.0;
  double plateau = 0.0;              // fitted uncorrelated coincidence level
  double bunching_amplitude = 0.0;
  double bunching_amplitude_err = 0.0;
  double bunching_decay_pulses = 0.0;
  double reduced_chi2 = 0.0;
};

enum class G2Model { flat, bunching };

/// Normalized zero-separation autocorrelation with optional bunching model
/// (plateau * (1 + A exp(-|k|/k_b)), triangular finite-train correction).
G2Result g2_analyze(const G2Histogram& histogram, G2Model model);

struct HWPFitResult {
  double amplitude = 0.0;
  double amplitude_err = 0.0;
  double phase_deg = 0.0;
  double phase_err_deg = 0.0;
  double offset = 0.0;
  double offset_err = 0.0;
  double extinction_ratio = 0.0;
};

/// Background-corrected sinusoidal fit counts = offset + A sin^2(2(theta -
/// phase)); the intensity period is 90 degrees of half-wave-plate angle.
HWPFitResult hwp_polarization_fit(std::span<const double> angles_deg,
                                  std::span<const double> counts, double background = 0.0);

}  // namespace cavsim
