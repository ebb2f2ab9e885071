#pragma once

#include <span>
#include <string>
#include <vector>

#include "cavsim/emitter.hpp"
#include "cavsim/layered_cavity.hpp"
#include "cavsim/quadrature.hpp"

namespace cavsim {

/// Gaussian rms jitter of the cavity length.
struct VibrationSpec {
  double sigma_nm = 0.18;
  double truncation = 5.0;   // window in units of sigma (sampling/fallback paths)
  int quadrature_order = 64;

  void validate() const;
};

/// Inhomogeneous broadening from several emitters inside the mode volume.
struct EnsembleSpec {
  enum class Shape { gaussian, lorentzian, tophat };
  bool enabled = false;
  double width_ghz = 0.0;  // gaussian sigma / lorentzian HWHM / tophat half width
  Shape shape = Shape::gaussian;

  void validate() const;
  double weight(double delta_ghz) const;  // unnormalized line weight
};

/// Gaussian probability density of length fluctuations (nm^-1).
double f_vib(double dl_nm, double sigma_nm);

/// Quadrature nodes/weights for expectations over the length distribution.
/// Uses Gauss-Hermite when its nodes resolve the narrowest feature of the
/// integrand (width hint in nm); otherwise a Gaussian-weighted trapezoid over
/// the truncation window, which handles the near-pole Lorentzian factors that
/// defeat plain Gauss-Hermite at these kappa/slope/sigma ratios.  The order
/// parameter remains the resolution knob on both paths.
struct LengthRule {
  std::vector<double> offsets_nm;
  std::vector<double> weights;  // normalized to sum to 1

  static LengthRule build(double sigma_nm, int order, double truncation,
                          double feature_width_nm);

  template <typename F>
  double expect(F&& h) const {
    double sum = 0.0;
    for (size_t i = 0; i < offsets_nm.size(); ++i) sum += weights[i] * h(offsets_nm[i]);
    return sum;
  }
};

/// Detuning-length mapping used by the sweeps: linear in the local dispersion
/// slope by default, or tabulated from the full transfer-matrix branch.
class DispersionMap {
 public:
  static DispersionMap linear(double slope_ghz_per_nm);
  static DispersionMap tabulated(const CavityGeometry& geometry, const Resonance& resonance,
                                 double l_min_nm, double l_max_nm, int n_points = 161);

  double delta_ghz(double length_nm) const;
  double slope_ghz_per_nm() const { return slope_; }
  bool is_linear() const { return lengths_.empty(); }

 private:
  double slope_ = 0.0;
  std::vector<double> lengths_, deltas_;  // empty = linear
};

/// Vibration-broadened cavity transmission at a given detuning from line
/// center: the Lorentzian response averaged over the length distribution.
double broadened_transmission(double delta_ghz, double kappa_ghz, double sigma_nm,
                              double slope_ghz_per_nm, int quadrature_order = 64);

struct BroadenedLine {
  std::vector<double> delta_ghz;
  std::vector<double> transmission;
  double fwhm_ghz = 0.0;
};

/// Sampled broadened lineshape with its FWHM (bisection on the profile).
BroadenedLine broadened_lineshape(double kappa_ghz, double sigma_nm, double slope_ghz_per_nm,
                                  int quadrature_order = 64, int n_points = 201);

struct SweepConfig {
  EmitterParams emitter;
  CavityCoupling coupling;   // g, kappa, eta's; .detuning_ghz is ignored here
  VibrationSpec vibration;
  EnsembleSpec ensemble;     // off-resonant sweeps only
  DispersionMap dispersion = DispersionMap::linear(-25.0);

  double p_ex_offresonant = 1.0;  // constant excitation per pulse (off-resonant)
  bool weak_excitation = true;    // resonant p_ex: phi sqrt(T)/2
  bool squared_excitation = false;

  double fit_window_lo_ns = 1.0;  // apparent-lifetime extraction window
  double fit_window_hi_ns = 40.0;
  int decay_samples = 96;

  bool keep_decay_histograms = false;
  bool check_convergence = true;  // order-doubling diagnostic (0.1%)

  void validate() const;
};

struct SweepPoint {
  double length_nm = 0.0;        // L_det
  double detuning_ghz = 0.0;     // nominal detuning of the grid point
  double counts_zpl = 0.0;       // time-integrated, per pulse
  double counts_psb = 0.0;
  double lifetime_ns = 0.0;      // apparent lifetime from the exponential fit
  double lifetime_err_ns = 0.0;  // zero for noise-free model curves
};

struct SweepCurves {
  std::vector<SweepPoint> points;
  std::vector<double> decay_time_ns;             // filled when histograms kept
  std::vector<std::vector<double>> decay_zpl;    // per grid point
};

/// Off-resonant excitation sweep: counts and apparent lifetime vs detuning
/// length, averaged over vibrations (and the emitter ensemble if enabled).
SweepCurves offresonant_sweep(const SweepConfig& config, std::span<const double> lengths_nm);

/// Resonant excitation sweep (ZPL and PSB channels); the ensemble must be
/// disabled since single emitters are addressed resonantly.
SweepCurves resonant_sweep(const SweepConfig& config, std::span<const double> lengths_nm);

/// The per-pulse decay at one grid point as a finite mixture of exponentials:
/// component i contributes yield_*(i) photons decaying at gamma_per_ns(i).
/// This is the sampling form of the model used by synthetic-data generators.
struct DecayMixture {
  std::vector<double> yield_zpl;   // photons per pulse per component
  std::vector<double> yield_psb;
  std::vector<double> gamma_per_ns;

  double total_zpl() const;
  double total_psb() const;
};

DecayMixture decay_mixture_offresonant(const SweepConfig& config, double length_nm);
DecayMixture decay_mixture_resonant(const SweepConfig& config, double length_nm);

// --- cryostat-phase-resolved statistics -----------------------------------

struct PhotonRecord {
  int channel = 0;
  long long time_ps = 0;
};

struct CryostatPhaseProfile {
  double period_s = 1.0;
  std::vector<double> phase_s;   // tabulated sigma(t) over one coldhead period
  std::vector<double> sigma_nm;
  struct Window {
    std::string label;
    double start_s = 0.0;
    double end_s = 0.0;
  };
  std::vector<Window> windows;   // disjoint, inside one period

  void validate() const;
  double sigma_at(double phase_s) const;  // linear interpolation, periodic
};

struct PhaseWindowStats {
  std::string label;
  long long n_photons = 0;
  long long n_pulses = 0;
  double counts_per_pulse = 0.0;
  double lifetime_ns = 0.0;
  double lifetime_err_ns = 0.0;
  bool flagged = false;  // fewer photons than the configured minimum
};

/// Assign photon timestamps to cryostat-phase windows using sync events on
/// sync_channel, then report per-window counts/pulse and lifetime.  Only
/// complete sync-to-sync periods are analyzed.
std::vector<PhaseWindowStats> phase_resolved_stats(std::span<const PhotonRecord> records,
                                                   int sync_channel, double pulse_period_ns,
                                                   const CryostatPhaseProfile& profile,
                                                   double fit_lo_ns, double fit_hi_ns,
                                                   long long min_photons = 200);

}  // namespace cavsim
