#pragma once

#include <string>

#include "cavsim/errors.hpp"
#include "cavsim/units.hpp"

namespace cavsim {

/// Solid-state emitter description.  All rates are /2pi values in MHz; the
/// total decay rate must match the uncavitied lifetime at construction.
struct EmitterParams {
  double gamma_rad_mhz = 0.0;   // radiative decay rate /2pi
  double gamma_dark_mhz = 0.0;  // non-radiative decay rate /2pi
  double beta0 = 0.0255;        // Debye-Waller factor
  double tau0_ns = 12.0;        // uncavitied 1/e lifetime
  double transition_freq_thz = 470.4;
  double xi = 1.0;              // position/overlap mismatch in [0, 1]
  double p_in = 1.0;            // initialization probability
  double phi_p0 = 0.1;          // on-resonance Rabi angle per pulse (rad)

  /// Rates derived from a lifetime and a dark/radiative ratio.
  static EmitterParams from_lifetime(double tau0_ns, double beta0, double dark_ratio = 0.0);

  void validate() const;

  /// Total decay rate gamma0/2pi in MHz.
  double gamma0_mhz() const { return gamma_rad_mhz + gamma_dark_mhz; }
  /// Total angular decay rate 1/tau0 in 1/ns.
  double gamma0_per_ns() const { return angular_rate_per_ns_from_mhz(gamma0_mhz()); }
  /// gamma_rad / (gamma_rad + gamma_dark); 1 when the dark channel is off.
  double radiative_fraction() const { return gamma_rad_mhz / gamma0_mhz(); }
};

/// Emitter-cavity working point (rates as /2pi values).
struct CavityCoupling {
  double g_mhz = 180.0;
  double kappa_ghz = 3.5;
  double gamma_mhz = 13.0;   // lifetime-limited transition linewidth
  double detuning_ghz = 0.0; // cavity-emitter detuning Delta/2pi
  double eta_zpl0 = 1.0;     // on-resonance ZPL detection efficiency
  double eta_psb = 1.0;      // PSB detection efficiency

  void validate() const;
};

/// F_P^ZPL = 4 g^2 / (kappa gamma) + 1.
double purcell_factor(double g_mhz, double kappa_ghz, double gamma_mhz);

struct PurcellEstimate {
  double value = 1.0;
  bool unphysical = false;  // tau' > tau0 for this model
};

/// Purcell factor back-computed from a lifetime reduction.
PurcellEstimate purcell_from_lifetimes(double tau0_ns, double tau_prime_ns, double beta0,
                                       double dark_ratio = 0.0);

/// tau0 / tau' = 1 + (F - 1) beta0 * gamma_rad / (gamma_rad + gamma_dark).
double lifetime_ratio(double purcell, double beta0, double dark_ratio = 0.0);

/// Cavity transmission Lorentzian T = (k^2/4) / (k^2/4 + Delta^2).
double lorentzian_transmission(double delta_ghz, double kappa_ghz);

/// Detuning-degraded Purcell factor and ZPL collection efficiency.
double detuned_purcell(double purcell0, double delta_ghz, double kappa_ghz);
double detuned_eta_zpl(double eta0, double delta_ghz, double kappa_ghz);

/// Excitation probability per resonant pulse.  The exact form is
/// sin(phi sqrt(T)/2); the weak limit (default) is phi sqrt(T)/2.  The
/// squared variant sin^2 is available behind a flag and is never the default.
double excitation_probability(double phi_p0, double delta_ghz, double kappa_ghz,
                              bool weak_limit = true, bool squared = false);

/// Modified total decay rate gamma'/2pi (MHz) and its 1/ns angular value.
double gamma_prime_mhz(double purcell, const EmitterParams& emitter);
double gamma_prime_per_ns(double purcell, const EmitterParams& emitter);

/// Photon branching per excitation: cavity-coupled ZPL, free-space ZPL, PSB.
/// The three sum to the radiative fraction of all decays.
double zpl_cavity_branching(double purcell, const EmitterParams& emitter);
double zpl_freespace_branching(double purcell, const EmitterParams& emitter);
double psb_branching(double purcell, const EmitterParams& emitter);

/// Instantaneous detected count rates (1/ns) at time t after excitation.
double count_rate_zpl(double t_ns, double p_ex, double purcell, const EmitterParams& emitter,
                      double eta_zpl);
double count_rate_psb(double t_ns, double p_ex, double purcell, const EmitterParams& emitter,
                      double eta_psb);

struct CouplingRegime {
  bool weak = false;  // gamma << g << kappa
  std::string description;
};

/// Classify the coupling hierarchy; "weak" requires an order of magnitude
/// style separation (factor >= 5) on both sides.
CouplingRegime classify_coupling(double gamma_mhz, double g_mhz, double kappa_ghz);

}  // namespace cavsim
