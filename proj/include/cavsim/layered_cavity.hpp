#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cavsim/transfer_matrix.hpp"

namespace cavsim {

struct MirrorSpec {
  enum class Kind { lumped, dbr_stack };
  Kind kind = Kind::lumped;

  // lumped: per-bounce power transmission / loss in ppm
  double transmission_ppm = 0.0;
  double loss_ppm = 0.0;

  // dbr_stack: explicit coating, listed cavity-side first
  std::vector<Layer> layers;
  double stopband_center_thz = 0.0;

  void validate() const;
  /// Power transmission fraction at a given frequency (lumped: constant).
  double power_transmission(double freq_thz) const;
};

struct CavityGeometry {
  MirrorSpec flat_mirror;   // detection side, diamond bonded to it
  MirrorSpec fiber_mirror;  // excitation side, concave
  Layer diamond{5800.0, 2.41, "diamond"};
  double air_gap_um = 7.3;
  double fiber_roc_um = 72.0;
  double fiber_mirror_diameter_um = 6.8;

  void validate() const;
};

struct Resonance {
  double frequency_thz = 0.0;
  double kappa_ghz = 0.0;      // full width at half maximum, as kappa/2pi
  double finesse = 0.0;        // local FSR / kappa
  double mode_character = 0.0; // fraction of intracavity field energy in the air gap
  double field_at_emitter = 0.0;  // diamond antinode amplitude relative to global max
};

/// Power transmission through the full mirror/air/diamond/mirror structure.
double cavity_transmission(const CavityGeometry& geometry, double freq_thz);

/// Resonances inside [freq_lo, freq_hi], sorted by frequency.  Each peak is
/// located by a coarse transmission scan, refined parabolically and then fit
/// with a Lorentzian over a +-3 kappa window.
std::vector<Resonance> find_resonances(const CavityGeometry& geometry, double freq_lo_thz,
                                       double freq_hi_thz);

struct DispersionPoint {
  double air_gap_um;
  Resonance resonance;
};

/// Resonance branches over a grid of air gaps (the avoided-crossing diagram).
std::vector<DispersionPoint> dispersion_diagram(const CavityGeometry& geometry,
                                                std::span<const double> air_gaps_um,
                                                double freq_lo_thz, double freq_hi_thz);

/// Round-trip diffraction loss of a Gaussian mode of waist w on the finite
/// fiber mirror: L = exp(-d^2 / (2 w^2)).
double clipping_loss(const CavityGeometry& geometry, double waist_um);

/// Gaussian mode radius on the fiber mirror (plano-concave optics with the
/// diamond folded in as a reduced length).
double fiber_mode_waist_um(const CavityGeometry& geometry, double freq_thz);
/// Gaussian mode waist at the flat mirror (emitter side).
double mode_waist_um(const CavityGeometry& geometry, double freq_thz);

struct EmitterParams;  // defined in emitter.hpp

/// Emitter-cavity coupling g/2pi in MHz for an emitter at depth_nm inside the
/// diamond, measured from the flat mirror.  Uses the 1-D mode profile of the
/// structure and the transverse Gaussian area; position/overlap mismatch is
/// carried by the emitter's xi.
double coupling_rate_g(const CavityGeometry& geometry, const Resonance& resonance,
                       const EmitterParams& emitter, double depth_nm);

/// Same, with the emitter at the best antinode in the diamond.
double coupling_rate_g_optimal(const CavityGeometry& geometry, const Resonance& resonance,
                               const EmitterParams& emitter);

/// Local slope of the resonance branch, d(nu)/d(air gap), in GHz per nm.
double dispersion_slope_ghz_per_nm(const CavityGeometry& geometry, const Resonance& resonance);

/// Air-gap change that detunes the branch by delta (GHz); positive lengths
/// shift the resonance down in frequency.
double detuning_to_length_nm(const CavityGeometry& geometry, const Resonance& resonance,
                             double delta_ghz);
double length_to_detuning_ghz(const CavityGeometry& geometry, const Resonance& resonance,
                              double length_nm);

/// kappa/2pi estimate (GHz) from the round-trip loss budget, used to size
/// scan steps before any peak has been fit.
double kappa_estimate_ghz(const CavityGeometry& geometry, double freq_thz,
                          double extra_roundtrip_loss = 0.0);

/// Free spectral range estimate c / (2 L_optical) in THz.
double fsr_estimate_thz(const CavityGeometry& geometry);

}  // namespace cavsim
