#pragma once

#include "cavsim/emitter.hpp"
#include "cavsim/layered_cavity.hpp"

namespace cavsim {

// Representative parameters of the demonstration system: a 5.8 um diamond
// membrane bonded to a flat mirror, a laser-ablated fiber mirror across a
// ~7.3 um air gap, and a single NV-like emitter.  Mirror splits, fiber ROC
// and dimple diameter are assumptions (only the design finesse and the
// operating linewidth are constrained); they are chosen so the assembled
// model lands on the measured operating point.

inline CavityGeometry demo_geometry() {
  CavityGeometry g;
  g.flat_mirror = {MirrorSpec::Kind::lumped, 850.0, 30.0, {}, 0.0};
  g.fiber_mirror = {MirrorSpec::Kind::lumped, 60.0, 73.0, {}, 0.0};
  g.diamond = {5800.0, 2.41, "diamond"};
  g.air_gap_um = 7.3;
  g.fiber_roc_um = 28.0;
  g.fiber_mirror_diameter_um = 7.52;
  return g;
}

inline EmitterParams demo_emitter() {
  EmitterParams e = EmitterParams::from_lifetime(11.8, 0.0255);
  e.transition_freq_thz = 470.4;
  e.xi = 0.6;
  e.p_in = 1.0;
  e.phi_p0 = 0.2;
  return e;
}

inline CavityCoupling demo_coupling() {
  CavityCoupling c;
  c.g_mhz = 180.0;
  c.kappa_ghz = 3.5;
  c.gamma_mhz = 13.0;
  c.detuning_ghz = 0.0;
  c.eta_zpl0 = 0.12;
  c.eta_psb = 0.008;
  return c;
}

// Fitted line parameters at the position of the resonantly addressed emitter
// (air gap 7.45 um): the model context of the bundled detuning-sweep
// datasets.
inline constexpr double kDemoKappaGhz = 2.228;
inline constexpr double kDemoSlopeGhzPerNm = -17.15;

}  // namespace cavsim
