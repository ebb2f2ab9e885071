#pragma once

#include <cmath>

namespace cavsim {

// Unit conventions used throughout:
//   lengths        nm (layers, detuning lengths), um (gaps, waists)
//   frequencies    THz (optical), GHz (cavity linewidths), MHz (emitter rates)
//   times          ns
// All rates are stored as nu = omega / 2pi values, matching how they are
// reported (kappa/2pi, g/2pi, gamma/2pi).  Conversion to angular decay rates
// lives here and nowhere else.

inline constexpr double kSpeedOfLight_nm_THz = 299792.458;  // c in nm*THz
inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Angular decay rate (1/ns) of a transition whose /2pi linewidth is given in MHz.
inline double angular_rate_per_ns_from_mhz(double rate_mhz) {
  return kTwoPi * rate_mhz * 1e-3;  // MHz -> 1/ns after the 2pi
}

/// /2pi linewidth in MHz of an exponential decay with 1/e lifetime tau (ns).
inline double mhz_from_lifetime_ns(double tau_ns) {
  return 1e3 / (kTwoPi * tau_ns);
}

inline double ghz_from_mhz(double mhz) { return mhz * 1e-3; }
inline double mhz_from_ghz(double ghz) { return ghz * 1e3; }
inline double ghz_from_thz(double thz) { return thz * 1e3; }

/// 10 log10 of a probability ratio; loss ledgers store positive dB for p < 1.
inline double db_from_probability(double p) { return -10.0 * std::log10(p); }
inline double probability_from_db(double db) { return std::pow(10.0, -db / 10.0); }

}  // namespace cavsim
