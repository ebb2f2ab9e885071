#include "cavsim/emitter.hpp"

#include <cmath>
#include <sstream>

namespace cavsim {

EmitterParams EmitterParams::from_lifetime(double tau0_ns, double beta0, double dark_ratio) {
  if (!(tau0_ns > 0.0)) throw validation_error("EmitterParams: tau0 must be > 0");
  if (dark_ratio < 0.0) throw validation_error("EmitterParams: dark ratio must be >= 0");
  EmitterParams p;
  p.tau0_ns = tau0_ns;
  p.beta0 = beta0;
  const double gamma0 = mhz_from_lifetime_ns(tau0_ns);
  p.gamma_rad_mhz = gamma0 / (1.0 + dark_ratio);
  p.gamma_dark_mhz = gamma0 - p.gamma_rad_mhz;
  p.validate();
  return p;
}

void EmitterParams::validate() const {
  if (!(gamma_rad_mhz > 0.0)) throw validation_error("EmitterParams: gamma_rad must be > 0");
  if (gamma_dark_mhz < 0.0) throw validation_error("EmitterParams: gamma_dark must be >= 0");
  if (beta0 < 0.0 || beta0 > 1.0) throw validation_error("EmitterParams: beta0 must be in [0,1]");
  if (xi < 0.0 || xi > 1.0) throw validation_error("EmitterParams: xi must be in [0,1]");
  if (p_in < 0.0 || p_in > 1.0) throw validation_error("EmitterParams: p_in must be in [0,1]");
  if (phi_p0 < 0.0) throw validation_error("EmitterParams: phi_p0 must be >= 0");
  if (!(transition_freq_thz > 0.0))
    throw validation_error("EmitterParams: transition frequency must be > 0");
  // gamma0 and tau0 describe the same decay.
  const double gamma0_expected = mhz_from_lifetime_ns(tau0_ns);
  if (std::abs(gamma0_mhz() - gamma0_expected) > 1e-6 * gamma0_expected) {
    std::ostringstream msg;
    msg << "EmitterParams: rates (" << gamma0_mhz() << " MHz) inconsistent with tau0 = "
        << tau0_ns << " ns (expects " << gamma0_expected << " MHz)";
    throw validation_error(msg.str());
  }
}

void CavityCoupling::validate() const {
  if (!(g_mhz >= 0.0)) throw validation_error("CavityCoupling: g must be >= 0");
  if (!(kappa_ghz > 0.0)) throw validation_error("CavityCoupling: kappa must be > 0");
  if (!(gamma_mhz > 0.0)) throw validation_error("CavityCoupling: gamma must be > 0");
  if (eta_zpl0 < 0.0 || eta_zpl0 > 1.0 || eta_psb < 0.0 || eta_psb > 1.0)
    throw validation_error("CavityCoupling: efficiencies must be in [0,1]");
}

double purcell_factor(double g_mhz, double kappa_ghz, double gamma_mhz) {
  if (g_mhz < 0.0 || !(kappa_ghz > 0.0) || !(gamma_mhz > 0.0))
    throw validation_error("purcell_factor: rates must be positive");
  return 4.0 * g_mhz * g_mhz / (mhz_from_ghz(kappa_ghz) * gamma_mhz) + 1.0;
}

PurcellEstimate purcell_from_lifetimes(double tau0_ns, double tau_prime_ns, double beta0,
                                       double dark_ratio) {
  if (!(tau0_ns > 0.0) || !(tau_prime_ns > 0.0))
    throw validation_error("purcell_from_lifetimes: lifetimes must be > 0");
  if (!(beta0 > 0.0)) throw validation_error("purcell_from_lifetimes: beta0 must be > 0");
  PurcellEstimate est;
  est.value = (tau0_ns / tau_prime_ns - 1.0) * (1.0 + dark_ratio) / beta0 + 1.0;
  est.unphysical = tau_prime_ns > tau0_ns;
  return est;
}

double lifetime_ratio(double purcell, double beta0, double dark_ratio) {
  if (purcell < 1.0) throw validation_error("lifetime_ratio: F must be >= 1");
  return 1.0 + (purcell - 1.0) * beta0 / (1.0 + dark_ratio);
}

double lorentzian_transmission(double delta_ghz, double kappa_ghz) {
  if (!(kappa_ghz > 0.0)) throw validation_error("lorentzian_transmission: kappa must be > 0");
  const double half = kappa_ghz / 2.0;
  return half * half / (half * half + delta_ghz * delta_ghz);
}

double detuned_purcell(double purcell0, double delta_ghz, double kappa_ghz) {
  return (purcell0 - 1.0) * lorentzian_transmission(delta_ghz, kappa_ghz) + 1.0;
}

double detuned_eta_zpl(double eta0, double delta_ghz, double kappa_ghz) {
  return eta0 * lorentzian_transmission(delta_ghz, kappa_ghz);
}

double excitation_probability(double phi_p0, double delta_ghz, double kappa_ghz,
                              bool weak_limit, bool squared) {
  if (phi_p0 < 0.0) throw validation_error("excitation_probability: phi_p0 must be >= 0");
  const double arg = phi_p0 * std::sqrt(lorentzian_transmission(delta_ghz, kappa_ghz)) / 2.0;
  if (weak_limit) return arg;
  const double s = std::sin(arg);
  return squared ? s * s : s;
}

double gamma_prime_mhz(double purcell, const EmitterParams& emitter) {
  return purcell * emitter.beta0 * emitter.gamma_rad_mhz +
         (1.0 - emitter.beta0) * emitter.gamma_rad_mhz + emitter.gamma_dark_mhz;
}

double gamma_prime_per_ns(double purcell, const EmitterParams& emitter) {
  return angular_rate_per_ns_from_mhz(gamma_prime_mhz(purcell, emitter));
}

double zpl_cavity_branching(double purcell, const EmitterParams& emitter) {
  return (purcell - 1.0) * emitter.beta0 * emitter.gamma_rad_mhz /
         gamma_prime_mhz(purcell, emitter);
}

double zpl_freespace_branching(double purcell, const EmitterParams& emitter) {
  return emitter.beta0 * emitter.gamma_rad_mhz / gamma_prime_mhz(purcell, emitter);
}

double psb_branching(double purcell, const EmitterParams& emitter) {
  return (1.0 - emitter.beta0) * emitter.gamma_rad_mhz / gamma_prime_mhz(purcell, emitter);
}

double count_rate_zpl(double t_ns, double p_ex, double purcell, const EmitterParams& emitter,
                      double eta_zpl) {
  if (t_ns < 0.0) throw validation_error("count_rate_zpl: t must be >= 0");
  const double gp = gamma_prime_per_ns(purcell, emitter);
  return p_ex * zpl_cavity_branching(purcell, emitter) * eta_zpl * gp * std::exp(-gp * t_ns);
}

double count_rate_psb(double t_ns, double p_ex, double purcell, const EmitterParams& emitter,
                      double eta_psb) {
  if (t_ns < 0.0) throw validation_error("count_rate_psb: t must be >= 0");
  const double gp = gamma_prime_per_ns(purcell, emitter);
  return p_ex * psb_branching(purcell, emitter) * eta_psb * gp * std::exp(-gp * t_ns);
}

CouplingRegime classify_coupling(double gamma_mhz, double g_mhz, double kappa_ghz) {
  constexpr double separation = 5.0;
  CouplingRegime regime;
  const double kappa_mhz = mhz_from_ghz(kappa_ghz);
  regime.weak = gamma_mhz * separation <= g_mhz && g_mhz * separation <= kappa_mhz;
  std::ostringstream desc;
  if (regime.weak) {
    desc << "weak coupling (gamma << g << kappa): 2pi x {" << gamma_mhz << " MHz, " << g_mhz
         << " MHz, " << kappa_ghz << " GHz}";
  } else if (g_mhz > kappa_mhz && g_mhz > gamma_mhz) {
    desc << "strong coupling (g exceeds kappa and gamma)";
  } else {
    desc << "intermediate coupling regime";
  }
  regime.description = desc.str();
  return regime;
}

}  // namespace cavsim
