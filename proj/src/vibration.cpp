#include "cavsim/vibration.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cavsim/fit.hpp"

namespace cavsim {

void VibrationSpec::validate() const {
  if (sigma_nm < 0.0) throw validation_error("VibrationSpec: sigma must be >= 0");
  if (truncation < 3.0) throw validation_error("VibrationSpec: truncation must be >= 3");
  if (quadrature_order < 16) throw validation_error("VibrationSpec: quadrature order >= 16");
}

void EnsembleSpec::validate() const {
  if (enabled && !(width_ghz > 0.0))
    throw validation_error("EnsembleSpec: width must be > 0 when enabled");
}

double EnsembleSpec::weight(double delta_ghz) const {
  if (!enabled) return 1.0;
  switch (shape) {
    case Shape::gaussian:
      return std::exp(-delta_ghz * delta_ghz / (2.0 * width_ghz * width_ghz));
    case Shape::lorentzian:
      return 1.0 / (1.0 + delta_ghz * delta_ghz / (width_ghz * width_ghz));
    case Shape::tophat:
      return std::abs(delta_ghz) <= width_ghz ? 1.0 : 0.0;
  }
  return 1.0;
}

double f_vib(double dl_nm, double sigma_nm) {
  if (!(sigma_nm > 0.0)) throw validation_error("f_vib: sigma must be > 0 (0 is a delta)");
  const double z = dl_nm / sigma_nm;
  return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * M_PI) * sigma_nm);
}

LengthRule LengthRule::build(double sigma_nm, int order, double truncation,
                             double feature_width_nm) {
  LengthRule rule;
  if (sigma_nm <= 0.0) {
    rule.offsets_nm = {0.0};
    rule.weights = {1.0};
    return rule;
  }
  if (order < 4) throw validation_error("LengthRule: order must be >= 4");

  // Central node spacing of the Hermite rule in length units.
  const double gh_spacing = std::sqrt(2.0) * sigma_nm * M_PI / std::sqrt(2.0 * order + 1.0);
  if (feature_width_nm >= 3.0 * gh_spacing) {
    const GaussHermiteRule& gh = gauss_hermite(order);
    const double s = std::sqrt(2.0) * sigma_nm;
    double norm = 0.0;
    for (Eigen::Index i = 0; i < gh.nodes.size(); ++i) {
      rule.offsets_nm.push_back(s * gh.nodes(i));
      rule.weights.push_back(gh.weights(i));
      norm += gh.weights(i);
    }
    for (double& w : rule.weights) w /= norm;
    return rule;
  }

  // Trapezoid with the Gaussian weight; step resolves both sigma and the
  // feature.  Exponentially accurate for the pole-limited integrands here.
  const double dx = std::min(sigma_nm, feature_width_nm) / std::max(6.0, order / 8.0);
  const double span = truncation * sigma_nm;
  size_t n = static_cast<size_t>(std::ceil(2.0 * span / dx)) + 1;
  if (n % 2 == 0) ++n;
  if (n > 200001) n = 200001;
  double norm = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double x = -span + 2.0 * span * i / (n - 1);
    const double w = ((i == 0 || i == n - 1) ? 0.5 : 1.0) * f_vib(x, sigma_nm);
    rule.offsets_nm.push_back(x);
    rule.weights.push_back(w);
    norm += w;
  }
  for (double& w : rule.weights) w /= norm;
  return rule;
}

DispersionMap DispersionMap::linear(double slope_ghz_per_nm) {
  if (slope_ghz_per_nm == 0.0)
    throw validation_error("DispersionMap: slope must be nonzero");
  DispersionMap map;
  map.slope_ = slope_ghz_per_nm;
  return map;
}

DispersionMap DispersionMap::tabulated(const CavityGeometry& geometry, const Resonance& resonance,
                                       double l_min_nm, double l_max_nm, int n_points) {
  if (!(l_max_nm > l_min_nm) || n_points < 5)
    throw validation_error("DispersionMap: bad tabulation range");
  DispersionMap map;
  map.slope_ = dispersion_slope_ghz_per_nm(geometry, resonance);
  map.lengths_.resize(n_points);
  map.deltas_.resize(n_points);
  for (int i = 0; i < n_points; ++i) {
    const double l = l_min_nm + (l_max_nm - l_min_nm) * i / (n_points - 1);
    map.lengths_[i] = l;
    map.deltas_[i] = length_to_detuning_ghz(geometry, resonance, l);
  }
  return map;
}

double DispersionMap::delta_ghz(double length_nm) const {
  if (lengths_.empty()) return slope_ * length_nm;
  if (length_nm <= lengths_.front())
    return deltas_.front() + (length_nm - lengths_.front()) * slope_;
  if (length_nm >= lengths_.back())
    return deltas_.back() + (length_nm - lengths_.back()) * slope_;
  const auto it = std::upper_bound(lengths_.begin(), lengths_.end(), length_nm);
  const size_t hi = it - lengths_.begin();
  const size_t lo = hi - 1;
  const double f = (length_nm - lengths_[lo]) / (lengths_[hi] - lengths_[lo]);
  return deltas_[lo] + f * (deltas_[hi] - deltas_[lo]);
}

double broadened_transmission(double delta_ghz, double kappa_ghz, double sigma_nm,
                              double slope_ghz_per_nm, int quadrature_order) {
  if (sigma_nm == 0.0) return lorentzian_transmission(delta_ghz, kappa_ghz);
  if (slope_ghz_per_nm == 0.0)
    throw validation_error("broadened_transmission: slope must be nonzero");
  const double core_nm = kappa_ghz / std::abs(slope_ghz_per_nm);
  const LengthRule rule = LengthRule::build(sigma_nm, quadrature_order, 6.0, core_nm);
  return rule.expect([&](double dl) {
    return lorentzian_transmission(delta_ghz + dl * slope_ghz_per_nm, kappa_ghz);
  });
}

BroadenedLine broadened_lineshape(double kappa_ghz, double sigma_nm, double slope_ghz_per_nm,
                                  int quadrature_order, int n_points) {
  if (!(kappa_ghz > 0.0)) throw validation_error("broadened_lineshape: kappa must be > 0");
  const double gaussian_fwhm =
      2.0 * std::sqrt(2.0 * std::log(2.0)) * sigma_nm * std::abs(slope_ghz_per_nm);
  const double span = 3.0 * (kappa_ghz + gaussian_fwhm);

  BroadenedLine line;
  line.delta_ghz.resize(n_points);
  line.transmission.resize(n_points);
  for (int i = 0; i < n_points; ++i) {
    const double d = -span + 2.0 * span * i / (n_points - 1);
    line.delta_ghz[i] = d;
    line.transmission[i] =
        broadened_transmission(d, kappa_ghz, sigma_nm, slope_ghz_per_nm, quadrature_order);
  }

  // FWHM by bisection against the peak value (profile is even and unimodal).
  const double peak =
      broadened_transmission(0.0, kappa_ghz, sigma_nm, slope_ghz_per_nm, quadrature_order);
  const double half = peak / 2.0;
  double lo = 0.0, hi = span;
  while (broadened_transmission(hi, kappa_ghz, sigma_nm, slope_ghz_per_nm, quadrature_order) >
         half)
    hi *= 2.0;
  for (int iter = 0; iter < 80; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double v =
        broadened_transmission(mid, kappa_ghz, sigma_nm, slope_ghz_per_nm, quadrature_order);
    (v > half ? lo : hi) = mid;
  }
  line.fwhm_ghz = lo + hi;  // twice the half-width at half maximum
  return line;
}

void SweepConfig::validate() const {
  emitter.validate();
  coupling.validate();
  vibration.validate();
  ensemble.validate();
  if (!(fit_window_hi_ns > fit_window_lo_ns) || fit_window_lo_ns < 0.0)
    throw validation_error("SweepConfig: bad lifetime fit window");
  if (decay_samples < 8) throw validation_error("SweepConfig: need >= 8 decay samples");
}

namespace {

enum class Mode { offresonant, resonant };

struct PointResult {
  double counts_zpl, counts_psb, lifetime;
  std::vector<double> decay;
};

// Emitter-offset quadrature for the inhomogeneous ensemble: nodes over the
// detuning distribution, convolved with the vibration average.
struct EnsembleRule {
  std::vector<double> offsets_ghz;
  std::vector<double> weights;  // normalized
};

EnsembleRule build_ensemble_rule(const EnsembleSpec& ens, double kappa_ghz, int order) {
  EnsembleRule rule;
  if (!ens.enabled) {
    rule.offsets_ghz = {0.0};
    rule.weights = {1.0};
    return rule;
  }
  const double span = (ens.shape == EnsembleSpec::Shape::tophat) ? ens.width_ghz
                      : (ens.shape == EnsembleSpec::Shape::lorentzian) ? 12.0 * ens.width_ghz
                                                                       : 5.0 * ens.width_ghz;
  const double dx = std::min(ens.width_ghz, kappa_ghz) / std::max(6.0, order / 8.0);
  size_t n = static_cast<size_t>(std::ceil(2.0 * span / dx)) + 1;
  if (n % 2 == 0) ++n;
  if (n > 100001) n = 100001;
  double norm = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double x = -span + 2.0 * span * i / (n - 1);
    const double w = ((i == 0 || i == n - 1) ? 0.5 : 1.0) * ens.weight(x);
    rule.offsets_ghz.push_back(x);
    rule.weights.push_back(w);
    norm += w;
  }
  for (double& w : rule.weights) w /= norm;
  return rule;
}

// One grid point: quadrature over the length distribution (and the emitter
// ensemble) of the closed-form channel rates, then an exponential fit to the
// summed ZPL decay.
PointResult evaluate_point(const SweepConfig& cfg, Mode mode, double length_nm, int order,
                           std::span<const double> t_grid) {
  const EmitterParams& em = cfg.emitter;
  const double f0 = purcell_factor(cfg.coupling.g_mhz, cfg.coupling.kappa_ghz,
                                   cfg.coupling.gamma_mhz);
  const double gamma_rad_per_ns = angular_rate_per_ns_from_mhz(em.gamma_rad_mhz);
  const double slope = cfg.dispersion.slope_ghz_per_nm();
  const double core_nm = cfg.coupling.kappa_ghz / std::abs(slope);

  // Gaussian ensemble offsets commute with the gaussian length jitter under a
  // linear dispersion, so they fold into one effective sigma.
  EnsembleSpec ens = cfg.ensemble;
  double sigma_eff = cfg.vibration.sigma_nm;
  if (ens.enabled && ens.shape == EnsembleSpec::Shape::gaussian && cfg.dispersion.is_linear()) {
    const double width_nm = ens.width_ghz / std::abs(slope);
    sigma_eff = std::hypot(sigma_eff, width_nm);
    ens.enabled = false;
  }

  const LengthRule len_rule =
      LengthRule::build(sigma_eff, order, cfg.vibration.truncation, core_nm);
  const EnsembleRule ens_rule = build_ensemble_rule(ens, cfg.coupling.kappa_ghz, order);

  const size_t n = len_rule.offsets_nm.size() * ens_rule.offsets_ghz.size();
  std::vector<double> coef_zpl(n), coef_psb(n), gamma_prime(n);
  size_t idx = 0;
  for (size_t j = 0; j < ens_rule.offsets_ghz.size(); ++j) {
    for (size_t i = 0; i < len_rule.offsets_nm.size(); ++i, ++idx) {
      const double delta = cfg.dispersion.delta_ghz(length_nm + len_rule.offsets_nm[i]) -
                           ens_rule.offsets_ghz[j];
      const double weight = len_rule.weights[i] * ens_rule.weights[j];
      const double t_cav = lorentzian_transmission(delta, cfg.coupling.kappa_ghz);
      const double f = (f0 - 1.0) * t_cav + 1.0;
      gamma_prime[idx] = gamma_prime_per_ns(f, em);

      double p_ex;
      if (mode == Mode::offresonant) {
        p_ex = cfg.p_ex_offresonant;
      } else {
        p_ex = em.p_in * excitation_probability(em.phi_p0, delta, cfg.coupling.kappa_ghz,
                                                cfg.weak_excitation, cfg.squared_excitation);
      }
      const double eta_zpl = cfg.coupling.eta_zpl0 * t_cav;
      coef_zpl[idx] = weight * p_ex * (f - 1.0) * em.beta0 * eta_zpl * gamma_rad_per_ns;
      coef_psb[idx] =
          weight * p_ex * (1.0 - em.beta0) * cfg.coupling.eta_psb * gamma_rad_per_ns;
    }
  }

  PointResult out;
  out.counts_zpl = 0.0;
  out.counts_psb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    out.counts_zpl += coef_zpl[i] / gamma_prime[i];
    out.counts_psb += coef_psb[i] / gamma_prime[i];
  }

  // Apparent lifetime of the detected channel: ZPL for off-resonant sweeps,
  // PSB for resonant ones (the channels weight the gamma' mixture
  // differently).  The extraction matches an exponential to the decay on the
  // fit window through its windowed mean arrival time -- the
  // maximum-likelihood reduction, with closed-form moments per component.
  const std::vector<double>& coef_detected =
      mode == Mode::offresonant ? coef_zpl : coef_psb;
  const double a = cfg.fit_window_lo_ns, b = cfg.fit_window_hi_ns;
  double mass = 0.0, first_moment = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double g = gamma_prime[i];
    const double ea = std::exp(-g * a), eb = std::exp(-g * b);
    const double m0 = (ea - eb) / g;
    const double m1 = ((a + 1.0 / g) * ea - (b + 1.0 / g) * eb) / g;
    mass += coef_detected[i] * m0;
    first_moment += coef_detected[i] * m1;
  }
  if (!(mass > 0.0))
    throw numeric_error("sweep: empty decay window at L_det = " + std::to_string(length_nm));
  out.lifetime = exp_tau_from_windowed_mean(first_moment / mass - a, b - a);

  if (!t_grid.empty()) {
    out.decay.assign(t_grid.size(), 0.0);
    for (size_t i = 0; i < n; ++i)
      for (size_t k = 0; k < t_grid.size(); ++k)
        out.decay[k] += coef_detected[i] * std::exp(-gamma_prime[i] * t_grid[k]);
  }
  return out;
}

SweepCurves run_sweep(const SweepConfig& cfg, Mode mode, std::span<const double> lengths_nm) {
  cfg.validate();
  if (lengths_nm.empty()) throw validation_error("sweep: empty grid");
  if (mode == Mode::resonant && cfg.ensemble.enabled)
    throw validation_error("resonant_sweep: ensemble broadening must be disabled");

  std::vector<double> t_grid;
  if (cfg.keep_decay_histograms) {
    t_grid.resize(cfg.decay_samples);
    for (int k = 0; k < cfg.decay_samples; ++k)
      t_grid[k] = cfg.fit_window_lo_ns + (cfg.fit_window_hi_ns - cfg.fit_window_lo_ns) * k /
                                             (cfg.decay_samples - 1);
  }

  SweepCurves curves;
  if (cfg.keep_decay_histograms) curves.decay_time_ns = t_grid;

  for (const double l : lengths_nm) {
    const PointResult res = evaluate_point(cfg, mode, l, cfg.vibration.quadrature_order, t_grid);

    if (cfg.check_convergence && cfg.vibration.sigma_nm > 0.0) {
      const PointResult res2 =
          evaluate_point(cfg, mode, l, 2 * cfg.vibration.quadrature_order, t_grid);
      const auto rel = [](double a, double b) {
        return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
      };
      if (rel(res.counts_zpl, res2.counts_zpl) > 1e-3 ||
          rel(res.counts_psb, res2.counts_psb) > 1e-3 ||
          rel(res.lifetime, res2.lifetime) > 1e-3) {
        std::ostringstream msg;
        msg << "sweep: quadrature not converged at L_det = " << l << " nm (order "
            << cfg.vibration.quadrature_order << " vs " << 2 * cfg.vibration.quadrature_order
            << ": counts " << res.counts_zpl << " vs " << res2.counts_zpl << ")";
        throw numeric_error(msg.str());
      }
    }

    SweepPoint point;
    point.length_nm = l;
    point.detuning_ghz = cfg.dispersion.delta_ghz(l);
    point.counts_zpl = res.counts_zpl;
    point.counts_psb = res.counts_psb;
    point.lifetime_ns = res.lifetime;
    point.lifetime_err_ns = 0.0;
    curves.points.push_back(point);
    if (cfg.keep_decay_histograms) curves.decay_zpl.push_back(res.decay);
  }
  return curves;
}

}  // namespace

SweepCurves offresonant_sweep(const SweepConfig& config, std::span<const double> lengths_nm) {
  return run_sweep(config, Mode::offresonant, lengths_nm);
}

SweepCurves resonant_sweep(const SweepConfig& config, std::span<const double> lengths_nm) {
  return run_sweep(config, Mode::resonant, lengths_nm);
}

double DecayMixture::total_zpl() const {
  double sum = 0.0;
  for (double y : yield_zpl) sum += y;
  return sum;
}

double DecayMixture::total_psb() const {
  double sum = 0.0;
  for (double y : yield_psb) sum += y;
  return sum;
}

namespace {

DecayMixture build_mixture(const SweepConfig& cfg, Mode mode, double length_nm) {
  cfg.validate();
  if (mode == Mode::resonant && cfg.ensemble.enabled)
    throw validation_error("decay mixture: ensemble must be disabled for resonant excitation");
  const EmitterParams& em = cfg.emitter;
  const double f0 = purcell_factor(cfg.coupling.g_mhz, cfg.coupling.kappa_ghz,
                                   cfg.coupling.gamma_mhz);
  const double gamma_rad_per_ns = angular_rate_per_ns_from_mhz(em.gamma_rad_mhz);
  const double slope = cfg.dispersion.slope_ghz_per_nm();
  const double core_nm = cfg.coupling.kappa_ghz / std::abs(slope);

  EnsembleSpec ens = cfg.ensemble;
  double sigma_eff = cfg.vibration.sigma_nm;
  if (ens.enabled && ens.shape == EnsembleSpec::Shape::gaussian && cfg.dispersion.is_linear()) {
    sigma_eff = std::hypot(sigma_eff, ens.width_ghz / std::abs(slope));
    ens.enabled = false;
  }
  const LengthRule len_rule =
      LengthRule::build(sigma_eff, cfg.vibration.quadrature_order, cfg.vibration.truncation,
                        core_nm);
  const EnsembleRule ens_rule =
      build_ensemble_rule(ens, cfg.coupling.kappa_ghz, cfg.vibration.quadrature_order);

  DecayMixture mix;
  for (size_t j = 0; j < ens_rule.offsets_ghz.size(); ++j) {
    for (size_t i = 0; i < len_rule.offsets_nm.size(); ++i) {
      const double delta = cfg.dispersion.delta_ghz(length_nm + len_rule.offsets_nm[i]) -
                           ens_rule.offsets_ghz[j];
      const double weight = len_rule.weights[i] * ens_rule.weights[j];
      const double t_cav = lorentzian_transmission(delta, cfg.coupling.kappa_ghz);
      const double f = (f0 - 1.0) * t_cav + 1.0;
      const double gp = gamma_prime_per_ns(f, em);
      const double p_ex =
          mode == Mode::offresonant
              ? cfg.p_ex_offresonant
              : em.p_in * excitation_probability(em.phi_p0, delta, cfg.coupling.kappa_ghz,
                                                 cfg.weak_excitation, cfg.squared_excitation);
      mix.gamma_per_ns.push_back(gp);
      mix.yield_zpl.push_back(weight * p_ex * (f - 1.0) * em.beta0 * cfg.coupling.eta_zpl0 *
                              t_cav * gamma_rad_per_ns / gp);
      mix.yield_psb.push_back(weight * p_ex * (1.0 - em.beta0) * cfg.coupling.eta_psb *
                              gamma_rad_per_ns / gp);
    }
  }
  return mix;
}

}  // namespace

DecayMixture decay_mixture_offresonant(const SweepConfig& config, double length_nm) {
  return build_mixture(config, Mode::offresonant, length_nm);
}

DecayMixture decay_mixture_resonant(const SweepConfig& config, double length_nm) {
  return build_mixture(config, Mode::resonant, length_nm);
}

// --- cryostat-phase-resolved statistics -----------------------------------

void CryostatPhaseProfile::validate() const {
  if (!(period_s > 0.0)) throw validation_error("CryostatPhaseProfile: period must be > 0");
  if (phase_s.size() != sigma_nm.size() || phase_s.size() < 2)
    throw validation_error("CryostatPhaseProfile: sigma(t) table needs >= 2 matched samples");
  for (double s : sigma_nm)
    if (!(s > 0.0)) throw validation_error("CryostatPhaseProfile: sigma(t) must be > 0");
  for (size_t i = 1; i < phase_s.size(); ++i)
    if (!(phase_s[i] > phase_s[i - 1]))
      throw validation_error("CryostatPhaseProfile: phase grid must increase");
  for (const Window& w : windows) {
    if (!(w.end_s > w.start_s) || w.start_s < 0.0 || w.end_s > period_s)
      throw validation_error("CryostatPhaseProfile: window outside the period");
    for (const Window& other : windows) {
      if (&other == &w) continue;
      if (w.start_s < other.end_s && other.start_s < w.end_s)
        throw validation_error("CryostatPhaseProfile: windows overlap");
    }
  }
}

double CryostatPhaseProfile::sigma_at(double phase) const {
  phase = std::fmod(phase, period_s);
  if (phase < 0.0) phase += period_s;
  if (phase <= phase_s.front() || phase >= phase_s.back()) {
    // wrap between the table ends
    const double span = phase_s.front() + period_s - phase_s.back();
    const double d = phase >= phase_s.back() ? phase - phase_s.back()
                                             : phase + period_s - phase_s.back();
    const double f = d / span;
    return sigma_nm.back() + f * (sigma_nm.front() - sigma_nm.back());
  }
  const auto it = std::upper_bound(phase_s.begin(), phase_s.end(), phase);
  const size_t hi = it - phase_s.begin();
  const size_t lo = hi - 1;
  const double f = (phase - phase_s[lo]) / (phase_s[hi] - phase_s[lo]);
  return sigma_nm[lo] + f * (sigma_nm[hi] - sigma_nm[lo]);
}

std::vector<PhaseWindowStats> phase_resolved_stats(std::span<const PhotonRecord> records,
                                                   int sync_channel, double pulse_period_ns,
                                                   const CryostatPhaseProfile& profile,
                                                   double fit_lo_ns, double fit_hi_ns,
                                                   long long min_photons) {
  profile.validate();
  if (!(pulse_period_ns > 0.0))
    throw validation_error("phase_resolved_stats: pulse period must be > 0");

  std::vector<long long> syncs;
  for (const PhotonRecord& r : records)
    if (r.channel == sync_channel) syncs.push_back(r.time_ps);
  if (syncs.size() < 2)
    throw validation_error("phase_resolved_stats: need at least two sync events");
  for (size_t i = 1; i < syncs.size(); ++i)
    if (syncs[i] <= syncs[i - 1])
      throw validation_error("phase_resolved_stats: sync events must be monotone");

  const size_t n_windows = profile.windows.size();
  std::vector<std::vector<double>> decay_times(n_windows);
  std::vector<long long> counts(n_windows, 0);

  size_t sync_idx = 0;
  for (const PhotonRecord& r : records) {
    if (r.channel == sync_channel) continue;
    while (sync_idx + 1 < syncs.size() && syncs[sync_idx + 1] <= r.time_ps) ++sync_idx;
    if (r.time_ps < syncs.front() || r.time_ps >= syncs.back()) continue;  // partial periods
    const double phase = (r.time_ps - syncs[sync_idx]) * 1e-12;
    for (size_t w = 0; w < n_windows; ++w) {
      if (phase >= profile.windows[w].start_s && phase < profile.windows[w].end_s) {
        decay_times[w].push_back(
            std::fmod((r.time_ps - syncs[sync_idx]) * 1e-3, pulse_period_ns));
        ++counts[w];
        break;
      }
    }
  }

  const long long n_periods = static_cast<long long>(syncs.size()) - 1;
  std::vector<PhaseWindowStats> stats;
  for (size_t w = 0; w < n_windows; ++w) {
    PhaseWindowStats s;
    s.label = profile.windows[w].label;
    s.n_photons = counts[w];
    const double window_duration = profile.windows[w].end_s - profile.windows[w].start_s;
    s.n_pulses = static_cast<long long>(n_periods * window_duration / (pulse_period_ns * 1e-9));
    s.counts_per_pulse = s.n_pulses > 0 ? double(counts[w]) / double(s.n_pulses) : 0.0;
    s.flagged = counts[w] < min_photons;
    if (!s.flagged) {
      // unbinned windowed-mean lifetime, as in the sweep reductions
      double sum = 0.0, sum2 = 0.0;
      long long n = 0;
      for (double t : decay_times[w]) {
        if (t < fit_lo_ns || t > fit_hi_ns) continue;
        sum += t - fit_lo_ns;
        sum2 += (t - fit_lo_ns) * (t - fit_lo_ns);
        ++n;
      }
      if (n < 10) {
        s.flagged = true;
      } else {
        const double window = fit_hi_ns - fit_lo_ns;
        const double mean = sum / n;
        s.lifetime_ns = exp_tau_from_windowed_mean(mean, window);
        const double var_mean = (sum2 / n - mean * mean) / n;
        const double h = 1e-4 * s.lifetime_ns;
        const auto g = [window](double x) {
          const double z = window / x;
          return z > 700.0 ? x : x - window / std::expm1(z);
        };
        const double gp =
            (g(s.lifetime_ns + h) - g(s.lifetime_ns - h)) / (2.0 * h);
        s.lifetime_err_ns = std::sqrt(std::max(var_mean, 0.0)) / std::max(gp, 1e-12);
      }
    }
    stats.push_back(s);
  }
  return stats;
}

}  // namespace cavsim
