#include "cavsim/inference.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "cavsim/rng.hpp"

namespace cavsim {

// --- dataset validation -------------------------------------------------------

int SweepDataset::n_sessions() const {
  int max_session = -1;
  for (const SweepObservation& p : points) max_session = std::max(max_session, p.session);
  return max_session + 1;
}

void SweepDataset::validate() const {
  if (points.size() < 8)
    throw validation_error("SweepDataset: need at least 8 points spanning the peak");
  std::map<int, double> last;
  for (const SweepObservation& p : points) {
    if (!(p.counts_err > 0.0) || !(p.lifetime_err_ns > 0.0))
      throw validation_error("SweepDataset: errors must be > 0");
    if (p.session < 0) throw validation_error("SweepDataset: negative session tag");
    const auto it = last.find(p.session);
    if (it != last.end() && !(p.detuning_ghz > it->second))
      throw validation_error("SweepDataset: detunings must increase within a session");
    last[p.session] = p.detuning_ghz;
  }
}

void PLETrace::validate() const {
  if (!(bin_width_mhz > 0.0)) throw validation_error("PLETrace: bin width must be > 0");
  if (freq_ghz.size() != counts.size() || freq_ghz.size() < 8)
    throw validation_error("PLETrace: need matched frequency/count arrays");
  for (double c : counts)
    if (c < 0.0) throw validation_error("PLETrace: counts must be >= 0");
}

void G2Histogram::validate() const {
  if (pulse_index.size() != coincidences.size())
    throw validation_error("G2Histogram: index/coincidence size mismatch");
  if (!background.empty() && background.size() != coincidences.size())
    throw validation_error("G2Histogram: background size mismatch");
  for (double c : coincidences)
    if (c < 0.0) throw validation_error("G2Histogram: coincidences must be >= 0");
  bool has_zero = false, has_far = false;
  for (int k : pulse_index) {
    if (k == 0) has_zero = true;
    if (std::abs(k) >= 3) has_far = true;
  }
  if (!has_zero || !has_far)
    throw validation_error("G2Histogram: need the zero bin and far separations");
}

void DecayHistogram::validate() const {
  if (t_ns.size() != counts.size() || t_ns.size() < 8)
    throw validation_error("DecayHistogram: need matched time/count arrays");
  if (!(bin_width_ns > 0.0)) throw validation_error("DecayHistogram: bin width must be > 0");
  if (n_pulses < 1) throw validation_error("DecayHistogram: n_pulses must be >= 1");
}

// --- model context -------------------------------------------------------------

double SweepModelContext::mean_transmission(double sigma_nm) const {
  if (sigma_nm <= 0.0) return 1.0;
  const double core_nm = kappa_ghz / std::abs(slope_ghz_per_nm);
  const LengthRule rule = LengthRule::build(sigma_nm, quadrature_order, 5.0, core_nm);
  return rule.expect([&](double dl) {
    return lorentzian_transmission(dl * slope_ghz_per_nm, kappa_ghz);
  });
}

double SweepModelContext::y0_from_effective(double y_eff, double sigma_nm) const {
  return y_eff / mean_transmission(sigma_nm);
}

double SweepModelContext::effective_from_y0(double y0, double sigma_nm) const {
  return y0 * mean_transmission(sigma_nm);
}

SweepConfig SweepModelContext::sweep_config(double y_eff, double tau0_ns,
                                            double sigma_nm) const {
  const double y0 = y0_from_effective(y_eff, sigma_nm);
  const double f0 = y0 / beta0 + 1.0;

  SweepConfig cfg;
  cfg.emitter = EmitterParams::from_lifetime(tau0_ns, beta0);
  cfg.emitter.p_in = p_in;
  cfg.emitter.phi_p0 = phi_p0;
  cfg.coupling.kappa_ghz = kappa_ghz;
  cfg.coupling.gamma_mhz = gamma_mhz;
  cfg.coupling.g_mhz = std::sqrt(std::max(0.0, (f0 - 1.0) * mhz_from_ghz(kappa_ghz) *
                                                   gamma_mhz / 4.0));
  cfg.coupling.eta_zpl0 = eta_zpl0;
  cfg.coupling.eta_psb = eta_psb;
  cfg.vibration.sigma_nm = sigma_nm;
  cfg.vibration.quadrature_order = quadrature_order;
  cfg.dispersion = DispersionMap::linear(slope_ghz_per_nm);
  cfg.p_ex_offresonant = p_ex_offresonant;
  cfg.fit_window_lo_ns = fit_window_lo_ns;
  cfg.fit_window_hi_ns = fit_window_hi_ns;
  cfg.check_convergence = false;
  return cfg;
}

// --- synthetic sweeps ----------------------------------------------------------

namespace {

std::vector<double> sample_decay_times(const DecayMixture& mix, bool psb_channel, long long n,
                                       Rng& rng) {
  const std::vector<double>& yields = psb_channel ? mix.yield_psb : mix.yield_zpl;
  std::vector<double> cumulative(yields.size());
  std::partial_sum(yields.begin(), yields.end(), cumulative.begin());
  const double total = cumulative.back();
  std::vector<double> times;
  times.reserve(n);
  for (long long i = 0; i < n; ++i) {
    const double u = rng.uniform() * total;
    const size_t idx =
        std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin();
    times.push_back(rng.exponential(1.0 / mix.gamma_per_ns[std::min(idx, yields.size() - 1)]));
  }
  return times;
}

struct PointLifetime {
  double tau, tau_err;
};

PointLifetime lifetime_from_samples(const std::vector<double>& times, double fit_lo_ns,
                                    double fit_hi_ns) {
  // Unbinned windowed-mean estimator: the same reduction the model curves
  // use, so sampled and model lifetimes agree without binning bias.
  double sum = 0.0, sum2 = 0.0;
  long long n = 0;
  for (double t : times) {
    if (t < fit_lo_ns || t > fit_hi_ns) continue;
    const double offset = t - fit_lo_ns;
    sum += offset;
    sum2 += offset * offset;
    ++n;
  }
  if (n < 10) throw numeric_error("lifetime_from_samples: too few photons in the window");
  const double window = fit_hi_ns - fit_lo_ns;
  const double mean = sum / n;
  const double tau = exp_tau_from_windowed_mean(mean, window);

  // error from the delta method: var(tau) = var(mean) / g'(tau)^2
  const double var_mean = (sum2 / n - mean * mean) / n;
  const double h = 1e-4 * tau;
  const auto g = [window](double x) {
    const double z = window / x;
    return z > 700.0 ? x : x - window / std::expm1(z);
  };
  const double gprime = (g(tau + h) - g(tau - h)) / (2.0 * h);
  return {tau, std::sqrt(std::max(var_mean, 0.0)) / std::max(gprime, 1e-12)};
}

}  // namespace

SweepDataset synth_sweep(const SweepModelContext& context, SweepDataset::Excitation excitation,
                         const SweepTruth& truth, std::span<const double> detunings_ghz,
                         long long pulses_per_point, uint64_t seed) {
  if (detunings_ghz.empty()) throw validation_error("synth_sweep: empty detuning grid");
  if (pulses_per_point < 1) throw validation_error("synth_sweep: need at least one pulse");
  Rng rng(seed);

  const SweepConfig cfg = context.sweep_config(truth.y_eff, truth.tau0_ns, truth.sigma_nm);
  const bool resonant = excitation == SweepDataset::Excitation::resonant;
  const auto mixture_at = [&](double delta_ghz) {
    const double length = delta_ghz / context.slope_ghz_per_nm;
    return resonant ? decay_mixture_resonant(cfg, length)
                    : decay_mixture_offresonant(cfg, length);
  };

  const DecayMixture center = mixture_at(0.0);
  const double peak = resonant ? center.total_psb() : center.total_zpl();

  SweepDataset data;
  data.excitation = excitation;
  const int n_sessions = 1 + static_cast<int>(truth.session_offsets_ghz.size());
  for (int session = 0; session < n_sessions; ++session) {
    const double offset =
        truth.center_offset_ghz +
        (session > 0 ? truth.session_offsets_ghz[session - 1] : 0.0);
    for (const double detuning : detunings_ghz) {
      const DecayMixture mix = mixture_at(detuning - offset);
      const double mean_counts =
          truth.amplitude * (resonant ? mix.total_psb() : mix.total_zpl()) / peak;
      const long long n_ph = rng.poisson(mean_counts * pulses_per_point);

      SweepObservation obs;
      obs.session = session;
      obs.detuning_ghz = detuning;
      obs.counts = double(n_ph) / pulses_per_point;
      obs.counts_err = std::sqrt(std::max<double>(n_ph, 1.0)) / pulses_per_point;
      const std::vector<double> times =
          sample_decay_times(mix, resonant, std::max<long long>(n_ph, 50), rng);
      const PointLifetime lt =
          lifetime_from_samples(times, context.fit_window_lo_ns, context.fit_window_hi_ns);
      obs.lifetime_ns = lt.tau;
      obs.lifetime_err_ns = std::max(lt.tau_err, 1e-4);
      data.points.push_back(obs);
    }
  }
  return data;
}

// --- joint sweep fit -------------------------------------------------------------

FitResult fit_sweep_joint(const SweepDataset& dataset, const SweepModelContext& context,
                          const SweepTruth& initial_guess) {
  dataset.validate();
  const bool resonant = dataset.excitation == SweepDataset::Excitation::resonant;
  const int n_sessions = dataset.n_sessions();
  const int n_params = 5 + std::max(0, n_sessions - 1);

  const auto curves_at = [&](const SweepConfig& cfg, std::vector<double> lengths) {
    return resonant ? resonant_sweep(cfg, lengths) : offresonant_sweep(cfg, lengths);
  };

  const auto residuals = [&](const Eigen::VectorXd& p) {
    const double y_eff = p(0), tau0 = p(1), sigma = p(2), amplitude = p(3), center = p(4);
    const SweepConfig cfg = context.sweep_config(y_eff, tau0, sigma);

    Eigen::VectorXd r(2 * dataset.points.size());
    // evaluate the model once per unique effective detuning; index 0 is the
    // normalization point at zero detuning
    std::vector<double> lengths{0.0};
    for (const SweepObservation& obs : dataset.points) {
      const double offset = center + (obs.session > 0 ? p(5 + obs.session - 1) : 0.0);
      lengths.push_back((obs.detuning_ghz - offset) / context.slope_ghz_per_nm);
    }
    const SweepCurves curves = curves_at(cfg, lengths);
    const double peak = resonant ? curves.points[0].counts_psb : curves.points[0].counts_zpl;

    for (size_t i = 0; i < dataset.points.size(); ++i) {
      const SweepObservation& obs = dataset.points[i];
      const SweepPoint& model = curves.points[i + 1];
      const double model_counts =
          amplitude * (resonant ? model.counts_psb : model.counts_zpl) / peak;
      r(2 * i) = (model_counts - obs.counts) / obs.counts_err;
      r(2 * i + 1) = (model.lifetime_ns - obs.lifetime_ns) / obs.lifetime_err_ns;
    }
    return r;
  };

  // seeds: amplitude and center from the data, the rest from the guess
  double amp_seed = 0.0, center_seed = initial_guess.center_offset_ghz;
  for (const SweepObservation& obs : dataset.points)
    if (obs.counts > amp_seed) { amp_seed = obs.counts; center_seed = obs.detuning_ghz; }

  Eigen::VectorXd p0(n_params);
  p0(0) = initial_guess.y_eff;
  p0(1) = initial_guess.tau0_ns;
  p0(2) = initial_guess.sigma_nm;
  p0(3) = amp_seed;
  p0(4) = center_seed;
  for (int s = 0; s + 5 < n_params; ++s)
    p0(5 + s) = s < static_cast<int>(initial_guess.session_offsets_ghz.size())
                    ? initial_guess.session_offsets_ghz[s]
                    : 0.0;

  FitOptions opt;
  opt.max_iterations = 250;
  opt.ftol = 1e-10;
  opt.xtol = 1e-10;
  opt.gtol = 1e-8;
  opt.lower_bounds = Eigen::VectorXd::Constant(n_params, -1e9);
  opt.upper_bounds = Eigen::VectorXd::Constant(n_params, 1e9);
  opt.lower_bounds(0) = 1e-4;
  opt.upper_bounds(0) = 0.9;
  opt.lower_bounds(1) = 1.0;
  opt.upper_bounds(1) = 100.0;
  opt.lower_bounds(2) = 0.0;
  opt.upper_bounds(2) = 3.0;
  opt.lower_bounds(3) = 0.0;

  FitResult fit = fit_least_squares(residuals, p0, opt);
  fit.names = {"f_beta0_eff", "tau0_ns", "sigma_nm", "amplitude", "center_ghz"};
  for (int s = 1; s < n_sessions; ++s)
    fit.names.push_back("session" + std::to_string(s) + "_offset_ghz");
  return fit;
}

// --- lifetime fit with extrapolation ----------------------------------------------

LifetimeFitResult fit_exponential_lifetime(const DecayHistogram& histogram, double fit_lo_ns,
                                           double fit_hi_ns,
                                           std::optional<double> background_per_bin) {
  histogram.validate();
  if (!(fit_hi_ns > fit_lo_ns))
    throw validation_error("fit_exponential_lifetime: bad fit window");

  LifetimeFitResult out;
  double amplitude, tau, amp_sigma, tau_sigma;

  if (background_per_bin) {
    // known reference level (e.g. measured with the excitation detuned)
    out.background_per_bin = *background_per_bin;
    std::vector<double> t, y, sigma;
    double net = 0.0;
    for (size_t i = 0; i < histogram.t_ns.size(); ++i) {
      if (histogram.t_ns[i] < fit_lo_ns || histogram.t_ns[i] > fit_hi_ns) continue;
      t.push_back(histogram.t_ns[i]);
      y.push_back(histogram.counts[i] - out.background_per_bin);
      sigma.push_back(std::sqrt(std::max(histogram.counts[i], 1.0)));
      net += y.back();
    }
    if (!(net > 0.0))
      throw numeric_error(
          "fit_exponential_lifetime: negative amplitude after background subtraction");
    const ExponentialFit fit = fit_exponential(t, y, sigma, fit_lo_ns, fit_hi_ns);
    if (!fit.converged || !(fit.amplitude > 0.0))
      throw numeric_error("fit_exponential_lifetime: exponential fit failed");
    amplitude = fit.amplitude;
    tau = fit.tau;
    amp_sigma = fit.amplitude_sigma;
    tau_sigma = fit.tau_sigma;
  } else {
    // estimate the off-pulse level jointly: A exp(-t/tau) + B over the window
    // and everything beyond it
    std::vector<double> t, y;
    for (size_t i = 0; i < histogram.t_ns.size(); ++i) {
      if (histogram.t_ns[i] < fit_lo_ns) continue;
      t.push_back(histogram.t_ns[i]);
      y.push_back(histogram.counts[i]);
    }
    if (t.size() < 6)
      throw validation_error("fit_exponential_lifetime: too few bins past the window start");
    const auto residuals = [&](const Eigen::VectorXd& p) {
      Eigen::VectorXd r(t.size());
      for (size_t i = 0; i < t.size(); ++i) {
        const double m = p(0) * std::exp(-t[i] / p(1)) + p(2);
        r(i) = (m - y[i]) / std::sqrt(std::max(m, 0.25));
      }
      return r;
    };
    double tail = 0.0;
    int n_tail = 0;
    for (size_t i = 0; i < t.size(); ++i)
      if (t[i] > fit_hi_ns) { tail += y[i]; ++n_tail; }
    const double bg_seed = n_tail > 0 ? tail / n_tail : 0.0;
    double peak = 0.0;
    for (size_t i = 0; i < t.size(); ++i) peak = std::max(peak, y[i]);
    Eigen::VectorXd p0(3);
    p0 << std::max(peak - bg_seed, 1.0), 0.25 * (fit_hi_ns - fit_lo_ns), bg_seed;
    FitOptions opt;
    opt.lower_bounds = Eigen::Vector3d(0.0, 1e-3, 0.0);
    opt.upper_bounds = Eigen::Vector3d(1e30, 1e6, 1e30);
    const FitResult fit = fit_least_squares(residuals, p0, opt);
    if (!fit.converged || !(fit.params(0) > 0.0))
      throw numeric_error("fit_exponential_lifetime: joint background fit failed");
    amplitude = fit.params(0);
    tau = fit.params(1);
    amp_sigma = fit.uncertainties(0);
    tau_sigma = fit.uncertainties(1);
    out.background_per_bin = fit.params(2);
  }

  out.tau_ns = tau;
  out.tau_err_ns = tau_sigma;
  out.amplitude = amplitude;
  // integral of A exp(-t/tau) from t = 0, in counts (per-bin amplitude)
  out.total_counts = amplitude * tau / histogram.bin_width_ns;
  out.total_per_pulse = out.total_counts / histogram.n_pulses;
  const double rel = std::sqrt(std::pow(amp_sigma / amplitude, 2) +
                               std::pow(tau_sigma / tau, 2));
  out.total_per_pulse_err = out.total_per_pulse * rel;
  return out;
}

// --- PLE ---------------------------------------------------------------------------

namespace {

PLETraceFit fit_gaussian_peak(std::span<const double> freq_ghz, std::span<const double> counts) {
  const size_t n = freq_ghz.size();
  size_t i_max = 0;
  double c_min = counts[0];
  for (size_t i = 0; i < n; ++i) {
    if (counts[i] > counts[i_max]) i_max = i;
    c_min = std::min(c_min, counts[i]);
  }
  const double amp_seed = counts[i_max] - c_min;
  // half-crossing width seed
  double lo = freq_ghz.front(), hi = freq_ghz.back();
  for (size_t i = i_max; i-- > 0;)
    if (counts[i] - c_min < amp_seed / 2.0) { lo = freq_ghz[i]; break; }
  for (size_t i = i_max; i < n; ++i)
    if (counts[i] - c_min < amp_seed / 2.0) { hi = freq_ghz[i]; break; }
  const double s_seed = std::max((hi - lo) / 2.3548, 1e-4);

  const auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(n);
    for (size_t i = 0; i < n; ++i) {
      const double z = (freq_ghz[i] - p(1)) / p(2);
      const double model = p(3) + p(0) * std::exp(-0.5 * z * z);
      r(i) = (model - counts[i]) / std::sqrt(std::max(counts[i], 1.0));
    }
    return r;
  };
  Eigen::VectorXd p0(4);
  p0 << amp_seed, freq_ghz[i_max], s_seed, c_min;
  FitOptions opt;
  opt.max_iterations = 200;
  FitResult fit = fit_least_squares(residuals, p0, opt);

  PLETraceFit out;
  const double amp = fit.params(0), width = std::abs(fit.params(2));
  const double noise = std::sqrt(std::max(fit.params(3), 1.0));
  const double spacing = (freq_ghz.back() - freq_ghz.front()) / (n - 1);
  // a "peak" as wide as the scan window is an offset in disguise, and one
  // narrower than the binning is a single noisy bin
  out.ok = fit.converged && amp > 4.0 * noise && amp > 5.0 * fit.uncertainties(0) &&
           width > 0.7 * spacing && width < (freq_ghz.back() - freq_ghz.front()) / 6.0;
  out.amplitude = amp;
  out.center_ghz = fit.params(1);
  out.center_err_ghz = fit.uncertainties(1);
  out.fwhm_mhz = 2.0 * std::sqrt(2.0 * std::log(2.0)) * width * 1e3;
  out.fwhm_err_mhz = 2.0 * std::sqrt(2.0 * std::log(2.0)) * fit.uncertainties(2) * 1e3;
  out.offset = fit.params(3);
  return out;
}

double interp(std::span<const double> x, std::span<const double> y, double xi) {
  if (xi <= x.front() || xi >= x.back()) return std::nan("");
  const auto it = std::upper_bound(x.begin(), x.end(), xi);
  const size_t hi = it - x.begin();
  const size_t lo = hi - 1;
  const double f = (xi - x[lo]) / (x[hi] - x[lo]);
  return y[lo] + f * (y[hi] - y[lo]);
}

}  // namespace

PLEAnalysis ple_analyze(const std::vector<PLETrace>& traces) {
  if (traces.empty()) throw validation_error("ple_analyze: no traces");
  for (const PLETrace& t : traces) t.validate();

  PLEAnalysis out;
  out.grid_ghz = traces.front().freq_ghz;

  std::vector<size_t> good;
  for (size_t i = 0; i < traces.size(); ++i) {
    const PLETraceFit fit = fit_gaussian_peak(traces[i].freq_ghz, traces[i].counts);
    out.traces.push_back(fit);
    if (fit.ok)
      good.push_back(i);
    else
      out.excluded.push_back(static_cast<int>(i));
  }
  if (good.size() < 2) throw numeric_error("ple_analyze: fewer than two usable traces");

  double mean_center = 0.0;
  for (size_t i : good) mean_center += out.traces[i].center_ghz / good.size();

  const size_t n_grid = out.grid_ghz.size();
  out.raw_average.assign(n_grid, 0.0);
  out.centered_average.assign(n_grid, 0.0);
  std::vector<int> raw_n(n_grid, 0), centered_n(n_grid, 0);
  for (size_t i : good) {
    const PLETrace& trace = traces[i];
    const double shift = out.traces[i].center_ghz - mean_center;
    for (size_t k = 0; k < n_grid; ++k) {
      const double raw = interp(trace.freq_ghz, trace.counts, out.grid_ghz[k]);
      if (!std::isnan(raw)) {
        out.raw_average[k] += raw;
        ++raw_n[k];
      }
      const double shifted = interp(trace.freq_ghz, trace.counts, out.grid_ghz[k] + shift);
      if (!std::isnan(shifted)) {
        out.centered_average[k] += shifted;
        ++centered_n[k];
      }
    }
  }
  for (size_t k = 0; k < n_grid; ++k) {
    if (raw_n[k] > 0) out.raw_average[k] /= raw_n[k];
    if (centered_n[k] > 0) out.centered_average[k] /= centered_n[k];
  }

  const PLETraceFit raw_fit = fit_gaussian_peak(out.grid_ghz, out.raw_average);
  const PLETraceFit centered_fit = fit_gaussian_peak(out.grid_ghz, out.centered_average);
  if (!raw_fit.ok || !centered_fit.ok)
    throw numeric_error("ple_analyze: averaged-line fit failed");
  out.raw_fwhm_mhz = raw_fit.fwhm_mhz;
  out.raw_fwhm_err_mhz = raw_fit.fwhm_err_mhz;
  out.centered_fwhm_mhz = centered_fit.fwhm_mhz;
  out.centered_fwhm_err_mhz = centered_fit.fwhm_err_mhz;
  return out;
}

std::vector<PLETrace> synth_ple_traces(int n_traces, double intrinsic_fwhm_mhz,
                                       double amplitude_counts, double background_counts,
                                       double bin_width_mhz, double span_ghz,
                                       const PLEDriftSpec& drift, uint64_t seed) {
  if (n_traces < 1) throw validation_error("synth_ple_traces: need traces");
  Rng rng(seed);
  const double sigma_ghz = intrinsic_fwhm_mhz / 2.3548 * 1e-3;
  const int n_bins = static_cast<int>(2.0 * span_ghz / (bin_width_mhz * 1e-3));

  std::vector<PLETrace> traces;
  double walk = 0.0;
  for (int i = 0; i < n_traces; ++i) {
    double center = 0.0;
    switch (drift.kind) {
      case PLEDriftSpec::Kind::none:
        break;
      case PLEDriftSpec::Kind::linear:
        center = (i - (n_traces - 1) / 2.0) / std::max(1, n_traces - 1) * drift.scale_mhz * 1e-3;
        break;
      case PLEDriftSpec::Kind::random_walk:
        walk += rng.normal() * drift.scale_mhz * 1e-3;
        center = walk;
        break;
    }
    PLETrace trace;
    trace.scan_index = i;
    trace.bin_width_mhz = bin_width_mhz;
    for (int b = 0; b < n_bins; ++b) {
      const double f = -span_ghz + 2.0 * span_ghz * b / (n_bins - 1);
      const double z = (f - center) / sigma_ghz;
      const double mean = background_counts + amplitude_counts * std::exp(-0.5 * z * z);
      trace.freq_ghz.push_back(f);
      trace.counts.push_back(static_cast<double>(rng.poisson(mean)));
    }
    traces.push_back(std::move(trace));
  }
  return traces;
}

// --- g2 ---------------------------------------------------------------------------

G2Histogram synth_g2(const G2SynthSpec& spec, uint64_t seed) {
  if (spec.n_emitters < 1 || spec.train_length < 2 || spec.n_trains < 1)
    throw validation_error("synth_g2: bad synthesis spec");
  Rng rng(seed);

  const int n_sep = spec.max_separation + 1;
  std::vector<double> coincidences(n_sep, 0.0);

  std::vector<bool> bright(spec.n_emitters, true);
  std::vector<char> det0(spec.train_length), det1(spec.train_length);
  const double pi_bright =
      spec.bright_to_dark + spec.dark_to_bright > 0.0
          ? spec.dark_to_bright / (spec.bright_to_dark + spec.dark_to_bright)
          : 1.0;

  for (long long train = 0; train < spec.n_trains; ++train) {
    for (int e = 0; e < spec.n_emitters; ++e) bright[e] = rng.uniform() < pi_bright;
    for (int p = 0; p < spec.train_length; ++p) {
      int photons0 = 0, photons1 = 0;
      for (int e = 0; e < spec.n_emitters; ++e) {
        if (spec.bright_to_dark > 0.0 || spec.dark_to_bright > 0.0) {
          if (bright[e]) {
            if (rng.uniform() < spec.bright_to_dark) bright[e] = false;
          } else {
            if (rng.uniform() < spec.dark_to_bright) bright[e] = true;
          }
        }
        if (bright[e] && rng.uniform() < spec.detection_prob)
          (rng.uniform() < 0.5 ? photons0 : photons1) += 1;
      }
      if (spec.background_prob > 0.0) {
        if (rng.uniform() < spec.background_prob) ++photons0;
        if (rng.uniform() < spec.background_prob) ++photons1;
      }
      det0[p] = photons0 > 0;
      det1[p] = photons1 > 0;
    }
    for (int i = 0; i < spec.train_length; ++i) {
      if (!det0[i] && !det1[i]) continue;
      const int k_max = std::min(spec.max_separation, spec.train_length - 1 - i);
      for (int k = 0; k <= k_max; ++k) {
        if (k == 0) {
          coincidences[0] += det0[i] && det1[i] ? 1.0 : 0.0;
        } else {
          coincidences[k] += (det0[i] && det1[i + k] ? 1.0 : 0.0) +
                             (det1[i] && det0[i + k] ? 1.0 : 0.0);
        }
      }
    }
  }

  G2Histogram hist;
  hist.train_length = spec.train_length;
  for (int k = 0; k < n_sep; ++k) {
    hist.pulse_index.push_back(k);
    hist.coincidences.push_back(coincidences[k]);
    // accidental background-background coincidences, as a dark-box reference
    // measured with the emitter line detuned would report them
    const double pairs = (k == 0 ? 1.0 : 2.0) * (spec.train_length - k);
    hist.background.push_back(spec.background_prob * spec.background_prob * pairs *
                              spec.n_trains);
  }
  return hist;
}

G2Result g2_analyze(const G2Histogram& histogram, G2Model model) {
  histogram.validate();

  std::vector<int> ks;
  std::vector<double> cs, bs;
  double c_zero = 0.0, b_zero = 0.0;
  for (size_t i = 0; i < histogram.pulse_index.size(); ++i) {
    const int k = std::abs(histogram.pulse_index[i]);
    const double b = histogram.background.empty() ? 0.0 : histogram.background[i];
    if (k == 0) {
      c_zero = histogram.coincidences[i];
      b_zero = b;
    } else {
      ks.push_back(k);
      cs.push_back(histogram.coincidences[i]);
      bs.push_back(b);
    }
  }
  if (ks.size() < 3) throw validation_error("g2_analyze: need >= 3 nonzero separations");

  const int train = histogram.train_length;
  const auto tri = [train](int k) {
    return train > 0 ? double(train - k) / double(train) : 1.0;
  };

  const auto fit_plateau = [&](const std::vector<double>& counts, bool bunching) {
    const auto residuals = [&](const Eigen::VectorXd& p) {
      Eigen::VectorXd r(counts.size());
      for (size_t i = 0; i < counts.size(); ++i) {
        const double envelope =
            bunching ? 1.0 + p(1) * std::exp(-ks[i] / p(2)) : 1.0;
        const double m = p(0) * tri(ks[i]) * envelope;
        r(i) = (m - counts[i]) / std::sqrt(std::max(counts[i], 1.0));
      }
      return r;
    };
    double far = 0.0;
    int n_far = 0;
    for (size_t i = 0; i < counts.size(); ++i)
      if (ks[i] >= ks.back() / 2) { far += counts[i] / tri(ks[i]); ++n_far; }
    const double plateau_seed = n_far > 0 ? far / n_far : 1.0;
    if (!(plateau_seed > 0.0)) throw numeric_error("g2_analyze: zero plateau");

    Eigen::VectorXd p0(bunching ? 3 : 1);
    FitOptions opt;
    if (bunching) {
      p0 << plateau_seed, 0.3, 5.0;
      opt.lower_bounds = Eigen::Vector3d(1e-12, 0.0, 0.3);
      opt.upper_bounds = Eigen::Vector3d(1e30, 100.0, 1e4);
    } else {
      p0 << plateau_seed;
      opt.lower_bounds = Eigen::VectorXd::Constant(1, 1e-12);
      opt.upper_bounds = Eigen::VectorXd::Constant(1, 1e30);
    }
    return fit_least_squares(residuals, p0, opt);
  };

  const bool bunching = model == G2Model::bunching;
  const FitResult fit = fit_plateau(cs, bunching);
  const double plateau = fit.params(0);
  const double amp = bunching ? fit.params(1) : 0.0;
  if (!(plateau > 0.0)) throw numeric_error("g2_analyze: zero plateau");

  G2Result out;
  out.plateau = plateau;
  out.bunching_amplitude = amp;
  out.bunching_amplitude_err = bunching ? fit.uncertainties(1) : 0.0;
  out.bunching_decay_pulses = bunching ? fit.params(2) : 0.0;
  out.reduced_chi2 = fit.reduced_chi2();

  // The folded histogram holds both time orders in every k > 0 bin but only
  // the single same-pulse combination at k = 0, so the uncorrelated zero-bin
  // expectation is half the fitted k -> 0 plateau.
  const double expected_zero = 0.5 * plateau * (1.0 + amp);
  out.g2_zero = c_zero / expected_zero;
  const double rel_fit = fit.uncertainties(0) / plateau;
  out.g2_zero_err = out.g2_zero == 0.0
                        ? std::sqrt(1.0) / expected_zero
                        : out.g2_zero * std::sqrt(std::max(c_zero, 1.0) / (c_zero * c_zero) +
                                                  rel_fit * rel_fit);

  // background correction: subtract the measured background everywhere, refit
  std::vector<double> cs_corr(cs.size());
  for (size_t i = 0; i < cs.size(); ++i) cs_corr[i] = std::max(cs[i] - bs[i], 0.0);
  const FitResult fit_corr = fit_plateau(cs_corr, bunching);
  const double plateau_corr = fit_corr.params(0);
  const double amp_corr = bunching ? fit_corr.params(1) : 0.0;
  const double expected_zero_corr = 0.5 * plateau_corr * (1.0 + amp_corr);
  const double c_zero_corr = std::max(c_zero - b_zero, 0.0);
  out.g2_zero_corrected = c_zero_corr / expected_zero_corr;
  const double rel_fit_corr = fit_corr.uncertainties(0) / plateau_corr;
  out.g2_zero_corrected_err =
      out.g2_zero_corrected == 0.0
          ? 1.0 / expected_zero_corr
          : out.g2_zero_corrected *
                std::sqrt(std::max(c_zero, 1.0) / (c_zero_corr * c_zero_corr) +
                          rel_fit_corr * rel_fit_corr);
  return out;
}

// --- decay synth -------------------------------------------------------------------

DecayHistogram synth_decay(double counts_per_pulse, double tau_ns, long long n_pulses,
                           double bin_width_ns, double t_max_ns, double mask_ns,
                           double background_per_bin, uint64_t seed) {
  if (!(counts_per_pulse > 0.0) || !(tau_ns > 0.0))
    throw validation_error("synth_decay: need positive rate and lifetime");
  Rng rng(seed);
  DecayHistogram hist;
  hist.bin_width_ns = bin_width_ns;
  hist.n_pulses = n_pulses;
  const int n_bins = static_cast<int>(t_max_ns / bin_width_ns);
  hist.t_ns.resize(n_bins);
  hist.counts.assign(n_bins, 0.0);
  for (int b = 0; b < n_bins; ++b) hist.t_ns[b] = (b + 0.5) * bin_width_ns;

  const long long n_photons = rng.poisson(counts_per_pulse * n_pulses);
  for (long long i = 0; i < n_photons; ++i) {
    const double t = rng.exponential(tau_ns);
    const int b = static_cast<int>(t / bin_width_ns);
    if (b >= 0 && b < n_bins) hist.counts[b] += 1.0;
  }
  if (background_per_bin > 0.0)
    for (int b = 0; b < n_bins; ++b)
      hist.counts[b] += static_cast<double>(rng.poisson(background_per_bin));
  for (int b = 0; b < n_bins; ++b)
    if (hist.t_ns[b] < mask_ns) hist.counts[b] = 0.0;
  return hist;
}

// --- HWP ---------------------------------------------------------------------------

HWPFitResult hwp_polarization_fit(std::span<const double> angles_deg,
                                  std::span<const double> counts, double background) {
  if (angles_deg.size() != counts.size())
    throw validation_error("hwp_polarization_fit: size mismatch");
  std::set<long long> distinct;
  for (double a : angles_deg) distinct.insert(llround(a * 1000.0));
  if (distinct.size() < 6)
    throw validation_error("hwp_polarization_fit: need >= 6 distinct angles");

  // offset + A sin^2(2(t - phi)) = c0 + c1 cos(4t) + c2 sin(4t): exact linear
  // least squares in (c0, c1, c2)
  const size_t n = angles_deg.size();
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd b(n), w(n);
  for (size_t i = 0; i < n; ++i) {
    const double rad = angles_deg[i] * M_PI / 180.0;
    design(i, 0) = 1.0;
    design(i, 1) = std::cos(4.0 * rad);
    design(i, 2) = std::sin(4.0 * rad);
    b(i) = counts[i] - background;
    w(i) = 1.0 / std::sqrt(std::max(counts[i], 1.0));
  }
  const Eigen::MatrixXd dw = w.asDiagonal() * design;
  const Eigen::VectorXd bw = w.asDiagonal() * b;
  const Eigen::MatrixXd normal = dw.transpose() * dw;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success || std::abs(normal.determinant()) < 1e-12)
    throw validation_error("hwp_polarization_fit: degenerate angle set");
  const Eigen::VectorXd c = ldlt.solve(dw.transpose() * bw);
  const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(3, 3));

  // c0 = offset + A/2, c1 = -(A/2) cos(4 phi), c2 = -(A/2) sin(4 phi)
  const double half_amp = std::hypot(c(1), c(2));
  HWPFitResult out;
  out.amplitude = 2.0 * half_amp;
  out.phase_deg = std::atan2(-c(2), -c(1)) / 4.0 * 180.0 / M_PI;
  out.offset = c(0) - half_amp;

  // propagate: d(amp) = 2 (c1 dc1 + c2 dc2)/|c|, phase from the orthogonal mix
  if (half_amp > 0.0) {
    const double u1 = c(1) / half_amp, u2 = c(2) / half_amp;
    out.amplitude_err = 2.0 * std::sqrt(u1 * u1 * cov(1, 1) + u2 * u2 * cov(2, 2) +
                                        2.0 * u1 * u2 * cov(1, 2));
    const double denom = 4.0 * half_amp;
    out.phase_err_deg = std::sqrt(u2 * u2 * cov(1, 1) + u1 * u1 * cov(2, 2) -
                                  2.0 * u1 * u2 * cov(1, 2)) /
                        denom * 180.0 / M_PI;
    out.offset_err = std::sqrt(cov(0, 0) + out.amplitude_err * out.amplitude_err / 4.0);
  }
  out.extinction_ratio = out.offset > 0.0
                             ? (out.offset + out.amplitude) / out.offset
                             : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace cavsim
