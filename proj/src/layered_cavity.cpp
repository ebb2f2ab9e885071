#include "cavsim/layered_cavity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cavsim/emitter.hpp"
#include "cavsim/fit.hpp"

namespace cavsim {

void MirrorSpec::validate() const {
  if (kind == Kind::lumped) {
    const double total = (transmission_ppm + loss_ppm) * 1e-6;
    if (!(transmission_ppm > 0.0) || loss_ppm < 0.0 || total >= 1.0)
      throw validation_error("MirrorSpec: need 0 < T_ppm and 0 <= (T+L) < 1e6 ppm");
  } else {
    if (layers.empty()) throw validation_error("MirrorSpec: dbr_stack needs layers");
    for (const Layer& layer : layers) layer.validate();
    if (!(stopband_center_thz > 0.0))
      throw validation_error("MirrorSpec: dbr_stack needs a stopband center");
  }
}

double MirrorSpec::power_transmission(double freq_thz) const {
  if (kind == Kind::lumped) return transmission_ppm * 1e-6;
  const ReflectTransmit rt = characteristic_matrix(layers, freq_thz, 1.0, 1.0);
  return std::norm(rt.t);
}

void CavityGeometry::validate() const {
  flat_mirror.validate();
  fiber_mirror.validate();
  diamond.validate();
  if (!(air_gap_um > 0.0)) throw validation_error("CavityGeometry: air gap must be > 0");
  if (!(fiber_roc_um > air_gap_um))
    throw validation_error("CavityGeometry: fiber ROC must exceed the air gap (stability)");
  if (!(fiber_mirror_diameter_um > 0.0))
    throw validation_error("CavityGeometry: fiber mirror diameter must be > 0");
}

double fsr_estimate_thz(const CavityGeometry& geometry) {
  const double optical_nm =
      geometry.air_gap_um * 1e3 + geometry.diamond.refractive_index * geometry.diamond.thickness_nm;
  return kSpeedOfLight_nm_THz / (2.0 * optical_nm);
}

double kappa_estimate_ghz(const CavityGeometry& geometry, double freq_thz,
                          double extra_roundtrip_loss) {
  double loss = extra_roundtrip_loss;
  for (const MirrorSpec* m : {&geometry.flat_mirror, &geometry.fiber_mirror}) {
    if (m->kind == MirrorSpec::Kind::lumped) {
      loss += (m->transmission_ppm + m->loss_ppm) * 1e-6;
    } else {
      const ReflectTransmit rt = characteristic_matrix(m->layers, freq_thz, 1.0, 1.0);
      loss += 1.0 - std::norm(rt.r);
    }
  }
  return ghz_from_thz(fsr_estimate_thz(geometry)) * loss / kTwoPi;
}

double clipping_loss(const CavityGeometry& geometry, double waist_um) {
  if (!(waist_um > 0.0)) throw validation_error("clipping_loss: waist must be > 0");
  const double d = geometry.fiber_mirror_diameter_um;
  if (!(d > 0.0)) throw validation_error("clipping_loss: mirror diameter must be > 0");
  return std::exp(-d * d / (2.0 * waist_um * waist_um));
}

namespace {

// Reduced geometric length for Gaussian-mode optics: the diamond slab acts
// like thickness d/n for ray propagation.
double reduced_length_um(const CavityGeometry& g) {
  return g.air_gap_um + g.diamond.thickness_nm * 1e-3 / g.diamond.refractive_index;
}

}  // namespace

double mode_waist_um(const CavityGeometry& geometry, double freq_thz) {
  const double lambda_um = kSpeedOfLight_nm_THz / freq_thz * 1e-3;
  const double len = reduced_length_um(geometry);
  const double roc = geometry.fiber_roc_um;
  const double w0_sq = lambda_um / M_PI * std::sqrt(len * (roc - len));
  return std::sqrt(w0_sq);
}

double fiber_mode_waist_um(const CavityGeometry& geometry, double freq_thz) {
  const double lambda_um = kSpeedOfLight_nm_THz / freq_thz * 1e-3;
  const double len = reduced_length_um(geometry);
  const double roc = geometry.fiber_roc_um;
  const double wm_sq = lambda_um / M_PI * roc * std::sqrt(len / (roc - len));
  return std::sqrt(wm_sq);
}

// ---------------------------------------------------------------------------
// Structure assembly

namespace {

struct ElementSpec {
  enum class Kind { lumped, attenuator, interface, slab } kind;
  double a = 0.0;  // lumped: T; attenuator: per-pass power loss; interface: n_left; slab: n
  double b = 0.0;  // lumped: L; interface: n_right; slab: thickness_nm
  bool air_gap = false;
  bool diamond = false;
};

struct Assembly {
  std::vector<ElementSpec> elements;
};

Matrix2c element_matrix(const ElementSpec& e, double freq_thz) {
  switch (e.kind) {
    case ElementSpec::Kind::lumped:
      return lumped_mirror_matrix(e.a, e.b);
    case ElementSpec::Kind::attenuator: {
      Matrix2c m = Matrix2c::Zero();
      const double t = std::sqrt(1.0 - e.a);
      m(0, 0) = 1.0 / t;
      m(1, 1) = t;
      return m;
    }
    case ElementSpec::Kind::interface:
      return interface_matrix(e.a, e.b);
    case ElementSpec::Kind::slab:
      return propagation_matrix(e.a, e.b, freq_thz);
  }
  throw numeric_error("element_matrix: unreachable");
}

void append_dbr(Assembly& assembly, const std::vector<Layer>& cavity_side_first,
                double n_cavity, double n_outside, bool traverse_into_cavity) {
  // Elements are emitted in left-to-right traversal order.
  std::vector<Layer> ordered = cavity_side_first;
  double n_from = n_cavity;
  double n_to = n_outside;
  if (traverse_into_cavity) {  // mirror on the left: outside first
    std::reverse(ordered.begin(), ordered.end());
    std::swap(n_from, n_to);
  }
  double n_prev = n_from;
  for (const Layer& layer : ordered) {
    assembly.elements.push_back({ElementSpec::Kind::interface, n_prev, layer.refractive_index});
    assembly.elements.push_back({ElementSpec::Kind::slab, layer.refractive_index,
                                 layer.thickness_nm});
    n_prev = layer.refractive_index;
  }
  assembly.elements.push_back({ElementSpec::Kind::interface, n_prev, n_to});
}

Assembly build_assembly(const CavityGeometry& g, double freq_thz) {
  Assembly assembly;
  const double n_d = g.diamond.refractive_index;

  // Fiber mirror (left), with its clipping loss as a weak double-pass
  // attenuator right next to the reflection.
  if (g.fiber_mirror.kind == MirrorSpec::Kind::lumped) {
    assembly.elements.push_back({ElementSpec::Kind::lumped, g.fiber_mirror.transmission_ppm * 1e-6,
                                 g.fiber_mirror.loss_ppm * 1e-6});
  } else {
    append_dbr(assembly, g.fiber_mirror.layers, 1.0, 1.0, true);
  }
  const double clip = clipping_loss(g, fiber_mode_waist_um(g, freq_thz));
  if (clip > 1e-12)
    assembly.elements.push_back({ElementSpec::Kind::attenuator, clip / 2.0, 0.0});

  assembly.elements.push_back(
      {ElementSpec::Kind::slab, 1.0, g.air_gap_um * 1e3, /*air_gap=*/true, /*diamond=*/false});

  if (n_d != 1.0)
    assembly.elements.push_back({ElementSpec::Kind::interface, 1.0, n_d});
  assembly.elements.push_back(
      {ElementSpec::Kind::slab, n_d, g.diamond.thickness_nm, /*air_gap=*/false, /*diamond=*/true});

  if (g.flat_mirror.kind == MirrorSpec::Kind::lumped) {
    assembly.elements.push_back({ElementSpec::Kind::lumped, g.flat_mirror.transmission_ppm * 1e-6,
                                 g.flat_mirror.loss_ppm * 1e-6});
  } else {
    append_dbr(assembly, g.flat_mirror.layers, n_d, 1.0, false);
  }
  return assembly;
}

Matrix2c total_matrix(const Assembly& assembly, double freq_thz) {
  Matrix2c m = Matrix2c::Identity();
  for (const ElementSpec& e : assembly.elements) m = m * element_matrix(e, freq_thz);
  return m;
}

double transmission(const Assembly& assembly, double freq_thz) {
  return std::norm(1.0 / total_matrix(assembly, freq_thz)(0, 0));
}

struct FieldProfile {
  double energy_air = 0.0;      // sum of n |u+v|^2 dz over the air gap
  double energy_diamond = 0.0;  //   ... over the diamond
  double peak_field_diamond = 0.0;
  double peak_field_global = 0.0;
  double peak_depth_nm = 0.0;   // antinode position, measured from the flat mirror
  double energy_total_eps = 0.0;  // eps-weighted |E|^2 integral (nm units)
  std::vector<double> diamond_z_nm;     // depth from flat mirror
  std::vector<double> diamond_field;    // |u+v| at those depths
};

FieldProfile field_profile(const Assembly& assembly, double freq_thz) {
  // Suffix products give the (u, v) state at the left edge of every element
  // for unit transmitted amplitude; the overall scale cancels in every ratio.
  const size_t n = assembly.elements.size();
  std::vector<Eigen::Vector2cd> state_left(n + 1);
  state_left[n] = Eigen::Vector2cd(1.0, 0.0);
  for (size_t i = n; i-- > 0;)
    state_left[i] = element_matrix(assembly.elements[i], freq_thz) * state_left[i + 1];

  FieldProfile profile;
  double diamond_thickness = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const ElementSpec& e = assembly.elements[i];
    if (e.kind == ElementSpec::Kind::slab && e.diamond) diamond_thickness = e.b;
  }

  for (size_t i = 0; i < n; ++i) {
    const ElementSpec& e = assembly.elements[i];
    if (e.kind != ElementSpec::Kind::slab || !(e.air_gap || e.diamond)) continue;
    const double lambda_medium_nm = kSpeedOfLight_nm_THz / (freq_thz * e.a);
    const int steps = std::max(60, static_cast<int>(std::ceil(e.b / (lambda_medium_nm / 40.0))));
    const double dz = e.b / steps;
    const Eigen::Vector2cd left = state_left[i];
    for (int k = 0; k <= steps; ++k) {
      const double z = k * dz;
      // state at depth z inside the slab: propagate the left state rightward
      const double phase = kTwoPi * e.a * z * freq_thz / kSpeedOfLight_nm_THz;
      const Complex u = left(0) * std::exp(Complex(0.0, phase));
      const Complex v = left(1) * std::exp(Complex(0.0, -phase));
      const double field = std::abs(u + v) / std::sqrt(e.a);  // physical |E|
      const double eps_e2 = e.a * e.a * field * field;        // n^2 |E|^2
      const double weight = (k == 0 || k == steps) ? 0.5 : 1.0;
      if (e.air_gap) profile.energy_air += eps_e2 * weight * dz;
      if (e.diamond) profile.energy_diamond += eps_e2 * weight * dz;
      profile.energy_total_eps += eps_e2 * weight * dz;
      profile.peak_field_global = std::max(profile.peak_field_global, field);
      if (e.diamond) {
        const double depth = diamond_thickness - z;  // from the flat mirror
        profile.diamond_z_nm.push_back(depth);
        profile.diamond_field.push_back(field);
        if (field > profile.peak_field_diamond) {
          profile.peak_field_diamond = field;
          profile.peak_depth_nm = depth;
        }
      }
    }
  }
  return profile;
}

// Propagation state convention check happens in tests; here we only need
// ratios of |u+v| so the sign convention of the phase cancels.

double parabolic_vertex(double x0, double x1, double x2, double y0, double y1, double y2) {
  const double d1 = (y2 - y0) / (x2 - x0);
  const double d2 = ((y2 - y1) / (x2 - x1) - (y1 - y0) / (x1 - x0)) / (x2 - x0) * 2.0;
  if (d2 >= 0.0) return x1;  // not a maximum; keep the grid point
  return x1 - d1 / d2;
}

struct PeakFit {
  double center_thz = 0.0;
  double kappa_ghz = 0.0;
  double peak_transmission = 0.0;
};

PeakFit lorentzian_fit(const Assembly& assembly, double center_guess_thz, double kappa_guess_ghz,
                       double t_peak_guess) {
  PeakFit best;
  double center = center_guess_thz;
  double kappa_thz = kappa_guess_ghz * 1e-3;
  double peak = std::max(t_peak_guess, 1e-30);

  for (int round = 0; round < 3; ++round) {
    const int n_pts = 41;
    Eigen::VectorXd freq(n_pts), trans(n_pts);
    for (int i = 0; i < n_pts; ++i) {
      freq(i) = center + (i - (n_pts - 1) / 2.0) / ((n_pts - 1) / 2.0) * 3.0 * kappa_thz;
      trans(i) = transmission(assembly, freq(i));
    }
    const auto residuals = [&](const Eigen::VectorXd& p) {
      Eigen::VectorXd r(n_pts);
      const double half = p(2) / 2.0;
      for (int i = 0; i < n_pts; ++i) {
        const double d = freq(i) - p(1);
        r(i) = p(0) * half * half / (half * half + d * d) + p(3) - trans(i);
      }
      return r;
    };
    Eigen::VectorXd p0(4);
    p0 << peak, center, kappa_thz, 0.0;
    FitOptions opt;
    opt.max_iterations = 200;
    FitResult fit = fit_least_squares(residuals, p0, opt);
    if (!fit.converged || !(fit.params(2) > 0.0)) {
      std::ostringstream msg;
      msg << "resonance fit failed near " << center_guess_thz << " THz (peak T ~ "
          << t_peak_guess << ", kappa guess " << kappa_guess_ghz << " GHz)";
      throw numeric_error(msg.str());
    }
    peak = fit.params(0);
    center = fit.params(1);
    const double new_kappa = std::abs(fit.params(2));
    const bool settled = std::abs(new_kappa - kappa_thz) < 0.05 * kappa_thz;
    kappa_thz = new_kappa;
    if (settled) break;
  }
  best.center_thz = center;
  best.kappa_ghz = ghz_from_thz(kappa_thz);
  best.peak_transmission = peak;
  return best;
}

/// Locate the transmission maximum nearest to freq_guess by shrinking scans.
double track_peak_thz(const Assembly& assembly, double freq_guess_thz, double half_window_thz) {
  double center = freq_guess_thz;
  double half = half_window_thz;
  for (int round = 0; round < 4; ++round) {
    const int n_pts = 49;
    double best_f = center, best_t = -1.0;
    int best_i = -1;
    std::vector<double> fs(n_pts), ts(n_pts);
    for (int i = 0; i < n_pts; ++i) {
      fs[i] = center - half + 2.0 * half * i / (n_pts - 1);
      ts[i] = transmission(assembly, fs[i]);
      if (ts[i] > best_t) { best_t = ts[i]; best_f = fs[i]; best_i = i; }
    }
    if (best_i > 0 && best_i < n_pts - 1)
      best_f = parabolic_vertex(fs[best_i - 1], fs[best_i], fs[best_i + 1], ts[best_i - 1],
                                ts[best_i], ts[best_i + 1]);
    center = best_f;
    half /= 6.0;
  }
  return center;
}

double next_peak_above(const Assembly& assembly, double from_thz, double fsr_est_thz,
                       double kappa_est_thz) {
  const double lo = from_thz + 0.25 * fsr_est_thz;
  const double hi = from_thz + 1.75 * fsr_est_thz;
  const double step = std::max(kappa_est_thz / 5.0, (hi - lo) / 20000.0);
  double best_f = lo, best_t = -1.0;
  for (double f = lo; f <= hi; f += step) {
    const double t = transmission(assembly, f);
    if (t > best_t) { best_t = t; best_f = f; }
  }
  return track_peak_thz(assembly, best_f, 2.0 * step);
}

Resonance make_resonance(const CavityGeometry& geometry, const Assembly& assembly,
                         double center_guess_thz, double kappa_est_ghz, double t_peak,
                         double fsr_local_thz) {
  const PeakFit fit = lorentzian_fit(assembly, center_guess_thz, kappa_est_ghz, t_peak);
  Resonance res;
  res.frequency_thz = fit.center_thz;
  res.kappa_ghz = fit.kappa_ghz;
  res.finesse = ghz_from_thz(fsr_local_thz) / fit.kappa_ghz;

  const FieldProfile profile = field_profile(assembly, fit.center_thz);
  const double total = profile.energy_air + profile.energy_diamond;
  res.mode_character = total > 0.0 ? profile.energy_air / total : 0.0;
  res.field_at_emitter = profile.peak_field_global > 0.0
                             ? profile.peak_field_diamond / profile.peak_field_global
                             : 0.0;
  (void)geometry;
  return res;
}

}  // namespace

double cavity_transmission(const CavityGeometry& geometry, double freq_thz) {
  geometry.validate();
  if (!(freq_thz > 0.0)) throw validation_error("cavity_transmission: frequency must be > 0");
  return transmission(build_assembly(geometry, freq_thz), freq_thz);
}

std::vector<Resonance> find_resonances(const CavityGeometry& geometry, double freq_lo_thz,
                                       double freq_hi_thz) {
  geometry.validate();
  if (!(freq_lo_thz > 0.0) || !(freq_hi_thz > freq_lo_thz))
    throw validation_error("find_resonances: need 0 < lo < hi");

  const double center = 0.5 * (freq_lo_thz + freq_hi_thz);
  const Assembly assembly = build_assembly(geometry, center);
  const double clip = clipping_loss(geometry, fiber_mode_waist_um(geometry, center));
  const double kappa_est = kappa_estimate_ghz(geometry, center, clip);
  const double fsr_est = fsr_estimate_thz(geometry);

  const double step = kappa_est * 1e-3 / 10.0;
  const size_t n_pts = static_cast<size_t>((freq_hi_thz - freq_lo_thz) / step) + 2;
  if (n_pts > 3'000'000)
    throw validation_error("find_resonances: window too wide for the estimated linewidth");

  std::vector<double> trans(n_pts);
  for (size_t i = 0; i < n_pts; ++i)
    trans[i] = transmission(assembly, freq_lo_thz + i * step);

  std::vector<Resonance> resonances;
  std::vector<double> centers;
  for (size_t i = 1; i + 1 < n_pts; ++i) {
    if (trans[i] > trans[i - 1] && trans[i] >= trans[i + 1]) {
      const double f1 = freq_lo_thz + i * step;
      const double refined = parabolic_vertex(f1 - step, f1, f1 + step, trans[i - 1], trans[i],
                                              trans[i + 1]);
      centers.push_back(refined);
    }
  }

  for (size_t k = 0; k < centers.size(); ++k) {
    double fsr_local;
    if (k + 1 < centers.size())
      fsr_local = centers[k + 1] - centers[k];
    else if (k > 0)
      fsr_local = centers[k] - centers[k - 1];
    else
      fsr_local = next_peak_above(assembly, centers[k], fsr_est, kappa_est * 1e-3) - centers[k];
    const size_t idx = static_cast<size_t>((centers[k] - freq_lo_thz) / step);
    resonances.push_back(make_resonance(geometry, assembly, centers[k], kappa_est,
                                        trans[std::min(idx, n_pts - 1)], fsr_local));
  }
  std::sort(resonances.begin(), resonances.end(),
            [](const Resonance& a, const Resonance& b) { return a.frequency_thz < b.frequency_thz; });
  return resonances;
}

std::vector<DispersionPoint> dispersion_diagram(const CavityGeometry& geometry,
                                                std::span<const double> air_gaps_um,
                                                double freq_lo_thz, double freq_hi_thz) {
  if (air_gaps_um.empty()) throw validation_error("dispersion_diagram: empty air-gap grid");
  for (size_t i = 1; i < air_gaps_um.size(); ++i)
    if (!(air_gaps_um[i] > air_gaps_um[i - 1]))
      throw validation_error("dispersion_diagram: air-gap grid must be positive and increasing");

  std::vector<DispersionPoint> table;
  for (const double gap : air_gaps_um) {
    CavityGeometry g = geometry;
    g.air_gap_um = gap;
    for (const Resonance& res : find_resonances(g, freq_lo_thz, freq_hi_thz))
      table.push_back({gap, res});
  }
  return table;
}

double coupling_rate_g(const CavityGeometry& geometry, const Resonance& resonance,
                       const EmitterParams& emitter, double depth_nm) {
  geometry.validate();
  emitter.validate();
  if (depth_nm < 0.0 || depth_nm > geometry.diamond.thickness_nm)
    throw validation_error("coupling_rate_g: emitter must sit inside the diamond layer");

  const Assembly assembly = build_assembly(geometry, resonance.frequency_thz);
  const FieldProfile profile = field_profile(assembly, resonance.frequency_thz);
  if (!(profile.peak_field_diamond > 0.0))
    throw numeric_error("coupling_rate_g: degenerate field profile");

  // Field at the requested depth, interpolated on the sampled profile.
  double field = 0.0;
  {
    const auto& zs = profile.diamond_z_nm;
    const auto& fs = profile.diamond_field;
    double best_d = 1e300;
    for (size_t i = 0; i < zs.size(); ++i) {
      const double d = std::abs(zs[i] - depth_nm);
      if (d < best_d) { best_d = d; field = fs[i]; }
    }
  }
  const double standing_wave = field / profile.peak_field_diamond;

  // Effective mode volume, normalized to the diamond antinode.
  const double n_d = geometry.diamond.refractive_index;
  const double eps_peak = n_d * n_d * profile.peak_field_diamond * profile.peak_field_diamond;
  const double l_eff_m = profile.energy_total_eps / eps_peak * 1e-9;
  const double w0_m = mode_waist_um(geometry, resonance.frequency_thz) * 1e-6;
  const double volume_m3 = 0.5 * M_PI * w0_m * w0_m * l_eff_m;

  const double c = 2.99792458e8;
  const double lambda_m = c / (resonance.frequency_thz * 1e12);
  const double gamma_rad_ang = kTwoPi * emitter.gamma_rad_mhz * 1e6;  // 1/s
  const double g_ang = std::sqrt(3.0 * c * lambda_m * lambda_m * gamma_rad_ang /
                                 (8.0 * M_PI * n_d * n_d * n_d * volume_m3));
  return emitter.xi * standing_wave * g_ang / (kTwoPi * 1e6);
}

double coupling_rate_g_optimal(const CavityGeometry& geometry, const Resonance& resonance,
                               const EmitterParams& emitter) {
  const Assembly assembly = build_assembly(geometry, resonance.frequency_thz);
  const FieldProfile profile = field_profile(assembly, resonance.frequency_thz);
  return coupling_rate_g(geometry, resonance, emitter, profile.peak_depth_nm);
}

namespace {

double branch_frequency(const CavityGeometry& geometry, double air_gap_um, double freq_guess_thz,
                        double kappa_ghz) {
  CavityGeometry g = geometry;
  g.air_gap_um = air_gap_um;
  const Assembly assembly = build_assembly(g, freq_guess_thz);
  return track_peak_thz(assembly, freq_guess_thz, 12.0 * kappa_ghz * 1e-3);
}

}  // namespace

double dispersion_slope_ghz_per_nm(const CavityGeometry& geometry, const Resonance& resonance) {
  const double delta_nm = 0.05;
  const double f_plus = branch_frequency(geometry, geometry.air_gap_um + delta_nm * 1e-3,
                                         resonance.frequency_thz, resonance.kappa_ghz);
  const double f_minus = branch_frequency(geometry, geometry.air_gap_um - delta_nm * 1e-3,
                                          resonance.frequency_thz, resonance.kappa_ghz);
  return ghz_from_thz(f_plus - f_minus) / (2.0 * delta_nm);
}

double detuning_to_length_nm(const CavityGeometry& geometry, const Resonance& resonance,
                             double delta_ghz) {
  const double fsr_ghz = ghz_from_thz(fsr_estimate_thz(geometry));
  if (std::abs(delta_ghz) > 0.35 * fsr_ghz)
    throw validation_error("detuning_to_length: detuning beyond the monotone branch");
  if (delta_ghz == 0.0) return 0.0;

  const double target_thz = resonance.frequency_thz + delta_ghz * 1e-3;
  double slope = dispersion_slope_ghz_per_nm(geometry, resonance);
  double length_nm = delta_ghz / slope;
  for (int iter = 0; iter < 12; ++iter) {
    const double f = branch_frequency(geometry, geometry.air_gap_um + length_nm * 1e-3,
                                      resonance.frequency_thz + 1e-3 * slope * length_nm,
                                      resonance.kappa_ghz);
    const double err_ghz = ghz_from_thz(f - target_thz);
    if (std::abs(err_ghz) < 1e-7 * std::max(std::abs(delta_ghz), resonance.kappa_ghz)) break;
    length_nm -= err_ghz / slope;
  }
  return length_nm;
}

double length_to_detuning_ghz(const CavityGeometry& geometry, const Resonance& resonance,
                              double length_nm) {
  const double slope = dispersion_slope_ghz_per_nm(geometry, resonance);
  const double f = branch_frequency(geometry, geometry.air_gap_um + length_nm * 1e-3,
                                    resonance.frequency_thz + 1e-3 * slope * length_nm,
                                    resonance.kappa_ghz);
  return ghz_from_thz(f - resonance.frequency_thz);
}

}  // namespace cavsim
