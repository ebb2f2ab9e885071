#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cavsim/layered_cavity.hpp"
#include "cavsim/presets.hpp"

using namespace cavsim;

namespace {

CavityGeometry bare_cavity(double air_gap_um) {
  CavityGeometry g = demo_geometry();
  g.air_gap_um = air_gap_um;
  g.diamond = {1.0, 1.0, "none"};          // 1 nm of index-matched nothing
  g.fiber_mirror_diameter_um = 1000.0;     // no clipping
  g.fiber_roc_um = 2000.0;
  return g;
}

double total_mirror_loss(const CavityGeometry& g) {
  return (g.flat_mirror.transmission_ppm + g.flat_mirror.loss_ppm +
          g.fiber_mirror.transmission_ppm + g.fiber_mirror.loss_ppm) *
         1e-6;
}

}  // namespace

TEST_CASE("bare two-mirror cavity: FSR, finesse and linewidth consistency") {
  const CavityGeometry g = bare_cavity(7.3);
  const std::vector<Resonance> res = find_resonances(g, 440.0, 500.0);
  REQUIRE(res.size() >= 2);

  const double optical_nm = g.air_gap_um * 1e3 + 1.0;
  const double fsr_expected = kSpeedOfLight_nm_THz / (2.0 * optical_nm);
  for (size_t i = 0; i + 1 < res.size(); ++i) {
    const double fsr = res[i + 1].frequency_thz - res[i].frequency_thz;
    CHECK(fsr == doctest::Approx(fsr_expected).epsilon(1e-3));
  }
  CHECK(std::is_sorted(res.begin(), res.end(), [](const Resonance& a, const Resonance& b) {
    return a.frequency_thz < b.frequency_thz;
  }));

  // finesse from the fitted linewidth vs finesse from the round-trip loss
  const double finesse_loss = kTwoPi / total_mirror_loss(g);
  for (const Resonance& r : res) {
    CHECK(r.finesse == doctest::Approx(finesse_loss).epsilon(0.02));
    const double fsr_ghz = ghz_from_thz(fsr_expected);
    CHECK(r.finesse == doctest::Approx(fsr_ghz / r.kappa_ghz).epsilon(0.02));
  }
}

TEST_CASE("membrane cavity has a fundamental resonance near 470.4 THz") {
  const CavityGeometry g = demo_geometry();
  const std::vector<Resonance> res = find_resonances(g, 465.0, 476.0);
  REQUIRE(!res.empty());

  double best = 1e9;
  for (const Resonance& r : res) best = std::min(best, std::abs(r.frequency_thz - 470.4));
  CHECK(best < 0.5 * fsr_estimate_thz(g));

  for (const Resonance& r : res) {
    CHECK(r.kappa_ghz > 0.0);
    CHECK(r.finesse > 0.0);
    CHECK(r.mode_character >= 0.0);
    CHECK(r.mode_character <= 1.0);
  }
}

TEST_CASE("empty window returns no resonances without error") {
  const CavityGeometry g = bare_cavity(7.3);
  // FSR ~ 20.5 THz with modes at 451.6 and 472.2; between them is empty
  const std::vector<Resonance> res = find_resonances(g, 455.0, 464.0);
  CHECK(res.empty());
}

TEST_CASE("clipping loss: limits and numeric disk-integration oracle") {
  CavityGeometry g = demo_geometry();

  SUBCASE("infinite mirror: no clipping") {
    g.fiber_mirror_diameter_um = 1e6;
    CHECK(clipping_loss(g, 2.0) == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("diameter equal to waist") {
    g.fiber_mirror_diameter_um = 2.0;
    CHECK(clipping_loss(g, 2.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  }

  SUBCASE("matches the gaussian power falling outside the mirror disk") {
    // numerically integrate |E|^2 ~ exp(-2 r^2 / w^2) outside radius d/2
    const double w = 1.7;
    for (const double d : {1.0, 2.5, 4.0}) {
      g.fiber_mirror_diameter_um = d;
      const double a = d / 2.0;
      const int n = 400000;
      const double r_max = 40.0 * w;
      double outside = 0.0, total = 0.0;
      const double dr = r_max / n;
      for (int i = 0; i < n; ++i) {
        const double r = (i + 0.5) * dr;
        const double val = std::exp(-2.0 * r * r / (w * w)) * r * dr;
        total += val;
        if (r > a) outside += val;
      }
      CHECK(clipping_loss(g, w) == doctest::Approx(outside / total).epsilon(1e-3));
    }
  }

  SUBCASE("monotone in waist, antitone in diameter") {
    g.fiber_mirror_diameter_um = 5.0;
    CHECK(clipping_loss(g, 2.0) < clipping_loss(g, 2.5));
    CavityGeometry g2 = g;
    g2.fiber_mirror_diameter_um = 6.0;
    CHECK(clipping_loss(g2, 2.0) < clipping_loss(g, 2.0));
  }
}

TEST_CASE("dispersion diagram: air-mode limit of a vanishing membrane") {
  CavityGeometry g = demo_geometry();
  g.diamond.thickness_nm = 1.0;  // membrane removed
  const std::vector<double> gaps{7.3};
  const std::vector<DispersionPoint> table = dispersion_diagram(g, gaps, 430.0, 500.0);
  REQUIRE(table.size() >= 3);
  const double fsr_air = kSpeedOfLight_nm_THz / (2.0 * g.air_gap_um * 1e3);
  for (size_t i = 0; i + 1 < table.size(); ++i) {
    const double fsr = table[i + 1].resonance.frequency_thz - table[i].resonance.frequency_thz;
    CHECK(fsr == doctest::Approx(fsr_air).epsilon(5e-3));
  }
}

TEST_CASE("dispersion diagram: avoided crossings and branch monotonicity") {
  const CavityGeometry g = demo_geometry();
  std::vector<double> gaps;
  for (double gap = 6.9; gap <= 7.351; gap += 0.025) gaps.push_back(gap);
  const std::vector<DispersionPoint> table = dispersion_diagram(g, gaps, 466.0, 475.0);
  REQUIRE(table.size() > gaps.size());  // more than one branch present

  // adjacent branches never touch
  double min_separation = 1e9;
  for (const double gap : gaps) {
    std::vector<double> freqs;
    for (const DispersionPoint& p : table)
      if (p.air_gap_um == gap) freqs.push_back(p.resonance.frequency_thz);
    for (size_t i = 0; i + 1 < freqs.size(); ++i)
      min_separation = std::min(min_separation, freqs[i + 1] - freqs[i]);
  }
  CHECK(min_separation > 0.0);

  // a branch tracked by nearest continuation moves down in frequency as the
  // cavity gets longer (the gap steps are small enough to keep it in window)
  std::vector<double> branch;
  for (const DispersionPoint& p : table)
    if (p.air_gap_um == gaps.front()) branch.push_back(p.resonance.frequency_thz);
  double nu = branch[branch.size() / 2];
  for (size_t k = 1; k + 1 < gaps.size(); ++k) {
    double best = 1e18, chosen = nu;
    for (const DispersionPoint& p : table) {
      if (p.air_gap_um != gaps[k]) continue;
      const double d = std::abs(p.resonance.frequency_thz - nu);
      if (d < best) { best = d; chosen = p.resonance.frequency_thz; }
    }
    if (std::abs(chosen - nu) > 2.0) break;  // branch left the window
    CHECK(chosen < nu);
    nu = chosen;
  }

  // mode character spans more air-like and more diamond-like branches
  double lo = 1.0, hi = 0.0;
  for (const DispersionPoint& p : table) {
    lo = std::min(lo, p.resonance.mode_character);
    hi = std::max(hi, p.resonance.mode_character);
  }
  CHECK(hi > 0.5);
  CHECK(lo < 0.3);
}

TEST_CASE("avoided crossings: positive splitting, monotone in interface coupling") {
  // Sweep the membrane index at fixed optical thickness n*d so the mode combs
  // stay put and only the interface changes.  The splitting at closest
  // approach is set by the photon exchange between the air and diamond
  // sub-cavities, i.e. by the interface transmission: a higher index contrast
  // reflects more, couples the sub-cavities less, and narrows the gap.
  const auto crossing_gap = [](double n_d) {
    CavityGeometry g = demo_geometry();
    g.flat_mirror.transmission_ppm = 5000.0;
    g.fiber_mirror.transmission_ppm = 5000.0;
    g.diamond.refractive_index = n_d;
    g.diamond.thickness_nm = 2.41 * 5800.0 / n_d;  // fixed optical thickness

    // Track one mode through half a wavelength of gap travel; its smallest
    // distance to a neighbor along the way is the crossing splitting.
    double tracked = 470.0;
    double min_sep = 1e18;
    for (double gap = 7.0; gap <= 7.33; gap += 0.012) {
      g.air_gap_um = gap;
      const std::vector<Resonance> res = find_resonances(g, 455.0, 486.0);
      if (res.size() < 3) continue;
      size_t nearest = 0;
      for (size_t i = 0; i < res.size(); ++i)
        if (std::abs(res[i].frequency_thz - tracked) <
            std::abs(res[nearest].frequency_thz - tracked))
          nearest = i;
      tracked = res[nearest].frequency_thz;
      if (nearest > 0)
        min_sep = std::min(min_sep, tracked - res[nearest - 1].frequency_thz);
      if (nearest + 1 < res.size())
        min_sep = std::min(min_sep, res[nearest + 1].frequency_thz - tracked);
    }
    return min_sep;
  };

  const double strong_contrast = crossing_gap(2.41);
  const double medium_contrast = crossing_gap(1.8);
  const double weak_contrast = crossing_gap(1.3);
  CHECK(strong_contrast > 0.0);
  CHECK(medium_contrast > strong_contrast);
  CHECK(weak_contrast > medium_contrast);
}

TEST_CASE("coupling rate: decoupled emitter, antinode optimum, field scaling") {
  const CavityGeometry g = demo_geometry();
  const std::vector<Resonance> res = find_resonances(g, 468.0, 473.0);
  REQUIRE(!res.empty());
  const Resonance r = res.front();

  EmitterParams em = demo_emitter();
  em.xi = 0.0;
  CHECK(coupling_rate_g_optimal(g, r, em) == doctest::Approx(0.0));

  em.xi = 1.0;
  const double g_opt = coupling_rate_g_optimal(g, r, em);
  CHECK(g_opt > 0.0);

  // optimal depth beats a grid of other depths
  for (double depth = 100.0; depth < g.diamond.thickness_nm; depth += 250.0)
    CHECK(coupling_rate_g(g, r, em, depth) <= g_opt * (1.0 + 1e-9));

  // xi scales g linearly: halving xi quarters (F - 1) ~ g^2
  em.xi = 0.5;
  CHECK(coupling_rate_g_optimal(g, r, em) == doctest::Approx(0.5 * g_opt).epsilon(1e-12));

  em.xi = 1.0;
  CHECK_THROWS_AS(coupling_rate_g(g, r, em, -5.0), validation_error);
  CHECK_THROWS_AS(coupling_rate_g(g, r, em, g.diamond.thickness_nm + 5.0), validation_error);
}

TEST_CASE("detuning-to-length mapping: identity, inversion, slopes") {
  const CavityGeometry g = demo_geometry();
  const std::vector<Resonance> res = find_resonances(g, 468.0, 473.0);
  REQUIRE(!res.empty());
  const Resonance r = res.front();

  CHECK(detuning_to_length_nm(g, r, 0.0) == 0.0);

  for (const double delta : {-30.0, -5.0, 5.0, 30.0}) {
    const double len = detuning_to_length_nm(g, r, delta);
    CHECK(length_to_detuning_ghz(g, r, len) == doctest::Approx(delta).epsilon(1e-6));
  }

  // positive detuning = shorter cavity
  CHECK(detuning_to_length_nm(g, r, 10.0) < 0.0);

  // slope agrees with a finite difference of the tracked branch
  const double slope = dispersion_slope_ghz_per_nm(g, r);
  const double dlen = 0.5;
  const double fd = (length_to_detuning_ghz(g, r, dlen) - length_to_detuning_ghz(g, r, -dlen)) /
                    (2.0 * dlen);
  CHECK(slope == doctest::Approx(fd).epsilon(1e-3));

  CHECK_THROWS_AS(detuning_to_length_nm(g, r, 0.9 * ghz_from_thz(fsr_estimate_thz(g))),
                  validation_error);
}

TEST_CASE("bare air cavity: d(nu)/dL = -nu/L to 0.5%") {
  const CavityGeometry g = bare_cavity(7.3);
  const std::vector<Resonance> res = find_resonances(g, 460.0, 480.0);
  REQUIRE(!res.empty());
  const Resonance r = res.front();
  const double slope = dispersion_slope_ghz_per_nm(g, r);
  const double expected = -ghz_from_thz(r.frequency_thz) / (g.air_gap_um * 1e3 + 1.0);
  CHECK(slope == doctest::Approx(expected).epsilon(5e-3));
}

TEST_CASE("geometry validation") {
  CavityGeometry g = demo_geometry();
  g.air_gap_um = -1.0;
  CHECK_THROWS_AS(g.validate(), validation_error);
  g = demo_geometry();
  g.fiber_roc_um = 3.0;  // shorter than the gap: unstable
  CHECK_THROWS_AS(g.validate(), validation_error);
  g = demo_geometry();
  g.flat_mirror.transmission_ppm = 0.0;
  CHECK_THROWS_AS(g.validate(), validation_error);
}
