#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cavsim/quadrature.hpp"

using namespace cavsim;

TEST_CASE("gauss-hermite integrates the weight and low moments exactly") {
  for (int order : {16, 32, 64, 128}) {
    const GaussHermiteRule& rule = gauss_hermite(order);
    CHECK(rule.integrate([](double) { return 1.0; }) ==
          doctest::Approx(std::sqrt(M_PI)).epsilon(1e-13));
    CHECK(rule.integrate([](double x) { return x; }) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rule.integrate([](double x) { return x * x; }) ==
          doctest::Approx(std::sqrt(M_PI) / 2.0).epsilon(1e-12));
  }
}

TEST_CASE("gaussian expectation: normalization and variance to 1e-8") {
  const GaussHermiteRule& rule = gauss_hermite(64);
  const double sigma = 0.18;
  CHECK(rule.gaussian_expectation([](double) { return 1.0; }, 0.0, sigma) ==
        doctest::Approx(1.0).epsilon(1e-12));
  const double second = rule.gaussian_expectation([](double x) { return x * x; }, 0.0, sigma);
  CHECK(second == doctest::Approx(sigma * sigma).epsilon(1e-8));
  const double mean = rule.gaussian_expectation([](double x) { return x; }, 0.37, sigma);
  CHECK(mean == doctest::Approx(0.37).epsilon(1e-10));
}

TEST_CASE("gaussian expectation of a smooth bounded function converges with order") {
  const auto h = [](double x) { return 1.0 / (1.0 + x * x); };
  const double ref = gauss_hermite(256).gaussian_expectation(h, 0.0, 1.1);
  const double v64 = gauss_hermite(64).gaussian_expectation(h, 0.0, 1.1);
  const double v128 = gauss_hermite(128).gaussian_expectation(h, 0.0, 1.1);
  CHECK(std::abs(v64 - ref) < 1e-3 * std::abs(ref));
  CHECK(std::abs(v128 - ref) < std::abs(v64 - ref) + 1e-15);
}

TEST_CASE("trapezoid fallback matches gauss-hermite for a gaussian density") {
  const double sigma = 0.5;
  const auto density = [sigma](double x) {
    return std::exp(-x * x / (2.0 * sigma * sigma)) / std::sqrt(2.0 * M_PI * sigma * sigma);
  };
  const auto h = [](double x) { return std::cos(x) + 2.0; };
  const double gh = gauss_hermite(64).gaussian_expectation(h, 0.0, sigma);
  const double trap = trapezoid_expectation(h, density, 0.0, 6.0 * sigma, 4001);
  CHECK(trap == doctest::Approx(gh).epsilon(1e-8));
}

TEST_CASE("invalid quadrature requests are rejected") {
  CHECK_THROWS_AS(gauss_hermite(0), validation_error);
  CHECK_THROWS_AS(trapezoid_expectation([](double) { return 1.0; },
                                        [](double) { return 1.0; }, 0.0, -1.0, 100),
                  validation_error);
}
