#pragma once

#include <functional>

#include <Eigen/Dense>

#include "cavsim/errors.hpp"

namespace cavsim {

/// Nodes and weights for integrals of exp(-x^2) f(x) over the real line.
struct GaussHermiteRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;

  /// Integral of exp(-x^2) f(x) dx.
  double integrate(const std::function<double(double)>& f) const;

  /// Expectation of h under a normal distribution N(mean, sigma^2).
  double gaussian_expectation(const std::function<double(double)>& h, double mean,
                              double sigma) const;
};

/// Golub-Welsch construction from the Hermite recurrence; cached per order.
const GaussHermiteRule& gauss_hermite(int order);

/// Trapezoid fallback for densities that are not Gaussian: expectation of h
/// under density f, integrated over [center - span, center + span].
double trapezoid_expectation(const std::function<double(double)>& h,
                             const std::function<double(double)>& density, double center,
                             double span, int n_points);

}  // namespace cavsim
