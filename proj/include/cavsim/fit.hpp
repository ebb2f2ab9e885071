#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cavsim/errors.hpp"

namespace cavsim {

/// Weighted residual vector r(p); the cost minimized is 0.5 * |r|^2.
using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
/// Optional analytic Jacobian dr/dp (rows = residuals, cols = parameters).
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

struct FitOptions {
  int max_iterations = 400;
  double ftol = 1e-12;        // relative cost decrease
  double xtol = 1e-12;        // relative step size
  double gtol = 1e-12;        // max |gradient| component
  double initial_damping = 1e-3;
  double jacobian_step = 1e-6;  // relative forward-difference step
  Eigen::VectorXd lower_bounds;  // empty = unbounded
  Eigen::VectorXd upper_bounds;
};

struct FitResult {
  std::vector<std::string> names;  // optional parameter labels
  Eigen::VectorXd params;
  Eigen::VectorXd uncertainties;   // sqrt of covariance diagonal
  Eigen::MatrixXd covariance;      // (J^T J)^-1 for unit-sigma weighted residuals
  double chi2 = 0.0;
  int n_points = 0;
  int n_iterations = 0;
  bool converged = false;
  std::vector<bool> at_bound;
  std::string message;

  int dof() const { return std::max(1, n_points - static_cast<int>(params.size())); }
  double reduced_chi2() const { return chi2 / dof(); }
  int index_of(const std::string& name) const;
  double value(const std::string& name) const;
  double sigma(const std::string& name) const;
};

/// Damped least squares with trust-region style damping control.  Cost is
/// non-increasing across accepted iterations; bounds are enforced by
/// projecting trial steps onto the box.
FitResult fit_least_squares(const ResidualFn& residuals, const Eigen::VectorXd& initial,
                            const FitOptions& options = {},
                            const JacobianFn& jacobian = nullptr);

/// Forward-difference Jacobian used when no analytic one is supplied.
Eigen::MatrixXd numeric_jacobian(const ResidualFn& residuals, const Eigen::VectorXd& params,
                                 const Eigen::VectorXd& residuals_at_params,
                                 double relative_step);

struct ExponentialFit {
  double amplitude = 0.0;
  double tau = 0.0;
  double amplitude_sigma = 0.0;
  double tau_sigma = 0.0;
  double chi2 = 0.0;
  int n_points = 0;
  bool converged = false;
};

/// Fit y = A exp(-t/tau) over t in [t_lo, t_hi] with per-point sigmas
/// (empty span = unit weights).  Seeded by a weighted log-linear regression,
/// polished by damped least squares with the analytic Jacobian.  With
/// model_weights the residuals are scaled by sqrt(model) instead of the given
/// sigmas, which removes the low-occupancy bias of Poisson histograms.
ExponentialFit fit_exponential(std::span<const double> t, std::span<const double> y,
                               std::span<const double> sigma, double t_lo, double t_hi,
                               bool model_weights = false);

/// Maximum-likelihood lifetime of an exponential observed through the window
/// [a, a + window]: inverts  E[t - a] = tau - window / (exp(window/tau) - 1).
/// mean_offset must lie in (0, window/2); the estimator is exact for a pure
/// exponential and free of binning and weighting bias.
double exp_tau_from_windowed_mean(double mean_offset, double window);

}  // namespace cavsim
