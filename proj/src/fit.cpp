#include "cavsim/fit.hpp"

#include <algorithm>
#include <cmath>

namespace cavsim {

int FitResult::index_of(const std::string& name) const {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  throw validation_error("FitResult: unknown parameter '" + name + "'");
}

double FitResult::value(const std::string& name) const { return params(index_of(name)); }
double FitResult::sigma(const std::string& name) const { return uncertainties(index_of(name)); }

Eigen::MatrixXd numeric_jacobian(const ResidualFn& residuals, const Eigen::VectorXd& params,
                                 const Eigen::VectorXd& r0, double relative_step) {
  const int n = static_cast<int>(params.size());
  Eigen::MatrixXd jac(r0.size(), n);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd p = params;
    const double step = (std::abs(p(j)) > 1e-12) ? relative_step * std::abs(p(j)) : relative_step;
    p(j) += step;
    jac.col(j) = (residuals(p) - r0) / step;
  }
  return jac;
}

namespace {

void project_to_box(Eigen::VectorXd& p, const FitOptions& opt) {
  if (opt.lower_bounds.size() == p.size())
    p = p.cwiseMax(opt.lower_bounds);
  if (opt.upper_bounds.size() == p.size())
    p = p.cwiseMin(opt.upper_bounds);
}

}  // namespace

FitResult fit_least_squares(const ResidualFn& residuals, const Eigen::VectorXd& initial,
                            const FitOptions& options, const JacobianFn& jacobian) {
  const int n_params = static_cast<int>(initial.size());
  if (n_params == 0) throw validation_error("fit_least_squares: no parameters");

  Eigen::VectorXd p = initial;
  project_to_box(p, options);

  Eigen::VectorXd r = residuals(p);
  if (!r.allFinite()) throw numeric_error("fit_least_squares: non-finite residuals at start");
  double cost = 0.5 * r.squaredNorm();

  double damping = options.initial_damping;
  FitResult result;
  result.n_points = static_cast<int>(r.size());

  bool converged = false;
  std::string message = "max iterations reached";
  int iter = 0;

  Eigen::MatrixXd jac;
  bool jac_fresh = false;
  for (; iter < options.max_iterations; ++iter) {
    if (!jac_fresh)
      jac = jacobian ? jacobian(p) : numeric_jacobian(residuals, p, r, options.jacobian_step);
    jac_fresh = false;

    const Eigen::VectorXd gradient = jac.transpose() * r;
    if (gradient.lpNorm<Eigen::Infinity>() < options.gtol) {
      converged = true;
      message = "gradient tolerance";
      break;
    }

    const Eigen::MatrixXd hessian = jac.transpose() * jac;
    // Marquardt scaling: damp each direction relative to its own curvature.
    Eigen::VectorXd diag = hessian.diagonal().cwiseMax(1e-30);

    bool accepted = false;
    for (int tries = 0; tries < 50 && !accepted; ++tries) {
      Eigen::MatrixXd damped = hessian;
      damped.diagonal() += damping * diag;
      Eigen::VectorXd step = damped.ldlt().solve(-gradient);
      Eigen::VectorXd p_try = p + step;
      project_to_box(p_try, options);

      Eigen::VectorXd r_try = residuals(p_try);
      const double cost_try = r_try.allFinite() ? 0.5 * r_try.squaredNorm()
                                                : std::numeric_limits<double>::infinity();
      if (cost_try < cost) {
        const double rel_step = (p_try - p).norm() / std::max(p.norm(), 1e-30);
        const double rel_decrease = (cost - cost_try) / std::max(cost, 1e-300);
        p = p_try;
        r = r_try;
        cost = cost_try;
        damping = std::max(damping * 0.3, 1e-14);
        accepted = true;
        if (rel_decrease < options.ftol || rel_step < options.xtol) {
          converged = true;
          message = rel_decrease < options.ftol ? "cost tolerance" : "step tolerance";
        }
      } else {
        damping *= 4.0;
        if (damping > 1e16) break;
      }
    }
    if (converged) { ++iter; break; }
    if (!accepted) {
      converged = true;  // no downhill direction left at machine scale
      message = "damping limit (stationary point)";
      break;
    }
  }

  result.params = p;
  result.chi2 = 2.0 * cost;
  result.n_iterations = iter;
  result.converged = converged;
  result.message = message;

  // Covariance from the final Jacobian; residuals are assumed pre-weighted
  // by 1/sigma so (J^T J)^-1 is the parameter covariance.
  jac = jacobian ? jacobian(p) : numeric_jacobian(residuals, p, r, options.jacobian_step);
  Eigen::MatrixXd hessian = jac.transpose() * jac;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    result.covariance = ldlt.solve(Eigen::MatrixXd::Identity(n_params, n_params));
  } else {
    // Fall back to a pseudo-inverse for degenerate directions.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(hessian, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-12);
    result.covariance = svd.solve(Eigen::MatrixXd::Identity(n_params, n_params));
  }
  // Symmetrize against round-off.
  result.covariance = 0.5 * (result.covariance + result.covariance.transpose()).eval();
  result.uncertainties = result.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();

  result.at_bound.assign(n_params, false);
  for (int j = 0; j < n_params; ++j) {
    const double scale = std::max(std::abs(p(j)), 1.0e-12);
    if (options.lower_bounds.size() == p.size() &&
        std::abs(p(j) - options.lower_bounds(j)) < 1e-9 * scale)
      result.at_bound[j] = true;
    if (options.upper_bounds.size() == p.size() &&
        std::abs(p(j) - options.upper_bounds(j)) < 1e-9 * scale)
      result.at_bound[j] = true;
  }
  return result;
}

ExponentialFit fit_exponential(std::span<const double> t, std::span<const double> y,
                               std::span<const double> sigma, double t_lo, double t_hi,
                               bool model_weights) {
  if (t.size() != y.size()) throw validation_error("fit_exponential: size mismatch");
  if (!sigma.empty() && sigma.size() != t.size())
    throw validation_error("fit_exponential: sigma size mismatch");

  std::vector<double> ts, ys, ws;
  for (size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_lo || t[i] > t_hi) continue;
    ts.push_back(t[i]);
    ys.push_back(y[i]);
    ws.push_back(sigma.empty() ? 1.0 : sigma[i]);
  }
  if (ts.size() < 3) throw validation_error("fit_exponential: fewer than 3 points in window");

  // Weighted log-linear seed on the positive samples: ln y = ln A - t/tau,
  // weighting each log point by y (Poisson-style).
  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  for (size_t i = 0; i < ts.size(); ++i) {
    if (!(ys[i] > 0.0)) continue;
    const double w = ys[i];
    const double ly = std::log(ys[i]);
    sw += w;
    swx += w * ts[i];
    swy += w * ly;
    swxx += w * ts[i] * ts[i];
    swxy += w * ts[i] * ly;
  }
  double tau0 = 10.0, a0 = 1.0;
  const double det = sw * swxx - swx * swx;
  if (sw > 0.0 && std::abs(det) > 1e-30) {
    const double slope = (sw * swxy - swx * swy) / det;
    const double intercept = (swy - slope * swx) / sw;
    if (slope < 0.0) tau0 = -1.0 / slope;
    a0 = std::exp(intercept);
  }

  const int n = static_cast<int>(ts.size());
  // The model-weight floor scales with the amplitude so per-pulse curves and
  // absolute count histograms are treated alike.
  const auto weight_at = [&](double model, double amplitude, int i) {
    return model_weights ? std::sqrt(std::max(model, 1e-3 * std::abs(amplitude) + 1e-300))
                         : ws[i];
  };
  const auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) {
      const double m = p(0) * std::exp(-ts[i] / p(1));
      r(i) = (m - ys[i]) / weight_at(m, p(0), i);
    }
    return r;
  };
  const auto jacobian = [&](const Eigen::VectorXd& p) {
    // treat the weight as slowly varying (Pearson-style) in the derivative
    Eigen::MatrixXd j(n, 2);
    for (int i = 0; i < n; ++i) {
      const double e = std::exp(-ts[i] / p(1));
      const double w = weight_at(p(0) * e, p(0), i);
      j(i, 0) = e / w;
      j(i, 1) = p(0) * e * ts[i] / (p(1) * p(1)) / w;
    }
    return j;
  };

  Eigen::VectorXd p0(2);
  p0 << a0, tau0;
  FitOptions opt;
  opt.max_iterations = 100;
  opt.lower_bounds = Eigen::Vector2d(0.0, 1e-6);
  opt.upper_bounds = Eigen::Vector2d(1e30, 1e6);
  const FitResult fit = fit_least_squares(residuals, p0, opt, jacobian);

  ExponentialFit out;
  out.amplitude = fit.params(0);
  out.tau = fit.params(1);
  out.amplitude_sigma = fit.uncertainties(0);
  out.tau_sigma = fit.uncertainties(1);
  out.chi2 = fit.chi2;
  out.n_points = n;
  out.converged = fit.converged;
  return out;
}

double exp_tau_from_windowed_mean(double mean_offset, double window) {
  if (!(window > 0.0)) throw validation_error("exp_tau_from_windowed_mean: window must be > 0");
  if (!(mean_offset > 0.0) || mean_offset >= window / 2.0)
    throw numeric_error("exp_tau_from_windowed_mean: mean offset outside (0, window/2)");
  const auto g = [window](double tau) {
    const double x = window / tau;
    // guard the overflow region; for x > 700 the correction term vanishes
    return x > 700.0 ? tau : tau - window / std::expm1(x);
  };
  double lo = 1e-4 * window, hi = 1e4 * window;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < mean_offset ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace cavsim
