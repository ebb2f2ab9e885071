#include "cavsim/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace cavsim {

double GaussHermiteRule::integrate(const std::function<double(double)>& f) const {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < nodes.size(); ++i) sum += weights(i) * f(nodes(i));
  return sum;
}

double GaussHermiteRule::gaussian_expectation(const std::function<double(double)>& h, double mean,
                                              double sigma) const {
  // E[h(X)], X ~ N(mean, sigma^2):  (1/sqrt(pi)) sum w_i h(mean + sqrt(2) sigma x_i)
  const double root2sigma = std::sqrt(2.0) * sigma;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < nodes.size(); ++i)
    sum += weights(i) * h(mean + root2sigma * nodes(i));
  return sum / std::sqrt(M_PI);
}

namespace {

GaussHermiteRule build_rule(int order) {
  if (order < 1) throw validation_error("gauss_hermite: order must be >= 1");
  // Jacobi matrix of the Hermite recurrence: zero diagonal, off-diagonal
  // sqrt(k/2).  Eigenvalues are the nodes; weights follow from the first
  // eigenvector components.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double off = std::sqrt(k / 2.0);
    jacobi(k, k - 1) = off;
    jacobi(k - 1, k) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  if (solver.info() != Eigen::Success)
    throw numeric_error("gauss_hermite: eigen decomposition failed");

  GaussHermiteRule rule;
  rule.nodes = solver.eigenvalues();
  rule.weights.resize(order);
  const double mu0 = std::sqrt(M_PI);  // integral of the weight exp(-x^2)
  for (int i = 0; i < order; ++i) {
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights(i) = mu0 * v0 * v0;
  }
  return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite(int order) {
  static std::map<int, GaussHermiteRule> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, build_rule(order)).first;
  return it->second;
}

double trapezoid_expectation(const std::function<double(double)>& h,
                             const std::function<double(double)>& density, double center,
                             double span, int n_points) {
  if (n_points < 3) throw validation_error("trapezoid_expectation: need at least 3 points");
  if (!(span > 0.0)) throw validation_error("trapezoid_expectation: span must be > 0");
  const double dx = 2.0 * span / (n_points - 1);
  double sum = 0.0, norm = 0.0;
  for (int i = 0; i < n_points; ++i) {
    const double x = center - span + i * dx;
    const double w = (i == 0 || i == n_points - 1) ? 0.5 : 1.0;
    const double d = density(x);
    sum += w * d * h(x) * dx;
    norm += w * d * dx;
  }
  if (!(norm > 0.0)) throw numeric_error("trapezoid_expectation: density integrates to zero");
  return sum / norm;
}

}  // namespace cavsim
