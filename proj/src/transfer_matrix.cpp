#include "cavsim/transfer_matrix.hpp"

#include <cmath>

namespace cavsim {

namespace {

// Transfer matrix from scattering parameters (r_l, r_r seen from the left and
// right, shared t):  M = (1/t) [[1, -r_r], [r_l, t^2 - r_l r_r]].
Matrix2c from_scattering(Complex r_left, Complex r_right, Complex t) {
  Matrix2c m;
  m << Complex(1.0, 0.0), -r_right, r_left, t * t - r_left * r_right;
  return m / t;
}

}  // namespace

Matrix2c interface_matrix(double n_left, double n_right) {
  const double r = (n_left - n_right) / (n_left + n_right);
  const double t = 2.0 * std::sqrt(n_left * n_right) / (n_left + n_right);
  return from_scattering(Complex(r, 0.0), Complex(-r, 0.0), Complex(t, 0.0));
}

Matrix2c propagation_matrix(double refractive_index, double thickness_nm, double freq_thz) {
  const double phase = kTwoPi * refractive_index * thickness_nm * freq_thz / kSpeedOfLight_nm_THz;
  Matrix2c m = Matrix2c::Zero();
  m(0, 0) = std::exp(Complex(0.0, -phase));
  m(1, 1) = std::exp(Complex(0.0, phase));
  return m;
}

Matrix2c lumped_mirror_matrix(double transmission, double loss) {
  if (!(transmission > 0.0) || loss < 0.0 || transmission + loss >= 1.0)
    throw validation_error("lumped mirror requires 0 < T and 0 <= L and T + L < 1");
  const double rho = std::sqrt(1.0 - transmission - loss);
  const double tau = std::sqrt(transmission);
  return from_scattering(Complex(-rho, 0.0), Complex(-rho, 0.0), Complex(tau, 0.0));
}

ReflectTransmit amplitudes_from_matrix(const Matrix2c& m) {
  return {m(1, 0) / m(0, 0), Complex(1.0, 0.0) / m(0, 0)};
}

namespace {

Matrix2c stack_matrix(std::span<const Layer> stack, double freq_thz, double n_in, double n_out) {
  if (!(freq_thz > 0.0)) throw validation_error("frequency must be > 0");
  for (const Layer& layer : stack) layer.validate();

  Matrix2c m = Matrix2c::Identity();
  double n_prev = n_in;
  for (const Layer& layer : stack) {
    m = m * interface_matrix(n_prev, layer.refractive_index);
    m = m * propagation_matrix(layer.refractive_index, layer.thickness_nm, freq_thz);
    n_prev = layer.refractive_index;
  }
  m = m * interface_matrix(n_prev, n_out);
  return m;
}

}  // namespace

ReflectTransmit characteristic_matrix(std::span<const Layer> stack, double freq_thz,
                                      double n_in, double n_out) {
  if (!(n_in >= 1.0) || !(n_out >= 1.0))
    throw validation_error("boundary indices must be >= 1");
  ReflectTransmit rt = amplitudes_from_matrix(stack_matrix(stack, freq_thz, n_in, n_out));
  // Undo the power normalization: field amplitudes carry 1/sqrt(n).
  rt.t *= std::sqrt(n_in / n_out);
  return rt;
}

ReflectTransmit characteristic_matrix_reverse(std::span<const Layer> stack, double freq_thz,
                                              double n_in, double n_out) {
  std::vector<Layer> reversed(stack.rbegin(), stack.rend());
  return characteristic_matrix(reversed, freq_thz, n_out, n_in);
}

}  // namespace cavsim
