#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cavsim/errors.hpp"
#include "cavsim/units.hpp"

namespace cavsim {

using Matrix2c = Eigen::Matrix2cd;
using Complex = std::complex<double>;

/// One homogeneous dielectric slab at normal incidence.
struct Layer {
  double thickness_nm = 0.0;
  double refractive_index = 1.0;
  std::string label;

  void validate() const {
    if (!(thickness_nm > 0.0))
      throw validation_error("Layer '" + label + "': thickness must be > 0");
    if (!(refractive_index >= 1.0))
      throw validation_error("Layer '" + label + "': refractive index must be >= 1");
  }
};

struct ReflectTransmit {
  Complex r;  // amplitude reflectance
  Complex t;  // amplitude transmittance
};

// Wave-transfer matrices act on power-normalized forward/backward amplitudes
// (u, v): [u_left, v_left]^T = M [u_right, v_right]^T.  Power normalization
// (field scaled by sqrt(n)) keeps |u|^2 a photon flux in every medium, so
// lumped power-scattering mirrors and Fresnel interfaces compose freely.

/// Fresnel interface n_left -> n_right in the power-normalized basis.
Matrix2c interface_matrix(double n_left, double n_right);

/// Free propagation through thickness d of index n at frequency nu.
Matrix2c propagation_matrix(double refractive_index, double thickness_nm, double freq_thz);

/// Lumped mirror with power transmission T and power loss L per bounce
/// (fractions, not ppm).  Reflection phase pi as seen from either side.
Matrix2c lumped_mirror_matrix(double transmission, double loss);

/// r, t of a composed structure from its total transfer matrix
/// (power-normalized amplitudes, left incidence).
ReflectTransmit amplitudes_from_matrix(const Matrix2c& m);

/// Amplitude r and t of a layer stack between semi-infinite media n_in and
/// n_out in the conventional field normalization, where energy conservation
/// for lossless stacks reads |r|^2 + (n_out/n_in)|t|^2 = 1.
ReflectTransmit characteristic_matrix(std::span<const Layer> stack, double freq_thz,
                                      double n_in, double n_out);

/// Same structure, right-side incidence (for reciprocity checks).
ReflectTransmit characteristic_matrix_reverse(std::span<const Layer> stack, double freq_thz,
                                              double n_in, double n_out);

}  // namespace cavsim
