#pragma once

#include <random>

#include "risac/common.hpp"

namespace risac {

/// Uniform linear array at the base station. Only the spacing-to-wavelength
/// ratio d/lambda is observable in any formula; the default is the
/// half-wavelength layout.
struct ArrayConfig {
  int n_tx = 1;
  int n_rx = 1;
  double spacing_ratio = 0.5;

  void validate() const;
};

/// Placement and fading statistics of one user or eavesdropper link.
/// Distances in meters, azimuth in radians, ref_gain linear (channel gain at
/// the 1 m reference distance).
struct UserGeometry {
  double distance = 1.0;
  double azimuth = 0.0;
  double rician_factor = 0.0;
  double pathloss_exponent = 2.0;
  double ref_gain = 1.0;

  void validate() const;
};

/// Second-order channel statistics: covariance = los_coeff * (v v^H) +
/// nlos_coeff * I with v the LoS steering vector. Holds both H_k (users) and
/// G_m (eavesdroppers).
struct ChannelStats {
  MatrixXcd covariance;
  double los_coeff = 0.0;
  double nlos_coeff = 0.0;
  VectorXcd los_vector;
};

/// Transmit/receive steering vector a(theta): entry n is
/// exp(j*2*pi*spacing_ratio*n*sin(theta)); entry 0 is exactly 1.
VectorXcd steering_vector(double azimuth, int n_elems, double spacing_ratio);

/// Derivative of steering_vector with respect to the azimuth; entry 0 is
/// exactly 0.
VectorXcd steering_derivative(double azimuth, int n_elems, double spacing_ratio);

/// Closed-form Rician channel statistics for a link.
ChannelStats channel_covariance(const UserGeometry& geom, const ArrayConfig& array);

/// One Rician channel realization:
/// sqrt(beta0/d^alpha) * (sqrt(rho/(1+rho)) a(theta) + sqrt(1/(1+rho)) n)
/// with n i.i.d. CN(0,1) (real and imaginary parts each N(0, 1/2)).
VectorXcd sample_channel(const UserGeometry& geom, const ArrayConfig& array,
                         std::mt19937_64& rng);

}  // namespace risac
