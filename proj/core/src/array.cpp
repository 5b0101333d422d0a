#include "risac/array.hpp"

#include <cmath>

namespace risac {

void ArrayConfig::validate() const {
  if (n_tx < 1 || n_rx < 1) throw InvalidInput("ArrayConfig: antenna counts must be >= 1");
  if (!(spacing_ratio > 0.0) || !std::isfinite(spacing_ratio))
    throw InvalidInput("ArrayConfig: spacing_ratio must be positive");
}

void UserGeometry::validate() const {
  if (!(distance > 0.0)) throw InvalidInput("UserGeometry: distance must be positive");
  if (!(ref_gain > 0.0)) throw InvalidInput("UserGeometry: ref_gain must be positive");
  if (rician_factor < 0.0) throw InvalidInput("UserGeometry: rician_factor must be >= 0");
  if (!(pathloss_exponent > 0.0)) throw InvalidInput("UserGeometry: pathloss_exponent must be positive");
  if (!std::isfinite(azimuth)) throw InvalidInput("UserGeometry: azimuth must be finite");
}

VectorXcd steering_vector(double azimuth, int n_elems, double spacing_ratio) {
  if (n_elems < 1) throw InvalidInput("steering_vector: n_elems must be >= 1");
  if (!std::isfinite(azimuth)) throw InvalidInput("steering_vector: azimuth must be finite");
  VectorXcd a(n_elems);
  const double phase_step = 2.0 * kPi * spacing_ratio * std::sin(azimuth);
  for (int n = 0; n < n_elems; ++n)
    a(n) = std::polar(1.0, phase_step * static_cast<double>(n));
  a(0) = Complex(1.0, 0.0);
  return a;
}

VectorXcd steering_derivative(double azimuth, int n_elems, double spacing_ratio) {
  if (n_elems < 1) throw InvalidInput("steering_derivative: n_elems must be >= 1");
  if (!std::isfinite(azimuth)) throw InvalidInput("steering_derivative: azimuth must be finite");
  VectorXcd da(n_elems);
  const double phase_step = 2.0 * kPi * spacing_ratio * std::sin(azimuth);
  const double slope = 2.0 * kPi * spacing_ratio * std::cos(azimuth);
  for (int n = 0; n < n_elems; ++n) {
    const double nn = static_cast<double>(n);
    da(n) = Complex(0.0, slope * nn) * std::polar(1.0, phase_step * nn);
  }
  da(0) = Complex(0.0, 0.0);
  return da;
}

ChannelStats channel_covariance(const UserGeometry& geom, const ArrayConfig& array) {
  geom.validate();
  array.validate();
  const double path = geom.ref_gain / std::pow(geom.distance, geom.pathloss_exponent);
  const double rho = geom.rician_factor;
  ChannelStats cs;
  cs.los_coeff = path * rho / (1.0 + rho);
  cs.nlos_coeff = path / (1.0 + rho);
  cs.los_vector = steering_vector(geom.azimuth, array.n_tx, array.spacing_ratio);
  cs.covariance = cs.los_coeff * (cs.los_vector * cs.los_vector.adjoint());
  cs.covariance += cs.nlos_coeff * MatrixXcd::Identity(array.n_tx, array.n_tx);
  return cs;
}

VectorXcd sample_channel(const UserGeometry& geom, const ArrayConfig& array,
                         std::mt19937_64& rng) {
  geom.validate();
  array.validate();
  const double path = geom.ref_gain / std::pow(geom.distance, geom.pathloss_exponent);
  const double rho = geom.rician_factor;
  const VectorXcd los = steering_vector(geom.azimuth, array.n_tx, array.spacing_ratio);
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  VectorXcd nlos(array.n_tx);
  for (int i = 0; i < array.n_tx; ++i) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    nlos(i) = Complex(re, im);
  }
  return std::sqrt(path) *
         (std::sqrt(rho / (1.0 + rho)) * los + std::sqrt(1.0 / (1.0 + rho)) * nlos);
}

}  // namespace risac
