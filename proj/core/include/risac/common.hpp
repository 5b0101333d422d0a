#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace risac {

using Complex = std::complex<double>;
using MatrixXcd = Eigen::MatrixXcd;
using MatrixXd = Eigen::MatrixXd;
using VectorXcd = Eigen::VectorXcd;
using VectorXd = Eigen::VectorXd;

/// Thrown on invalid arguments or malformed inputs (bad geometry, bad config
/// fields, dimension mismatches).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical precondition fails at run time (singular FIM,
/// degenerate expansion point, power budget exceeded).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// dB (power ratio) to linear scale.
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
/// dBm to watts.
inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

inline double log2_safe(double x) {
  if (!(x > 0.0)) throw NumericalError("log2 of non-positive value");
  return std::log2(x);
}

/// max(x, 0), the [.]+ clamp used by secrecy rates.
inline double clamp_pos(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace risac
