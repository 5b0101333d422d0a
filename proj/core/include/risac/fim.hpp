#pragma once

#include <vector>

#include "risac/array.hpp"
#include "risac/common.hpp"
#include "risac/metrics.hpp"

namespace risac {

/// Targets to estimate: azimuths (radians), complex reflection amplitudes
/// beta_t, snapshot count L, and the radar receiver noise power.
///
/// The reflection amplitudes and the radar noise are *normalized* quantities:
/// the Fisher information scales linearly with snapshots/|beta|^2 and
/// inversely with the noise power, so these three trade off directly against
/// the CRB-determinant threshold. Defaults (L = 1, sigma^2 = 1, beta = 1)
/// put the det-CRB of a ~25 mW target-focused covariance near 1e-7.
struct SensingGeometry {
  std::vector<double> target_azimuths;
  std::vector<Complex> amplitudes;
  int snapshots = 1;
  double sensing_noise_power = 1.0;

  int num_targets() const { return static_cast<int>(target_azimuths.size()); }
  void validate() const;
};

/// Which transmit covariances illuminate the targets: R = a1*W_c + a2*W_v.
/// Scheme 1: (0,1); Scheme 2: (1,0); Scheme 3: (1,1); Ben1: (1,0) with no
/// extra signal at all; SDMA: (0,1) with no common stream.
struct SchemeSelector {
  int alpha1 = 0;
  int alpha2 = 1;
  bool extra_signal_present = true;
  bool rsma = true;

  void validate() const;
};

/// 3T x 3T Fisher information over [theta, Re(beta), Im(beta)] with its three
/// complex generator blocks.
struct FisherInformation {
  MatrixXcd block_f11;
  MatrixXcd block_f12;
  MatrixXcd block_f22;
  MatrixXd full;
  double crb_det = 0.0;
};

/// Covariance of the sensing signal, R = alpha1*W_c + alpha2*W_v.
MatrixXcd sensing_covariance(const BeamformerSet& bf, const SchemeSelector& sel);

/// Assembles the FIM blocks
///   F11 = L[(dAr^H dAr) o (B* At^H R* At B) + (dAr^H Ar) o (B* At^H R* dAt B)
///         + (Ar^H dAr) o (B* dAt^H R* At B) + (Ar^H Ar) o (B* dAt^H R* dAt B)]
///   F12 = L[(dAr^H Ar) o (B* At^H R* At) + (Ar^H Ar) o (B* dAt^H R* At)]
///   F22 = L[(Ar^H Ar) o (At^H R* At)]
/// and the real matrix
///   F = (2/sigma^2) [[Re F11, Re F12, -Im F12],
///                    [Re F12^T, Re F22, -Im F22],
///                    [-Im F12^T, -Im F22^T, Re F22]].
///
/// These blocks are the exact Fisher information of the echo model
/// Y = A_r B A_t^T X + Q with Q ~ CN(0, sigma^2 I) and R = X X^H / L; note
/// the *transposed* transmit steering (the conjugate-transpose variant does
/// not reproduce the displayed off-diagonal couplings). The unit tests check
/// this against numerical differentiation of the mean map.
FisherInformation fisher_information(const MatrixXcd& sensing_cov,
                                     const SensingGeometry& geom,
                                     const ArrayConfig& array);

/// Just the real 3T x 3T matrix, without the eigen-analysis; linear in the
/// covariance (the property the convex reformulation builds on).
MatrixXd fim_full_matrix(const MatrixXcd& sensing_cov, const SensingGeometry& geom,
                         const ArrayConfig& array);

/// det(F^{-1}) = 1/det(F). Throws NumericalError when cond(F) > 1e12; callers
/// treat that as a violated sensing constraint.
double crb_determinant(const FisherInformation& fim);

/// The CRB constraint det(F^{-1}) <= threshold as a convex bound:
/// logdet(F) >= -ln(threshold).
double logdet_floor(double threshold);

}  // namespace risac
