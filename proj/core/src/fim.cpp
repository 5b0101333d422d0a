#include "risac/fim.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace risac {

void SensingGeometry::validate() const {
  if (target_azimuths.empty()) throw InvalidInput("SensingGeometry: need at least one target");
  if (amplitudes.size() != target_azimuths.size())
    throw InvalidInput("SensingGeometry: amplitudes/azimuths size mismatch");
  if (snapshots < 1) throw InvalidInput("SensingGeometry: snapshots must be >= 1");
  if (!(sensing_noise_power > 0.0))
    throw InvalidInput("SensingGeometry: sensing noise power must be positive");
  for (const auto& b : amplitudes)
    if (!std::isfinite(b.real()) || !std::isfinite(b.imag()))
      throw InvalidInput("SensingGeometry: non-finite amplitude");
  for (double th : target_azimuths)
    if (!std::isfinite(th)) throw InvalidInput("SensingGeometry: non-finite azimuth");
}

void SchemeSelector::validate() const {
  if ((alpha1 != 0 && alpha1 != 1) || (alpha2 != 0 && alpha2 != 1))
    throw InvalidInput("SchemeSelector: alpha flags must be binary");
  if (alpha1 == 0 && alpha2 == 0)
    throw InvalidInput("SchemeSelector: at least one of alpha1/alpha2 must be 1");
  if (!extra_signal_present && alpha2 == 1)
    throw InvalidInput("SchemeSelector: alpha2 = 1 requires an extra signal");
  if (!rsma && alpha1 == 1)
    throw InvalidInput("SchemeSelector: SDMA has no common stream to sense with");
}

MatrixXcd sensing_covariance(const BeamformerSet& bf, const SchemeSelector& sel) {
  sel.validate();
  const int n = bf.dim();
  MatrixXcd r = MatrixXcd::Zero(n, n);
  if (sel.alpha1 == 1) {
    if (bf.w_common.rows() != n) throw InvalidInput("sensing_covariance: missing W_c");
    r += bf.w_common;
  }
  if (sel.alpha2 == 1) {
    if (!bf.has_extra()) throw InvalidInput("sensing_covariance: missing W_v");
    r += bf.w_extra;
  }
  return r;
}

namespace {

struct FimBlocks {
  MatrixXcd f11, f12, f22;
};

FimBlocks fim_blocks(const MatrixXcd& sensing_cov, const SensingGeometry& geom,
                     const ArrayConfig& array) {
  const int num_targets = geom.num_targets();
  const int n_tx = array.n_tx;
  const int n_rx = array.n_rx;
  if (sensing_cov.rows() != n_tx || sensing_cov.cols() != n_tx)
    throw InvalidInput("fisher_information: covariance dimension mismatch");

  MatrixXcd at(n_tx, num_targets), dat(n_tx, num_targets);
  MatrixXcd ar(n_rx, num_targets), dar(n_rx, num_targets);
  for (int t = 0; t < num_targets; ++t) {
    const double th = geom.target_azimuths[static_cast<size_t>(t)];
    at.col(t) = steering_vector(th, n_tx, array.spacing_ratio);
    dat.col(t) = steering_derivative(th, n_tx, array.spacing_ratio);
    ar.col(t) = steering_vector(th, n_rx, array.spacing_ratio);
    dar.col(t) = steering_derivative(th, n_rx, array.spacing_ratio);
  }
  MatrixXcd amp = MatrixXcd::Zero(num_targets, num_targets);
  for (int t = 0; t < num_targets; ++t) amp(t, t) = geom.amplitudes[static_cast<size_t>(t)];
  const MatrixXcd amp_conj = amp.conjugate();

  const double snap = static_cast<double>(geom.snapshots);
  const MatrixXcd r_conj = sensing_cov.conjugate();

  FimBlocks b;
  b.f11 =
      snap * ((dar.adjoint() * dar).cwiseProduct(amp_conj * at.adjoint() * r_conj * at * amp) +
              (dar.adjoint() * ar).cwiseProduct(amp_conj * at.adjoint() * r_conj * dat * amp) +
              (ar.adjoint() * dar).cwiseProduct(amp_conj * dat.adjoint() * r_conj * at * amp) +
              (ar.adjoint() * ar).cwiseProduct(amp_conj * dat.adjoint() * r_conj * dat * amp));
  b.f12 = snap * ((dar.adjoint() * ar).cwiseProduct(amp_conj * at.adjoint() * r_conj * at) +
                  (ar.adjoint() * ar).cwiseProduct(amp_conj * dat.adjoint() * r_conj * at));
  b.f22 = snap * (ar.adjoint() * ar).cwiseProduct(at.adjoint() * r_conj * at);
  return b;
}

MatrixXd assemble_full(const FimBlocks& b, const SensingGeometry& geom) {
  const int t_sz = geom.num_targets();
  const double scale = 2.0 / geom.sensing_noise_power;
  const MatrixXd re11 = b.f11.real();
  const MatrixXd re12 = b.f12.real();
  const MatrixXd im12 = b.f12.imag();
  const MatrixXd re22 = b.f22.real();
  const MatrixXd im22 = b.f22.imag();

  MatrixXd full(3 * t_sz, 3 * t_sz);
  full.block(0, 0, t_sz, t_sz) = re11;
  full.block(0, t_sz, t_sz, t_sz) = re12;
  full.block(0, 2 * t_sz, t_sz, t_sz) = -im12;
  full.block(t_sz, 0, t_sz, t_sz) = re12.transpose();
  full.block(t_sz, t_sz, t_sz, t_sz) = re22;
  full.block(t_sz, 2 * t_sz, t_sz, t_sz) = -im22;
  full.block(2 * t_sz, 0, t_sz, t_sz) = -im12.transpose();
  full.block(2 * t_sz, t_sz, t_sz, t_sz) = -im22.transpose();
  full.block(2 * t_sz, 2 * t_sz, t_sz, t_sz) = re22;
  return scale * full;
}

}  // namespace

MatrixXd fim_full_matrix(const MatrixXcd& sensing_cov, const SensingGeometry& geom,
                         const ArrayConfig& array) {
  geom.validate();
  array.validate();
  return assemble_full(fim_blocks(sensing_cov, geom, array), geom);
}

FisherInformation fisher_information(const MatrixXcd& sensing_cov,
                                     const SensingGeometry& geom,
                                     const ArrayConfig& array) {
  geom.validate();
  array.validate();
  const FimBlocks b = fim_blocks(sensing_cov, geom, array);
  FisherInformation fim;
  fim.block_f11 = b.f11;
  fim.block_f12 = b.f12;
  fim.block_f22 = b.f22;
  fim.full = assemble_full(b, geom);

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(fim.full, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  if (ev.minCoeff() > 0.0) {
    double logdet = 0.0;
    for (int i = 0; i < ev.size(); ++i) logdet += std::log(ev(i));
    fim.crb_det = std::exp(-logdet);
  } else {
    fim.crb_det = std::numeric_limits<double>::infinity();
  }
  return fim;
}

double crb_determinant(const FisherInformation& fim) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(fim.full, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double min_abs = ev.cwiseAbs().minCoeff();
  const double max_abs = ev.cwiseAbs().maxCoeff();
  if (min_abs <= 0.0 || max_abs / min_abs > 1e12 || ev.minCoeff() <= 0.0)
    throw NumericalError("crb_determinant: Fisher information is ill-conditioned");
  double logdet = 0.0;
  for (int i = 0; i < ev.size(); ++i) logdet += std::log(ev(i));
  return std::exp(-logdet);
}

double logdet_floor(double threshold) {
  if (!(threshold > 0.0)) throw InvalidInput("logdet_floor: threshold must be positive");
  return -std::log(threshold);
}

}  // namespace risac
