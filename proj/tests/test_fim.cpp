#include "doctest.h"
#include "risac/fim.hpp"

#include <Eigen/Eigenvalues>
#include <random>

using namespace risac;

namespace {

// Independent Fisher-information oracle for the Gaussian echo model
//   Y = A_r(theta) B A_t^T(theta) X + Q,  Q ~ CN(0, sigma^2 I),
// computed from numerically differentiated mean maps:
//   F_ij = (2 L_eff / sigma^2) Re tr(dM_i^H dM_j)
// with X chosen so that X X^H = L R (here X = sqrt(L) R^{1/2}, L = n_tx).
// This never touches the Hadamard block formulas under test.
MatrixXd fim_oracle(const MatrixXcd& r, const SensingGeometry& geom,
                    const ArrayConfig& array) {
  const int num_t = geom.num_targets();
  const int n_tx = array.n_tx;
  const int n_rx = array.n_rx;

  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(r);
  const MatrixXcd rsqrt = es.operatorSqrt();
  const double l_cols = static_cast<double>(n_tx);
  const MatrixXcd x = std::sqrt(l_cols) * rsqrt;  // n_tx columns

  auto mean_map = [&](const std::vector<double>& th, const std::vector<Complex>& beta) {
    MatrixXcd m = MatrixXcd::Zero(n_rx, n_tx);
    for (int t = 0; t < num_t; ++t) {
      const VectorXcd ar = steering_vector(th[static_cast<size_t>(t)], n_rx, array.spacing_ratio);
      const VectorXcd at = steering_vector(th[static_cast<size_t>(t)], n_tx, array.spacing_ratio);
      m += beta[static_cast<size_t>(t)] * ar * (at.transpose() * x);
    }
    return m;
  };

  std::vector<double> th = geom.target_azimuths;
  std::vector<Complex> beta = geom.amplitudes;
  const int dim = 3 * num_t;
  std::vector<MatrixXcd> deriv(static_cast<size_t>(dim));
  const double h_th = 1e-5;
  const double h_b = 1e-5;
  for (int t = 0; t < num_t; ++t) {
    auto thp = th; thp[static_cast<size_t>(t)] += h_th;
    auto thm = th; thm[static_cast<size_t>(t)] -= h_th;
    deriv[static_cast<size_t>(t)] = (mean_map(thp, beta) - mean_map(thm, beta)) / (2.0 * h_th);

    auto bp = beta; bp[static_cast<size_t>(t)] += Complex(h_b, 0.0);
    auto bm = beta; bm[static_cast<size_t>(t)] -= Complex(h_b, 0.0);
    deriv[static_cast<size_t>(num_t + t)] = (mean_map(th, bp) - mean_map(th, bm)) / (2.0 * h_b);

    auto bip = beta; bip[static_cast<size_t>(t)] += Complex(0.0, h_b);
    auto bim = beta; bim[static_cast<size_t>(t)] -= Complex(0.0, h_b);
    deriv[static_cast<size_t>(2 * num_t + t)] = (mean_map(th, bip) - mean_map(th, bim)) / (2.0 * h_b);
  }

  // The columns of X represent n_tx snapshots carrying covariance R; the
  // geometry asks for `snapshots` of them in total.
  const double snap_scale = static_cast<double>(geom.snapshots) / l_cols;
  MatrixXd f(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      f(i, j) = 2.0 * snap_scale / geom.sensing_noise_power *
                (deriv[static_cast<size_t>(i)].adjoint() * deriv[static_cast<size_t>(j)])
                    .trace().real();
  return f;
}

MatrixXcd random_psd(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXcd b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = Complex(gauss(rng), gauss(rng));
  return scale * (b * b.adjoint()) / static_cast<double>(n);
}

}  // namespace

TEST_CASE("sensing covariance follows the scheme selector") {
  BeamformerSet bf = BeamformerSet::zeros(4, 2);
  bf.w_common = 2.0 * MatrixXcd::Identity(4, 4);
  bf.w_extra = 3.0 * MatrixXcd::Identity(4, 4);

  SchemeSelector s1{0, 1, true, true};
  CHECK((sensing_covariance(bf, s1) - bf.w_extra).norm() == 0.0);
  SchemeSelector s2{1, 0, true, true};
  CHECK((sensing_covariance(bf, s2) - bf.w_common).norm() == 0.0);
  SchemeSelector s3{1, 1, true, true};
  CHECK((sensing_covariance(bf, s3) - (bf.w_common + bf.w_extra)).norm() == 0.0);

  SchemeSelector bad{0, 0, true, true};
  CHECK_THROWS_AS(sensing_covariance(bf, bad), InvalidInput);
  SchemeSelector ben1_bad{1, 1, false, true};
  CHECK_THROWS_AS(ben1_bad.validate(), InvalidInput);
}

TEST_CASE("hand-evaluated FIM entry at boresight") {
  // T=1, theta=0, beta=1, L=1, N=2, R=I, sigma^2=2: the (bR, bR) diagonal
  // entry is (2/sigma^2) * (a_r^H a_r)(a_t^H R* a_t) = 4.
  SensingGeometry geom;
  geom.target_azimuths = {0.0};
  geom.amplitudes = {Complex(1.0, 0.0)};
  geom.snapshots = 1;
  geom.sensing_noise_power = 2.0;
  ArrayConfig array{2, 2, 0.5};

  FisherInformation fim = fisher_information(MatrixXcd::Identity(2, 2), geom, array);
  CHECK(fim.block_f22(0, 0).real() == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(fim.full(1, 1) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("FIM is linear in the sensing covariance") {
  std::mt19937_64 rng(3);
  SensingGeometry geom;
  geom.target_azimuths = {deg_to_rad(-30.0), deg_to_rad(30.0)};
  geom.amplitudes = {Complex(1.0, 0.2), Complex(0.8, -0.1)};
  ArrayConfig array{6, 6, 0.5};

  const MatrixXcd r1 = random_psd(6, rng);
  const MatrixXcd r2 = random_psd(6, rng);
  const MatrixXd f1 = fisher_information(r1, geom, array).full;
  const MatrixXd f2 = fisher_information(r2, geom, array).full;
  const MatrixXd f12 = fisher_information(r1 + r2, geom, array).full;
  CHECK((f12 - f1 - f2).norm() <= 1e-10 * (f1.norm() + f2.norm()));
}

TEST_CASE("FIM symmetry and PSD for random covariances") {
  std::mt19937_64 rng(17);
  SensingGeometry geom;
  geom.target_azimuths = {-0.4, 0.7};
  geom.amplitudes = {Complex(1.0, 0.0), Complex(1.0, 0.0)};
  ArrayConfig array{5, 4, 0.5};
  for (int trial = 0; trial < 100; ++trial) {
    const MatrixXcd r = random_psd(5, rng);
    const MatrixXd f = fisher_information(r, geom, array).full;
    CHECK((f - f.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * f.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(f, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-9 * f.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("CRB determinant scale law") {
  std::mt19937_64 rng(23);
  SensingGeometry geom;
  geom.target_azimuths = {-0.5, 0.5};
  geom.amplitudes = {Complex(1.0, 0.0), Complex(1.0, 0.0)};
  ArrayConfig array{6, 6, 0.5};
  const MatrixXcd r = random_psd(6, rng) + MatrixXcd::Identity(6, 6);
  const double base = crb_determinant(fisher_information(r, geom, array));
  const int three_t = 3 * geom.num_targets();
  for (double c : {0.5, 2.0, 10.0}) {
    const double scaled = crb_determinant(fisher_information(c * r, geom, array));
    CHECK(scaled == doctest::Approx(std::pow(c, -three_t) * base).epsilon(1e-9));
  }
}

TEST_CASE("FIM matches the likelihood oracle") {
  std::mt19937_64 rng(31);
  for (int num_t : {1, 2}) {
    for (int n : {2, 3, 4}) {
      SensingGeometry geom;
      geom.snapshots = 3;
      geom.sensing_noise_power = 1.7;
      if (num_t == 1) {
        geom.target_azimuths = {0.35};
        geom.amplitudes = {Complex(0.9, 0.3)};
      } else {
        geom.target_azimuths = {-0.5, 0.6};
        geom.amplitudes = {Complex(0.9, 0.3), Complex(1.1, -0.4)};
      }
      ArrayConfig array{n, n, 0.5};
      const MatrixXcd r = random_psd(n, rng) + 0.1 * MatrixXcd::Identity(n, n);
      const MatrixXd f = fisher_information(r, geom, array).full;
      const MatrixXd f_oracle = fim_oracle(r, geom, array);
      CHECK((f - f_oracle).norm() / f_oracle.norm() <= 1e-4);
    }
  }
}

TEST_CASE("crb_determinant identities and errors") {
  FisherInformation fim;
  fim.full = 2.0 * MatrixXd::Identity(3, 3);  // T=1: diag(2,2,2)
  CHECK(crb_determinant(fim) == doctest::Approx(1.0 / 8.0).epsilon(1e-12));

  fim.full = 5.0 * MatrixXd::Identity(6, 6);
  CHECK(crb_determinant(fim) == doctest::Approx(std::pow(5.0, -6)).epsilon(1e-12));
  CHECK(std::log(crb_determinant(fim)) ==
        doctest::Approx(-6.0 * std::log(5.0)).epsilon(1e-9));

  fim.full = MatrixXd::Identity(3, 3);
  fim.full(2, 2) = 1e-14;  // condition number 1e14
  CHECK_THROWS_AS(crb_determinant(fim), NumericalError);
}

TEST_CASE("logdet floor") {
  CHECK(logdet_floor(1.0) == doctest::Approx(0.0));
  CHECK(logdet_floor(std::exp(-1.0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(logdet_floor(1e-7) == doctest::Approx(16.1180956509583).epsilon(1e-10));
  CHECK_THROWS_AS(logdet_floor(0.0), InvalidInput);
}

TEST_CASE("near-coincident targets give an ill-conditioned error") {
  SensingGeometry geom;
  geom.target_azimuths = {0.30, 0.30000001};
  geom.amplitudes = {Complex(1.0, 0.0), Complex(1.0, 0.0)};
  ArrayConfig array{6, 6, 0.5};
  const FisherInformation fim =
      fisher_information(MatrixXcd::Identity(6, 6), geom, array);
  CHECK_THROWS_AS(crb_determinant(fim), NumericalError);
}
