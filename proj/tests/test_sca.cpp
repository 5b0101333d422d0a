#include "doctest.h"
#include "risac/sca.hpp"

#include <random>

using namespace risac;
using namespace risac::sca;

namespace {

MatrixXcd random_psd(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXcd b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = Complex(gauss(rng), gauss(rng));
  return scale * (b * b.adjoint()) / static_cast<double>(n);
}

MatrixXcd random_hermitian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXcd b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = Complex(gauss(rng), gauss(rng));
  return 0.5 * (b + b.adjoint());
}

SCAState state_with(const BeamformerSet& bf) {
  SCAState st;
  st.expansion_point = bf;
  return st;
}

}  // namespace

TEST_CASE("linearize_upper is tight at the expansion point") {
  std::mt19937_64 rng(3);
  const int n = 4;
  BeamformerSet bf = BeamformerSet::zeros(n, 2);
  bf.w_common = random_psd(n, rng);
  bf.w_private[0] = random_psd(n, rng);
  bf.w_private[1] = random_psd(n, rng);
  bf.w_extra = random_psd(n, rng);
  SCAState st = state_with(bf);

  TraceLogTerm term;
  term.add("W1", random_psd(n, rng));
  term.add("Wv", random_psd(n, rng));
  term.constant = 0.3;

  const conic::AffineExpr bound = linearize_upper(term, st);
  const auto vals = st.expansion_values();
  const double exact = term.log2_value(vals);
  const double surrogate = bound.evaluate(vals, {});
  CHECK(surrogate == doctest::Approx(exact).epsilon(1e-12));
}

TEST_CASE("linearize_upper dominates the log everywhere") {
  std::mt19937_64 rng(7);
  const int n = 3;
  BeamformerSet bf = BeamformerSet::zeros(n, 1);
  bf.w_common = random_psd(n, rng);
  bf.w_private[0] = random_psd(n, rng);
  bf.w_extra = random_psd(n, rng);
  SCAState st = state_with(bf);

  TraceLogTerm term;
  term.add("Wc", random_psd(n, rng));
  term.add("W1", random_psd(n, rng));
  term.constant = 1.0;
  const conic::AffineExpr bound = linearize_upper(term, st);

  for (int trial = 0; trial < 100; ++trial) {
    BeamformerSet probe = bf;
    probe.w_common = random_psd(n, rng, 2.0);
    probe.w_private[0] = random_psd(n, rng, 2.0);
    probe.w_extra = random_psd(n, rng, 2.0);
    SCAState pst = state_with(probe);
    const auto vals = pst.expansion_values();
    const double exact = term.log2_value(vals);
    const double surrogate = bound.evaluate(vals, {});
    CHECK(surrogate >= exact - 1e-10);
  }
}

TEST_CASE("linearize_upper quadratic tangency gap") {
  // chi doubled from the expansion value with A_j = 1, chi_j = 0:
  // bound = 1/ln2 >= log2(2) = 1.
  const int n = 2;
  BeamformerSet bf = BeamformerSet::zeros(n, 1);
  SCAState st = state_with(bf);
  TraceLogTerm term;
  term.add("W1", MatrixXcd::Identity(n, n));
  term.constant = 1.0;
  const conic::AffineExpr bound = linearize_upper(term, st);

  BeamformerSet probe = bf;
  probe.w_private[0] = 0.5 * MatrixXcd::Identity(n, n);  // chi = 1, A = 2
  SCAState pst = state_with(probe);
  const double surrogate = bound.evaluate(pst.expansion_values(), {});
  CHECK(surrogate == doctest::Approx(1.0 / std::log(2.0)).epsilon(1e-12));
  CHECK(surrogate >= 1.0);
}

TEST_CASE("linearize_upper rejects degenerate expansion points") {
  const int n = 2;
  BeamformerSet bf = BeamformerSet::zeros(n, 1);
  SCAState st = state_with(bf);
  TraceLogTerm term;
  term.add("W1", MatrixXcd::Identity(n, n));
  term.constant = 0.0;  // A_j = 0 at the zero expansion point
  CHECK_THROWS_AS(linearize_upper(term, st), NumericalError);
}

TEST_CASE("dinkelbach update") {
  CHECK(dinkelbach_update(3.0, 2.0) == doctest::Approx(1.5));
  CHECK(dinkelbach_update(0.0, 5.0) == 0.0);
  CHECK_THROWS_AS(dinkelbach_update(1.0, 0.0), InvalidInput);
  // Fixed point: min_metric - lambda * power == 0.
  const double lambda = dinkelbach_update(4.2, 1.4);
  CHECK(std::abs(4.2 - lambda * 1.4) <= 1e-12);
}

TEST_CASE("rank one penalty") {
  std::mt19937_64 rng(11);
  const int n = 4;

  VectorXcd u = VectorXcd::Random(n);
  u /= u.norm();
  const MatrixXcd w_rank1 = u * u.adjoint();
  auto [val0, expr0] = rank_one_penalty(w_rank1, u, "Wc");
  CHECK(std::abs(val0) <= 1e-12);
  CHECK(expr0.evaluate({{"Wc", w_rank1}}, {}) == doctest::Approx(val0).epsilon(1e-9));

  const MatrixXcd eye = MatrixXcd::Identity(2, 2);
  VectorXcd u2(2);
  u2 << Complex(1.0, 0.0), Complex(0.0, 0.0);
  auto [val1, expr1] = rank_one_penalty(eye, u2, "Wc");
  CHECK(val1 == doctest::Approx(1.0));

  // Penalty upper-bounds tr(W) - lambda_max(W) for any unit vector.
  for (int trial = 0; trial < 30; ++trial) {
    const MatrixXcd w = random_psd(n, rng);
    VectorXcd v = VectorXcd::Random(n);
    v /= v.norm();
    auto [val, expr] = rank_one_penalty(w, v, "Wc");
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(w, Eigen::EigenvaluesOnly);
    CHECK(val >= w.trace().real() - es.eigenvalues().maxCoeff() - 1e-10);
    CHECK(val >= -1e-12);
  }

  // Non-unit vectors are normalized rather than rejected.
  auto [val2, expr2] = rank_one_penalty(eye, 2.0 * u2, "Wc");
  CHECK(val2 == doctest::Approx(1.0));
  CHECK_THROWS_AS(rank_one_penalty(eye, VectorXcd::Zero(2), "Wc"), InvalidInput);
}

TEST_CASE("refresh_penalty_vector determinism") {
  MatrixXcd w = MatrixXcd::Zero(2, 2);
  w(0, 0) = 3.0;
  w(1, 1) = 1.0;
  VectorXcd u = refresh_penalty_vector(w);
  CHECK(std::abs(u(0) - Complex(1.0, 0.0)) <= 1e-12);
  CHECK(std::abs(u(1)) <= 1e-12);

  // Rank-1 matrix returns its generator up to phase; canonicalized phase
  // makes the first nonzero entry real positive.
  std::mt19937_64 rng(5);
  VectorXcd v = VectorXcd::Random(3);
  v /= v.norm();
  u = refresh_penalty_vector(v * v.adjoint());
  const Complex phase = v(0) / std::abs(v(0));
  const VectorXcd v_canon = v / phase;
  CHECK((u - v_canon).norm() <= 1e-9);

  // Repeated eigenvalues: canonical answer is e_1.
  w = 2.0 * MatrixXcd::Identity(2, 2);
  u = refresh_penalty_vector(w);
  CHECK(std::abs(u(0) - Complex(1.0, 0.0)) <= 1e-12);

  // Zero matrix: flagged fallback to e_1.
  u = refresh_penalty_vector(MatrixXcd::Zero(3, 3));
  CHECK(std::abs(u(0) - Complex(1.0, 0.0)) <= 1e-15);
}

TEST_CASE("extract_beamformer") {
  const int n = 3;
  MatrixXcd w = MatrixXcd::Zero(n, n);
  w(0, 0) = 4.0;
  VectorXcd v = extract_beamformer(w);
  CHECK(std::abs(v(0) - Complex(2.0, 0.0)) <= 1e-12);
  CHECK(std::abs(v(1)) <= 1e-12);

  std::mt19937_64 rng(17);
  VectorXcd g = VectorXcd::Random(n);
  const MatrixXcd rank1 = g * g.adjoint();
  v = extract_beamformer(rank1);
  CHECK((v * v.adjoint() - rank1).norm() <= 1e-9 * rank1.norm());

  const MatrixXcd wp = random_psd(n, rng);
  v = extract_beamformer(wp);
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(wp, Eigen::EigenvaluesOnly);
  CHECK(v.squaredNorm() == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-9));
  CHECK(v.squaredNorm() <= wp.trace().real() + 1e-12);
}

TEST_CASE("convergence predicate") {
  CHECK(converged({1.0, 1.0005}, 1e-3, 50));
  CHECK_FALSE(converged({1.0, 2.0}, 1e-3, 50));
  CHECK(converged({1.0, 2.0, 3.0}, 1e-9, 3));  // hit j_max
  CHECK_FALSE(converged({1.0}, 1e-3, 50));
  CHECK_THROWS_AS(converged({}, 1e-3, 50), InvalidInput);
}
