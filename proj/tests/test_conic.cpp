#include "doctest.h"
#include "risac/conic.hpp"

#include <Eigen/Eigenvalues>
#include <random>
#include <sstream>

using namespace risac;
using namespace risac::conic;

namespace {
MatrixXcd random_hermitian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXcd b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = Complex(gauss(rng), gauss(rng));
  return 0.5 * (b + b.adjoint());
}
}  // namespace

TEST_CASE("embed_complex basics") {
  const MatrixXcd eye = MatrixXcd::Identity(3, 3);
  const MatrixXd e = embed_complex(eye);
  CHECK((e - MatrixXd::Identity(6, 6)).norm() == 0.0);

  // H = [[0, -j], [j, 0]] has eigenvalues +-1; the embedding doubles them.
  MatrixXcd h(2, 2);
  h << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
  const MatrixXd eh = embed_complex(h);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(eh, Eigen::EigenvaluesOnly);
  VectorXd ev = es.eigenvalues();
  CHECK(ev(0) == doctest::Approx(-1.0));
  CHECK(ev(1) == doctest::Approx(-1.0));
  CHECK(ev(2) == doctest::Approx(1.0));
  CHECK(ev(3) == doctest::Approx(1.0));

  MatrixXcd bad(2, 2);
  bad << 1.0, 2.0, 3.0, 4.0;
  CHECK_THROWS_AS(embed_complex(bad), InvalidInput);
}

TEST_CASE("embed_complex trace and product identities") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 25; ++trial) {
    const MatrixXcd a = random_hermitian(4, rng);
    const MatrixXcd b = random_hermitian(4, rng);
    const MatrixXd ea = embed_complex(a);
    const MatrixXd eb = embed_complex(b);
    CHECK(ea.trace() == doctest::Approx(2.0 * a.trace().real()).epsilon(1e-12));
    CHECK((ea * eb).trace() ==
          doctest::Approx(2.0 * (a * b).trace().real()).epsilon(1e-10));
    // PSD iff: shift both to PSD and compare minimal eigenvalues.
    Eigen::SelfAdjointEigenSolver<MatrixXcd> esa(a, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<MatrixXd> ese(ea, Eigen::EigenvaluesOnly);
    CHECK(esa.eigenvalues().minCoeff() ==
          doctest::Approx(ese.eigenvalues().minCoeff()).epsilon(1e-9));
  }
}

TEST_CASE("hermitian parameter round trip and trace forms") {
  std::mt19937_64 rng(11);
  const int n = 5;
  const MatrixXcd w = random_hermitian(n, rng);
  VectorXd params(herm_param_count(n));
  herm_to_params(w, params);
  const MatrixXcd back = herm_from_params(params, n);
  CHECK((w - back).norm() <= 1e-15 * w.norm());

  const MatrixXcd c = random_hermitian(n, rng);
  VectorXd g(herm_param_count(n));
  herm_trace_coeffs(c, g);
  CHECK(g.dot(params) == doctest::Approx((c * w).trace().real()).epsilon(1e-12));
}

TEST_CASE("affine expr evaluation") {
  AffineExpr e;
  e.add_trace("W", MatrixXcd::Identity(2, 2));
  e.add_scalar("t", 2.0);
  e.constant = 1.0;
  std::map<std::string, MatrixXcd> mats{{"W", 3.0 * MatrixXcd::Identity(2, 2)}};
  std::map<std::string, double> scals{{"t", 0.5}};
  CHECK(e.evaluate(mats, scals) == doctest::Approx(6.0 + 1.0 + 1.0));

  // Accumulation merges coefficients on the same variable.
  e.add_trace("W", MatrixXcd::Identity(2, 2));
  CHECK(e.evaluate(mats, scals) == doctest::Approx(12.0 + 1.0 + 1.0));
}

TEST_CASE("problem validation catches unknown variables") {
  ConicProblem p;
  p.add_matrix_var("W", 3);
  p.add_scalar_var("t");

  AffineExpr ok;
  ok.add_trace("W", MatrixXcd::Identity(3, 3));
  p.set_objective(ok);
  p.validate();

  AffineExpr bad;
  bad.add_trace("X", MatrixXcd::Identity(3, 3));
  p.add_constraint(bad, Relation::LE, 1.0, "c0");
  CHECK_THROWS_AS(p.validate(), InvalidInput);

  ConicProblem q;
  q.add_matrix_var("W", 3);
  AffineExpr wrongdim;
  wrongdim.add_trace("W", MatrixXcd::Identity(2, 2));
  q.add_constraint(wrongdim, Relation::LE, 1.0, "c1");
  CHECK_THROWS_AS(q.validate(), InvalidInput);

  CHECK_THROWS_AS(q.add_matrix_var("W", 3), InvalidInput);
}

TEST_CASE("logdet constraint wiring and dump") {
  ConicProblem p;
  p.add_matrix_var("W", 2);
  p.add_scalar_var("t");

  AffineExpr entry;
  entry.add_trace("W", MatrixXcd::Identity(2, 2));
  entry.constant = 0.5;
  LinMatMap map = LinMatMap::scalar(entry);
  encode_logdet(std::move(map), 0.25, p, "crb");

  AffineExpr obj;
  obj.add_scalar("t", 1.0);
  p.set_objective(obj);
  p.validate();
  CHECK(p.logdet_constraints().size() == 1);
  CHECK(p.logdet_constraints()[0].bound.constant == 0.25);

  std::ostringstream os;
  p.dump(os);
  const std::string text = os.str();
  CHECK(text.find("matrix_var W 2 psd") != std::string::npos);
  CHECK(text.find("logdet crb dim 1") != std::string::npos);
}

TEST_CASE("diagonal map evaluation") {
  AffineExpr e1, e2;
  e1.constant = 2.0;
  e2.add_scalar("s", 1.0);
  LinMatMap map = LinMatMap::diagonal({e1, e2});
  const MatrixXd m = map.evaluate({}, {{"s", 3.0}});
  CHECK(m(0, 0) == 2.0);
  CHECK(m(1, 1) == 3.0);
  CHECK(m(0, 1) == 0.0);
}
