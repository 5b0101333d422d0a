#include "doctest.h"
#include "risac/array.hpp"

#include <Eigen/Eigenvalues>
#include <random>

using namespace risac;

TEST_CASE("steering vector basic values") {
  // Boresight: all ones.
  VectorXcd a = steering_vector(0.0, 4, 0.5);
  for (int i = 0; i < 4; ++i) {
    CHECK(a(i).real() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(a(i).imag() == doctest::Approx(0.0).epsilon(1e-15));
  }

  // sin(pi/6) = 1/2 gives a phase step of pi/2.
  a = steering_vector(kPi / 6.0, 2, 0.5);
  CHECK(a(0) == Complex(1.0, 0.0));
  CHECK(a(1).real() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(a(1).imag() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("steering vector entries are unit modulus") {
  VectorXcd a = steering_vector(kPi / 4.0, 12, 0.5);
  for (int i = 0; i < 12; ++i) CHECK(std::abs(std::abs(a(i)) - 1.0) <= 1e-12);
}

TEST_CASE("steering vector rejects non-finite azimuth") {
  CHECK_THROWS_AS(steering_vector(std::nan(""), 4, 0.5), InvalidInput);
  CHECK_THROWS_AS(steering_derivative(std::numeric_limits<double>::infinity(), 4, 0.5),
                  InvalidInput);
  CHECK_THROWS_AS(steering_vector(0.0, 0, 0.5), InvalidInput);
}

TEST_CASE("steering derivative closed values") {
  VectorXcd d = steering_derivative(0.0, 2, 0.5);
  CHECK(d(0) == Complex(0.0, 0.0));
  CHECK(d(1).real() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(d(1).imag() == doctest::Approx(kPi).epsilon(1e-12));

  d = steering_derivative(kPi / 2.0, 8, 0.5);
  for (int i = 0; i < 8; ++i) CHECK(std::abs(d(i)) <= 1e-12);
}

TEST_CASE("steering derivative matches central finite differences") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> angle(-1.4, 1.4);
  std::uniform_int_distribution<int> nelem(1, 16);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const double th = angle(rng);
    const int n = nelem(rng);
    const VectorXcd d = steering_derivative(th, n, 0.5);
    const VectorXcd fd =
        (steering_vector(th + h, n, 0.5) - steering_vector(th - h, n, 0.5)) / (2.0 * h);
    const double scale = std::max(1.0, d.norm());
    CHECK((d - fd).norm() / scale <= 1e-6);
  }
}

TEST_CASE("channel covariance closed form") {
  ArrayConfig array{12, 12, 0.5};
  UserGeometry geom;
  geom.distance = 60.0;
  geom.azimuth = deg_to_rad(-60.0);
  geom.rician_factor = 100.0;
  geom.pathloss_exponent = 2.2;
  geom.ref_gain = 1e-3;

  ChannelStats cs = channel_covariance(geom, array);
  const double expected_trace = 12.0 * 1e-3 / std::pow(60.0, 2.2);
  CHECK(cs.covariance.trace().real() == doctest::Approx(expected_trace).epsilon(1e-12));
  // trace = n * (a0 + a1) since steering entries are unit modulus.
  CHECK(cs.covariance.trace().real() ==
        doctest::Approx(12.0 * (cs.los_coeff + cs.nlos_coeff)).epsilon(1e-12));

  // Assembly identity.
  MatrixXcd rebuilt = cs.los_coeff * cs.los_vector * cs.los_vector.adjoint() +
                      cs.nlos_coeff * MatrixXcd::Identity(12, 12);
  CHECK((rebuilt - cs.covariance).norm() <= 1e-15 * cs.covariance.norm());
}

TEST_CASE("channel covariance limits") {
  ArrayConfig array{8, 8, 0.5};
  UserGeometry geom;
  geom.distance = 50.0;
  geom.azimuth = 0.3;
  geom.pathloss_exponent = 2.0;
  geom.ref_gain = 1e-3;

  geom.rician_factor = 0.0;  // pure NLoS
  ChannelStats cs = channel_covariance(geom, array);
  CHECK(cs.los_coeff == 0.0);
  MatrixXcd diag_only = cs.nlos_coeff * MatrixXcd::Identity(8, 8);
  CHECK((cs.covariance - diag_only).norm() <= 1e-18);

  geom.rician_factor = 1e12;  // LoS-dominant
  cs = channel_covariance(geom, array);
  CHECK(cs.nlos_coeff <= 1e-12 * cs.los_coeff);
}

TEST_CASE("channel covariance is PSD") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> angle(-1.5, 1.5);
  std::uniform_real_distribution<double> rician(0.0, 200.0);
  ArrayConfig array{10, 10, 0.5};
  for (int trial = 0; trial < 50; ++trial) {
    UserGeometry geom;
    geom.distance = 40.0 + 60.0 * rician(rng) / 200.0;
    geom.azimuth = angle(rng);
    geom.rician_factor = rician(rng);
    geom.pathloss_exponent = 2.2;
    geom.ref_gain = 1e-3;
    ChannelStats cs = channel_covariance(geom, array);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(cs.covariance, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12 * cs.covariance.trace().real());
  }
}

TEST_CASE("sample_channel determinism and LoS limit") {
  ArrayConfig array{6, 6, 0.5};
  UserGeometry geom;
  geom.distance = 80.0;
  geom.azimuth = -0.2;
  geom.rician_factor = 1e12;
  geom.pathloss_exponent = 2.2;
  geom.ref_gain = 1e-3;

  std::mt19937_64 rng_a(42), rng_b(42);
  const VectorXcd ha = sample_channel(geom, array, rng_a);
  const VectorXcd hb = sample_channel(geom, array, rng_b);
  CHECK((ha - hb).norm() == 0.0);

  const double path = std::sqrt(1e-3 / std::pow(80.0, 2.2));
  const VectorXcd det = path * steering_vector(-0.2, 6, 0.5);
  CHECK((ha - det).norm() / det.norm() <= 1e-5);
}

TEST_CASE("monte carlo mean of h h^H matches covariance") {
  ArrayConfig array{4, 4, 0.5};
  UserGeometry geom;
  geom.distance = 60.0;
  geom.azimuth = 0.4;
  geom.rician_factor = 3.0;
  geom.pathloss_exponent = 2.2;
  geom.ref_gain = 1e-3;

  const ChannelStats cs = channel_covariance(geom, array);
  std::mt19937_64 rng(123);
  MatrixXcd acc = MatrixXcd::Zero(4, 4);
  const int samples = 100000;
  for (int s = 0; s < samples; ++s) {
    const VectorXcd h = sample_channel(geom, array, rng);
    acc += h * h.adjoint();
  }
  acc /= static_cast<double>(samples);
  CHECK((acc - cs.covariance).norm() / cs.covariance.norm() <= 0.02);
}

TEST_CASE("statistical identity E{h^H W h} = tr(H W)") {
  ArrayConfig array{5, 5, 0.5};
  UserGeometry geom;
  geom.distance = 70.0;
  geom.azimuth = -0.6;
  geom.rician_factor = 10.0;
  geom.pathloss_exponent = 2.2;
  geom.ref_gain = 1e-3;
  const ChannelStats cs = channel_covariance(geom, array);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXcd b(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) b(i, j) = Complex(gauss(rng), gauss(rng));
  const MatrixXcd w = b * b.adjoint();

  const double expected = (cs.covariance * w).trace().real();
  double acc = 0.0;
  const int samples = 100000;
  for (int s = 0; s < samples; ++s) {
    const VectorXcd h = sample_channel(geom, array, rng);
    acc += (h.adjoint() * w * h)(0).real();
  }
  acc /= static_cast<double>(samples);
  CHECK(std::abs(acc - expected) / expected <= 0.02);
}
