#include "doctest.h"
#include "risac/metrics.hpp"

#include <random>

using namespace risac;

namespace {

ChannelStats identity_channel(int n) {
  ChannelStats cs;
  cs.covariance = MatrixXcd::Identity(n, n);
  cs.los_coeff = 0.0;
  cs.nlos_coeff = 1.0;
  cs.los_vector = VectorXcd::Ones(n);
  return cs;
}

MatrixXcd rank1(const VectorXcd& v) { return v * v.adjoint(); }

MatrixXcd random_psd(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXcd b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = Complex(gauss(rng), gauss(rng));
  return scale * (b * b.adjoint()) / static_cast<double>(n);
}

}  // namespace

TEST_CASE("common sinr basics") {
  const int n = 4;
  BeamformerSet bf = BeamformerSet::zeros(n, 2);
  const ChannelStats h = identity_channel(n);

  CHECK(common_sinr(bf, h, 1.0) == 0.0);

  bf.w_common = 2.0 * MatrixXcd::Identity(n, n);
  // No interference: tr(H W_c) / sigma^2.
  CHECK(common_sinr(bf, h, 0.5) == doctest::Approx(8.0 / 0.5).epsilon(1e-12));

  CHECK_THROWS_AS(common_sinr(bf, h, -1.0), InvalidInput);
}

TEST_CASE("private sinr basics and homogeneity") {
  const int n = 3;
  std::mt19937_64 rng(2);
  BeamformerSet bf = BeamformerSet::zeros(n, 1);
  const ChannelStats h = identity_channel(n);
  bf.w_private[0] = random_psd(n, rng);
  // K = 1, W_v = 0: tr(H W_1)/sigma^2.
  const double sig2 = 0.3;
  CHECK(private_sinr(bf, h, 0, sig2) ==
        doctest::Approx(bf.w_private[0].trace().real() / sig2).epsilon(1e-12));
  CHECK_THROWS_AS(private_sinr(bf, h, 1, sig2), InvalidInput);

  // Noise-free ratio is invariant under W -> c W.
  BeamformerSet bf2 = BeamformerSet::zeros(n, 2);
  bf2.w_private[0] = random_psd(n, rng);
  bf2.w_private[1] = random_psd(n, rng);
  bf2.w_extra = random_psd(n, rng);
  bf2.w_common = random_psd(n, rng);
  const double before = private_sinr(bf2, h, 0, 0.0);
  const double p_before = bf2.total_power();
  bf2.w_common *= 7.5;
  bf2.w_private[0] *= 7.5;
  bf2.w_private[1] *= 7.5;
  bf2.w_extra *= 7.5;
  CHECK(private_sinr(bf2, h, 0, 0.0) == doctest::Approx(before).epsilon(1e-12));
  CHECK(bf2.total_power() == doctest::Approx(7.5 * p_before).epsilon(1e-12));
}

TEST_CASE("eavesdropper sinrs") {
  const int n = 4;
  std::mt19937_64 rng(5);
  BeamformerSet bf = BeamformerSet::zeros(n, 2);
  bf.w_private[0] = random_psd(n, rng);
  bf.w_private[1] = random_psd(n, rng);
  bf.w_extra = random_psd(n, rng);
  const ChannelStats g = identity_channel(n);

  // Same formula as the user side when the geometry coincides.
  bf.w_common = random_psd(n, rng);
  CHECK(eaves_common_sinr(bf, g, 0.7) == doctest::Approx(common_sinr(bf, g, 0.7)));

  // W_k = 0 gives zero.
  BeamformerSet bfz = bf;
  bfz.w_private[0].setZero();
  CHECK(eaves_private_sinr(bfz, g, 0, 0.7) == 0.0);

  // Larger W_c strictly reduces the private eavesdropping SINR.
  const double base = eaves_private_sinr(bf, g, 0, 0.7);
  BeamformerSet big = bf;
  big.w_common *= 50.0;
  CHECK(eaves_private_sinr(big, g, 0, 0.7) < base);
}

TEST_CASE("sinr formulas match the Monte-Carlo ratio of expectations") {
  ArrayConfig array{4, 4, 0.5};
  UserGeometry geom;
  geom.distance = 60.0;
  geom.azimuth = 0.5;
  geom.rician_factor = 5.0;
  geom.pathloss_exponent = 2.2;
  geom.ref_gain = 1e-3;
  const ChannelStats h = channel_covariance(geom, array);

  std::mt19937_64 rng(9);
  BeamformerSet bf = BeamformerSet::zeros(4, 2);
  bf.w_common = random_psd(4, rng);
  bf.w_private[0] = random_psd(4, rng);
  bf.w_private[1] = random_psd(4, rng);
  bf.w_extra = random_psd(4, rng);
  const double sig2 = (h.covariance * bf.w_common).trace().real();  // comparable scale

  double num_c = 0.0, den_c = 0.0, num_p = 0.0, den_p = 0.0, num_e = 0.0, den_e = 0.0;
  const int samples = 100000;
  std::mt19937_64 ch_rng(77);
  for (int s = 0; s < samples; ++s) {
    const VectorXcd hh = sample_channel(geom, array, ch_rng);
    auto quad = [&](const MatrixXcd& w) { return (hh.adjoint() * w * hh)(0).real(); };
    const double qc = quad(bf.w_common);
    const double q1 = quad(bf.w_private[0]);
    const double q2 = quad(bf.w_private[1]);
    const double qv = quad(bf.w_extra);
    num_c += qc;
    den_c += q1 + q2 + qv;
    num_p += q1;
    den_p += q2 + qv;
    num_e += q1;
    den_e += qc + q2 + qv;
  }
  const double inv = 1.0 / static_cast<double>(samples);
  const double mc_common = (num_c * inv) / (den_c * inv + sig2);
  const double mc_private = (num_p * inv) / (den_p * inv + sig2);
  const double mc_eavesp = (num_e * inv) / (den_e * inv + sig2);

  CHECK(std::abs(common_sinr(bf, h, sig2) - mc_common) / mc_common <= 0.02);
  CHECK(std::abs(private_sinr(bf, h, 0, sig2) - mc_private) / mc_private <= 0.02);
  CHECK(std::abs(eaves_private_sinr(bf, h, 0, sig2) - mc_eavesp) / mc_eavesp <= 0.02);
}

TEST_CASE("evaluate: unit SINRs give unit rates") {
  const int n = 2;
  LinkEnsemble links;
  links.users = {identity_channel(n)};
  links.user_noise = {1.0};

  BeamformerSet bf = BeamformerSet::zeros(n, 1);
  bf.w_private[0] = rank1(VectorXcd::Unit(n, 0));          // tr = 1
  bf.w_common = 2.0 * rank1(VectorXcd::Unit(n, 0));        // tr = 2
  // common SINR = 2 / (1 + 0 + 1) = 1; private SINR = 1 / (0 + 0 + 1) = 1.
  RateAllocation alloc;
  alloc.common_parts = {0.5};
  const MetricsReport rep = evaluate(bf, alloc, links);
  CHECK(rep.common_rates[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.private_rates[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.total_rates[0] == doctest::Approx(1.5).epsilon(1e-12));
  // urpr_k * P = total rate, exactly.
  CHECK(rep.urpr[0] * rep.total_power == doctest::Approx(rep.total_rates[0]).epsilon(1e-15));
}

TEST_CASE("evaluate: degenerate power") {
  const int n = 2;
  LinkEnsemble links;
  links.users = {identity_channel(n)};
  links.user_noise = {1.0};
  BeamformerSet bf = BeamformerSet::zeros(n, 1);

  RateAllocation zero_alloc;
  zero_alloc.common_parts = {0.0};
  const MetricsReport rep = evaluate(bf, zero_alloc, links);
  CHECK(rep.degenerate_power);
  CHECK(rep.total_power == 0.0);
  CHECK(rep.total_rates[0] == 0.0);

  RateAllocation bad;
  bad.common_parts = {1.0};
  CHECK_THROWS_AS(evaluate(bf, bad, links), NumericalError);
}

TEST_CASE("secrecy clamp") {
  const int n = 3;
  std::mt19937_64 rng(13);
  LinkEnsemble links;
  links.users = {identity_channel(n)};
  // A very strong eavesdropper: secrecy clamps at zero.
  ChannelStats eve = identity_channel(n);
  eve.covariance *= 100.0;
  links.eavesdroppers = {eve};
  links.user_noise = {1.0};
  links.eaves_noise = {1.0};

  BeamformerSet bf = BeamformerSet::zeros(n, 1);
  bf.w_private[0] = random_psd(n, rng);
  bf.w_common = random_psd(n, rng, 0.1);
  RateAllocation alloc;
  alloc.common_parts = {0.0};
  const MetricsReport rep = evaluate(bf, alloc, links);
  CHECK(rep.secrecy_rates[0] >= 0.0);
  const double unclamped = rep.private_rates[0] - rep.eaves_private_rates[0][0];
  CHECK(rep.secrecy_rates[0] == doctest::Approx(std::max(unclamped, 0.0)).epsilon(1e-12));
}

TEST_CASE("common rate budget and security check") {
  CHECK(common_rate_budget({2.0, 5.0}) == 2.0);
  CHECK(common_rate_budget({3.3, 3.3, 3.3}) == 3.3);
  CHECK_THROWS_AS(common_rate_budget({}), InvalidInput);

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> rates = {u(rng), u(rng), u(rng)};
    const double budget = common_rate_budget(rates);
    for (double r : rates) CHECK(budget <= r);
  }

  MetricsReport rep;
  rep.common_rates = {2.0, 3.0};
  rep.eaves_common_rates = {1.5};
  CHECK(common_stream_secure(rep));
  rep.eaves_common_rates = {2.5};
  CHECK_FALSE(common_stream_secure(rep));
  rep.eaves_common_rates = {2.0 + 5e-7};
  CHECK(common_stream_secure(rep));  // inside the 1e-6 tolerance
}

TEST_CASE("sdma evaluate path") {
  const int n = 3;
  std::mt19937_64 rng(41);
  LinkEnsemble links;
  links.users = {identity_channel(n)};
  links.eavesdroppers = {identity_channel(n)};
  links.user_noise = {1.0};
  links.eaves_noise = {1.0};

  BeamformerSet bf;
  bf.w_private = {random_psd(n, rng)};
  bf.w_extra = random_psd(n, rng);
  RateAllocation alloc;  // ignored for SDMA
  const MetricsReport rep = evaluate(bf, alloc, links, /*rsma=*/false);
  CHECK(rep.total_rates[0] == rep.private_rates[0]);
  CHECK(rep.eaves_common_rates[0] == 0.0);
  CHECK(rep.secrecy_rates[0] >= 0.0);
}
