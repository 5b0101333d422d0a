#include "risac/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace risac {

namespace {

double real_trace_product(const MatrixXcd& a, const MatrixXcd& b) {
  return (a * b).trace().real();
}

void check_psd(const MatrixXcd& w, const char* name) {
  if (w.rows() == 0) return;
  if (w.rows() != w.cols()) throw InvalidInput(std::string(name) + ": not square");
  const double asym = (w - w.adjoint()).cwiseAbs().maxCoeff();
  const double scale = std::max(1e-300, w.cwiseAbs().maxCoeff());
  if (asym > 1e-9 * std::max(1.0, scale))
    throw InvalidInput(std::string(name) + ": not Hermitian");
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(w, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  const double tr = w.trace().real();
  if (min_eig < -1e-9 * std::max(1.0, std::abs(tr)))
    throw InvalidInput(std::string(name) + ": not positive semidefinite");
}

// Interference part shared by the SINR formulas: sum over a subset of private
// beams plus the extra signal.
double interference(const BeamformerSet& bf, const MatrixXcd& h_cov, int skip_user) {
  double v = 0.0;
  for (int i = 0; i < bf.num_users(); ++i) {
    if (i == skip_user) continue;
    v += real_trace_product(h_cov, bf.w_private[static_cast<size_t>(i)]);
  }
  if (bf.has_extra()) v += real_trace_product(h_cov, bf.w_extra);
  return v;
}

// Artificial noise hits only eavesdroppers; users and the radar receiver
// cancel the known AN sequence.
double an_interference(const BeamformerSet& bf, const MatrixXcd& g_cov) {
  return bf.w_an ? real_trace_product(g_cov, *bf.w_an) : 0.0;
}

}  // namespace

int BeamformerSet::dim() const {
  if (w_common.rows() > 0) return static_cast<int>(w_common.rows());
  if (!w_private.empty()) return static_cast<int>(w_private.front().rows());
  return static_cast<int>(w_extra.rows());
}

double BeamformerSet::total_power() const {
  double p = 0.0;
  if (w_common.rows() > 0) p += w_common.trace().real();
  for (const auto& w : w_private) p += w.trace().real();
  if (has_extra()) p += w_extra.trace().real();
  return p;
}

void BeamformerSet::validate() const {
  if (w_common.rows() > 0) check_psd(w_common, "W_c");
  for (size_t k = 0; k < w_private.size(); ++k) check_psd(w_private[k], "W_k");
  if (has_extra()) check_psd(w_extra, "W_v");
  if (w_an) check_psd(*w_an, "W_AN");
}

BeamformerSet BeamformerSet::zeros(int n_tx, int num_users, bool with_extra) {
  BeamformerSet bf;
  bf.w_common = MatrixXcd::Zero(n_tx, n_tx);
  bf.w_private.assign(static_cast<size_t>(num_users), MatrixXcd::Zero(n_tx, n_tx));
  if (with_extra) bf.w_extra = MatrixXcd::Zero(n_tx, n_tx);
  return bf;
}

double MetricsReport::min_total_rate() const {
  return *std::min_element(total_rates.begin(), total_rates.end());
}
double MetricsReport::min_secrecy_rate() const {
  return *std::min_element(secrecy_rates.begin(), secrecy_rates.end());
}
double MetricsReport::min_urpr() const {
  return *std::min_element(urpr.begin(), urpr.end());
}
double MetricsReport::min_usrpr() const {
  return *std::min_element(usrpr.begin(), usrpr.end());
}

double common_sinr(const BeamformerSet& bf, const ChannelStats& ch, double noise_power) {
  if (noise_power < 0.0) throw InvalidInput("common_sinr: negative noise power");
  const double num = bf.w_common.rows() > 0 ? real_trace_product(ch.covariance, bf.w_common) : 0.0;
  if (num == 0.0) return 0.0;
  const double den = interference(bf, ch.covariance, -1) + noise_power;
  return num / den;
}

double private_sinr(const BeamformerSet& bf, const ChannelStats& ch, int user_index,
                    double noise_power) {
  if (noise_power < 0.0) throw InvalidInput("private_sinr: negative noise power");
  if (user_index < 0 || user_index >= bf.num_users())
    throw InvalidInput("private_sinr: user index out of range");
  const double num =
      real_trace_product(ch.covariance, bf.w_private[static_cast<size_t>(user_index)]);
  if (num == 0.0) return 0.0;
  const double den = interference(bf, ch.covariance, user_index) + noise_power;
  return num / den;
}

double eaves_common_sinr(const BeamformerSet& bf, const ChannelStats& ch_eaves,
                         double noise_power) {
  return common_sinr(bf, ch_eaves, noise_power + an_interference(bf, ch_eaves.covariance));
}

double eaves_private_sinr(const BeamformerSet& bf, const ChannelStats& ch_eaves,
                          int user_index, double noise_power) {
  if (noise_power < 0.0) throw InvalidInput("eaves_private_sinr: negative noise power");
  if (user_index < 0 || user_index >= bf.num_users())
    throw InvalidInput("eaves_private_sinr: user index out of range");
  const double num =
      real_trace_product(ch_eaves.covariance, bf.w_private[static_cast<size_t>(user_index)]);
  if (num == 0.0) return 0.0;
  double den = interference(bf, ch_eaves.covariance, user_index) + noise_power +
               an_interference(bf, ch_eaves.covariance);
  if (bf.w_common.rows() > 0)
    den += real_trace_product(ch_eaves.covariance, bf.w_common);
  return num / den;
}

double sdma_rate(const BeamformerSet& bf, const ChannelStats& ch, int user_index,
                 double noise_power) {
  if (user_index < 0 || user_index >= bf.num_users())
    throw InvalidInput("sdma_rate: user index out of range");
  const double num =
      real_trace_product(ch.covariance, bf.w_private[static_cast<size_t>(user_index)]);
  const double den = interference(bf, ch.covariance, user_index) + noise_power;
  return std::log2(1.0 + num / den);
}

double sdma_eaves_rate(const BeamformerSet& bf, const ChannelStats& ch_eaves,
                       int user_index, double noise_power) {
  if (user_index < 0 || user_index >= bf.num_users())
    throw InvalidInput("sdma_eaves_rate: user index out of range");
  const double num =
      real_trace_product(ch_eaves.covariance, bf.w_private[static_cast<size_t>(user_index)]);
  const double den = interference(bf, ch_eaves.covariance, user_index) + noise_power +
                     an_interference(bf, ch_eaves.covariance);
  return std::log2(1.0 + num / den);
}

MetricsReport evaluate(const BeamformerSet& bf, const RateAllocation& alloc,
                       const LinkEnsemble& links, bool rsma) {
  const int num_users = static_cast<int>(links.users.size());
  const int num_eaves = static_cast<int>(links.eavesdroppers.size());
  if (bf.num_users() != num_users) throw InvalidInput("evaluate: user count mismatch");
  if (rsma && static_cast<int>(alloc.common_parts.size()) != num_users)
    throw InvalidInput("evaluate: allocation size mismatch");

  MetricsReport rep;
  rep.total_power = bf.total_power();

  rep.common_rates.resize(static_cast<size_t>(num_users), 0.0);
  rep.private_rates.resize(static_cast<size_t>(num_users), 0.0);
  rep.total_rates.resize(static_cast<size_t>(num_users), 0.0);
  rep.eaves_common_rates.resize(static_cast<size_t>(num_eaves), 0.0);
  rep.eaves_private_rates.assign(static_cast<size_t>(num_users),
                                 std::vector<double>(static_cast<size_t>(num_eaves), 0.0));
  rep.secrecy_rates.resize(static_cast<size_t>(num_users), 0.0);

  for (int m = 0; m < num_eaves; ++m) {
    const auto& g = links.eavesdroppers[static_cast<size_t>(m)];
    const double sig2 = links.eaves_noise[static_cast<size_t>(m)];
    if (rsma)
      rep.eaves_common_rates[static_cast<size_t>(m)] =
          std::log2(1.0 + eaves_common_sinr(bf, g, sig2));
  }

  for (int k = 0; k < num_users; ++k) {
    const auto& h = links.users[static_cast<size_t>(k)];
    const double sig2 = links.user_noise[static_cast<size_t>(k)];
    double eav_max = 0.0;
    for (int m = 0; m < num_eaves; ++m) {
      const auto& g = links.eavesdroppers[static_cast<size_t>(m)];
      const double gsig2 = links.eaves_noise[static_cast<size_t>(m)];
      const double re = rsma ? std::log2(1.0 + eaves_private_sinr(bf, g, k, gsig2))
                             : sdma_eaves_rate(bf, g, k, gsig2);
      rep.eaves_private_rates[static_cast<size_t>(k)][static_cast<size_t>(m)] = re;
      eav_max = std::max(eav_max, re);
    }
    if (rsma) {
      rep.common_rates[static_cast<size_t>(k)] = std::log2(1.0 + common_sinr(bf, h, sig2));
      rep.private_rates[static_cast<size_t>(k)] = std::log2(1.0 + private_sinr(bf, h, k, sig2));
      const double ck = alloc.common_parts[static_cast<size_t>(k)];
      rep.total_rates[static_cast<size_t>(k)] = ck + rep.private_rates[static_cast<size_t>(k)];
      double csec = 0.0;
      if (alloc.secrecy_common_parts)
        csec = (*alloc.secrecy_common_parts)[static_cast<size_t>(k)];
      rep.secrecy_rates[static_cast<size_t>(k)] =
          csec + clamp_pos(rep.private_rates[static_cast<size_t>(k)] - eav_max);
    } else {
      const double r = sdma_rate(bf, h, k, sig2);
      rep.private_rates[static_cast<size_t>(k)] = r;
      rep.total_rates[static_cast<size_t>(k)] = r;
      rep.secrecy_rates[static_cast<size_t>(k)] = clamp_pos(r - eav_max);
    }
  }

  rep.urpr.resize(static_cast<size_t>(num_users), 0.0);
  rep.usrpr.resize(static_cast<size_t>(num_users), 0.0);
  if (rep.total_power > 0.0) {
    for (int k = 0; k < num_users; ++k) {
      rep.urpr[static_cast<size_t>(k)] = rep.total_rates[static_cast<size_t>(k)] / rep.total_power;
      rep.usrpr[static_cast<size_t>(k)] = rep.secrecy_rates[static_cast<size_t>(k)] / rep.total_power;
    }
  } else {
    rep.degenerate_power = true;
    if (*std::max_element(rep.total_rates.begin(), rep.total_rates.end()) > 0.0)
      throw NumericalError("evaluate: zero power with nonzero rate request");
  }
  return rep;
}

double common_rate_budget(const std::vector<double>& common_rates) {
  if (common_rates.empty()) throw InvalidInput("common_rate_budget: no users");
  return *std::min_element(common_rates.begin(), common_rates.end());
}

bool common_stream_secure(const MetricsReport& report, double tol) {
  if (report.eaves_common_rates.empty()) return true;
  const double worst =
      *std::max_element(report.eaves_common_rates.begin(), report.eaves_common_rates.end());
  return worst <= common_rate_budget(report.common_rates) + tol;
}

}  // namespace risac
