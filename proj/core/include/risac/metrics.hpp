#pragma once

#include <optional>
#include <vector>

#include "risac/array.hpp"
#include "risac/common.hpp"

namespace risac {

/// The transmit covariances of one design: common stream W_c, K private
/// streams W_k, extra/sensing stream W_v, and (after an Algorithm-3 run) the
/// artificial-noise covariance W_AN. W_AN is excluded from total_power(): it
/// carries the residual P_max - P.
struct BeamformerSet {
  MatrixXcd w_common;
  std::vector<MatrixXcd> w_private;
  MatrixXcd w_extra;                 // size 0 when the scheme has no extra signal
  std::optional<MatrixXcd> w_an;

  int num_users() const { return static_cast<int>(w_private.size()); }
  int dim() const;
  bool has_extra() const { return w_extra.rows() > 0; }

  double total_power() const;

  /// Checks Hermitian-PSD of every matrix (min eigenvalue >= -1e-9 * trace).
  void validate() const;

  static BeamformerSet zeros(int n_tx, int num_users, bool with_extra = true);
};

/// Common-rate split c_k (and the secrecy split c^sec_{c,k} for the
/// secrecy-rate problems). All entries nonnegative.
struct RateAllocation {
  std::vector<double> common_parts;
  std::optional<std::vector<double>> secrecy_common_parts;
};

/// Everything the paper reports about one design point. Rates in bits/s/Hz,
/// power in watts, ratios in bits/s/Hz/W.
struct MetricsReport {
  std::vector<double> common_rates;                // R_{c,k}
  std::vector<double> private_rates;               // R_{p,k}
  std::vector<double> total_rates;                 // c_k + R_{p,k}
  std::vector<double> eaves_common_rates;          // R^E_{c,m}
  std::vector<std::vector<double>> eaves_private_rates;  // [k][m]
  std::vector<double> secrecy_rates;               // R_k^sec
  double total_power = 0.0;
  std::vector<double> urpr;                        // R_k^total / P
  std::vector<double> usrpr;                       // R_k^sec / P
  bool degenerate_power = false;

  double min_total_rate() const;
  double min_secrecy_rate() const;
  double min_urpr() const;
  double min_usrpr() const;
};

/// Scenario slice the metric formulas need: channel statistics and noise for
/// every user and eavesdropper.
struct LinkEnsemble {
  std::vector<ChannelStats> users;          // H_k
  std::vector<ChannelStats> eavesdroppers;  // G_m
  std::vector<double> user_noise;           // sigma_k^2 (watts)
  std::vector<double> eaves_noise;          // sigma_m^2 (watts)
};

/// Expected common-stream SINR at a user:
/// tr(H W_c) / (sum_i tr(H W_i) + tr(H W_v) + sigma^2).
double common_sinr(const BeamformerSet& bf, const ChannelStats& ch, double noise_power);

/// Expected private-stream SINR after SIC of the common stream:
/// tr(H W_k) / (sum_{i != k} tr(H W_i) + tr(H W_v) + sigma^2).
double private_sinr(const BeamformerSet& bf, const ChannelStats& ch, int user_index,
                    double noise_power);

/// Eavesdropper SINR on the common stream (same shape as common_sinr with G_m).
double eaves_common_sinr(const BeamformerSet& bf, const ChannelStats& ch_eaves,
                         double noise_power);

/// Eavesdropper SINR on user k's private stream; the common stream is *not*
/// cancelled, so tr(G W_c) stays in the denominator.
double eaves_private_sinr(const BeamformerSet& bf, const ChannelStats& ch_eaves,
                          int user_index, double noise_power);

/// SDMA rate at user k (no common stream; W_c ignored entirely).
double sdma_rate(const BeamformerSet& bf, const ChannelStats& ch, int user_index,
                 double noise_power);

/// SDMA eavesdropping rate on user k's stream.
double sdma_eaves_rate(const BeamformerSet& bf, const ChannelStats& ch_eaves,
                       int user_index, double noise_power);

/// Full closed-form report. For SDMA sets `rsma = false`: total rate is the
/// SDMA rate, secrecy is [R - max_m R^E]^+, and the allocation is ignored.
MetricsReport evaluate(const BeamformerSet& bf, const RateAllocation& alloc,
                       const LinkEnsemble& links, bool rsma = true);

/// min_k R_{c,k}: the rate the common codeword can carry.
double common_rate_budget(const std::vector<double>& common_rates);

/// Eq.-(21) security check: max_m R^E_{c,m} <= min_k R_{c,k} + tol.
bool common_stream_secure(const MetricsReport& report, double tol = 1e-6);

}  // namespace risac
