#pragma once

#include <map>
#include <string>
#include <vector>

#include "risac/conic.hpp"
#include "risac/metrics.hpp"

namespace risac::sca {

/// One trace-log argument chi(W) = sum_q tr(coeff_q W_q) plus a constant
/// noise offset: the building block of all four rate linearization families.
/// The log value is log2(chi + constant).
struct TraceLogTerm {
  std::vector<std::pair<std::string, MatrixXcd>> coefficient_map;
  double constant = 0.0;

  TraceLogTerm& add(const std::string& matrix_id, const MatrixXcd& coeff);
  double chi(const std::map<std::string, MatrixXcd>& values) const;
  double log2_value(const std::map<std::string, MatrixXcd>& values) const;
};

/// Per-iteration state of the successive convex approximation: the expansion
/// point, the leading eigenvectors driving the rank-1 penalties, the
/// Dinkelbach factor, and the objective trace.
struct SCAState {
  BeamformerSet expansion_point;
  std::map<std::string, VectorXcd> penalty_vectors;
  double dinkelbach_factor = 0.0;
  int iteration = 0;
  std::vector<double> objective_trace;

  std::map<std::string, MatrixXcd> expansion_values() const;
};

/// First-order Taylor upper bound of log2(chi(W) + c) at the expansion point:
///   W -> log2(A_j) + (chi(W) - chi_j) / (A_j ln 2),  A_j = chi_j + c.
/// Tight at the expansion point and a global upper bound by concavity.
/// Throws NumericalError when A_j <= 0 (degenerate expansion point).
conic::AffineExpr linearize_upper(const TraceLogTerm& term, const SCAState& state);

/// Dinkelbach factor update: lambda <- min_metric / power.
double dinkelbach_update(double min_metric, double power);

/// tr(W) - u^H W u as (value at W, affine functional tr((I - u u^H) W)).
/// A non-unit u is normalized (with a warning flag in the returned pair's
/// functional name space left to callers); zero u is rejected.
std::pair<double, conic::AffineExpr> rank_one_penalty(const MatrixXcd& w,
                                                      const VectorXcd& u_prev,
                                                      const std::string& matrix_id);

/// Leading eigenvector, deterministic: within the top eigenspace (ties at
/// relative tolerance 1e-9) picks the direction maximizing |first component|,
/// then fixes the global phase so the first nonzero entry is real positive.
/// The zero matrix yields the first standard basis vector.
VectorXcd refresh_penalty_vector(const MatrixXcd& w);

/// w = sqrt(lambda_max) * u_max with the same phase canonicalization.
VectorXcd extract_beamformer(const MatrixXcd& w);

/// True when |last - previous| <= tau or the trace has reached j_max entries.
bool converged(const std::vector<double>& trace, double tau, int j_max);

}  // namespace risac::sca
