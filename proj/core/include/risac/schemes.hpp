#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "risac/conic.hpp"
#include "risac/fim.hpp"
#include "risac/metrics.hpp"
#include "risac/sca.hpp"
#include "risac/solver.hpp"

namespace risac {

enum class Algorithm { alg1, alg2, alg3 };
enum class Scheme { scheme1, scheme2, scheme3, ben1, sdma };

std::string to_string(Algorithm a);
std::string to_string(Scheme s);
Algorithm algorithm_from_string(const std::string& s);
Scheme scheme_from_string(const std::string& s);
SchemeSelector selector_for(Scheme s);

/// Thresholds and iteration controls of the three iterative designs.
struct AlgorithmConfig {
  double p_max = 1.0;              // watts
  double qos_threshold = 3.0;      // R_U^th, bits/s/Hz
  double secrecy_threshold = 1.0;  // R_sec^th, bits/s/Hz
  double crb_threshold = 1e-7;     // linear
  double penalty_weight = 10.0;    // rho
  bool penalty_ramp = false;       // x2 per iteration, capped at 1e3
  double tau = 1e-3;
  int j_max = 30;
  SchemeSelector selector;
  double security_margin = 1e-3;   // epsilon standing in for the strict (P1d)

  void validate() const;
};

enum class RunStatus { converged, iteration_limit, infeasible, numerical_failure };
std::string to_string(RunStatus s);

struct ConstraintResidual {
  std::string name;
  double residual = 0.0;  // <= 0 satisfied
};

/// Outcome of one Algorithm-1/2/3 run: rank-1-extracted beamformers, exact
/// (non-surrogate) metrics, and the per-iteration traces.
struct RunResult {
  BeamformerSet beamformers;          // rank-1 extracted
  BeamformerSet relaxed;              // solver matrices before extraction
  RateAllocation allocation;
  MetricsReport metrics;              // exact metrics of `beamformers`
  MetricsReport relaxed_metrics;      // exact metrics of `relaxed`
  std::vector<double> objective_trace;
  std::vector<double> dinkelbach_trace;
  std::vector<double> penalty_trace;
  std::vector<ConstraintResidual> feasibility_report;
  RunStatus status = RunStatus::numerical_failure;
  int iterations = 0;
  double crb_det = 0.0;               // det CRB of the extracted solution
  std::string message;

  double objective() const { return objective_trace.empty() ? 0.0 : objective_trace.back(); }
};

/// Scenario slice the assemblers need (built by the experiment layer).
struct SolveScenario {
  LinkEnsemble links;
  SensingGeometry sensing;
  ArrayConfig array;
};

/// Convex subproblem builders (one SCA iteration each).
conic::ConicProblem assemble_p13(const sca::SCAState& state, const AlgorithmConfig& cfg,
                                 const SolveScenario& scenario);
conic::ConicProblem assemble_p21(const sca::SCAState& state, const AlgorithmConfig& cfg,
                                 const SolveScenario& scenario);
conic::ConicProblem assemble_p31(const sca::SCAState& state, const AlgorithmConfig& cfg,
                                 const SolveScenario& scenario);
enum class SdmaVariant { p1, p2, p3 };
conic::ConicProblem assemble_sdma(SdmaVariant variant, const sca::SCAState& state,
                                  const AlgorithmConfig& cfg, const SolveScenario& scenario);

/// Matched-filter initialization: private beams along the leading eigenvector
/// of each H_k, common beam along the leading eigenvector of sum_k H_k, extra
/// beam steered at the first target; powers 40/30/30 percent of 0.9 P_max.
BeamformerSet initial_beamformers(const AlgorithmConfig& cfg, const SolveScenario& scenario,
                                  double budget_fraction = 0.9);

/// Runs Algorithm 1 (URPR), 2 (USRPR) or 3 (NPC) to convergence.
RunResult run_algorithm(Algorithm which, const AlgorithmConfig& cfg,
                        const SolveScenario& scenario, conic::SolverBackend& backend,
                        std::mt19937_64& rng);

/// Isotropic artificial-noise covariance for the residual budget:
/// W_AN = w w^H with |w_i|^2 = (p_max - used_power)/n_tx and phases drawn
/// from rng; trace(W_AN) = p_max - used_power and the diagonal is uniform.
MatrixXcd allocate_an(double p_max, double used_power, int n_tx, std::mt19937_64& rng);

}  // namespace risac
