#pragma once

#include <map>
#include <memory>
#include <string>

#include "risac/conic.hpp"

namespace risac::conic {

enum class SolveStatus { optimal, infeasible, numerical_failure, iteration_limit };

std::string to_string(SolveStatus s);

struct SolverStats {
  int newton_steps = 0;
  int barrier_stages = 0;
  double final_gap = 0.0;
  double max_violation = 0.0;   // exact post-hoc constraint residual
  double phase1_slack = 0.0;    // certified infeasibility margin when infeasible
  std::string message;
};

struct Solution {
  SolveStatus status = SolveStatus::numerical_failure;
  std::map<std::string, MatrixXcd> matrix_values;
  std::map<std::string, double> scalar_values;
  double objective_value = 0.0;
  SolverStats stats;
};

struct SolveOptions {
  double gap_tol = 1e-8;            // absolute duality-gap target (normalized objective)
  double feas_margin = 1e-9;        // phase-1 certification threshold
  int max_newton_steps = 2000;
  double barrier_mu = 60.0;
  bool verbose = false;             // also enabled by RISAC_SOLVER_VERBOSE=1
  /// Optional primal initialization (e.g. the SCA expansion point). Values
  /// are ridge-shifted as needed to obtain a strictly interior start.
  std::map<std::string, MatrixXcd> initial_matrices;
  std::map<std::string, double> initial_scalars;
};

/// Solver backend contract: deterministic given identical inputs and
/// settings; never throws on solver failure (returns numerical_failure with
/// diagnostics); throws InvalidInput only for malformed problems.
class SolverBackend {
 public:
  virtual ~SolverBackend() = default;
  virtual Solution solve(const ConicProblem& problem, const SolveOptions& options) = 0;
  virtual std::string name() const = 0;
};

/// Primal path-following barrier method specialized to this problem class:
/// -logdet barriers on the Hermitian variable cones, log barriers on scalar
/// inequalities, and the hypograph barrier -log(logdet M - b) - logdet M for
/// the logdet constraints. Phase-1 minimizes a shared slack to find a strict
/// interior point or certify infeasibility.
class BarrierBackend final : public SolverBackend {
 public:
  Solution solve(const ConicProblem& problem, const SolveOptions& options) override;
  std::string name() const override { return "barrier"; }
};

Solution solve(const ConicProblem& problem, SolverBackend& backend,
               const SolveOptions& options = {});

std::shared_ptr<SolverBackend> make_default_backend();

}  // namespace risac::conic
