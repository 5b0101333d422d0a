#include "risac/sca.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace risac::sca {

namespace {
constexpr double kLn2 = 0.6931471805599453;

// Phase-canonicalize: first entry with |v_i| > tol becomes real positive.
VectorXcd canonical_phase(VectorXcd v) {
  const double tol = 1e-12 * std::max(1.0, v.cwiseAbs().maxCoeff());
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > tol) {
      v *= std::polar(1.0, -std::arg(v(i)));
      break;
    }
  }
  return v;
}
}  // namespace

TraceLogTerm& TraceLogTerm::add(const std::string& matrix_id, const MatrixXcd& coeff) {
  for (auto& [id, c] : coefficient_map) {
    if (id == matrix_id) {
      c += coeff;
      return *this;
    }
  }
  coefficient_map.emplace_back(matrix_id, coeff);
  return *this;
}

double TraceLogTerm::chi(const std::map<std::string, MatrixXcd>& values) const {
  double v = 0.0;
  for (const auto& [id, c] : coefficient_map) {
    auto it = values.find(id);
    if (it == values.end()) throw InvalidInput("TraceLogTerm: missing matrix " + id);
    v += (c * it->second).trace().real();
  }
  return v;
}

double TraceLogTerm::log2_value(const std::map<std::string, MatrixXcd>& values) const {
  return log2_safe(chi(values) + constant);
}

std::map<std::string, MatrixXcd> SCAState::expansion_values() const {
  std::map<std::string, MatrixXcd> vals;
  const auto& bf = expansion_point;
  if (bf.w_common.rows() > 0) vals["Wc"] = bf.w_common;
  for (int k = 0; k < bf.num_users(); ++k)
    vals["W" + std::to_string(k + 1)] = bf.w_private[static_cast<size_t>(k)];
  if (bf.has_extra()) vals["Wv"] = bf.w_extra;
  return vals;
}

conic::AffineExpr linearize_upper(const TraceLogTerm& term, const SCAState& state) {
  const auto values = state.expansion_values();
  const double chi_j = term.chi(values);
  const double a_j = chi_j + term.constant;
  if (!(a_j > 0.0))
    throw NumericalError("linearize_upper: degenerate expansion point (A <= 0)");
  conic::AffineExpr expr;
  expr.constant = std::log2(a_j) - chi_j / (a_j * kLn2);
  const double slope = 1.0 / (a_j * kLn2);
  for (const auto& [id, c] : term.coefficient_map) expr.add_trace(id, slope * c);
  return expr;
}

double dinkelbach_update(double min_metric, double power) {
  if (!(power > 0.0)) throw InvalidInput("dinkelbach_update: power must be positive");
  return min_metric / power;
}

std::pair<double, conic::AffineExpr> rank_one_penalty(const MatrixXcd& w,
                                                      const VectorXcd& u_prev,
                                                      const std::string& matrix_id) {
  if (w.rows() != w.cols() || w.rows() != u_prev.size())
    throw InvalidInput("rank_one_penalty: dimension mismatch");
  const double norm = u_prev.norm();
  if (!(norm > 0.0)) throw InvalidInput("rank_one_penalty: zero penalty vector");
  VectorXcd u = u_prev;
  if (std::abs(norm - 1.0) > 1e-9) u /= norm;  // normalize with a shrug
  const int n = static_cast<int>(w.rows());
  const MatrixXcd coeff = MatrixXcd::Identity(n, n) - u * u.adjoint();
  const double value = (coeff * w).trace().real();
  conic::AffineExpr expr;
  expr.add_trace(matrix_id, coeff);
  return {value, expr};
}

VectorXcd refresh_penalty_vector(const MatrixXcd& w) {
  if (w.rows() != w.cols()) throw InvalidInput("refresh_penalty_vector: not square");
  const int n = static_cast<int>(w.rows());
  const double scale = w.cwiseAbs().maxCoeff();
  if (scale <= 0.0) return VectorXcd::Unit(n, 0);  // zero matrix: flagged basis vector

  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (w + w.adjoint()));
  const auto& evals = es.eigenvalues();
  const double lmax = evals(n - 1);
  const double tie_tol = 1e-9 * std::max(1.0, std::abs(lmax));

  // Collect the top eigenspace and rotate it toward e_1 (then e_2, ...) so
  // repeated eigenvalues give a reproducible answer.
  int first = n - 1;
  while (first > 0 && lmax - evals(first - 1) <= tie_tol) --first;
  const MatrixXcd basis = es.eigenvectors().rightCols(n - first);
  for (int row = 0; row < n; ++row) {
    const VectorXcd proj = basis.adjoint() * VectorXcd::Unit(n, row);
    if (proj.norm() > 1e-9) {
      VectorXcd v = basis * (proj / proj.norm());
      return canonical_phase(v / v.norm());
    }
  }
  return canonical_phase(basis.col(basis.cols() - 1));
}

VectorXcd extract_beamformer(const MatrixXcd& w) {
  if (w.rows() != w.cols()) throw InvalidInput("extract_beamformer: not square");
  const int n = static_cast<int>(w.rows());
  if (w.cwiseAbs().maxCoeff() <= 0.0) return VectorXcd::Zero(n);
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (w + w.adjoint()));
  const double lmax = es.eigenvalues()(n - 1);
  if (lmax <= 0.0) return VectorXcd::Zero(n);
  const VectorXcd u = refresh_penalty_vector(w);
  return std::sqrt(lmax) * u;
}

bool converged(const std::vector<double>& trace, double tau, int j_max) {
  if (trace.empty()) throw InvalidInput("converged: empty trace");
  if (static_cast<int>(trace.size()) >= j_max) return true;
  if (trace.size() < 2) return false;
  return std::abs(trace.back() - trace[trace.size() - 2]) <= tau;
}

}  // namespace risac::sca
