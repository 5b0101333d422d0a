#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "risac/common.hpp"

namespace risac::conic {

/// Real affine functional over the problem variables:
///   value = constant + sum_q tr(C_q W_q) + sum_s c_s x_s
/// with every C_q Hermitian (so the trace terms are real).
struct AffineExpr {
  std::map<std::string, MatrixXcd> matrix_coeffs;
  std::map<std::string, double> scalar_coeffs;
  double constant = 0.0;

  AffineExpr& add_trace(const std::string& matrix_id, const MatrixXcd& coeff);
  AffineExpr& add_scalar(const std::string& scalar_id, double coeff);
  AffineExpr& add(const AffineExpr& other, double weight = 1.0);
  AffineExpr& scale(double s);

  double evaluate(const std::map<std::string, MatrixXcd>& mats,
                  const std::map<std::string, double>& scalars) const;
};

/// Affine map from the variables into real symmetric dim x dim matrices.
/// Two representations:
///  - diagonal maps: each diagonal entry is an AffineExpr (logdet is then the
///    sum of entry logs; this carries every rate-type constraint), and
///  - general maps: a constant part plus precomputed directional derivatives,
///    one dim x dim symmetric matrix per real parameter of each matrix
///    variable (canonical Hermitian parameter order; see herm_param_count).
struct LinMatMap {
  int dim = 0;
  bool diag_only = true;
  std::vector<AffineExpr> diag_entries;

  MatrixXd constant;                                       // general maps
  std::map<std::string, std::vector<MatrixXd>> mat_derivs; // var -> per-param dM
  std::map<std::string, MatrixXd> scalar_derivs;

  static LinMatMap diagonal(std::vector<AffineExpr> entries);
  static LinMatMap scalar(AffineExpr entry);

  MatrixXd evaluate(const std::map<std::string, MatrixXcd>& mats,
                    const std::map<std::string, double>& scalars) const;
};

enum class Relation { LE, GE, EQ };

struct AffineConstraint {
  AffineExpr expr;
  Relation relation = Relation::LE;
  double bound = 0.0;
  std::string name;
  bool relaxable = false;
};

/// logdet(map(x)) >= bound(x). `relaxable` marks constraints a feasibility
/// restoration pass may slacken.
struct LogDetConstraint {
  LinMatMap map;
  AffineExpr bound;
  std::string name;
  bool relaxable = false;
};

/// Conic problem over complex Hermitian matrix variables and real scalars:
/// minimize an affine objective subject to affine constraints, PSD cones on
/// the matrix variables, and logdet lower bounds.
class ConicProblem {
 public:
  /// Declares an n x n Hermitian variable; PSD-constrained by default.
  void add_matrix_var(const std::string& id, int dim, bool psd = true);
  void add_scalar_var(const std::string& id);

  void set_objective(AffineExpr objective);  // minimized
  void add_constraint(AffineExpr expr, Relation rel, double bound,
                      std::string name, bool relaxable = false);
  void add_logdet_ge(LinMatMap map, AffineExpr bound, std::string name,
                     bool relaxable = false);

  const std::vector<std::pair<std::string, int>>& matrix_vars() const { return matrix_vars_; }
  const std::vector<std::string>& scalar_vars() const { return scalar_vars_; }
  const std::vector<std::string>& psd_constraints() const { return psd_vars_; }
  const AffineExpr& objective() const { return objective_; }
  const std::vector<AffineConstraint>& affine_constraints() const { return affine_; }
  const std::vector<LogDetConstraint>& logdet_constraints() const { return logdets_; }

  int matrix_dim(const std::string& id) const;
  bool has_matrix_var(const std::string& id) const;
  bool has_scalar_var(const std::string& id) const;

  /// Verifies that every functional references only declared variables with
  /// consistent dimensions. Throws InvalidInput otherwise.
  void validate() const;

  /// Feasibility-restoration companion: a copy with a fresh scalar `slack_id`
  /// minimized as the objective, where every constraint marked relaxable is
  /// loosened by the slack (inequalities by +-slack, logdet bounds by
  /// -slack). Non-relaxable constraints are kept as they are.
  ConicProblem relaxed_copy(const std::string& slack_id) const;

  /// Plain-text dump (variables, cones, triplet-form coefficients) for
  /// cross-checking against external modeling tools. Format, one record per
  /// line:
  ///   matrix_var <id> <dim> [psd]
  ///   scalar_var <id>
  ///   objective / constraint <name> <le|ge|eq> <bound> followed by indented
  ///     terms: "const <v>", "scalar <id> <v>", "mat <id> <i> <j> <re> <im>"
  ///   logdet <name> dim <m> followed by "bound" terms as above, diagonal
  ///     entries as "diag <d> ..." terms, general maps as
  ///     "ldcoef <id> <param> <a> <b> <v>" triplets and "ldconst <a> <b> <v>".
  void dump(std::ostream& os) const;

 private:
  std::vector<std::pair<std::string, int>> matrix_vars_;
  std::vector<std::string> scalar_vars_;
  std::vector<std::string> psd_vars_;
  AffineExpr objective_;
  std::vector<AffineConstraint> affine_;
  std::vector<LogDetConstraint> logdets_;
};

/// Appends the sensing-style constraint logdet(map(x)) >= bound.
void encode_logdet(LinMatMap map, double bound, ConicProblem& problem,
                   std::string name = "logdet", bool relaxable = false);

/// Real symmetric embedding [[Re H, -Im H], [Im H, Re H]] of a Hermitian
/// matrix; PSD iff H is PSD, trace doubles, and tr(A B) = tr(embed(A)
/// embed(B)) / 2. Rejects inputs with asymmetry above 1e-9.
MatrixXd embed_complex(const MatrixXcd& h);

/// Number of real parameters of an n x n Hermitian matrix (n^2) in the
/// canonical order: n diagonal entries, then (Re, Im) pairs for each
/// off-diagonal (i, j), i < j, ordered lexicographically.
int herm_param_count(int n);

/// Canonical parameter packing/unpacking and trace forms.
void herm_to_params(const MatrixXcd& w, Eigen::Ref<VectorXd> out);
MatrixXcd herm_from_params(const Eigen::Ref<const VectorXd>& params, int n);
/// g with tr(C W) = g . params(W) for Hermitian C.
void herm_trace_coeffs(const MatrixXcd& c, Eigen::Ref<VectorXd> out);

}  // namespace risac::conic
