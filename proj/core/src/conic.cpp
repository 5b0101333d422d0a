#include "risac/conic.hpp"

#include <algorithm>
#include <ostream>

namespace risac::conic {

namespace {
MatrixXcd hermitian_part(const MatrixXcd& c) { return 0.5 * (c + c.adjoint()); }
}  // namespace

AffineExpr& AffineExpr::add_trace(const std::string& matrix_id, const MatrixXcd& coeff) {
  auto it = matrix_coeffs.find(matrix_id);
  if (it == matrix_coeffs.end())
    matrix_coeffs.emplace(matrix_id, hermitian_part(coeff));
  else
    it->second += hermitian_part(coeff);
  return *this;
}

AffineExpr& AffineExpr::add_scalar(const std::string& scalar_id, double coeff) {
  scalar_coeffs[scalar_id] += coeff;
  return *this;
}

AffineExpr& AffineExpr::add(const AffineExpr& other, double weight) {
  for (const auto& [id, c] : other.matrix_coeffs) {
    auto it = matrix_coeffs.find(id);
    if (it == matrix_coeffs.end())
      matrix_coeffs.emplace(id, weight * c);
    else
      it->second += weight * c;
  }
  for (const auto& [id, c] : other.scalar_coeffs) scalar_coeffs[id] += weight * c;
  constant += weight * other.constant;
  return *this;
}

AffineExpr& AffineExpr::scale(double s) {
  for (auto& [id, c] : matrix_coeffs) c *= s;
  for (auto& [id, c] : scalar_coeffs) c *= s;
  constant *= s;
  return *this;
}

double AffineExpr::evaluate(const std::map<std::string, MatrixXcd>& mats,
                            const std::map<std::string, double>& scalars) const {
  double v = constant;
  for (const auto& [id, c] : matrix_coeffs) {
    auto it = mats.find(id);
    if (it == mats.end()) throw InvalidInput("AffineExpr::evaluate: missing matrix " + id);
    v += (c * it->second).trace().real();
  }
  for (const auto& [id, c] : scalar_coeffs) {
    auto it = scalars.find(id);
    if (it == scalars.end()) throw InvalidInput("AffineExpr::evaluate: missing scalar " + id);
    v += c * it->second;
  }
  return v;
}

LinMatMap LinMatMap::diagonal(std::vector<AffineExpr> entries) {
  LinMatMap m;
  m.dim = static_cast<int>(entries.size());
  m.diag_only = true;
  m.diag_entries = std::move(entries);
  return m;
}

LinMatMap LinMatMap::scalar(AffineExpr entry) {
  std::vector<AffineExpr> v;
  v.push_back(std::move(entry));
  return diagonal(std::move(v));
}

MatrixXd LinMatMap::evaluate(const std::map<std::string, MatrixXcd>& mats,
                             const std::map<std::string, double>& scalars) const {
  MatrixXd out = MatrixXd::Zero(dim, dim);
  if (diag_only) {
    for (int d = 0; d < dim; ++d)
      out(d, d) = diag_entries[static_cast<size_t>(d)].evaluate(mats, scalars);
    return out;
  }
  if (constant.rows() == dim) out = constant;
  for (const auto& [id, derivs] : mat_derivs) {
    auto it = mats.find(id);
    if (it == mats.end()) throw InvalidInput("LinMatMap::evaluate: missing matrix " + id);
    const int n = static_cast<int>(it->second.rows());
    VectorXd params(herm_param_count(n));
    herm_to_params(it->second, params);
    for (int p = 0; p < params.size(); ++p)
      if (params(p) != 0.0) out += params(p) * derivs[static_cast<size_t>(p)];
  }
  for (const auto& [id, coeff] : scalar_derivs) {
    auto it = scalars.find(id);
    if (it == scalars.end()) throw InvalidInput("LinMatMap::evaluate: missing scalar " + id);
    out += it->second * coeff;
  }
  return out;
}

void ConicProblem::add_matrix_var(const std::string& id, int dim, bool psd) {
  if (dim < 1) throw InvalidInput("add_matrix_var: dimension must be >= 1");
  if (has_matrix_var(id) || has_scalar_var(id))
    throw InvalidInput("add_matrix_var: duplicate id " + id);
  matrix_vars_.emplace_back(id, dim);
  if (psd) psd_vars_.push_back(id);
}

void ConicProblem::add_scalar_var(const std::string& id) {
  if (has_matrix_var(id) || has_scalar_var(id))
    throw InvalidInput("add_scalar_var: duplicate id " + id);
  scalar_vars_.push_back(id);
}

void ConicProblem::set_objective(AffineExpr objective) { objective_ = std::move(objective); }

void ConicProblem::add_constraint(AffineExpr expr, Relation rel, double bound,
                                  std::string name, bool relaxable) {
  AffineConstraint c;
  c.expr = std::move(expr);
  c.relation = rel;
  c.bound = bound;
  c.name = std::move(name);
  c.relaxable = relaxable;
  affine_.push_back(std::move(c));
}

void ConicProblem::add_logdet_ge(LinMatMap map, AffineExpr bound, std::string name,
                                 bool relaxable) {
  if (map.dim < 1) throw InvalidInput("add_logdet_ge: empty map");
  LogDetConstraint c;
  c.map = std::move(map);
  c.bound = std::move(bound);
  c.name = std::move(name);
  c.relaxable = relaxable;
  logdets_.push_back(std::move(c));
}

int ConicProblem::matrix_dim(const std::string& id) const {
  for (const auto& [name, dim] : matrix_vars_)
    if (name == id) return dim;
  throw InvalidInput("matrix_dim: unknown variable " + id);
}

bool ConicProblem::has_matrix_var(const std::string& id) const {
  return std::any_of(matrix_vars_.begin(), matrix_vars_.end(),
                     [&](const auto& p) { return p.first == id; });
}

bool ConicProblem::has_scalar_var(const std::string& id) const {
  return std::find(scalar_vars_.begin(), scalar_vars_.end(), id) != scalar_vars_.end();
}

namespace {

void validate_expr(const ConicProblem& p, const AffineExpr& e, const std::string& where) {
  for (const auto& [id, c] : e.matrix_coeffs) {
    if (!p.has_matrix_var(id)) throw InvalidInput(where + ": unknown matrix variable " + id);
    const int dim = p.matrix_dim(id);
    if (c.rows() != dim || c.cols() != dim)
      throw InvalidInput(where + ": coefficient dimension mismatch for " + id);
  }
  for (const auto& [id, c] : e.scalar_coeffs) {
    (void)c;
    if (!p.has_scalar_var(id)) throw InvalidInput(where + ": unknown scalar variable " + id);
  }
}

}  // namespace

void ConicProblem::validate() const {
  validate_expr(*this, objective_, "objective");
  for (const auto& c : affine_) validate_expr(*this, c.expr, "constraint " + c.name);
  for (const auto& c : logdets_) {
    validate_expr(*this, c.bound, "logdet bound " + c.name);
    if (c.map.diag_only) {
      if (static_cast<int>(c.map.diag_entries.size()) != c.map.dim)
        throw InvalidInput("logdet " + c.name + ": diagonal entry count mismatch");
      for (const auto& e : c.map.diag_entries)
        validate_expr(*this, e, "logdet " + c.name);
    } else {
      for (const auto& [id, derivs] : c.map.mat_derivs) {
        if (!has_matrix_var(id)) throw InvalidInput("logdet " + c.name + ": unknown variable " + id);
        const int n = matrix_dim(id);
        if (static_cast<int>(derivs.size()) != herm_param_count(n))
          throw InvalidInput("logdet " + c.name + ": derivative stack size mismatch for " + id);
        for (const auto& d : derivs)
          if (d.rows() != c.map.dim || d.cols() != c.map.dim)
            throw InvalidInput("logdet " + c.name + ": derivative dimension mismatch");
      }
      for (const auto& [id, coeff] : c.map.scalar_derivs) {
        if (!has_scalar_var(id)) throw InvalidInput("logdet " + c.name + ": unknown scalar " + id);
        if (coeff.rows() != c.map.dim || coeff.cols() != c.map.dim)
          throw InvalidInput("logdet " + c.name + ": scalar coefficient dimension mismatch");
      }
    }
  }
}

ConicProblem ConicProblem::relaxed_copy(const std::string& slack_id) const {
  ConicProblem r = *this;
  r.add_scalar_var(slack_id);
  AffineExpr slack;
  slack.add_scalar(slack_id, 1.0);
  r.objective_ = slack;
  for (auto& c : r.affine_) {
    if (!c.relaxable || c.relation == Relation::EQ) continue;
    const double sign = c.relation == Relation::LE ? -1.0 : 1.0;
    c.expr.add_scalar(slack_id, sign);
  }
  for (auto& c : r.logdets_) {
    if (!c.relaxable) continue;
    c.bound.add_scalar(slack_id, -1.0);
  }
  return r;
}

namespace {

void dump_expr(std::ostream& os, const AffineExpr& e) {
  if (e.constant != 0.0) os << "  const " << e.constant << "\n";
  for (const auto& [id, c] : e.scalar_coeffs) os << "  scalar " << id << " " << c << "\n";
  for (const auto& [id, c] : e.matrix_coeffs)
    for (int i = 0; i < c.rows(); ++i)
      for (int j = i; j < c.cols(); ++j)
        if (c(i, j) != Complex(0.0, 0.0))
          os << "  mat " << id << " " << i << " " << j << " " << c(i, j).real() << " "
             << c(i, j).imag() << "\n";
}

}  // namespace

void ConicProblem::dump(std::ostream& os) const {
  os << "# risac conic problem dump v1\n";
  for (const auto& [id, dim] : matrix_vars_) {
    os << "matrix_var " << id << " " << dim;
    if (std::find(psd_vars_.begin(), psd_vars_.end(), id) != psd_vars_.end()) os << " psd";
    os << "\n";
  }
  for (const auto& id : scalar_vars_) os << "scalar_var " << id << "\n";
  os << "objective minimize\n";
  dump_expr(os, objective_);
  for (const auto& c : affine_) {
    const char* rel = c.relation == Relation::LE ? "le" : (c.relation == Relation::GE ? "ge" : "eq");
    os << "constraint " << c.name << " " << rel << " " << c.bound << "\n";
    dump_expr(os, c.expr);
  }
  for (const auto& c : logdets_) {
    os << "logdet " << c.name << " dim " << c.map.dim << "\n";
    os << " bound\n";
    dump_expr(os, c.bound);
    if (c.map.diag_only) {
      for (int d = 0; d < c.map.dim; ++d) {
        os << " diag " << d << "\n";
        dump_expr(os, c.map.diag_entries[static_cast<size_t>(d)]);
      }
    } else {
      for (int a = 0; a < c.map.dim; ++a)
        for (int b = a; b < c.map.dim; ++b)
          if (c.map.constant.rows() == c.map.dim && c.map.constant(a, b) != 0.0)
            os << " ldconst " << a << " " << b << " " << c.map.constant(a, b) << "\n";
      for (const auto& [id, derivs] : c.map.mat_derivs)
        for (size_t p = 0; p < derivs.size(); ++p)
          for (int a = 0; a < c.map.dim; ++a)
            for (int b = a; b < c.map.dim; ++b)
              if (derivs[p](a, b) != 0.0)
                os << " ldcoef " << id << " " << p << " " << a << " " << b << " "
                   << derivs[p](a, b) << "\n";
    }
  }
}

void encode_logdet(LinMatMap map, double bound, ConicProblem& problem, std::string name,
                   bool relaxable) {
  AffineExpr b;
  b.constant = bound;
  problem.add_logdet_ge(std::move(map), std::move(b), std::move(name), relaxable);
}

MatrixXd embed_complex(const MatrixXcd& h) {
  if (h.rows() != h.cols()) throw InvalidInput("embed_complex: matrix not square");
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw InvalidInput("embed_complex: matrix not Hermitian");
  const int n = static_cast<int>(h.rows());
  MatrixXd e(2 * n, 2 * n);
  e.topLeftCorner(n, n) = h.real();
  e.topRightCorner(n, n) = -h.imag();
  e.bottomLeftCorner(n, n) = h.imag();
  e.bottomRightCorner(n, n) = h.real();
  return e;
}

int herm_param_count(int n) { return n * n; }

void herm_to_params(const MatrixXcd& w, Eigen::Ref<VectorXd> out) {
  const int n = static_cast<int>(w.rows());
  int p = 0;
  for (int i = 0; i < n; ++i) out(p++) = w(i, i).real();
  for (int i = 0; i < n - 1; ++i)
    for (int j = i + 1; j < n; ++j) {
      out(p++) = w(i, j).real();
      out(p++) = w(i, j).imag();
    }
}

MatrixXcd herm_from_params(const Eigen::Ref<const VectorXd>& params, int n) {
  MatrixXcd w(n, n);
  int p = 0;
  for (int i = 0; i < n; ++i) w(i, i) = params(p++);
  for (int i = 0; i < n - 1; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double re = params(p++);
      const double im = params(p++);
      w(i, j) = Complex(re, im);
      w(j, i) = Complex(re, -im);
    }
  return w;
}

void herm_trace_coeffs(const MatrixXcd& c, Eigen::Ref<VectorXd> out) {
  const int n = static_cast<int>(c.rows());
  int p = 0;
  for (int i = 0; i < n; ++i) out(p++) = c(i, i).real();
  for (int i = 0; i < n - 1; ++i)
    for (int j = i + 1; j < n; ++j) {
      out(p++) = 2.0 * c(i, j).real();
      out(p++) = 2.0 * c(i, j).imag();
    }
}

}  // namespace risac::conic
