#include "risac/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <mutex>

namespace risac::conic {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::numerical_failure: return "numerical-failure";
    case SolveStatus::iteration_limit: return "iteration-limit";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct VarLayout {
  std::vector<std::string> mat_names;
  std::vector<int> mat_dims;
  std::vector<int> mat_offsets;
  std::vector<std::string> scal_names;
  std::vector<int> scal_offsets;
  std::map<std::string, int> mat_index;
  std::map<std::string, int> scal_index;
  int total = 0;
};

struct CompiledExpr {
  VectorXd grad;     // length = layout.total (+1 slack column handled separately)
  double constant = 0.0;
  double value(const VectorXd& x) const { return grad.dot(x) + constant; }
};

struct CompiledIneq {  // a.x <= r  with slack r - a.x
  CompiledExpr lhs;
  double bound = 0.0;
  bool relaxable = true;
  std::string name;
};

struct CompiledDiagLog {
  std::vector<CompiledExpr> entries;  // A_d(x), all must stay positive
  CompiledExpr bound;
  bool relaxable = true;
  std::string name;
};

struct CompiledGenLog {
  std::vector<int> idx;           // global parameter indices the map touches
  std::vector<MatrixXd> dmats;    // dM/dx_i, same order as idx
  MatrixXd constant;              // dim x dim
  CompiledExpr bound;
  int dim = 0;
  bool relaxable = true;
  std::string name;
};

struct Compiled {
  VarLayout layout;
  VectorXd obj;          // normalized objective gradient
  double obj_const = 0.0;
  double obj_norm = 1.0;
  std::vector<CompiledIneq> ineqs;
  MatrixXd eq_a;         // rows over x (scalar columns only)
  VectorXd eq_b;
  std::vector<CompiledDiagLog> diag_logs;
  std::vector<CompiledGenLog> gen_logs;
  double nu = 0.0;       // barrier parameter
};

// Off-diagonal (i, j) pairs in canonical order for dimension n.
const std::vector<std::pair<int, int>>& offdiag_pairs(int n) {
  static std::map<int, std::vector<std::pair<int, int>>> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n - 1; ++i)
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  return cache.emplace(n, std::move(pairs)).first->second;
}

VarLayout make_layout(const ConicProblem& p) {
  VarLayout lo;
  int off = 0;
  for (const auto& [name, dim] : p.matrix_vars()) {
    lo.mat_index[name] = static_cast<int>(lo.mat_names.size());
    lo.mat_names.push_back(name);
    lo.mat_dims.push_back(dim);
    lo.mat_offsets.push_back(off);
    off += herm_param_count(dim);
  }
  for (const auto& name : p.scalar_vars()) {
    lo.scal_index[name] = static_cast<int>(lo.scal_names.size());
    lo.scal_names.push_back(name);
    lo.scal_offsets.push_back(off);
    off += 1;
  }
  lo.total = off;
  return lo;
}

CompiledExpr compile_expr(const AffineExpr& e, const VarLayout& lo) {
  CompiledExpr ce;
  ce.grad = VectorXd::Zero(lo.total);
  ce.constant = e.constant;
  for (const auto& [id, c] : e.matrix_coeffs) {
    const int vi = lo.mat_index.at(id);
    const int n = lo.mat_dims[static_cast<size_t>(vi)];
    herm_trace_coeffs(c, ce.grad.segment(lo.mat_offsets[static_cast<size_t>(vi)],
                                         herm_param_count(n)));
  }
  for (const auto& [id, c] : e.scalar_coeffs)
    ce.grad(lo.scal_offsets[static_cast<size_t>(lo.scal_index.at(id))]) += c;
  return ce;
}

Compiled compile(const ConicProblem& p) {
  Compiled cp;
  cp.layout = make_layout(p);
  const auto& lo = cp.layout;

  const CompiledExpr obj = compile_expr(p.objective(), lo);
  cp.obj_const = obj.constant;
  cp.obj_norm = std::max(obj.grad.cwiseAbs().maxCoeff(), 1e-12);
  cp.obj = obj.grad / cp.obj_norm;

  std::vector<Eigen::RowVectorXd> eq_rows;
  std::vector<double> eq_rhs;
  for (const auto& c : p.affine_constraints()) {
    CompiledExpr e = compile_expr(c.expr, lo);
    if (c.relation == Relation::EQ) {
      for (int vi = 0; vi < static_cast<int>(lo.mat_names.size()); ++vi) {
        const int n = lo.mat_dims[static_cast<size_t>(vi)];
        if (e.grad.segment(lo.mat_offsets[static_cast<size_t>(vi)], herm_param_count(n))
                .cwiseAbs().maxCoeff() > 0.0)
          throw InvalidInput("barrier backend: equality constraints over matrix variables "
                             "are not supported (" + c.name + ")");
      }
      eq_rows.emplace_back(e.grad.transpose());
      eq_rhs.push_back(c.bound - e.constant);
      continue;
    }
    CompiledIneq ci;
    const double sign = c.relation == Relation::LE ? 1.0 : -1.0;
    ci.lhs.grad = sign * e.grad;
    ci.lhs.constant = sign * e.constant;
    ci.bound = sign * c.bound;
    // Normalize rows for conditioning.
    const double rn = std::max(ci.lhs.grad.cwiseAbs().maxCoeff(), 1e-12);
    ci.lhs.grad /= rn;
    ci.lhs.constant /= rn;
    ci.bound /= rn;
    ci.relaxable = c.relaxable;
    ci.name = c.name;
    cp.ineqs.push_back(std::move(ci));
  }
  if (!eq_rows.empty()) {
    cp.eq_a.resize(static_cast<int>(eq_rows.size()), lo.total);
    cp.eq_b.resize(static_cast<int>(eq_rows.size()));
    for (size_t r = 0; r < eq_rows.size(); ++r) {
      cp.eq_a.row(static_cast<int>(r)) = eq_rows[r];
      cp.eq_b(static_cast<int>(r)) = eq_rhs[r];
    }
  }

  for (const auto& c : p.logdet_constraints()) {
    if (c.map.diag_only) {
      CompiledDiagLog dl;
      for (const auto& e : c.map.diag_entries) dl.entries.push_back(compile_expr(e, lo));
      dl.bound = compile_expr(c.bound, lo);
      dl.relaxable = c.relaxable;
      dl.name = c.name;
      cp.diag_logs.push_back(std::move(dl));
    } else {
      CompiledGenLog gl;
      gl.dim = c.map.dim;
      gl.constant = c.map.constant.rows() == c.map.dim
                        ? c.map.constant
                        : MatrixXd::Zero(c.map.dim, c.map.dim);
      gl.bound = compile_expr(c.bound, lo);
      gl.relaxable = c.relaxable;
      gl.name = c.name;
      for (const auto& [id, derivs] : c.map.mat_derivs) {
        const int vi = lo.mat_index.at(id);
        const int off = lo.mat_offsets[static_cast<size_t>(vi)];
        for (size_t pidx = 0; pidx < derivs.size(); ++pidx) {
          if (derivs[pidx].cwiseAbs().maxCoeff() == 0.0) continue;
          gl.idx.push_back(off + static_cast<int>(pidx));
          gl.dmats.push_back(0.5 * (derivs[pidx] + derivs[pidx].transpose()));
        }
      }
      for (const auto& [id, coeff] : c.map.scalar_derivs) {
        gl.idx.push_back(lo.scal_offsets[static_cast<size_t>(lo.scal_index.at(id))]);
        gl.dmats.push_back(0.5 * (coeff + coeff.transpose()));
      }
      cp.gen_logs.push_back(std::move(gl));
    }
  }

  cp.nu = 0.0;
  for (int d : cp.layout.mat_dims) cp.nu += d;
  cp.nu += static_cast<double>(cp.ineqs.size());
  for (const auto& dl : cp.diag_logs) cp.nu += 1.0 + static_cast<double>(dl.entries.size());
  for (const auto& gl : cp.gen_logs) cp.nu += 1.0 + static_cast<double>(gl.dim);
  cp.nu = std::max(cp.nu, 1.0);
  return cp;
}

// Workspace shared by evaluation and assembly. `slack_weight` activates the
// phase-1 relaxation: constraint margins gain +s where s is x(slack_index).
struct Work {
  const Compiled& cp;
  bool phase1 = false;
  int slack_index = -1;  // == layout.total in phase-1
  int n_total = 0;
  // Frozen constraint allowance for boundary-only-feasible problems (set
  // after phase-1 when the certified interior margin is ~zero).
  double relax = 0.0;
  // Phase-1 trust region: |x_i - box_center_i| < box_radius_i. The slack
  // objective leaves many directions unpenalized (epigraph scalars, unbounded
  // cone directions); the box keeps the relaxed problem bounded.
  VectorXd box_center;
  VectorXd box_radius;

  explicit Work(const Compiled& c) : cp(c) {}

  double slack_of(const VectorXd& x) const { return phase1 ? x(slack_index) : 0.0; }

  // Slack of inequality i at x (> 0 when strictly feasible).
  double ineq_slack(const VectorXd& x, const CompiledIneq& ci) const {
    double s = ci.bound + relax - (ci.lhs.grad.dot(x.head(cp.layout.total)) + ci.lhs.constant);
    if (phase1) s += x(slack_index);
    return s;
  }

  bool matrices_pd(const VectorXd& x, std::vector<MatrixXcd>* mats = nullptr,
                   std::vector<Eigen::LLT<MatrixXcd>>* llts = nullptr) const {
    const auto& lo = cp.layout;
    for (size_t vi = 0; vi < lo.mat_names.size(); ++vi) {
      const int n = lo.mat_dims[vi];
      MatrixXcd w = herm_from_params(
          x.segment(lo.mat_offsets[vi], herm_param_count(n)), n);
      Eigen::LLT<MatrixXcd> llt(w);
      if (llt.info() != Eigen::Success) return false;
      if (mats) mats->push_back(std::move(w));
      if (llts) llts->push_back(std::move(llt));
    }
    return true;
  }

  // Returns (feasible, phi). phi = full barrier value.
  std::pair<bool, double> eval_barrier(const VectorXd& x) const {
    const auto& lo = cp.layout;
    double phi = 0.0;
    if (phase1) {
      // The slack needs only to reach slightly below zero; bounding it at -1
      // keeps the relaxed problem bounded when constraint interiors are not.
      const double sb = 1.0 + x(slack_index);
      if (!(sb > 0.0)) return {false, kInf};
      phi -= std::log(sb);
      for (int i = 0; i < lo.total; ++i) {
        const double d = x(i) - box_center(i);
        const double r = box_radius(i);
        const double m = (r - d) * (r + d);
        if (!(m > 0.0)) return {false, kInf};
        phi -= std::log(m);
      }
    }
    for (size_t vi = 0; vi < lo.mat_names.size(); ++vi) {
      const int n = lo.mat_dims[vi];
      const MatrixXcd w =
          herm_from_params(x.segment(lo.mat_offsets[vi], herm_param_count(n)), n);
      Eigen::LLT<MatrixXcd> llt(w);
      if (llt.info() != Eigen::Success) return {false, kInf};
      double ld = 0.0;
      for (int i = 0; i < n; ++i) {
        const double dii = llt.matrixL()(i, i).real();
        if (!(dii > 0.0)) return {false, kInf};
        ld += 2.0 * std::log(dii);
      }
      phi -= ld;
    }
    for (const auto& ci : cp.ineqs) {
      const double s = ineq_slack(x, ci);
      if (!(s > 0.0)) return {false, kInf};
      phi -= std::log(s);
    }
    for (const auto& dl : cp.diag_logs) {
      double sumlog = 0.0;
      for (const auto& e : dl.entries) {
        const double a = e.grad.dot(x.head(lo.total)) + e.constant;
        if (!(a > 0.0)) return {false, kInf};
        sumlog += std::log(a);
        phi -= std::log(a);
      }
      double margin = sumlog + relax - (dl.bound.grad.dot(x.head(lo.total)) + dl.bound.constant);
      if (phase1) margin += x(slack_index);
      if (!(margin > 0.0)) return {false, kInf};
      phi -= std::log(margin);
    }
    for (const auto& gl : cp.gen_logs) {
      MatrixXd m = gl.constant;
      for (size_t t = 0; t < gl.idx.size(); ++t) {
        const double v = x(gl.idx[t]);
        if (v != 0.0) m += v * gl.dmats[t];
      }
      Eigen::LLT<MatrixXd> llt(m);
      if (llt.info() != Eigen::Success) return {false, kInf};
      double ld = 0.0;
      for (int i = 0; i < gl.dim; ++i) {
        const double dii = llt.matrixL()(i, i);
        if (!(dii > 0.0)) return {false, kInf};
        ld += 2.0 * std::log(dii);
      }
      double margin = ld + relax - (gl.bound.grad.dot(x.head(lo.total)) + gl.bound.constant);
      if (phase1) margin += x(slack_index);
      if (!(margin > 0.0)) return {false, kInf};
      phi -= std::log(margin) + ld;
    }
    return {true, phi};
  }

  // Assembles gradient and Hessian (lower triangle) of phi at a strictly
  // feasible x. Returns false when any numerical piece fails.
  bool assemble(const VectorXd& x, VectorXd& grad, MatrixXd& hess) const {
    const auto& lo = cp.layout;
    grad.setZero(n_total);
    hess.setZero(n_total, n_total);
    std::vector<VectorXd> rank1;
    rank1.reserve(cp.ineqs.size() + 4 * cp.diag_logs.size() + cp.gen_logs.size() + 1);
    if (phase1) {
      const double sb = 1.0 + x(slack_index);
      if (!(sb > 0.0)) return false;
      grad(slack_index) -= 1.0 / sb;
      hess(slack_index, slack_index) += 1.0 / (sb * sb);
      for (int i = 0; i < lo.total; ++i) {
        const double d = x(i) - box_center(i);
        const double r = box_radius(i);
        const double m = (r - d) * (r + d);
        if (!(m > 0.0)) return false;
        grad(i) += 2.0 * d / m;
        hess(i, i) += 2.0 / m + 4.0 * d * d / (m * m);
      }
    }

    // PSD cone barriers.
    for (size_t vi = 0; vi < lo.mat_names.size(); ++vi) {
      const int n = lo.mat_dims[vi];
      const int off = lo.mat_offsets[vi];
      const int np = herm_param_count(n);
      const MatrixXcd w = herm_from_params(x.segment(off, np), n);
      Eigen::LLT<MatrixXcd> llt(w);
      if (llt.info() != Eigen::Success) return false;
      const MatrixXcd s = llt.solve(MatrixXcd::Identity(n, n));
      VectorXd gs(np);
      herm_trace_coeffs(s, gs);
      grad.segment(off, np) -= gs;

      // Hessian entries tr(S E_a S E_b) via the <=2-term basis expansion.
      const auto& pairs = offdiag_pairs(n);
      auto entry = [&](int p, int t, int& r, int& c, Complex& a) {
        if (p < n) {
          r = p; c = p; a = Complex(1.0, 0.0);
          return t == 0;
        }
        const int q = p - n;
        const auto& ij = pairs[static_cast<size_t>(q / 2)];
        const bool is_im = (q % 2) == 1;
        if (t == 0) {
          r = ij.first; c = ij.second;
          a = is_im ? Complex(0.0, 1.0) : Complex(1.0, 0.0);
        } else {
          r = ij.second; c = ij.first;
          a = is_im ? Complex(0.0, -1.0) : Complex(1.0, 0.0);
        }
        return true;
      };
      for (int p1 = 0; p1 < np; ++p1) {
        for (int p2 = 0; p2 <= p1; ++p2) {
          Complex acc(0.0, 0.0);
          for (int t1 = 0; t1 < 2; ++t1) {
            int r1, c1; Complex a1;
            if (!entry(p1, t1, r1, c1, a1)) break;
            for (int t2 = 0; t2 < 2; ++t2) {
              int r2, c2; Complex a2;
              if (!entry(p2, t2, r2, c2, a2)) break;
              acc += a1 * a2 * s(c1, r2) * s(c2, r1);
            }
          }
          hess(off + p1, off + p2) += acc.real();
        }
      }
    }

    // Scalar inequality barriers.
    for (const auto& ci : cp.ineqs) {
      const double s = ineq_slack(x, ci);
      if (!(s > 0.0)) return false;
      VectorXd g(n_total);
      g.head(lo.total) = ci.lhs.grad;
      if (phase1) g(slack_index) = -1.0;
      g /= s;
      grad += g;
      rank1.push_back(std::move(g));
    }

    // Diagonal logdet constraints.
    for (const auto& dl : cp.diag_logs) {
      double sumlog = 0.0;
      VectorXd w = VectorXd::Zero(n_total);
      std::vector<std::pair<double, const CompiledExpr*>> avals;
      for (const auto& e : dl.entries) {
        const double a = e.grad.dot(x.head(lo.total)) + e.constant;
        if (!(a > 0.0)) return false;
        sumlog += std::log(a);
        avals.emplace_back(a, &e);
      }
      double margin = sumlog + relax - (dl.bound.grad.dot(x.head(lo.total)) + dl.bound.constant);
      if (phase1) margin += x(slack_index);
      if (!(margin > 0.0)) return false;

      for (const auto& [a, e] : avals) w.head(lo.total) += e->grad / a;
      w.head(lo.total) -= dl.bound.grad;
      if (phase1) w(slack_index) += 1.0;

      grad -= w / margin;
      const double hfac = 1.0 + 1.0 / margin;
      for (const auto& [a, e] : avals) {
        VectorXd col = VectorXd::Zero(n_total);
        col.head(lo.total) = e->grad * (std::sqrt(hfac) / a);
        grad.head(lo.total) -= e->grad / a;
        rank1.push_back(std::move(col));
      }
      rank1.push_back(w / margin);
    }

    // General logdet constraints.
    for (const auto& gl : cp.gen_logs) {
      MatrixXd m = gl.constant;
      for (size_t t = 0; t < gl.idx.size(); ++t) {
        const double v = x(gl.idx[t]);
        if (v != 0.0) m += v * gl.dmats[t];
      }
      Eigen::LLT<MatrixXd> llt(m);
      if (llt.info() != Eigen::Success) return false;
      const MatrixXd minv = llt.solve(MatrixXd::Identity(gl.dim, gl.dim));
      double ld = 0.0;
      for (int i = 0; i < gl.dim; ++i) ld += 2.0 * std::log(llt.matrixL()(i, i));
      double margin = ld + relax - (gl.bound.grad.dot(x.head(lo.total)) + gl.bound.constant);
      if (phase1) margin += x(slack_index);
      if (!(margin > 0.0)) return false;

      const int k = static_cast<int>(gl.idx.size());
      VectorXd gld(k);
      std::vector<MatrixXd> pmat(static_cast<size_t>(k));
      for (int t = 0; t < k; ++t) {
        pmat[static_cast<size_t>(t)] = minv * gl.dmats[static_cast<size_t>(t)];
        gld(t) = pmat[static_cast<size_t>(t)].trace();
      }
      MatrixXd kmat(k, k);
      for (int i = 0; i < k; ++i)
        for (int j = 0; j <= i; ++j) {
          const double v = (pmat[static_cast<size_t>(i)].transpose()
                                .cwiseProduct(pmat[static_cast<size_t>(j)]))
                               .sum();
          kmat(i, j) = v;
          kmat(j, i) = v;
        }

      VectorXd w = VectorXd::Zero(n_total);
      for (int t = 0; t < k; ++t) w(gl.idx[static_cast<size_t>(t)]) += gld(t);
      w.head(lo.total) -= gl.bound.grad;
      if (phase1) w(slack_index) += 1.0;

      grad -= w / margin;
      for (int t = 0; t < k; ++t) grad(gl.idx[static_cast<size_t>(t)]) -= gld(t);
      rank1.push_back(w / margin);

      const double hfac = 1.0 + 1.0 / margin;
      for (int i = 0; i < k; ++i) {
        const int gi = gl.idx[static_cast<size_t>(i)];
        for (int j = 0; j <= i; ++j) {
          const int gj = gl.idx[static_cast<size_t>(j)];
          if (gi >= gj)
            hess(gi, gj) += hfac * kmat(i, j);
          else
            hess(gj, gi) += hfac * kmat(i, j);
        }
      }
    }

    if (!rank1.empty()) {
      MatrixXd g(n_total, static_cast<int>(rank1.size()));
      for (size_t i = 0; i < rank1.size(); ++i) g.col(static_cast<int>(i)) = rank1[i];
      hess.selfadjointView<Eigen::Lower>().rankUpdate(g, 1.0);
    }
    return true;
  }
};

struct NewtonResult {
  bool ok = false;
  bool hit_step_cap = false;
  std::string message;
};

// Damped Newton centering of f(x) = tvec.x + phi(x), with optional equality
// rows maintained exactly.
NewtonResult newton_center(const Work& work, const VectorXd& tvec, VectorXd& x,
                           int max_steps, int& steps_used, bool verbose,
                           const MatrixXd* eq_a = nullptr,
                           const std::function<bool(const VectorXd&)>* early_stop = nullptr) {
  NewtonResult res;
  VectorXd grad;
  MatrixXd hess;
  const int n = work.n_total;
  for (int it = 0; it < max_steps; ++it) {
    if (!work.assemble(x, grad, hess)) {
      res.message = "assembly failed at interior point";
      return res;
    }
    grad += tvec;

    VectorXd dx(n);
    double ridge = 0.0;
    bool solved = false;
    for (int attempt = 0; attempt < 14 && !solved; ++attempt) {
      MatrixXd h = hess;
      if (ridge > 0.0)
        for (int i = 0; i < n; ++i) h(i, i) += ridge * std::max(1.0, hess(i, i));
      if (eq_a && eq_a->rows() > 0) {
        const int me = static_cast<int>(eq_a->rows());
        MatrixXd kkt = MatrixXd::Zero(n + me, n + me);
        kkt.topLeftCorner(n, n) = MatrixXd(h.selfadjointView<Eigen::Lower>());
        kkt.topRightCorner(n, me) = eq_a->transpose();
        kkt.bottomLeftCorner(me, n) = *eq_a;
        Eigen::LDLT<MatrixXd> ldlt(kkt);
        if (ldlt.info() == Eigen::Success) {
          VectorXd rhs = VectorXd::Zero(n + me);
          rhs.head(n) = -grad;
          const VectorXd sol = ldlt.solve(rhs);
          dx = sol.head(n);
          solved = dx.allFinite();
        }
      } else {
        Eigen::LLT<MatrixXd> llt(h);
        if (llt.info() == Eigen::Success) {
          dx = llt.solve(-grad);
          solved = dx.allFinite();
        }
      }
      if (!solved) ridge = ridge == 0.0 ? 1e-12 : ridge * 100.0;
    }
    if (!solved) {
      res.message = "Newton system factorization failed";
      return res;
    }

    const double decrement2 = -grad.dot(dx);
    auto [feas0, f0] = work.eval_barrier(x);
    if (!feas0) {
      res.message = "iterate left the feasible region";
      return res;
    }
    f0 += tvec.dot(x);
    if (decrement2 / 2.0 <= 1e-9 * (1.0 + std::abs(f0))) {
      res.ok = true;
      return res;
    }

    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 70; ++ls) {
      const VectorXd xt = x + alpha * dx;
      auto [feas, phi] = work.eval_barrier(xt);
      if (feas) {
        const double ft = phi + tvec.dot(xt);
        if (ft <= f0 - 0.01 * alpha * decrement2) {
          x = xt;
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    ++steps_used;
    if (accepted && early_stop && (*early_stop)(x)) {
      res.ok = true;
      return res;
    }
    if (!accepted) {
      // Tiny steps near the central path mean we are as centered as double
      // precision allows.
      res.ok = true;
      res.message = "line search stalled";
      return res;
    }
    if (verbose && steps_used % 10 == 0)
      std::cerr << "[barrier] step " << steps_used << " decrement^2 " << decrement2 << "\n";
  }
  res.ok = true;
  res.hit_step_cap = true;
  return res;
}

double eval_objective(const Compiled& cp, const VectorXd& x) {
  return cp.obj.dot(x.head(cp.layout.total)) * cp.obj_norm + cp.obj_const;
}

// Max violation of the original constraints (0 when strictly feasible).
double max_violation(const Work& work, const VectorXd& x, std::string* worst_name) {
  const Compiled& cp = work.cp;
  double worst = -kInf;
  std::string name = "none";
  for (const auto& ci : cp.ineqs) {
    const double v = (ci.lhs.grad.dot(x.head(cp.layout.total)) + ci.lhs.constant) - ci.bound;
    if (v > worst) { worst = v; name = ci.name; }
  }
  for (const auto& dl : cp.diag_logs) {
    double sumlog = 0.0;
    bool ok = true;
    for (const auto& e : dl.entries) {
      const double a = e.grad.dot(x.head(cp.layout.total)) + e.constant;
      if (!(a > 0.0)) { ok = false; break; }
      sumlog += std::log(a);
    }
    const double v = ok ? (dl.bound.grad.dot(x.head(cp.layout.total)) + dl.bound.constant) - sumlog
                        : kInf;
    if (v > worst) { worst = v; name = dl.name; }
  }
  for (const auto& gl : cp.gen_logs) {
    MatrixXd m = gl.constant;
    for (size_t t = 0; t < gl.idx.size(); ++t) m += x(gl.idx[t]) * gl.dmats[t];
    Eigen::LLT<MatrixXd> llt(m);
    double v = kInf;
    if (llt.info() == Eigen::Success) {
      double ld = 0.0;
      for (int i = 0; i < gl.dim; ++i) ld += 2.0 * std::log(llt.matrixL()(i, i));
      v = (gl.bound.grad.dot(x.head(cp.layout.total)) + gl.bound.constant) - ld;
    }
    if (v > worst) { worst = v; name = gl.name; }
  }
  if (worst_name) *worst_name = name;
  return std::max(worst, 0.0);
}

}  // namespace

Solution BarrierBackend::solve(const ConicProblem& problem, const SolveOptions& options) {
  problem.validate();
  Solution sol;
  const char* env_verbose = std::getenv("RISAC_SOLVER_VERBOSE");
  const bool verbose = options.verbose || (env_verbose && env_verbose[0] == '1');

  Compiled cp = compile(problem);
  const auto& lo = cp.layout;

  // Initial point: provided values or small identity, ridge-shifted until all
  // matrix cones and general maps are strictly positive definite.
  VectorXd x = VectorXd::Zero(lo.total);
  for (size_t vi = 0; vi < lo.mat_names.size(); ++vi) {
    const int n = lo.mat_dims[vi];
    MatrixXcd w = 1e-3 * MatrixXcd::Identity(n, n);
    auto it = options.initial_matrices.find(lo.mat_names[vi]);
    if (it != options.initial_matrices.end() && it->second.rows() == n)
      w = 0.5 * (it->second + it->second.adjoint());
    herm_to_params(w, x.segment(lo.mat_offsets[vi], herm_param_count(n)));
  }
  for (size_t si = 0; si < lo.scal_names.size(); ++si) {
    auto it = options.initial_scalars.find(lo.scal_names[si]);
    if (it != options.initial_scalars.end()) x(lo.scal_offsets[si]) = it->second;
  }

  Work probe(cp);
  probe.n_total = lo.total;
  {
    auto domain_ok = [&](const VectorXd& xt) {
      if (!probe.matrices_pd(xt)) return false;
      for (const auto& gl : cp.gen_logs) {
        MatrixXd m = gl.constant;
        for (size_t t = 0; t < gl.idx.size(); ++t) m += xt(gl.idx[t]) * gl.dmats[t];
        if (Eigen::LLT<MatrixXd>(m).info() != Eigen::Success) return false;
      }
      for (const auto& dl : cp.diag_logs)
        for (const auto& e : dl.entries)
          if (!(e.grad.dot(xt) + e.constant > 0.0)) return false;
      return true;
    };

    double delta = 1e-9;
    bool ok = domain_ok(x);
    for (int attempt = 0; attempt < 40 && !ok; ++attempt) {
      // Ridge-shift the matrix cones, then nudge scalars so every log
      // argument with scalar dependence turns positive.
      for (size_t vi = 0; vi < lo.mat_names.size(); ++vi) {
        const int n = lo.mat_dims[vi];
        for (int i = 0; i < n; ++i) x(lo.mat_offsets[vi] + i) += delta;
      }
      delta *= 10.0;

      for (int round = 0; round < 8; ++round) {
        std::vector<const CompiledExpr*> bad;
        std::vector<double> deficit;
        for (const auto& dl : cp.diag_logs)
          for (const auto& e : dl.entries) {
            bool scalar_dep = false;
            for (size_t si = 0; si < lo.scal_names.size(); ++si)
              if (e.grad(lo.scal_offsets[si]) != 0.0) scalar_dep = true;
            if (!scalar_dep) continue;
            const double v = e.grad.dot(x) + e.constant;
            const double need = 1e-2 * (1.0 + std::abs(e.constant));
            if (v < need) {
              bad.push_back(&e);
              deficit.push_back(need - v);
            }
          }
        if (bad.empty()) break;
        MatrixXd g(static_cast<int>(bad.size()), static_cast<int>(lo.scal_names.size()));
        for (size_t r = 0; r < bad.size(); ++r)
          for (size_t si = 0; si < lo.scal_names.size(); ++si)
            g(static_cast<int>(r), static_cast<int>(si)) =
                bad[r]->grad(lo.scal_offsets[si]);
        const VectorXd d =
            Eigen::Map<const VectorXd>(deficit.data(), static_cast<int>(deficit.size()));
        const VectorXd step = g.completeOrthogonalDecomposition().solve(d);
        for (size_t si = 0; si < lo.scal_names.size(); ++si)
          x(lo.scal_offsets[si]) += step(static_cast<int>(si));
      }
      ok = domain_ok(x);
    }
    if (!ok) {
      sol.status = SolveStatus::numerical_failure;
      sol.stats.message = "could not construct a positive-definite starting point";
      return sol;
    }
  }

  // Equalities: project the scalar block onto A x = b.
  if (cp.eq_a.rows() > 0) {
    const VectorXd resid = cp.eq_b - cp.eq_a * x;
    if (resid.cwiseAbs().maxCoeff() > 1e-12) {
      const MatrixXd aat = cp.eq_a * cp.eq_a.transpose();
      x += cp.eq_a.transpose() * aat.ldlt().solve(resid);
    }
  }

  int steps_total = 0;
  double relax2 = 0.0;  // frozen allowance for boundary-only-feasible problems

  // Phase 1: establish a strict interior point or certify infeasibility.
  {
    Work w1(cp);
    w1.phase1 = true;
    w1.slack_index = lo.total;
    w1.n_total = lo.total + 1;

    // Worst violation at x determines the starting slack.
    Work w0(cp);
    w0.n_total = lo.total;
    std::string worst_name;
    const double viol = max_violation(w0, x, &worst_name);
    auto [feas_now, phi_now] = w0.eval_barrier(x);
    (void)phi_now;

    if (!feas_now) {
      w1.box_center = x;
      w1.box_radius = VectorXd(lo.total);
      for (int i = 0; i < lo.total; ++i)
        w1.box_radius(i) = 1e4 * (1.0 + std::abs(x(i)));
      VectorXd x1(lo.total + 1);
      x1.head(lo.total) = x;
      x1(lo.total) = viol + 0.1 * (1.0 + viol);
      if (!w1.eval_barrier(x1).first) {
        // Grow the slack until strictly feasible for the relaxed problem.
        bool ok = false;
        for (int k = 0; k < 60 && !ok; ++k) {
          x1(lo.total) = x1(lo.total) * 2.0 + 1.0;
          ok = w1.eval_barrier(x1).first;
        }
        if (!ok) {
          sol.status = SolveStatus::numerical_failure;
          sol.stats.message = "phase-1 initialization failed";
          return sol;
        }
      }

      VectorXd tvec = VectorXd::Zero(lo.total + 1);
      const double nu1 = cp.nu + 2.0 + 2.0 * lo.total;  // slack + box barriers
      // Anchor the first stage near the starting slack scale.
      double t = std::clamp(nu1 / std::max(0.1, std::abs(x1(lo.total))), 1.0, 1e5);
      bool interior = false;
      bool converged1 = false;
      MatrixXd eq_a1;
      if (cp.eq_a.rows() > 0) {
        eq_a1.resize(cp.eq_a.rows(), lo.total + 1);
        eq_a1.leftCols(lo.total) = cp.eq_a;
        eq_a1.rightCols(1).setZero();
      }
      const std::function<bool(const VectorXd&)> deep_enough =
          [&](const VectorXd& xt) { return xt(lo.total) <= -1e-3; };
      while (steps_total < options.max_newton_steps) {
        tvec(lo.total) = t;
        NewtonResult nr = newton_center(w1, tvec, x1, 60, steps_total, verbose,
                                        cp.eq_a.rows() > 0 ? &eq_a1 : nullptr, &deep_enough);
        sol.stats.barrier_stages++;
        if (!nr.ok) {
          sol.status = SolveStatus::numerical_failure;
          sol.stats.message = "phase-1: " + nr.message;
          return sol;
        }
        if (x1(lo.total) <= -1e-4) { interior = true; break; }
        if (nr.hit_step_cap) continue;  // keep centering at this t
        if (nu1 / t <= std::max(options.feas_margin * 0.25, 1e-12)) {
          converged1 = true;
          break;
        }
        t *= options.barrier_mu;
      }
      sol.stats.phase1_slack = x1(lo.total);
      if (!interior) {
        if (!converged1) {
          sol.status = SolveStatus::iteration_limit;
          sol.stats.message = "phase-1 hit the Newton step budget";
          sol.stats.newton_steps = steps_total;
          return sol;
        }
        const double certified_lb = x1(lo.total) - nu1 / t;
        if (certified_lb > 1e-8) {
          sol.status = SolveStatus::infeasible;
          max_violation(w0, x1.head(lo.total), &worst_name);
          sol.stats.message = "infeasible (phase-1 slack " + std::to_string(x1(lo.total)) +
                              ", tightest constraint: " + worst_name + ")";
          return sol;
        }
        // Feasible set with (numerically) empty interior: carry a frozen
        // hair-width allowance into phase 2.
        relax2 = std::max(0.0, x1(lo.total)) + 1e-9;
      }
      x = x1.head(lo.total);
    }
  }

  // Phase 2: follow the central path of the true objective.
  Work w2(cp);
  w2.n_total = lo.total;
  w2.relax = relax2;
  const double obj0 = std::abs(cp.obj.dot(x));
  double t = std::clamp(cp.nu / std::max(0.1, obj0), 1.0, 1e5);
  const double mu = options.barrier_mu;
  bool hit_cap = false;
  while (true) {
    const VectorXd tvec = t * cp.obj;
    NewtonResult nr = newton_center(w2, tvec, x, 60, steps_total, verbose,
                                    cp.eq_a.rows() > 0 ? &cp.eq_a : nullptr);
    sol.stats.barrier_stages++;
    if (!nr.ok) {
      sol.status = SolveStatus::numerical_failure;
      sol.stats.message = "phase-2: " + nr.message;
      return sol;
    }
    if (steps_total >= options.max_newton_steps) { hit_cap = true; break; }
    if (nr.hit_step_cap) continue;  // the nu/t bound needs a centered point
    const double obj = eval_objective(cp, x);
    const double gap = cp.nu / t * cp.obj_norm;
    if (verbose)
      std::cerr << "[barrier] t=" << t << " obj=" << obj << " gap=" << gap << "\n";
    if (gap <= options.gap_tol * (1.0 + std::min(std::abs(obj), 1e6))) break;
    t *= mu;
  }

  // Re-project equalities exactly before extraction (the scalar-only columns
  // leave the matrix cones untouched).
  if (cp.eq_a.rows() > 0) {
    const VectorXd resid = cp.eq_b - cp.eq_a * x;
    if (resid.cwiseAbs().maxCoeff() > 0.0) {
      const MatrixXd aat = cp.eq_a * cp.eq_a.transpose();
      x += cp.eq_a.transpose() * aat.ldlt().solve(resid);
    }
  }

  // Extract values.
  for (size_t vi = 0; vi < lo.mat_names.size(); ++vi) {
    const int n = lo.mat_dims[vi];
    sol.matrix_values[lo.mat_names[vi]] =
        herm_from_params(x.segment(lo.mat_offsets[vi], herm_param_count(n)), n);
  }
  for (size_t si = 0; si < lo.scal_names.size(); ++si)
    sol.scalar_values[lo.scal_names[si]] = x(lo.scal_offsets[si]);
  sol.objective_value = eval_objective(cp, x);
  sol.stats.newton_steps = steps_total;
  sol.stats.final_gap = cp.nu / t * cp.obj_norm;
  std::string worst;
  sol.stats.max_violation = max_violation(w2, x, &worst);
  sol.status = hit_cap ? SolveStatus::iteration_limit : SolveStatus::optimal;
  return sol;
}

Solution solve(const ConicProblem& problem, SolverBackend& backend, const SolveOptions& options) {
  return backend.solve(problem, options);
}

std::shared_ptr<SolverBackend> make_default_backend() {
  return std::make_shared<BarrierBackend>();
}

}  // namespace risac::conic
