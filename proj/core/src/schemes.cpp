#include "risac/schemes.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace risac {

namespace {

constexpr double kLn2 = 0.6931471805599453;

std::string user_var(int k) { return "W" + std::to_string(k + 1); }
std::string common_rate_var(int k) { return "c" + std::to_string(k + 1); }
std::string secrecy_rate_var(int k) { return "csec" + std::to_string(k + 1); }

// Per-link normalization: dividing H_k and sigma_k^2 by ||H_k||_F leaves every
// SINR (hence every rate expression) bit-identical while keeping the solver's
// trace coefficients O(1).
struct ProblemContext {
  int num_users = 0;
  int num_eaves = 0;
  int n_tx = 0;
  bool rsma = true;
  bool has_extra = true;
  std::vector<MatrixXcd> h_hat;
  std::vector<double> sig_u;
  std::vector<MatrixXcd> g_hat;
  std::vector<double> sig_e;
  std::vector<std::string> matrix_ids;

  static ProblemContext build(const SolveScenario& sc, const SchemeSelector& sel) {
    ProblemContext ctx;
    ctx.num_users = static_cast<int>(sc.links.users.size());
    ctx.num_eaves = static_cast<int>(sc.links.eavesdroppers.size());
    ctx.n_tx = sc.array.n_tx;
    ctx.rsma = sel.rsma;
    ctx.has_extra = sel.extra_signal_present;
    for (int k = 0; k < ctx.num_users; ++k) {
      const MatrixXcd& h = sc.links.users[static_cast<size_t>(k)].covariance;
      const double f = h.norm();
      ctx.h_hat.push_back(h / f);
      ctx.sig_u.push_back(sc.links.user_noise[static_cast<size_t>(k)] / f);
    }
    for (int m = 0; m < ctx.num_eaves; ++m) {
      const MatrixXcd& g = sc.links.eavesdroppers[static_cast<size_t>(m)].covariance;
      const double f = g.norm();
      ctx.g_hat.push_back(g / f);
      ctx.sig_e.push_back(sc.links.eaves_noise[static_cast<size_t>(m)] / f);
    }
    if (ctx.rsma) ctx.matrix_ids.push_back("Wc");
    for (int k = 0; k < ctx.num_users; ++k) ctx.matrix_ids.push_back(user_var(k));
    if (ctx.has_extra) ctx.matrix_ids.push_back("Wv");
    return ctx;
  }

  // Log arguments of the four linearization families (SDMA drops W_c).
  sca::TraceLogTerm user_common_denom(int k) const {  // chi_1 + sigma_k^2
    sca::TraceLogTerm t;
    for (int i = 0; i < num_users; ++i) t.add(user_var(i), h_hat[static_cast<size_t>(k)]);
    if (has_extra) t.add("Wv", h_hat[static_cast<size_t>(k)]);
    t.constant = sig_u[static_cast<size_t>(k)];
    return t;
  }
  sca::TraceLogTerm user_common_full(int k) const {
    sca::TraceLogTerm t = user_common_denom(k);
    t.add("Wc", h_hat[static_cast<size_t>(k)]);
    return t;
  }
  sca::TraceLogTerm user_private_denom(int k) const {  // chi_3 + sigma_k^2
    sca::TraceLogTerm t;
    for (int i = 0; i < num_users; ++i)
      if (i != k) t.add(user_var(i), h_hat[static_cast<size_t>(k)]);
    if (has_extra) t.add("Wv", h_hat[static_cast<size_t>(k)]);
    t.constant = sig_u[static_cast<size_t>(k)];
    return t;
  }
  sca::TraceLogTerm user_private_full(int k) const {
    sca::TraceLogTerm t = user_private_denom(k);
    t.add(user_var(k), h_hat[static_cast<size_t>(k)]);
    return t;
  }
  sca::TraceLogTerm eaves_common_denom(int m) const {  // R^{E,2}_{c,m} argument
    sca::TraceLogTerm t;
    for (int i = 0; i < num_users; ++i) t.add(user_var(i), g_hat[static_cast<size_t>(m)]);
    if (has_extra) t.add("Wv", g_hat[static_cast<size_t>(m)]);
    t.constant = sig_e[static_cast<size_t>(m)];
    return t;
  }
  sca::TraceLogTerm eaves_common_full(int m) const {  // chi_2 + sigma_m^2
    sca::TraceLogTerm t = eaves_common_denom(m);
    if (rsma) t.add("Wc", g_hat[static_cast<size_t>(m)]);
    return t;
  }
  sca::TraceLogTerm eaves_private_denom(int k, int m) const {  // chi_4 + sigma_m^2
    sca::TraceLogTerm t;
    for (int i = 0; i < num_users; ++i)
      if (i != k) t.add(user_var(i), g_hat[static_cast<size_t>(m)]);
    if (rsma) t.add("Wc", g_hat[static_cast<size_t>(m)]);
    if (has_extra) t.add("Wv", g_hat[static_cast<size_t>(m)]);
    t.constant = sig_e[static_cast<size_t>(m)];
    return t;
  }
  sca::TraceLogTerm eaves_private_full(int k, int m) const {
    sca::TraceLogTerm t = eaves_private_denom(k, m);
    t.add(user_var(k), g_hat[static_cast<size_t>(m)]);
    return t;
  }

  conic::AffineExpr power_expr() const {
    conic::AffineExpr p;
    for (const auto& id : matrix_ids) p.add_trace(id, MatrixXcd::Identity(n_tx, n_tx));
    return p;
  }
};

conic::AffineExpr to_expr(const sca::TraceLogTerm& t) {
  conic::AffineExpr e;
  e.constant = t.constant;
  for (const auto& [id, c] : t.coefficient_map) e.add_trace(id, c);
  return e;
}

// Adds sum_b ln(args_b) >= ln2 * rhs_bits.
void add_rate_constraint(conic::ConicProblem& p, std::vector<conic::AffineExpr> log_args,
                         conic::AffineExpr rhs_bits, std::string name) {
  rhs_bits.scale(kLn2);
  p.add_logdet_ge(conic::LinMatMap::diagonal(std::move(log_args)), std::move(rhs_bits),
                  std::move(name), /*relaxable=*/true);
}

conic::LinMatMap build_fim_map(const SolveScenario& sc, const SchemeSelector& sel) {
  const int n = sc.array.n_tx;
  const int np = conic::herm_param_count(n);
  conic::LinMatMap map;
  map.dim = 3 * sc.sensing.num_targets();
  map.diag_only = false;
  map.constant = MatrixXd::Zero(map.dim, map.dim);
  std::vector<MatrixXd> derivs(static_cast<size_t>(np));
  for (int p = 0; p < np; ++p) {
    VectorXd e = VectorXd::Zero(np);
    e(p) = 1.0;
    derivs[static_cast<size_t>(p)] =
        fim_full_matrix(conic::herm_from_params(e, n), sc.sensing, sc.array);
  }
  if (sel.alpha1 == 1) map.mat_derivs["Wc"] = derivs;
  if (sel.alpha2 == 1) map.mat_derivs["Wv"] = derivs;
  return map;
}

void declare_vars(conic::ConicProblem& p, const ProblemContext& ctx) {
  for (const auto& id : ctx.matrix_ids) p.add_matrix_var(id, ctx.n_tx);
}

void add_power_cap(conic::ConicProblem& p, const ProblemContext& ctx, double p_max) {
  p.add_constraint(ctx.power_expr(), conic::Relation::LE, p_max, "power");
}

void add_crb(conic::ConicProblem& p, const SolveScenario& sc, const AlgorithmConfig& cfg) {
  conic::encode_logdet(build_fim_map(sc, cfg.selector), logdet_floor(cfg.crb_threshold), p,
                       "crb", /*relaxable=*/true);
}

// Penalized objective: minimize base + rho * sum_q tr((I - u_q u_q^H) W_q).
conic::AffineExpr penalized(conic::AffineExpr base, const ProblemContext& ctx,
                            const sca::SCAState& state, double rho) {
  for (const auto& id : ctx.matrix_ids) {
    auto it = state.penalty_vectors.find(id);
    if (it == state.penalty_vectors.end())
      throw InvalidInput("missing penalty vector for " + id);
    const VectorXcd& u = it->second;
    base.add_trace(id, rho * (MatrixXcd::Identity(ctx.n_tx, ctx.n_tx) - u * u.adjoint()));
  }
  return base;
}

struct Linearizations {
  std::vector<conic::AffineExpr> common_denom_ub;   // R^{2,ub}_{c,k}, bits
  std::vector<conic::AffineExpr> private_denom_ub;  // R^{2,ub}_{p,k}, bits
  std::vector<conic::AffineExpr> eaves_common_ub;   // R^{E,1,ub}_{c,m}, bits
  std::vector<std::vector<conic::AffineExpr>> eaves_private_ub;  // [k][m]
};

Linearizations linearize_all(const ProblemContext& ctx, const sca::SCAState& state,
                             bool need_eaves) {
  Linearizations lin;
  for (int k = 0; k < ctx.num_users; ++k) {
    if (ctx.rsma)
      lin.common_denom_ub.push_back(sca::linearize_upper(ctx.user_common_denom(k), state));
    lin.private_denom_ub.push_back(sca::linearize_upper(ctx.user_private_denom(k), state));
  }
  if (need_eaves) {
    for (int m = 0; m < ctx.num_eaves; ++m)
      lin.eaves_common_ub.push_back(sca::linearize_upper(ctx.eaves_common_full(m), state));
    lin.eaves_private_ub.resize(static_cast<size_t>(ctx.num_users));
    for (int k = 0; k < ctx.num_users; ++k)
      for (int m = 0; m < ctx.num_eaves; ++m)
        lin.eaves_private_ub[static_cast<size_t>(k)].push_back(
            sca::linearize_upper(ctx.eaves_private_full(k, m), state));
  }
  return lin;
}

BeamformerSet matrices_from_solution(const conic::Solution& sol, const ProblemContext& ctx) {
  BeamformerSet bf;
  if (ctx.rsma) bf.w_common = sol.matrix_values.at("Wc");
  for (int k = 0; k < ctx.num_users; ++k)
    bf.w_private.push_back(sol.matrix_values.at(user_var(k)));
  if (ctx.has_extra) bf.w_extra = sol.matrix_values.at("Wv");
  return bf;
}

double scheme_objective(Algorithm which, const MetricsReport& m) {
  switch (which) {
    case Algorithm::alg1: return m.min_urpr();
    case Algorithm::alg2: return m.min_usrpr();
    case Algorithm::alg3: return m.total_power;
  }
  return 0.0;
}

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::alg1: return "alg1";
    case Algorithm::alg2: return "alg2";
    case Algorithm::alg3: return "alg3";
  }
  return "?";
}

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::scheme1: return "scheme1";
    case Scheme::scheme2: return "scheme2";
    case Scheme::scheme3: return "scheme3";
    case Scheme::ben1: return "ben1";
    case Scheme::sdma: return "sdma";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "alg1" || s == "1") return Algorithm::alg1;
  if (s == "alg2" || s == "2") return Algorithm::alg2;
  if (s == "alg3" || s == "3") return Algorithm::alg3;
  throw InvalidInput("unknown algorithm: " + s);
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "scheme1") return Scheme::scheme1;
  if (s == "scheme2") return Scheme::scheme2;
  if (s == "scheme3") return Scheme::scheme3;
  if (s == "ben1") return Scheme::ben1;
  if (s == "sdma") return Scheme::sdma;
  throw InvalidInput("unknown scheme: " + s);
}

SchemeSelector selector_for(Scheme s) {
  switch (s) {
    case Scheme::scheme1: return SchemeSelector{0, 1, true, true};
    case Scheme::scheme2: return SchemeSelector{1, 0, true, true};
    case Scheme::scheme3: return SchemeSelector{1, 1, true, true};
    case Scheme::ben1: return SchemeSelector{1, 0, false, true};
    case Scheme::sdma: return SchemeSelector{0, 1, true, false};
  }
  throw InvalidInput("unknown scheme");
}

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::iteration_limit: return "iteration-limit";
    case RunStatus::infeasible: return "infeasible";
    case RunStatus::numerical_failure: return "numerical-failure";
  }
  return "?";
}

void AlgorithmConfig::validate() const {
  if (!(p_max > 0.0)) throw InvalidInput("AlgorithmConfig: p_max must be positive");
  if (!(qos_threshold > 0.0) || !(secrecy_threshold > 0.0) || !(crb_threshold > 0.0))
    throw InvalidInput("AlgorithmConfig: thresholds must be positive");
  if (!(penalty_weight > 0.0))
    throw InvalidInput("AlgorithmConfig: penalty weight must be positive");
  if (!(tau > 0.0) || j_max < 1) throw InvalidInput("AlgorithmConfig: bad iteration controls");
  selector.validate();
}

conic::ConicProblem assemble_p13(const sca::SCAState& state, const AlgorithmConfig& cfg,
                                 const SolveScenario& scenario) {
  const ProblemContext ctx = ProblemContext::build(scenario, cfg.selector);
  if (!ctx.rsma) throw InvalidInput("assemble_p13: RSMA selector required");
  const Linearizations lin = linearize_all(ctx, state, /*need_eaves=*/true);

  conic::ConicProblem p;
  declare_vars(p, ctx);
  for (int k = 0; k < ctx.num_users; ++k) p.add_scalar_var(common_rate_var(k));
  p.add_scalar_var("t");

  conic::AffineExpr obj;
  obj.add_scalar("t", -1.0);
  p.set_objective(penalized(std::move(obj), ctx, state, cfg.penalty_weight));

  conic::AffineExpr sum_c;
  for (int k = 0; k < ctx.num_users; ++k) sum_c.add_scalar(common_rate_var(k), 1.0);

  for (int k = 0; k < ctx.num_users; ++k) {
    const std::string ks = std::to_string(k + 1);
    conic::AffineExpr ck;
    ck.add_scalar(common_rate_var(k), 1.0);
    p.add_constraint(ck, conic::Relation::GE, 0.0, "c_nonneg_k" + ks);

    // sum_i c_i <= R^1_{c,k} - R^{2,ub}_{c,k}
    conic::AffineExpr rhs = sum_c;
    rhs.add(lin.common_denom_ub[static_cast<size_t>(k)]);
    add_rate_constraint(p, {to_expr(ctx.user_common_full(k))}, std::move(rhs),
                        "common_split_k" + ks);

    // QoS: c_k + R^1_{p,k} - R^{2,ub}_{p,k} >= R_U^th
    conic::AffineExpr qos_rhs = lin.private_denom_ub[static_cast<size_t>(k)];
    qos_rhs.add_scalar(common_rate_var(k), -1.0);
    qos_rhs.constant += cfg.qos_threshold;
    add_rate_constraint(p, {to_expr(ctx.user_private_full(k))}, std::move(qos_rhs),
                        "qos_k" + ks);

    // Dinkelbach epigraph: c_k + R^1_{p,k} - R^{2,ub}_{p,k} - lambda_1 P >= t
    conic::AffineExpr epi_rhs = lin.private_denom_ub[static_cast<size_t>(k)];
    epi_rhs.add_scalar(common_rate_var(k), -1.0);
    epi_rhs.add_scalar("t", 1.0);
    epi_rhs.add(ctx.power_expr(), state.dinkelbach_factor);
    add_rate_constraint(p, {to_expr(ctx.user_private_full(k))}, std::move(epi_rhs),
                        "epigraph_k" + ks);

    for (int m = 0; m < ctx.num_eaves; ++m) {
      const std::string km = "_k" + ks + "_m" + std::to_string(m + 1);

      // Security: R^{E,1,ub}_{c,m} - R^{E,2}_{c,m} + eps <= R^1_{c,k} - R^{2,ub}_{c,k}
      conic::AffineExpr sec_rhs = lin.eaves_common_ub[static_cast<size_t>(m)];
      sec_rhs.add(lin.common_denom_ub[static_cast<size_t>(k)]);
      sec_rhs.constant += cfg.security_margin;
      add_rate_constraint(
          p, {to_expr(ctx.user_common_full(k)), to_expr(ctx.eaves_common_denom(m))},
          std::move(sec_rhs), "security" + km);

      // Secrecy: R^1_{p,k} - R^{2,ub}_{p,k} - (R^{E,1,ub} - R^{E,2}) >= R_sec^th
      conic::AffineExpr scr_rhs =
          lin.eaves_private_ub[static_cast<size_t>(k)][static_cast<size_t>(m)];
      scr_rhs.add(lin.private_denom_ub[static_cast<size_t>(k)]);
      scr_rhs.constant += cfg.secrecy_threshold;
      add_rate_constraint(
          p, {to_expr(ctx.user_private_full(k)), to_expr(ctx.eaves_private_denom(k, m))},
          std::move(scr_rhs), "secrecy" + km);
    }
  }

  add_crb(p, scenario, cfg);
  add_power_cap(p, ctx, cfg.p_max);
  return p;
}

conic::ConicProblem assemble_p21(const sca::SCAState& state, const AlgorithmConfig& cfg,
                                 const SolveScenario& scenario) {
  const ProblemContext ctx = ProblemContext::build(scenario, cfg.selector);
  if (!ctx.rsma) throw InvalidInput("assemble_p21: RSMA selector required");
  const Linearizations lin = linearize_all(ctx, state, /*need_eaves=*/true);

  conic::ConicProblem p;
  declare_vars(p, ctx);
  for (int k = 0; k < ctx.num_users; ++k) p.add_scalar_var(secrecy_rate_var(k));
  p.add_scalar_var("t2");

  conic::AffineExpr obj;
  obj.add_scalar("t2", -1.0);
  p.set_objective(penalized(std::move(obj), ctx, state, cfg.penalty_weight));

  conic::AffineExpr sum_csec;
  for (int k = 0; k < ctx.num_users; ++k) sum_csec.add_scalar(secrecy_rate_var(k), 1.0);

  for (int k = 0; k < ctx.num_users; ++k) {
    const std::string ks = std::to_string(k + 1);
    conic::AffineExpr ck;
    ck.add_scalar(secrecy_rate_var(k), 1.0);
    p.add_constraint(ck, conic::Relation::GE, 0.0, "csec_nonneg_k" + ks);

    for (int m = 0; m < ctx.num_eaves; ++m) {
      const std::string km = "_k" + ks + "_m" + std::to_string(m + 1);

      // sum_i csec_i <= (R^1_{c,k} - R^{2,ub}_{c,k}) - (R^{E,1,ub}_{c,m} - R^{E,2}_{c,m})
      conic::AffineExpr bud_rhs = sum_csec;
      bud_rhs.add(lin.common_denom_ub[static_cast<size_t>(k)]);
      bud_rhs.add(lin.eaves_common_ub[static_cast<size_t>(m)]);
      add_rate_constraint(
          p, {to_expr(ctx.user_common_full(k)), to_expr(ctx.eaves_common_denom(m))},
          std::move(bud_rhs), "secrecy_budget" + km);

      // Private-stream secrecy nonnegative.
      conic::AffineExpr pos_rhs =
          lin.eaves_private_ub[static_cast<size_t>(k)][static_cast<size_t>(m)];
      pos_rhs.add(lin.private_denom_ub[static_cast<size_t>(k)]);
      add_rate_constraint(
          p, {to_expr(ctx.user_private_full(k)), to_expr(ctx.eaves_private_denom(k, m))},
          std::move(pos_rhs), "private_secrecy_pos" + km);

      // csec_k + private secrecy lower bound >= R_sec^th.
      conic::AffineExpr th_rhs =
          lin.eaves_private_ub[static_cast<size_t>(k)][static_cast<size_t>(m)];
      th_rhs.add(lin.private_denom_ub[static_cast<size_t>(k)]);
      th_rhs.add_scalar(secrecy_rate_var(k), -1.0);
      th_rhs.constant += cfg.secrecy_threshold;
      add_rate_constraint(
          p, {to_expr(ctx.user_private_full(k)), to_expr(ctx.eaves_private_denom(k, m))},
          std::move(th_rhs), "secrecy_floor" + km);

      // Dinkelbach epigraph: R_k^{sec,lb} - lambda_2 P >= t2.
      conic::AffineExpr epi_rhs =
          lin.eaves_private_ub[static_cast<size_t>(k)][static_cast<size_t>(m)];
      epi_rhs.add(lin.private_denom_ub[static_cast<size_t>(k)]);
      epi_rhs.add_scalar(secrecy_rate_var(k), -1.0);
      epi_rhs.add_scalar("t2", 1.0);
      epi_rhs.add(ctx.power_expr(), state.dinkelbach_factor);
      add_rate_constraint(
          p, {to_expr(ctx.user_private_full(k)), to_expr(ctx.eaves_private_denom(k, m))},
          std::move(epi_rhs), "epigraph" + km);
    }
  }

  add_crb(p, scenario, cfg);
  add_power_cap(p, ctx, cfg.p_max);
  return p;
}

conic::ConicProblem assemble_p31(const sca::SCAState& state, const AlgorithmConfig& cfg,
                                 const SolveScenario& scenario) {
  const ProblemContext ctx = ProblemContext::build(scenario, cfg.selector);
  if (!ctx.rsma) throw InvalidInput("assemble_p31: RSMA selector required");
  const Linearizations lin = linearize_all(ctx, state, /*need_eaves=*/false);

  conic::ConicProblem p;
  declare_vars(p, ctx);
  for (int k = 0; k < ctx.num_users; ++k) p.add_scalar_var(common_rate_var(k));

  p.set_objective(penalized(ctx.power_expr(), ctx, state, cfg.penalty_weight));

  conic::AffineExpr sum_c;
  for (int k = 0; k < ctx.num_users; ++k) sum_c.add_scalar(common_rate_var(k), 1.0);

  for (int k = 0; k < ctx.num_users; ++k) {
    const std::string ks = std::to_string(k + 1);
    conic::AffineExpr ck;
    ck.add_scalar(common_rate_var(k), 1.0);
    p.add_constraint(ck, conic::Relation::GE, 0.0, "c_nonneg_k" + ks);

    conic::AffineExpr rhs = sum_c;
    rhs.add(lin.common_denom_ub[static_cast<size_t>(k)]);
    add_rate_constraint(p, {to_expr(ctx.user_common_full(k))}, std::move(rhs),
                        "common_split_k" + ks);

    conic::AffineExpr qos_rhs = lin.private_denom_ub[static_cast<size_t>(k)];
    qos_rhs.add_scalar(common_rate_var(k), -1.0);
    qos_rhs.constant += cfg.qos_threshold;
    add_rate_constraint(p, {to_expr(ctx.user_private_full(k))}, std::move(qos_rhs),
                        "qos_k" + ks);
  }

  add_crb(p, scenario, cfg);
  return p;
}

conic::ConicProblem assemble_sdma(SdmaVariant variant, const sca::SCAState& state,
                                  const AlgorithmConfig& cfg, const SolveScenario& scenario) {
  const ProblemContext ctx = ProblemContext::build(scenario, cfg.selector);
  if (ctx.rsma) throw InvalidInput("assemble_sdma: SDMA selector required");
  const bool need_eaves = variant != SdmaVariant::p3;
  const Linearizations lin = linearize_all(ctx, state, need_eaves);

  conic::ConicProblem p;
  declare_vars(p, ctx);

  if (variant == SdmaVariant::p3) {
    p.set_objective(penalized(ctx.power_expr(), ctx, state, cfg.penalty_weight));
  } else {
    p.add_scalar_var("t");
    conic::AffineExpr obj;
    obj.add_scalar("t", -1.0);
    p.set_objective(penalized(std::move(obj), ctx, state, cfg.penalty_weight));
  }

  for (int k = 0; k < ctx.num_users; ++k) {
    const std::string ks = std::to_string(k + 1);

    if (variant == SdmaVariant::p1 || variant == SdmaVariant::p3) {
      conic::AffineExpr qos_rhs = lin.private_denom_ub[static_cast<size_t>(k)];
      qos_rhs.constant += cfg.qos_threshold;
      add_rate_constraint(p, {to_expr(ctx.user_private_full(k))}, std::move(qos_rhs),
                          "qos_k" + ks);
    }

    if (variant == SdmaVariant::p1) {
      conic::AffineExpr epi_rhs = lin.private_denom_ub[static_cast<size_t>(k)];
      epi_rhs.add_scalar("t", 1.0);
      epi_rhs.add(ctx.power_expr(), state.dinkelbach_factor);
      add_rate_constraint(p, {to_expr(ctx.user_private_full(k))}, std::move(epi_rhs),
                          "epigraph_k" + ks);
    }

    if (need_eaves) {
      for (int m = 0; m < ctx.num_eaves; ++m) {
        const std::string km = "_k" + ks + "_m" + std::to_string(m + 1);
        conic::AffineExpr sec_rhs =
            lin.eaves_private_ub[static_cast<size_t>(k)][static_cast<size_t>(m)];
        sec_rhs.add(lin.private_denom_ub[static_cast<size_t>(k)]);
        sec_rhs.constant += cfg.secrecy_threshold;
        add_rate_constraint(
            p, {to_expr(ctx.user_private_full(k)), to_expr(ctx.eaves_private_denom(k, m))},
            std::move(sec_rhs), "secrecy" + km);

        if (variant == SdmaVariant::p2) {
          conic::AffineExpr epi_rhs =
              lin.eaves_private_ub[static_cast<size_t>(k)][static_cast<size_t>(m)];
          epi_rhs.add(lin.private_denom_ub[static_cast<size_t>(k)]);
          epi_rhs.add_scalar("t", 1.0);
          epi_rhs.add(ctx.power_expr(), state.dinkelbach_factor);
          add_rate_constraint(
              p, {to_expr(ctx.user_private_full(k)), to_expr(ctx.eaves_private_denom(k, m))},
              std::move(epi_rhs), "epigraph" + km);
        }
      }
    }
  }

  add_crb(p, scenario, cfg);
  if (variant != SdmaVariant::p3) add_power_cap(p, ctx, cfg.p_max);
  return p;
}

BeamformerSet initial_beamformers(const AlgorithmConfig& cfg, const SolveScenario& scenario,
                                  double budget_fraction) {
  const int n = scenario.array.n_tx;
  const int num_users = static_cast<int>(scenario.links.users.size());
  const bool rsma = cfg.selector.rsma;
  const bool has_extra = cfg.selector.extra_signal_present;

  BeamformerSet bf;
  const double budget = budget_fraction * cfg.p_max;
  const double p_private = 0.4 * budget;
  const double p_common = rsma ? 0.3 * budget : 0.0;
  const double p_extra = has_extra ? 0.3 * budget : 0.0;

  // Unit-trace illumination of every target; whichever covariance the
  // selector marks for sensing starts with a share of it, otherwise the
  // first subproblem sees a nearly singular Fisher matrix and compensates
  // with absurd sidelobe power.
  MatrixXcd target_mix = MatrixXcd::Zero(n, n);
  for (double th : scenario.sensing.target_azimuths) {
    const VectorXcd a = steering_vector(th, n, scenario.array.spacing_ratio);
    target_mix += a * a.adjoint() / a.squaredNorm();
  }
  target_mix /= static_cast<double>(scenario.sensing.target_azimuths.size());

  bf.w_private.reserve(static_cast<size_t>(num_users));
  MatrixXcd h_sum = MatrixXcd::Zero(n, n);
  for (int k = 0; k < num_users; ++k) {
    const MatrixXcd& h = scenario.links.users[static_cast<size_t>(k)].covariance;
    h_sum += h;
    const VectorXcd u = sca::refresh_penalty_vector(h);
    bf.w_private.push_back((p_private / num_users) * u * u.adjoint());
  }
  if (rsma) {
    const VectorXcd uc = sca::refresh_penalty_vector(h_sum);
    MatrixXcd wc = uc * uc.adjoint();
    if (cfg.selector.alpha1 == 1) wc = 0.5 * wc + 0.5 * target_mix;
    bf.w_common = p_common * wc;
  }
  if (has_extra) {
    bf.w_extra = p_extra * target_mix;
  }
  return bf;
}

MatrixXcd allocate_an(double p_max, double used_power, int n_tx, std::mt19937_64& rng) {
  if (used_power > p_max + 1e-9)
    throw NumericalError("allocate_an: used power exceeds the budget");
  const double residual = std::max(0.0, p_max - used_power);
  if (residual == 0.0) return MatrixXcd::Zero(n_tx, n_tx);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  VectorXcd w(n_tx);
  const double amp = std::sqrt(residual / static_cast<double>(n_tx));
  for (int i = 0; i < n_tx; ++i) w(i) = std::polar(amp, phase(rng));
  return w * w.adjoint();
}

RunResult run_algorithm(Algorithm which, const AlgorithmConfig& cfg,
                        const SolveScenario& scenario, conic::SolverBackend& backend,
                        std::mt19937_64& rng) {
  cfg.validate();
  const ProblemContext ctx = ProblemContext::build(scenario, cfg.selector);
  if (ctx.num_users < 1) throw InvalidInput("run_algorithm: need at least one user");
  if (ctx.num_eaves == 0 && which != Algorithm::alg3)
    throw InvalidInput("run_algorithm: eavesdroppers required for alg1/alg2");

  RunResult rr;
  sca::SCAState state;
  // Power minimization starts close to the necessary-power scale; the ratio
  // objectives start near the full budget as their first subproblem would
  // use it anyway.
  const double budget_fraction = which == Algorithm::alg3 ? 0.2 : 0.9;
  state.expansion_point = initial_beamformers(cfg, scenario, budget_fraction);
  for (const auto& id : ctx.matrix_ids)
    state.penalty_vectors[id] = sca::refresh_penalty_vector(state.expansion_values().at(id));

  double rho = cfg.penalty_weight;
  std::map<std::string, double> warm_scalars;
  RateAllocation alloc;
  alloc.common_parts.assign(static_cast<size_t>(ctx.num_users), 0.0);

  // Prime the Dinkelbach factor with the starting point's exact ratio rather
  // than zero: the zero start spends the whole first iteration at full power.
  state.dinkelbach_factor = 0.0;
  if (which != Algorithm::alg3) {
    const MetricsReport m0 = evaluate(state.expansion_point, alloc, scenario.links, ctx.rsma);
    if (m0.total_power > 0.0) {
      const double metric0 =
          which == Algorithm::alg1 ? m0.min_total_rate() : m0.min_secrecy_rate();
      state.dinkelbach_factor = sca::dinkelbach_update(std::max(0.0, metric0), m0.total_power);
    }
  }

  auto assemble = [&](const sca::SCAState& st, double rho_now) {
    AlgorithmConfig c = cfg;
    c.penalty_weight = rho_now;
    if (!ctx.rsma) {
      const SdmaVariant v = which == Algorithm::alg1   ? SdmaVariant::p1
                            : which == Algorithm::alg2 ? SdmaVariant::p2
                                                       : SdmaVariant::p3;
      return assemble_sdma(v, st, c, scenario);
    }
    switch (which) {
      case Algorithm::alg1: return assemble_p13(st, c, scenario);
      case Algorithm::alg2: return assemble_p21(st, c, scenario);
      case Algorithm::alg3: return assemble_p31(st, c, scenario);
    }
    throw InvalidInput("unknown algorithm");
  };

  for (int iter = 0; iter < cfg.j_max; ++iter) {
    const conic::ConicProblem problem = assemble(state, rho);
    conic::SolveOptions opts;
    opts.initial_matrices = state.expansion_values();
    opts.initial_scalars = warm_scalars;
    const conic::Solution sol = backend.solve(problem, opts);

    if (sol.status != conic::SolveStatus::optimal) {
      if (sol.status == conic::SolveStatus::infeasible) {
        // Slack-penalized restoration: relax every rate/CRB constraint by a
        // common slack and minimize it, then resume from the recovered point.
        const conic::Solution rsol = backend.solve(problem.relaxed_copy("restore_slack"), opts);
        if (rsol.status == conic::SolveStatus::optimal &&
            rsol.scalar_values.at("restore_slack") <= 1e-7) {
          state.expansion_point = matrices_from_solution(rsol, ctx);
          for (const auto& id : ctx.matrix_ids)
            state.penalty_vectors[id] =
                sca::refresh_penalty_vector(state.expansion_values().at(id));
          continue;
        }
        rr.status = RunStatus::infeasible;
        rr.message = "subproblem infeasible at iteration " + std::to_string(iter) + "; " +
                     sol.stats.message;
      } else {
        rr.status = RunStatus::numerical_failure;
        rr.message = "solver failure at iteration " + std::to_string(iter) + ": " +
                     sol.stats.message;
      }
      rr.iterations = static_cast<int>(rr.objective_trace.size());
      return rr;
    }

    state.expansion_point = matrices_from_solution(sol, ctx);
    state.iteration = iter + 1;
    const auto values = state.expansion_values();
    double penalty_total = 0.0;
    for (const auto& id : ctx.matrix_ids) {
      const VectorXcd u = sca::refresh_penalty_vector(values.at(id));
      penalty_total += sca::rank_one_penalty(values.at(id), u, id).first;
      state.penalty_vectors[id] = u;
    }
    warm_scalars = sol.scalar_values;

    if (ctx.rsma && which != Algorithm::alg2) {
      for (int k = 0; k < ctx.num_users; ++k)
        alloc.common_parts[static_cast<size_t>(k)] =
            std::max(0.0, sol.scalar_values.at(common_rate_var(k)));
    } else if (ctx.rsma) {
      // Algorithm 2: the common stream carries the secure common parts.
      std::vector<double> csec(static_cast<size_t>(ctx.num_users), 0.0);
      for (int k = 0; k < ctx.num_users; ++k)
        csec[static_cast<size_t>(k)] = std::max(0.0, sol.scalar_values.at(secrecy_rate_var(k)));
      alloc.common_parts = csec;
      alloc.secrecy_common_parts = csec;
    }

    const MetricsReport exact = evaluate(state.expansion_point, alloc, scenario.links, ctx.rsma);
    rr.objective_trace.push_back(scheme_objective(which, exact));
    rr.penalty_trace.push_back(penalty_total);
    if (which == Algorithm::alg1)
      state.dinkelbach_factor = sca::dinkelbach_update(exact.min_total_rate(), exact.total_power);
    else if (which == Algorithm::alg2)
      state.dinkelbach_factor = sca::dinkelbach_update(exact.min_secrecy_rate(), exact.total_power);
    rr.dinkelbach_trace.push_back(state.dinkelbach_factor);
    state.objective_trace = rr.objective_trace;

    if (cfg.penalty_ramp) rho = std::min(rho * 2.0, 1e3);
    // tau acts on the objective at its natural scale: absolute below 1,
    // relative above (URPR-type objectives run in the hundreds).
    const auto& tr = rr.objective_trace;
    if (static_cast<int>(tr.size()) >= cfg.j_max) break;
    if (tr.size() >= 2 &&
        std::abs(tr.back() - tr[tr.size() - 2]) <=
            cfg.tau * std::max(1.0, std::abs(tr[tr.size() - 2])))
      break;
  }

  rr.iterations = static_cast<int>(rr.objective_trace.size());
  if (rr.objective_trace.empty()) {
    rr.status = RunStatus::numerical_failure;
    rr.message = "no accepted iterations";
    return rr;
  }
  rr.relaxed = state.expansion_point;
  rr.allocation = alloc;
  rr.relaxed_metrics = evaluate(rr.relaxed, alloc, scenario.links, ctx.rsma);

  BeamformerSet extracted;
  if (ctx.rsma) {
    const VectorXcd wc = sca::extract_beamformer(rr.relaxed.w_common);
    extracted.w_common = wc * wc.adjoint();
  }
  for (int k = 0; k < ctx.num_users; ++k) {
    const VectorXcd wk = sca::extract_beamformer(rr.relaxed.w_private[static_cast<size_t>(k)]);
    extracted.w_private.push_back(wk * wk.adjoint());
  }
  if (ctx.has_extra) {
    const VectorXcd wv = sca::extract_beamformer(rr.relaxed.w_extra);
    extracted.w_extra = wv * wv.adjoint();
  }

  if (which == Algorithm::alg3) {
    const double used = extracted.total_power();
    if (used > cfg.p_max + 1e-9) {
      rr.status = RunStatus::infeasible;
      rr.message = "necessary power exceeds the budget";
      rr.beamformers = extracted;
      return rr;
    }
    extracted.w_an = allocate_an(cfg.p_max, used, ctx.n_tx, rng);
  }

  rr.beamformers = extracted;
  rr.metrics = evaluate(extracted, alloc, scenario.links, ctx.rsma);

  const MetricsReport& m = rr.metrics;
  rr.feasibility_report.push_back({"power", m.total_power - cfg.p_max});
  try {
    const MatrixXcd r = sensing_covariance(extracted, cfg.selector);
    rr.crb_det = crb_determinant(fisher_information(r, scenario.sensing, scenario.array));
    rr.feasibility_report.push_back(
        {"crb", std::log(rr.crb_det) - std::log(cfg.crb_threshold)});
  } catch (const NumericalError&) {
    rr.crb_det = std::numeric_limits<double>::infinity();
    rr.feasibility_report.push_back({"crb", std::numeric_limits<double>::infinity()});
  }
  if (which != Algorithm::alg2)
    rr.feasibility_report.push_back({"qos", cfg.qos_threshold - m.min_total_rate()});
  if (which != Algorithm::alg3 && ctx.num_eaves > 0)
    rr.feasibility_report.push_back({"secrecy", cfg.secrecy_threshold - m.min_secrecy_rate()});
  if (ctx.rsma && which != Algorithm::alg3 && ctx.num_eaves > 0) {
    const double worst_eave =
        *std::max_element(m.eaves_common_rates.begin(), m.eaves_common_rates.end());
    rr.feasibility_report.push_back(
        {"security", worst_eave - common_rate_budget(m.common_rates)});
    double sum_c = 0.0;
    for (double c : alloc.common_parts) sum_c += c;
    rr.feasibility_report.push_back(
        {"common_split", sum_c - common_rate_budget(m.common_rates)});
  }

  const auto& tr = rr.objective_trace;
  const bool tau_met = tr.size() >= 2 &&
                       std::abs(tr.back() - tr[tr.size() - 2]) <=
                           cfg.tau * std::max(1.0, std::abs(tr[tr.size() - 2]));
  rr.status = tau_met ? RunStatus::converged : RunStatus::iteration_limit;
  return rr;
}

}  // namespace risac
