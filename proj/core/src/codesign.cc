#include "tcd/codesign.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "tcd/linalg.h"

namespace tcd {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using sdp::AffineExpr;
using sdp::Sense;

namespace {

// Disturbance channel as used in the LMIs. A constant D_p is folded with
// W_p^1/2 and truncated to its rank, so W_p^-1 becomes an identity of the
// smallest possible size; this leaves B_cl W B_cl' unchanged.
struct Disturbance {
  AffineMatrixFamily D_p;
  MatrixXd W_p_inv;
};

Disturbance effective_disturbance(const CodesignProblem& p) {
  Disturbance out;
  if (p.system.D_p.is_constant()) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(symmetrize(p.W_p));
    const VectorXd w = eig.eigenvalues().cwiseMax(0.0);
    const MatrixXd half = eig.eigenvectors() * w.cwiseSqrt().asDiagonal();
    const MatrixXd F = p.system.D_p.base() * half;
    Eigen::JacobiSVD<MatrixXd> svd(F, Eigen::ComputeThinU);
    int r = 0;
    const double tol = rank_tolerance(F);
    for (int i = 0; i < svd.singularValues().size(); ++i) {
      if (svd.singularValues()(i) > tol) ++r;
    }
    MatrixXd Dp = svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal();
    out.D_p = AffineMatrixFamily(Dp).with_parameter_count(p.system.parameter_count());
    out.W_p_inv = MatrixXd::Identity(r, r);
    return out;
  }
  Eigen::LLT<MatrixXd> llt(p.W_p);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("codesign: W_p must be positive definite when D_p depends on alpha");
  }
  out.D_p = p.system.D_p;
  out.W_p_inv = symmetrize(llt.solve(MatrixXd::Identity(p.W_p.rows(), p.W_p.cols())));
  return out;
}

AffineExpr family_expr(const AffineMatrixFamily& f, const AffineExpr& alpha) {
  AffineExpr out(f.base());
  for (int i = 0; i < f.parameter_count(); ++i) {
    const MatrixXd& c = f.coefficients()[i];
    if (c.cwiseAbs().maxCoeff() == 0.0) continue;
    out += AffineExpr::ScalarTimes(alpha.entry(i, 0), c);
  }
  return out;
}

AffineExpr zeros(int r, int c) { return AffineExpr::Zero(r, c); }

AffineExpr scaled_bound(const MatrixXd& bound, const AffineExpr* scale) {
  if (!scale) return AffineExpr(bound);
  return AffineExpr::ScalarTimes(*scale, bound);
}

// The design's W^-1 in LMI coordinates.
MatrixXd design_noise_inverse(const Disturbance& dist, const DesignPoint& d, bool state_feedback) {
  std::vector<MatrixXd> blocks{dist.W_p_inv, MatrixXd(d.gamma_a.asDiagonal())};
  if (!state_feedback) blocks.push_back(MatrixXd(d.gamma_s.asDiagonal()));
  return block_diagonal(blocks);
}

struct LoopMatrices {
  MatrixXd E, A, B, C, M;
};

LoopMatrices loop_matrices(const CodesignProblem& p, const DesignPoint& d, bool state_feedback,
                           const AffineMatrixFamily& D_p) {
  const DescriptorSystem& s = p.system;
  LoopMatrices L;
  if (state_feedback) {
    L.E = s.E(d.alpha);
    L.A = s.A(d.alpha) - s.B * d.K;
    L.B.resize(s.state_count(), D_p.cols() + s.input_count());
    L.B << D_p(d.alpha), s.D_a(d.alpha);
    L.C = s.C_y(d.alpha);
    L.M = -d.K;
    return L;
  }
  DescriptorSystem reduced = s;
  reduced.D_p = D_p;
  const ClosedLoop cl = assemble_closed_loop(reduced, d.alpha, d.controller);
  return LoopMatrices{cl.E, cl.A, cl.B, cl.C, cl.M};
}

void add_vector_bounds(sdp::Problem* prob, const AffineExpr& v, const VectorXd& lower, const VectorXd& upper,
                       const AffineExpr* lower_scale, const AffineExpr* upper_scale, const std::string& name) {
  if (upper.size()) {
    AffineExpr ub = upper_scale ? AffineExpr::ScalarTimes(*upper_scale, upper) : AffineExpr(MatrixXd(upper));
    prob->add_lmi(AffineExpr::Diagonal(v - ub), Sense::kNegativeDefinite, name + "_upper");
  }
  if (lower.size()) {
    AffineExpr lb = lower_scale ? AffineExpr::ScalarTimes(*lower_scale, lower) : AffineExpr(MatrixXd(lower));
    prob->add_lmi(AffineExpr::Diagonal(v - lb), Sense::kPositiveDefinite, name + "_lower");
  }
}

// Shared part of both builders: the budget, caps, box, covariance bounds
// and the objective. `cl_c` and `cl_m` are the output and control rows of
// the closed loop; `price_expr` is the affine price.
void add_common(Theorem1Program* prog, const CodesignProblem& p, Target target, const BuildOptions& o,
                const AffineExpr& Q, const AffineExpr& cl_c, const AffineExpr& cl_m, const AffineExpr& price_expr,
                const AffineExpr& alpha, const AffineExpr& gamma_a, const AffineExpr& gamma_s, bool state_feedback) {
  sdp::Problem& prob = prog->problem;
  AffineExpr z, t;
  if (!o.phase_one) {
    prog->z = prob.scalar("z");
    z = prob.expr(prog->z);
  } else {
    prog->slack = prob.scalar("t");
    prog->has_slack = true;
    t = prob.expr(prog->slack);
  }
  const AffineExpr one_plus_t = o.phase_one ? AffineExpr(1.0) + t : AffineExpr(1.0);

  // Output and control covariance bounds.
  auto bound_scale = [&](Target self) -> const AffineExpr* {
    if (target == self) return o.phase_one ? nullptr : &z;
    return o.phase_one ? &one_plus_t : nullptr;
  };
  const bool skip_y = o.phase_one && target == Target::kOutputBound;
  const bool skip_u = o.phase_one && target == Target::kControlBound;
  if (!skip_u) {
    const AffineExpr ub = scaled_bound(p.U_bar, bound_scale(Target::kControlBound));
    prob.add_lmi(AffineExpr::Block({{ub, cl_m}, {cl_m.transpose(), Q}}), Sense::kPositiveDefinite, "control_bound");
  }
  if (!skip_y) {
    const AffineExpr yb = scaled_bound(p.Y_bar, bound_scale(Target::kOutputBound));
    prob.add_lmi(AffineExpr::Block({{yb, cl_c}, {cl_c.transpose(), Q}}), Sense::kPositiveDefinite, "output_bound");
  }

  if (!p.fixed_parameters) {
    // Budget.
    if (!(o.phase_one && target == Target::kBudget)) {
      const AffineExpr cap =
          target == Target::kBudget ? z : AffineExpr::ScalarTimes(one_plus_t, MatrixXd::Constant(1, 1, p.budget));
      prob.add_lmi(price_expr - cap, Sense::kNegativeDefinite, "budget");
    }
    // Precision caps.
    add_vector_bounds(&prob, gamma_a, VectorXd(), p.gamma_a_cap, nullptr, nullptr, "gamma_a");
    if (!state_feedback) add_vector_bounds(&prob, gamma_s, VectorXd(), p.gamma_s_cap, nullptr, nullptr, "gamma_s");
    // Box.
    const bool free_upper = o.phase_one && target == Target::kAlphaUpper;
    const bool free_lower = o.phase_one && target == Target::kAlphaLower;
    add_vector_bounds(&prob, alpha, free_lower ? VectorXd() : p.alpha_lower, free_upper ? VectorXd() : p.alpha_upper,
                      (!o.phase_one && target == Target::kAlphaLower) ? &z : nullptr,
                      (!o.phase_one && target == Target::kAlphaUpper) ? &z : nullptr, "alpha");
  }

  if (o.phase_one) {
    prob.minimize(t);
  } else {
    prob.minimize(is_maximized(target) ? -z : z);
  }
}

AffineExpr price_expression(const CodesignProblem& p, const AffineExpr& alpha, const AffineExpr& gamma_a,
                            const AffineExpr* gamma_s) {
  AffineExpr out(0.0);
  if (p.prices.actuator.size()) out += MatrixXd(p.prices.actuator.transpose()) * gamma_a;
  if (gamma_s && p.prices.sensor.size()) out += MatrixXd(p.prices.sensor.transpose()) * (*gamma_s);
  if (p.prices.structure.size()) out += MatrixXd(p.prices.structure.transpose()) * alpha;
  return out;
}

}  // namespace

double price(const VectorXd& gamma_a, const VectorXd& gamma_s, const VectorXd& alpha, const Prices& prices) {
  auto term = [](const VectorXd& price, const VectorXd& x, const char* what) {
    if (price.size() == 0 || x.size() == 0) return 0.0;
    if (price.size() != x.size()) throw std::invalid_argument(std::string("price(): size mismatch for ") + what);
    if (x.minCoeff() < 0.0) throw std::invalid_argument(std::string("price(): negative ") + what);
    return price.dot(x);
  };
  return term(prices.actuator, gamma_a, "actuator precision") + term(prices.sensor, gamma_s, "sensor precision") +
         term(prices.structure, alpha, "structure parameter");
}

const char* to_string(Target t) {
  switch (t) {
    case Target::kBudget: return "budget";
    case Target::kOutputBound: return "ybar";
    case Target::kControlBound: return "ubar";
    case Target::kAlphaUpper: return "alpha_upper";
    case Target::kAlphaLower: return "alpha_lower";
  }
  return "?";
}

Target parse_target(const std::string& name) {
  for (Target t : {Target::kBudget, Target::kOutputBound, Target::kControlBound, Target::kAlphaUpper,
                   Target::kAlphaLower}) {
    if (name == to_string(t)) return t;
  }
  throw std::invalid_argument("unknown target '" + name + "'");
}

void CodesignProblem::validate(bool state_feedback) const {
  system.validate();
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("CodesignProblem: " + what);
  };
  const int n = system.state_count(), m = system.input_count(), l = system.measurement_count();
  const int np = system.parameter_count();
  need(W_p.rows() == system.disturbance_count() && W_p.cols() == W_p.rows(), "W_p must match D_p");
  need(min_eigenvalue(symmetrize(W_p)) >= -1e-12 * std::max(1.0, W_p.norm()), "W_p must be PSD");
  need(Y_bar.rows() == system.output_count() && Y_bar.cols() == Y_bar.rows(), "Y_bar must be p x p");
  need(U_bar.rows() == m && U_bar.cols() == m, "U_bar must be m x m");
  need(min_eigenvalue(symmetrize(Y_bar)) > 0.0, "Y_bar must be positive definite");
  need(min_eigenvalue(symmetrize(U_bar)) > 0.0, "U_bar must be positive definite");
  if (fixed_parameters) {
    need(fixed_alpha.size() == np, "fixed_alpha size");
    need(fixed_gamma_a.size() == m && fixed_gamma_a.minCoeff() > 0.0, "fixed_gamma_a must be positive, one per input");
    if (!state_feedback) {
      need(fixed_gamma_s.size() == l && fixed_gamma_s.minCoeff() > 0.0,
           "fixed_gamma_s must be positive, one per measurement");
    }
    return;
  }
  need(alpha_lower.size() == np && alpha_upper.size() == np, "alpha box must have one entry per parameter");
  need((alpha_upper - alpha_lower).minCoeff() > 0.0 || np == 0, "alpha_lower < alpha_upper required");
  need(gamma_a_cap.size() == m && gamma_a_cap.minCoeff() > 0.0, "gamma_a_cap must be positive, one per input");
  if (!state_feedback) {
    need(gamma_s_cap.size() == l && gamma_s_cap.minCoeff() > 0.0, "gamma_s_cap must be positive, one per measurement");
  }
  need(prices.actuator.size() == 0 || prices.actuator.size() == m, "actuator prices size");
  need(prices.sensor.size() == 0 || prices.sensor.size() == l, "sensor prices size");
  need(prices.structure.size() == 0 || prices.structure.size() == np, "structure prices size");
  for (const VectorXd* v : {&prices.actuator, &prices.sensor, &prices.structure}) {
    need(v->size() == 0 || v->minCoeff() > 0.0, "prices must be positive");
  }
  (void)n;
}

Theorem1Program build_theorem1_lmis(const CodesignProblem& p, const ConvexifyState& g, Target target,
                                    const BuildOptions& o) {
  const DescriptorSystem& s = p.system;
  const int n = s.state_count(), nc = n, m = s.input_count(), l = s.measurement_count();
  const int nq = n + nc, np = s.parameter_count();
  if (g.G.rows() != nq || g.G.cols() != nq) {
    throw std::invalid_argument("build_theorem1_lmis: G must be " + std::to_string(nq) + " square");
  }
  const Disturbance dist = effective_disturbance(p);
  const int r = dist.D_p.cols();

  Theorem1Program prog;
  sdp::Problem& prob = prog.problem;
  prob.set_relative_margin(o.relative_margin);
  prog.A_c = prob.matrix(nc, nc, "A_c");
  prog.B_c = prob.matrix(nc, l, "B_c");
  prog.C_c = prob.matrix(m, nc, "C_c");
  AffineExpr alpha, gamma_a, gamma_s;
  if (p.fixed_parameters) {
    alpha = AffineExpr(MatrixXd(p.fixed_alpha));
    gamma_a = AffineExpr(MatrixXd(p.fixed_gamma_a));
    gamma_s = AffineExpr(MatrixXd(p.fixed_gamma_s));
  } else {
    prog.gamma_a = prob.vector(m, "gamma_a");
    prog.gamma_s = prob.vector(l, "gamma_s");
    gamma_a = prob.expr(prog.gamma_a);
    gamma_s = prob.expr(prog.gamma_s);
    prog.has_precisions = true;
    if (np > 0) {
      prog.alpha = prob.vector(np, "alpha");
      alpha = prob.expr(prog.alpha);
      prog.has_alpha = true;
    } else {
      alpha = AffineExpr(MatrixXd(0, 1));
    }
  }
  prog.Q = prob.symmetric(nq, "Q");
  const AffineExpr Q = prob.expr(prog.Q);
  const AffineExpr Ac = prob.expr(prog.A_c), Bc = prob.expr(prog.B_c), Cc = prob.expr(prog.C_c);

  const AffineExpr A = family_expr(s.A, alpha), E = family_expr(s.E, alpha);
  const AffineExpr Dp = family_expr(dist.D_p, alpha), Da = family_expr(s.D_a, alpha);
  const AffineExpr Cy = family_expr(s.C_y, alpha);

  const AffineExpr A_cl = AffineExpr::Block({{A, s.B * Cc}, {Bc * s.C_z, Ac}});
  const AffineExpr E_cl = AffineExpr::BlockDiagonal({E, AffineExpr::Identity(nc)});
  const AffineExpr B_cl = AffineExpr::Block({{Dp, Da, zeros(n, l)}, {zeros(nc, r), zeros(nc, m), Bc * s.D_s}});
  const AffineExpr C_cl = AffineExpr::Block({{Cy, zeros(Cy.rows(), nc)}});
  const AffineExpr M_cl = AffineExpr::Block({{zeros(m, n), Cc}});
  const AffineExpr W_inv = AffineExpr::BlockDiagonal(
      {AffineExpr(dist.W_p_inv), AffineExpr::Diagonal(gamma_a), AffineExpr::Diagonal(gamma_s)});
  const int nw = r + m + l;

  const AffineExpr D = A_cl - E_cl;
  const MatrixXd Gt = g.G.transpose();
  const AffineExpr star = -(D * Gt) - g.G * D.transpose() + g.G * Q * Gt;
  prob.add_lmi(AffineExpr::Block({{star, B_cl, A_cl, E_cl},
                                  {B_cl.transpose(), -W_inv, zeros(nw, nq), zeros(nw, nq)},
                                  {A_cl.transpose(), zeros(nq, nw), -Q, zeros(nq, nq)},
                                  {E_cl.transpose(), zeros(nq, nw), zeros(nq, nq), -Q}}),
               Sense::kNegativeDefinite, "convexified_stability");

  const AffineExpr price_expr = p.fixed_parameters ? AffineExpr(0.0) : price_expression(p, alpha, gamma_a, &gamma_s);
  add_common(&prog, p, target, o, Q, C_cl, M_cl, price_expr, alpha, gamma_a, gamma_s, false);
  return prog;
}

Theorem1Program build_state_feedback_lmis(const CodesignProblem& p, const ConvexifyState& g, Target target,
                                          const BuildOptions& o) {
  const DescriptorSystem& s = p.system;
  const int n = s.state_count(), m = s.input_count(), np = s.parameter_count();
  if (g.G.rows() != n || g.G.cols() != n) {
    throw std::invalid_argument("build_state_feedback_lmis: G must be " + std::to_string(n) + " square");
  }
  const Disturbance dist = effective_disturbance(p);
  const int r = dist.D_p.cols();

  Theorem1Program prog;
  prog.state_feedback = true;
  sdp::Problem& prob = prog.problem;
  prob.set_relative_margin(o.relative_margin);
  prog.K = prob.matrix(m, n, "K");
  AffineExpr alpha, gamma_a;
  if (p.fixed_parameters) {
    alpha = AffineExpr(MatrixXd(p.fixed_alpha));
    gamma_a = AffineExpr(MatrixXd(p.fixed_gamma_a));
  } else {
    prog.gamma_a = prob.vector(m, "gamma_a");
    gamma_a = prob.expr(prog.gamma_a);
    prog.has_precisions = true;
    if (np > 0) {
      prog.alpha = prob.vector(np, "alpha");
      alpha = prob.expr(prog.alpha);
      prog.has_alpha = true;
    } else {
      alpha = AffineExpr(MatrixXd(0, 1));
    }
  }
  prog.Q = prob.symmetric(n, "Q");
  const AffineExpr Q = prob.expr(prog.Q), K = prob.expr(prog.K);

  const AffineExpr E = family_expr(s.E, alpha);
  const AffineExpr A_cl = family_expr(s.A, alpha) - s.B * K;
  const AffineExpr B_cl = AffineExpr::Block({{family_expr(dist.D_p, alpha), family_expr(s.D_a, alpha)}});
  const AffineExpr W_inv = AffineExpr::BlockDiagonal({AffineExpr(dist.W_p_inv), AffineExpr::Diagonal(gamma_a)});
  const int nw = r + m;

  const AffineExpr D = A_cl - E;
  const MatrixXd Gt = g.G.transpose();
  const AffineExpr star = -(D * Gt) - g.G * D.transpose() + g.G * Q * Gt;
  prob.add_lmi(AffineExpr::Block({{star, B_cl, A_cl, E},
                                  {B_cl.transpose(), -W_inv, zeros(nw, n), zeros(nw, n)},
                                  {A_cl.transpose(), zeros(n, nw), -Q, zeros(n, n)},
                                  {E.transpose(), zeros(n, nw), zeros(n, n), -Q}}),
               Sense::kNegativeDefinite, "convexified_stability");

  const AffineExpr price_expr = p.fixed_parameters ? AffineExpr(0.0) : price_expression(p, alpha, gamma_a, nullptr);
  add_common(&prog, p, target, o, Q, family_expr(s.C_y, alpha), K, price_expr, alpha, gamma_a, AffineExpr(), true);
  return prog;
}

ClosedLoop design_closed_loop(const CodesignProblem& p, const DesignPoint& d, bool state_feedback) {
  const LoopMatrices L = loop_matrices(p, d, state_feedback, p.system.D_p);
  return ClosedLoop{L.E, L.A, L.B, L.C, L.M};
}

MatrixXd design_noise(const CodesignProblem& p, const DesignPoint& d, bool state_feedback) {
  NoiseModel nm{p.W_p, d.gamma_a, state_feedback ? VectorXd() : d.gamma_s};
  return nm.covariance();
}

ConvexifyState convexify_update(const CodesignProblem& p, const DesignPoint& d, bool state_feedback, int iteration) {
  const LoopMatrices L = loop_matrices(p, d, state_feedback, p.system.D_p);
  Eigen::LLT<MatrixXd> llt(d.Q);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("convexify_update: Q is not positive definite");
  ConvexifyState g;
  g.G = (L.A - L.E) * llt.solve(MatrixXd::Identity(d.Q.rows(), d.Q.cols()));
  g.iteration = iteration;
  return g;
}

double nonconvex_residual(const CodesignProblem& p, const DesignPoint& d, bool state_feedback) {
  const Disturbance dist = effective_disturbance(p);
  const LoopMatrices L = loop_matrices(p, d, state_feedback, dist.D_p);
  const MatrixXd X = d.Q.llt().solve(MatrixXd::Identity(d.Q.rows(), d.Q.cols()));
  const MatrixXd W_inv = design_noise_inverse(dist, d, state_feedback);
  const auto nq = L.A.rows(), nw = W_inv.rows();
  MatrixXd F = MatrixXd::Zero(nq + nw + 2 * nq, nq + nw + 2 * nq);
  const MatrixXd D = L.A - L.E;
  F.block(0, 0, nq, nq) = -D * X * D.transpose();
  F.block(0, nq, nq, nw) = L.B;
  F.block(0, nq + nw, nq, nq) = L.A;
  F.block(0, 2 * nq + nw, nq, nq) = L.E;
  F.block(nq, nq, nw, nw) = -W_inv;
  F.block(nq + nw, nq + nw, nq, nq) = -d.Q;
  F.block(2 * nq + nw, 2 * nq + nw, nq, nq) = -d.Q;
  F = F.selfadjointView<Eigen::Upper>();
  return max_eigenvalue(F);
}

MatrixXd convexifying_potential(const CodesignProblem& p, const DesignPoint& d, const ConvexifyState& g,
                                bool state_feedback) {
  const LoopMatrices L = loop_matrices(p, d, state_feedback, p.system.D_p);
  const MatrixXd X = d.Q.llt().solve(MatrixXd::Identity(d.Q.rows(), d.Q.cols()));
  const MatrixXd R = L.A - L.E - g.G * d.Q;
  return symmetrize(R * X * R.transpose());
}

double target_value(const CodesignProblem& p, const DesignPoint& d, Target target, bool state_feedback) {
  auto generalized_max = [](const MatrixXd& S, const MatrixXd& bound) {
    Eigen::LLT<MatrixXd> llt(bound);
    MatrixXd T = llt.matrixL().solve(S);
    T = llt.matrixL().solve(MatrixXd(T.transpose())).transpose();
    return max_eigenvalue(symmetrize(T));
  };
  switch (target) {
    case Target::kBudget:
      return price(d.gamma_a, state_feedback ? VectorXd() : d.gamma_s, d.alpha, p.prices);
    case Target::kOutputBound:
    case Target::kControlBound: {
      const LoopMatrices L = loop_matrices(p, d, state_feedback, p.system.D_p);
      const MatrixXd X = d.Q.llt().solve(MatrixXd::Identity(d.Q.rows(), d.Q.cols()));
      if (target == Target::kOutputBound) return generalized_max(L.C * X * L.C.transpose(), p.Y_bar);
      return generalized_max(L.M * X * L.M.transpose(), p.U_bar);
    }
    case Target::kAlphaUpper:
      return d.alpha.cwiseQuotient(p.alpha_upper).maxCoeff();
    case Target::kAlphaLower:
      return d.alpha.cwiseQuotient(p.alpha_lower).minCoeff();
  }
  return 0.0;
}

VerificationReport verify_solution(const CodesignProblem& p, const DesignPoint& d, Target target, double z,
                                   bool state_feedback, double tolerance) {
  VerificationReport rep;
  std::ostringstream msg;
  const ClosedLoop cl = design_closed_loop(p, d, state_feedback);
  const StabilityReport st = stability_check(cl);
  rep.stable = st.stable;
  rep.spectral_abscissa = st.abscissa;
  if (!st.stable) {
    rep.failures.push_back("closed loop not stable (abscissa " + std::to_string(st.abscissa) + ")");
    return rep;
  }
  const CovarianceResult cov = lyapunov_covariance(cl, design_noise(p, d, state_feedback));
  rep.Y = cov.Y;
  rep.U = cov.U;
  const MatrixXd Yb = target == Target::kOutputBound ? MatrixXd(z * p.Y_bar) : p.Y_bar;
  const MatrixXd Ub = target == Target::kControlBound ? MatrixXd(z * p.U_bar) : p.U_bar;
  rep.output_excess = max_eigenvalue(symmetrize(rep.Y - Yb)) / Yb.norm();
  rep.control_excess = max_eigenvalue(symmetrize(rep.U - Ub)) / Ub.norm();
  if (rep.output_excess > tolerance) {
    rep.failures.push_back("output covariance exceeds Y_bar (relative excess " + std::to_string(rep.output_excess) +
                           ")");
  }
  if (rep.control_excess > tolerance) {
    rep.failures.push_back("control covariance exceeds U_bar (relative excess " +
                           std::to_string(rep.control_excess) + ")");
  }
  if (!p.fixed_parameters) {
    rep.price = price(d.gamma_a, state_feedback ? VectorXd() : d.gamma_s, d.alpha, p.prices);
    const double budget = target == Target::kBudget ? z : p.budget;
    if (rep.price > budget * (1.0 + tolerance)) {
      rep.failures.push_back("price " + std::to_string(rep.price) + " exceeds budget " + std::to_string(budget));
    }
    if ((d.gamma_a - p.gamma_a_cap).maxCoeff() > tolerance * p.gamma_a_cap.maxCoeff()) {
      rep.failures.push_back("actuator precision above cap");
    }
    if (!state_feedback && (d.gamma_s - p.gamma_s_cap).maxCoeff() > tolerance * p.gamma_s_cap.maxCoeff()) {
      rep.failures.push_back("sensor precision above cap");
    }
    if (d.alpha.size()) {
      const VectorXd up = target == Target::kAlphaUpper ? VectorXd(z * p.alpha_upper) : p.alpha_upper;
      const VectorXd lo = target == Target::kAlphaLower ? VectorXd(z * p.alpha_lower) : p.alpha_lower;
      const double scale = std::max(1.0, up.cwiseAbs().maxCoeff());
      if ((d.alpha - up).maxCoeff() > tolerance * scale || (lo - d.alpha).maxCoeff() > tolerance * scale) {
        rep.failures.push_back("alpha outside its box");
      }
    }
  } else {
    rep.price = 0.0;
  }
  rep.passed = rep.failures.empty();
  return rep;
}

DesignPoint initial_design(const CodesignProblem& p, bool state_feedback, const CodesignOptions& o) {
  const DescriptorSystem& s = p.system;
  const int n = s.state_count();
  DesignPoint d;
  if (p.fixed_parameters) {
    d.alpha = p.fixed_alpha;
    d.gamma_a = p.fixed_gamma_a;
    d.gamma_s = state_feedback ? VectorXd() : p.fixed_gamma_s;
  } else {
    d.alpha = 0.5 * (p.alpha_lower + p.alpha_upper);
    d.gamma_a = o.cap_fraction * p.gamma_a_cap;
    d.gamma_s = state_feedback ? VectorXd() : VectorXd(o.cap_fraction * p.gamma_s_cap);
  }
  Eigen::PartialPivLU<MatrixXd> E(s.E(d.alpha));
  const MatrixXd Abar = E.solve(s.A(d.alpha));
  const MatrixXd Bbar = E.solve(s.B);
  const MatrixXd Cy = s.C_y(d.alpha);

  // Regulator weights normalized by the bounds.
  MatrixXd Qx = Cy.transpose() * p.Y_bar.llt().solve(Cy);
  Qx += 1e-6 * std::max(1.0, Qx.norm()) * MatrixXd::Identity(n, n);
  const MatrixXd R = p.U_bar.llt().solve(MatrixXd::Identity(p.U_bar.rows(), p.U_bar.cols()));
  const MatrixXd S = solve_care(Abar, Bbar, Qx, R);
  const MatrixXd K = R.llt().solve(Bbar.transpose() * S);

  if (state_feedback) {
    d.K = K;
  } else {
    MatrixXd Dw(n, s.D_p.cols() + s.input_count());
    Dw << s.D_p(d.alpha), s.D_a(d.alpha);
    MatrixXd Ww = MatrixXd::Zero(Dw.cols(), Dw.cols());
    Ww.topLeftCorner(p.W_p.rows(), p.W_p.cols()) = p.W_p;
    Ww.bottomRightCorner(s.input_count(), s.input_count()).diagonal() = d.gamma_a.cwiseInverse();
    const MatrixXd Dw_bar = E.solve(Dw);
    MatrixXd Vw = symmetrize(Dw_bar * Ww * Dw_bar.transpose());
    Vw += 1e-9 * std::max(1.0, Vw.norm()) * MatrixXd::Identity(n, n);
    const MatrixXd Vs = symmetrize(s.D_s * d.gamma_s.cwiseInverse().asDiagonal() * s.D_s.transpose());
    const MatrixXd P = solve_care(Abar.transpose(), s.C_z.transpose(), Vw, Vs);
    const MatrixXd L = P * s.C_z.transpose() * Vs.llt().solve(MatrixXd::Identity(Vs.rows(), Vs.cols()));
    d.controller.A_c = Abar - Bbar * K - L * s.C_z;
    d.controller.B_c = L;
    d.controller.C_c = -K;
  }

  const ClosedLoop cl = design_closed_loop(p, d, state_feedback);
  const CovarianceResult cov = lyapunov_covariance(cl, design_noise(p, d, state_feedback));
  // The starting certificate is X + beta X_I, where X_I is driven by white
  // noise on every state in coordinates balanced by X. The identity drive
  // makes the Lyapunov inequality strict in every direction; beta spends a
  // share of the slack in the covariance bounds.
  const int nq = static_cast<int>(cov.X.rows());
  MatrixXd T(nq, nq);
  if (state_feedback) {
    T = cov.X.llt().matrixL();
  } else {
    T = block_diagonal({MatrixXd(cov.X.topLeftCorner(n, n).llt().matrixL()),
                        MatrixXd(cov.X.bottomRightCorner(n, n).llt().matrixL())});
  }
  Eigen::PartialPivLU<MatrixXd> Ecl(cl.E);
  const MatrixXd Acl = Ecl.solve(cl.A);
  const MatrixXd ET = Ecl.solve(T);
  const MatrixXd Xi = symmetrize(solve_lyapunov(Acl, ET * ET.transpose()));
  auto ratio = [](const MatrixXd& S, const MatrixXd& bound) {
    Eigen::LLT<MatrixXd> llt(bound);
    MatrixXd R = llt.matrixL().solve(S);
    R = llt.matrixL().solve(MatrixXd(R.transpose())).transpose();
    return max_eigenvalue(symmetrize(R));
  };
  const double y0 = ratio(cl.C * cov.X * cl.C.transpose(), p.Y_bar);
  const double u0 = ratio(cl.M * cov.X * cl.M.transpose(), p.U_bar);
  const double yi = ratio(cl.C * Xi * cl.C.transpose(), p.Y_bar);
  const double ui = ratio(cl.M * Xi * cl.M.transpose(), p.U_bar);
  auto step = [&](double v0, double vi) {
    if (vi <= 0.0) return std::numeric_limits<double>::infinity();
    const double room = v0 < 1.0 ? o.slack_share * (1.0 - v0) : 0.05 * v0;
    return room / vi;
  };
  double beta = std::min(step(y0, yi), step(u0, ui));
  if (!std::isfinite(beta)) beta = 1e-3 * cov.X.norm() / Xi.norm();
  const MatrixXd X0 = symmetrize(cov.X + beta * Xi);
  d.Q = symmetrize(X0.llt().solve(MatrixXd::Identity(nq, nq)));
  return d;
}

namespace {

DesignPoint extract(const Theorem1Program& prog, const sdp::Solution& sol, const CodesignProblem& p) {
  DesignPoint d;
  if (prog.state_feedback) {
    d.K = sol.value(prog.K);
  } else {
    d.controller.A_c = sol.value(prog.A_c);
    d.controller.B_c = sol.value(prog.B_c);
    d.controller.C_c = sol.value(prog.C_c);
  }
  if (prog.has_precisions) {
    d.gamma_a = sol.value(prog.gamma_a);
    if (!prog.state_feedback) d.gamma_s = sol.value(prog.gamma_s);
  } else {
    d.gamma_a = p.fixed_gamma_a;
    if (!prog.state_feedback) d.gamma_s = p.fixed_gamma_s;
  }
  if (prog.has_alpha) {
    d.alpha = sol.value(prog.alpha);
  } else {
    d.alpha = p.fixed_parameters ? p.fixed_alpha : VectorXd(VectorXd::Zero(0));
  }
  d.Q = symmetrize(sol.value(prog.Q));
  return d;
}

// Coordinates in which the initial design is well conditioned. Plant and
// controller states are rescaled so the diagonal blocks of the initial
// certificate X0 become identities, and time is rescaled by omega so the
// closed-loop spectrum is centred on unit magnitude. Precisions are measured
// in units of their caps, alpha in units of its box, the covariance bounds
// become identities and prices are divided by the budget. Every constraint
// maps to an equivalent one and the covariance is unchanged; only the budget
// target changes its value (by the budget).
struct Scaling {
  double omega = 1.0;
  MatrixXd T, T_inv, T_c, T_c_inv;
  MatrixXd U_half, U_half_inv, Y_half_inv;
  VectorXd a, c_a, c_s;
  double price_unit = 1.0;
};

MatrixXd spd_power(const MatrixXd& S, double power) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(symmetrize(S));
  const VectorXd w = eig.eigenvalues().array().pow(power);
  return eig.eigenvectors() * w.asDiagonal() * eig.eigenvectors().transpose();
}

AffineMatrixFamily map_family(const AffineMatrixFamily& f, const MatrixXd& left, const MatrixXd& right,
                              const VectorXd& a) {
  std::vector<MatrixXd> coefficients;
  for (int i = 0; i < f.parameter_count(); ++i) coefficients.push_back(a(i) * left * f.coefficients()[i] * right);
  return AffineMatrixFamily(left * f.base() * right, coefficients);
}

Scaling make_scaling(const CodesignProblem& p, const DesignPoint& d0, bool sf) {
  const DescriptorSystem& s = p.system;
  const int n = s.state_count();
  Scaling sc;
  const MatrixXd X0 = symmetrize(d0.Q.llt().solve(MatrixXd::Identity(d0.Q.rows(), d0.Q.cols())));
  sc.T = X0.topLeftCorner(n, n).llt().matrixL();
  sc.T_inv = sc.T.inverse();
  if (!sf) {
    sc.T_c = X0.bottomRightCorner(n, n).llt().matrixL();
    sc.T_c_inv = sc.T_c.inverse();
  }
  const ClosedLoop cl = design_closed_loop(p, d0, sf);
  const Eigen::VectorXcd lambda = Eigen::PartialPivLU<MatrixXd>(cl.E).solve(cl.A).eigenvalues();
  const double fast = lambda.cwiseAbs().maxCoeff(), slow = lambda.cwiseAbs().minCoeff();
  if (slow > 0.0) sc.omega = std::sqrt(fast * slow);
  sc.U_half = spd_power(p.U_bar, 0.5);
  sc.U_half_inv = spd_power(p.U_bar, -0.5);
  sc.Y_half_inv = spd_power(p.Y_bar, -0.5);
  const int np = s.parameter_count();
  sc.a = VectorXd::Ones(np);
  if (p.fixed_parameters) {
    sc.c_a = p.fixed_gamma_a;
    sc.c_s = sf ? VectorXd() : p.fixed_gamma_s;
  } else {
    for (int i = 0; i < np; ++i) {
      const double m = std::max(std::abs(p.alpha_lower(i)), std::abs(p.alpha_upper(i)));
      if (m > 0.0) sc.a(i) = m;
    }
    sc.c_a = p.gamma_a_cap;
    sc.c_s = sf ? VectorXd() : p.gamma_s_cap;
    sc.price_unit = p.budget;
  }
  return sc;
}

CodesignProblem scale_problem(const CodesignProblem& p, const Scaling& sc, bool sf) {
  const DescriptorSystem& s = p.system;
  CodesignProblem q = p;
  DescriptorSystem& t = q.system;
  const double rate = 1.0 / sc.omega, root = std::sqrt(rate);
  t.E = map_family(s.E, sc.T_inv, sc.T, sc.a);
  t.A = map_family(s.A, rate * sc.T_inv, sc.T, sc.a);
  t.D_p = map_family(s.D_p, root * sc.T_inv, MatrixXd::Identity(s.D_p.cols(), s.D_p.cols()), sc.a);
  t.D_a = map_family(s.D_a, root * sc.T_inv, sc.c_a.cwiseSqrt().cwiseInverse().asDiagonal(), sc.a);
  t.C_y = map_family(s.C_y, sc.Y_half_inv, sc.T, sc.a);
  t.B = rate * sc.T_inv * s.B * sc.U_half;
  t.C_z = s.C_z * sc.T;
  if (!sf) t.D_s = s.D_s * (sc.c_s.cwiseSqrt().cwiseInverse() / root).asDiagonal();
  q.Y_bar = MatrixXd::Identity(p.Y_bar.rows(), p.Y_bar.cols());
  q.U_bar = MatrixXd::Identity(p.U_bar.rows(), p.U_bar.cols());
  if (p.fixed_parameters) {
    q.fixed_alpha = p.fixed_alpha.cwiseQuotient(sc.a);
    q.fixed_gamma_a = VectorXd::Ones(sc.c_a.size());
    if (!sf) q.fixed_gamma_s = VectorXd::Ones(sc.c_s.size());
    return q;
  }
  q.alpha_lower = p.alpha_lower.cwiseQuotient(sc.a);
  q.alpha_upper = p.alpha_upper.cwiseQuotient(sc.a);
  q.gamma_a_cap = VectorXd::Ones(sc.c_a.size());
  if (!sf) q.gamma_s_cap = VectorXd::Ones(sc.c_s.size());
  q.budget = 1.0;
  auto rescale = [&](const VectorXd& price, const VectorXd& unit) {
    return price.size() ? VectorXd(price.cwiseProduct(unit) / sc.price_unit) : VectorXd();
  };
  q.prices.actuator = rescale(p.prices.actuator, sc.c_a);
  q.prices.sensor = rescale(p.prices.sensor, sc.c_s);
  q.prices.structure = rescale(p.prices.structure, sc.a);
  return q;
}

DesignPoint to_scaled(const DesignPoint& d, const Scaling& sc, bool sf) {
  DesignPoint out;
  out.alpha = d.alpha.cwiseQuotient(sc.a);
  out.gamma_a = d.gamma_a.cwiseQuotient(sc.c_a);
  MatrixXd T_cl = sc.T;
  if (sf) {
    out.K = sc.U_half_inv * d.K * sc.T;
  } else {
    out.gamma_s = d.gamma_s.cwiseQuotient(sc.c_s);
    out.controller.A_c = sc.T_c_inv * d.controller.A_c * sc.T_c / sc.omega;
    out.controller.B_c = sc.T_c_inv * d.controller.B_c / sc.omega;
    out.controller.C_c = sc.U_half_inv * d.controller.C_c * sc.T_c;
    T_cl = block_diagonal({sc.T, sc.T_c});
  }
  out.Q = symmetrize(T_cl.transpose() * d.Q * T_cl);
  return out;
}

DesignPoint from_scaled(const DesignPoint& d, const Scaling& sc, bool sf) {
  DesignPoint out;
  out.alpha = d.alpha.cwiseProduct(sc.a);
  out.gamma_a = d.gamma_a.cwiseProduct(sc.c_a);
  MatrixXd T_cl_inv = sc.T_inv;
  if (sf) {
    out.K = sc.U_half * d.K * sc.T_inv;
  } else {
    out.gamma_s = d.gamma_s.cwiseProduct(sc.c_s);
    out.controller.A_c = sc.omega * sc.T_c * d.controller.A_c * sc.T_c_inv;
    out.controller.B_c = sc.omega * sc.T_c * d.controller.B_c;
    out.controller.C_c = sc.U_half * d.controller.C_c * sc.T_c_inv;
    T_cl_inv = block_diagonal({sc.T_inv, sc.T_c_inv});
  }
  out.Q = symmetrize(T_cl_inv.transpose() * d.Q * T_cl_inv);
  return out;
}

// The sequential scheme needs a feasible point of each subproblem, not an
// exact optimum: a stalled solve is still used when its best iterate passes
// the plug-back check.
bool usable(const sdp::Solution& sol) {
  if (sol.status == sdp::Status::kOptimal) return true;
  return sol.status == sdp::Status::kUnknown && sol.x.allFinite() && sol.max_violation <= 0.0;
}

CodesignSolution run_extremize(const CodesignProblem& original, Target target, const CodesignOptions& o,
                               bool sf) {
  original.validate(sf);
  if (original.fixed_parameters && (target == Target::kBudget || target == Target::kAlphaUpper ||
                             target == Target::kAlphaLower)) {
    throw std::invalid_argument("extremize: target " + std::string(to_string(target)) +
                                " needs free structure parameters and precisions");
  }
  if ((target == Target::kAlphaUpper && original.alpha_upper.minCoeff() <= 0.0) ||
      (target == Target::kAlphaLower && original.alpha_lower.minCoeff() <= 0.0)) {
    throw std::invalid_argument("extremize: box targets need a positive box shape");
  }
  const DesignPoint d0 = initial_design(original, sf, o);
  const Scaling sc = make_scaling(original, d0, sf);
  const CodesignProblem q = scale_problem(original, sc, sf);
  const double z_unit = target == Target::kBudget ? sc.price_unit : 1.0;

  auto build = [&](const ConvexifyState& g, bool phase_one) {
    BuildOptions b;
    b.relative_margin = o.relative_margin;
    b.phase_one = phase_one;
    return sf ? build_state_feedback_lmis(q, g, target, b) : build_theorem1_lmis(q, g, target, b);
  };

  CodesignSolution out;
  out.target = target;
  out.state_feedback = sf;
  DesignPoint d = to_scaled(d0, sc, sf);

  // Phase one: reach a point that meets the non-target constraints.
  auto violation = [&](const DesignPoint& x) {
    double v = -std::numeric_limits<double>::infinity();
    if (target != Target::kOutputBound) v = std::max(v, target_value(q, x, Target::kOutputBound, sf) - 1.0);
    if (target != Target::kControlBound) v = std::max(v, target_value(q, x, Target::kControlBound, sf) - 1.0);
    if (!q.fixed_parameters && target != Target::kBudget) {
      v = std::max(v, target_value(q, x, Target::kBudget, sf) / q.budget - 1.0);
    }
    return v;
  };
  double t_prev = violation(d);
  int k1 = 0;
  while (t_prev > -1e-6) {
    if (k1 >= o.max_phase_one_iterations) {
      throw std::runtime_error("extremize: no design meets the non-target constraints after " +
                               std::to_string(k1) + " phase-one iterations (relative excess " +
                               std::to_string(t_prev) + ")");
    }
    const Theorem1Program prog = build(convexify_update(q, d, sf, k1), true);
    const sdp::Solution sol = sdp::solve(prog.problem, o.solver);
    ++k1;
    if (!usable(sol)) {
      throw std::runtime_error("extremize: phase-one subproblem " + std::to_string(k1) + " returned " +
                               sdp::to_string(sol.status) + " (" + sol.message + "), relative excess " +
                               std::to_string(t_prev));
    }
    const double t = sol.scalar(prog.slack);
    d = extract(prog, sol, q);
    if (t > t_prev - 1e-6 * std::max(1.0, std::abs(t_prev)) && t > 0.0) {
      throw std::runtime_error("extremize: phase one stalled at relative excess " + std::to_string(t) +
                               "; the constraints look infeasible for this structure");
    }
    t_prev = t;
  }
  out.phase_one_iterations = k1;

  // Main loop.
  double z = target_value(q, d, target, sf);
  out.history.push_back(z);
  out.residuals.push_back(nonconvex_residual(q, d, sf));
  const double tol = o.relative_tolerance * std::max(std::abs(z), 1e-12);
  out.status = "iteration_limit";
  for (int k = 0; k < o.max_iterations; ++k) {
    const Theorem1Program prog = build(convexify_update(q, d, sf, k), false);
    const sdp::Solution sol = sdp::solve(prog.problem, o.solver);
    if (!usable(sol)) {
      out.status = "solver_failure";
      out.message = "subproblem " + std::to_string(k + 1) + " returned " + sdp::to_string(sol.status) + " (" +
                    sol.message + "); returning the last accepted iterate";
      break;
    }
    const double z_new = sol.scalar(prog.z);
    const double improvement = is_maximized(target) ? z_new - z : z - z_new;
    // The previous iterate is feasible for this subproblem, so a worse
    // value only reflects solver accuracy: stop at the previous point.
    if (improvement < -1e-9 * std::abs(z)) {
      out.status = "stationary";
      out.converged = true;
      out.message = "no further improvement within solver accuracy";
      break;
    }
    d = extract(prog, sol, q);
    z = z_new;
    out.history.push_back(z);
    out.residuals.push_back(nonconvex_residual(q, d, sf));
    out.iterations = k + 1;
    if (improvement < tol) {
      out.status = "stationary";
      out.converged = true;
      break;
    }
  }
  out.design = from_scaled(d, sc, sf);
  out.z = z * z_unit;
  for (double& h : out.history) h *= z_unit;
  out.verification = verify_solution(original, out.design, target, out.z, sf);
  return out;
}

}  // namespace

CodesignSolution extremize(const CodesignProblem& p, Target target, const CodesignOptions& o) {
  return run_extremize(p, target, o, false);
}

CodesignSolution extremize_state_feedback(const CodesignProblem& p, Target target, const CodesignOptions& o) {
  return run_extremize(p, target, o, true);
}

}  // namespace tcd
