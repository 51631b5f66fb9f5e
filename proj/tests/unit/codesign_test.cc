#include <cmath>
#include <random>

#include "doctest.h"

#include "oracles.h"
#include "tcd/codesign.h"
#include "tcd/linalg.h"
#include "tcd/model.h"

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace tcd {
namespace {

// Budget problem on the desk arm with every input and measurement priced
// at one per unit precision and ten per unit prestress.
CodesignProblem arm_problem() {
  const TensegrityModel m = desk_arm();
  CodesignProblem p;
  p.system = tensegrity_descriptor(m);
  const DescriptorSystem& s = p.system;
  p.W_p = MatrixXd::Identity(s.disturbance_count(), s.disturbance_count());
  p.Y_bar = 0.02 * MatrixXd::Identity(s.output_count(), s.output_count());
  p.U_bar = 1.2 * MatrixXd::Identity(s.input_count(), s.input_count());
  p.budget = 1e6;
  p.gamma_a_cap = VectorXd::Constant(s.input_count(), 1e4);
  p.gamma_s_cap = VectorXd::Constant(s.measurement_count(), 1e4);
  p.alpha_lower = 0.5 * m.prestress;
  p.alpha_upper = 2.0 * m.prestress;
  p.prices.actuator = VectorXd::Ones(s.input_count());
  p.prices.sensor = VectorXd::Ones(s.measurement_count());
  p.prices.structure = VectorXd::Constant(s.parameter_count(), 10.0);
  return p;
}

CodesignProblem oscillator_problem() {
  CodesignProblem p;
  p.system = oscillator_descriptor(1.0, 0.2);
  p.W_p = MatrixXd::Identity(1, 1);
  p.Y_bar = 0.5 * MatrixXd::Identity(2, 2);
  p.U_bar = 2.0 * MatrixXd::Identity(1, 1);
  p.budget = 1e4;
  p.gamma_a_cap = VectorXd::Constant(1, 1e3);
  p.gamma_s_cap = VectorXd::Constant(2, 1e3);
  p.alpha_lower = VectorXd::Constant(1, 0.5);
  p.alpha_upper = VectorXd::Constant(1, 4.0);
  p.prices.actuator = VectorXd::Ones(1);
  p.prices.sensor = VectorXd::Ones(2);
  p.prices.structure = VectorXd::Constant(1, 10.0);
  return p;
}

// Dof vector of a subproblem holding the given design (and z, t).
VectorXd pack(const Theorem1Program& prog, const DesignPoint& d, double z) {
  VectorXd x = VectorXd::Zero(prog.problem.dof_count());
  auto put = [&](const sdp::Variable& v, const MatrixXd& value) {
    int dof = v.offset;
    if (v.kind == sdp::VariableKind::kSymmetric) {
      for (int j = 0; j < v.cols; ++j) {
        for (int i = 0; i <= j; ++i) x(dof++) = value(i, j);
      }
      return;
    }
    for (int j = 0; j < v.cols; ++j) {
      for (int i = 0; i < v.rows; ++i) x(dof++) = value(i, j);
    }
  };
  if (prog.state_feedback) {
    put(prog.K, d.K);
  } else {
    put(prog.A_c, d.controller.A_c);
    put(prog.B_c, d.controller.B_c);
    put(prog.C_c, d.controller.C_c);
  }
  if (prog.has_precisions) {
    put(prog.gamma_a, d.gamma_a);
    if (!prog.state_feedback) put(prog.gamma_s, d.gamma_s);
  }
  if (prog.has_alpha) put(prog.alpha, d.alpha);
  put(prog.Q, d.Q);
  if (!prog.has_slack) x(prog.z.offset) = z;
  return x;
}

const sdp::Constraint& constraint(const sdp::Problem& p, const std::string& label) {
  for (const auto& c : p.constraints()) {
    if (c.label == label) return c;
  }
  throw std::out_of_range(label);
}

bool non_increasing(const std::vector<double>& h) {
  for (std::size_t k = 1; k < h.size(); ++k) {
    if (h[k] > h[k - 1] + 1e-9 * std::abs(h[k - 1])) return false;
  }
  return true;
}

TEST_CASE("price is linear in precisions and structure") {
  Prices pr{VectorXd::Ones(2), VectorXd::Ones(3), VectorXd::Constant(1, 10.0)};
  CHECK(price(VectorXd::Zero(2), VectorXd::Zero(3), VectorXd::Zero(1), pr) == 0.0);
  CHECK(price(VectorXd::Ones(2), VectorXd::Ones(3), VectorXd::Ones(1), pr) == doctest::Approx(2 + 3 + 10));
  const VectorXd ga(VectorXd::LinSpaced(2, 1.0, 2.0)), gs(VectorXd::LinSpaced(3, 0.5, 4.0));
  const VectorXd al = VectorXd::Constant(1, 3.0);
  CHECK(price(2 * ga, 2 * gs, 2 * al, pr) == doctest::Approx(2 * price(ga, gs, al, pr)));
  // State feedback: no sensor term.
  CHECK(price(ga, VectorXd(), al, pr) == doctest::Approx(ga.sum() + 30.0));
  CHECK_THROWS_AS(price(-ga, gs, al, pr), std::invalid_argument);
  CHECK_THROWS_AS(price(VectorXd::Ones(3), gs, al, pr), std::invalid_argument);
}

TEST_CASE("target names round trip") {
  for (Target t : {Target::kBudget, Target::kOutputBound, Target::kControlBound, Target::kAlphaUpper,
                   Target::kAlphaLower}) {
    CHECK(parse_target(to_string(t)) == t);
  }
  CHECK(is_maximized(Target::kAlphaLower));
  CHECK_FALSE(is_maximized(Target::kBudget));
  CHECK_THROWS_AS(parse_target("speed"), std::invalid_argument);
}

TEST_CASE("problem validation") {
  CodesignProblem p = arm_problem();
  CHECK_NOTHROW(p.validate());
  CodesignProblem bad = p;
  bad.Y_bar(0, 0) = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.alpha_upper = bad.alpha_lower;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.gamma_s_cap.resize(2);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_NOTHROW(bad.validate(true));  // sensors unused by state feedback
  bad = p;
  bad.fixed_parameters = true;
  bad.fixed_alpha = p.alpha_lower;
  bad.fixed_gamma_a = p.gamma_a_cap;
  bad.fixed_gamma_s = p.gamma_s_cap;
  CHECK_THROWS_AS(extremize(bad, Target::kBudget), std::invalid_argument);
}

TEST_CASE("theorem 1 program layout") {
  const CodesignProblem p = arm_problem();
  const DesignPoint d = initial_design(p);
  const Theorem1Program prog = build_theorem1_lmis(p, convexify_update(p, d), Target::kBudget);
  const int n = p.system.state_count(), m = p.system.input_count(), l = p.system.measurement_count();
  const int np = p.system.parameter_count(), nq = 2 * n;
  CHECK(prog.problem.dof_count() == n * n + n * l + m * n + m + l + np + nq * (nq + 1) / 2 + 1);
  // Budget, two caps, box (two sides), two covariance blocks, main block.
  CHECK(prog.problem.constraints().size() == 8);
  const Eigen::FullPivLU<MatrixXd> lu(p.system.D_p.base());
  const int r = static_cast<int>(lu.rank());  // the disturbance is folded to its rank
  CHECK(constraint(prog.problem, "convexified_stability").expr.rows() == 3 * nq + r + m + l);
}

TEST_CASE("convexified LMI equals the nonconvex one at the linearization point") {
  const CodesignProblem p = arm_problem();
  const DesignPoint d = initial_design(p);
  const ConvexifyState g = convexify_update(p, d);
  const Theorem1Program prog = build_theorem1_lmis(p, g, Target::kBudget);
  const double z = target_value(p, d, Target::kBudget);
  const VectorXd x = pack(prog, d, 2.0 * z);
  const MatrixXd F = constraint(prog.problem, "convexified_stability").expr.evaluate(x);
  CHECK(max_eigenvalue(symmetrize(F)) == doctest::Approx(nonconvex_residual(p, d)).epsilon(1e-6));
  CHECK(nonconvex_residual(p, d) < 0.0);
  // The start satisfies every constraint of the subproblem (margins aside).
  for (const auto& c : prog.problem.constraints()) {
    INFO(c.label);
    CHECK(sdp::constraint_violation(c, x) - 0.5 * c.margin < 0.0);
  }
}

TEST_CASE("convexifying potential is PSD and vanishes at its own point") {
  const CodesignProblem p = arm_problem();
  const DesignPoint d = initial_design(p);
  const ConvexifyState g = convexify_update(p, d);
  const MatrixXd zero = convexifying_potential(p, d, g);
  CHECK(zero.cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, g.G.squaredNorm()));
  // Re-linearizing at the same point reproduces G.
  CHECK((convexify_update(p, d).G - g.G).cwiseAbs().maxCoeff() == 0.0);

  std::mt19937 rng(11);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 5; ++trial) {
    DesignPoint other = d;
    MatrixXd R = MatrixXd::NullaryExpr(d.controller.A_c.rows(), d.controller.A_c.cols(), [&] { return n01(rng); });
    other.controller.A_c += 0.1 * d.controller.A_c.norm() / R.norm() * R;
    const MatrixXd S = MatrixXd::NullaryExpr(d.Q.rows(), d.Q.cols(), [&] { return n01(rng); });
    other.Q = d.Q + 0.01 * d.Q.norm() / S.squaredNorm() * S * S.transpose();
    const MatrixXd pot = convexifying_potential(p, other, g);
    CHECK(min_eigenvalue(pot) > -1e-9 * std::max(1.0, pot.norm()));
    CHECK(pot.norm() > 0.0);
  }
}

TEST_CASE("first oscillator subproblems match a reference conic solver") {
  // Optimal budgets of the first convexified subproblem, solved from the
  // same data by CLARABEL through cvxpy.
  const CodesignProblem p = oscillator_problem();
  {
    const DesignPoint d = initial_design(p);
    const Theorem1Program prog = build_theorem1_lmis(p, convexify_update(p, d), Target::kBudget);
    const sdp::Solution sol = sdp::solve(prog.problem);
    CHECK(sol.status == sdp::Status::kOptimal);
    CHECK(sol.objective == doctest::Approx(45.692166139967874).epsilon(1e-6));
  }
  {
    const DesignPoint d = initial_design(p, true);
    const Theorem1Program prog = build_state_feedback_lmis(p, convexify_update(p, d, true), Target::kBudget);
    const sdp::Solution sol = sdp::solve(prog.problem);
    CHECK(sol.status == sdp::Status::kOptimal);
    CHECK(sol.objective == doctest::Approx(6.996054146258516).epsilon(1e-6));
  }
}

TEST_CASE("initial design is stable and meets loose bounds") {
  const CodesignProblem p = arm_problem();
  const DesignPoint d = initial_design(p);
  const VerificationReport rep = verify_solution(p, d, Target::kBudget, p.budget);
  CHECK(rep.passed);
  CHECK(rep.stable);
  CHECK(d.alpha.isApprox(0.5 * (p.alpha_lower + p.alpha_upper)));
  // The certificate bounds the true covariance.
  const CovarianceResult cov = lyapunov_covariance(design_closed_loop(p, d), design_noise(p, d));
  const MatrixXd X = d.Q.inverse();
  CHECK(min_eigenvalue(symmetrize(X - cov.X)) > 0.0);
}

TEST_CASE("extremize lowers the budget monotonically on the desk arm") {
  const CodesignProblem p = arm_problem();
  const CodesignSolution s = extremize(p, Target::kBudget);
  INFO(s.status << " " << s.message);
  CHECK(s.converged);
  CHECK(s.iterations <= 50);
  REQUIRE(s.history.size() >= 2);
  CHECK(non_increasing(s.history));
  CHECK(s.z < 0.1 * s.history.front());
  for (double r : s.residuals) CHECK(r < 0.0);
  CHECK(s.verification.passed);
  const double spent = price(s.design.gamma_a, s.design.gamma_s, s.design.alpha, p.prices);
  CHECK(spent <= s.z);
  CHECK(s.z == doctest::Approx(spent).epsilon(1e-3));

  // Schur blocks: the certificate bounds the covariances it claims to.
  const ClosedLoop cl = design_closed_loop(p, s.design);
  const MatrixXd X = s.design.Q.inverse();
  CHECK(max_eigenvalue(symmetrize(cl.C * X * cl.C.transpose() - p.Y_bar)) < 0.0);
  CHECK(max_eigenvalue(symmetrize(cl.M * X * cl.M.transpose() - p.U_bar)) < 0.0);

  // Ten times noisier actuators break the output bound.
  DesignPoint corrupted = s.design;
  corrupted.gamma_a *= 0.1;
  const VerificationReport bad = verify_solution(p, corrupted, Target::kBudget, s.z);
  CHECK_FALSE(bad.passed);
  CHECK(bad.output_excess > 1e-6);
}

TEST_CASE("budget target scales with the currency unit") {
  CodesignProblem p = oscillator_problem();
  const CodesignSolution a = extremize(p, Target::kBudget);
  p.budget *= 10.0;
  p.prices.actuator *= 10.0;
  p.prices.sensor *= 10.0;
  p.prices.structure *= 10.0;
  const CodesignSolution b = extremize(p, Target::kBudget);
  CHECK(a.verification.passed);
  CHECK(b.verification.passed);
  CHECK(b.z == doctest::Approx(10.0 * a.z).epsilon(1e-3));
}

TEST_CASE("output bound target with frozen structure") {
  CodesignProblem p = oscillator_problem();
  p.fixed_parameters = true;
  p.fixed_alpha = VectorXd::Constant(1, 2.0);
  p.fixed_gamma_a = VectorXd::Constant(1, 100.0);
  p.fixed_gamma_s = VectorXd::Constant(2, 100.0);
  const CodesignSolution s = extremize(p, Target::kOutputBound);
  CHECK(s.verification.passed);
  CHECK(non_increasing(s.history));
  CHECK(s.z < 1.0);
  CHECK(s.design.alpha(0) == 2.0);
  // z is attained: the output covariance touches z Y_bar.
  const double achieved = target_value(p, s.design, Target::kOutputBound);
  CHECK(achieved <= s.z * (1.0 + 1e-6));
}

TEST_CASE("box targets move alpha") {
  const CodesignProblem p = oscillator_problem();
  const CodesignSolution up = extremize(p, Target::kAlphaUpper);
  CHECK(up.verification.passed);
  CHECK(up.z < 1.0);
  CHECK(up.design.alpha(0) <= up.z * p.alpha_upper(0) * (1.0 + 1e-6));
  const CodesignSolution low = extremize(p, Target::kAlphaLower);
  CHECK(low.verification.passed);
  CHECK(low.z > 1.0);
  CHECK(low.history.back() >= low.history.front());
}

TEST_CASE("state feedback: open-loop stable scalar plant needs no control") {
  // x' = -alpha x + u + w, alpha in [1, 2], loose bounds.
  CodesignProblem p;
  DescriptorSystem& s = p.system;
  const MatrixXd one = MatrixXd::Ones(1, 1);
  s.E = AffineMatrixFamily(one).with_parameter_count(1);
  s.A = AffineMatrixFamily(MatrixXd::Zero(1, 1), {MatrixXd(-one)});
  s.D_p = AffineMatrixFamily(one).with_parameter_count(1);
  s.D_a = AffineMatrixFamily(one).with_parameter_count(1);
  s.C_y = AffineMatrixFamily(one).with_parameter_count(1);
  s.B = one;
  s.C_z = one;
  s.D_s = one;
  p.W_p = one;
  p.Y_bar = 10.0 * one;
  p.U_bar = 10.0 * one;
  p.budget = 100.0;
  p.gamma_a_cap = VectorXd::Constant(1, 10.0);
  p.alpha_lower = VectorXd::Constant(1, 1.0);
  p.alpha_upper = VectorXd::Constant(1, 2.0);
  p.prices.actuator = VectorXd::Ones(1);
  p.prices.structure = VectorXd::Ones(1);

  // K = 0 is feasible: the open loop meets the bounds anywhere in the box.
  DesignPoint d;
  d.alpha = VectorXd::Constant(1, 1.5);
  d.gamma_a = VectorXd::Constant(1, 5.0);
  d.K = MatrixXd::Zero(1, 1);
  const double x = (1.0 + 1.0 / 5.0) / 3.0;  // (W_p + W_a) / (2 alpha)
  d.Q = MatrixXd::Constant(1, 1, 1.0 / (1.1 * x));
  CHECK(verify_solution(p, d, Target::kBudget, p.budget, true).passed);
  CHECK(nonconvex_residual(p, d, true) < 0.0);

  const CodesignSolution sol = extremize_state_feedback(p, Target::kBudget);
  CHECK(sol.state_feedback);
  CHECK(sol.verification.passed);
  CHECK(non_increasing(sol.history));
  CHECK(sol.design.gamma_s.size() == 0);
}

TEST_CASE("state feedback on the two-state oscillator") {
  const CodesignProblem p = oscillator_problem();
  const Theorem1Program prog =
      build_state_feedback_lmis(p, convexify_update(p, initial_design(p, true), true), Target::kBudget);
  CHECK(prog.problem.dof_count() == 2 + 1 + 1 + 3 + 1);  // K, gamma_a, alpha, Q, z
  const CodesignSolution s = extremize_state_feedback(p, Target::kBudget);
  INFO(s.status << " " << s.message);
  CHECK(s.verification.passed);
  CHECK(s.verification.stable);
  CHECK(non_increasing(s.history));
  CHECK(s.design.K.rows() == 1);
  CHECK(s.design.K.cols() == 2);
  CHECK(s.design.alpha(0) >= p.alpha_lower(0));
  CHECK(s.design.alpha(0) <= p.alpha_upper(0));
}

TEST_CASE("infeasible bounds are reported") {
  CodesignProblem p = oscillator_problem();
  p.Y_bar *= 1e-9;
  p.U_bar *= 1e-9;
  CHECK_THROWS_AS(extremize(p, Target::kBudget), std::runtime_error);
}

}  // namespace
}  // namespace tcd
