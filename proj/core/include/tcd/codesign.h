#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tcd/sdp.h"
#include "tcd/statespace.h"

namespace tcd {

struct Prices {
  Eigen::VectorXd actuator;   // per unit precision, one per input
  Eigen::VectorXd sensor;     // per unit precision, one per measurement
  Eigen::VectorXd structure;  // per unit alpha
};

/// p_a' gamma_a + p_s' gamma_s + p_alpha' alpha. Empty price vectors count
/// as zero. Throws on negative inputs or size mismatch.
double price(const Eigen::VectorXd& gamma_a, const Eigen::VectorXd& gamma_s, const Eigen::VectorXd& alpha,
             const Prices& prices);

/// The scalar being extremized. Matrix and box targets scale the given
/// shape: Y_bar -> z Y_bar, U_bar -> z U_bar, alpha < z alpha_upper,
/// alpha > z alpha_lower. The budget target is the price bound itself.
enum class Target { kBudget, kOutputBound, kControlBound, kAlphaUpper, kAlphaLower };

const char* to_string(Target t);
/// Accepts budget, ybar, ubar, alpha_upper, alpha_lower.
Target parse_target(const std::string& name);
inline bool is_maximized(Target t) { return t == Target::kAlphaLower; }

struct CodesignProblem {
  DescriptorSystem system;
  Eigen::MatrixXd W_p;
  Eigen::MatrixXd Y_bar, U_bar;
  double budget = 0.0;
  Eigen::VectorXd gamma_a_cap, gamma_s_cap;
  Eigen::VectorXd alpha_lower, alpha_upper;
  Prices prices;
  /// When set, alpha and the precisions are constants rather than decision
  /// variables (box, caps and prices are then ignored).
  bool fixed_parameters = false;
  Eigen::VectorXd fixed_alpha, fixed_gamma_a, fixed_gamma_s;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate(bool state_feedback = false) const;
};

/// A candidate design: structure, precisions, controller and the inverse
/// covariance certificate Q (n_x + n_c square).
struct DesignPoint {
  Eigen::VectorXd alpha, gamma_a, gamma_s;
  Controller controller;
  Eigen::MatrixXd K;  // state feedback gain, u = -K x
  Eigen::MatrixXd Q;
};

struct ConvexifyState {
  Eigen::MatrixXd G;
  int iteration = 0;
};

/// Decision-variable handles of one convexified subproblem.
struct Theorem1Program {
  sdp::Problem problem;
  sdp::Variable A_c, B_c, C_c, K, gamma_a, gamma_s, alpha, Q, z, slack;
  bool state_feedback = false;
  bool has_alpha = false, has_precisions = false, has_slack = false;
};

/// Options shared by the builders.
struct BuildOptions {
  double relative_margin = sdp::Problem::kDefaultRelativeMargin;
  /// Phase one: the non-target performance and budget constraints are
  /// relaxed by (1 + t) and t is minimized; the target is left free.
  bool phase_one = false;
};

/// Theorem 1 LMIs for fixed G, full-order compensator (n_c = n_x).
Theorem1Program build_theorem1_lmis(const CodesignProblem& p, const ConvexifyState& g, Target target,
                                    const BuildOptions& options = {});

/// State-feedback variant: u = -K x, no sensors, A_cl = A(alpha) - B K.
Theorem1Program build_state_feedback_lmis(const CodesignProblem& p, const ConvexifyState& g, Target target,
                                          const BuildOptions& options = {});

/// G = (A_cl(alpha) - E_cl(alpha)) Q^-1 at the design point.
ConvexifyState convexify_update(const CodesignProblem& p, const DesignPoint& d, bool state_feedback = false,
                                int iteration = 0);

/// The closed loop of a design; for state feedback the controller block is
/// empty and M_cl = -K.
ClosedLoop design_closed_loop(const CodesignProblem& p, const DesignPoint& d, bool state_feedback = false);

/// blkdiag(W_p, diag(gamma_a)^-1, diag(gamma_s)^-1), without the sensor
/// block for state feedback.
Eigen::MatrixXd design_noise(const CodesignProblem& p, const DesignPoint& d, bool state_feedback = false);

/// Largest eigenvalue of the original nonconvex matrix F(delta) with
/// X = Q^-1; negative when the design satisfies the stability and noise
/// inequality it was built from.
double nonconvex_residual(const CodesignProblem& p, const DesignPoint& d, bool state_feedback = false);

/// Convexifying potential block (A_cl - E_cl - G Q) Q^-1 (...)' at d.
Eigen::MatrixXd convexifying_potential(const CodesignProblem& p, const DesignPoint& d, const ConvexifyState& g,
                                       bool state_feedback = false);

struct VerificationReport {
  bool passed = false;
  bool stable = false;
  double spectral_abscissa = 0.0;
  double price = 0.0;
  Eigen::MatrixXd Y, U;  // Lyapunov covariances
  /// lambda_max(Y - Y_bar) / ||Y_bar||, likewise for U; <= tolerance passes.
  double output_excess = 0.0, control_excess = 0.0;
  std::vector<std::string> failures;
};

/// Posterior check at the bounds implied by `target` and z: closed-loop
/// Lyapunov covariances against Y_bar and U_bar, price against the budget,
/// caps and the alpha box.
VerificationReport verify_solution(const CodesignProblem& p, const DesignPoint& d, Target target, double z,
                                   bool state_feedback = false, double tolerance = 1e-6);

struct CodesignOptions {
  int max_iterations = 50;
  /// Stop when |z_k - z_{k-1}| < relative_tolerance * |z_0|.
  double relative_tolerance = 1e-4;
  int max_phase_one_iterations = 30;
  double relative_margin = sdp::Problem::kDefaultRelativeMargin;
  /// Share of the initial output/control slack spent on making the starting
  /// certificate strictly feasible.
  double slack_share = 0.5;
  /// Initial precisions as a fraction of the caps.
  double cap_fraction = 0.999;
  sdp::SolverOptions solver;
};

struct CodesignSolution {
  DesignPoint design;
  Target target = Target::kBudget;
  double z = 0.0;
  std::vector<double> history;   // z after every accepted iterate, z_0 first
  /// nonconvex_residual of every accepted iterate, evaluated in the scaled
  /// coordinates the subproblems are solved in (the sign is invariant).
  std::vector<double> residuals;
  int iterations = 0;
  int phase_one_iterations = 0;
  bool converged = false;
  bool state_feedback = false;
  /// "stationary", "iteration_limit", "solver_failure" or "infeasible".
  std::string status;
  std::string message;
  VerificationReport verification;
};

/// Initial design: LQG (or LQR for state feedback) at the midpoint of the
/// alpha box with precisions just below the caps; Q^-1 is the closed-loop
/// covariance plus a multiple of an identity-driven Lyapunov solution, so
/// every inequality holds strictly.
DesignPoint initial_design(const CodesignProblem& p, bool state_feedback = false, const CodesignOptions& o = {});

/// Value of the target implied by a design (smallest feasible z).
double target_value(const CodesignProblem& p, const DesignPoint& d, Target target, bool state_feedback = false);

/// Convexifying extremum search. Throws std::runtime_error with diagnostics
/// if no point satisfying the non-target constraints is found.
CodesignSolution extremize(const CodesignProblem& p, Target target, const CodesignOptions& o = {});
CodesignSolution extremize_state_feedback(const CodesignProblem& p, Target target, const CodesignOptions& o = {});

}  // namespace tcd
