#include "tcd/bounds.h"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "tcd/linalg.h"

namespace tcd {

using Eigen::MatrixXd;
using sdp::AffineExpr;
using sdp::Sense;

namespace {

void check_loop(const ClosedLoop& cl) {
  const auto n = cl.A.rows();
  if (cl.A.cols() != n || cl.E.rows() != n || cl.E.cols() != n || cl.B.rows() != n || cl.C.cols() != n) {
    throw std::invalid_argument("bounds: closed-loop matrices do not conform");
  }
}

sdp::Problem make_problem(const BoundOptions& o) {
  sdp::Problem p;
  p.set_relative_margin(o.relative_margin);
  return p;
}

BoundResult finish(BoundKind kind, const sdp::Solution& sol, double value, MatrixXd certificate) {
  BoundResult r;
  r.kind = kind;
  r.status = sol.status;
  r.iterations = sol.iterations;
  r.message = sol.message;
  r.value = value;
  r.certificate = std::move(certificate);
  if (!r.ok()) r.value = std::numeric_limits<double>::infinity();
  return r;
}

double sqrt_nonneg(double v) { return std::sqrt(std::max(0.0, v)); }

BoundResult raw_covariance(const ClosedLoop& cl, const MatrixXd& W, const BoundOptions& options) {
  check_loop(cl);
  if (W.rows() != cl.B.cols() || W.cols() != cl.B.cols()) {
    throw std::invalid_argument("bound_covariance: W must match the columns of B");
  }
  const int n = static_cast<int>(cl.A.rows());
  sdp::Problem p = make_problem(options);
  const auto Xv = p.symmetric(n, "X");
  const AffineExpr X = p.expr(Xv);
  const AffineExpr lyap = cl.A * X * MatrixXd(cl.E.transpose()) + cl.E * X * MatrixXd(cl.A.transpose()) +
                          AffineExpr(MatrixXd(cl.B * W * cl.B.transpose()));
  p.add_lmi(lyap, Sense::kNegativeDefinite, "lyapunov");
  p.add_lmi(X, Sense::kPositiveSemidefinite, "X");
  p.minimize(X.inner(cl.C.transpose() * cl.C));
  const sdp::Solution sol = sdp::solve(p, options.solver);
  const MatrixXd Xs = symmetrize(sol.value(Xv));
  return finish(BoundKind::kCovariance, sol, (cl.C * Xs * cl.C.transpose()).trace(), Xs);
}

BoundResult raw_energy_to_peak(const ClosedLoop& cl, const MatrixXd&, const BoundOptions& options) {
  check_loop(cl);
  const int n = static_cast<int>(cl.A.rows());
  const int q = static_cast<int>(cl.C.rows());
  sdp::Problem p = make_problem(options);
  const auto Qv = p.symmetric(n, "Q");
  const auto tv = p.scalar("t");
  const AffineExpr Q = p.expr(Qv);
  const AffineExpr t = p.expr(tv);
  p.add_lmi(cl.A * Q * MatrixXd(cl.E.transpose()) + cl.E * Q * MatrixXd(cl.A.transpose()) +
                AffineExpr(MatrixXd(cl.B * cl.B.transpose())),
            Sense::kNegativeDefinite, "lyapunov");
  p.add_lmi(Q, Sense::kPositiveSemidefinite, "Q");
  p.add_lmi(cl.C * Q * MatrixXd(cl.C.transpose()) - AffineExpr::ScalarTimes(t, MatrixXd::Identity(q, q)),
            Sense::kNegativeSemidefinite, "peak");
  p.minimize(t);
  const sdp::Solution sol = sdp::solve(p, options.solver);
  const MatrixXd Qs = symmetrize(sol.value(Qv));
  const double peak = q > 0 ? max_eigenvalue(symmetrize(cl.C * Qs * cl.C.transpose())) : 0.0;
  return finish(BoundKind::kEnergyToPeak, sol, sqrt_nonneg(peak), Qs);
}

BoundResult raw_impulse_to_energy(const ClosedLoop& cl, const MatrixXd&, const BoundOptions& options) {
  check_loop(cl);
  const int n = static_cast<int>(cl.A.rows());
  const int m = static_cast<int>(cl.B.cols());
  sdp::Problem p = make_problem(options);
  const auto Pv = p.symmetric(n, "P");
  const auto tv = p.scalar("t");
  const AffineExpr P = p.expr(Pv);
  const AffineExpr t = p.expr(tv);
  // P_explicit = E' P E.
  const MatrixXd Et = cl.E.transpose(), At = cl.A.transpose();
  p.add_lmi(Et * P * cl.A + At * P * cl.E + AffineExpr(MatrixXd(cl.C.transpose() * cl.C)),
            Sense::kNegativeDefinite, "lyapunov");
  p.add_lmi(P, Sense::kPositiveSemidefinite, "P");
  p.add_lmi(MatrixXd(cl.B.transpose()) * P * cl.B - AffineExpr::ScalarTimes(t, MatrixXd::Identity(m, m)),
            Sense::kNegativeSemidefinite, "energy");
  p.minimize(t);
  const sdp::Solution sol = sdp::solve(p, options.solver);
  const MatrixXd Ps = symmetrize(sol.value(Pv));
  const double e = m > 0 ? max_eigenvalue(symmetrize(cl.B.transpose() * Ps * cl.B)) : 0.0;
  return finish(BoundKind::kImpulseToEnergy, sol, sqrt_nonneg(e), symmetrize(Et * Ps * cl.E));
}

BoundResult raw_energy_to_energy(const ClosedLoop& cl, const MatrixXd&, const BoundOptions& options) {
  check_loop(cl);
  const int n = static_cast<int>(cl.A.rows());
  const int m = static_cast<int>(cl.B.cols());
  sdp::Problem p = make_problem(options);
  const auto Pv = p.symmetric(n, "P");
  const auto sv = p.scalar("eps2");
  const AffineExpr P = p.expr(Pv);
  const AffineExpr s = p.expr(sv);
  const MatrixXd Et = cl.E.transpose(), At = cl.A.transpose(), Bt = cl.B.transpose();
  const AffineExpr corner = Et * P * cl.B;
  p.add_lmi(AffineExpr::Block({{Et * P * cl.A + At * P * cl.E + AffineExpr(MatrixXd(cl.C.transpose() * cl.C)), corner},
                               {corner.transpose(), -AffineExpr::ScalarTimes(s, MatrixXd::Identity(m, m))}}),
            Sense::kNegativeDefinite, "bounded_real");
  p.add_lmi(P, Sense::kPositiveSemidefinite, "P");
  p.minimize(s);
  const sdp::Solution sol = sdp::solve(p, options.solver);
  const MatrixXd Ps = symmetrize(sol.value(Pv));
  return finish(BoundKind::kEnergyToEnergy, sol, sqrt_nonneg(sol.scalar(sv)), symmetrize(Et * Ps * cl.E));
}

// The LMIs are solved on an equivalent explicit loop: time is rescaled by
// omega so the spectrum is centred on unit magnitude, and the state is
// balanced so the controllability and observability Gramians are equal and
// diagonal. Inputs are scaled by omega^-1/2 (omega^-1 for the H-infinity
// gain), which leaves every bound value unchanged; certificates are mapped
// back to the explicit coordinates of the original loop. B and C are
// finally divided by kappa = sigma_1^1/2 (sigma_1 the largest Hankel
// singular value) so the gains to be computed are of order one; values are
// multiplied back.
struct Balanced {
  ClosedLoop cl;
  MatrixXd T, T_inv;
  double omega = 1.0;
  double kappa = 1.0;
};

MatrixXd gramian(const MatrixXd& A, const MatrixXd& drive) {
  const double scale = std::max(drive.cwiseAbs().maxCoeff(), 1e-300);
  const MatrixXd R = symmetrize(drive) + 1e-8 * scale * MatrixXd::Identity(A.rows(), A.cols());
  return symmetrize(solve_lyapunov(A, R));
}

Balanced balance(const ClosedLoop& cl, const MatrixXd& W, BoundKind kind) {
  Balanced b;
  Eigen::PartialPivLU<MatrixXd> lu(cl.E);
  MatrixXd A = lu.solve(cl.A), B = lu.solve(cl.B);
  const Eigen::VectorXd mag = A.eigenvalues().cwiseAbs();
  if (mag.size() && mag.minCoeff() > 0.0) b.omega = std::sqrt(mag.maxCoeff() * mag.minCoeff());
  A /= b.omega;
  B /= kind == BoundKind::kEnergyToEnergy ? b.omega : std::sqrt(b.omega);
  const MatrixXd& C = cl.C;
  const MatrixXd drive = kind == BoundKind::kCovariance ? MatrixXd(B * W * B.transpose()) : MatrixXd(B * B.transpose());
  const MatrixXd Lc = gramian(A, drive).llt().matrixL();
  const MatrixXd Lo = gramian(A.transpose(), C.transpose() * C).llt().matrixL();
  Eigen::JacobiSVD<MatrixXd> svd(Lo.transpose() * Lc, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd root = svd.singularValues().cwiseSqrt();
  b.T = Lc * svd.matrixV() * root.cwiseInverse().asDiagonal();
  b.T_inv = root.cwiseInverse().asDiagonal() * svd.matrixU().transpose() * Lo.transpose();
  if (svd.singularValues().size() && svd.singularValues()(0) > 0.0) b.kappa = std::sqrt(svd.singularValues()(0));
  b.cl.E = MatrixXd::Identity(A.rows(), A.cols());
  b.cl.A = b.T_inv * A * b.T;
  b.cl.B = b.T_inv * B / b.kappa;
  b.cl.C = C * b.T / b.kappa;
  b.cl.M = cl.M.cols() == A.cols() ? MatrixXd(cl.M * b.T) : cl.M;
  return b;
}

using RawSolver = BoundResult (*)(const ClosedLoop&, const MatrixXd&, const BoundOptions&);

BoundResult solve_balanced(BoundKind kind, const ClosedLoop& cl, const MatrixXd& W, const BoundOptions& o,
                           RawSolver raw) {
  check_loop(cl);
  if (!o.balance || !stability_check(cl).stable) return raw(cl, W, o);
  const Balanced b = balance(cl, W, kind);
  BoundResult r = raw(b.cl, W, o);
  const double k2 = b.kappa * b.kappa;
  r.value *= kind == BoundKind::kCovariance ? k2 * k2 : k2;
  if (kind == BoundKind::kCovariance || kind == BoundKind::kEnergyToPeak) {
    r.certificate = symmetrize(k2 * b.T * r.certificate * b.T.transpose());
  } else {
    r.certificate = symmetrize(k2 * b.T_inv.transpose() * r.certificate * b.T_inv / b.omega);
  }
  return r;
}


}  // namespace

const char* to_string(BoundKind k) {
  switch (k) {
    case BoundKind::kCovariance: return "covariance";
    case BoundKind::kEnergyToPeak: return "energy_to_peak";
    case BoundKind::kImpulseToEnergy: return "impulse_to_energy";
    case BoundKind::kEnergyToEnergy: return "energy_to_energy";
  }
  return "?";
}

BoundKind parse_bound_kind(const std::string& name) {
  if (name == "covariance" || name == "cov") return BoundKind::kCovariance;
  if (name == "energy_to_peak" || name == "ep") return BoundKind::kEnergyToPeak;
  if (name == "impulse_to_energy" || name == "ie") return BoundKind::kImpulseToEnergy;
  if (name == "energy_to_energy" || name == "ee") return BoundKind::kEnergyToEnergy;
  throw std::invalid_argument("unknown bound kind '" + name + "'");
}

BoundResult bound_covariance(const ClosedLoop& cl, const MatrixXd& W, const BoundOptions& options) {
  check_loop(cl);
  if (W.rows() != cl.B.cols() || W.cols() != cl.B.cols()) {
    throw std::invalid_argument("bound_covariance: W must match the columns of B");
  }
  return solve_balanced(BoundKind::kCovariance, cl, W, options, raw_covariance);
}

BoundResult bound_energy_to_peak(const ClosedLoop& cl, const BoundOptions& options) {
  return solve_balanced(BoundKind::kEnergyToPeak, cl, MatrixXd(), options, raw_energy_to_peak);
}

BoundResult bound_impulse_to_energy(const ClosedLoop& cl, const BoundOptions& options) {
  return solve_balanced(BoundKind::kImpulseToEnergy, cl, MatrixXd(), options, raw_impulse_to_energy);
}

BoundResult bound_energy_to_energy(const ClosedLoop& cl, const BoundOptions& options) {
  return solve_balanced(BoundKind::kEnergyToEnergy, cl, MatrixXd(), options, raw_energy_to_energy);
}

BoundResult compute_bound(BoundKind kind, const ClosedLoop& cl, const MatrixXd& W, const BoundOptions& options) {
  switch (kind) {
    case BoundKind::kCovariance: return bound_covariance(cl, W, options);
    case BoundKind::kEnergyToPeak: return bound_energy_to_peak(cl, options);
    case BoundKind::kImpulseToEnergy: return bound_impulse_to_energy(cl, options);
    case BoundKind::kEnergyToEnergy: return bound_energy_to_energy(cl, options);
  }
  throw std::invalid_argument("compute_bound: unknown kind");
}

double certificate_residual(const ClosedLoop& cl, const BoundResult& r, const MatrixXd& W) {
  check_loop(cl);
  Eigen::PartialPivLU<MatrixXd> lu(cl.E);
  const MatrixXd A = lu.solve(cl.A), B = lu.solve(cl.B);
  const MatrixXd& Z = r.certificate;
  switch (r.kind) {
    case BoundKind::kCovariance:
      return max_eigenvalue(symmetrize(A * Z + Z * A.transpose() + B * W * B.transpose()));
    case BoundKind::kEnergyToPeak:
      return max_eigenvalue(symmetrize(A * Z + Z * A.transpose() + B * B.transpose()));
    case BoundKind::kImpulseToEnergy:
      return max_eigenvalue(symmetrize(Z * A + A.transpose() * Z + cl.C.transpose() * cl.C));
    case BoundKind::kEnergyToEnergy: {
      const auto n = A.rows(), m = B.cols();
      MatrixXd H(n + m, n + m);
      H << Z * A + A.transpose() * Z + cl.C.transpose() * cl.C, Z * B, B.transpose() * Z,
          -r.value * r.value * MatrixXd::Identity(m, m);
      return max_eigenvalue(symmetrize(H));
    }
  }
  return 0.0;
}

}  // namespace tcd
