#include <random>

#include "doctest.h"
#include "tcd/sdp.h"

using tcd::sdp::AffineExpr;
using tcd::sdp::Problem;
using tcd::sdp::Sense;
using tcd::sdp::Status;

TEST_CASE("declare counts dofs") {
  Problem p;
  CHECK(p.scalar("a").dof_count() == 1);
  CHECK(p.symmetric(3, "P").dof_count() == 6);
  CHECK(p.vector(7, "g").dof_count() == 7);
  CHECK(p.dof_count() == 14);
  CHECK_THROWS_AS(p.scalar("a"), std::invalid_argument);
}

TEST_CASE("non-symmetric constant block is rejected") {
  Problem p;
  auto x = p.scalar("x");
  Eigen::MatrixXd c(2, 2);
  c << 0, 1, 0, 0;
  AffineExpr e = AffineExpr(c) + AffineExpr::Identity(2) * 0.0;
  CHECK_THROWS_AS(p.add_lmi(e, Sense::kNegativeDefinite), std::invalid_argument);
  (void)x;
}

TEST_CASE("empty problem minimizing zero") {
  Problem p;
  auto sol = tcd::sdp::solve(p);
  CHECK(sol.status == Status::kOptimal);
  CHECK(sol.objective == 0.0);
}

TEST_CASE("scalar bound: x < 0 and x > -1, minimize x") {
  Problem p;
  auto x = p.scalar("x");
  p.add_lmi(p.expr(x), Sense::kNegativeDefinite, "x<0");
  p.add_lmi(p.expr(x) + 1.0, Sense::kPositiveDefinite, "x>-1");
  p.minimize(p.expr(x));
  auto sol = tcd::sdp::solve(p);
  REQUIRE(sol.status == Status::kOptimal);
  CHECK(sol.objective == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(sol.max_violation <= 0.0);
}

TEST_CASE("Lyapunov inequality feasible for random Hurwitz A") {
  std::mt19937 rng(7);
  std::normal_distribution<double> n01;
  const int n = 5;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = n01(rng);
  Eigen::EigenSolver<Eigen::MatrixXd> es(a);
  a -= (es.eigenvalues().real().maxCoeff() + 0.5) * Eigen::MatrixXd::Identity(n, n);

  Problem p;
  auto pv = p.symmetric(n, "P");
  AffineExpr pe = p.expr(pv);
  p.add_lmi(a.transpose() * pe + pe * a, Sense::kNegativeDefinite, "lyap");
  p.add_lmi(pe - AffineExpr::Identity(n), Sense::kPositiveSemidefinite, "P>=I");
  p.minimize(pe.trace());
  auto sol = tcd::sdp::solve(p);
  REQUIRE(sol.status == Status::kOptimal);
  Eigen::MatrixXd pm = sol.value(pv);
  Eigen::MatrixXd lhs = a.transpose() * pm + pm * a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lhs);
  CHECK(eig.eigenvalues().maxCoeff() < 0.0);
}

TEST_CASE("unstable scalar Lyapunov inequality is infeasible") {
  Problem p;
  auto pv = p.scalar("p");
  AffineExpr pe = p.expr(pv);
  p.add_lmi(2.0 * pe, Sense::kNegativeDefinite, "lyap");
  p.add_lmi(pe - 1.0, Sense::kPositiveSemidefinite, "p>=1");
  auto sol = tcd::sdp::solve(p);
  CHECK(sol.status == Status::kInfeasible);
}

TEST_CASE("scalar covariance SDP gives 1/(2a)") {
  // min x  s.t.  -2x + 1 < 0
  Problem p;
  auto x = p.scalar("x");
  AffineExpr xe = p.expr(x);
  p.add_lmi(-2.0 * xe + 1.0, Sense::kNegativeDefinite);
  p.add_lmi(xe, Sense::kPositiveDefinite);
  p.minimize(xe);
  auto sol = tcd::sdp::solve(p);
  REQUIRE(sol.status == Status::kOptimal);
  CHECK(std::abs(sol.objective - 0.5) < 1e-4);
}

TEST_CASE("matrix-valued problem matches closed form") {
  // max eigenvalue of a symmetric C: min t s.t. C - tI <= 0
  Eigen::MatrixXd c(3, 3);
  c << 2, 1, 0, 1, 3, 1, 0, 1, 4;
  Problem p;
  auto t = p.scalar("t");
  p.add_lmi(AffineExpr(c) - AffineExpr::ScalarTimes(p.expr(t), Eigen::MatrixXd::Identity(3, 3)), Sense::kNegativeSemidefinite);
  p.minimize(p.expr(t));
  auto sol = tcd::sdp::solve(p);
  REQUIRE(sol.status == Status::kOptimal);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
  CHECK(sol.objective == doctest::Approx(eig.eigenvalues().maxCoeff()).epsilon(1e-8));
}

TEST_CASE("determinism") {
  Problem p;
  auto pv = p.symmetric(2, "P");
  Eigen::MatrixXd a(2, 2);
  a << -1, 2, 0, -3;
  AffineExpr pe = p.expr(pv);
  p.add_lmi(a * pe + pe * a.transpose() + AffineExpr(Eigen::MatrixXd::Identity(2, 2)),
            Sense::kNegativeDefinite);
  p.minimize(pe.trace());
  auto s1 = tcd::sdp::solve(p);
  auto s2 = tcd::sdp::solve(p);
  CHECK(std::abs(s1.objective - s2.objective) <= 1e-9);
}
