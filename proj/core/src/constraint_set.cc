#include "tcd/constraint_set.h"

#include <stdexcept>
#include <string>

#include "tcd/linalg.h"

namespace tcd {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Columns of applied nodal force per unit axial compression of each bar:
// -b at the head, +b at the tail.
MatrixXd bar_axial_columns(const Topology& t, const VectorXd& positions) {
  const int d = t.dimension;
  MatrixXd out = MatrixXd::Zero(t.coordinate_count(), t.bar_count());
  for (int i = 0; i < t.bar_count(); ++i) {
    const auto& b = t.bars[i];
    const VectorXd bv = positions.segment(d * b[1], d) - positions.segment(d * b[0], d);
    out.block(d * b[1], i, d, 1) = -bv;
    out.block(d * b[0], i, d, 1) = bv;
  }
  return out;
}

}  // namespace

double ConstraintSet::residual(const VectorXd& positions) const {
  if (empty()) return 0.0;
  return (A * positions - d).cwiseAbs().maxCoeff();
}

ConstraintSet make_constraints(const Topology& t, const VectorXd& positions,
                               const std::vector<int>& fixed_user_nodes) {
  const int dim = t.dimension;
  const int rows = dim * static_cast<int>(t.joints.size() + fixed_user_nodes.size());
  ConstraintSet cs;
  cs.A = MatrixXd::Zero(rows, t.coordinate_count());
  cs.d = VectorXd::Zero(rows);
  int r = 0;
  for (const auto& j : t.joints) {
    for (int k = 0; k < dim; ++k, ++r) {
      cs.A(r, dim * j[0] + k) = 1.0;
      cs.A(r, dim * j[1] + k) = -1.0;
    }
  }
  for (int u : fixed_user_nodes) {
    if (u < 0 || u >= t.user_node_count()) {
      throw std::invalid_argument("make_constraints(): fixed node " + std::to_string(u) + " out of range");
    }
    const int v = t.primary_node[u];
    for (int k = 0; k < dim; ++k, ++r) {
      cs.A(r, dim * v + k) = 1.0;
      cs.d(r) = positions(dim * v + k);
    }
  }
  return cs;
}

StaticForces static_forces(const Topology& t, const Configuration& c, const ConstraintSet& cs) {
  const VectorXd g = equilibrium_residual(t, c);
  const MatrixXd axial = bar_axial_columns(t, c.positions);
  const int nc = cs.rows();
  MatrixXd lhs(t.coordinate_count(), nc + t.bar_count());
  if (nc > 0) lhs.leftCols(nc) = cs.A.transpose();
  lhs.rightCols(t.bar_count()) = -axial;
  StaticForces out;
  VectorXd sol = VectorXd::Zero(lhs.cols());
  if (lhs.cols() > 0) {
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(lhs);
    cod.setThreshold(1e-12);
    sol = cod.solve(-g);
  }
  out.multipliers = sol.head(nc);
  out.bar_compression = sol.tail(t.bar_count());
  out.nodal_force = g;
  if (nc > 0) out.nodal_force += cs.A.transpose() * out.multipliers;
  out.residual = (out.nodal_force - axial * out.bar_compression).norm();
  return out;
}

MatrixXd self_stress_basis(const Topology& t, const VectorXd& positions, const ConstraintSet& cs) {
  // [ -dF/dgamma, A', -axial ] [gamma; Omega; lambda] = 0
  MatrixXd string_cols(t.coordinate_count(), t.string_count());
  for (int i = 0; i < t.string_count(); ++i) {
    VectorXd e = VectorXd::Zero(t.string_count());
    e(i) = 1.0;
    string_cols.col(i) = -string_nodal_forces(t, positions, e);
  }
  const int nc = cs.rows();
  MatrixXd eq(t.coordinate_count(), t.string_count() + nc + t.bar_count());
  eq.leftCols(t.string_count()) = string_cols;
  if (nc > 0) eq.middleCols(t.string_count(), nc) = cs.A.transpose();
  eq.rightCols(t.bar_count()) = -bar_axial_columns(t, positions);
  const MatrixXd kernel = null_space(eq);
  // Keep the gamma part, orthonormalized.
  MatrixXd g = kernel.topRows(t.string_count());
  Eigen::JacobiSVD<MatrixXd> svd(g, Eigen::ComputeThinU);
  int rank = 0;
  const double tol = 1e-10 * (svd.singularValues().size() ? svd.singularValues()(0) : 0.0);
  for (int i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()(i) > tol) ++rank;
  }
  return svd.matrixU().leftCols(rank);
}

}  // namespace tcd
