#include "tcd/reduction.h"

#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/SVD>

#include "tcd/linalg.h"

namespace tcd {

using Eigen::MatrixXd;
using Eigen::VectorXd;

ProjectionBasis svd_project(const MatrixXd& A) {
  if (A.rows() == 0 || A.cols() == 0 || A.cwiseAbs().maxCoeff() == 0.0) {
    throw std::invalid_argument("svd_project(): constraint matrix is empty or zero");
  }
  Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const VectorXd& s = svd.singularValues();
  const double tol = std::max(A.rows(), A.cols()) * std::numeric_limits<double>::epsilon() * s(0);
  int rank = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (s(i) > tol) ++rank;
  }
  ProjectionBasis out;
  out.rank = rank;
  out.dropped = static_cast<int>(A.rows()) - rank;
  out.U = svd.matrixU().leftCols(rank);
  out.sigma1 = s.head(rank);
  out.V1 = svd.matrixV().leftCols(rank);
  out.V2 = svd.matrixV().rightCols(A.cols() - rank);
  return out;
}

SecondOrderModel reduce_classk(const Class1Model& m, const ConstraintSet& cs, const VectorXd& positions) {
  SecondOrderModel out{m.M, m.D, m.K, m.P, m.B};
  if (cs.empty()) return out;
  if (cs.A.cols() != m.M.rows()) throw std::invalid_argument("reduce_classk(): constraint width mismatch");
  const double res = cs.residual(positions);
  if (res > 1e-8) {
    throw std::invalid_argument("reduce_classk(): equilibrium violates the constraints (|An - d| = " +
                                std::to_string(res) + ")");
  }
  const MatrixXd V2 = svd_project(cs).V2;
  out.M = V2.transpose() * m.M * V2;
  out.M = symmetrize(out.M);
  out.D = V2.transpose() * m.D * V2;
  out.K = V2.transpose() * m.K * V2;
  out.P = V2.transpose() * m.P;
  out.B = V2.transpose() * m.B;
  return out;
}

BarModeBasis bar_mode_basis(const Topology& t, const Configuration& c) {
  const int d = t.dimension;
  const int beta = t.bar_count();
  const int dn = t.coordinate_count();
  const VectorXd b = c.bar_vectors(t);
  BarModeBasis out;
  out.Phi1 = MatrixXd::Zero(dn, beta);
  out.Phi2 = MatrixXd::Zero(dn, (2 * d - 1) * beta + d * t.point_mass_count());
  for (int i = 0; i < beta; ++i) {
    const VectorXd bi = b.segment(d * i, d);
    if (!(bi.norm() > 0.0)) throw std::invalid_argument("bar_mode_basis(): zero-length bar");
    MatrixXd row(1, 2 * d);
    row << -0.5 * bi.transpose(), 0.5 * bi.transpose();
    row /= row.norm();
    MatrixXd null = null_space(row);
    normalize_column_signs(&null);
    const int tail = t.bars[i][0], head = t.bars[i][1];
    for (int k = 0; k < d; ++k) {
      out.Phi1(d * tail + k, i) = row(0, k);
      out.Phi1(d * head + k, i) = row(0, d + k);
      for (int j = 0; j < 2 * d - 1; ++j) {
        out.Phi2(d * tail + k, (2 * d - 1) * i + j) = null(k, j);
        out.Phi2(d * head + k, (2 * d - 1) * i + j) = null(d + k, j);
      }
    }
  }
  const int off = (2 * d - 1) * beta;
  for (int i = 0; i < t.point_mass_count(); ++i) {
    const int v = t.point_mass_nodes[i];
    for (int k = 0; k < d; ++k) out.Phi2(d * v + k, off + d * i + k) = 1.0;
  }
  return out;
}

MinimalModel minimal_model(const Class1Model& m, const ConstraintSet& cs, const BarModeBasis& bm) {
  const int dn = static_cast<int>(m.M.rows());
  if (bm.Phi2.rows() != dn) throw std::invalid_argument("minimal_model(): basis size mismatch");
  MinimalModel out;
  out.Phi2 = bm.Phi2;
  const int k2 = static_cast<int>(bm.Phi2.cols());
  if (cs.empty()) {
    out.V2phi = MatrixXd::Identity(k2, k2);
  } else {
    if (cs.A.cols() != dn) throw std::invalid_argument("minimal_model(): constraint width mismatch");
    const MatrixXd A2 = cs.A * bm.Phi2;
    if (A2.cwiseAbs().maxCoeff() == 0.0) {
      out.V2phi = MatrixXd::Identity(k2, k2);
    } else {
      ProjectionBasis pb = svd_project(A2);
      out.V2phi = pb.V2;
      out.constraint_rank = pb.rank;
      normalize_column_signs(&out.V2phi);
    }
  }
  out.P_tot = bm.Phi2 * out.V2phi;
  const MatrixXd& Pt = out.P_tot;
  out.M = symmetrize(Pt.transpose() * m.M * Pt);
  out.D = Pt.transpose() * m.D * Pt;
  out.K = Pt.transpose() * m.K * Pt;
  out.P = Pt.transpose() * m.P;
  out.B = Pt.transpose() * m.B;
  return out;
}

int minimal_mode_count(int dimension, int bars, int point_masses, int constraint_rank) {
  return (2 * dimension - 1) * bars + dimension * point_masses - constraint_rank;
}

}  // namespace tcd
