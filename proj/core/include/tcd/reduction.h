#pragma once

#include <Eigen/Dense>

#include "tcd/constraint_set.h"
#include "tcd/linmodel.h"
#include "tcd/topology.h"

namespace tcd {

/// A = U [Sigma1 0] [V1 V2]'. Directions with singular values below
/// max(rows, cols) * eps * sigma_max are treated as null; `dropped` counts
/// the constraint rows lost that way.
struct ProjectionBasis {
  Eigen::MatrixXd U;       // N_c x rank
  Eigen::VectorXd sigma1;  // rank
  Eigen::MatrixXd V1;      // d*n x rank
  Eigen::MatrixXd V2;      // d*n x (d*n - rank)
  int rank = 0;
  int dropped = 0;
};

/// Throws std::invalid_argument if A is empty or zero.
ProjectionBasis svd_project(const Eigen::MatrixXd& A);
inline ProjectionBasis svd_project(const ConstraintSet& cs) { return svd_project(cs.A); }

/// A second-order model  M q'' + D q' + K q = P w + B gamma.
struct SecondOrderModel {
  Eigen::MatrixXd M, D, K, P, B;
};

/// Projects the class-1 model onto ker(A): M_k = V2' M V2, and likewise for
/// D and K; P and B are premultiplied by V2'. An empty constraint set
/// returns the model unchanged. Throws if |A n - d| > 1e-8.
SecondOrderModel reduce_classk(const Class1Model& m, const ConstraintSet& cs, const Eigen::VectorXd& positions);

/// Bar-stretch modes Phi1 (one column per bar) and their orthonormal
/// complement Phi2 (2d - 1 columns per bar, then identity columns for the
/// point-mass coordinates).
struct BarModeBasis {
  Eigen::MatrixXd Phi1;
  Eigen::MatrixXd Phi2;
};

BarModeBasis bar_mode_basis(const Topology& t, const Configuration& c);

/// Minimal coordinates eta with n = P_tot eta, P_tot = Phi2 V2phi, where
/// V2phi spans ker(A Phi2):
///   M_k eta'' + D_k eta' + K_k eta = P_k w + B_k gamma.
struct MinimalModel {
  Eigen::MatrixXd M, D, K;
  Eigen::MatrixXd P;  // n_min x d*n, disturbance map
  Eigen::MatrixXd B;  // n_min x sigma, force-density input map
  Eigen::MatrixXd P_tot;
  Eigen::MatrixXd Phi2;
  Eigen::MatrixXd V2phi;
  int constraint_rank = 0;  // rank(A Phi2)
  int size() const { return static_cast<int>(M.rows()); }
};

MinimalModel minimal_model(const Class1Model& m, const ConstraintSet& cs, const BarModeBasis& bm);

/// (2d - 1) beta + d * point masses - rank(A Phi2).
int minimal_mode_count(int dimension, int bars, int point_masses, int constraint_rank);

}  // namespace tcd
